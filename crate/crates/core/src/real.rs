//! Scalar backends.
//!
//! Everything numeric in the crate is generic over [`Real`]. Two backends ship:
//! `f64` and [`Extended`], a quad-precision type with roughly 34 significant
//! decimal digits.

use std::fmt::Debug;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

use crate::error::{Error, Result};

/// IEEE binary128 scalar (113-bit significand, about 34 significant digits).
pub type Extended = f128::f128;

pub trait Real: Float + FromPrimitive + NumAssign + Debug + Send + Sync + 'static {
    /// Short backend name, used in reports.
    const NAME: &'static str;
    /// Significant decimal digits emitted by [`Real::to_decimal`] by default.
    const DIGITS: usize;

    fn pi() -> Self;

    /// Unit roundoff of the backend, as an `f64`.
    fn unit_roundoff() -> f64;

    /// Lossy conversion used for reporting residuals.
    fn f(self) -> f64;

    /// Scientific notation with `digits` significant digits.
    fn to_decimal(self, digits: usize) -> String;

    fn parse_decimal(s: &str) -> Result<Self>;
}

impl Real for f64 {
    const NAME: &'static str = "double";
    const DIGITS: usize = 17;

    fn pi() -> Self {
        std::f64::consts::PI
    }

    fn unit_roundoff() -> f64 {
        f64::EPSILON / 2.0
    }

    fn f(self) -> f64 {
        self
    }

    fn to_decimal(self, digits: usize) -> String {
        if !self.is_finite() {
            return format!("{self}");
        }
        format!("{:.*e}", digits.max(1) - 1, self)
    }

    fn parse_decimal(s: &str) -> Result<Self> {
        f64::from_str(s.trim()).map_err(|e| Error::Parse(format!("{s:?}: {e}")))
    }
}

impl Real for Extended {
    const NAME: &'static str = "extended";
    const DIGITS: usize = 34;

    fn pi() -> Self {
        f128::f128::PI
    }

    fn unit_roundoff() -> f64 {
        2f64.powi(-113)
    }

    fn f(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn to_decimal(self, digits: usize) -> String {
        if !self.is_finite() {
            return format!("{}", self.f());
        }
        let raw = self.to_string_fmt(format!("%.{}Qe", digits.max(1) - 1)).expect("quad formatting");
        normalize_exponent(&raw)
    }

    fn parse_decimal(s: &str) -> Result<Self> {
        let t = s.trim();
        // the C parser accepts prefixes silently; vet the grammar first
        if f64::from_str(t).is_err() || t.contains(['i', 'I', 'n', 'N']) {
            return Err(Error::Parse(format!("not a decimal number: {s:?}")));
        }
        f128::f128::parse(t).map_err(|e| Error::Parse(format!("{s:?}: {e}")))
    }
}

/// `"1.5e+03"` becomes `"1.5e3"`, matching Rust's own exponent style.
fn normalize_exponent(raw: &str) -> String {
    match raw.split_once('e') {
        Some((mant, exp)) => {
            let e: i32 = exp.parse().expect("printf exponent");
            format!("{mant}e{e}")
        }
        None => raw.to_string(),
    }
}

/// Convert an `f64` literal into the backend.
#[inline]
pub fn re<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("finite f64 converts")
}

/// Convert an integer into the backend (exact below 2^53).
#[inline]
pub fn ri<T: Real>(v: i64) -> T {
    T::from_i64(v).expect("integer converts")
}

/// The rational `p/q`, divided in the backend's precision.
#[inline]
pub fn ratio<T: Real>(p: i64, q: i64) -> T {
    ri::<T>(p) / ri::<T>(q)
}

/// Scalar backend selector, mirrored by the `MVGEG_PRECISION` variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    Double,
    Extended,
}

impl Precision {
    pub const ENV: &'static str = "MVGEG_PRECISION";

    /// Reads `MVGEG_PRECISION`; unset means double.
    pub fn from_env() -> Result<Self> {
        match std::env::var(Self::ENV) {
            Ok(v) => v.parse(),
            Err(std::env::VarError::NotPresent) => Ok(Precision::Double),
            Err(e) => Err(Error::Parse(format!("{}: {e}", Self::ENV))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Precision::Double => "double",
            Precision::Extended => "extended",
        }
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "double" | "f64" => Ok(Precision::Double),
            "extended" => Ok(Precision::Extended),
            other => Err(Error::Parse(format!("unknown precision {other:?} (expected \"double\" or \"extended\")"))),
        }
    }
}
