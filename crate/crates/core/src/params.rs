use std::fmt;

use crate::error::{Error, Result};
use crate::real::{ratio, ri, Real};

/// The pair `(2ℓ, ν)` that fixes the weight. The size is `d = 2ℓ+1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightParams<T> {
    pub two_ell: usize,
    pub nu: T,
}

impl<T: Real> WeightParams<T> {
    /// Validated constructor: `2ℓ ≥ 1` and `ν > 0`.
    pub fn new(two_ell: usize, nu: T) -> Result<Self> {
        if two_ell == 0 {
            return Err(Error::InvalidParams(
                "ℓ must be at least 1/2 (ℓ = 0 is only available in scalar-sanity mode)".into(),
            ));
        }
        Self::scalar_sanity(two_ell, nu)
    }

    /// Like [`WeightParams::new`] but also accepts `ℓ = 0`, where the weight is
    /// `ν(1-x²)^(ν-1/2)`.
    pub fn scalar_sanity(two_ell: usize, nu: T) -> Result<Self> {
        check_nu(nu)?;
        Ok(WeightParams { two_ell, nu })
    }

    pub fn dim(&self) -> usize {
        self.two_ell + 1
    }

    pub fn ell(&self) -> T {
        ratio(self.two_ell as i64, 2)
    }

    pub fn two_ell_t(&self) -> T {
        ri(self.two_ell as i64)
    }

    /// The same ℓ with `ν` replaced by `ν + k`.
    pub fn shifted(&self, k: usize) -> Self {
        WeightParams { two_ell: self.two_ell, nu: self.nu + ri(k as i64) }
    }

    pub fn with_nu(&self, nu: T) -> Self {
        WeightParams { two_ell: self.two_ell, nu }
    }
}

/// Rejects `ν ≤ 0` (and non-finite values).
pub fn check_nu<T: Real>(nu: T) -> Result<()> {
    if !nu.is_finite() {
        return Err(Error::InvalidParams(format!("ν must be finite, got {nu:?}")));
    }
    if nu <= T::zero() {
        return Err(Error::InvalidParams(format!(
            "ν = {} is not positive; the weight is strictly positive definite on (-1,1) only for ν > 0",
            nu.f()
        )));
    }
    Ok(())
}

/// Parses ℓ given as `"p/2"`, `"p"`, or a decimal within 1e-9 of a
/// half-integer, returning `2ℓ`.
pub fn parse_ell(s: &str) -> Result<usize> {
    let t = s.trim();
    let bad = |why: &str| Error::Parse(format!("ℓ = {t:?}: {why}"));
    if let Some((num, den)) = t.split_once('/') {
        let p: i64 = num.trim().parse().map_err(|_| bad("numerator is not an integer"))?;
        let q: i64 = den.trim().parse().map_err(|_| bad("denominator is not an integer"))?;
        return match q {
            1 if p >= 0 => Ok(2 * p as usize),
            2 if p >= 0 => Ok(p as usize),
            1 | 2 => Err(bad("must be nonnegative")),
            _ => Err(bad("denominator must be 1 or 2")),
        };
    }
    if let Ok(p) = t.parse::<i64>() {
        return if p >= 0 { Ok(2 * p as usize) } else { Err(bad("must be nonnegative")) };
    }
    let v: f64 = t.parse().map_err(|_| bad("not a number"))?;
    if !v.is_finite() || v < 0.0 {
        return Err(bad("must be a nonnegative half-integer"));
    }
    let twice = (2.0 * v).round();
    if (2.0 * v - twice).abs() > 2e-9 {
        return Err(bad("not a half-integer"));
    }
    Ok(twice as usize)
}

/// Formats `2ℓ` back as `"p"` or `"p/2"`.
pub fn format_ell(two_ell: usize) -> String {
    if two_ell.is_multiple_of(2) {
        format!("{}", two_ell / 2)
    } else {
        format!("{two_ell}/2")
    }
}

impl<T: Real> fmt::Display for WeightParams<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ℓ={} ν={}", format_ell(self.two_ell), self.nu.f())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ell_forms() {
        assert_eq!(parse_ell("3/2").unwrap(), 3);
        assert_eq!(parse_ell("1.5").unwrap(), 3);
        assert_eq!(parse_ell("2").unwrap(), 4);
        assert_eq!(parse_ell("4/2").unwrap(), 4);
        assert_eq!(parse_ell(" 0.5 ").unwrap(), 1);
        assert_eq!(parse_ell("1.0000000001").unwrap(), 2);
        assert!(parse_ell("1.3").is_err());
        assert!(parse_ell("3/4").is_err());
        assert!(parse_ell("-1/2").is_err());
        assert!(parse_ell("abc").is_err());
    }

    #[test]
    fn format_roundtrip() {
        for k in 0..9 {
            assert_eq!(parse_ell(&format_ell(k)).unwrap(), k);
        }
    }

    #[test]
    fn rejects_nonpositive_nu() {
        let e = WeightParams::new(2, -1.0).unwrap_err();
        assert!(e.to_string().contains("positive definite"), "{e}");
        assert!(WeightParams::new(2, 0.0).is_err());
        assert!(WeightParams::new(2, f64::NAN).is_err());
        assert!(WeightParams::new(0, 1.0).is_err());
        assert!(WeightParams::scalar_sanity(0, 1.0).is_ok());
    }

    #[test]
    fn shift_keeps_size() {
        let p = WeightParams::new(3, 0.5).unwrap().shifted(2);
        assert_eq!(p.dim(), 4);
        assert_eq!(p.nu, 2.5);
        assert_eq!(p.ell(), 1.5);
    }
}
