//! Dense matrix polynomials in one variable and weighted matrix functions
//! `(1-x²)^s Q(x)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::real::{re, ri, Real};

/// Which variable a polynomial is written in: `x ∈ [-1,1]` or `u ∈ [0,1]`
/// with `x = 1-2u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    U,
}

impl Var {
    pub fn other(self) -> Var {
        match self {
            Var::X => Var::U,
            Var::U => Var::X,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Var::X => "x",
            Var::U => "u",
        })
    }
}

/// Relative size below which a trailing coefficient counts as zero.
pub fn trim_tolerance<T: Real>() -> T {
    if T::unit_roundoff() > 1e-20 {
        re(1e-13)
    } else {
        re(1e-28)
    }
}

/// Scalar polynomial helpers on plain coefficient vectors (lowest power first).
pub mod scalar {
    use crate::real::Real;

    pub fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
        let n = a.len().max(b.len());
        (0..n).map(|k| a.get(k).copied().unwrap_or_else(T::zero) + b.get(k).copied().unwrap_or_else(T::zero)).collect()
    }

    pub fn mul<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
        if a.is_empty() || b.is_empty() {
            return vec![];
        }
        let mut out = vec![T::zero(); a.len() + b.len() - 1];
        for (i, &ai) in a.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                out[i + j] += ai * bj;
            }
        }
        out
    }

    pub fn scale<T: Real>(a: &[T], s: T) -> Vec<T> {
        a.iter().map(|&v| v * s).collect()
    }

    pub fn eval<T: Real>(a: &[T], x: T) -> T {
        a.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
    }

    pub fn diff<T: Real>(a: &[T]) -> Vec<T> {
        a.iter().enumerate().skip(1).map(|(k, &c)| c * T::from_usize(k).unwrap()).collect()
    }

    /// `(1-x²)^k` in the power basis.
    pub fn one_minus_sq_pow<T: Real>(k: usize) -> Vec<T> {
        let base = [T::one(), T::zero(), -T::one()];
        (0..k).fold(vec![T::one()], |acc, _| mul(&acc, &base))
    }
}

/// Square matrix polynomial `Σ_k coeffs[k] · var^k`, trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPolynomial<T> {
    dim: usize,
    var: Var,
    coeffs: Vec<Mat<T>>,
}

impl<T: Real> MatrixPolynomial<T> {
    pub fn new(dim: usize, var: Var, coeffs: Vec<Mat<T>>) -> Result<Self> {
        for c in &coeffs {
            if c.rows() != dim || c.cols() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: c.rows().max(c.cols()) });
            }
        }
        let mut p = MatrixPolynomial { dim, var, coeffs };
        p.trim();
        Ok(p)
    }

    fn from_parts(dim: usize, var: Var, coeffs: Vec<Mat<T>>) -> Self {
        let mut p = MatrixPolynomial { dim, var, coeffs };
        p.trim();
        p
    }

    pub fn zero(dim: usize, var: Var) -> Self {
        MatrixPolynomial { dim, var, coeffs: vec![] }
    }

    pub fn constant(m: Mat<T>, var: Var) -> Self {
        assert!(m.is_square(), "matrix polynomial coefficients are square");
        Self::from_parts(m.rows(), var, vec![m])
    }

    pub fn identity(dim: usize, var: Var) -> Self {
        Self::constant(Mat::identity(dim), var)
    }

    /// `m · var^k`.
    pub fn monomial(m: Mat<T>, k: usize, var: Var) -> Self {
        let d = m.rows();
        let mut coeffs = vec![Mat::zeros(d, d); k];
        coeffs.push(m);
        Self::from_parts(d, var, coeffs)
    }

    /// `p(var) · Id` for a scalar polynomial `p`.
    pub fn scalar(dim: usize, var: Var, p: &[T]) -> Self {
        Self::from_parts(dim, var, p.iter().map(|&c| Mat::identity(dim).scale(c)).collect())
    }

    /// Builds a polynomial from scalar-polynomial entries.
    pub fn from_entries(dim: usize, var: Var, mut f: impl FnMut(usize, usize) -> Vec<T>) -> Self {
        let entries: Vec<Vec<Vec<T>>> = (0..dim).map(|i| (0..dim).map(|j| f(i, j)).collect()).collect();
        let len = entries.iter().flatten().map(Vec::len).max().unwrap_or(0);
        let coeffs = (0..len)
            .map(|k| Mat::from_fn(dim, dim, |i, j| entries[i][j].get(k).copied().unwrap_or_else(T::zero)))
            .collect();
        Self::from_parts(dim, var, coeffs)
    }

    fn trim(&mut self) {
        let scale = self.max_abs_coeff().max(T::one());
        let tol = trim_tolerance::<T>() * scale;
        while let Some(last) = self.coeffs.last() {
            if last.max_abs() <= tol {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn var(&self) -> Var {
        self.var
    }

    pub fn coeffs(&self) -> &[Mat<T>] {
        &self.coeffs
    }

    /// Coefficient of `var^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> Mat<T> {
        self.coeffs.get(k).cloned().unwrap_or_else(|| Mat::zeros(self.dim, self.dim))
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.max_abs()))
    }

    /// Scalar polynomial in entry `(i, j)`, untrimmed.
    pub fn entry(&self, i: usize, j: usize) -> Vec<T> {
        self.coeffs.iter().map(|c| c[(i, j)]).collect()
    }

    /// Degree of entry `(i, j)` after trimming at the polynomial's tolerance.
    pub fn entry_degree(&self, i: usize, j: usize) -> Option<usize> {
        let tol = trim_tolerance::<T>() * self.max_abs_coeff().max(T::one());
        self.entry(i, j).iter().rposition(|v| v.abs() > tol)
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.dim != o.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: o.dim });
        }
        if self.var != o.var {
            return Err(Error::VariableMismatch { left: self.var, right: o.var });
        }
        Ok(())
    }

    pub fn try_add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let n = self.coeffs.len().max(o.coeffs.len());
        Ok(Self::from_parts(self.dim, self.var, (0..n).map(|k| &self.coeff(k) + &o.coeff(k)).collect()))
    }

    /// Largest coefficientwise `|self - o|`, without trimming the difference.
    pub fn max_abs_diff(&self, o: &Self) -> Result<T> {
        self.check(o)?;
        let n = self.coeffs.len().max(o.coeffs.len());
        Ok((0..n).fold(T::zero(), |m, k| m.max((&self.coeff(k) - &o.coeff(k)).max_abs())))
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let n = self.coeffs.len().max(o.coeffs.len());
        Ok(Self::from_parts(self.dim, self.var, (0..n).map(|k| &self.coeff(k) - &o.coeff(k)).collect()))
    }

    /// Cauchy product `self · o` (matrix order preserved).
    pub fn try_mul(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        if self.is_zero() || o.is_zero() {
            return Ok(Self::zero(self.dim, self.var));
        }
        let mut out = vec![Mat::zeros(self.dim, self.dim); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                let ab = a * b;
                out[i + j].axpy(T::one(), &ab);
            }
        }
        Ok(Self::from_parts(self.dim, self.var, out))
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_parts(self.dim, self.var, self.coeffs.iter().map(|c| c.scale(s)).collect())
    }

    /// `m · self`.
    pub fn mul_left(&self, m: &Mat<T>) -> Self {
        Self::from_parts(self.dim, self.var, self.coeffs.iter().map(|c| m * c).collect())
    }

    /// `self · m`.
    pub fn mul_right(&self, m: &Mat<T>) -> Self {
        Self::from_parts(self.dim, self.var, self.coeffs.iter().map(|c| c * m).collect())
    }

    /// Multiplication by a scalar polynomial in the same variable.
    pub fn mul_scalar_poly(&self, p: &[T]) -> Self {
        if self.is_zero() || p.is_empty() {
            return Self::zero(self.dim, self.var);
        }
        let mut out = vec![Mat::zeros(self.dim, self.dim); self.coeffs.len() + p.len() - 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            for (j, &s) in p.iter().enumerate() {
                out[i + j].axpy(s, c);
            }
        }
        Self::from_parts(self.dim, self.var, out)
    }

    /// Multiplication by `var`.
    pub fn shift_up(&self) -> Self {
        self.mul_scalar_poly(&[T::zero(), T::one()])
    }

    /// Horner evaluation.
    pub fn eval(&self, t: T) -> Mat<T> {
        let mut acc = Mat::zeros(self.dim, self.dim);
        for c in self.coeffs.iter().rev() {
            acc = acc.scale(t);
            acc.axpy(T::one(), c);
        }
        acc
    }

    pub fn diff(&self) -> Self {
        Self::from_parts(
            self.dim,
            self.var,
            self.coeffs.iter().enumerate().skip(1).map(|(k, c)| c.scale(ri(k as i64))).collect(),
        )
    }

    /// `k`-fold derivative.
    pub fn diff_n(&self, k: usize) -> Self {
        (0..k).fold(self.clone(), |p, _| p.diff())
    }

    /// Re-expands in the other variable: `x = 1-2u` or `u = (1-x)/2`.
    pub fn change_var(&self) -> Self {
        let (a, b) = match self.var {
            Var::X => (T::one(), -ri::<T>(2)),
            Var::U => (re(0.5), re(-0.5)),
        };
        // Horner in the polynomial ring: acc <- acc·(a + b·t) + c_k
        let mut acc: Vec<Mat<T>> = vec![];
        for c in self.coeffs.iter().rev() {
            let mut next = vec![Mat::zeros(self.dim, self.dim); acc.len() + 1];
            for (k, m) in acc.iter().enumerate() {
                next[k].axpy(a, m);
                next[k + 1].axpy(b, m);
            }
            next[0].axpy(T::one(), c);
            acc = next;
        }
        Self::from_parts(self.dim, self.var.other(), acc)
    }

    pub fn transpose(&self) -> Self {
        Self::from_parts(self.dim, self.var, self.coeffs.iter().map(Mat::transpose).collect())
    }

    /// Rebinds the variable tag without re-expanding.
    pub fn relabel(&self, var: Var) -> Self {
        MatrixPolynomial { dim: self.dim, var, coeffs: self.coeffs.clone() }
    }

    /// Principal sub-block of size `len` starting at `start`.
    pub fn principal_block(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.dim);
        Self::from_parts(
            len,
            self.var,
            self.coeffs.iter().map(|c| Mat::from_fn(len, len, |i, j| c[(start + i, start + j)])).collect(),
        )
    }

    /// Polynomial inverse of a unipotent lower-triangular `L`. With
    /// `N = Id - L` nilpotent, `L⁻¹ = Σ_{k<d} N^k`.
    pub fn invert_unipotent_lower(&self) -> Result<Self> {
        let tol = trim_tolerance::<T>() * self.max_abs_coeff().max(T::one());
        for (k, c) in self.coeffs.iter().enumerate() {
            for i in 0..self.dim {
                let want = if k == 0 { T::one() } else { T::zero() };
                if (c[(i, i)] - want).abs() > tol {
                    return Err(Error::NotUnipotent);
                }
                for j in i + 1..self.dim {
                    if c[(i, j)].abs() > tol {
                        return Err(Error::NotUnipotent);
                    }
                }
            }
        }
        let id = Self::identity(self.dim, self.var);
        let n = id.try_sub(self)?;
        let mut inv = id.clone();
        let mut pow = id;
        for _ in 1..self.dim {
            pow = pow.try_mul(&n)?;
            inv = inv.try_add(&pow)?;
        }
        let coeffs = inv
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                Mat::from_fn(self.dim, self.dim, |i, j| match (i.cmp(&j), k) {
                    (std::cmp::Ordering::Less, _) => T::zero(),
                    (std::cmp::Ordering::Equal, 0) => T::one(),
                    (std::cmp::Ordering::Equal, _) => T::zero(),
                    _ => c[(i, j)],
                })
            })
            .collect();
        Ok(Self::from_parts(self.dim, self.var, coeffs))
    }

    pub fn convert<U: Real>(&self) -> MatrixPolynomial<U> {
        MatrixPolynomial { dim: self.dim, var: self.var, coeffs: self.coeffs.iter().map(Mat::convert).collect() }
    }

    /// JSON object `{"dim", "var", "coeffs"}` with `digits` significant digits.
    pub fn to_json(&self, digits: usize) -> Value {
        let coeffs: Vec<Value> = self
            .coeffs
            .iter()
            .map(|c| {
                Value::Array(
                    c.to_rows().iter().map(|r| Value::Array(r.iter().map(|&v| number(v, digits)).collect())).collect(),
                )
            })
            .collect();
        json!({ "dim": self.dim, "var": self.var.to_string(), "coeffs": coeffs })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("matrix polynomial JSON: {why}"));
        let dim = v.get("dim").and_then(Value::as_u64).ok_or_else(|| bad("missing dim"))? as usize;
        let var = match v.get("var").and_then(Value::as_str) {
            Some("x") => Var::X,
            Some("u") => Var::U,
            _ => return Err(bad("var must be \"x\" or \"u\"")),
        };
        let raw = v.get("coeffs").and_then(Value::as_array).ok_or_else(|| bad("missing coeffs"))?;
        let mut coeffs = Vec::with_capacity(raw.len());
        for c in raw {
            let rows = c.as_array().ok_or_else(|| bad("coefficient is not an array"))?;
            let mut parsed = Vec::with_capacity(rows.len());
            for r in rows {
                let r = r.as_array().ok_or_else(|| bad("row is not an array"))?;
                parsed.push(r.iter().map(parse_number).collect::<Result<Vec<T>>>()?);
            }
            coeffs.push(Mat::from_rows(&parsed)?);
        }
        Self::new(dim, var, coeffs)
    }

    /// CSV rows `power,row,col,value`.
    pub fn to_csv(&self, digits: usize) -> String {
        let mut out = String::from("power,row,col,value\n");
        for (k, c) in self.coeffs.iter().enumerate() {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    out.push_str(&format!("{k},{i},{j},{}\n", c[(i, j)].to_decimal(digits)));
                }
            }
        }
        out
    }
}

/// A JSON number carrying exactly the decimal text of `v`.
pub fn number<T: Real>(v: T, digits: usize) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    Value::Number(v.to_decimal(digits).parse().expect("decimal text is a JSON number"))
}

pub fn parse_number<T: Real>(v: &Value) -> Result<T> {
    match v {
        Value::Number(n) => T::parse_decimal(&n.to_string()),
        other => Err(Error::Parse(format!("expected a number, got {other}"))),
    }
}

impl<T: Real> Add for &MatrixPolynomial<T> {
    type Output = MatrixPolynomial<T>;
    fn add(self, o: &MatrixPolynomial<T>) -> MatrixPolynomial<T> {
        self.try_add(o).expect("matrix polynomial mismatch")
    }
}

impl<T: Real> Sub for &MatrixPolynomial<T> {
    type Output = MatrixPolynomial<T>;
    fn sub(self, o: &MatrixPolynomial<T>) -> MatrixPolynomial<T> {
        self.try_sub(o).expect("matrix polynomial mismatch")
    }
}

impl<T: Real> Mul for &MatrixPolynomial<T> {
    type Output = MatrixPolynomial<T>;
    fn mul(self, o: &MatrixPolynomial<T>) -> MatrixPolynomial<T> {
        self.try_mul(o).expect("matrix polynomial mismatch")
    }
}

impl<T: Real> Neg for &MatrixPolynomial<T> {
    type Output = MatrixPolynomial<T>;
    fn neg(self) -> MatrixPolynomial<T> {
        self.scale(-T::one())
    }
}

/// `(1-x²)^s · poly(x)` on `(-1,1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedMatrixFunction<T> {
    pub exponent: T,
    pub poly: MatrixPolynomial<T>,
}

impl<T: Real> WeightedMatrixFunction<T> {
    pub fn new(exponent: T, poly: MatrixPolynomial<T>) -> Result<Self> {
        if poly.var() != Var::X {
            return Err(Error::VariableMismatch { left: Var::X, right: poly.var() });
        }
        Ok(WeightedMatrixFunction { exponent, poly })
    }

    /// `d/dx[(1-x²)^s Q] = (1-x²)^(s-1) ((1-x²)Q' - 2sxQ)`.
    pub fn diff(&self) -> Self {
        let s = self.exponent;
        let a = self.poly.diff().mul_scalar_poly(&scalar::one_minus_sq_pow(1));
        let b = self.poly.mul_scalar_poly(&[T::zero(), -(s + s)]);
        WeightedMatrixFunction { exponent: s - T::one(), poly: &a + &b }
    }

    pub fn diff_n(&self, k: usize) -> Self {
        (0..k).fold(self.clone(), |f, _| f.diff())
    }

    pub fn eval(&self, x: T) -> Mat<T> {
        self.poly.eval(x).scale((T::one() - x * x).powf(self.exponent))
    }

    pub fn mul_right(&self, p: &MatrixPolynomial<T>) -> Result<Self> {
        Ok(WeightedMatrixFunction { exponent: self.exponent, poly: self.poly.try_mul(p)? })
    }

    pub fn mul_left(&self, p: &MatrixPolynomial<T>) -> Result<Self> {
        Ok(WeightedMatrixFunction { exponent: self.exponent, poly: p.try_mul(&self.poly)? })
    }

    pub fn scale(&self, c: T) -> Self {
        WeightedMatrixFunction { exponent: self.exponent, poly: self.poly.scale(c) }
    }

    /// Rewrites with exponent `s - k`, multiplying the polynomial by `(1-x²)^k`.
    pub fn lower_exponent(&self, k: usize) -> Self {
        WeightedMatrixFunction {
            exponent: self.exponent - ri(k as i64),
            poly: self.poly.mul_scalar_poly(&scalar::one_minus_sq_pow(k)),
        }
    }

    /// Difference, aligning exponents that differ by an integer.
    pub fn try_sub(&self, o: &Self) -> Result<Self> {
        let gap = self.exponent - o.exponent;
        let k = gap.round();
        if (gap - k).abs() > re(1e-12) {
            return Err(Error::Domain(format!(
                "exponents {} and {} differ by a non-integer",
                self.exponent.f(),
                o.exponent.f()
            )));
        }
        let k = k.to_i64().unwrap();
        let (a, b) = match k.cmp(&0) {
            std::cmp::Ordering::Greater => (self.lower_exponent(k as usize), o.clone()),
            std::cmp::Ordering::Less => (self.clone(), o.lower_exponent((-k) as usize)),
            std::cmp::Ordering::Equal => (self.clone(), o.clone()),
        };
        Ok(WeightedMatrixFunction { exponent: b.exponent, poly: a.poly.try_sub(&b.poly)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::Extended;
    use num_traits::Float;
    use proptest::prelude::*;

    fn mp(coeffs: &[Vec<Vec<f64>>]) -> MatrixPolynomial<f64> {
        let d = coeffs[0].len();
        MatrixPolynomial::new(d, Var::X, coeffs.iter().map(|c| Mat::from_rows(c).unwrap()).collect()).unwrap()
    }

    fn arb_poly(d: usize, deg: usize) -> impl Strategy<Value = MatrixPolynomial<f64>> {
        proptest::collection::vec(-1.0f64..1.0, d * d * (deg + 1)).prop_map(move |v| {
            let coeffs = (0..=deg).map(|k| Mat::from_fn(d, d, |i, j| v[k * d * d + i * d + j])).collect();
            MatrixPolynomial::new(d, Var::X, coeffs).unwrap()
        })
    }

    #[test]
    fn identity_is_unit() {
        let p = mp(&[vec![vec![1.0, 2.0], vec![0.0, 1.0]], vec![vec![3.0, 0.0], vec![1.0, -1.0]]]);
        let id = MatrixPolynomial::identity(2, Var::X);
        assert_eq!(&id * &p, p);
        assert_eq!(&p * &id, p);
        let x = MatrixPolynomial::<f64>::scalar(2, Var::X, &[0.0, 1.0]);
        assert_eq!(&x * &x, MatrixPolynomial::scalar(2, Var::X, &[0.0, 0.0, 1.0]));
    }

    #[test]
    fn trimming_and_degree() {
        let z = MatrixPolynomial::<f64>::new(2, Var::X, vec![Mat::zeros(2, 2); 3]).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.degree(), None);
        let c = MatrixPolynomial::constant(Mat::identity(2).scale(3.0), Var::X);
        assert!(c.diff().is_zero());
        let p = MatrixPolynomial::monomial(Mat::identity(2), 2, Var::X);
        assert_eq!(p.diff(), MatrixPolynomial::monomial(Mat::identity(2).scale(2.0), 1, Var::X));
    }

    #[test]
    fn variable_mismatch_is_an_error() {
        let a = MatrixPolynomial::<f64>::identity(2, Var::X);
        let b = MatrixPolynomial::<f64>::identity(2, Var::U);
        assert!(matches!(a.try_mul(&b), Err(Error::VariableMismatch { .. })));
        assert!(matches!(a.try_add(&MatrixPolynomial::identity(3, Var::X)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn change_var_of_x_is_one_minus_two_u() {
        let x = MatrixPolynomial::<f64>::scalar(2, Var::X, &[0.0, 1.0]);
        let u = x.change_var();
        assert_eq!(u.var(), Var::U);
        assert_eq!(u, MatrixPolynomial::scalar(2, Var::U, &[1.0, -2.0]));
        let c = MatrixPolynomial::constant(Mat::identity(2).scale(5.0), Var::X);
        assert_eq!(c.change_var().coeffs(), c.coeffs());
    }

    #[test]
    fn nilpotent_inverse() {
        let mut e = Mat::zeros(2, 2);
        e[(1, 0)] = 1.0;
        let l = &MatrixPolynomial::identity(2, Var::X) + &MatrixPolynomial::monomial(e.clone(), 1, Var::X);
        let inv = l.invert_unipotent_lower().unwrap();
        let want = &MatrixPolynomial::identity(2, Var::X) - &MatrixPolynomial::monomial(e, 1, Var::X);
        assert_eq!(inv, want);
        let bad = MatrixPolynomial::scalar(2, Var::X, &[1.0, 1.0]);
        assert_eq!(bad.invert_unipotent_lower().unwrap_err(), Error::NotUnipotent);
    }

    #[test]
    fn weighted_diff_bookkeeping() {
        let id = MatrixPolynomial::<f64>::identity(2, Var::X);
        let f = WeightedMatrixFunction::new(2.5, id.clone()).unwrap();
        let g = f.diff();
        assert_eq!(g.exponent, 1.5);
        assert_eq!(g.poly, MatrixPolynomial::scalar(2, Var::X, &[0.0, -5.0]));
        // s = 0 collapses to the plain derivative
        let q = MatrixPolynomial::scalar(2, Var::X, &[1.0, 2.0, 3.0]);
        let h = WeightedMatrixFunction::new(0.0, q.clone()).unwrap().diff();
        assert_eq!(h.exponent, -1.0);
        for &x in &[-0.7, 0.1, 0.5] {
            assert!((&h.eval(x) - &q.diff().eval(x)).max_abs() < 1e-14);
        }
        let nu = 1.3;
        let n = 4;
        let r = WeightedMatrixFunction::new(nu + n as f64 - 0.5, id).unwrap().diff_n(n);
        assert!((r.exponent - (nu - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let p = mp(&[
            vec![vec![0.1, -1.0 / 3.0], vec![2.0f64.sqrt(), 1e-300]],
            vec![vec![std::f64::consts::PI, 0.0], vec![-7.25, 6.02e23]],
        ]);
        let text = serde_json::to_string(&p.to_json(17)).unwrap();
        let back: MatrixPolynomial<f64> = MatrixPolynomial::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        for (a, b) in p.coeffs().iter().zip(back.coeffs()) {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert!(text.contains("\"var\":\"x\""));
    }

    #[test]
    fn extended_json_keeps_digits() {
        let third = crate::real::ratio::<Extended>(1, 3);
        let p = MatrixPolynomial::scalar(1, Var::U, &[third]);
        let text = serde_json::to_string(&p.to_json(Extended::DIGITS)).unwrap();
        assert!(text.contains("3.33333333333333333333333333333333"), "{text}");
        let back: MatrixPolynomial<Extended> =
            MatrixPolynomial::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert!((back.coeff(0)[(0, 0)] - third).abs().f() < 1e-33);
    }

    proptest! {
        #[test]
        fn product_evaluates_pointwise(a in arb_poly(3, 4), b in arb_poly(3, 4), x in -1.0f64..1.0) {
            let ab = &a * &b;
            let lhs = ab.eval(x);
            let rhs = &a.eval(x) * &b.eval(x);
            prop_assert!((&lhs - &rhs).max_abs() < 1e-12);
        }

        #[test]
        fn ring_axioms(a in arb_poly(2, 3), b in arb_poly(2, 3), c in arb_poly(2, 3)) {
            let assoc = &(&(&a * &b) * &c) - &(&a * &(&b * &c));
            prop_assert!(assoc.max_abs_coeff() < 1e-12);
            let dist = &(&a * &(&b + &c)) - &(&(&a * &b) + &(&a * &c));
            prop_assert!(dist.max_abs_coeff() < 1e-12);
        }

        #[test]
        fn horner_matches_powers(a in arb_poly(3, 5), x in -1.5f64..1.5) {
            let mut naive = Mat::zeros(3, 3);
            for (k, c) in a.coeffs().iter().enumerate() {
                naive.axpy(x.powi(k as i32), c);
            }
            prop_assert!((&naive - &a.eval(x)).max_abs() < 1e-12);
        }

        #[test]
        fn derivative_matches_finite_difference(a in arb_poly(2, 4), x in -0.9f64..0.9) {
            let h = 1e-6;
            let fd = (&a.eval(x + h) - &a.eval(x - h)).scale(0.5 / h);
            prop_assert!((&fd - &a.diff().eval(x)).max_abs() < 1e-6);
        }

        #[test]
        fn change_var_roundtrip(a in arb_poly(3, 6), u in 0.0f64..1.0) {
            let b = a.change_var();
            prop_assert!((&b.eval(u) - &a.eval(1.0 - 2.0 * u)).max_abs() < 1e-12);
            let back = b.change_var();
            prop_assert!((&back - &a).max_abs_coeff() < 1e-13);
        }

        #[test]
        fn unipotent_inverse_is_exact(v in proptest::collection::vec(-1.0f64..1.0, 40)) {
            let d = 4;
            let coeffs: Vec<Mat<f64>> = (0..3).map(|k| Mat::from_fn(d, d, |i, j| {
                if i == j { if k == 0 { 1.0 } else { 0.0 } }
                else if i > j { v[(k * 16 + i * d + j) % 40] } else { 0.0 }
            })).collect();
            let l = MatrixPolynomial::new(d, Var::X, coeffs).unwrap();
            let inv = l.invert_unipotent_lower().unwrap();
            let prod = &l * &inv;
            prop_assert!((&prod - &MatrixPolynomial::identity(d, Var::X)).max_abs_coeff() < 1e-12);
            for (k, c) in inv.coeffs().iter().enumerate() {
                for i in 0..d {
                    prop_assert_eq!(c[(i, i)], if k == 0 { 1.0 } else { 0.0 });
                    for j in i + 1..d {
                        prop_assert_eq!(c[(i, j)], 0.0);
                    }
                }
            }
        }

        #[test]
        fn weighted_diff_matches_finite_difference(a in arb_poly(2, 3), s in 0.2f64..3.0, x in -0.9f64..0.9) {
            let f = WeightedMatrixFunction::new(s, a).unwrap();
            let h = 1e-6;
            let fd = (&f.eval(x + h) - &f.eval(x - h)).scale(0.5 / h);
            prop_assert!((&fd - &f.diff().eval(x)).max_abs() < 1e-6);
        }
    }
}
