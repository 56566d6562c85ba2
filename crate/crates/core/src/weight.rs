//! The weight `W^(ν)(x) = (1-x²)^(ν-1/2) W_pol(x)`, its LDU factorization and
//! its symmetries.

use std::sync::Arc;

use crate::cache;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::matpoly::{scalar, MatrixPolynomial, Var, WeightedMatrixFunction};
use crate::params::WeightParams;
use crate::quadrature::gauss_rule;
use crate::real::{ratio, re, ri, Real};
use crate::special::{
    factorial, gegenbauer, gegenbauer_coeffs, gegenbauer_norm, half_one_minus_x_to_x, hyp2f1_poly, pochhammer,
};

pub(crate) fn params_key<T: Real>(p: &WeightParams<T>) -> String {
    format!("{}|{}", p.two_ell, p.nu.to_decimal(T::DIGITS + 2))
}

/// Expansion coefficient `α_t(m,n)` of `W_pol[m,n]` on `C^(ν)_{m+n-2t}`,
/// for `m ≤ n ≤ 2ℓ` and `t ≤ m`. Vanishes (exactly) for `t < n+m-2ℓ`.
pub fn alpha_coefficient<T: Real>(params: &WeightParams<T>, m: usize, n: usize, t: usize) -> Result<T> {
    let l2 = params.two_ell;
    if m > n || n > l2 || t > m {
        return Err(Error::Index(format!("α_t(m,n) needs t ≤ m ≤ n ≤ 2ℓ; got t={t} m={m} n={n} 2ℓ={l2}")));
    }
    let nu = params.nu;
    let r = m + n - 2 * t;
    let f = factorial::<T>;
    let sign = if m.is_multiple_of(2) { T::one() } else { -T::one() };
    let a = f(n) * f(m) * f(r) / (f(t) * pochhammer(nu + nu, r) * pochhammer(nu, n + m - t));
    let b = pochhammer(nu, n - t) * pochhammer(nu, m - t) / (f(n - t) * f(m - t));
    let c = (ri::<T>(r as i64) + nu) / (ri::<T>((n + m - t) as i64) + nu);
    let two_ell = params.two_ell_t();
    let d = f(l2 - m) * pochhammer(ri::<T>(n as i64) - two_ell, m - t) * pochhammer(-two_ell - nu, t) * (two_ell + nu)
        / f(l2);
    Ok(sign * a * b * c * d)
}

/// Polynomial part `W_pol^(ν)`, assembled in the power basis and cached.
pub fn weight_pol<T: Real>(params: &WeightParams<T>) -> Result<Arc<MatrixPolynomial<T>>> {
    let p = *params;
    cache::get_or_build(params_key(params), move || build_weight_pol(&p))
}

fn build_weight_pol<T: Real>(params: &WeightParams<T>) -> Result<MatrixPolynomial<T>> {
    let d = params.dim();
    let mut entries = vec![vec![Vec::new(); d]; d];
    for m in 0..d {
        for n in m..d {
            let mut acc = vec![];
            for t in (m + n).saturating_sub(params.two_ell)..=m {
                let a = alpha_coefficient(params, m, n, t)?;
                let c = gegenbauer_coeffs(m + n - 2 * t, params.nu)?;
                acc = scalar::add(&acc, &scalar::scale(&c, a));
            }
            entries[n][m] = acc.clone();
            entries[m][n] = acc;
        }
    }
    Ok(MatrixPolynomial::from_entries(d, Var::X, |i, j| entries[i][j].clone()))
}

/// `W^(ν)` as a weighted matrix function with exponent `ν - 1/2`.
pub fn weight_function<T: Real>(params: &WeightParams<T>) -> Result<WeightedMatrixFunction<T>> {
    WeightedMatrixFunction::new(params.nu - ratio(1, 2), (*weight_pol(params)?).clone())
}

/// Full weight `W^(ν)(x)` for `|x| < 1`.
pub fn weight_at<T: Real>(params: &WeightParams<T>, x: T) -> Result<Mat<T>> {
    Ok(weight_function(params)?.eval(x))
}

/// Factors of `W_pol = L · diag(t_k (1-x²)^k) · Lᵗ`.
#[derive(Clone, Debug)]
pub struct LduFactors<T> {
    pub l: MatrixPolynomial<T>,
    pub tdiag: Vec<T>,
}

impl<T: Real> LduFactors<T> {
    /// `L · diag(t_k (1-x²)^k) · Lᵗ`.
    pub fn reconstruct(&self) -> MatrixPolynomial<T> {
        let d = self.tdiag.len();
        let t = MatrixPolynomial::from_entries(d, Var::X, |i, j| {
            if i == j {
                scalar::scale(&scalar::one_minus_sq_pow(i), self.tdiag[i])
            } else {
                vec![]
            }
        });
        &(&self.l * &t) * &self.l.transpose()
    }
}

/// `t_k^(ν)`.
pub fn t_coefficient<T: Real>(params: &WeightParams<T>, k: usize) -> T {
    let nu = params.nu;
    let two_ell = params.two_ell_t();
    factorial::<T>(k) * pochhammer(nu, k) / pochhammer(nu + ratio(1, 2), k)
        * pochhammer(nu + nu + two_ell, k)
        * (two_ell + nu)
        / (pochhammer(two_ell - ri(k as i64) + T::one(), k) * pochhammer(nu + nu + ri(k as i64) - T::one(), k))
}

/// `L` from its ₂F₁ entries and the diagonal `t_k`.
pub fn ldu_factors<T: Real>(params: &WeightParams<T>) -> Result<LduFactors<T>> {
    let d = params.dim();
    let nu = params.nu;
    let mut entries = vec![vec![Vec::new(); d]; d];
    for (m, row) in entries.iter_mut().enumerate() {
        for (k, e) in row.iter_mut().enumerate().take(m + 1) {
            let mt: T = ri(m as i64);
            let kt: T = ri(k as i64);
            let t = hyp2f1_poly(m - k, mt + kt + nu + nu, ratio::<T>(1, 2) + kt + nu)?;
            let pre = factorial::<T>(m) / (factorial::<T>(m - k) * factorial::<T>(k));
            *e = scalar::scale(&half_one_minus_x_to_x(&t), pre);
        }
    }
    let l = MatrixPolynomial::from_entries(d, Var::X, |i, j| entries[i][j].clone());
    Ok(LduFactors { l, tdiag: (0..d).map(|k| t_coefficient(params, k)).collect() })
}

/// `L⁻¹` from its closed form `k!/(n!(2ν+k+n-1)_{k-n}) C^{(1-ν-k)}_{k-n}(x)`.
/// Fails where the generic Gegenbauer form degenerates.
pub fn l_inverse_closed_form<T: Real>(params: &WeightParams<T>) -> Result<MatrixPolynomial<T>> {
    let d = params.dim();
    let nu = params.nu;
    let mut entries = vec![vec![Vec::new(); d]; d];
    for (k, row) in entries.iter_mut().enumerate() {
        for (n, e) in row.iter_mut().enumerate().take(k + 1) {
            let c = gegenbauer_coeffs(k - n, T::one() - nu - ri(k as i64))?;
            let pre =
                factorial::<T>(k) / (factorial::<T>(n) * pochhammer(nu + nu + ri((k + n) as i64) - T::one(), k - n));
            *e = scalar::scale(&c, pre);
        }
    }
    Ok(MatrixPolynomial::from_entries(d, Var::X, |i, j| entries[i][j].clone()))
}

/// `det W^(ν)(x) = (1-x²)^{(2ℓ+1)(ℓ+ν-1/2)} Π t_k`.
pub fn det_weight<T: Real>(params: &WeightParams<T>, x: T) -> Result<T> {
    if x.abs() >= T::one() {
        return Err(Error::Domain(format!("det_weight needs |x| < 1, got {}", x.f())));
    }
    let d = params.dim();
    let prod = (0..d).fold(T::one(), |p, k| p * t_coefficient(params, k));
    let e = ri::<T>(d as i64) * (params.ell() + params.nu - ratio(1, 2));
    Ok((T::one() - x * x).powf(e) * prod)
}

/// Antidiagonal involution `e_j ↦ e_{2ℓ-j}`.
pub fn j_matrix<T: Real>(d: usize) -> Mat<T> {
    Mat::from_fn(d, d, |i, j| if i + j + 1 == d { T::one() } else { T::zero() })
}

/// Diagonal involution `e_j ↦ (-1)^j e_j`.
pub fn f_matrix<T: Real>(d: usize) -> Mat<T> {
    Mat::from_fn(d, d, |i, j| match (i == j, i % 2) {
        (true, 0) => T::one(),
        (true, _) => -T::one(),
        _ => T::zero(),
    })
}

/// Orthogonal `Y_ℓ` with `Y W Yᵗ = diag(W₊, W₋)`.
pub fn y_matrix<T: Real>(two_ell: usize) -> Mat<T> {
    let d = two_ell + 1;
    let s: T = ri::<T>(2).sqrt() / ri(2);
    let mut y = Mat::zeros(d, d);
    let p = d / 2;
    for i in 0..p {
        y[(i, i)] = s;
        y[(i, d - 1 - i)] = s;
        y[(d - 1 - i, i)] = -s;
        y[(d - 1 - i, d - 1 - i)] = s;
    }
    if d % 2 == 1 {
        y[(p, p)] = T::one();
    }
    y
}

/// The two diagonal blocks of `Y W_pol Yᵗ` and the largest off-block coefficient.
#[derive(Clone, Debug)]
pub struct BlockSplit<T> {
    pub plus: MatrixPolynomial<T>,
    pub minus: MatrixPolynomial<T>,
    pub off_block_max: T,
}

pub fn block_split<T: Real>(params: &WeightParams<T>) -> Result<BlockSplit<T>> {
    let d = params.dim();
    let y = y_matrix::<T>(params.two_ell);
    let w = weight_pol(params)?;
    let conj = w.mul_left(&y).mul_right(&y.transpose());
    let np = d.div_ceil(2);
    let mut off = T::zero();
    for c in conj.coeffs() {
        for i in 0..d {
            for j in 0..d {
                if (i < np) != (j < np) {
                    off = off.max(c[(i, j)].abs());
                }
            }
        }
    }
    Ok(BlockSplit { plus: conj.principal_block(0, np), minus: conj.principal_block(np, d - np), off_block_max: off })
}

/// Closed forms of the small irreducible blocks (polynomial parts, with any
/// extra `(1-x²)` or `(1+x)` factor multiplied in). Returns `(is_plus, block)`
/// for `ℓ ∈ {1, 3/2, 2}`.
pub fn reference_block<T: Real>(params: &WeightParams<T>) -> Option<(bool, MatrixPolynomial<T>)> {
    let nu = params.nu;
    let one = T::one();
    let two: T = ri(2);
    let r2 = two.sqrt();
    let (plus, pre, e): (bool, Vec<T>, [[Vec<T>; 2]; 2]) = match params.two_ell {
        2 => {
            let off = vec![T::zero(), (one + two * nu) / r2];
            (
                true,
                vec![two * (two + nu) / (one + two * nu)],
                [[vec![nu, T::zero(), nu + one], off.clone()], [off, vec![(nu + one) / two, T::zero(), nu / two]]],
            )
        }
        3 => {
            let k = (ri::<T>(3) + nu) / (one + two * nu);
            let off = vec![-one, two * (nu + one)];
            (
                true,
                vec![k, k],
                [
                    [vec![one + two * nu, -(ri::<T>(4) + two * nu), ri::<T>(4) + two * nu], off.clone()],
                    [off, vec![(ri::<T>(3) + two * nu) / ri(3), two * nu / ri(3), two * nu / ri(3)]],
                ],
            )
        }
        4 => {
            let k = (nu + ri(4)) * (nu + two) / ((two * nu + one) * (two * nu + ri(3)));
            let off = vec![T::zero(), two * (two * nu + ri(3))];
            (
                false,
                vec![k, T::zero(), -k],
                [
                    [vec![nu + ri(3), T::zero(), nu], off.clone()],
                    [off, vec![ri::<T>(4) * nu, T::zero(), ri::<T>(4) * (nu + ri(3))]],
                ],
            )
        }
        _ => return None,
    };
    Some((plus, MatrixPolynomial::from_entries(2, Var::X, |i, j| scalar::mul(&pre, &e[i][j]))))
}

/// Outcome of the pointwise positive-definiteness scan.
#[derive(Clone, Debug)]
pub struct PositivityReport<T> {
    pub all_positive: bool,
    /// Smallest LDLᵗ pivot over the grid (a proxy for the least eigenvalue).
    pub min_pivot: T,
    pub failures: Vec<T>,
}

/// Attempts `W_pol(x) = L D Lᵗ` with positive pivots at every grid point.
pub fn positivity_check<T: Real>(params: &WeightParams<T>, grid: &[T]) -> Result<PositivityReport<T>> {
    let w = weight_pol(params)?;
    let mut report = PositivityReport { all_positive: true, min_pivot: T::infinity(), failures: vec![] };
    for &x in grid {
        if x.abs() >= T::one() {
            return Err(Error::Domain(format!("grid point {} is outside (-1,1)", x.f())));
        }
        let ok = match w.eval(x).ldlt() {
            Ok((_, piv)) => {
                let m = piv.iter().fold(T::infinity(), |a, &b| a.min(b));
                report.min_pivot = report.min_pivot.min(m);
                m > T::zero() && w.eval(x).cholesky().is_ok()
            }
            Err(_) => {
                report.min_pivot = report.min_pivot.min(T::zero());
                false
            }
        };
        if !ok {
            report.all_positive = false;
            report.failures.push(x);
        }
    }
    Ok(report)
}

/// Uniform interior grid `x_i = -1 + 2(i+1)/(n+1)`.
pub fn interior_grid<T: Real>(n: usize) -> Vec<T> {
    (0..n).map(|i| ri::<T>(2 * (i as i64 + 1)) / ri((n + 1) as i64) - T::one()).collect()
}

/// Relative residual of the expansion identity behind the LDU factorization:
/// `α_t(m,n) ‖C_r‖² = Σ_k m!n!t_k/(k!²(2ν+2k)_{m-k}(2ν+2k)_{n-k})
///  ∫ C^{(ν+k)}_{m-k} C^{(ν+k)}_{n-k} C^{(ν)}_r (1-x²)^{k+ν-1/2} dx`, `r = m+n-2t`.
pub fn gegenbauer_triple_residual<T: Real>(params: &WeightParams<T>, m: usize, n: usize, t: usize) -> Result<T> {
    let nu = params.nu;
    let r = m + n - 2 * t;
    let lhs = alpha_coefficient(params, m, n, t)? * gegenbauer_norm(r, nu);
    let mut rhs = T::zero();
    for k in 0..=m {
        let nk = nu + ri(k as i64);
        let deg = (m - k) + (n - k) + r;
        let rule = gauss_rule(nk, deg / 2 + 1)?;
        let integral = rule.integrate(|x| {
            gegenbauer(m - k, nk, x).unwrap() * gegenbauer(n - k, nk, x).unwrap() * gegenbauer(r, nu, x).unwrap()
        });
        let f = factorial::<T>;
        let two_nk = nk + nk;
        rhs += f(m) * f(n) * t_coefficient(params, k)
            / (f(k) * f(k) * pochhammer(two_nk, m - k) * pochhammer(two_nk, n - k))
            * integral;
    }
    let scale = lhs.abs().max(rhs.abs()).max(re(1e-300));
    Ok((lhs - rhs).abs() / scale)
}
