//! Diagonalization of the `u`-variable operators by `M(u) = L(1-2u)` and the
//! resulting Racah/Gegenbauer expansion of `P_n^(ν)`.

use crate::error::{Error, Result};
use crate::hyper::{build_d_tilde, build_e_tilde, eigen_d_tilde, eigen_e_tilde, r_from_p};
use crate::linalg::Mat;
use crate::matpoly::{MatrixPolynomial, Var};
use crate::operators::RightDifferentialOperator;
use crate::params::WeightParams;
use crate::real::{ratio, re, ri, Real};
use crate::special::{factorial, gegenbauer_coeffs, hyp2f1_poly, pochhammer, racah_4f3};
use crate::weight::ldu_factors;

/// `M(u) = L(1-2u)`, unipotent lower triangular in `u`.
pub fn build_m<T: Real>(p: &WeightParams<T>) -> Result<MatrixPolynomial<T>> {
    Ok(ldu_factors(p)?.l.change_var())
}

/// `D₀ = D̃ - 2ℓẼ`.
pub fn build_d0<T: Real>(p: &WeightParams<T>) -> Result<RightDifferentialOperator<T>> {
    build_d_tilde(p).try_add(&build_e_tilde(p)?.scale(-p.two_ell_t()))
}

/// `F ↦ ((F·M⁻¹)·op)·M` as an operator with polynomial coefficients.
pub fn conjugate_by_m<T: Real>(
    op: &RightDifferentialOperator<T>,
    m: &MatrixPolynomial<T>,
) -> Result<RightDifferentialOperator<T>> {
    let minv = RightDifferentialOperator::multiplication(m.invert_unipotent_lower()?);
    minv.then(op)?.then(&RightDifferentialOperator::multiplication(m.clone()))
}

/// `u(1-u)d² + d·(½T¹₁ - uT¹₁) + T₀` with diagonal `T¹₁`, `T₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalHyperOp<T> {
    /// `2k+2ν+1`.
    pub t1diag: Vec<T>,
    /// `(2ℓ-k-ν+1)(2ℓ+k+ν+1)`.
    pub t0diag: Vec<T>,
}

impl<T: Real> DiagonalHyperOp<T> {
    pub fn new(p: &WeightParams<T>) -> Self {
        let (nu, l2, one) = (p.nu, p.two_ell_t(), T::one());
        let ks = (0..p.dim()).map(|k| ri::<T>(k as i64));
        DiagonalHyperOp {
            t1diag: ks.clone().map(|k| k + k + nu + nu + one).collect(),
            t0diag: ks.map(|k| (l2 - k - nu + one) * (l2 + k + nu + one)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.t1diag.len()
    }

    pub fn to_operator(&self) -> RightDifferentialOperator<T> {
        let d = self.dim();
        let t1 = Mat::diag(&self.t1diag);
        let a2 = MatrixPolynomial::scalar(d, Var::U, &[T::zero(), T::one(), -T::one()]);
        let a1 = MatrixPolynomial::new(d, Var::U, vec![t1.scale(ratio(1, 2)), -&t1]).unwrap();
        let a0 = MatrixPolynomial::constant(Mat::diag(&self.t0diag), Var::U);
        RightDifferentialOperator::second_order(a2, a1, a0).unwrap()
    }

    /// `u(1-u)G″ + G′T₁(u) + GT₀`.
    pub fn apply(&self, g: &MatrixPolynomial<T>) -> Result<MatrixPolynomial<T>> {
        self.to_operator().apply(g)
    }
}

/// `𝒟 = M⁻¹D₀M`, computed by composing multiplication operators.
pub fn conjugated_d<T: Real>(p: &WeightParams<T>) -> Result<RightDifferentialOperator<T>> {
    conjugate_by_m(&build_d0(p)?, &build_m(p)?)
}

/// `((G·M⁻¹)·D₀)·M`.
pub fn conjugated_action<T: Real>(p: &WeightParams<T>, g: &MatrixPolynomial<T>) -> Result<MatrixPolynomial<T>> {
    let m = build_m(p)?;
    let h = g.try_mul(&m.invert_unipotent_lower()?)?;
    build_d0(p)?.apply(&h)?.try_mul(&m)
}

/// Diagonal of `Λ_n(𝒟) = Λ_n(D̃) - 2ℓΛ_n(Ẽ)`.
pub fn eigen_cal_d<T: Real>(p: &WeightParams<T>, n: usize) -> Vec<T> {
    let l2 = p.two_ell_t();
    eigen_d_tilde(p, n).into_iter().zip(eigen_e_tilde(p, n)).map(|(a, b)| a - l2 * b).collect()
}

/// `μ_n(k) = Λ_n(ℰ)_{kk}`.
pub fn mu<T: Real>(p: &WeightParams<T>, n: usize, k: usize) -> T {
    eigen_e_tilde(p, n)[k]
}

/// `(S₁(u), S₀(u))` with `ℰ = d·S₁ + S₀`.
pub fn s1_s0<T: Real>(p: &WeightParams<T>) -> Result<(MatrixPolynomial<T>, MatrixPolynomial<T>)> {
    if p.two_ell == 0 {
        return Err(Error::InvalidParams("ℰ is not defined for ℓ = 0".into()));
    }
    let d = p.dim();
    let (nu, ell, l2) = (p.nu, p.ell(), p.two_ell_t());
    let (one, two): (T, T) = (T::one(), ri(2));
    // (2ν+i-2)/(2ν+2i-3) is identically 1 at i = 1; cancelling keeps ν = ½ finite
    let ratio = |r: usize, i: T| if r == 1 { one } else { (i + nu + nu - two) / (nu + nu + i + i - ri(3)) };
    let s1 = MatrixPolynomial::from_entries(d, Var::U, |r, c| {
        let i: T = ri(r as i64);
        if c + 1 == r {
            let v = i * ratio(r, i) * (nu + nu + i + l2 - one) / (ell * (nu + nu + i + i - one));
            vec![T::zero(), v, -v]
        } else if c == r + 1 {
            // negative: this is what conjugating Ẽ by M produces
            vec![-(l2 - i) / (ell * ri(4))]
        } else {
            vec![]
        }
    });
    let s0 = MatrixPolynomial::from_entries(d, Var::U, |r, c| {
        let i: T = ri(r as i64);
        if c + 1 == r {
            let v = i * ratio(r, i) * (nu + nu + i + l2 - one) / l2;
            vec![v, -v - v]
        } else if c == r {
            vec![(i * (nu + nu + i - one) - ell * ri(4) * (ell + one) - l2 * (nu - one)) / l2]
        } else {
            vec![]
        }
    });
    Ok((s1, s0))
}

/// `ℰ = d·S₁(u) + S₀(u)`.
pub fn build_e_conjugated<T: Real>(p: &WeightParams<T>) -> Result<RightDifferentialOperator<T>> {
    let (s1, s0) = s1_s0(p)?;
    RightDifferentialOperator::new(vec![s0, s1])
}

/// `N(λ) = (λ - T₀)(½T¹₁)⁻¹S₁(0) + S₀(0)`, acting on row vectors from the right.
pub fn n_matrix<T: Real>(p: &WeightParams<T>, lambda: T) -> Result<Mat<T>> {
    let (s1, s0) = s1_s0(p)?;
    let h = DiagonalHyperOp::new(p);
    let f: Vec<T> = h.t0diag.iter().zip(&h.t1diag).map(|(&t0, &t1)| (lambda - t0) * ri(2) / t1).collect();
    Ok(&(&Mat::diag(&f) * &s1.eval(T::zero())) + &s0.eval(T::zero()))
}

/// `c_{k,j}(n)` for `k, j ≤ 2ℓ`; entries with `j > n+k` are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct RacahCoefficients<T> {
    pub n: usize,
    pub c: Vec<Vec<T>>,
}

impl<T: Real> RacahCoefficients<T> {
    pub fn row(&self, k: usize) -> &[T] {
        &self.c[k]
    }

    pub fn get(&self, k: usize, j: usize) -> T {
        self.c[k][j]
    }
}

/// `c_{k,0}(n) = (-1)^n 4^{-n}(ν)_n(2ℓ+2ν)_n / ((k+ν)_n(2ℓ+ν-k)_n)`.
pub fn c_k0<T: Real>(p: &WeightParams<T>, n: usize, k: usize) -> T {
    let (nu, l2) = (p.nu, p.two_ell_t());
    let kt: T = ri(k as i64);
    let sign = if n.is_multiple_of(2) { T::one() } else { -T::one() };
    sign * pochhammer(nu, n) * pochhammer(l2 + nu + nu, n)
        / (ri::<T>(4).powi(n as i32) * pochhammer(kt + nu, n) * pochhammer(l2 + nu - kt, n))
}

/// The factor `(-1)^j(-2ℓ)_j(-n-k)_j/(j!(2ν+2ℓ)_j)` multiplying the ₄F₃.
fn racah_prefactor<T: Real>(p: &WeightParams<T>, n: usize, k: usize, j: usize) -> T {
    let sign = if j.is_multiple_of(2) { T::one() } else { -T::one() };
    sign * pochhammer(-p.two_ell_t(), j) * pochhammer(-ri::<T>((n + k) as i64), j)
        / (factorial::<T>(j) * pochhammer(p.nu + p.nu + p.two_ell_t(), j))
}

pub fn racah_coefficients<T: Real>(p: &WeightParams<T>, n: usize) -> Result<RacahCoefficients<T>> {
    let d = p.dim();
    let mut c = vec![vec![T::zero(); d]; d];
    for (k, row) in c.iter_mut().enumerate() {
        let c0 = c_k0(p, n, k);
        for (j, v) in row.iter_mut().enumerate().take(p.two_ell.min(n + k) + 1) {
            *v = c0 * racah_prefactor(p, n, k, j) * racah_4f3(j, k, p, n)?;
        }
    }
    Ok(RacahCoefficients { n, c })
}

/// `ℛ_n(u)` with `(k,j)` entry `c_{k,j}·₂F₁(j-k-n, n+k+j+2ν; j+½+ν; u)`.
pub fn cal_r<T: Real>(p: &WeightParams<T>, n: usize) -> Result<MatrixPolynomial<T>> {
    let d = p.dim();
    let rc = racah_coefficients(p, n)?;
    let nu = p.nu;
    let mut entries = vec![vec![Vec::new(); d]; d];
    for (k, row) in entries.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate().take(p.two_ell.min(n + k) + 1) {
            let m = n + k - j;
            let b = ri::<T>((n + k + j) as i64) + nu + nu;
            let f = hyp2f1_poly(m, b, ri::<T>(j as i64) + ratio(1, 2) + nu)?;
            *e = f.into_iter().map(|v| v * rc.c[k][j]).collect();
        }
    }
    Ok(MatrixPolynomial::from_entries(d, Var::U, |i, j| entries[i][j].clone()))
}

/// `P_n(x) = (-2)^n ℛ_n((1-x)/2) L(x)⁻¹`.
pub fn p_n_racah<T: Real>(p: &WeightParams<T>, n: usize) -> Result<MatrixPolynomial<T>> {
    let linv = ldu_factors(p)?.l.invert_unipotent_lower()?;
    r_from_p(&cal_r(p, n)?, n).try_mul(&linv)
}

/// Rejects `ν` within `1e-6` of a value where the `₂F₁` form of
/// `C^{(1-ν-j)}_{j-i}` degenerates.
pub fn check_generic_nu<T: Real>(p: &WeightParams<T>, i: usize) -> Result<()> {
    let nu = p.nu;
    let tol: T = re(1e-6);
    for j in i + 1..=p.two_ell {
        let lambda = T::one() - nu - ri(j as i64);
        let m = j - i;
        let bad_pre = (0..m).any(|s| (lambda + lambda + ri(s as i64)).abs() < tol);
        let bad_den = (0..m).any(|r| (lambda + ratio(1, 2) + ri(r as i64)).abs() < tol);
        if bad_pre || bad_den {
            return Err(Error::Domain(format!(
                "ν = {} is degenerate for C^(1-ν-{j})_{m}; use the recurrence or ₂H₁ route",
                nu.f()
            )));
        }
    }
    Ok(())
}

/// `(P_n)_{k,i}` as a polynomial in `x` from the Racah × Gegenbauer ×
/// Gegenbauer sum. Terms with `j > n+k` vanish through `(-n-k)_j` and are
/// skipped. Coefficients of `x^p`, `p > n`, must cancel to `1e-10` relative to
/// the largest term.
pub fn entries_via_racah<T: Real>(p: &WeightParams<T>, n: usize, k: usize, i: usize) -> Result<Vec<T>> {
    if k > p.two_ell || i > p.two_ell {
        return Err(Error::Index(format!("(k, i) = ({k}, {i}) outside 0..={}", p.two_ell)));
    }
    check_generic_nu(p, i)?;
    let nu = p.nu;
    let big_n = n + k;
    let mut out = vec![T::zero(); big_n + 1];
    let mut scale = T::zero();
    for j in i..=p.two_ell.min(big_n) {
        let jt: T = ri(j as i64);
        let m = big_n - j;
        let w = factorial::<T>(m) * racah_prefactor(p, n, k, j) * factorial::<T>(j) * racah_4f3(j, k, p, n)?
            / (pochhammer(nu + nu + jt + jt, m) * pochhammer(nu + nu + jt + ri(i as i64) - T::one(), j - i));
        let g1 = gegenbauer_coeffs(m, nu + jt)?;
        let g2 = gegenbauer_coeffs(j - i, T::one() - nu - jt)?;
        for (a, &x) in g1.iter().enumerate() {
            for (b, &y) in g2.iter().enumerate() {
                let t = w * x * y;
                out[a + b] += t;
                scale = scale.max(t.abs());
            }
        }
    }
    let pre = ri::<T>(-2).powi(n as i32) * c_k0(p, n, k) / factorial::<T>(i);
    let tail = out.iter().skip(n + 1).fold(T::zero(), |a, &c| a.max(c.abs()));
    if tail > re::<T>(1e-10) * scale.max(T::one()) {
        return Err(Error::NotPolynomial { degree: n, residual: (tail / scale).f() });
    }
    out.truncate(n + 1);
    Ok(out.into_iter().map(|c| c * pre).collect())
}

/// `P_n` assembled entrywise from [`entries_via_racah`].
pub fn p_n_entries<T: Real>(p: &WeightParams<T>, n: usize) -> Result<MatrixPolynomial<T>> {
    let d = p.dim();
    let mut entries = vec![vec![Vec::new(); d]; d];
    for (k, row) in entries.iter_mut().enumerate() {
        for (i, e) in row.iter_mut().enumerate() {
            *e = entries_via_racah(p, n, k, i)?;
        }
    }
    Ok(MatrixPolynomial::from_entries(d, Var::X, |a, b| entries[a][b].clone()))
}

/// The leading-coefficient sum that must vanish for `k > i`, returned with
/// the largest absolute term for scaling.
pub fn vanishing_sum<T: Real>(p: &WeightParams<T>, n: usize, k: usize, i: usize) -> Result<(T, T)> {
    let nu = p.nu;
    let big_n = n + k;
    let (mut s, mut scale) = (T::zero(), T::zero());
    for j in i..=p.two_ell.min(big_n) {
        let jt: T = ri(j as i64);
        let m = big_n - j;
        let t = pochhammer(nu + jt, m) * racah_prefactor(p, n, k, j) * factorial::<T>(j) * racah_4f3(j, k, p, n)?
            / (pochhammer(nu + nu + jt + jt, m) * pochhammer(nu + nu + jt + ri(i as i64) - T::one(), j - i))
            * pochhammer(T::one() - nu - jt, j - i)
            / factorial::<T>(j - i);
        s += t;
        scale = scale.max(t.abs());
    }
    Ok((s, scale))
}

/// `|c_{k,0}(n)|² = 4^{-2n}(ν)_n²(2ℓ+2ν)_n² / ((k+ν)_n²(2ℓ+ν-k)_n²)`.
pub fn c_k0_modulus_sq<T: Real>(p: &WeightParams<T>, n: usize, k: usize) -> T {
    let (nu, l2) = (p.nu, p.two_ell_t());
    let kt: T = ri(k as i64);
    let q = pochhammer(nu, n) * pochhammer(l2 + nu + nu, n) / (pochhammer(kt + nu, n) * pochhammer(l2 + nu - kt, n));
    q * q / ri::<T>(16).powi(n as i32)
}

/// `Σ_j w_j R_k(λ(j)) R_i(λ(j))` for fixed `N = n+k = m+i`, with the
/// Racah weight
/// `(-2ℓ)_j(-N)_j(2ν-1)_j(ν+½)_j / (j!(2ℓ+2ν)_j(N+2ν)_j(ν-½)_j)`.
pub fn racah_orthogonality_sum<T: Real>(p: &WeightParams<T>, big_n: usize, k: usize, i: usize) -> Result<T> {
    if k > big_n || i > big_n {
        return Err(Error::Index(format!("degrees ({k}, {i}) exceed N = {big_n}")));
    }
    let (nu, l2) = (p.nu, p.two_ell_t());
    let nt: T = ri(big_n as i64);
    let half: T = ratio(1, 2);
    let mut s = T::zero();
    for j in 0..=p.two_ell.min(big_n) {
        let w = pochhammer(-l2, j) * pochhammer(-nt, j) * pochhammer(nu + nu - T::one(), j) * pochhammer(nu + half, j)
            / (factorial::<T>(j)
                * pochhammer(l2 + nu + nu, j)
                * pochhammer(nt + nu + nu, j)
                * pochhammer(nu - half, j));
        s += w * racah_4f3(j, k, p, big_n - k)? * racah_4f3(j, i, p, big_n - i)?;
    }
    Ok(s)
}

/// The closed form of [`racah_orthogonality_sum`] at `k = i`:
/// `M (-2ℓ-n-ν)_k(-2ℓ-N-2ν+1)_k(-2ℓ-ν+1)_k(-N-ν+1)_k k!
///  / ((-2ℓ-N-ν+1)_{2k}(-2ℓ)_k(-N)_k(ν)_k)` with `n = N-k` and
/// `M = (N+ν)_{2ℓ}(2ν)_{2ℓ}/((N+2ν)_{2ℓ}(ν)_{2ℓ})`.
pub fn racah_norm<T: Real>(p: &WeightParams<T>, big_n: usize, k: usize) -> T {
    let (nu, l2, one) = (p.nu, p.two_ell_t(), T::one());
    let nt: T = ri(big_n as i64);
    let n: T = ri((big_n - k) as i64);
    let m = pochhammer(nt + nu, p.two_ell) * pochhammer(nu + nu, p.two_ell)
        / (pochhammer(nt + nu + nu, p.two_ell) * pochhammer(nu, p.two_ell));
    m * pochhammer(-l2 - n - nu, k)
        * pochhammer(-l2 - nt - nu - nu + one, k)
        * pochhammer(-l2 - nu + one, k)
        * pochhammer(-nt - nu + one, k)
        * factorial::<T>(k)
        / (pochhammer(-l2 - nt - nu + one, 2 * k) * pochhammer(-l2, k) * pochhammer(-nt, k) * pochhammer(nu, k))
}
