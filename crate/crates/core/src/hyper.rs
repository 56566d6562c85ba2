//! Matrix hypergeometric `₂H₁` series on `[0,1]` and the row-by-row
//! construction of `R_n(u) = (-1)^n 2^{-n} P_n(1-2u)`.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::matpoly::{MatrixPolynomial, Var};
use crate::operators::{a0_matrix, b0_matrix, b1_matrix, c_matrix, u_matrix, v_matrix, RightDifferentialOperator};
use crate::params::WeightParams;
use crate::real::{ratio, re, ri, Real};
use crate::special::factorial;

/// Parameters `(C, U, V)` of `₂H₁(U, V; C; z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HypergeometricData<T> {
    pub c: Mat<T>,
    pub u: Mat<T>,
    pub v: Mat<T>,
}

/// `[C,U,V]_0 .. [C,U,V]_N`.
#[derive(Clone, Debug)]
pub struct BracketSequence<T> {
    pub terms: Vec<Mat<T>>,
}

/// `[C,U,V]_{i+1} = (C+i)^{-1}(i² + i(U-1) + V)[C,U,V]_i`.
pub fn h2f1_bracket<T: Real>(data: &HypergeometricData<T>, n: usize) -> Result<BracketSequence<T>> {
    let d = data.c.rows();
    let id = Mat::identity(d);
    let mut terms = vec![id.clone()];
    for i in 0..n {
        let it: T = ri(i as i64);
        let shifted = &data.c + &id.scale(it);
        let lu = shifted.lu()?;
        let m = &(&id.scale(it * it) + &(&data.u - &id).scale(it)) + &data.v;
        let rhs = &m * &terms[i];
        // solve column by column
        let mut next = Mat::zeros(d, d);
        for col in 0..d {
            let b: Vec<T> = (0..d).map(|r| rhs[(r, col)]).collect();
            let x = lu.solve(&b).map_err(|_| Error::Singular(format!("C + {i} is singular")))?;
            for r in 0..d {
                next[(r, col)] = x[r];
            }
        }
        terms.push(next);
    }
    Ok(BracketSequence { terms })
}

/// `C̃ = (U - C)/2`.
pub fn c_tilde<T: Real>(p: &WeightParams<T>) -> Mat<T> {
    (&u_matrix(p) - &c_matrix(p)).scale(ratio(1, 2))
}

/// `B̃₀ = -(B₁ + B₀)/2`.
pub fn b0_tilde<T: Real>(p: &WeightParams<T>) -> Mat<T> {
    (&b1_matrix(p) + &b0_matrix(p)).scale(ratio(-1, 2))
}

fn u_poly<T: Real>(d: usize, coeffs: Vec<Mat<T>>) -> MatrixPolynomial<T> {
    MatrixPolynomial::new(d, Var::U, coeffs).unwrap()
}

/// `D̃ = u(1-u)d² + d(C̃ - uŨ) - Ṽ` in the variable `u`.
pub fn build_d_tilde<T: Real>(p: &WeightParams<T>) -> RightDifferentialOperator<T> {
    let d = p.dim();
    let id = Mat::identity(d);
    RightDifferentialOperator::second_order(
        u_poly(d, vec![Mat::zeros(d, d), id.clone(), -&id]),
        u_poly(d, vec![c_tilde(p), -&u_matrix(p)]),
        u_poly(d, vec![-&v_matrix(p)]),
    )
    .unwrap()
}

/// `Ẽ = d(uB̃₁ + B̃₀) + Ã₀` in the variable `u`.
pub fn build_e_tilde<T: Real>(p: &WeightParams<T>) -> Result<RightDifferentialOperator<T>> {
    if p.two_ell == 0 {
        return Err(Error::InvalidParams("E is not defined for ℓ = 0".into()));
    }
    let d = p.dim();
    RightDifferentialOperator::new(vec![u_poly(d, vec![a0_matrix(p)]), u_poly(d, vec![b0_tilde(p), b1_matrix(p)])])
}

/// Diagonal of `Λ_n(D̃) = -n(2ℓ+2ν+n) - (ν-1)(2ℓ+ν+1) + i(2ℓ-i)`.
pub fn eigen_d_tilde<T: Real>(p: &WeightParams<T>, n: usize) -> Vec<T> {
    crate::operators::eigen_d(p, n)
}

/// Diagonal of `Λ_n(Ẽ) = -(n+ν+2ℓ+1) + i(n+ν+ℓ)/ℓ`.
pub fn eigen_e_tilde<T: Real>(p: &WeightParams<T>, n: usize) -> Vec<T> {
    let (ell, nu, nt) = (p.ell(), p.nu, ri::<T>(n as i64));
    (0..p.dim()).map(|i| -(nt + nu + p.two_ell_t() + T::one()) + ri::<T>(i as i64) * (nt + nu + ell) / ell).collect()
}

/// `D_α = D̃ + αẼ` together with `(C_α, U_α, V_α)`.
#[derive(Clone, Debug)]
pub struct DAlpha<T> {
    pub op: RightDifferentialOperator<T>,
    pub c: Mat<T>,
    pub u: Mat<T>,
    pub v: Mat<T>,
}

pub fn build_d_alpha<T: Real>(p: &WeightParams<T>, alpha: T) -> Result<DAlpha<T>> {
    let c = &c_tilde(p) + &b0_tilde(p).scale(alpha);
    let u = &u_matrix(p) - &b1_matrix(p).scale(alpha);
    let v = &v_matrix(p) - &a0_matrix(p).scale(alpha);
    let op = build_d_tilde(p).try_add(&build_e_tilde(p)?.scale(alpha))?;
    Ok(DAlpha { op, c, u, v })
}

/// `λ_n^α(j)`, the `j`-th diagonal entry of `Λ_n(D_α) = -n² - n(U_α-1) - V_α`.
pub fn lambda_n_alpha<T: Real>(p: &WeightParams<T>, alpha: T, n: usize, j: usize) -> Result<T> {
    if j > p.two_ell {
        return Err(Error::Index(format!("j = {j} exceeds 2ℓ = {}", p.two_ell)));
    }
    let dal = build_d_alpha(p, alpha)?;
    let nt: T = ri(n as i64);
    Ok(-nt * nt - nt * (dal.u[(j, j)] - T::one()) - dal.v[(j, j)])
}

/// The scalar display
/// `-n² - n(2ℓ(ℓ+ν)+α(ℓ-j)-ℓ)/ℓ - (2ℓ-j)(α(ℓ+1)-ℓj)/ℓ + (ν-1)(ℓ(2ℓ+ν+1)-α(ℓ-j))/ℓ`,
/// kept for comparison with [`lambda_n_alpha`]; the two differ by
/// `n + 2(ν-1)(2ℓ+ν+1)`.
pub fn lambda_n_alpha_display<T: Real>(p: &WeightParams<T>, alpha: T, n: usize, j: usize) -> T {
    let (ell, nu) = (p.ell(), p.nu);
    let (nt, jt, l2) = (ri::<T>(n as i64), ri::<T>(j as i64), p.two_ell_t());
    let one = T::one();
    -nt * nt
        - nt * (l2 * (ell + nu) + alpha * (ell - jt) - ell) / ell
        - (l2 - jt) * (alpha * (ell + one) - ell * jt) / ell
        + (nu - one) * (ell * (l2 + nu + one) - alpha * (ell - jt)) / ell
}

/// Smallest gap `|λ_n(i) - λ_m(j)|` over the pairs that must stay apart for
/// the row construction at `(n, i)`: all `m < n`, and `m = n`, `j ≠ i`.
pub fn separation<T: Real>(p: &WeightParams<T>, alpha: T, n: usize, i: usize) -> Result<T> {
    let target = lambda_n_alpha(p, alpha, n, i)?;
    let mut gap = T::infinity();
    for m in 0..=n {
        for j in 0..p.dim() {
            if m == n && j == i {
                continue;
            }
            gap = gap.min((target - lambda_n_alpha(p, alpha, m, j)?).abs());
        }
    }
    Ok(gap)
}

/// `(C_αᵗ, U_αᵗ, V_αᵗ + λ)`.
pub fn row_data<T: Real>(p: &WeightParams<T>, alpha: T, lambda: T) -> Result<HypergeometricData<T>> {
    let dal = build_d_alpha(p, alpha)?;
    let d = p.dim();
    Ok(HypergeometricData {
        c: dal.c.transpose(),
        u: dal.u.transpose(),
        v: &dal.v.transpose() + &Mat::identity(d).scale(lambda),
    })
}

/// Row `i` of `R_n` as `d` scalar polynomials in `u`.
pub fn monic_row_2h1<T: Real>(p: &WeightParams<T>, alpha: T, n: usize, i: usize) -> Result<Vec<Vec<T>>> {
    let d = p.dim();
    if i >= d {
        return Err(Error::Index(format!("row {i} out of range for size {d}")));
    }
    let gap = separation(p, alpha, n, i)?;
    if gap <= re(1e-6) {
        return Err(Error::InvalidParams(format!(
            "α = {} leaves eigenvalues λ_n(i) within {:.3e} of each other",
            alpha.f(),
            gap.f()
        )));
    }
    let lambda = lambda_n_alpha(p, alpha, n, i)?;
    let data = row_data(p, alpha, lambda)?;
    let br = h2f1_bracket(&data, n + 1)?;
    let mut e = vec![T::zero(); d];
    e[i] = factorial::<T>(n);
    let f0 = br.terms[n].solve(&e)?;

    let scale = f0.iter().fold(T::one(), |a, v| a.max(v.abs()));
    let tail = br.terms[n + 1].mul_vec(&f0);
    let resid = tail.iter().fold(T::zero(), |a, v| a.max(v.abs())) / scale;
    if resid > re(1e-8) {
        return Err(Error::Termination { residual: resid.f() });
    }
    let mut entries = vec![vec![T::zero(); n + 1]; d];
    for k in 0..=n {
        let v = br.terms[k].mul_vec(&f0);
        let kf = factorial::<T>(k);
        for (j, e) in entries.iter_mut().enumerate() {
            e[k] = v[j] / kf;
        }
    }
    Ok(entries)
}

/// `R_n(u)` assembled from the `₂H₁` rows.
pub fn r_n_2h1<T: Real>(p: &WeightParams<T>, alpha: T, n: usize) -> Result<MatrixPolynomial<T>> {
    let d = p.dim();
    let rows = (0..d).map(|i| monic_row_2h1(p, alpha, n, i)).collect::<Result<Vec<_>>>()?;
    Ok(MatrixPolynomial::from_entries(d, Var::U, |i, j| rows[i][j].clone()))
}

/// `P_n(x) = (-2)^n R_n((1-x)/2)` from the `₂H₁` route.
pub fn p_n_2h1<T: Real>(p: &WeightParams<T>, alpha: T, n: usize) -> Result<MatrixPolynomial<T>> {
    Ok(r_from_p(&r_n_2h1(p, alpha, n)?, n))
}

/// `R_n(u) = (-1)^n 2^{-n} P_n(1-2u)` and back; the map is an involution
/// up to the variable tag.
pub fn r_from_p<T: Real>(q: &MatrixPolynomial<T>, n: usize) -> MatrixPolynomial<T> {
    let two_n = ri::<T>(2).powi(n as i32);
    let s = match q.var() {
        Var::X => T::one() / two_n,
        Var::U => two_n,
    };
    let sign = if n.is_multiple_of(2) { T::one() } else { -T::one() };
    q.change_var().scale(sign * s)
}

/// The default `α = √2`.
pub fn default_alpha<T: Real>() -> T {
    ri::<T>(2).sqrt()
}

/// Closed-form `R_{n,n-1}`, the `u^{n-1}` coefficient of `R_n`.
pub fn subleading_coefficient<T: Real>(p: &WeightParams<T>, n: usize) -> Result<Mat<T>> {
    if n == 0 {
        return Err(Error::InvalidParams("R_{n,n-1} needs n ≥ 1".into()));
    }
    let (nu, l2) = (p.nu, p.two_ell_t());
    let nt: T = ri(n as i64);
    let one = T::one();
    let d = p.dim();
    Ok(Mat::from_fn(d, d, |r, c| {
        let j: T = ri(r as i64);
        if r == c {
            -nt / ri(2)
        } else if c + 1 == r {
            j * nt / (ri::<T>(4) * (j + nt + nu - one))
        } else if c == r + 1 {
            nt * (l2 - j) / (ri::<T>(4) * (l2 + nt + nu - j - one))
        } else {
            T::zero()
        }
    }))
}

/// The two parameter triples that must coincide for the derivative of the
/// `n`-th row `i`: `(C+1, U+2, V+U)` built at `(ν, n)` and
/// `(C, U, V)` built at `(ν+1, n-1)`.
pub fn derivative_parameters<T: Real>(
    p: &WeightParams<T>,
    alpha: T,
    n: usize,
    i: usize,
) -> Result<(HypergeometricData<T>, HypergeometricData<T>)> {
    if n == 0 {
        return Err(Error::InvalidParams("derivative parameters need n ≥ 1".into()));
    }
    let d = p.dim();
    let id = Mat::identity(d);
    let a = row_data(p, alpha, lambda_n_alpha(p, alpha, n, i)?)?;
    let shifted = HypergeometricData { c: &a.c + &id, u: &a.u + &id.scale(ri(2)), v: &a.v + &a.u };
    let up = p.shifted(1);
    let b = row_data(&up, alpha, lambda_n_alpha(&up, alpha, n - 1, i)?)?;
    Ok((shifted, b))
}
