//! The monic family `P_n^(ν)`: recurrence, norms, Rodrigues formula and the
//! relations between the `ν` and `ν+1` families.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::matpoly::{MatrixPolynomial, Var, WeightedMatrixFunction};
use crate::params::WeightParams;
use crate::quadrature;
use crate::real::{ratio, re, ri, Real};
use crate::special::{factorial, gegenbauer_mass, pochhammer};
use crate::weight::weight_pol;

/// Monic polynomials `P_0..P_N` and their squared norms `H_0..H_N`.
#[derive(Clone, Debug)]
pub struct MonicFamily<T> {
    pub params: WeightParams<T>,
    pub polys: Vec<MatrixPolynomial<T>>,
    pub norms: Vec<Mat<T>>,
}

impl<T: Real> MonicFamily<T> {
    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    /// `P_n`, or the zero polynomial for the conventional `P_{-1}`.
    pub fn get(&self, n: isize) -> MatrixPolynomial<T> {
        if n < 0 {
            MatrixPolynomial::zero(self.params.dim(), Var::X)
        } else {
            self.polys[n as usize].clone()
        }
    }
}

/// Recurrence coefficients of the monic family.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrenceData<T> {
    /// Tridiagonal.
    pub x: Mat<T>,
    /// Diagonal; zero for `n = 0`.
    pub y: Mat<T>,
}

/// `(X_n, Y_n)` with `x P_n = P_{n+1} + (1-2X_n) P_n + 4Y_n P_{n-1}`.
pub fn recurrence_coefficients<T: Real>(params: &WeightParams<T>, n: usize) -> RecurrenceData<T> {
    let d = params.dim();
    let nu = params.nu;
    let l2 = params.two_ell_t();
    let nt: T = ri(n as i64);
    let (one, four) = (T::one(), ri::<T>(4));
    let x = Mat::from_fn(d, d, |r, c| {
        let j: T = ri(r as i64);
        if r == c {
            ratio(1, 2)
        } else if c + 1 == r {
            -j * (j + nu - one) / (four * (j + nt + nu - one) * (j + nt + nu))
        } else if c == r + 1 {
            -(l2 - j) * (l2 - j + nu - one) / (four * (l2 - j + nt + nu - one) * (l2 + nt - j + nu))
        } else {
            T::zero()
        }
    });
    let y = if n == 0 {
        Mat::zeros(d, d)
    } else {
        Mat::diag(
            &(0..d)
                .map(|r| {
                    let j: T = ri(r as i64);
                    nt * (nt + nu - one) * (l2 + nt + nu) * (l2 + nt + nu + nu - one)
                        / (ri::<T>(16)
                            * (l2 + nt + nu - j - one)
                            * (l2 + nt + nu - j)
                            * (j + nt + nu - one)
                            * (j + nt + nu))
                })
                .collect::<Vec<_>>(),
        )
    };
    RecurrenceData { x, y }
}

/// `1 - 2X_n`.
pub fn one_minus_two_x<T: Real>(params: &WeightParams<T>, n: usize) -> Mat<T> {
    &Mat::identity(params.dim()) - &recurrence_coefficients(params, n).x.scale(ri(2))
}

/// `P_0..P_N` by the three-term recurrence, with closed-form norms.
pub fn monic_family<T: Real>(params: &WeightParams<T>, big_n: usize) -> MonicFamily<T> {
    let d = params.dim();
    let mut polys = vec![MatrixPolynomial::identity(d, Var::X)];
    let mut prev = MatrixPolynomial::zero(d, Var::X);
    for n in 0..big_n {
        let cur = polys[n].clone();
        let rec = recurrence_coefficients(params, n);
        let b = &Mat::identity(d) - &rec.x.scale(ri(2));
        let next = &(&cur.shift_up() - &cur.mul_left(&b)) - &prev.mul_left(&rec.y.scale(ri(4)));
        prev = cur;
        polys.push(next);
    }
    let norms = (0..=big_n).map(|n| norm_matrix(params, n)).collect();
    MonicFamily { params: *params, polys, norms }
}

/// `P_n(x)` by running the recurrence on values; `O(n d³)`.
pub fn eval_by_recurrence<T: Real>(params: &WeightParams<T>, n: usize, x: T) -> Mat<T> {
    let d = params.dim();
    let (mut prev, mut cur) = (Mat::zeros(d, d), Mat::identity(d));
    for k in 0..n {
        let rec = recurrence_coefficients(params, k);
        let b = &Mat::identity(d) - &rec.x.scale(ri(2));
        let next = &(&cur.scale(x) - &(&b * &cur)) - &(&rec.y.scale(ri(4)) * &prev);
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// Closed-form `H_n = ⟨P_n, P_n⟩` (diagonal).
pub fn norm_matrix<T: Real>(params: &WeightParams<T>, n: usize) -> Mat<T> {
    let nu = params.nu;
    let l2 = params.two_ell;
    let l2t = params.two_ell_t();
    let ell = params.ell();
    let half = ratio::<T>(1, 2);
    let nt: T = ri(n as i64);
    let one = T::one();
    let common = gegenbauer_mass(nu) * nu * (l2t + nu + nt) / (nu + nt)
        * factorial::<T>(n)
        * pochhammer(ell + half + nu, n)
        * pochhammer(l2t + nu, n)
        * pochhammer(ell + nu, n)
        / pochhammer(l2t + nu + one, n);
    let np1 = nt + nu + one;
    Mat::diag(
        &(0..=l2)
            .map(|k| {
                let kt: T = ri(k as i64);
                common / (pochhammer(nu + kt, n) * pochhammer(l2t + nu + nu + nt, n) * pochhammer(l2t + nu - kt, n))
                    * factorial::<T>(k)
                    * factorial::<T>(l2 - k)
                    * pochhammer(np1, l2)
                    / (factorial::<T>(l2) * pochhammer(np1, k) * pochhammer(np1, l2 - k))
            })
            .collect::<Vec<_>>(),
    )
}

/// Diagonal `G_n` of the Rodrigues formula.
pub fn rodrigues_constant<T: Real>(params: &WeightParams<T>, n: usize) -> Mat<T> {
    let nu = params.nu;
    let l2t = params.two_ell_t();
    let ell = params.ell();
    let half = ratio::<T>(1, 2);
    let nt: T = ri(n as i64);
    let sign = if n.is_multiple_of(2) { T::one() } else { -T::one() };
    let num =
        sign * pochhammer(nu, n) * pochhammer(ell + nu + half, n) * pochhammer(ell + nu, n) * pochhammer(l2t + nu, n);
    Mat::diag(
        &(0..params.dim())
            .map(|k| {
                let kt: T = ri(k as i64);
                num / (pochhammer(nu + half, n)
                    * pochhammer(nu + kt, n)
                    * pochhammer(l2t + nu + T::one(), n)
                    * pochhammer(l2t + nu + nu + nt, n)
                    * pochhammer(l2t + nu - kt, n))
            })
            .collect::<Vec<_>>(),
    )
}

/// `P_n = G_n (d/dx)^n[(1-x²)^(ν+n-1/2) W_pol^(ν+n)] (W^(ν))^(-1)`, recovered as
/// a polynomial by Chebyshev interpolation. Fails if the sampled function is
/// not a degree-`n` polynomial to within `1e-8` (relative).
pub fn rodrigues<T: Real>(params: &WeightParams<T>, n: usize) -> Result<MatrixPolynomial<T>> {
    let d = params.dim();
    let up = params.shifted(n);
    let base = WeightedMatrixFunction::new(up.nu - ratio(1, 2), (*weight_pol(&up)?).clone())?;
    let q = base.diff_n(n);
    let g = rodrigues_constant(params, n);
    let w = weight_pol(params)?;
    let m = n + params.two_ell * d + 3;
    let pi = T::pi();
    let nodes: Vec<T> = (0..m).map(|j| (pi * (ri::<T>(2 * j as i64 + 1)) / ri((2 * m) as i64)).cos()).collect();
    let samples =
        nodes.iter().map(|&x| Ok(&(&g * &q.poly.eval(x)) * &w.eval(x).inverse()?)).collect::<Result<Vec<_>>>()?;

    // discrete Chebyshev transform: c_k = (2/m) Σ f(x_j) T_k(x_j)
    let cheb: Vec<Mat<T>> = (0..m)
        .map(|k| {
            let mut acc = Mat::zeros(d, d);
            for (j, s) in samples.iter().enumerate() {
                let tk = (pi * ri::<T>(k as i64) * ri::<T>(2 * j as i64 + 1) / ri((2 * m) as i64)).cos();
                acc.axpy(tk, s);
            }
            acc.scale(ri::<T>(if k == 0 { 1 } else { 2 }) / ri(m as i64))
        })
        .collect();
    let scale = cheb.iter().fold(T::one(), |a, c| a.max(c.max_abs()));
    let tail = cheb[n + 1..].iter().fold(T::zero(), |a, c| a.max(c.max_abs()));
    if tail > re::<T>(1e-8) * scale {
        return Err(Error::NotPolynomial { degree: n, residual: tail.f() });
    }
    // Σ_{k≤n} c_k T_k in the power basis
    let mut out = MatrixPolynomial::zero(d, Var::X);
    let (mut t_prev, mut t_cur) = (vec![], vec![T::one()]);
    for (k, c) in cheb.iter().take(n + 1).enumerate() {
        out = &out + &MatrixPolynomial::scalar(d, Var::X, &t_cur).mul_left(c);
        let two_x_t = crate::matpoly::scalar::mul(&[T::zero(), ri(2)], &t_cur);
        let t_next = if k == 0 {
            vec![T::zero(), T::one()]
        } else {
            crate::matpoly::scalar::add(&two_x_t, &crate::matpoly::scalar::scale(&t_prev, -T::one()))
        };
        t_prev = std::mem::replace(&mut t_cur, t_next);
    }
    Ok(out)
}

/// Largest coefficient residuals of the two identities linking the `ν` and
/// `ν+1` families at degree `n ≥ 1`:
/// `P^ν_n + n x P^{ν+1}_{n-1} = (n+1)P^{ν+1}_n + n(1-2X^ν_n)P^{ν+1}_{n-1} + 4(n-1)Y^ν_n P^{ν+1}_{n-2}`
/// and
/// `P^ν_n = P^{ν+1}_n + 2n(X^{ν+1}_{n-1} - X^ν_n)P^{ν+1}_{n-1} + 4((n-1)Y^ν_n - nY^{ν+1}_{n-1})P^{ν+1}_{n-2}`,
/// the second following from the first and the `ν+1` recurrence.
pub fn nu_shift_residuals<T: Real>(params: &WeightParams<T>, n: usize) -> Result<(T, T)> {
    if n == 0 {
        return Err(Error::InvalidParams("the ν-shift identities need n ≥ 1".into()));
    }
    let d = params.dim();
    let up = params.shifted(1);
    let a = monic_family(params, n);
    let b = monic_family(&up, n);
    let ni = n as isize;
    let nt: T = ri(n as i64);
    let rn = recurrence_coefficients(params, n);
    let lhs1 = &a.get(ni) + &b.get(ni - 1).shift_up().scale(nt);
    let rhs1 = &(&b.get(ni).scale(nt + T::one()) + &b.get(ni - 1).mul_left(&one_minus_two_x(params, n)).scale(nt))
        + &b.get(ni - 2).mul_left(&rn.y.scale(ri::<T>(4) * (nt - T::one())));
    let r1 = (&lhs1 - &rhs1).max_abs_coeff();

    let rup = recurrence_coefficients(&up, n - 1);
    let xdiff = (&rup.x - &rn.x).scale(ri::<T>(2) * nt);
    let ydiff = (&rn.y.scale(nt - T::one()) - &rup.y.scale(nt)).scale(ri(4));
    let rhs2 = &(&b.get(ni) + &b.get(ni - 1).mul_left(&xdiff)) + &b.get(ni - 2).mul_left(&ydiff);
    let r2 = (&a.get(ni) - &rhs2).max_abs_coeff();
    debug_assert_eq!(a.get(ni).dim(), d);
    Ok((r1, r2))
}

/// `⟨P_n, P_m⟩` by exact quadrature.
pub fn gram<T: Real>(family: &MonicFamily<T>, n: usize, m: usize) -> Result<Mat<T>> {
    quadrature::pair(&family.polys[n], &family.polys[m], &family.params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{build_d, build_d_phi_psi, build_e, build_t_raising, eigen_d, eigen_e, k_diagonal};
    use crate::real::Extended;
    use crate::weight::{block_split, y_matrix};
    use num_traits::{Float, One};

    fn p(two_ell: usize, nu: f64) -> WeightParams<f64> {
        WeightParams::new(two_ell, nu).unwrap()
    }

    #[test]
    fn point_evaluation_matches_coefficients() {
        let q = p(3, 1.7);
        let fam = monic_family(&q, 9);
        for n in 0..=9 {
            for x in [-0.9, 0.0, 0.35, 1.0] {
                let want = fam.polys[n].eval(x);
                let got = eval_by_recurrence(&q, n, x);
                assert!((&got - &want).max_abs() < 1e-13 * (1.0 + want.max_abs()), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn first_step_spin_half() {
        let nu = 1.3;
        let pp = p(1, nu);
        let b = one_minus_two_x(&pp, 0);
        assert!(b[(0, 0)].abs() < 1e-16 && b[(1, 1)].abs() < 1e-16);
        assert!((b[(0, 1)] - 1.0 / (2.0 * (1.0 + nu))).abs() < 1e-15);
        assert!((b[(1, 0)] - 1.0 / (2.0 * (1.0 + nu))).abs() < 1e-15);
        let fam = monic_family(&pp, 1);
        let g = gram(&fam, 1, 0).unwrap();
        assert!(g.max_abs() < 1e-14);
    }

    #[test]
    fn y1_small_case() {
        let pp = p(1, 1.0);
        let y = recurrence_coefficients(&pp, 1).y;
        assert!((&y - &Mat::identity(2).scale(3.0 / 64.0)).max_abs() < 1e-16);
        // and the quadrature oracle Y_n = H_n H_{n-1}^{-1} / 4
        let fam = monic_family(&pp, 1);
        let h1 = gram(&fam, 1, 1).unwrap();
        let h0 = gram(&fam, 0, 0).unwrap();
        let oracle = (&h1 * &h0.inverse().unwrap()).scale(0.25);
        assert!((&oracle - &y).max_abs() < 1e-14);
    }

    #[test]
    fn orthogonality_and_norms() {
        for &l2 in &[1, 2, 3] {
            for &nu in &[0.6, 1.0, 2.5] {
                let pp = p(l2, nu);
                let fam = monic_family(&pp, 8);
                for n in 0..=8 {
                    for m in 0..=8 {
                        let g = gram(&fam, n, m).unwrap();
                        let h = &fam.norms[n.max(m)];
                        let hmax = h.max_abs();
                        if n == m {
                            for i in 0..=l2 {
                                for j in 0..=l2 {
                                    let want = if i == j { h[(i, i)] } else { 0.0 };
                                    assert!((g[(i, j)] - want).abs() <= 1e-9 * hmax, "2ℓ={l2} ν={nu} n={n}");
                                }
                            }
                        } else {
                            assert!(g.max_abs() <= 1e-9 * hmax, "2ℓ={l2} ν={nu} n={n} m={m}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn h0_closed_form() {
        let pp = p(3, 0.8);
        let h = norm_matrix(&pp, 0);
        let mass = gegenbauer_mass(0.8);
        for k in 0..4 {
            let want = (3.0 + 0.8) * mass * factorial::<f64>(k) * factorial::<f64>(3 - k) * pochhammer(1.8, 3)
                / (factorial::<f64>(3) * pochhammer(1.8, k) * pochhammer(1.8, 3 - k));
            assert!((h[(k, k)] - want).abs() < 1e-13 * want);
        }
    }

    #[test]
    fn y_is_norm_ratio() {
        let pp = p(4, 1.7);
        for n in 1..8 {
            let y = recurrence_coefficients(&pp, n).y;
            let r = (&norm_matrix(&pp, n) * &norm_matrix(&pp, n - 1).inverse().unwrap()).scale(0.25);
            assert!((&y - &r).max_abs() < 1e-14);
        }
    }

    #[test]
    fn eigenfunctions() {
        for &(l2, nu) in &[(1, 0.6), (2, 1.0), (3, 2.5)] {
            let pp = p(l2, nu);
            let fam = monic_family(&pp, 8);
            let (d, e, dpp) = (build_d(&pp), build_e(&pp).unwrap(), build_d_phi_psi(&pp));
            for n in 0..=8 {
                let pn = &fam.polys[n];
                let scale = pn.max_abs_coeff();
                let ld = pn.mul_left(&Mat::diag(&eigen_d(&pp, n)));
                let le = pn.mul_left(&Mat::diag(&eigen_e(&pp, n)));
                let lk = pn.mul_left(&Mat::diag(&k_diagonal(&pp, n))).scale(n as f64);
                assert!((&d.apply(pn).unwrap() - &ld).max_abs_coeff() < 1e-10 * scale * 100.0);
                assert!((&e.apply(pn).unwrap() - &le).max_abs_coeff() < 1e-10 * scale);
                assert!((&dpp.apply(pn).unwrap() - &lk).max_abs_coeff() < 1e-10 * scale * 100.0);
            }
        }
    }

    #[test]
    fn lowering_and_raising() {
        for &(l2, nu) in &[(1, 1.0), (2, 0.7), (3, 2.0)] {
            let pp = p(l2, nu);
            let a = monic_family(&pp, 6);
            let b = monic_family(&pp.shifted(1), 6);
            let t = build_t_raising(&pp);
            for n in 1..=6 {
                let lower = &a.polys[n].diff() - &b.polys[n - 1].scale(n as f64);
                assert!(lower.max_abs_coeff() < 1e-10 * a.polys[n].max_abs_coeff());
                let raised = t.apply(&b.polys[n - 1]).unwrap();
                let want = a.polys[n].mul_left(&Mat::diag(&k_diagonal(&pp, n)));
                assert!((&raised - &want).max_abs_coeff() < 1e-10 * want.max_abs_coeff());
            }
        }
    }

    #[test]
    fn rodrigues_matches_recurrence() {
        for &l2 in &[1, 2] {
            for &nu in &[0.6, 1.0, 2.0] {
                let pp = p(l2, nu);
                let fam = monic_family(&pp, 4);
                for n in 0..=4 {
                    let r = rodrigues(&pp, n).unwrap();
                    assert!((&r - &fam.polys[n]).max_abs_coeff() < 1e-8, "2ℓ={l2} ν={nu} n={n}");
                }
            }
        }
    }

    #[test]
    fn nu_shift() {
        for &(l2, nu, n) in &[(1, 1.0, 2), (2, 0.7, 3), (3, 2.0, 4), (2, 1.5, 1)] {
            let (a, b) = nu_shift_residuals(&p(l2, nu), n).unwrap();
            assert!(a < 1e-10 && b < 1e-10, "{l2} {nu} {n}: {a} {b}");
        }
        assert!(nu_shift_residuals(&p(1, 1.0), 0).is_err());
    }

    #[test]
    fn tail_limits() {
        let pp = p(3, 1.4);
        let mut cs = vec![];
        for n in [50, 100, 200] {
            let b = one_minus_two_x(&pp, n).max_abs();
            let y = (&recurrence_coefficients(&pp, n).y.scale(4.0) - &Mat::identity(4).scale(0.25)).max_abs();
            cs.push((b * n as f64, y * n as f64));
        }
        for w in cs.windows(2) {
            assert!(w[1].0 / w[0].0 < 2.0 && w[0].0 / w[1].0 < 2.0);
            assert!(w[1].1 / w[0].1 < 2.0 && w[0].1 / w[1].1 < 2.0);
        }
    }

    #[test]
    fn block_families_are_orthogonal() {
        // Y P_n Yᵗ is block diagonal and each block is orthogonal for its block weight
        let pp = p(3, 1.2);
        let fam = monic_family(&pp, 5);
        let y = y_matrix::<f64>(3);
        let split = block_split(&pp).unwrap();
        let blocks: Vec<_> = fam.polys.iter().map(|q| q.mul_left(&y).mul_right(&y.transpose())).collect();
        for b in &blocks {
            for k in 0..=b.degree().unwrap() {
                let c = b.coeff(k);
                for i in 0..4 {
                    for j in 0..4 {
                        if (i < 2) != (j < 2) {
                            assert!(c[(i, j)].abs() < 1e-12);
                        }
                    }
                }
            }
        }
        let rule = quadrature::gauss_rule(1.2, 12).unwrap();
        for n in 0..5 {
            let pn = blocks[n].principal_block(0, 2);
            let pm = blocks[n + 1].principal_block(0, 2);
            let mut acc = Mat::zeros(2, 2);
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                acc.axpy(w, &(&(&pn.eval(x) * &split.plus.eval(x)) * &pm.eval(x).transpose()));
            }
            assert!(acc.max_abs() < 1e-10);
        }
    }

    #[test]
    fn extended_family_orthogonal() {
        let pp = WeightParams::new(2, ratio::<Extended>(7, 5)).unwrap();
        let fam = monic_family(&pp, 6);
        let g = gram(&fam, 6, 3).unwrap();
        assert!(g.max_abs().f() < 1e-28);
        let h = gram(&fam, 6, 6).unwrap();
        assert!(((h[(1, 1)] / fam.norms[6][(1, 1)]) - Extended::one()).abs().f() < 1e-28);
    }
}
