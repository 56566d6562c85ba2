//! Residual checks for every identity the crate implements, and the suites
//! that run them over a parameter grid.
//!
//! Residuals are reported as `f64`. Unless a check says otherwise a residual
//! is a largest absolute coefficient divided by `max(1, scale)`, where `scale`
//! is the largest coefficient of the quantity being compared.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::hyper;
use crate::linalg::Mat;
use crate::matpoly::{MatrixPolynomial, Var};
use crate::mvop::{self, monic_family, MonicFamily};
use crate::operators::{self, RightDifferentialOperator};
use crate::params::{format_ell, WeightParams};
use crate::quadrature::{self, gauss_rule};
use crate::racah;
use crate::real::{re, Real};
use crate::special::pochhammer;
use crate::weight;

fn rel<T: Real>(diff: T, scale: T) -> f64 {
    (diff / scale.max(T::one())).f()
}

fn poly_gap<T: Real>(a: &MatrixPolynomial<T>, b: &MatrixPolynomial<T>) -> Result<f64> {
    Ok(rel(a.max_abs_diff(b)?, a.max_abs_coeff().max(b.max_abs_coeff())))
}

// ---- weight ----

/// `W_pol - L diag(t_k(1-x²)^k) Lᵗ`, absolute.
pub fn ldu_residual<T: Real>(p: &WeightParams<T>) -> Result<f64> {
    let w = weight::weight_pol(p)?;
    Ok(w.max_abs_diff(&weight::ldu_factors(p)?.reconstruct())?.f())
}

/// Relative gap between the closed-form determinant and an LU determinant of
/// `W(x)`, worst over `grid`.
pub fn det_residual<T: Real>(p: &WeightParams<T>, grid: &[T]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &x in grid {
        let lu = weight::weight_at(p, x)?.det()?;
        let cf = weight::det_weight(p, x)?;
        worst = worst.max(((lu - cf) / cf).abs().f());
    }
    Ok(worst)
}

/// `(J W J - W, W F - F W(-x))`.
pub fn symmetry_residuals<T: Real>(p: &WeightParams<T>) -> Result<(f64, f64)> {
    let w = weight::weight_pol(p)?;
    let d = p.dim();
    let (j, f) = (weight::j_matrix::<T>(d), weight::f_matrix::<T>(d));
    let scale = w.max_abs_coeff();
    let pers = rel(w.mul_left(&j).mul_right(&j).max_abs_diff(&w)?, scale);
    let reflected = MatrixPolynomial::new(
        d,
        Var::X,
        w.coeffs().iter().enumerate().map(|(k, c)| if k % 2 == 0 { c.clone() } else { -c }).collect(),
    )?;
    let refl = rel(w.mul_right(&f).max_abs_diff(&reflected.mul_left(&f))?, scale);
    Ok((pers, refl))
}

/// Off-block size of `Y W Yᵗ` and, where a closed form exists, the gap to it.
pub fn block_residuals<T: Real>(p: &WeightParams<T>) -> Result<(f64, Option<f64>)> {
    let s = weight::block_split(p)?;
    let reference = match weight::reference_block(p) {
        Some((plus, want)) => Some(poly_gap(if plus { &s.plus } else { &s.minus }, &want)?),
        None => None,
    };
    Ok((s.off_block_max.f(), reference))
}

/// `L⁻¹ L - Id` with the closed-form inverse.
pub fn l_inverse_residual<T: Real>(p: &WeightParams<T>) -> Result<f64> {
    let l = weight::ldu_factors(p)?.l;
    let prod = weight::l_inverse_closed_form(p)?.try_mul(&l)?;
    poly_gap(&prod, &MatrixPolynomial::identity(p.dim(), Var::X))
}

// ---- operators ----

/// Random `d×d` matrix polynomial of degree `deg` with entries in `[-1, 1]`.
pub fn random_poly<T: Real>(rng: &mut ChaCha8Rng, d: usize, deg: usize) -> MatrixPolynomial<T> {
    let coeffs = (0..=deg).map(|_| Mat::from_fn(d, d, |_, _| re(rng.random_range(-1.0..1.0)))).collect();
    MatrixPolynomial::new(d, Var::X, coeffs).expect("consistent sizes")
}

/// Worst symmetry defect of `op` over `trials` random pairs of degree ≤ 3,
/// relative to the pairing size.
pub fn symmetry_defect_trials<T: Real>(
    op: &RightDifferentialOperator<T>,
    p: &WeightParams<T>,
    rng: &mut ChaCha8Rng,
    trials: usize,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (dp, dq) = (rng.random_range(0..=3usize), rng.random_range(0..=3usize));
        let a = random_poly::<T>(rng, p.dim(), dp);
        let b = random_poly::<T>(rng, p.dim(), dq);
        let scale = quadrature::pair(&op.apply(&a)?, &b, p)?.max_abs();
        worst = worst.max(rel(operators::symmetry_defect(op, &a, &b, p)?, scale));
    }
    Ok(worst)
}

/// Worst adjoint defect `⟨P′,Q⟩^(ν+1) + c⟨P, QT⟩^(ν)` over random pairs.
pub fn adjoint_defect_trials<T: Real>(p: &WeightParams<T>, rng: &mut ChaCha8Rng, trials: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (dp, dq) = (rng.random_range(1..=3usize), rng.random_range(0..=3usize));
        let a = random_poly::<T>(rng, p.dim(), dp);
        let b = random_poly::<T>(rng, p.dim(), dq);
        let scale = quadrature::pair(&a.diff(), &b, &p.shifted(1))?.max_abs();
        worst = worst.max(rel(operators::adjoint_defect(&a, &b, p)?, scale));
    }
    Ok(worst)
}

/// Pearson, `ν`-step and derivative-identity residuals.
pub fn pearson_family_residuals<T: Real>(p: &WeightParams<T>) -> Result<[f64; 3]> {
    let w = weight::weight_pol(p)?.max_abs_coeff();
    Ok([
        rel(operators::pearson_residual(p)?.poly.max_abs_coeff(), w),
        {
            let (a, b) = operators::nu_step_sides(p)?;
            rel(a.max_abs_diff(&b)?, w)
        },
        rel(operators::nu_step_derivative_residual(p)?.poly.max_abs_coeff(), w),
    ])
}

// ---- mvop ----

/// `P_n D - Λ_n(D)P_n` and `P_n E - Λ_n(E)P_n`, worst over the family.
pub fn eigen_residuals<T: Real>(fam: &MonicFamily<T>) -> Result<(f64, f64)> {
    let p = &fam.params;
    let (d, e) = (operators::build_d(p), operators::build_e(p)?);
    let (mut rd, mut re_) = (0.0f64, 0.0f64);
    for (n, pn) in fam.polys.iter().enumerate() {
        let ld = pn.mul_left(&Mat::diag(&operators::eigen_d(p, n)));
        let le = pn.mul_left(&Mat::diag(&operators::eigen_e(p, n)));
        rd = rd.max(poly_gap(&d.apply(pn)?, &ld)?);
        re_ = re_.max(poly_gap(&e.apply(pn)?, &le)?);
    }
    Ok((rd, re_))
}

/// `P_n′ - nP_{n-1}^(ν+1)` and `P_{n-1}^(ν+1)T - K_nP_n`, worst over `1..=n_max`.
pub fn lowering_raising_residuals<T: Real>(p: &WeightParams<T>, n_max: usize) -> Result<(f64, f64)> {
    let a = monic_family(p, n_max);
    let b = monic_family(&p.shifted(1), n_max);
    let t = operators::build_t_raising(p);
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for n in 1..=n_max {
        let nt: T = re(n as f64);
        lo = lo.max(poly_gap(&a.polys[n].diff(), &b.polys[n - 1].scale(nt))?);
        let want = a.polys[n].mul_left(&Mat::diag(&operators::k_diagonal(p, n)));
        hi = hi.max(poly_gap(&t.apply(&b.polys[n - 1])?, &want)?);
    }
    Ok((lo, hi))
}

/// Closed-form `H_n` against the quadrature Gram matrix, relative, and the
/// largest off-diagonal Gram block relative to the norms.
pub fn norm_residuals<T: Real>(fam: &MonicFamily<T>) -> Result<(f64, f64)> {
    let (mut diag, mut off) = (0.0f64, 0.0f64);
    for n in 0..fam.len() {
        let h = mvop::norm_matrix(&fam.params, n);
        let g = mvop::gram(fam, n, n)?;
        diag = diag.max((g.try_sub(&h)?.max_abs() / h.max_abs()).f());
        for m in 0..n {
            off = off.max((mvop::gram(fam, n, m)?.max_abs() / h.max_abs()).f());
        }
    }
    Ok((diag, off))
}

/// Rodrigues route against the recurrence, worst over `0..=n_max`.
pub fn rodrigues_residual<T: Real>(fam: &MonicFamily<T>, n_max: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 0..=n_max.min(fam.len() - 1) {
        worst = worst.max(fam.polys[n].max_abs_diff(&mvop::rodrigues(&fam.params, n)?)?.f());
    }
    Ok(worst)
}

/// Decay of `‖1-2X_n‖` and `‖4Y_n - ¼‖` at the given degrees.
#[derive(Clone, Debug, PartialEq)]
pub struct TailFit {
    pub ns: Vec<usize>,
    pub x_norms: Vec<f64>,
    pub y_norms: Vec<f64>,
}

impl TailFit {
    /// `C_n = n·‖·‖` for each sample.
    pub fn c_over_n(norms: &[f64], ns: &[usize]) -> Vec<f64> {
        norms.iter().zip(ns).map(|(v, &n)| v * n as f64).collect()
    }

    /// `max C_n / min C_n` for the `C/n` fit.
    pub fn spread(norms: &[f64], ns: &[usize]) -> f64 {
        let c = Self::c_over_n(norms, ns);
        c.iter().cloned().fold(0.0, f64::max) / c.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Least-squares slope of `log ‖·‖` against `log n`.
    pub fn log_slope(norms: &[f64], ns: &[usize]) -> f64 {
        let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
        let k = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        num / den
    }

    /// Whether `‖·‖_n ≤ C/n` holds at every sample with `C` fitted at the first.
    pub fn bound_holds(norms: &[f64], ns: &[usize]) -> bool {
        let c = norms[0] * ns[0] as f64;
        norms.iter().zip(ns).all(|(v, &n)| *v <= c / n as f64 * (1.0 + 1e-12))
    }
}

pub fn tail_fit<T: Real>(p: &WeightParams<T>, ns: &[usize]) -> TailFit {
    let quarter = Mat::identity(p.dim()).scale(re::<T>(0.25));
    let mut x_norms = Vec::new();
    let mut y_norms = Vec::new();
    for &n in ns {
        x_norms.push(mvop::one_minus_two_x(p, n).max_abs().f());
        let y = mvop::recurrence_coefficients(p, n).y.scale(re(4.0));
        y_norms.push((&y - &quarter).max_abs().f());
    }
    TailFit { ns: ns.to_vec(), x_norms, y_norms }
}

/// Quadrature checks: worst relative moment error up to degree `2N-1` over
/// several rule sizes, and the Chebyshev-U and 2-point Legendre closed forms.
pub fn quadrature_residuals<T: Real>(nu: T) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in [1usize, 2, 5, 12, 20] {
        let rule = gauss_rule(nu, n)?;
        for k in 0..2 * n {
            let got = rule.integrate(|x| x.powi(k as i32));
            // ∫x^{2m}(1-x²)^{ν-1/2} = mass·(1/2)_m/(ν+1)_m
            let want = if k % 2 == 1 {
                T::zero()
            } else {
                let m = k / 2;
                crate::special::gegenbauer_mass(nu) * pochhammer(re::<T>(0.5), m) / pochhammer(nu + T::one(), m)
            };
            worst = worst.max(((got - want).abs() / want.abs().max(T::one())).f());
        }
    }
    Ok(worst)
}

pub fn closed_form_rule_residuals<T: Real>() -> Result<(f64, f64)> {
    let pi = T::pi();
    let mut cheb = 0.0f64;
    for n in [1usize, 2, 5, 16, 40] {
        let r = gauss_rule(T::one(), n)?;
        let np1: T = re((n + 1) as f64);
        for k in 1..=n {
            let th = re::<T>((n + 1 - k) as f64) * pi / np1;
            let (x, w) = (th.cos(), pi / np1 * th.sin().powi(2));
            cheb = cheb.max((r.nodes[k - 1] - x).abs().f()).max((r.weights[k - 1] - w).abs().f());
        }
    }
    let r = gauss_rule(re::<T>(0.5), 2)?;
    let s = T::one() / re::<T>(3.0).sqrt();
    let leg = [
        (r.nodes[0] + s).abs(),
        (r.nodes[1] - s).abs(),
        (r.weights[0] - T::one()).abs(),
        (r.weights[1] - T::one()).abs(),
    ]
    .iter()
    .fold(0.0f64, |a, v| a.max(v.f()));
    Ok((cheb, leg))
}

// ---- hyper / racah ----

/// `₂H₁` route and Racah route against the recurrence, worst over `0..=n_max`.
pub fn route_residuals<T: Real>(fam: &MonicFamily<T>, alpha: T) -> Result<(f64, f64)> {
    let p = &fam.params;
    let (mut h, mut r) = (0.0f64, 0.0f64);
    for (n, pn) in fam.polys.iter().enumerate() {
        h = h.max(poly_gap(&hyper::p_n_2h1(p, alpha, n)?, pn)?);
        r = r.max(poly_gap(&racah::p_n_racah(p, n)?, pn)?);
    }
    Ok((h, r))
}

/// Gap between the `₂H₁` route at two values of `α`.
pub fn alpha_independence<T: Real>(p: &WeightParams<T>, a: T, b: T, n_max: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 0..=n_max {
        worst = worst.max(poly_gap(&hyper::p_n_2h1(p, a, n)?, &hyper::p_n_2h1(p, b, n)?)?);
    }
    Ok(worst)
}

/// Entrywise expansion against the recurrence; `None` at degenerate `ν`.
pub fn entries_residual<T: Real>(fam: &MonicFamily<T>) -> Result<Option<f64>> {
    let p = &fam.params;
    if racah::check_generic_nu(p, 0).is_err() {
        return Ok(None);
    }
    let mut worst = 0.0f64;
    for (n, pn) in fam.polys.iter().enumerate() {
        worst = worst.max(poly_gap(&racah::p_n_entries(p, n)?, pn)?);
    }
    Ok(Some(worst))
}

/// `𝒟` from conjugation against the diagonal closed form.
pub fn diagonal_residual<T: Real>(p: &WeightParams<T>) -> Result<f64> {
    let cd = racah::conjugated_d(p)?;
    let want = racah::DiagonalHyperOp::new(p).to_operator();
    let scale = (0..=want.order()).fold(T::zero(), |m, k| m.max(want.coeff(k).max_abs_coeff()));
    Ok(rel(cd.distance(&want)?, scale))
}

/// `ℰ𝒟 - 𝒟ℰ` on random inputs of degree 3, and `M⁻¹ẼM` against `S₁, S₀`.
pub fn e_residuals<T: Real>(p: &WeightParams<T>, rng: &mut ChaCha8Rng, trials: usize) -> Result<(f64, f64)> {
    let cd = racah::DiagonalHyperOp::new(p).to_operator();
    let ce = racah::build_e_conjugated(p)?;
    let mut comm = 0.0f64;
    for _ in 0..trials {
        let g = random_poly::<T>(rng, p.dim(), 3).relabel(Var::U);
        comm = comm.max(poly_gap(&ce.apply(&cd.apply(&g)?)?, &cd.apply(&ce.apply(&g)?)?)?);
    }
    let conj = racah::conjugate_by_m(&hyper::build_e_tilde(p)?, &racah::build_m(p)?)?;
    Ok((comm, conj.distance(&ce)?.f()))
}

/// `c_k N(λ_n(k)) - μ_n(k)c_k`, worst over `k` and `0..=n_max`.
pub fn n_eigen_residual<T: Real>(p: &WeightParams<T>, n_max: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 0..=n_max {
        let rc = racah::racah_coefficients(p, n)?;
        let lam = racah::eigen_cal_d(p, n);
        for (k, &l) in lam.iter().enumerate() {
            let lhs = Mat::vec_mul(rc.row(k), &racah::n_matrix(p, l)?);
            let mu = racah::mu(p, n, k);
            let scale = rc.row(k).iter().fold(T::zero(), |a, v| a.max(v.abs()));
            let gap = lhs.iter().zip(rc.row(k)).fold(T::zero(), |a, (&x, &c)| a.max((x - mu * c).abs()));
            worst = worst.max(rel(gap, scale));
        }
    }
    Ok(worst)
}

/// For `c_{k,0}`, against `ℛ_n(0)_{k,0}` from the recurrence route: whether
/// every sign is `(-1)^n`, the largest relative gap of `|ℛ_n(0)_{k,0}|` to
/// the square root of the modulus display, and the largest relative gap to the closed form.
pub fn c_k0_checks<T: Real>(fam: &MonicFamily<T>) -> Result<(bool, f64, f64)> {
    let p = &fam.params;
    let m = racah::build_m(p)?;
    let (mut signs, mut modulus, mut value) = (true, 0.0f64, 0.0f64);
    for (n, pn) in fam.polys.iter().enumerate() {
        let r0 = hyper::r_from_p(pn, n).try_mul(&m)?.eval(T::zero());
        for k in 0..p.dim() {
            let (got, c) = (r0[(k, 0)], racah::c_k0(p, n, k));
            signs &= (got > T::zero()) == (n % 2 == 0);
            let m = racah::c_k0_modulus_sq(p, n, k).sqrt();
            modulus = modulus.max(((got.abs() - m) / m).abs().f());
            value = value.max(((got - c) / c).abs().f());
        }
    }
    Ok((signs, modulus, value))
}

/// Worst relative leading-coefficient sum for `k > i`, `n ≤ n_max`.
pub fn vanishing_residual<T: Real>(p: &WeightParams<T>, n_max: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 0..=n_max {
        for k in 1..=p.two_ell {
            for i in 0..k {
                let (s, scale) = racah::vanishing_sum(p, n, k, i)?;
                worst = worst.max(rel(s.abs(), scale));
            }
        }
    }
    Ok(worst)
}

/// Racah orthogonality against the displayed norm, `N ≤ n_max`; `None` at
/// `ν = ½` where the weight has a removable `0/0`.
pub fn racah_orthogonality_residual<T: Real>(p: &WeightParams<T>, n_max: usize) -> Result<Option<f64>> {
    if (p.nu - re(0.5)).abs() < re(1e-6) {
        return Ok(None);
    }
    let mut worst = 0.0f64;
    for big_n in 0..=n_max {
        let top = p.two_ell.min(big_n);
        for k in 0..=top {
            let h = racah::racah_norm(p, big_n, k);
            for i in 0..=top {
                let s = racah::racah_orthogonality_sum(p, big_n, k, i)?;
                let want = if i == k { h } else { T::zero() };
                worst = worst.max(rel((s - want).abs(), h.abs()));
            }
        }
    }
    Ok(Some(worst))
}

// ---- suites and reports ----

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    Weight,
    Operators,
    Mvop,
    Hyper,
    Racah,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Weight, Suite::Operators, Suite::Mvop, Suite::Hyper, Suite::Racah];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Weight => "weight",
            Suite::Operators => "operators",
            Suite::Mvop => "mvop",
            Suite::Hyper => "hyper",
            Suite::Racah => "racah",
        }
    }

    /// Parses a suite name; `"all"` expands to every suite.
    pub fn parse_list(s: &str) -> Result<Vec<Suite>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if part == "all" {
                out.extend(Suite::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::Parse("no suite selected".into()));
        }
        Ok(out)
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            Error::Parse(format!("unknown suite {s:?}; expected weight, operators, mvop, hyper, racah or all"))
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    /// Largest `2ℓ` on the grid (from 1).
    pub two_ell_max: usize,
    pub nus: Vec<f64>,
    pub n_max: usize,
    pub seed: u64,
    /// Replaces every case tolerance when set.
    pub tol: Option<f64>,
    /// Random pairs per `(ℓ, ν)` for the pairing checks.
    pub trials: usize,
    /// Worker threads; 0 means the rayon default.
    pub threads: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            two_ell_max: 3,
            nus: vec![0.5, 1.0, 2.3, 5.0],
            n_max: 6,
            seed: 0,
            tol: None,
            trials: 50,
            threads: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub id: String,
    pub params: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub suite: String,
    pub precision: &'static str,
    pub seed: u64,
    pub cases: Vec<Case>,
    pub wall_time_s: f64,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Case> {
        self.cases.iter().filter(|c| !c.pass)
    }

    /// JSON form. Wall time is left out unless asked for, so that a fixed
    /// seed and config give byte-identical output.
    pub fn to_json(&self, with_timing: bool) -> Value {
        let cases: Vec<Value> = self
            .cases
            .iter()
            .map(|c| {
                let mut v = json!({
                    "id": c.id,
                    "params": c.params,
                    "residual": crate::matpoly::number(c.residual, 17),
                    "tol": c.tol,
                    "pass": c.pass,
                });
                if let Some(n) = &c.note {
                    v["note"] = json!(n);
                }
                v
            })
            .collect();
        let mut out = json!({
            "suite": self.suite,
            "precision": self.precision,
            "seed": self.seed,
            "pass": self.passed(),
            "cases": cases,
        });
        if with_timing {
            out["wall_time_s"] = json!(self.wall_time_s);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("suite,id,params,residual,tol,pass\n");
        for c in &self.cases {
            s.push_str(&format!(
                "{},{},\"{}\",{:.12e},{:e},{}\n",
                self.suite, c.id, c.params, c.residual, c.tol, c.pass
            ));
        }
        s
    }
}

struct Recorder<'a> {
    params: String,
    tol: Option<f64>,
    cases: &'a mut Vec<Case>,
}

impl Recorder<'_> {
    fn check(&mut self, id: &str, r: Result<f64>, tol: f64) {
        let tol = self.tol.unwrap_or(tol);
        let case = match r {
            Ok(v) => Case { id: id.into(), params: self.params.clone(), residual: v, tol, pass: v <= tol, note: None },
            Err(e) => Case {
                id: id.into(),
                params: self.params.clone(),
                residual: f64::INFINITY,
                tol,
                pass: false,
                note: Some(e.to_string()),
            },
        };
        self.cases.push(case);
    }

    fn flag(&mut self, id: &str, r: Result<bool>, note: &str) {
        let (pass, note) = match r {
            Ok(b) => (b, (!b).then(|| note.to_string())),
            Err(e) => (false, Some(e.to_string())),
        };
        let residual = if pass { 0.0 } else { 1.0 };
        self.cases.push(Case { id: id.into(), params: self.params.clone(), residual, tol: 0.0, pass, note });
    }
}

/// Seed for one work item, independent of scheduling order.
fn item_seed(seed: u64, suite: Suite, two_ell: usize, nu: f64) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in [suite as u64, two_ell as u64, nu.to_bits()] {
        h = (h ^ v).wrapping_mul(0x1000_0000_01b3).rotate_left(29);
    }
    h
}

fn run_item<T: Real>(suite: Suite, two_ell: usize, nu: f64, cfg: &VerifyConfig) -> Vec<Case> {
    let mut cases = Vec::new();
    let params = format!("ℓ={} ν={}", format_ell(two_ell), nu);
    let mut rec = Recorder { params, tol: cfg.tol, cases: &mut cases };
    let p = match WeightParams::new(two_ell, re::<T>(nu)) {
        Ok(p) => p,
        Err(e) => {
            rec.check("params", Err(e), 0.0);
            return cases;
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(item_seed(cfg.seed, suite, two_ell, nu));
    let scale = two_ell as f64 / 2.0 + nu;
    match suite {
        Suite::Weight => {
            rec.check("ldu_reconstruction", ldu_residual(&p), 1e-10 * (1.0 + scale));
            rec.check("determinant", det_residual(&p, &weight::interior_grid(21)), 1e-9);
            match symmetry_residuals(&p) {
                Ok((a, b)) => {
                    rec.check("persymmetry_J", Ok(a), 1e-12);
                    rec.check("reflection_F", Ok(b), 1e-12);
                }
                Err(e) => rec.check("persymmetry_J", Err(e), 1e-12),
            }
            match block_residuals(&p) {
                Ok((off, r)) => {
                    rec.check("block_split_off_blocks", Ok(off), 1e-11);
                    if let Some(r) = r {
                        rec.check("small_spin_block", Ok(r), 1e-12);
                    }
                }
                Err(e) => rec.check("block_split_off_blocks", Err(e), 1e-11),
            }
            if (nu - 0.5).abs() > 1e-6 {
                rec.check("l_inverse_closed_form", l_inverse_residual(&p), 1e-10);
            }
            let pos = weight::positivity_check(&p, &weight::interior_grid(41)).map(|r| r.all_positive);
            rec.flag("positive_definite", pos, "non-positive pivot on the grid");
        }
        Suite::Operators => {
            rec.check("symmetry_D", symmetry_defect_trials(&operators::build_d(&p), &p, &mut rng, cfg.trials), 1e-9);
            let e = operators::build_e(&p);
            rec.check("symmetry_E", e.and_then(|e| symmetry_defect_trials(&e, &p, &mut rng, cfg.trials)), 1e-9);
            match operators::symmetry_equations(&p) {
                Ok(s) => {
                    let w = weight::weight_pol(&p).map(|w| w.max_abs_coeff()).unwrap_or(T::one());
                    for (name, v) in ["sym_E1", "sym_E2", "sym_Z1", "sym_Z2"].iter().zip(s.max_abs()) {
                        rec.check(name, Ok(rel(v, w)), 1e-10);
                    }
                }
                Err(e) => rec.check("sym_E1", Err(e), 1e-10),
            }
            match pearson_family_residuals(&p) {
                Ok(r) => {
                    for (name, v) in ["pearson", "nu_step", "nu_step_derivative"].iter().zip(r) {
                        rec.check(name, Ok(v), 1e-10);
                    }
                }
                Err(e) => rec.check("pearson", Err(e), 1e-10),
            }
            rec.check("darboux", operators::darboux_residual(&p).map(|v| v.f()), 1e-9);
            rec.check("adjoint_T", adjoint_defect_trials(&p, &mut rng, cfg.trials.min(20)), 1e-9);
        }
        Suite::Mvop => {
            let fam = monic_family(&p, cfg.n_max);
            match eigen_residuals(&fam) {
                Ok((d, e)) => {
                    rec.check("eigen_D", Ok(d), 1e-10);
                    rec.check("eigen_E", Ok(e), 1e-10);
                }
                Err(e) => rec.check("eigen_D", Err(e), 1e-10),
            }
            match lowering_raising_residuals(&p, cfg.n_max.clamp(1, 6)) {
                Ok((lo, hi)) => {
                    rec.check("lowering", Ok(lo), 1e-10);
                    rec.check("raising_K", Ok(hi), 1e-10);
                }
                Err(e) => rec.check("lowering", Err(e), 1e-10),
            }
            match norm_residuals(&fam) {
                Ok((d, o)) => {
                    rec.check("norms_vs_gram", Ok(d), 1e-9);
                    rec.check("orthogonality", Ok(o), 1e-9);
                }
                Err(e) => rec.check("norms_vs_gram", Err(e), 1e-9),
            }
            if two_ell <= 2 {
                rec.check("rodrigues", rodrigues_residual(&fam, cfg.n_max.min(4)), 1e-8);
            }
            let nu_shift = (1..=cfg.n_max.min(5))
                .try_fold(0.0f64, |a, n| mvop::nu_shift_residuals(&p, n).map(|(x, y)| a.max(x.f()).max(y.f())));
            rec.check("nu_shift", nu_shift, 1e-9);
            rec.check("quadrature_moments", quadrature_residuals(p.nu), 1e-12);
        }
        Suite::Hyper => {
            let fam = monic_family(&p, cfg.n_max.min(5));
            let alpha = hyper::default_alpha::<T>();
            rec.check("route_2h1_vs_recurrence", route_residuals(&fam, alpha).map(|r| r.0), 1e-8);
            let other = T::one() / T::pi();
            rec.check("alpha_independence", alpha_independence(&p, alpha, other, cfg.n_max.min(5)), 1e-9);
            let sub = (1..=cfg.n_max.min(5)).try_fold(0.0f64, |a, n| {
                let want = fam.polys[n].coeff(n - 1);
                let got = hyper::r_from_p(&fam.polys[n], n).coeff(n - 1);
                let c = hyper::subleading_coefficient(&p, n)?;
                Ok::<f64, Error>(a.max(rel(c.try_sub(&got)?.max_abs(), want.max_abs())))
            });
            rec.check("subleading_coefficient", sub, 1e-9);
        }
        Suite::Racah => {
            let n_max = cfg.n_max.min(5);
            let fam = monic_family(&p, n_max);
            rec.check("diagonal_operator", diagonal_residual(&p), 1e-9);
            match e_residuals(&p, &mut rng, 10) {
                Ok((c, s)) => {
                    rec.check("E_commutes_D", Ok(c), 1e-9);
                    rec.check("E_conjugated_display", Ok(s), 1e-9);
                }
                Err(e) => rec.check("E_commutes_D", Err(e), 1e-9),
            }
            rec.check("N_eigenvector", n_eigen_residual(&p, n_max), 1e-9);
            match c_k0_checks(&fam) {
                Ok((s, m, v)) => {
                    rec.flag("c_k0_sign", Ok(s), "sign of c_{k,0} differs from (-1)^n");
                    rec.check("c_k0_modulus", Ok(m), 1e-12);
                    rec.check("c_k0_vs_recurrence", Ok(v), 1e-9);
                }
                Err(e) => rec.check("c_k0_sign", Err(e), 0.0),
            }
            rec.check("vanishing_sum", vanishing_residual(&p, n_max.min(4)), 1e-10);
            rec.check("route_racah_vs_recurrence", route_residuals(&fam, hyper::default_alpha()).map(|r| r.1), 1e-9);
            match entries_residual(&fam) {
                Ok(Some(v)) => rec.check("entries_expansion", Ok(v), 1e-8),
                Ok(None) => {}
                Err(e) => rec.check("entries_expansion", Err(e), 1e-8),
            }
            match racah_orthogonality_residual(&p, n_max) {
                Ok(Some(v)) => rec.check("racah_orthogonality", Ok(v), 1e-10),
                Ok(None) => {}
                Err(e) => rec.check("racah_orthogonality", Err(e), 1e-10),
            }
        }
    }
    if suite == Suite::Mvop && cfg.n_max >= 1 {
        // grid-independent pieces run once per ν, on the smallest ℓ
        if two_ell == 1 && nu == cfg.nus[0] {
            match closed_form_rule_residuals::<T>() {
                Ok((c, l)) => {
                    rec.check("chebyshev_u_rule", Ok(c), 1e-13);
                    rec.check("legendre_2pt_rule", Ok(l), 1e-13);
                }
                Err(e) => rec.check("chebyshev_u_rule", Err(e), 1e-13),
            }
        }
    }
    cases
}

/// Runs `suite` over `2ℓ ∈ 1..=two_ell_max`, `ν ∈ nus` on a bounded pool.
pub fn run_suite<T: Real>(suite: Suite, cfg: &VerifyConfig) -> Result<VerificationReport> {
    if cfg.nus.is_empty() || cfg.two_ell_max == 0 {
        return Err(Error::InvalidParams("verification grid is empty".into()));
    }
    for &nu in &cfg.nus {
        crate::params::check_nu(nu)?;
    }
    let start = Instant::now();
    let items: Vec<(usize, f64)> = (1..=cfg.two_ell_max).flat_map(|l| cfg.nus.iter().map(move |&nu| (l, nu))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    let per_item: Vec<Vec<Case>> =
        pool.install(|| items.par_iter().map(|&(l, nu)| run_item::<T>(suite, l, nu, cfg)).collect());
    Ok(VerificationReport {
        suite: suite.name().into(),
        precision: T::NAME,
        seed: cfg.seed,
        cases: per_item.into_iter().flatten().collect(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
