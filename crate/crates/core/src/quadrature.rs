//! Gauss rules for `(1-x²)^(ν-1/2)` on `[-1,1]` and the matrix pairing
//! `⟨P,Q⟩ = ∫ P W Qᵗ dx`.

use std::sync::Arc;

use crate::cache;
use crate::error::{Error, Result};
use crate::linalg::{sym_tridiag_eigen, Mat};
use crate::matpoly::{MatrixPolynomial, Var};
use crate::params::{check_nu, WeightParams};
use crate::real::{ratio, ri, Real};
use crate::special::gegenbauer_mass;
use crate::weight;

#[derive(Clone, Debug)]
pub struct QuadratureRule<T> {
    pub nu: T,
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    /// Highest polynomial degree integrated exactly, `2N-1`.
    pub exact_degree: usize,
}

/// Recurrence coefficient `b_k` of the monic Gegenbauer family:
/// `x p_k = p_{k+1} + b_k p_{k-1}`.
fn monic_b<T: Real>(k: usize, nu: T) -> T {
    let kt: T = ri(k as i64);
    kt * (kt + nu + nu - T::one()) / (ri::<T>(4) * (kt + nu) * (kt + nu - T::one()))
}

/// `N`-point Gauss rule, cached per `(ν, N)`.
pub fn gauss_rule<T: Real>(nu: T, n: usize) -> Result<Arc<QuadratureRule<T>>> {
    check_nu(nu)?;
    if n == 0 {
        return Err(Error::InvalidParams("a Gauss rule needs at least one node".into()));
    }
    cache::get_or_build(format!("{}|{n}", nu.to_decimal(T::DIGITS + 2)), || build_rule(nu, n))
}

fn build_rule<T: Real>(nu: T, n: usize) -> Result<QuadratureRule<T>> {
    let diag = vec![T::zero(); n];
    let off: Vec<T> = (1..n).map(|k| monic_b(k, nu).sqrt()).collect();
    let (mut x, _) = sym_tridiag_eigen(&diag, &off)?;
    let mass = gegenbauer_mass(nu);

    // orthonormal values q_0..q_{n} at t; q_n vanishes at the nodes
    let orthonormal = |t: T| -> Vec<T> {
        let mut q = Vec::with_capacity(n + 1);
        q.push(T::one() / mass.sqrt());
        let mut prev = T::zero();
        for k in 0..n {
            let a_next = monic_b(k + 1, nu).sqrt();
            let a_k = if k == 0 { T::zero() } else { off[k - 1] };
            let next = (t * q[k] - a_k * prev) / a_next;
            prev = q[k];
            q.push(next);
        }
        q
    };

    // q_n and q_n' by the differentiated recurrence
    let top = |t: T| -> (T, T) {
        let (mut q, mut dq) = (T::one() / mass.sqrt(), T::zero());
        let (mut pq, mut pdq) = (T::zero(), T::zero());
        for k in 0..n {
            let a_next = monic_b(k + 1, nu).sqrt();
            let a_k = if k == 0 { T::zero() } else { off[k - 1] };
            let nq = (t * q - a_k * pq) / a_next;
            let ndq = (q + t * dq - a_k * pdq) / a_next;
            (pq, pdq, q, dq) = (q, dq, nq, ndq);
        }
        (q, dq)
    };
    for xi in x.iter_mut() {
        for _ in 0..3 {
            let (q, dq) = top(*xi);
            if dq.is_zero() {
                break;
            }
            let step = q / dq;
            *xi -= step;
            if step.abs() <= T::epsilon() * xi.abs().max(T::one()) {
                break;
            }
        }
    }

    let mut w: Vec<T> = x
        .iter()
        .map(|&t| {
            let q = orthonormal(t);
            T::one() / q[..n].iter().fold(T::zero(), |s, &v| s + v * v)
        })
        .collect();

    // enforce the reflection symmetry exactly
    let half = ratio::<T>(1, 2);
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let xs = (x[j] - x[i]) * half;
        let ws = (w[i] + w[j]) * half;
        x[i] = -xs;
        x[j] = xs;
        w[i] = ws;
        w[j] = ws;
    }
    if n % 2 == 1 {
        x[n / 2] = T::zero();
    }
    Ok(QuadratureRule { nu, nodes: x, weights: w, exact_degree: 2 * n - 1 })
}

impl<T: Real> QuadratureRule<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(x_i)`.
    pub fn integrate(&self, f: impl Fn(T) -> T) -> T {
        self.nodes.iter().zip(&self.weights).fold(T::zero(), |s, (&x, &w)| s + w * f(x))
    }
}

/// Smallest rule size exact for a pairing of degrees `deg_p`, `deg_q` under
/// a weight of size `2ℓ+1`.
pub fn auto_size(deg_p: usize, deg_q: usize, two_ell: usize) -> usize {
    (deg_p + deg_q + two_ell).div_ceil(2) + 1
}

/// `Σ_i w_i P(x_i) W_pol(x_i) Q(x_i)ᵗ` with the given rule.
pub fn pair_with<T: Real>(
    p: &MatrixPolynomial<T>,
    q: &MatrixPolynomial<T>,
    params: &WeightParams<T>,
    rule: &QuadratureRule<T>,
) -> Result<Mat<T>> {
    if p.dim() != params.dim() || q.dim() != params.dim() {
        return Err(Error::DimensionMismatch { left: params.dim(), right: p.dim().max(q.dim()) });
    }
    for m in [p, q] {
        if m.var() != Var::X {
            return Err(Error::VariableMismatch { left: Var::X, right: m.var() });
        }
    }
    if (rule.nu - params.nu).abs() > T::epsilon() * params.nu * ri(4) {
        return Err(Error::InvalidParams(format!("rule built for ν={} used with ν={}", rule.nu.f(), params.nu.f())));
    }
    let needed = p.degree().unwrap_or(0) + q.degree().unwrap_or(0) + params.two_ell;
    if rule.exact_degree < needed {
        return Err(Error::UnderResolved { needed, available: rule.exact_degree });
    }
    let w = weight::weight_pol(params)?;
    let d = params.dim();
    let mut acc = Mat::zeros(d, d);
    for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
        let term = &(&p.eval(x) * &w.eval(x)) * &q.eval(x).transpose();
        acc.axpy(wt, &term);
    }
    Ok(acc)
}

/// `⟨P,Q⟩^(ν)` with an automatically sized rule.
pub fn pair<T: Real>(p: &MatrixPolynomial<T>, q: &MatrixPolynomial<T>, params: &WeightParams<T>) -> Result<Mat<T>> {
    let n = auto_size(p.degree().unwrap_or(0), q.degree().unwrap_or(0), params.two_ell);
    let rule = gauss_rule(params.nu, n)?;
    pair_with(p, q, params, &rule)
}
