//! Scalar kernels: shifted factorials, Γ-ratios, terminating hypergeometric
//! sums, Gegenbauer and Jacobi polynomials, and the Racah-type ₄F₃.

use crate::error::{Error, Result};
use crate::params::WeightParams;
use crate::real::{ratio, re, ri, Real};

/// Shifted factorial `(a)_k = a(a+1)…(a+k-1)`, with `(a)_0 = 1`.
pub fn pochhammer<T: Real>(a: T, k: usize) -> T {
    let mut p = T::one();
    let mut t = a;
    for _ in 0..k {
        p *= t;
        t += T::one();
    }
    p
}

pub fn factorial<T: Real>(n: usize) -> T {
    pochhammer(T::one(), n)
}

pub fn binomial<T: Real>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    let mut b = T::one();
    for i in 0..k {
        b = b * ri((n - i) as i64) / ri((i + 1) as i64);
    }
    b.round()
}

// B_{2k} for k = 1..15 as exact fractions.
const BERNOULLI: [(i64, i64); 15] = [
    (1, 6),
    (-1, 30),
    (1, 42),
    (-1, 30),
    (5, 66),
    (-691, 2730),
    (7, 6),
    (-3617, 510),
    (43867, 798),
    (-174611, 330),
    (854513, 138),
    (-236364091, 2730),
    (8553103, 6),
    (-23749461029, 870),
    (8615841276005, 14322),
];

/// `ln Γ(A) - ln Γ(B)` for large positive `A`, `B` by the Stirling series,
/// arranged so that nearby arguments do not cancel catastrophically.
fn stirling_lgamma_diff<T: Real>(a: T, b: T) -> T {
    let half = ratio::<T>(1, 2);
    let delta = a - b;
    let mut s = (b - half) * (delta / b).ln_1p() + delta * a.ln() - delta;
    let (ia, ib) = (a.recip(), b.recip());
    let (ia2, ib2) = (ia * ia, ib * ib);
    let (mut pa, mut pb) = (ia, ib);
    for (k, &(num, den)) in BERNOULLI.iter().enumerate() {
        let two_k = 2 * (k as i64 + 1);
        let c = ri::<T>(num) / (ri::<T>(den) * ri(two_k * (two_k - 1)));
        s += c * (pa - pb);
        pa *= ia2;
        pb *= ib2;
    }
    s
}

/// `Γ(a)/Γ(b)` for `a, b > 0`.
///
/// Both arguments are shifted upward by the same integer until the Stirling
/// series is accurate to the backend's precision; the shift is undone with
/// Pochhammer products.
pub fn gamma_ratio<T: Real>(a: T, b: T) -> T {
    assert!(a > T::zero() && b > T::zero(), "gamma_ratio needs positive arguments");
    let z0: T = re(40.0);
    let lo = a.min(b);
    let shift = if lo < z0 { (z0 - lo).ceil().to_usize().unwrap_or(0) } else { 0 };
    let k: T = ri(shift as i64);
    let log_ratio = stirling_lgamma_diff(a + k, b + k);
    log_ratio.exp() * pochhammer(b, shift) / pochhammer(a, shift)
}

/// Total mass `∫(1-x²)^(ν-1/2) dx = √π Γ(ν+1/2)/Γ(ν+1)`.
pub fn gegenbauer_mass<T: Real>(nu: T) -> T {
    T::pi().sqrt() * gamma_ratio(nu + ratio(1, 2), nu + T::one())
}

/// Description of a terminating generalized hypergeometric series
/// `pFq(num; den; z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TerminatingSeries<T> {
    pub num: Vec<T>,
    pub den: Vec<T>,
    pub z: T,
    /// Index into `num` of the parameter `-N` that fixes the length `N+1`.
    pub terminator: usize,
}

impl<T: Real> TerminatingSeries<T> {
    pub fn new(num: Vec<T>, den: Vec<T>, z: T, terminator: usize) -> Result<Self> {
        let s = TerminatingSeries { num, den, z, terminator };
        s.length()?;
        Ok(s)
    }

    /// The index `N` of the last term.
    pub fn length(&self) -> Result<usize> {
        let a = *self.num.get(self.terminator).ok_or_else(|| {
            Error::Index(format!("terminator {} of {} numerator parameters", self.terminator, self.num.len()))
        })?;
        let r = a.round();
        if a > T::zero() || (a - r).abs() > re::<T>(1e-9) * (T::one() + a.abs()) {
            return Err(Error::Domain(format!("terminating parameter {} is not a nonpositive integer", a.f())));
        }
        Ok((-r).to_usize().unwrap_or(0))
    }

    /// Sum of the `N+1` terms, accumulated with term ratios.
    pub fn eval(&self) -> Result<T> {
        let n = self.length()?;
        let mut term = T::one();
        let mut sum = T::one();
        for k in 0..n {
            let kt: T = ri(k as i64);
            let mut r = self.z / ri((k + 1) as i64);
            for &a in &self.num {
                r *= a + kt;
            }
            for &b in &self.den {
                let bk = b + kt;
                if is_zero_pochhammer_factor(b, bk) {
                    return Err(Error::Domain(format!(
                        "denominator Pochhammer ({})_{} vanishes before termination at N={n}",
                        b.f(),
                        k + 1
                    )));
                }
                r /= bk;
            }
            term *= r;
            sum += term;
        }
        Ok(sum)
    }
}

fn is_zero_pochhammer_factor<T: Real>(b: T, bk: T) -> bool {
    bk.abs() <= re::<T>(64.0 * T::unit_roundoff()) * (T::one() + b.abs())
}

/// Evaluates a terminating series described by `series`.
pub fn hyp_terminating<T: Real>(series: &TerminatingSeries<T>) -> Result<T> {
    series.eval()
}

/// Coefficients `t^k`, `k = 0..=m`, of `₂F₁(-m, b; c; t)`.
pub fn hyp2f1_poly<T: Real>(m: usize, b: T, c: T) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(m + 1);
    let mut term = T::one();
    out.push(term);
    let mt: T = ri(m as i64);
    for k in 0..m {
        let kt: T = ri(k as i64);
        let ck = c + kt;
        if is_zero_pochhammer_factor(c, ck) {
            return Err(Error::Domain(format!(
                "denominator Pochhammer ({})_{} vanishes before termination at N={m}",
                c.f(),
                k + 1
            )));
        }
        term = term * (kt - mt) * (b + kt) / (ck * ri((k + 1) as i64));
        out.push(term);
    }
    Ok(out)
}

/// Re-expands `Σ a_k t^k` with `t = (1-x)/2` in powers of `x`.
pub fn half_one_minus_x_to_x<T: Real>(a: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len()];
    // (1-x)^k / 2^k = Σ_j C(k,j) (-x)^j / 2^k
    let mut scale = T::one();
    for (k, &ak) in a.iter().enumerate() {
        if k > 0 {
            scale /= ri(2);
        }
        let mut c = T::one();
        for j in 0..=k {
            let sign = if j % 2 == 0 { T::one() } else { -T::one() };
            out[j] += ak * scale * c * sign;
            c = c * ri((k - j) as i64) / ri((j + 1) as i64);
        }
    }
    out
}

/// `C_n^(λ)(x)`.
///
/// For `λ > 0` the three-term recurrence is used. Otherwise the value is the
/// terminating form `(2λ)_n/n! ₂F₁(-n, n+2λ; λ+1/2; (1-x)/2)`; if that form
/// degenerates (the prefactor vanishes or a denominator Pochhammer does) a
/// domain error is returned rather than picking a limiting convention.
pub fn gegenbauer<T: Real>(n: usize, lambda: T, x: T) -> Result<T> {
    if n == 0 {
        return Ok(T::one());
    }
    if lambda > T::zero() {
        return Ok(gegenbauer_recurrence(n, lambda, x));
    }
    let pre = generic_prefactor(n, lambda)?;
    let series = TerminatingSeries::new(
        vec![-ri::<T>(n as i64), ri::<T>(n as i64) + lambda + lambda],
        vec![lambda + ratio(1, 2)],
        (T::one() - x) / ri(2),
        0,
    )?;
    Ok(pre * series.eval()?)
}

fn generic_prefactor<T: Real>(n: usize, lambda: T) -> Result<T> {
    let two = lambda + lambda;
    let mut p = T::one();
    for i in 0..n {
        let f = two + ri(i as i64);
        if is_zero_pochhammer_factor(two, f) {
            return Err(Error::Domain(format!(
                "C_{n}^({}) is degenerate: (2λ)_{n} vanishes; the limiting convention is not supported",
                lambda.f()
            )));
        }
        p = p * f / ri((i + 1) as i64);
    }
    Ok(p)
}

/// Three-term recurrence for `λ > 0` (also fine for any `λ` where it is defined).
pub fn gegenbauer_recurrence<T: Real>(n: usize, lambda: T, x: T) -> T {
    let mut prev = T::one();
    if n == 0 {
        return prev;
    }
    let two_x = x + x;
    let mut cur = two_x * lambda;
    for r in 1..n {
        let rt: T = ri(r as i64);
        let next = (two_x * (rt + lambda) * cur - (rt + lambda + lambda - T::one()) * prev) / (rt + T::one());
        prev = cur;
        cur = next;
    }
    cur
}

/// Power-basis coefficients of `C_n^(λ)(x)`, lowest degree first.
///
/// `λ > 0` runs the recurrence on coefficient vectors; other `λ` go through
/// the ₂F₁ form with the same degeneracy checks as [`gegenbauer`].
pub fn gegenbauer_coeffs<T: Real>(n: usize, lambda: T) -> Result<Vec<T>> {
    if n == 0 {
        return Ok(vec![T::one()]);
    }
    if lambda > T::zero() {
        let mut prev = vec![T::one()];
        let mut cur = vec![T::zero(), lambda + lambda];
        for r in 1..n {
            let rt: T = ri(r as i64);
            let a = (rt + lambda) * ri(2) / (rt + T::one());
            let b = (rt + lambda + lambda - T::one()) / (rt + T::one());
            let mut next = vec![T::zero(); r + 2];
            for (i, &c) in cur.iter().enumerate() {
                next[i + 1] += a * c;
            }
            for (i, &c) in prev.iter().enumerate() {
                next[i] -= b * c;
            }
            prev = cur;
            cur = next;
        }
        return Ok(cur);
    }
    let pre = generic_prefactor(n, lambda)?;
    let t = hyp2f1_poly(n, ri::<T>(n as i64) + lambda + lambda, lambda + ratio(1, 2))?;
    Ok(half_one_minus_x_to_x(&t).into_iter().map(|c| c * pre).collect())
}

/// `‖C_n^(ν)‖² = (2ν)_n √π Γ(ν+1/2) / (n! (n+ν) Γ(ν))` against `(1-x²)^(ν-1/2)`.
pub fn gegenbauer_norm<T: Real>(n: usize, nu: T) -> T {
    let nt: T = ri(n as i64);
    pochhammer(nu + nu, n) / factorial::<T>(n) * nu / (nt + nu) * gegenbauer_mass(nu)
}

/// Jacobi polynomial `P_n^(α,β)(x)` in the standard normalization.
pub fn jacobi<T: Real>(n: usize, a: T, b: T, x: T) -> T {
    let one = T::one();
    let two: T = ri(2);
    let mut prev = one;
    if n == 0 {
        return prev;
    }
    let mut cur = (a - b) / two + (a + b + two) * x / two;
    for k in 1..n {
        let kt: T = ri(k as i64);
        let s = two * kt + a + b;
        let c1 = two * (kt + one) * (kt + a + b + one) * s;
        let c2 = (s + one) * (a * a - b * b);
        let c3 = s * (s + one) * (s + two);
        let c4 = two * (kt + a) * (kt + b) * (s + two);
        let next = ((c2 + c3 * x) * cur - c4 * prev) / c1;
        prev = cur;
        cur = next;
    }
    cur
}

/// The balanced ₄F₃
/// `(−j, j+2ν−1, −k, −n−ν−2ℓ; ν, −n−k, −2ℓ; 1)`,
/// summed over exactly `min(j,k)+1` terms.
pub fn racah_4f3<T: Real>(j: usize, k: usize, params: &WeightParams<T>, n: usize) -> Result<T> {
    let two_ell = params.two_ell;
    if k > two_ell {
        return Err(Error::Index(format!("k={k} exceeds 2ℓ={two_ell}")));
    }
    if j > two_ell.min(n + k) {
        return Err(Error::Index(format!("j={j} exceeds min(2ℓ, n+k)={}", two_ell.min(n + k))));
    }
    let nu = params.nu;
    let jt: T = ri(j as i64);
    let kt: T = ri(k as i64);
    let nt: T = ri(n as i64);
    let tl = params.two_ell_t();
    let terminator = if j <= k { 0 } else { 2 };
    let series = TerminatingSeries::new(
        vec![-jt, jt + nu + nu - T::one(), -kt, -nt - nu - tl],
        vec![nu, -nt - kt, -tl],
        T::one(),
        terminator,
    )?;
    // (−n−k)_i and (−2ℓ)_i are nonzero for i ≤ min(j,k) by the bounds above
    series.eval()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::Extended;
    use num_traits::Float;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn pochhammer_basics() {
        assert_eq!(pochhammer(3.7_f64, 0), 1.0);
        assert_eq!(pochhammer(1.0_f64, 3), 6.0);
        assert_eq!(pochhammer(-2.0_f64, 4), 0.0);
        assert_eq!(binomial::<f64>(6, 2), 15.0);
        assert_eq!(binomial::<f64>(3, 5), 0.0);
    }

    #[test]
    fn gamma_ratio_half_integers() {
        // Γ(3/2)/Γ(2) = √π/2, Γ(1)/Γ(1/2) = 1/√π
        let pi = std::f64::consts::PI;
        assert!(close(gamma_ratio(1.5, 2.0), pi.sqrt() / 2.0, 1e-15));
        assert!(close(gamma_ratio(1.0, 0.5), 1.0 / pi.sqrt(), 1e-15));
        // Γ(7)/Γ(4) = 120
        assert!(close(gamma_ratio(7.0, 4.0), 120.0, 1e-14));
        // large nearly equal arguments
        assert!(close(gamma_ratio(1000.5, 1000.0), 31.618824001815913, 1e-13));
    }

    #[test]
    fn gamma_ratio_extended() {
        let v: Extended = gamma_ratio(re::<Extended>(1.5), re::<Extended>(2.0));
        let r = Extended::pi().sqrt() / re::<Extended>(2.0);
        assert!(((v - r) / r).abs().f() < 1e-32, "{:?}", v - r);
        let m: Extended = gegenbauer_mass(re::<Extended>(1.0));
        let r = Extended::pi() / re::<Extended>(2.0);
        assert!(((m - r) / r).abs().f() < 1e-29);
    }

    #[test]
    fn masses() {
        assert!(close(gegenbauer_mass(1.0), std::f64::consts::FRAC_PI_2, 1e-15));
        assert!(close(gegenbauer_mass(0.5), 2.0, 1e-15));
    }

    #[test]
    fn gegenbauer_small_cases() {
        assert_eq!(gegenbauer(0, 0.7, 0.3).unwrap(), 1.0);
        assert!(close(gegenbauer(1, 0.7, 0.3).unwrap(), 2.0 * 0.7 * 0.3, 1e-15));
        for n in 0..8 {
            let at_one = gegenbauer(n, 1.3, 1.0).unwrap();
            let expect = pochhammer(2.6, n) / factorial::<f64>(n);
            assert!(close(at_one, expect, 1e-13));
        }
        // U_2(1/2) = 4/4 - 1 = 0
        assert!(gegenbauer(2, 1.0, 0.5).unwrap().abs() < 1e-15);
    }

    #[test]
    fn generic_parameter_matches_recurrence_where_both_apply() {
        // the recurrence is a polynomial identity in λ, so it also holds at λ < 0
        for &lam in &[-0.3_f64, -1.7, -2.2] {
            for n in 0..7 {
                for &x in &[-0.8, 0.1, 0.65] {
                    let a = gegenbauer(n, lam, x).unwrap();
                    let b = gegenbauer_recurrence(n, lam, x);
                    assert!(close(a, b, 1e-12), "n={n} λ={lam} x={x}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn degenerate_parameters_are_rejected() {
        // (2λ)_n vanishes at λ = -1 for n ≥ 3
        assert!(matches!(gegenbauer(3, -1.0, 0.2), Err(Error::Domain(_))));
        // λ + 1/2 = 0 kills the ₂F₁ denominator
        assert!(matches!(gegenbauer(2, -0.5, 0.2), Err(Error::Domain(_))));
        assert!(matches!(gegenbauer_coeffs(2, -0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn coefficient_forms_agree_with_values() {
        for &lam in &[0.5_f64, 1.0, 2.3, -0.3, -1.7] {
            for n in 0..9 {
                let c = gegenbauer_coeffs(n, lam).unwrap();
                assert_eq!(c.len(), n + 1);
                for &x in &[-0.9, -0.2, 0.4, 1.0] {
                    let v: f64 = c.iter().rev().fold(0.0, |acc, &a| acc * x + a);
                    let w = gegenbauer(n, lam, x).unwrap();
                    assert!(close(v, w, 1e-11), "n={n} λ={lam} x={x}");
                }
            }
        }
    }

    #[test]
    fn terminating_series_small() {
        let one = TerminatingSeries::new(vec![0.0, 2.5], vec![1.5], 0.3, 0).unwrap();
        assert_eq!(one.eval().unwrap(), 1.0);
        let two = TerminatingSeries::new(vec![-1.0, 2.5], vec![1.5], 0.3, 0).unwrap();
        assert!(close(two.eval().unwrap(), 1.0 - 2.5 * 0.3 / 1.5, 1e-15));
        assert!(TerminatingSeries::new(vec![0.5, 1.0], vec![1.0], 0.1, 0).is_err());
        let bad = TerminatingSeries::new(vec![-3.0, 1.0], vec![-1.0], 0.5, 0).unwrap();
        assert!(matches!(bad.eval(), Err(Error::Domain(_))));
    }

    #[test]
    fn racah_trivial_rows() {
        let p = WeightParams::new(4, 1.7).unwrap();
        for k in 0..=4 {
            assert_eq!(racah_4f3(0, k, &p, 3).unwrap(), 1.0);
        }
        // n + k = 3 caps j below 2ℓ
        for j in 0..=3 {
            assert_eq!(racah_4f3(j, 0, &p, 3).unwrap(), 1.0);
        }
        assert!(racah_4f3(0, 5, &p, 3).is_err());
    }

    #[test]
    fn racah_matches_exact_rational_sum() {
        // ℓ=1, ν=2, n=1, k=1, j=1: 1 + (−1)(4)(−1)(−5)/((2)(−2)(−2)) = 1 − 20/8
        let p = WeightParams::new(2, 2.0).unwrap();
        let v = racah_4f3(1, 1, &p, 1).unwrap();
        assert!(close(v, 1.0 - 20.0 / 8.0, 1e-15), "{v}");
    }

    #[test]
    fn jacobi_reduces_to_gegenbauer() {
        // C_n^(ν) = (2ν)_n/(ν+1/2)_n P_n^(ν-1/2,ν-1/2)
        let nu = 1.4;
        for n in 0..7 {
            for &x in &[-0.7, 0.0, 0.33] {
                let c = gegenbauer(n, nu, x).unwrap();
                let p = jacobi(n, nu - 0.5, nu - 0.5, x) * pochhammer(2.0 * nu, n) / pochhammer(nu + 0.5, n);
                assert!(close(c, p, 1e-12));
            }
        }
    }
}
