//! Right matrix differential operators `P ↦ Σ_k P^(k)(x) A_k(x)` and the
//! operators attached to the weight: `D`, `E`, `D_(Φ,Ψ)` and the raising `T`.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::matpoly::{scalar, MatrixPolynomial, Var, WeightedMatrixFunction};
use crate::params::WeightParams;
use crate::quadrature;
use crate::real::{ratio, ri, Real};
use crate::special::binomial;
use crate::weight::{weight_function, weight_pol};

/// `P ↦ Σ_k P^(k) A_k`, the coefficients multiplying from the right.
#[derive(Clone, Debug, PartialEq)]
pub struct RightDifferentialOperator<T> {
    dim: usize,
    var: Var,
    coeffs: Vec<MatrixPolynomial<T>>,
}

/// The operators in scope are at most second order; the alias keeps that
/// name while allowing exact composition.
pub type RightSecondOrderOperator<T> = RightDifferentialOperator<T>;

impl<T: Real> RightDifferentialOperator<T> {
    pub fn new(coeffs: Vec<MatrixPolynomial<T>>) -> Result<Self> {
        let first = coeffs.first().ok_or_else(|| Error::InvalidParams("operator without coefficients".into()))?;
        let (dim, var) = (first.dim(), first.var());
        for c in &coeffs {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: c.dim() });
            }
            if c.var() != var {
                return Err(Error::VariableMismatch { left: var, right: c.var() });
            }
        }
        Ok(RightDifferentialOperator { dim, var, coeffs })
    }

    /// `P″A2 + P′A1 + PA0`.
    pub fn second_order(a2: MatrixPolynomial<T>, a1: MatrixPolynomial<T>, a0: MatrixPolynomial<T>) -> Result<Self> {
        Self::new(vec![a0, a1, a2])
    }

    pub fn multiplication(a0: MatrixPolynomial<T>) -> Self {
        Self::new(vec![a0]).expect("single coefficient")
    }

    pub fn identity(dim: usize, var: Var) -> Self {
        Self::multiplication(MatrixPolynomial::identity(dim, var))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn var(&self) -> Var {
        self.var
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of `d^k`, zero beyond the order.
    pub fn coeff(&self, k: usize) -> MatrixPolynomial<T> {
        self.coeffs.get(k).cloned().unwrap_or_else(|| MatrixPolynomial::zero(self.dim, self.var))
    }

    pub fn a0(&self) -> MatrixPolynomial<T> {
        self.coeff(0)
    }

    pub fn a1(&self) -> MatrixPolynomial<T> {
        self.coeff(1)
    }

    pub fn a2(&self) -> MatrixPolynomial<T> {
        self.coeff(2)
    }

    fn check(&self, p: &MatrixPolynomial<T>) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: p.dim() });
        }
        if p.var() != self.var {
            return Err(Error::VariableMismatch { left: self.var, right: p.var() });
        }
        Ok(())
    }

    /// `P·Op`.
    pub fn apply(&self, p: &MatrixPolynomial<T>) -> Result<MatrixPolynomial<T>> {
        self.check(p)?;
        let mut out = MatrixPolynomial::zero(self.dim, self.var);
        let mut der = p.clone();
        for a in &self.coeffs {
            out = &out + &(&der * a);
            der = der.diff();
        }
        Ok(out)
    }

    /// The operator `P ↦ (P·self)·other`.
    pub fn then(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: other.dim });
        }
        if other.var != self.var {
            return Err(Error::VariableMismatch { left: self.var, right: other.var });
        }
        // (Σ_k P^(k)A_k)^(m) B_m = Σ_{k,j} C(m,j) P^(k+j) A_k^(m-j) B_m
        let mut out = vec![MatrixPolynomial::zero(self.dim, self.var); self.order() + other.order() + 1];
        for (m, b) in other.coeffs.iter().enumerate() {
            for (k, a) in self.coeffs.iter().enumerate() {
                for j in 0..=m {
                    let term = (&a.diff_n(m - j) * b).scale(binomial(m, j));
                    out[k + j] = &out[k + j] + &term;
                }
            }
        }
        Self::new(out)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let c = (0..n).map(|k| self.coeff(k).try_add(&other.coeff(k))).collect::<Result<Vec<_>>>()?;
        Self::new(c)
    }

    pub fn scale(&self, s: T) -> Self {
        RightDifferentialOperator {
            dim: self.dim,
            var: self.var,
            coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect(),
        }
    }

    /// `self + s·Id`.
    pub fn add_identity(&self, s: T) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = &out.coeffs[0] + &MatrixPolynomial::identity(self.dim, self.var).scale(s);
        out
    }

    /// Largest coefficient difference between two operators.
    pub fn distance(&self, other: &Self) -> Result<T> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut m = T::zero();
        for k in 0..n {
            m = m.max(self.coeff(k).max_abs_diff(&other.coeff(k))?);
        }
        Ok(m)
    }

    /// Conjugation `J Op J` of every coefficient by a constant matrix.
    pub fn conjugate(&self, j: &Mat<T>) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c.mul_left(j).mul_right(j)).collect();
        RightDifferentialOperator { dim: self.dim, var: self.var, coeffs }
    }
}

fn idx<T: Real>(i: usize) -> T {
    ri(i as i64)
}

/// `C^(ν) = Σ (2ℓ-i) E_{i,i+1} + Σ i E_{i,i-1}`.
pub fn c_matrix<T: Real>(params: &WeightParams<T>) -> Mat<T> {
    let l2 = params.two_ell;
    Mat::from_fn(l2 + 1, l2 + 1, |i, j| {
        if j == i + 1 {
            idx::<T>(l2 - i)
        } else if i == j + 1 {
            idx(i)
        } else {
            T::zero()
        }
    })
}

/// `U^(ν) = (2ℓ+2ν+1) Id`.
pub fn u_matrix<T: Real>(params: &WeightParams<T>) -> Mat<T> {
    Mat::identity(params.dim()).scale(params.two_ell_t() + params.nu + params.nu + T::one())
}

/// `V^(ν) = -Σ i(2ℓ-i) E_ii + (ν-1)(2ℓ+ν+1) Id`.
pub fn v_matrix<T: Real>(params: &WeightParams<T>) -> Mat<T> {
    let nu = params.nu;
    let l2 = params.two_ell;
    let shift = (nu - T::one()) * (params.two_ell_t() + nu + T::one());
    Mat::diag(&(0..=l2).map(|i| shift - idx::<T>(i * (l2 - i))).collect::<Vec<_>>())
}

/// `B₀ = Σ (2ℓ-i)/(2ℓ) E_{i,i+1} - Σ i/(2ℓ) E_{i,i-1}`.
pub fn b0_matrix<T: Real>(params: &WeightParams<T>) -> Mat<T> {
    let l2 = params.two_ell;
    let t = params.two_ell_t();
    Mat::from_fn(l2 + 1, l2 + 1, |i, j| {
        if j == i + 1 {
            idx::<T>(l2 - i) / t
        } else if i == j + 1 {
            -idx::<T>(i) / t
        } else {
            T::zero()
        }
    })
}

/// `B₁ = -Σ (ℓ-i)/ℓ E_ii`.
pub fn b1_matrix<T: Real>(params: &WeightParams<T>) -> Mat<T> {
    let ell = params.ell();
    Mat::diag(&(0..params.dim()).map(|i| -(ell - idx(i)) / ell).collect::<Vec<_>>())
}

/// `A₀^(ν) = Σ ((2ℓ+2)(i-2ℓ)/(2ℓ) - (ν-1)(ℓ-i)/ℓ) E_ii`.
pub fn a0_matrix<T: Real>(params: &WeightParams<T>) -> Mat<T> {
    let ell = params.ell();
    let t = params.two_ell_t();
    let nu = params.nu;
    Mat::diag(
        &(0..params.dim())
            .map(|i| {
                let i: T = idx(i);
                (t + ri(2)) * (i - t) / t - (nu - T::one()) * (ell - i) / ell
            })
            .collect::<Vec<_>>(),
    )
}

fn constant<T: Real>(m: Mat<T>) -> MatrixPolynomial<T> {
    MatrixPolynomial::constant(m, Var::X)
}

/// `C - xU` as a degree-one polynomial.
fn c_minus_xu<T: Real>(params: &WeightParams<T>) -> MatrixPolynomial<T> {
    MatrixPolynomial::new(params.dim(), Var::X, vec![c_matrix(params), -&u_matrix(params)]).unwrap()
}

/// `xB₁ + B₀`.
fn xb1_plus_b0<T: Real>(params: &WeightParams<T>) -> MatrixPolynomial<T> {
    MatrixPolynomial::new(params.dim(), Var::X, vec![b0_matrix(params), b1_matrix(params)]).unwrap()
}

/// `D^(ν)` with `A2 = (1-x²)Id`, `A1 = C - xU`, `A0 = -V`.
pub fn build_d<T: Real>(params: &WeightParams<T>) -> RightSecondOrderOperator<T> {
    let d = params.dim();
    let a2 = MatrixPolynomial::scalar(d, Var::X, &scalar::one_minus_sq_pow(1));
    RightDifferentialOperator::second_order(a2, c_minus_xu(params), constant(-&v_matrix(params))).unwrap()
}

/// `E^(ν)` with `A1 = xB₁ + B₀`, `A0 = A₀^(ν)`. Undefined for `ℓ = 0`.
pub fn build_e<T: Real>(params: &WeightParams<T>) -> Result<RightSecondOrderOperator<T>> {
    if params.two_ell == 0 {
        return Err(Error::InvalidParams("E is not defined for ℓ = 0".into()));
    }
    RightDifferentialOperator::new(vec![constant(a0_matrix(params)), xb1_plus_b0(params)])
}

/// Diagonal of `Λ_n(D^(ν))`: `i(2ℓ-i) - (n+ν-1)(2ℓ+ν+n+1)`.
pub fn eigen_d<T: Real>(params: &WeightParams<T>, n: usize) -> Vec<T> {
    let l2 = params.two_ell;
    let nu = params.nu;
    let n: T = idx(n);
    (0..=l2).map(|i| idx::<T>(i * (l2 - i)) - (n + nu - T::one()) * (params.two_ell_t() + nu + n + T::one())).collect()
}

/// Diagonal of `Λ_n(E^(ν))`: `((ℓ+1)(i-2ℓ) - n(ℓ-i) - (ν-1)(ℓ-i))/ℓ`.
pub fn eigen_e<T: Real>(params: &WeightParams<T>, n: usize) -> Vec<T> {
    let ell = params.ell();
    let nu = params.nu;
    let n: T = idx(n);
    (0..params.dim())
        .map(|i| {
            let i: T = idx(i);
            ((ell + T::one()) * (i - params.two_ell_t()) - n * (ell - i) - (nu - T::one()) * (ell - i)) / ell
        })
        .collect()
}

/// The Pearson pair `(Φ, Ψ)` of degrees 2 and 1.
pub fn build_phi_psi<T: Real>(params: &WeightParams<T>) -> (MatrixPolynomial<T>, MatrixPolynomial<T>) {
    let d = params.dim();
    let ell = params.ell();
    let nu = params.nu;
    let l2 = params.two_ell_t();
    let e2 = ell * ell;
    let (two, four): (T, T) = (ri(2), ri(4));
    let phi = MatrixPolynomial::from_entries(d, Var::X, |r, c| {
        let i: T = idx(r);
        if r == c {
            let x2 = ((ell - i) * (ell - i) - (ell + nu) * (ell + nu)) / e2;
            let c0 =
                (-i * (l2 - i + T::one()) - (l2 - i) * (i + T::one()) + four * (ell + nu) * (ell + nu)) / (four * e2);
            vec![c0, T::zero(), x2]
        } else if c + 1 == r {
            vec![T::zero(), (i - T::one() - l2) * (l2 - i - i + T::one()) / (two * e2)]
        } else if c == r + 1 {
            vec![T::zero(), (i + T::one()) * (l2 - i - i - T::one()) / (two * e2)]
        } else if c + 2 == r {
            vec![(l2 - i + two) * (l2 - i + T::one()) / (four * e2)]
        } else if c == r + 2 {
            vec![(i + two) * (i + T::one()) / (four * e2)]
        } else {
            vec![]
        }
    });
    let half = ratio::<T>(1, 2);
    let psi = MatrixPolynomial::from_entries(d, Var::X, |r, c| {
        let i: T = idx(r);
        if r == c {
            vec![T::zero(), -(l2 + nu + nu + T::one()) * (nu + i) * (nu + l2 - i) / e2]
        } else if c + 1 == r {
            vec![-(ell + nu + half) * (i - T::one() - l2) * (nu + i - T::one()) / e2]
        } else if c == r + 1 {
            // positive: the printed display carries the opposite sign on this band,
            // which breaks the Pearson equation
            vec![(ell + nu + half) * (i + T::one()) * (nu + l2 - i - T::one()) / e2]
        } else {
            vec![]
        }
    });
    (phi, psi)
}

/// `D_(Φ,Ψ) = d²Φᵗ + dΨᵗ`.
pub fn build_d_phi_psi<T: Real>(params: &WeightParams<T>) -> RightSecondOrderOperator<T> {
    let (phi, psi) = build_phi_psi(params);
    RightDifferentialOperator::second_order(
        phi.transpose(),
        psi.transpose(),
        MatrixPolynomial::zero(params.dim(), Var::X),
    )
    .unwrap()
}

/// `E² + (2ℓ+2)E + ((ℓ+ν)/ℓ)² D + ν(ν-1)(2ℓ+ν+1)(2ℓ+ν)/ℓ² Id`, all at `ν`.
pub fn d_phi_psi_from_d_e<T: Real>(params: &WeightParams<T>) -> Result<RightSecondOrderOperator<T>> {
    let e = build_e(params)?;
    let d = build_d(params);
    let ell = params.ell();
    let nu = params.nu;
    let l2 = params.two_ell_t();
    let r = (ell + nu) / ell;
    let k = nu * (nu - T::one()) * (l2 + nu + T::one()) * (l2 + nu) / (ell * ell);
    Ok(e.then(&e)?.try_add(&e.scale(l2 + ri(2)))?.try_add(&d.scale(r * r))?.add_identity(k))
}

/// Diagonal of `K_n^(ν)`: `-(ν+k)(2ℓ+2ν+n)(2ℓ+ν-k)/ℓ²`.
pub fn k_diagonal<T: Real>(params: &WeightParams<T>, n: usize) -> Vec<T> {
    let ell = params.ell();
    let nu = params.nu;
    let l2 = params.two_ell_t();
    (0..params.dim())
        .map(|k| {
            let k: T = idx(k);
            -(nu + k) * (l2 + nu + nu + idx(n)) * (l2 + nu - k) / (ell * ell)
        })
        .collect()
}

/// `W^(ν)Φ - ` derivative: `(WΦ)′ - WΨ`.
pub fn pearson_residual<T: Real>(params: &WeightParams<T>) -> Result<WeightedMatrixFunction<T>> {
    let (phi, psi) = build_phi_psi(params);
    let w = weight_function(params)?;
    w.mul_right(&phi)?.diff().try_sub(&w.mul_right(&psi)?)
}

/// `c^(ν) = (2ν+1)(2ℓ+ν+1)ℓ² / (ν(2ν+2ℓ+1)(2ℓ+ν)(ℓ+ν))`.
pub fn nu_step_constant<T: Real>(params: &WeightParams<T>) -> T {
    let ell = params.ell();
    let nu = params.nu;
    let l2 = params.two_ell_t();
    (nu + nu + T::one()) * (l2 + nu + T::one()) * ell * ell / (nu * (nu + nu + l2 + T::one()) * (l2 + nu) * (ell + nu))
}

/// `c W_pol^(ν) Φ - (1-x²) W_pol^(ν+1)`.
pub fn nu_step_residual<T: Real>(params: &WeightParams<T>) -> Result<MatrixPolynomial<T>> {
    let (lhs, rhs) = nu_step_sides(params)?;
    lhs.try_sub(&rhs)
}

/// `(c W_pol^(ν) Φ, (1-x²) W_pol^(ν+1))`.
pub fn nu_step_sides<T: Real>(params: &WeightParams<T>) -> Result<(MatrixPolynomial<T>, MatrixPolynomial<T>)> {
    let (phi, _) = build_phi_psi(params);
    let lhs = (&*weight_pol(params)? * &phi).scale(nu_step_constant(params));
    let rhs = weight_pol(&params.shifted(1))?.mul_scalar_poly(&scalar::one_minus_sq_pow(1));
    Ok((lhs, rhs))
}

/// `c W^(ν) Ψ - (W^(ν+1))′`.
pub fn nu_step_derivative_residual<T: Real>(params: &WeightParams<T>) -> Result<WeightedMatrixFunction<T>> {
    let (_, psi) = build_phi_psi(params);
    let lhs = weight_function(params)?.mul_right(&psi)?.scale(nu_step_constant(params));
    lhs.try_sub(&weight_function(&params.shifted(1))?.diff())
}

/// First-order `T^(ν)`: `Q ↦ Q′Φᵗ + QΨᵗ`.
pub fn build_t_raising<T: Real>(params: &WeightParams<T>) -> RightSecondOrderOperator<T> {
    let (phi, psi) = build_phi_psi(params);
    RightDifferentialOperator::new(vec![psi.transpose(), phi.transpose()]).unwrap()
}

/// `max |⟨P·Op, Q⟩ - ⟨P, Q·Op⟩|` with exact quadrature.
pub fn symmetry_defect<T: Real>(
    op: &RightSecondOrderOperator<T>,
    p: &MatrixPolynomial<T>,
    q: &MatrixPolynomial<T>,
    params: &WeightParams<T>,
) -> Result<T> {
    let pa = op.apply(p)?;
    let qa = op.apply(q)?;
    let lhs = quadrature::pair(&pa, q, params)?;
    let rhs = quadrature::pair(p, &qa, params)?;
    Ok(lhs.try_sub(&rhs)?.max_abs())
}

/// `max |⟨P′, Q⟩^(ν+1) + c^(ν) ⟨P, Q T^(ν)⟩^(ν)|`.
pub fn adjoint_defect<T: Real>(
    p: &MatrixPolynomial<T>,
    q: &MatrixPolynomial<T>,
    params: &WeightParams<T>,
) -> Result<T> {
    let lhs = quadrature::pair(&p.diff(), q, &params.shifted(1))?;
    let qt = build_t_raising(params).apply(q)?;
    let rhs = quadrature::pair(p, &qt, params)?.scale(nu_step_constant(params));
    Ok((&lhs + &rhs).max_abs())
}

/// The two sides of the Darboux factorization: `d/dx ∘ T^(ν)` and its
/// expression through `E^(ν+1)`, `D^(ν+1)`.
pub fn darboux_sides<T: Real>(
    params: &WeightParams<T>,
) -> Result<(RightSecondOrderOperator<T>, RightSecondOrderOperator<T>)> {
    let (phi, psi) = build_phi_psi(params);
    let (phit, psit) = (phi.transpose(), psi.transpose());
    let lhs = RightDifferentialOperator::new(vec![psit.diff(), &phit.diff() + &psit, phit])?;
    let up = params.shifted(1);
    let e = build_e(&up)?;
    let d = build_d(&up);
    let ell = params.ell();
    let nu = params.nu;
    let l2 = params.two_ell_t();
    let r = (ell + nu) / ell;
    let k = nu * (nu - T::one()) * (l2 + nu) * (l2 + nu + T::one()) / (ell * ell);
    let rhs = e.then(&e)?.try_add(&e.scale(l2 + ri(2)))?.try_add(&d.scale(r * r))?.add_identity(k);
    Ok((lhs, rhs))
}

/// Largest coefficient difference between the two Darboux sides.
pub fn darboux_residual<T: Real>(params: &WeightParams<T>) -> Result<T> {
    let (a, b) = darboux_sides(params)?;
    a.distance(&b)
}

/// The four scalar-reducible symmetry conditions behind the self-adjointness
/// of `E` and `D`.
#[derive(Clone, Debug)]
pub struct SymmetryEquations<T> {
    /// `W_pol(xB₁+B₀)ᵗ + (xB₁+B₀)W_pol`.
    pub e1: MatrixPolynomial<T>,
    /// `-((xB₁+B₀)W)′ + A₀W - WA₀ᵗ`.
    pub e2: WeightedMatrixFunction<T>,
    /// `(4ν+2)x W_pol + (C-xU)W_pol - 2(1-x²)W_pol′ + W_pol(C-xU)ᵗ`.
    pub z1: MatrixPolynomial<T>,
    /// `(W(C-xU)ᵗ - (C-xU)W)′ - 2(VW - WV)`.
    pub z2: WeightedMatrixFunction<T>,
}

impl<T: Real> SymmetryEquations<T> {
    pub fn max_abs(&self) -> [T; 4] {
        [self.e1.max_abs_coeff(), self.e2.poly.max_abs_coeff(), self.z1.max_abs_coeff(), self.z2.poly.max_abs_coeff()]
    }
}

pub fn symmetry_equations<T: Real>(params: &WeightParams<T>) -> Result<SymmetryEquations<T>> {
    let wp = weight_pol(params)?;
    let w = weight_function(params)?;
    let b = xb1_plus_b0(params);
    let e1 = &(&*wp * &b.transpose()) + &(&b * &*wp);
    let a0 = constant(a0_matrix(params));
    let e2 = w.mul_left(&a0)?.try_sub(&w.mul_right(&a0.transpose())?)?.try_sub(&w.mul_left(&b)?.diff())?;

    let cu = c_minus_xu(params);
    let four_nu_2 = ri::<T>(4) * params.nu + ri(2);
    let z1 = &(&(&wp.mul_scalar_poly(&[T::zero(), four_nu_2]) + &(&cu * &*wp))
        - &wp.diff().mul_scalar_poly(&scalar::one_minus_sq_pow(1)).scale(ri(2)))
        + &(&*wp * &cu.transpose());
    let v = constant(v_matrix(params));
    let lhs = w.mul_right(&cu.transpose())?.try_sub(&w.mul_left(&cu)?)?.diff();
    let rhs = w.mul_left(&v)?.try_sub(&w.mul_right(&v)?)?.scale(ri(2));
    let z2 = lhs.try_sub(&rhs)?;
    Ok(SymmetryEquations { e1, e2, z1, z2 })
}
