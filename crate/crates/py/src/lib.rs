//! Python bindings. Matrices come back as nested lists of floats and matrix
//! polynomials as a list of coefficient matrices, lowest power first.

use mvgeg::hyper::{default_alpha, p_n_2h1};
use mvgeg::mvop::{eval_by_recurrence, monic_family, norm_matrix, recurrence_coefficients};
use mvgeg::params::parse_ell;
use mvgeg::racah::p_n_racah;
use mvgeg::verify::{run_suite, Suite, VerifyConfig};
use mvgeg::{weight, Mat, MatrixPolynomial, WeightParams};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

type Matrix = Vec<Vec<f64>>;

/// ℓ as a string ("3/2") or a number (1.5).
#[derive(FromPyObject)]
enum Ell {
    Text(String),
    Number(f64),
}

fn err(e: mvgeg::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn two_ell(ell: &Ell) -> mvgeg::Result<usize> {
    match ell {
        Ell::Text(s) => parse_ell(s),
        Ell::Number(v) => parse_ell(&v.to_string()),
    }
}

fn params(ell: &Ell, nu: f64) -> mvgeg::Result<WeightParams<f64>> {
    WeightParams::new(two_ell(ell)?, nu)
}

fn coeffs(p: &MatrixPolynomial<f64>) -> Vec<Matrix> {
    p.coeffs().iter().map(Mat::to_rows).collect()
}

fn route_poly(p: &WeightParams<f64>, n: usize, route: &str) -> mvgeg::Result<MatrixPolynomial<f64>> {
    match route {
        "recurrence" => Ok(monic_family(p, n).polys[n].clone()),
        "hyper" => p_n_2h1(p, default_alpha(), n),
        "racah" => p_n_racah(p, n),
        other => Err(mvgeg::Error::Parse(format!("unknown route {other:?}; expected recurrence, hyper or racah"))),
    }
}

/// Coefficients of `W_pol`.
#[pyfunction]
fn weight_pol(ell: Ell, nu: f64) -> PyResult<Vec<Matrix>> {
    let p = params(&ell, nu).map_err(err)?;
    Ok(coeffs(&*weight::weight_pol(&p).map_err(err)?))
}

/// `W(x) = (1-x²)^(ν-½) W_pol(x)` for `|x| < 1`.
#[pyfunction]
fn weight_at(ell: Ell, nu: f64, x: f64) -> PyResult<Matrix> {
    let p = params(&ell, nu).map_err(err)?;
    Ok(weight::weight_at(&p, x).map_err(err)?.to_rows())
}

/// `(L coefficients, [t_0, …, t_2ℓ])`.
#[pyfunction]
fn ldu(ell: Ell, nu: f64) -> PyResult<(Vec<Matrix>, Vec<f64>)> {
    let p = params(&ell, nu).map_err(err)?;
    let f = weight::ldu_factors(&p).map_err(err)?;
    Ok((coeffs(&f.l), f.tdiag.clone()))
}

/// Coefficients of the monic `P_n` by `route` (recurrence, hyper or racah).
#[pyfunction]
#[pyo3(signature = (ell, nu, n, route = "recurrence"))]
fn monic(ell: Ell, nu: f64, n: usize, route: &str) -> PyResult<Vec<Matrix>> {
    let p = params(&ell, nu).map_err(err)?;
    Ok(coeffs(&route_poly(&p, n, route).map_err(err)?))
}

/// `P_n(x)` by running the recurrence on values.
#[pyfunction]
fn evaluate(ell: Ell, nu: f64, n: usize, x: f64) -> PyResult<Matrix> {
    let p = params(&ell, nu).map_err(err)?;
    Ok(eval_by_recurrence(&p, n, x).to_rows())
}

/// Diagonal of the squared norm `H_n`.
#[pyfunction]
fn norm(ell: Ell, nu: f64, n: usize) -> PyResult<Vec<f64>> {
    let p = params(&ell, nu).map_err(err)?;
    let h = norm_matrix(&p, n);
    Ok((0..p.dim()).map(|i| h[(i, i)]).collect())
}

/// `(X_n, Y_n)` of `xP_n = P_{n+1} + (1-2X_n)P_n + 4Y_nP_{n-1}`.
#[pyfunction]
fn recurrence(ell: Ell, nu: f64, n: usize) -> PyResult<(Matrix, Matrix)> {
    let p = params(&ell, nu).map_err(err)?;
    let r = recurrence_coefficients(&p, n);
    Ok((r.x.to_rows(), r.y.to_rows()))
}

/// Runs verification suites in double precision; returns `(passed, json)`.
#[pyfunction]
#[pyo3(signature = (suite = "all", ell_max = Ell::Text("3/2".into()), nus = None, n_max = 6, seed = 0))]
fn verify(suite: &str, ell_max: Ell, nus: Option<Vec<f64>>, n_max: usize, seed: u64) -> PyResult<(bool, String)> {
    let cfg = VerifyConfig {
        two_ell_max: two_ell(&ell_max).map_err(err)?,
        nus: nus.unwrap_or_else(|| VerifyConfig::default().nus),
        n_max,
        seed,
        ..VerifyConfig::default()
    };
    let mut reports = Vec::new();
    let mut pass = true;
    for s in Suite::parse_list(suite).map_err(err)? {
        let r = run_suite::<f64>(s, &cfg).map_err(err)?;
        pass &= r.passed();
        reports.push(r.to_json(false));
    }
    let out = serde_json::json!({"pass": pass, "seed": seed, "reports": reports});
    Ok((pass, out.to_string()))
}

#[pymodule]
fn mvgeg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(weight_pol, m)?)?;
    m.add_function(wrap_pyfunction!(weight_at, m)?)?;
    m.add_function(wrap_pyfunction!(ldu, m)?)?;
    m.add_function(wrap_pyfunction!(monic, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(norm, m)?)?;
    m.add_function(wrap_pyfunction!(recurrence, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ell_forms_agree() {
        assert_eq!(two_ell(&Ell::Text("3/2".into())).unwrap(), 3);
        assert_eq!(two_ell(&Ell::Number(1.5)).unwrap(), 3);
        assert_eq!(two_ell(&Ell::Number(2.0)).unwrap(), 4);
        assert!(two_ell(&Ell::Number(0.3)).is_err());
    }

    #[test]
    fn routes_agree() {
        let p = params(&Ell::Number(1.0), 1.4).unwrap();
        let a = route_poly(&p, 3, "recurrence").unwrap();
        for r in ["hyper", "racah"] {
            assert!(a.max_abs_diff(&route_poly(&p, 3, r).unwrap()).unwrap() < 1e-10);
        }
        assert!(route_poly(&p, 3, "fast").is_err());
    }

    #[test]
    fn rejects_nonpositive_nu() {
        let e = params(&Ell::Number(1.0), -1.0).unwrap_err();
        assert!(e.to_string().contains("positive definite"));
    }
}
