use mvgeg::hyper::{default_alpha, p_n_2h1};
use mvgeg::mvop::{eval_by_recurrence, monic_family};
use mvgeg::racah::p_n_racah;
use mvgeg::real::re;
use mvgeg::{Extended, MatrixPolynomial, Real, WeightParams};
use proptest::prelude::*;

fn rel<T: Real>(a: &MatrixPolynomial<T>, b: &MatrixPolynomial<T>) -> f64 {
    (a.max_abs_diff(b).unwrap() / a.max_abs_coeff().max(T::one())).f()
}

fn routes<T: Real>(two_ell: usize, nu: f64, n: usize) -> [MatrixPolynomial<T>; 3] {
    let p = WeightParams::new(two_ell, re::<T>(nu)).unwrap();
    [monic_family(&p, n).polys[n].clone(), p_n_2h1(&p, default_alpha(), n).unwrap(), p_n_racah(&p, n).unwrap()]
}

#[test]
fn quad_precision_routes_agree_tightly() {
    for (two_ell, nu) in [(1, 0.5), (2, 1.3), (3, 2.75), (4, 0.8)] {
        for n in [0, 3, 6] {
            let [a, b, c] = routes::<Extended>(two_ell, nu, n);
            assert!(rel(&a, &b) < 1e-24 && rel(&a, &c) < 1e-24, "2ℓ={two_ell} ν={nu} n={n}");
        }
    }
}

#[test]
fn double_tracks_quad() {
    for (two_ell, nu) in [(2, 1.3), (5, 4.0)] {
        let p = WeightParams::new(two_ell, nu).unwrap();
        let q = WeightParams::new(two_ell, re::<Extended>(nu)).unwrap();
        let a = monic_family(&p, 10).polys[10].clone();
        let b: MatrixPolynomial<f64> = monic_family(&q, 10).polys[10].convert();
        assert!(rel(&a, &b) < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn three_routes_agree(two_ell in 1usize..5, nu in 0.3f64..4.0, n in 0usize..6) {
        let [a, b, c] = routes::<f64>(two_ell, nu, n);
        prop_assert!(rel(&a, &b) < 1e-8);
        prop_assert!(rel(&a, &c) < 1e-9);
    }

    #[test]
    fn point_values_match_coefficients(two_ell in 1usize..5, nu in 0.3f64..4.0, n in 0usize..12, x in -1.0f64..1.0) {
        let p = WeightParams::new(two_ell, nu).unwrap();
        let want = monic_family(&p, n).polys[n].eval(x);
        let got = eval_by_recurrence(&p, n, x);
        prop_assert!((&got - &want).max_abs() < 1e-12 * (1.0 + want.max_abs()));
    }
}
