mod common;

use std::sync::Arc;

use common::{phi, simpson};
use maxbound::asympt::{
    angular_integrand, exponent_convex, exponent_general, isotropic_variance_ratio, kappa_annulus, pm_equiv_1d,
    separable_kappa_ratio, sigma2_isotropic, sigma2_separable, sigma2_separable_sweep, z_delta_exponent, Profile1d,
};
use maxbound::bounds::complementary_decay_rate;
use maxbound::model::IsotropicModel;
use maxbound::special::gamma_fn;
use maxbound::Error;
use proptest::prelude::*;

fn sign_changing_model() -> IsotropicModel {
    IsotropicModel::from_profile(
        Arc::new(|x: f64| 0.5 * (-3.0 * x).exp() + 0.5 * (-x).exp() * (1.0 - x / 2.0)),
        Arc::new(|x: f64| -1.5 * (-3.0 * x).exp() + 0.5 * (-x).exp() * (x / 2.0 - 1.5)),
        Arc::new(|x: f64| 4.5 * (-3.0 * x).exp() + 0.5 * (-x).exp() * (2.0 - x / 2.0)),
        false,
    )
}

#[test]
fn general_exponent_examples() {
    assert_eq!(exponent_general(2.0, 1.0, 0.0).unwrap().rate, 1.5);
    assert_eq!(exponent_general(0.0, 1.0, 0.0).unwrap().rate, f64::INFINITY);
    assert_eq!(exponent_general(2.0, 1.0, 1.0).unwrap().rate, 1.0 + 1.0 / 3.0);
    assert!(exponent_general(1.0, -1.0, 0.0).is_err());
    assert!(exponent_general(1.0, 1.0, f64::NAN).is_err());
}

#[test]
fn squared_exponential_sigma2() {
    let m = IsotropicModel::squared_exponential(0.5).unwrap();
    for delta in [0.1, 1.0, 2f64.sqrt(), 10.0] {
        let s = sigma2_isotropic(&m, delta).unwrap();
        assert!((s.value - 2.0).abs() < 1e-6);
    }
    // invariant under rescaling space
    let m = IsotropicModel::squared_exponential(3.0).unwrap();
    assert!((sigma2_isotropic(&m, 1.0).unwrap().value - 2.0).abs() < 1e-6);
}

#[test]
fn variance_ratio_small_z_limit() {
    for m in [
        IsotropicModel::squared_exponential(0.5).unwrap(),
        IsotropicModel::rational(1.0, 1.0).unwrap(),
        IsotropicModel::rational(2.0, 5.0).unwrap(),
    ] {
        let n = m.normalized();
        let limit = 12.0 * n.rho2_0() - 1.0;
        let r = isotropic_variance_ratio(&n, 1e-3);
        assert!((r - limit).abs() < 1e-5 * limit, "{r} vs {limit}");
    }
}

#[test]
fn rational_sigma2_is_its_limit() {
    for beta in [0.5, 1.0, 3.0] {
        let m = IsotropicModel::rational(1.0, beta).unwrap();
        let s = sigma2_isotropic(&m, 5.0).unwrap();
        let limit = 12.0 * m.normalized().rho2_0() - 1.0;
        assert!((s.value - limit).abs() < 1e-6);
        // normalized ρ″ = (β + 1)/(4β)
        assert!((limit - (3.0 * (beta + 1.0) / beta - 1.0)).abs() < 1e-12);
    }
}

#[test]
fn convex_exponent() {
    let m = IsotropicModel::squared_exponential(0.5).unwrap();
    let r = exponent_convex(&m).unwrap();
    assert_eq!(r.rate, 1.5);
    assert!(r.exact);
    assert!(matches!(exponent_convex(&sign_changing_model()), Err(Error::Hypothesis(_))));
    // ρ″ → ∞ pushes the rate to 1
    let steep = IsotropicModel::rational(1e-3, 1e-3).unwrap();
    let r = exponent_convex(&steep).unwrap();
    assert!(r.rate > 1.0 && r.rate < 1.001);
}

#[test]
fn z_delta_for_monotone_models_equals_convex_rate() {
    for m in [IsotropicModel::squared_exponential(0.5).unwrap(), IsotropicModel::rational(1.0, 2.0).unwrap()] {
        for delta in [1e-3, 0.5, 3.0] {
            let z = z_delta_exponent(&m, delta).unwrap();
            assert_eq!(z.report.components.kappa, 0.0);
            assert!(z.kappa_sup.value < 0.0);
            assert!(!z.report.exact);
            let convex = exponent_convex(&m).unwrap().rate;
            assert!((z.report.rate - convex).abs() < 1e-6);
        }
    }
}

#[test]
fn z_delta_sees_increasing_covariance() {
    let m = sign_changing_model();
    let near = z_delta_exponent(&m, 0.5).unwrap();
    let far = z_delta_exponent(&m, 20.0).unwrap();
    assert_eq!(near.report.components.kappa, 0.0);
    assert!(far.report.components.kappa > 0.0);
    assert!(far.report.rate < near.report.rate);
    assert!(far.report.rate > 1.0);
}

#[test]
fn annulus_kappa() {
    let m = IsotropicModel::squared_exponential(0.5).unwrap();
    let k = kappa_annulus(&m, 1.0, 2.0).unwrap();
    assert!((k.value - 1.0).abs() < 1e-9);
    assert_eq!(k.angular.argmax, None);
    // radial term z e^{−z²/2}/(1 − e^{−z²/2}) is decreasing; its sup is at z = 2a
    let expected = 2.0 * (-2f64).exp() / (1.0 - (-2f64).exp());
    assert!((k.radial.value - expected).abs() < 1e-9);
    assert!(kappa_annulus(&m, 2.0, 1.0).is_err());
}

#[test]
fn annulus_angular_limit() {
    let n = IsotropicModel::rational(1.0, 1.0).unwrap().normalized();
    for a in [0.5, 1.0, 3.0] {
        let v = angular_integrand(&n, a, 1e-3);
        assert!((v - 1.0 / a).abs() < 1e-5 / a);
        for i in 1..50 {
            assert!(angular_integrand(&n, a, i as f64 * 0.06) >= 0.0);
        }
    }
}

#[test]
fn separable_reductions() {
    let g = Profile1d::gaussian(1.0).unwrap();
    let one = |h: f64| {
        let (v, d) = ((-0.5 * h * h).exp(), -h * (-0.5 * h * h).exp());
        (1.0 - v * v - d * d) / ((1.0 - v) * (1.0 - v))
    };
    for h in [0.1, 0.5, 1.3] {
        let a = sigma2_separable(std::slice::from_ref(&g), &[h], &[0.0]).unwrap();
        assert!((a - one(h)).abs() < 1e-12);
        let b = sigma2_separable(&[g.clone(), g.clone()], &[h, 0.3], &[0.0, 0.3]).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
    assert!(sigma2_separable(std::slice::from_ref(&g), &[0.2], &[0.2]).is_err());
}

#[test]
fn separable_sweep_and_kappa() {
    let profiles = vec![Profile1d::gaussian(1.0).unwrap(), Profile1d::gaussian(0.5).unwrap()];
    let sides = [1.0, 2.0];
    let sweep = sigma2_separable_sweep(&profiles, &sides, 41).unwrap();
    assert!(sweep.value.is_finite() && sweep.value > 0.0);
    let finer = sigma2_separable_sweep(&profiles, &sides, 81).unwrap();
    assert!(finer.value >= sweep.value - 1e-12);
    // κ_t = 0 on rectangles for separable Gaussian kernels
    let pts = [0.0, 0.25, 0.5, 1.0];
    for &s0 in &pts {
        for &t0 in &pts {
            for (s1, t1) in [(0.0, 2.0), (1.5, 0.0), (2.0, 2.0), (0.7, 1.9)] {
                if s0 == t0 && s1 == t1 {
                    continue;
                }
                let k = separable_kappa_ratio(&profiles, &sides, &[s0, s1], &[t0, t1]).unwrap();
                assert_eq!(k, 0.0, "s = ({s0}, {s1}), t = ({t0}, {t1})");
            }
        }
    }
}

#[test]
fn laplace_equivalent() {
    // E|ξ|^{−1/2} = 4 ∫_0^∞ φ(t²) dt (substitute ξ = t²)
    let moment = 4.0 * simpson(|t| phi(t * t), 0.0, 8.0, 20_000);
    let closed = 2f64.powf(-0.25) * gamma_fn(0.25) / std::f64::consts::PI.sqrt();
    assert!((moment - closed).abs() < 1e-10);
    let v = pm_equiv_1d(-2.0, -2.0, 1, 1.0).unwrap();
    assert!((v - 2.0 * moment * phi(1.0)).abs() < 1e-10);
    // k = 2: C_2 = −v⁗/24 + v″²/4, exponent of x is 1/2
    let (v4, vpp, x) = (-12.0, -1.0, 3.0f64);
    let c2 = 12.0f64 / 24.0 + 0.25;
    let p = 0.25 - 1.0;
    let m = 2f64.powf(p / 2.0) * gamma_fn((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt();
    let expected = (1.0 + 0.5) / (2.0 * c2.sqrt()) * m * x.sqrt() * phi(x);
    assert!((pm_equiv_1d(v4, vpp, 2, x).unwrap() - expected).abs() < 1e-14);
    assert!(pm_equiv_1d(-1.0, 0.5, 1, 1.0).is_err());
}

proptest! {
    #[test]
    fn convex_rate_equals_complementary_decay(c in 0.01f64..10.0, beta in 0.05f64..50.0) {
        let m = IsotropicModel::rational(c, beta).unwrap();
        let lhs = exponent_convex(&m).unwrap().rate - 1.0;
        prop_assert!((lhs - complementary_decay_rate(&m)).abs() < 1e-12);
        let se = IsotropicModel::squared_exponential(c).unwrap();
        prop_assert!((exponent_convex(&se).unwrap().rate - 1.0 - complementary_decay_rate(&se)).abs() < 1e-12);
    }

    #[test]
    fn general_rate_decreases_in_each_argument(s in 0.01f64..10.0, l in 0.01f64..10.0, k in 0.01f64..10.0, bump in 0.01f64..1.0) {
        let base = exponent_general(s, l, k).unwrap().rate;
        prop_assert!(base > 1.0);
        prop_assert!(exponent_general(s + bump, l, k).unwrap().rate < base);
        prop_assert!(exponent_general(s, l + bump, k).unwrap().rate < base);
        prop_assert!(exponent_general(s, l, k + bump).unwrap().rate < base);
    }
}
