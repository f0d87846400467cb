use proptest::prelude::*;
use splitlab::qei::{
    computed_q, nuclearity_to_qei_domain, single_field_bound, tower_bound, CountingEnvelope,
};
use splitlab::testfn::default_test_function;
use splitlab::tower::{
    counting_integral_identity_check, f_sum, g_sum, tauberian_constants, tauberian_counting_bound,
    tauberian_minimize, MassTower, SumVerdict,
};
use splitlab::LabError;

#[test]
fn identity_residual_on_example_spectra() {
    let ar = MassTower::arithmetic(1.0).unwrap();
    for beta in [0.5, 1.0, 4.0] {
        let c = counting_integral_identity_check(&ar, beta).unwrap();
        assert!(c.residual < 1e-5, "arithmetic beta={beta}: {c:?}");
    }
    let log = MassTower::logarithmic(1.0).unwrap();
    let c = counting_integral_identity_check(&log, 16.0).unwrap();
    assert!(c.residual < 1e-5, "logarithmic: {c:?}");
    assert!(matches!(
        counting_integral_identity_check(&log, 8.0),
        Err(LabError::Divergent(_))
    ));
}

#[test]
fn tauberian_bound_is_subexponential() {
    let mut last = f64::INFINITY;
    for k in 1..=6 {
        let v = 10f64.powi(k);
        let b = tauberian_counting_bound(1.0, 1.0, 1.0, v).unwrap();
        let ratio = b.log_value / v;
        assert!(ratio < last);
        last = ratio;
    }
    assert!(last < 3e-3);
}

#[test]
fn tauberian_constants_reproduce_plug_in() {
    for (n, beta0, a, v) in [
        (1.0, 0.7, 2.0, 30.0),
        (2.5, 1.3, 0.4, 500.0),
        (0.5, 2.0, 1.0, 7.0),
    ] {
        let b = tauberian_counting_bound(n, beta0, a, v).unwrap();
        let (bb, cc) = tauberian_constants(n, beta0, a).unwrap();
        let q = n / (n + 1.0);
        let closed = bb.ln() + 2.0 / (n + 1.0) * f64::ln(v) + cc * v.powf(q);
        assert!((closed - b.log_value).abs() < 1e-10 * b.log_value.abs().max(1.0));
    }
}

#[test]
fn computed_q_is_finite_and_nonincreasing() {
    let f = default_test_function(1.0).unwrap();
    let ar = MassTower::arithmetic(1.0).unwrap();
    let grid = [2.0, 1.0, 0.5, 0.25];
    let q = computed_q(&f, &ar, &grid, 4, 1.0).unwrap();
    assert!(q.iter().all(|v| v.is_finite() && *v > 0.0));
    assert!(q.windows(2).all(|w| w[1] >= w[0]), "{q:?}");
}

#[test]
fn default_test_function_single_field() {
    let f = default_test_function(1.0).unwrap();
    let at0 = single_field_bound(|u| f.fourier_real(u), 0.0, 4, 1.0).unwrap();
    let at1 = single_field_bound(|u| f.fourier_real(u), 1.0, 4, 1.0).unwrap();
    let (v0, v1) = (at0.finite_value().unwrap(), at1.finite_value().unwrap());
    assert!(v1 < 0.0 && v1.abs() <= v0.abs());
}

#[test]
fn admissible_domain_gives_finite_tower_bound() {
    for n in [0.5, 1.0, 2.0] {
        let beta0 = 1.0;
        let (b, c) = tauberian_constants(n, beta0, 1.0).unwrap();
        let envelope = CountingEnvelope { n, b, c };
        let threshold = n / (n + 1.0);
        for (alpha, gamma) in [(threshold + 0.1, 1.0), (threshold + 0.3, 0.5)] {
            let domain = nuclearity_to_qei_domain(n, gamma, alpha, beta0).unwrap();
            assert!(domain.admissible);
            let bound = tower_bound(|u| (-gamma * u.powf(alpha)).exp(), &envelope, 4, 1.0).unwrap();
            assert!(
                !bound.is_divergent(),
                "n={n} alpha={alpha} gamma={gamma}: {:?}",
                bound.value
            );
        }
        let domain = nuclearity_to_qei_domain(n, 0.5 * c + 0.5, threshold, beta0).unwrap();
        assert!(domain.admissible);
        let gamma = domain.gamma_threshold + 0.5;
        let bound = tower_bound(|u| (-gamma * u.powf(threshold)).exp(), &envelope, 4, 1.0).unwrap();
        assert!(!bound.is_divergent(), "boundary n={n}: {:?}", bound.value);
    }
}

#[test]
fn below_domain_diverges_on_envelope() {
    let (b, c) = tauberian_constants(1.0, 1.0, 1.0).unwrap();
    let envelope = CountingEnvelope { n: 1.0, b, c };
    let bound = tower_bound(|u| (-u.powf(0.3)).exp(), &envelope, 4, 1.0).unwrap();
    assert!(bound.is_divergent());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn arithmetic_g_matches_geometric_series(m1 in 0.05f64..5.0, beta in 0.05f64..20.0) {
        let tower = MassTower::arithmetic(m1).unwrap();
        let SumVerdict::Convergent { value, remainder_bound } = g_sum(&tower, beta).unwrap() else {
            panic!("arithmetic G must converge");
        };
        let exact = 1.0 / (0.25 * beta * m1).exp_m1();
        prop_assert!((value - exact).abs() <= remainder_bound + 1e-12 * exact);
    }

    #[test]
    fn logarithmic_f_threshold(d0 in 0.2f64..3.0, frac in 0.05f64..3.0) {
        prop_assume!((frac - 1.0).abs() > 1e-6);
        let tower = MassTower::logarithmic(d0).unwrap();
        let v = f_sum(&tower, 0.5 * d0 * frac).unwrap();
        prop_assert_eq!(v.is_convergent(), frac > 1.0);
        prop_assert_eq!(v.is_divergent(), frac < 1.0);
    }

    #[test]
    fn counting_is_monotone(d0 in 0.1f64..3.0, u1 in 0.0f64..8.0, du in 0.0f64..3.0) {
        let tower = MassTower::logarithmic(d0).unwrap();
        prop_assert!(tower.counting(u1 + du) >= tower.counting(u1));
        let ar = MassTower::arithmetic(d0).unwrap();
        prop_assert!(ar.counting(u1 + du) >= ar.counting(u1));
    }

    #[test]
    fn plug_in_dominates_minimum(beta0 in 0.1f64..5.0, a in 0.1f64..10.0, v in 1.0f64..1e4) {
        let plug = tauberian_counting_bound(1.0, beta0, a, v).unwrap();
        let (_, min) = tauberian_minimize(1.0, beta0, a, v).unwrap();
        prop_assert!(plug.log_value >= min - 1e-9 * min.abs().max(1.0));
    }

    #[test]
    fn single_field_linear_in_constant(c in 0.1f64..10.0, m in 0.0f64..5.0) {
        let one = single_field_bound(|u| (-u).exp(), m, 4, 1.0).unwrap().finite_value().unwrap();
        let scaled = single_field_bound(|u| (-u).exp(), m, 4, c).unwrap().finite_value().unwrap();
        prop_assert!((scaled - c * one).abs() <= 1e-12 * scaled.abs().max(1e-300));
    }
}

#[test]
fn computed_q_rejects_exponential_counting() {
    let f = default_test_function(1.0).unwrap();
    let log = MassTower::logarithmic(1.0).unwrap();
    assert!(matches!(
        computed_q(&f, &log, &[1.0, 0.5], 4, 1.0),
        Err(LabError::Divergent(_))
    ));
}
