use proptest::prelude::*;
use splitlab::distal::{
    covering_radius, derivative_kappa, shrink_construction, Ball, RadialDiffeo, SlopeProfile,
    Transition,
};

/// Bump-like map: slope 1, rise to `peak` over [a, a+w], back to a plateau
/// chosen so that ψ returns to the identity at a + 4w (plateau (3 - peak)/2).
fn bump_map(a: f64, w: f64, peak: f64) -> RadialDiffeo {
    let build = |low: f64| {
        SlopeProfile::new(
            1.0,
            vec![
                Transition {
                    start: a,
                    width: w,
                    slope: peak,
                },
                Transition {
                    start: a + w,
                    width: w,
                    slope: low,
                },
                Transition {
                    start: a + 3.0 * w,
                    width: w,
                    slope: 1.0,
                },
            ],
        )
        .unwrap()
    };
    let end = a + 4.0 * w;
    let (p1, p2) = (build(1.0).psi(end), build(2.0).psi(end));
    let low = 1.0 + (end - p1) / (p2 - p1);
    RadialDiffeo::from_profile(build(low), 3).unwrap()
}

#[test]
fn composition_matches_nested_inversion() {
    let f = bump_map(0.5, 0.3, 1.8);
    let g = RadialDiffeo::scaling(1.7, 3).unwrap();
    let h = bump_map(1.1, 0.2, 0.6);
    let fg = f.compose(&g).unwrap().compose(&h).unwrap();
    for radius in [0.3, 1.0, 2.5] {
        let s = Ball::new(radius).unwrap();
        for r in [0.05, 0.4, 1.5, 6.0] {
            let direct = covering_radius(&fg, &s, r, 0.0).unwrap();
            let image = f.psi(g.psi(h.psi(radius)));
            let nested = h
                .inverse(g.inverse(f.inverse(image + r).unwrap()).unwrap())
                .unwrap();
            assert!(
                (direct - (nested - radius)).abs() < 1e-10,
                "R={radius} r={r}: {direct} vs {}",
                nested - radius
            );
        }
    }
}

#[test]
fn global_scaling_kappa() {
    for lambda in [0.25, 0.8, 1.0, 3.0, 12.0] {
        let f = RadialDiffeo::scaling(1.0 / lambda, 3).unwrap();
        // ψ(s) = λs, so f⁻¹ scales by 1/λ
        let k = derivative_kappa(&f, &Ball::new(1.0).unwrap(), 0.7).unwrap();
        assert!((k.kappa - 1.0 / lambda).abs() < 1e-10 * (1.0 / lambda));
        let g = RadialDiffeo::scaling(lambda, 3).unwrap();
        let k = derivative_kappa(&g, &Ball::new(2.0).unwrap(), 0.3).unwrap();
        assert!((k.kappa - lambda).abs() < 1e-10 * lambda);
    }
}

#[test]
fn contraction_gives_kappa_at_least_one() {
    let f = bump_map(1.0, 0.25, 0.3);
    for radius in [0.5, 1.0, 1.2] {
        let s = Ball::new(radius).unwrap();
        let k = derivative_kappa(&f, &s, 0.5).unwrap();
        assert!(k.kappa >= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covering_radius_monotone_in_r(a in 0.1f64..2.0, w in 0.05f64..1.0, peak in 0.2f64..2.9,
                                     radius in 0.05f64..3.0, r1 in 0.01f64..3.0, dr in 0.0f64..3.0) {
        let f = bump_map(a, w, peak);
        let s = Ball::new(radius).unwrap();
        let c1 = covering_radius(&f, &s, r1, 0.0).unwrap();
        let c2 = covering_radius(&f, &s, r1 + dr, 0.0).unwrap();
        prop_assert!(c2 >= c1 - 1e-12);
        prop_assert!(c1 > 0.0);
    }

    #[test]
    fn shrink_always_halves(radius in 0.01f64..50.0, d in 1e-3f64..50.0) {
        let out = shrink_construction(&Ball::new(radius).unwrap(), d, 3).unwrap();
        prop_assert!(out.holds);
        prop_assert!(out.covering_radius <= d / 2.0);
        prop_assert!(out.psi_at_half >= radius + d);
        prop_assert!((out.diffeo.psi(radius) - radius).abs() <= 1e-12 * radius.max(1.0));
        let far = radius + 3.0 * d;
        prop_assert!((out.diffeo.psi(far) - far).abs() <= 1e-10 * far);
    }

    #[test]
    fn identity_is_exact(radius in 0.01f64..10.0, r in 1e-3f64..10.0) {
        let id = RadialDiffeo::identity(3).unwrap();
        prop_assert_eq!(covering_radius(&id, &Ball::new(radius).unwrap(), r, 0.0).unwrap(), r);
    }
}
