use splitlab::testfn::{
    default_test_function, envelope_slack, fourier_eval, kappa_envelope, make_mollifier, rescale,
    self_convolve, MollifierShape, TestFunction, ENVELOPE_SLACK,
};

/// Trapezoid rule for ∫ f(t) cos(ut) dt over the support, evaluating f
/// pointwise (each point runs its own convolution quadrature).
fn trapezoid_transform(f: &TestFunction, u: f64, points: usize) -> f64 {
    let r = f.support_radius();
    let h = 2.0 * r / points as f64;
    (1..points)
        .map(|k| {
            let t = -r + h * k as f64;
            f.eval(t) * (u * t).cos()
        })
        .sum::<f64>()
        * h
}

#[test]
fn transform_matches_oversampled_trapezoid() {
    let f = default_test_function(1.0).unwrap();
    // Panel tables use 1024 nodes at this frequency; the oracle uses 10x that.
    let oracle = trapezoid_transform(&f, 5.0, 10_240);
    let value = fourier_eval(&f, 5.0).unwrap();
    assert!(
        (value - oracle).abs() < 1e-6,
        "quadrature {value} vs trapezoid {oracle}"
    );
}

#[test]
fn rescaled_transform_matches_pointwise_oracle() {
    let f = default_test_function(1.0).unwrap();
    let g = rescale(&f, 3.0).unwrap();
    let oracle = trapezoid_transform(&g, 2.0, 12_000);
    let direct = fourier_eval(&f, 6.0).unwrap();
    assert!((oracle - direct).abs() < 1e-8, "{oracle} vs {direct}");
    assert!((fourier_eval(&g, 2.0).unwrap() - direct).abs() < 1e-12);
}

#[test]
fn rescaling_covariance_on_grid() {
    let f = default_test_function(1.0).unwrap();
    for lambda in [0.25, 0.5, 2.0, 3.0] {
        let g = rescale(&f, lambda).unwrap();
        let worst = (0..=500)
            .map(|k| {
                let u = k as f64 * 0.1;
                (g.fourier_real(u) - f.fourier_real(lambda * u)).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "lambda {lambda}: {worst}");
    }
}

#[test]
fn envelope_holds_on_grid_for_default_and_variants() {
    for (a, beta0) in [(1.0, 1.0), (0.5, 1.0), (1.0, 2.0), (2.0, 0.5)] {
        let chi = make_mollifier(a, MollifierShape::StandardBump).unwrap();
        let f = splitlab::testfn::build_test_function(self_convolve(&chi), beta0).unwrap();
        let env = kappa_envelope(&f).unwrap();
        assert!(env.kappa > 0.0 && env.kappa <= 1.0);
        let (u, slack) = envelope_slack(&f, &env);
        assert!(
            slack >= -ENVELOPE_SLACK,
            "a={a} beta0={beta0}: {slack} at {u}"
        );
    }
}

#[test]
fn rescaled_envelope_is_valid() {
    let f = default_test_function(1.0).unwrap();
    let g = rescale(&f, 2.0).unwrap();
    let env = kappa_envelope(&g).unwrap();
    let base = kappa_envelope(&f).unwrap();
    assert!((env.kappa - base.kappa).abs() < 1e-15);
    assert!((env.beta0 - 2.0).abs() < 1e-15);
}

#[test]
fn transform_nonnegative_and_normalized() {
    let f = default_test_function(1.0).unwrap();
    assert!((f.fourier(0.0).unwrap() - 1.0).abs() < 1e-12);
    for k in 0..=2000 {
        let u = k as f64 * 0.05;
        assert!(f.fourier(u).unwrap() >= 0.0, "negative transform at {u}");
    }
}
