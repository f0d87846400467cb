use std::f64::consts::{PI, SQRT_2};

use splitlab::negstate::{
    averaged_energy, default_profile, derive_kernel, gamma_constant, mc_crosscheck,
    normalization_sq, optimize_lambda, p_lambda, verify_theorem, KernelC,
};
use splitlab::quad::GaussLegendre;
use splitlab::testfn::{default_test_function, kappa_envelope, ExponentialEnvelope, TestFunction};

fn setup() -> (TestFunction, KernelC, ExponentialEnvelope) {
    let f = default_test_function(1.0).unwrap();
    let env = kappa_envelope(&f).unwrap().with_cutoff(0.5).unwrap();
    let kernel = derive_kernel(&default_profile()).unwrap();
    (f, kernel, env)
}

fn rule(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(16).composite_points(a, b, panels)
}

/// A(c) = ∫ dΩ″ h(n″·z) h(n″·n′) with n′ = (√(1-c²), 0, c), on a (θ, φ) grid.
fn angular_oracle(kernel: &KernelC, c: f64) -> f64 {
    let h = kernel.profile.h;
    let s = (1.0 - c * c).max(0.0).sqrt();
    let mut total = 0.0;
    for (t, wt) in rule(0.0, PI / 3.0, 16) {
        let (st, ct) = t.sin_cos();
        let ht = h.eval(ct);
        if ht == 0.0 {
            continue;
        }
        for (p, wp) in rule(0.0, 2.0 * PI, 64) {
            let cos_other = st * p.cos() * s + ct * c;
            total += wt * wp * st * ht * h.eval(cos_other);
        }
    }
    total
}

#[test]
fn angular_factor_matches_direct_sphere_quadrature() {
    let (_, kernel, _) = setup();
    for c in [-0.45, -0.2, 0.0, 0.3, 0.5, 0.75, 0.9, 1.0] {
        let direct = angular_oracle(&kernel, c);
        let series = kernel.angular(c);
        assert!(
            (direct - series).abs() < 1e-8 * kernel.angular(1.0),
            "c={c}: series {series} vs direct {direct}"
        );
    }
}

#[test]
fn double_integral_matches_squared_inner_integral() {
    // I_C = ∫ d³u″/(2π)³ [∫ d³u/(2π)³ B(u″, u)]², with u″ along z.
    let (_, kernel, _) = setup();
    let p = &kernel.profile;
    let radial = rule(0.5, 1.0, 8);
    let mut angular = 0.0;
    for (t, wt) in rule(0.0, PI, 64) {
        angular += wt * t.sin() * 2.0 * PI * p.h.eval(t.cos());
    }
    let radial_mass: f64 = radial.iter().map(|&(r, w)| w * r * r * p.g.eval(r)).sum();
    let tp3 = (2.0 * PI).powi(3);
    let outer: f64 = radial
        .iter()
        .map(|&(r, w)| {
            let inner = p.normalization * p.g.eval(r) * radial_mass * angular / tp3;
            w * 4.0 * PI * r * r * inner * inner
        })
        .sum::<f64>()
        / tp3;
    let rel = (outer - kernel.double_integral).abs() / outer;
    assert!(
        rel < 1e-6,
        "oracle {outer} vs kernel {} (rel {rel:e})",
        kernel.double_integral
    );
}

#[test]
fn trace_matches_square_of_profile() {
    // Tr C = ∬ B² d³u d³u′/(2π)⁶
    let (_, kernel, _) = setup();
    let p = &kernel.profile;
    let radial = rule(0.5, 1.0, 8);
    let angular = rule(0.5, 1.0, 8);
    let mut total = 0.0;
    for &(r1, w1) in &radial {
        for &(r2, w2) in &radial {
            let inner: f64 = angular
                .iter()
                .map(|&(c, wc)| wc * p.reduced(r1, r2, c).powi(2))
                .sum();
            total += w1 * w2 * r1 * r1 * r2 * r2 * inner;
        }
    }
    total *= 8.0 * PI * PI / (2.0 * PI).powi(6);
    assert!(
        (total - kernel.trace).abs() < 1e-8 * total,
        "{total} vs {}",
        kernel.trace
    );
}

#[test]
fn lambda_vertex_beats_dense_grid() {
    let (_, kernel, _) = setup();
    let (l0, _) = optimize_lambda(&kernel).unwrap();
    let step = l0 / 500.0;
    let best = (1..=1000)
        .map(|i| i as f64 * step)
        .max_by(|a, b| p_lambda(&kernel, *a).total_cmp(&p_lambda(&kernel, *b)))
        .unwrap();
    assert!((best - l0).abs() <= step);
}

#[test]
fn zero_lambda_is_vacuum() {
    let (f, kernel, env) = setup();
    let e = averaged_energy(1.0, 0.0, &f, &kernel, &env).unwrap();
    assert_eq!(e.value, 0.0);
    let mc = mc_crosscheck(1.0, 0.0, &f, &kernel, &env, 10_000, 3).unwrap();
    assert_eq!(mc.estimate, 0.0);
}

#[test]
fn energy_splits_into_its_terms() {
    let (f, kernel, env) = setup();
    let (l0, _) = optimize_lambda(&kernel).unwrap();
    let e = averaged_energy(2.0, l0, &f, &kernel, &env).unwrap();
    assert!((e.value - (e.positive_term + e.negative_term)).abs() <= e.error_estimate.max(1e-300));
    assert!(e.positive_term > 0.0 && e.negative_term < 0.0);
}

#[test]
fn monte_carlo_agrees_with_reduced_quadrature() {
    let (f, kernel, env) = setup();
    let (l0, _) = optimize_lambda(&kernel).unwrap();
    let quad = averaged_energy(1.0, l0, &f, &kernel, &env).unwrap();
    let mc = mc_crosscheck(1.0, l0, &f, &kernel, &env, 1_000_000, 20240611).unwrap();
    let gap = (mc.estimate - quad.value).abs();
    assert!(
        gap < 3.0 * mc.stderr,
        "MC {} ± {} vs quadrature {}",
        mc.estimate,
        mc.stderr,
        quad.value
    );
}

#[test]
fn quadrupling_samples_halves_stderr() {
    let (f, kernel, env) = setup();
    let (l0, _) = optimize_lambda(&kernel).unwrap();
    let small = mc_crosscheck(1.0, l0, &f, &kernel, &env, 50_000, 11).unwrap();
    let large = mc_crosscheck(1.0, l0, &f, &kernel, &env, 200_000, 12).unwrap();
    let ratio = small.stderr / large.stderr;
    assert!((ratio - 2.0).abs() < 0.4, "stderr ratio {ratio}");
}

#[test]
fn monte_carlo_is_reproducible() {
    let (f, kernel, env) = setup();
    let a = mc_crosscheck(1.0, 0.5, &f, &kernel, &env, 20_000, 5).unwrap();
    let b = mc_crosscheck(1.0, 0.5, &f, &kernel, &env, 20_000, 5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn theorem_holds_for_several_masses() {
    let (f, kernel, env) = setup();
    let report = verify_theorem(&[1.0, 2.0, 4.0], &f, &kernel, &env).unwrap();
    for row in &report.rows {
        assert!(row.holds && row.margin >= 1.0, "{row:?}");
        assert!(row.normalization_chain);
        assert_eq!(row.gamma, report.gamma);
    }
    // Bound at 2m relative to m: 16 φ(4√2m)²/φ(2√2m)².
    let (a, b) = (&report.rows[0], &report.rows[1]);
    let expected = 16.0 * (env.phi(4.0 * SQRT_2) / env.phi(2.0 * SQRT_2)).powi(2);
    assert!((b.bound / a.bound - expected).abs() < 1e-12 * expected);
}

#[test]
fn upper_bounding_expression_is_most_negative_at_vertex() {
    let (_, kernel, env) = setup();
    let (l0, pmax) = optimize_lambda(&kernel).unwrap();
    let gamma = gamma_constant(&kernel, l0, pmax);
    let m: f64 = 2.0;
    let phi = env.phi(2.0 * SQRT_2 * m);
    let expr =
        |l: f64| -normalization_sq(&kernel, l, phi) * p_lambda(&kernel, l) * m.powi(4) * phi * phi;
    // φ is tiny here, so |𝒩|² ≈ 1 and the vertex of P governs.
    let at_vertex = expr(l0);
    for i in 1..=40 {
        let l = l0 * i as f64 / 20.0;
        assert!(expr(l) >= at_vertex - 1e-15 * at_vertex.abs());
    }
    assert!(at_vertex <= -gamma * m.powi(4) * phi * phi);
}
