//! The five analyses. Each fills a Report and returns the first violated
//! check, if any, after everything computable has been recorded.

use std::f64::consts::SQRT_2;

use serde::Serialize;
use serde_json::json;
use splitlab::distal::{
    covering_radius, derivative_kappa, distal_model_band, shrink_construction, Ball, RadialDiffeo,
};
use splitlab::negstate::{
    build_profile, derive_kernel, kinematic_sweep, mc_crosscheck, verify_theorem,
};
use splitlab::negstate::{gamma_constant, optimize_lambda, KernelC};
use splitlab::qei::{
    computed_q, qei_mass_sum_test, qei_to_nuclearity_pipeline, single_field_bound, QeiValue,
    ScalingFit,
};
use splitlab::testfn::{
    build_test_function, envelope_slack, kappa_envelope, make_mollifier, self_convolve,
    TestFunction, ENVELOPE_SLACK,
};
use splitlab::tower::{
    classify_nuclearity_with, counting_integral_identity_check, f_sum, g_sum,
    local_normality_verdict, nuclearity_index_bounds, tauberian_counting_bound, MassTower,
    SumVerdict, Tri,
};
use splitlab::LabError;

use crate::output::{num, opt, Report, Table};
use crate::plot::{Plot, Series, Style};
use crate::{CliError, RunConfig};

/// Jumps drawn in the N(u) step plot before falling back to grid samples.
const STEP_PLOT_JUMPS: usize = 10_000;
/// Samples of the kinematic sweep per mass.
const SWEEP_SAMPLES: usize = 500;
/// Points of the (t, f(t)) export.
const TIME_POINTS: usize = 401;

fn tower_of(cfg: &RunConfig) -> Result<MassTower, CliError> {
    cfg.tower
        .build()
        .map_err(|e| CliError::Config(vec![format!("tower: {e}")]))
}

fn test_function(cfg: &RunConfig) -> Result<TestFunction, CliError> {
    let chi = make_mollifier(cfg.testfn.a, cfg.testfn.shape)?;
    Ok(build_test_function(self_convolve(&chi), cfg.testfn.beta0)?)
}

fn kernel(cfg: &RunConfig) -> Result<KernelC, CliError> {
    let profile = build_profile(cfg.negstate.g, cfg.negstate.h)?;
    Ok(derive_kernel(&profile)?)
}

fn status(v: &SumVerdict) -> &'static str {
    match v {
        SumVerdict::Convergent { .. } => "convergent",
        SumVerdict::Divergent { .. } => "divergent",
        SumVerdict::Undetermined { .. } => "undetermined",
    }
}

fn tri(t: Tri) -> &'static str {
    match t {
        Tri::Yes => "yes",
        Tri::No => "no",
        Tri::Undetermined => "undetermined",
    }
}

/// Maps "cannot be certified" outcomes to None and propagates real failures.
fn optional<T>(r: splitlab::Result<T>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(LabError::Divergent(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn counting_points(tower: &MassTower, u_max: f64, grid: &[f64]) -> Vec<(f64, f64)> {
    let masses: Vec<f64> = (1..=STEP_PLOT_JUMPS as u64 + 1)
        .map_while(|r| tower.mass(r))
        .take_while(|&m| m <= u_max)
        .collect();
    if masses.len() <= STEP_PLOT_JUMPS {
        let mut pts = vec![(0.0, 0.0)];
        let mut last = f64::NAN;
        for m in masses {
            if m != last {
                pts.push((m, tower.counting_real(m)));
                last = m;
            }
        }
        pts.push((u_max, tower.counting_real(u_max)));
        pts
    } else {
        grid.iter().map(|&u| (u, tower.counting_real(u))).collect()
    }
}

#[derive(Serialize)]
struct TowerRow {
    beta: f64,
    f: SumVerdict,
    g: SumVerdict,
    index_bounds: Option<splitlab::tower::IndexBounds>,
    identity: Option<splitlab::tower::IdentityCheck>,
    normal_sufficient: &'static str,
    normal_necessary: &'static str,
}

pub fn tower_report(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let tower = tower_of(cfg)?;
    let consts = cfg.constants.index();
    let radius = 2.0 / tower.m1();
    let nuclearity = classify_nuclearity_with(&tower, &consts, radius)?;

    let mut table = Table::new(&[
        "beta",
        "F",
        "F_status",
        "F_remainder",
        "G",
        "G_status",
        "G_remainder",
        "index_lower",
        "log_index_upper_exact",
        "log_index_upper_simplified",
        "identity_residual",
        "normal_sufficient",
        "normal_necessary",
    ]);
    let mut rows = Vec::new();
    for &beta in &cfg.grids.beta {
        let f = f_sum(&tower, beta)?;
        let g = g_sum(&tower, beta)?;
        let bounds = optional(nuclearity_index_bounds(&tower, radius, beta, &consts))?;
        let identity = optional(counting_integral_identity_check(&tower, beta))?;
        let normality = local_normality_verdict(&tower, beta)?;
        let row = TowerRow {
            beta,
            normal_sufficient: status(&normality.sufficient),
            normal_necessary: status(&normality.necessary),
            f,
            g,
            index_bounds: bounds,
            identity,
        };
        table.push(vec![
            num(beta),
            opt(row.f.value()),
            status(&row.f).into(),
            opt(row.f.remainder()),
            opt(row.g.value()),
            status(&row.g).into(),
            opt(row.g.remainder()),
            opt(bounds.map(|b| b.lower)),
            opt(bounds.map(|b| b.log_upper_exact)),
            opt(bounds.map(|b| b.log_upper_simplified)),
            opt(identity.map(|c| c.residual)),
            row.normal_sufficient.into(),
            row.normal_necessary.into(),
        ]);
        rows.push(row);
    }
    report.csv("tower.csv", &table);

    let u_max = cfg.grids.u.iter().copied().fold(0.0, f64::max);
    let steps = counting_points(&tower, u_max, &cfg.grids.u);
    let mut counting = Table::new(&["u", "N"]);
    for &u in &cfg.grids.u {
        counting.push(vec![num(u), num(tower.counting_real(u))]);
    }
    report.csv("counting.csv", &counting);

    // N(v) ≤ (A/β²) e^{(β₀/β)ⁿ + βv} once the criterion exponents are known.
    let tauberian = match nuclearity.exponents {
        Some(e) => {
            let mut t = Table::new(&["v", "beta", "log_bound", "N"]);
            for &v in cfg.grids.u.iter().filter(|v| **v > 0.0) {
                let b = tauberian_counting_bound(e.n, e.beta0, cfg.constants.a, v)?;
                t.push(vec![
                    num(v),
                    num(b.beta),
                    num(b.log_value),
                    num(tower.counting_real(v)),
                ]);
            }
            report.csv("tauberian.csv", &t);
            true
        }
        None => false,
    };

    let normal_all = local_normality_verdict(&tower, 1.0)?.all_beta;
    report.json(
        "tower.json",
        &json!({
            "analysis": "tower-report",
            "config": cfg,
            "tower": tower,
            "diamond_radius": radius,
            "necessary_holds": tri(nuclearity.necessary_holds),
            "sufficient_holds": tri(nuclearity.sufficient_holds),
            "nuclearity": nuclearity,
            "locally_normal_all_beta": tri(normal_all),
            "tauberian_table": tauberian,
            "rows": rows,
        }),
    )?;

    let ln_points = |pick: fn(&TowerRow) -> &SumVerdict| -> Vec<(f64, f64)> {
        rows.iter()
            .filter_map(|r| pick(r).value().map(|v| (r.beta, v.ln())))
            .collect()
    };
    report.plot(
        "tower_sums.svg",
        Plot {
            title: "Mass sums".into(),
            x_label: "β (inverse mass)".into(),
            y_label: "ln of sum (dimensionless)".into(),
            series: vec![
                Series {
                    label: "ln F(β)".into(),
                    points: ln_points(|r| &r.f),
                    style: Style::Line,
                },
                Series {
                    label: "ln G(β)".into(),
                    points: ln_points(|r| &r.g),
                    style: Style::Line,
                },
            ],
        },
    );
    report.plot(
        "counting.svg",
        Plot {
            title: "Counting function".into(),
            x_label: "u (mass)".into(),
            y_label: "N(u) (count)".into(),
            series: vec![Series {
                label: "N(u)".into(),
                points: steps,
                style: Style::Step,
            }],
        },
    );
    Ok(())
}

pub fn qei_report(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let tower = tower_of(cfg)?;
    let f = test_function(cfg)?;
    let envelope = kappa_envelope(&f)?;
    let (d, c) = (cfg.constants.d, cfg.constants.big_c);

    let mut single = Table::new(&["m", "bound", "error"]);
    let mut single_json = Vec::new();
    for &m in &cfg.grids.m {
        let b = single_field_bound(|u| f.fourier_resolved(u), m, d, c)?;
        let (value, error) = match b.value {
            QeiValue::Finite { value, error } => (value, error),
            QeiValue::Divergent { ref diagnostic } => {
                return Err(CliError::Numeric(LabError::Divergent(diagnostic.clone())))
            }
        };
        single.push(vec![num(m), num(value), num(error)]);
        single_json.push(json!({"m": m, "bound": value, "error": error}));
    }
    report.csv("qei_single.csv", &single);

    let lambdas = &cfg.grids.lambda;
    let (fit, q_status) = match computed_q(&f, &tower, lambdas, d, c) {
        Ok(q) => (Some(ScalingFit::fit(lambdas, &q)?), "finite".to_string()),
        Err(LabError::Divergent(msg)) => (None, format!("divergent: {msg}")),
        Err(LabError::InvalidParameter { reason, .. }) => (None, format!("undetermined: {reason}")),
        Err(e) => return Err(e.into()),
    };
    let mut scaling = Table::new(&["lambda", "Q", "fit_bound"]);
    if let Some(fit) = &fit {
        for (&l, &q) in fit.lambda_grid.iter().zip(&fit.q_values) {
            scaling.push(vec![num(l), num(q), num(fit.bound(l))]);
        }
    }
    report.csv("qei_scaling.csv", &scaling);

    let mass_sums = qei_mass_sum_test(&envelope, &tower, lambdas)?;
    let kernel = kernel(cfg)?;
    let (lambda0, p_max) = optimize_lambda(&kernel)?;
    let gamma = gamma_constant(&kernel, lambda0, p_max);
    let pipeline = qei_to_nuclearity_pipeline(&f, &tower, fit.as_ref(), gamma)?;

    let mut verdicts = Table::new(&[
        "beta",
        "mass_sum_status",
        "mass_sum",
        "G_status",
        "G",
        "implied_G_bound",
    ]);
    for (beta, sum) in &pipeline.mass_sums {
        let implied = pipeline.implied_g.iter().find(|i| i.beta == *beta);
        verdicts.push(vec![
            num(*beta),
            status(sum).into(),
            opt(sum.value()),
            implied.map(|i| status(&i.g)).unwrap_or("").into(),
            opt(implied.and_then(|i| i.g.value())),
            opt(implied.map(|i| i.implied_bound)),
        ]);
    }
    report.csv("qei_verdicts.csv", &verdicts);

    let mass_sum_json: Vec<_> = mass_sums
        .iter()
        .map(|(l, v)| json!({"lambda": l, "sum": v}))
        .collect();
    report.json(
        "qei.json",
        &json!({
            "analysis": "qei-report",
            "config": cfg,
            "envelope": envelope,
            "single_field": single_json,
            "q_status": q_status,
            "scaling_fit": fit,
            "mass_sum_test": mass_sum_json,
            "gamma": gamma,
            "pipeline": pipeline,
        }),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct NegstateRow {
    m: f64,
    lambda0: f64,
    #[serde(rename = "Gamma")]
    gamma: f64,
    energy: f64,
    error_estimate: f64,
    bound: f64,
    margin: f64,
    mc_estimate: Option<f64>,
    mc_stderr: Option<f64>,
    mc_agrees: Option<bool>,
    normalization_chain: bool,
    holds: bool,
}

pub fn negstate_verify(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let f = test_function(cfg)?;
    let envelope = kappa_envelope(&f)?.with_cutoff(cfg.negstate.m0)?;
    let kernel = kernel(cfg)?;
    let theorem = verify_theorem(&cfg.grids.m, &f, &kernel, &envelope)?;

    let mut rows = Vec::new();
    let mut sweeps = Vec::new();
    let mut violations = Vec::new();
    for (i, row) in theorem.rows.iter().enumerate() {
        let mc = if cfg.negstate.mc_samples > 0 {
            Some(mc_crosscheck(
                row.m,
                theorem.lambda0,
                &f,
                &kernel,
                &envelope,
                cfg.negstate.mc_samples,
                cfg.seed.wrapping_add(i as u64),
            )?)
        } else {
            None
        };
        let agrees = mc.map(|mc| (mc.estimate - row.energy).abs() <= 3.0 * mc.stderr);
        if agrees == Some(false) {
            violations.push(format!(
                "Monte Carlo disagrees with quadrature at m = {}",
                row.m
            ));
        }
        let sweep = kinematic_sweep(row.m, SWEEP_SAMPLES, cfg.seed.wrapping_add(i as u64))?;
        let m = row.m;
        let in_range = sweep.omega_min >= 5f64.sqrt() * m / 2.0 * (1.0 - 1e-12)
            && sweep.omega_max <= SQRT_2 * m * (1.0 + 1e-12);
        if !(in_range && sweep.first_ratio_max <= 1.0 && sweep.second_ratio_min >= 1.0) {
            violations.push(format!("kinematic inequality violated at m = {m}"));
        }
        sweeps.push(json!({"m": m, "sweep": sweep, "holds": in_range
            && sweep.first_ratio_max <= 1.0 && sweep.second_ratio_min >= 1.0}));
        rows.push(NegstateRow {
            m,
            lambda0: row.lambda0,
            gamma: row.gamma,
            energy: row.energy,
            error_estimate: row.error_estimate,
            bound: row.bound,
            margin: row.margin,
            mc_estimate: mc.map(|v| v.estimate),
            mc_stderr: mc.map(|v| v.stderr),
            mc_agrees: agrees,
            normalization_chain: row.normalization_chain,
            holds: row.holds,
        });
    }

    let mut table = Table::new(&[
        "m",
        "lambda0",
        "Gamma",
        "energy",
        "error_estimate",
        "bound",
        "margin",
        "mc_estimate",
        "mc_stderr",
    ]);
    for r in &rows {
        table.push(vec![
            num(r.m),
            num(r.lambda0),
            num(r.gamma),
            num(r.energy),
            num(r.error_estimate),
            num(r.bound),
            num(r.margin),
            opt(r.mc_estimate),
            opt(r.mc_stderr),
        ]);
    }
    report.csv("negstate.csv", &table);
    report.json(
        "negstate.json",
        &json!({
            "analysis": "negstate-verify",
            "config": cfg,
            "lambda0": theorem.lambda0,
            "p_max": theorem.p_max,
            "Gamma": theorem.gamma,
            "trace_C": theorem.trace,
            "double_integral": theorem.double_integral,
            "legendre_cutoff": kernel.cutoff,
            "envelope": envelope,
            "rows": rows,
            "kinematic_sweeps": sweeps,
        }),
    )?;
    let log_neg = |pick: fn(&NegstateRow) -> f64| -> Vec<(f64, f64)> {
        rows.iter().map(|r| (r.m, (-pick(r)).log10())).collect()
    };
    report.plot(
        "energy.svg",
        Plot {
            title: "Averaged energy against the bound".into(),
            x_label: "m (mass)".into(),
            y_label: "log10(−value) (energy density)".into(),
            series: vec![
                Series {
                    label: "energy".into(),
                    points: log_neg(|r| r.energy),
                    style: Style::Line,
                },
                Series {
                    label: "−Γm⁴φ(2√2m)²".into(),
                    points: log_neg(|r| r.bound),
                    style: Style::Line,
                },
            ],
        },
    );
    match violations.first() {
        Some(v) => Err(CliError::Check(v.clone())),
        None => Ok(()),
    }
}

pub fn testfn_build(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let f = test_function(cfg)?;
    let envelope = kappa_envelope(&f)?;
    let (worst_u, slack) = envelope_slack(&f, &envelope);

    let radius = f.support_radius();
    let mut time = Table::new(&["t", "f"]);
    for k in 0..TIME_POINTS {
        let t = -radius + 2.0 * radius * k as f64 / (TIME_POINTS - 1) as f64;
        time.push(vec![num(t), num(f.eval(t))]);
    }
    report.csv("testfn_time.csv", &time);

    let mut transform = Table::new(&["u", "fhat", "envelope"]);
    let mut fhat = Vec::new();
    for &u in &cfg.grids.u {
        let v = f.fourier(u)?;
        transform.push(vec![num(u), num(v), num(envelope.phi(u))]);
        fhat.push((u, v));
    }
    report.csv("testfn_transform.csv", &transform);

    let certified = slack >= -ENVELOPE_SLACK;
    report.json(
        "testfn.json",
        &json!({
            "analysis": "testfn-build",
            "config": cfg,
            "support_radius": radius,
            "normalization": f.normalization(),
            "integral": f.integral(),
            "kappa": envelope.kappa,
            "beta0": envelope.beta0,
            "min_slack": slack,
            "min_slack_u": worst_u,
            "envelope_certified": certified,
            "resolved_frequency": f.resolved_frequency(),
        }),
    )?;
    let log_pts = |pts: Vec<(f64, f64)>| -> Vec<(f64, f64)> {
        pts.into_iter()
            .filter(|(_, v)| *v > 0.0)
            .map(|(u, v)| (u, v.ln()))
            .collect()
    };
    report.plot(
        "testfn_transform.svg",
        Plot {
            title: "Fourier transform and envelope".into(),
            x_label: "u (inverse time)".into(),
            y_label: "ln value (dimensionless)".into(),
            series: vec![
                Series {
                    label: "ln f̂(u)".into(),
                    points: log_pts(fhat),
                    style: Style::Line,
                },
                Series {
                    label: "ln κe^{-β₀u}".into(),
                    points: log_pts(cfg.grids.u.iter().map(|&u| (u, envelope.phi(u))).collect()),
                    style: Style::Line,
                },
            ],
        },
    );
    if certified {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "envelope undershoots f̂ by {slack:e} at u = {worst_u}"
        )))
    }
}

pub fn distal_demo(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let d = &cfg.distal;
    let ball = Ball::new(d.radius)?;
    let identity = RadialDiffeo::identity(d.dimension)?;
    let identity_cover = covering_radius(&identity, &ball, d.r, d.slack)?;
    let scaling = RadialDiffeo::scaling(d.lambda, d.dimension)?;
    let kappa = derivative_kappa(&scaling, &ball, d.r)?;
    let scaled_cover = covering_radius(&scaling, &ball, d.r, d.slack)?;
    let shrink = shrink_construction(&ball, d.d_s, d.dimension)?;
    let band = distal_model_band(d.d0, d.r)?;

    let mut iterates = Table::new(&["k", "bound"]);
    for (k, b) in shrink.iterates.iter().enumerate() {
        iterates.push(vec![(k + 1).to_string(), num(*b)]);
    }
    report.csv("distal_shrink.csv", &iterates);
    let extent = d.radius + 3.0 * d.d_s;
    let mut psi = Table::new(&["s", "psi", "psi_prime"]);
    for k in 0..=200 {
        let s = extent * k as f64 / 200.0;
        psi.push(vec![
            num(s),
            num(shrink.diffeo.psi(s)),
            num(shrink.diffeo.derivative(s)),
        ]);
    }
    report.csv("distal_psi.csv", &psi);

    report.json(
        "distal.json",
        &json!({
            "analysis": "distal-demo",
            "config": cfg,
            "identity": {"r": d.r, "covering_radius": identity_cover},
            "scaling": {
                "lambda": d.lambda,
                "kappa": kappa,
                "covering_radius": scaled_cover,
            },
            "shrink": {
                "radius": shrink.radius,
                "d_s": shrink.d_s,
                "psi_at_half": shrink.psi_at_half,
                "covering_radius": shrink.covering_radius,
                "implied_bound": shrink.implied_bound,
                "holds": shrink.holds,
                "iterates": shrink.iterates,
                "conclusion": shrink.conclusion,
            },
            "model_band": band,
        }),
    )?;
    if shrink.holds {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "shrink construction failed: covering radius {} > {}",
            shrink.covering_radius, shrink.implied_bound
        )))
    }
}
