//! Quantum energy inequality bounds for single fields and towers, and the two
//! links between QEIs and nuclearity.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{require_positive, LabError, Result};
use crate::quad::{self, TailOutcome, Tolerance};
use crate::testfn::{kappa_envelope, rescale, ExponentialEnvelope, TestFunction};
use crate::tower::{
    classify_nuclearity, integrate_against_counting, local_normality_verdict, tauberian_constants,
    weighted_mass_sum, CountingFunction, MassTower, NuclearityVerdict, SumVerdict, TailDescriptor,
    Tri, Weight, FIT_WINDOW, PROBE_BETAS,
};

/// Relative increment that ends the doubling tail test.
pub const TAIL_REL_INCREMENT: f64 = 1e-10;
/// Doublings allowed before the integral is declared divergent.
pub const TAIL_MAX_DOUBLINGS: usize = 20;
/// Jumps of N(u) used as quadrature breakpoints.
const QEI_JUMPS: usize = 5000;
const SAMPLE_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum QeiValue {
    Finite { value: f64, error: f64 },
    Divergent { diagnostic: String },
}

/// Lower bound -C ∫ u^d N(u) |ĝ(u)|² du.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QeiBound {
    pub value: QeiValue,
    pub dimension: u32,
    pub constant: f64,
    /// (u, u^d N(u) |ĝ(u)|²)
    pub integrand_samples: Vec<(f64, f64)>,
}

impl QeiBound {
    pub fn finite_value(&self) -> Option<f64> {
        match self.value {
            QeiValue::Finite { value, .. } => Some(value),
            QeiValue::Divergent { .. } => None,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self.value, QeiValue::Divergent { .. })
    }
}

fn check_qei_params(d: u32, c: f64) -> Result<()> {
    if d < 2 {
        return Err(LabError::param(
            "d",
            format!("dimension must be >= 2, got {d}"),
        ));
    }
    require_positive("C", c)
}

fn finish(outcome: TailOutcome, d: u32, c: f64, samples: Vec<(f64, f64)>) -> QeiBound {
    let value = match outcome {
        TailOutcome::Finite(e) if e.value.is_finite() => QeiValue::Finite {
            value: -c * e.value,
            error: c * e.error,
        },
        TailOutcome::Finite(e) => QeiValue::Divergent {
            diagnostic: format!("integral is not finite: {}", e.value),
        },
        TailOutcome::Divergent {
            last_partial,
            last_increment,
            doublings,
        } => QeiValue::Divergent {
            diagnostic: format!(
                "tail test failed after {doublings} doublings \
                 (partial {last_partial:.6e}, last increment {last_increment:.6e})"
            ),
        },
    };
    QeiBound {
        value,
        dimension: d,
        constant: c,
        integrand_samples: samples,
    }
}

fn sample(integrand: impl Fn(f64) -> f64, start: f64, width: f64) -> Vec<(f64, f64)> {
    (0..SAMPLE_POINTS)
        .map(|k| {
            let u = start + width * k as f64 / 4.0;
            (u, integrand(u))
        })
        .collect()
}

/// -C ∫_m^∞ u^d |ĝ(u)|² du.
pub fn single_field_bound<G>(g_transform: G, m: f64, d: u32, c: f64) -> Result<QeiBound>
where
    G: Fn(f64) -> f64,
{
    check_qei_params(d, c)?;
    if !(m.is_finite() && m >= 0.0) {
        return Err(LabError::param(
            "m",
            format!("must be nonnegative, got {m}"),
        ));
    }
    let integrand = |u: f64| {
        let g = g_transform(u);
        u.powi(d as i32) * g * g
    };
    let width = m.max(1.0);
    let outcome = quad::integrate_to_infinity(
        integrand,
        m,
        width,
        TAIL_REL_INCREMENT,
        TAIL_MAX_DOUBLINGS,
        Tolerance::new(0.0, 1e-11),
    );
    Ok(finish(outcome, d, c, sample(integrand, m, width)))
}

/// -C ∫₀^∞ u^d N(u) |ĝ(u)|² du for a tower or any counting envelope.
pub fn tower_bound<G, N>(g_transform: G, counting: &N, d: u32, c: f64) -> Result<QeiBound>
where
    G: Fn(f64) -> f64,
    N: CountingFunction + ?Sized,
{
    check_qei_params(d, c)?;
    let weight = |u: f64| {
        let g = g_transform(u);
        u.powi(d as i32) * g * g
    };
    let outcome = integrate_against_counting(
        counting,
        weight,
        QEI_JUMPS,
        TAIL_REL_INCREMENT,
        TAIL_MAX_DOUBLINGS,
    );
    let first = counting.jumps(1).first().copied().unwrap_or(0.0);
    let samples = sample(|u| weight(u) * counting.count(u), first, first.max(1.0));
    Ok(finish(outcome, d, c, samples))
}

/// Smooth counting envelope B v^{2/(n+1)} e^{C v^{n/(n+1)}} implied by the
/// nuclearity criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountingEnvelope {
    pub n: f64,
    pub b: f64,
    pub c: f64,
}

impl CountingFunction for CountingEnvelope {
    fn count(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let q = 1.0 / (self.n + 1.0);
        self.b * u.powf(2.0 * q) * (self.c * u.powf(self.n * q)).exp()
    }

    fn jumps(&self, _limit: usize) -> Vec<f64> {
        Vec::new()
    }
}

/// Σ_r m_r⁴ φ(2√2 λ m_r)² for every λ on the grid.
pub fn qei_mass_sum_test(
    envelope: &ExponentialEnvelope,
    tower: &MassTower,
    lambda_grid: &[f64],
) -> Result<Vec<(f64, SumVerdict)>> {
    lambda_grid
        .iter()
        .map(|&lambda| {
            let weight = Weight::QuarticPhi {
                lambda,
                envelope: *envelope,
            };
            Ok((lambda, weighted_mass_sum(tower, weight)?))
        })
        .collect()
}

/// Polynomial scaling Q(λ) ≤ C_fit λ^{-n_fit} over a decreasing λ grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub c_fit: f64,
    pub n_fit: f64,
    pub lambda_grid: Vec<f64>,
    pub q_values: Vec<f64>,
}

fn check_grid(lambda_grid: &[f64]) -> Result<()> {
    if lambda_grid.len() < 2 {
        return Err(LabError::param(
            "lambda_grid",
            "at least two values are required",
        ));
    }
    for &l in lambda_grid {
        require_positive("lambda", l)?;
    }
    if lambda_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::param(
            "lambda_grid",
            "must be strictly decreasing",
        ));
    }
    Ok(())
}

impl ScalingFit {
    /// Q(λ) = C λ^{-n} supplied as a hypothesis.
    pub fn power_law(c: f64, n: f64, lambda_grid: &[f64]) -> Result<Self> {
        require_positive("C", c)?;
        require_positive("n", n)?;
        check_grid(lambda_grid)?;
        Ok(ScalingFit {
            c_fit: c,
            n_fit: n,
            lambda_grid: lambda_grid.to_vec(),
            q_values: lambda_grid.iter().map(|l| c * l.powf(-n)).collect(),
        })
    }

    /// Least-squares exponent of log Q against log λ; the constant is raised
    /// until the bound holds at every grid point.
    pub fn fit(lambda_grid: &[f64], q_values: &[f64]) -> Result<Self> {
        check_grid(lambda_grid)?;
        if q_values.len() != lambda_grid.len() {
            return Err(LabError::param(
                "q_values",
                "length differs from lambda grid",
            ));
        }
        for &q in q_values {
            require_positive("Q", q)?;
        }
        let xs: Vec<f64> = lambda_grid.iter().map(|l| l.ln()).collect();
        let ys: Vec<f64> = q_values.iter().map(|q| q.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let n_fit = -sxy / sxx;
        if !(n_fit > 0.0) {
            return Err(LabError::CheckFailed(format!(
                "Q(lambda) does not grow as lambda decreases (fitted exponent {n_fit})"
            )));
        }
        let c_fit = lambda_grid
            .iter()
            .zip(q_values)
            .map(|(l, q)| q * l.powf(n_fit))
            .fold(0.0, f64::max);
        Ok(ScalingFit {
            c_fit,
            n_fit,
            lambda_grid: lambda_grid.to_vec(),
            q_values: q_values.to_vec(),
        })
    }

    pub fn bound(&self, lambda: f64) -> f64 {
        self.c_fit * lambda.powf(-self.n_fit)
    }
}

/// Q(λ) = |tower_bound| with the rescaled transform f̂_λ as weight.
pub fn computed_q(
    f: &TestFunction,
    tower: &MassTower,
    lambda_grid: &[f64],
    d: u32,
    c: f64,
) -> Result<Vec<f64>> {
    check_grid(lambda_grid)?;
    // f̂ of a compactly supported f cannot decay exponentially, so exponential
    // counting growth makes every Q(λ) infinite.
    match tower.tail() {
        TailDescriptor::Logarithmic { d0 } => {
            return Err(LabError::Divergent(format!(
                "N(u) grows like exp({}u) while f̂ decays subexponentially",
                2.0 * d0
            )))
        }
        TailDescriptor::Custom { tail_slope: None } => {
            return Err(LabError::param(
                "tower",
                "custom tower needs a tail bound for Q(λ)",
            ))
        }
        _ => {}
    }
    lambda_grid
        .par_iter()
        .map(|&lambda| {
            let g = rescale(f, lambda)?;
            let bound = tower_bound(|u| g.fourier_resolved(u), tower, d, c)?;
            match bound.value {
                QeiValue::Finite { value, .. } => Ok(value.abs()),
                QeiValue::Divergent { diagnostic } => Err(LabError::Divergent(format!(
                    "Q({lambda}) diverges: {diagnostic}"
                ))),
            }
        })
        .collect()
}

pub fn computed_scaling_fit(
    f: &TestFunction,
    tower: &MassTower,
    lambda_grid: &[f64],
    d: u32,
    c: f64,
) -> Result<ScalingFit> {
    let q = computed_q(f, tower, lambda_grid, d, c)?;
    ScalingFit::fit(lambda_grid, &q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineConclusion {
    /// Locally normal at all temperatures and the nuclearity criterion holds.
    NuclearityFulfilled,
    /// Locally normal at all temperatures; no polynomial scaling available.
    LocallyNormalOnly,
    /// Σ e^{-4√2βm} diverges, so no QEI of the assumed form can exist.
    HypothesesFail,
    /// The test function has no exponential lower envelope.
    Inapplicable,
    Undetermined,
}

/// G(β) at a probe β against the bound implied by Q.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpliedGBound {
    pub beta: f64,
    pub implied_bound: f64,
    pub g: SumVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub conclusion: PipelineConclusion,
    pub envelope: Option<ExponentialEnvelope>,
    /// Σ e^{-4√2βm_r} at each probe β.
    pub mass_sums: Vec<(f64, SumVerdict)>,
    /// Local normality at all temperatures, as concluded by the theorem.
    pub locally_normal: Tri,
    /// Direct local-normality check of the tower on the probe grid.
    pub local_normality_check: Tri,
    pub implied_g: Vec<ImpliedGBound>,
    pub nuclearity: NuclearityVerdict,
    pub reason: String,
}

/// Runs the chain QEI ⇒ convergent mass sums ⇒ local normality, and with a
/// polynomial Q ⇒ polynomial G ⇒ nuclearity. `gamma` is the constant Γ of
/// the negative-energy construction.
pub fn qei_to_nuclearity_pipeline(
    f: &TestFunction,
    tower: &MassTower,
    q: Option<&ScalingFit>,
    gamma: f64,
) -> Result<PipelineReport> {
    require_positive("Gamma", gamma)?;
    let nuclearity = classify_nuclearity(tower)?;
    let local_normality_check = local_normality_verdict(tower, 1.0)?.all_beta;
    let mut report = PipelineReport {
        conclusion: PipelineConclusion::Undetermined,
        envelope: None,
        mass_sums: Vec::new(),
        locally_normal: Tri::Undetermined,
        local_normality_check,
        implied_g: Vec::new(),
        nuclearity,
        reason: String::new(),
    };
    let envelope = match kappa_envelope(f) {
        Ok(env) => env,
        Err(e) => {
            report.conclusion = PipelineConclusion::Inapplicable;
            report.reason = format!("no exponential envelope: {e}");
            return Ok(report);
        }
    };
    report.envelope = Some(envelope);
    let m1 = tower.m1();
    if m1 <= envelope.m0 {
        report.conclusion = PipelineConclusion::Inapplicable;
        report.reason = format!(
            "mass gap {m1} does not exceed envelope cutoff {}",
            envelope.m0
        );
        return Ok(report);
    }

    for &beta in PROBE_BETAS.iter() {
        let weight = Weight::Plain {
            beta: 4.0 * std::f64::consts::SQRT_2 * beta,
        };
        report
            .mass_sums
            .push((beta, weighted_mass_sum(tower, weight)?));
    }
    if let Some((beta, _)) = report.mass_sums.iter().find(|(_, v)| v.is_divergent()) {
        report.conclusion = PipelineConclusion::HypothesesFail;
        report.locally_normal = Tri::No;
        report.reason = format!(
            "sum of exp(-4 sqrt2 beta m_r) diverges at beta = {beta}: no QEI for the rescaled test functions"
        );
        return Ok(report);
    }
    if report.mass_sums.iter().any(|(_, v)| !v.is_convergent()) {
        report.reason = "mass sums cannot be certified for this tower".into();
        return Ok(report);
    }
    report.locally_normal = Tri::Yes;

    let Some(q) = q else {
        report.conclusion = PipelineConclusion::LocallyNormalOnly;
        report.reason = "mass sums converge; no scaling bound supplied".into();
        return Ok(report);
    };
    // Γ κ² m₁⁴ Σ e^{-4√2 β₀ λ m_r} ≤ Q(λ), and G(β) is that sum at λ = β/(16√2 β₀).
    let scale = 16.0 * std::f64::consts::SQRT_2 * envelope.beta0;
    let denominator = gamma * envelope.kappa * envelope.kappa * m1.powi(4);
    for &beta in &PROBE_BETAS[..FIT_WINDOW] {
        report.implied_g.push(ImpliedGBound {
            beta,
            implied_bound: q.bound(beta / scale) / denominator,
            g: weighted_mass_sum(tower, Weight::G { beta })?,
        });
    }
    report.conclusion = PipelineConclusion::NuclearityFulfilled;
    report.reason = format!(
        "mass sums converge and Q(lambda) <= {:.6e} lambda^-{:.6}: G(beta) grows at most like beta^-{:.6}",
        q.c_fit, q.n_fit, q.n_fit
    );
    Ok(report)
}

/// Whether ĝ(u) = O(e^{-γ|u|^α}) yields a finite tower QEI under the
/// nuclearity criterion with exponents (n, β₀).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QeiDomain {
    pub admissible: bool,
    pub alpha_threshold: f64,
    /// Growth constant C of the counting bound.
    pub growth_constant: f64,
    /// γ must exceed this at α = n/(n+1).
    pub gamma_threshold: f64,
    pub reason: String,
}

const ALPHA_EPS: f64 = 1e-12;

pub fn nuclearity_to_qei_domain(n: f64, gamma: f64, alpha: f64, beta0: f64) -> Result<QeiDomain> {
    require_positive("gamma", gamma)?;
    require_positive("alpha", alpha)?;
    let (_, growth_constant) = tauberian_constants(n, beta0, 1.0)?;
    let alpha_threshold = n / (n + 1.0);
    // |ĝ|² decays like e^{-2γu^α} against N ≤ B v^{..} e^{C v^α}.
    let gamma_threshold = 0.5 * growth_constant;
    let (admissible, reason) = if (alpha - alpha_threshold).abs() <= ALPHA_EPS {
        if gamma > gamma_threshold {
            (
                true,
                format!("alpha = n/(n+1) and gamma {gamma} > C/2 = {gamma_threshold}"),
            )
        } else {
            (
                false,
                format!("alpha = n/(n+1) but gamma {gamma} <= C/2 = {gamma_threshold}"),
            )
        }
    } else if alpha > alpha_threshold {
        (true, format!("alpha {alpha} > n/(n+1) = {alpha_threshold}"))
    } else {
        (
            false,
            format!("alpha {alpha} < n/(n+1) = {alpha_threshold}"),
        )
    };
    Ok(QeiDomain {
        admissible,
        alpha_threshold,
        growth_constant,
        gamma_threshold,
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::default_test_function;

    #[test]
    fn gamma_integral() {
        let b = single_field_bound(|u| (-u).exp(), 0.0, 4, 1.0).unwrap();
        let v = b.finite_value().unwrap();
        assert!((v + 0.75).abs() < 1e-10, "{v}");
        let b = single_field_bound(|u| (-u).exp(), 0.0, 4, 2.5).unwrap();
        assert!((b.finite_value().unwrap() + 1.875).abs() < 1e-10);
    }

    #[test]
    fn monotone_in_mass() {
        let mut last = -f64::INFINITY;
        for m in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0] {
            let v = single_field_bound(|u| (-u).exp(), m, 4, 1.0)
                .unwrap()
                .finite_value()
                .unwrap();
            assert!(v <= 0.0 && v >= last, "m={m}: {v} after {last}");
            last = v;
        }
        assert!(last > -1e-15);
    }

    #[test]
    fn non_decaying_transform_diverges() {
        let b = single_field_bound(|_| 1.0, 0.0, 4, 1.0).unwrap();
        assert!(b.is_divergent());
        assert!(single_field_bound(|u| (-u).exp(), 0.0, 1, 1.0).is_err());
    }

    #[test]
    fn one_element_tower_reduces() {
        let tower = MassTower::finite(vec![1.5]).unwrap();
        let t = tower_bound(|u| (-u).exp(), &tower, 4, 1.0).unwrap();
        let s = single_field_bound(|u| (-u).exp(), 1.5, 4, 1.0).unwrap();
        let (a, b) = (t.finite_value().unwrap(), s.finite_value().unwrap());
        assert!((a - b).abs() < 1e-8 * b.abs(), "{a} vs {b}");
    }

    #[test]
    fn tower_bounds_on_example_spectra() {
        let log = MassTower::logarithmic(1.0).unwrap();
        assert!(tower_bound(|u| (-0.25 * u).exp(), &log, 4, 1.0)
            .unwrap()
            .is_divergent());
        let ar = MassTower::arithmetic(1.0).unwrap();
        let t = tower_bound(|u| (-u).exp(), &ar, 4, 1.0).unwrap();
        let s = single_field_bound(|u| (-u).exp(), 1.0, 4, 1.0).unwrap();
        assert!(t.finite_value().unwrap() <= s.finite_value().unwrap());
        // Σ_r ∫_r^∞ u⁴e^{-2u} du, summed termwise
        let termwise: f64 = (1..200)
            .map(|r| {
                let r = r as f64;
                (-2.0 * r).exp() * (r.powi(4) / 2.0 + r.powi(3) + 1.5 * r * r + 1.5 * r + 0.75)
            })
            .sum();
        assert!((t.finite_value().unwrap() + termwise).abs() < 1e-9 * termwise);
    }

    #[test]
    fn mass_sum_test_examples() {
        let env = ExponentialEnvelope::new(1.0, 1.0, 0.0).unwrap();
        let ar = MassTower::arithmetic(1.0).unwrap();
        let v = qei_mass_sum_test(&env, &ar, &[1.0]).unwrap();
        assert!(v[0].1.is_convergent());
        // log tower: terms (log n / 2)⁴ n^{-2√2 λ}; p-series threshold λ = 1/(2√2)
        let log = MassTower::logarithmic(1.0).unwrap();
        let v = qei_mass_sum_test(&env, &log, &[0.1, 0.3, 0.4, 10.0]).unwrap();
        assert!(v[0].1.is_divergent() && v[1].1.is_divergent());
        assert!(v[2].1.is_convergent() && v[3].1.is_convergent());
    }

    #[test]
    fn scaling_fit_dominates() {
        let grid = [1.0, 0.5, 0.25, 0.125];
        let q = [1.0, 4.5, 15.0, 70.0];
        let fit = ScalingFit::fit(&grid, &q).unwrap();
        for (l, v) in grid.iter().zip(q) {
            assert!(fit.bound(*l) >= v * (1.0 - 1e-12));
        }
        assert!(ScalingFit::fit(&[0.5, 1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn domain_examples() {
        assert!(
            nuclearity_to_qei_domain(1.0, 1.0, 0.6, 1.0)
                .unwrap()
                .admissible
        );
        assert!(
            !nuclearity_to_qei_domain(1.0, 100.0, 0.4, 1.0)
                .unwrap()
                .admissible
        );
        let d = nuclearity_to_qei_domain(1.0, 0.5, 0.5, 1.0).unwrap();
        assert!((d.gamma_threshold - 1.0).abs() < 1e-15);
        assert!(!d.admissible);
        assert!(
            nuclearity_to_qei_domain(1.0, 1.01, 0.5, 1.0)
                .unwrap()
                .admissible
        );
        assert!(
            nuclearity_to_qei_domain(1e-9, 1.0, 1e-6, 1.0)
                .unwrap()
                .admissible
        );
    }

    #[test]
    fn pipeline_examples() {
        let f = default_test_function(1.0).unwrap();
        let grid = [1.0, 0.5, 0.25, 0.1];
        let q = ScalingFit::power_law(1.0, 2.0, &grid).unwrap();
        let ar = MassTower::arithmetic(1.0).unwrap();
        let r = qei_to_nuclearity_pipeline(&f, &ar, Some(&q), 1e-3).unwrap();
        assert_eq!(r.conclusion, PipelineConclusion::NuclearityFulfilled);
        let log = MassTower::logarithmic(1.0).unwrap();
        let r = qei_to_nuclearity_pipeline(&f, &log, Some(&q), 1e-3).unwrap();
        assert_eq!(r.conclusion, PipelineConclusion::HypothesesFail);
        let fin = MassTower::finite(vec![1.0, 2.0]).unwrap();
        let r = qei_to_nuclearity_pipeline(&f, &fin, Some(&q), 1e-3).unwrap();
        assert_eq!(r.conclusion, PipelineConclusion::NuclearityFulfilled);
        let r = qei_to_nuclearity_pipeline(&f, &fin, None, 1e-3).unwrap();
        assert_eq!(r.conclusion, PipelineConclusion::LocallyNormalOnly);
    }
}
