//! Averaging functions with certified Fourier lower envelopes.
//!
//! The construction starts from an even, nonnegative bump χ, forms the self
//! convolution η = χ⋆χ (whose transform χ̂² is nonnegative) and damps it
//! with a Lorentzian:
//!
//! ```text
//! f(t) = β₀ η(t) / (π (t² + β₀²)) / Z,      ∫ f = 1.
//! ```
//!
//! The transform convention is ĝ(u) = ∫ e^{-iut} g(t) dt. Because the
//! Lorentzian transforms to e^{-β₀|u|}, f̂ = (η̂ ⋆ e^{-β₀|·|}) / (2πZ), which is
//! bounded below by κ e^{-β₀|u|} with κ = ∫₀^∞ η̂(v) e^{-β₀v} dv / (2πZ).

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, LabError, Result};
use crate::quad::{self, GaussLegendre, Tolerance};

/// Nodes per Gauss-Legendre panel used for all tabulated transforms.
const PANEL_ORDER: usize = 16;
/// Magnitude below which a computed f̂ value is rounding noise (∫|f| = 1).
pub const TRANSFORM_FLOOR: f64 = 1e-15;
/// Step of the scan for the resolved frequency range, in units of 1/β₀.
const RESOLVED_STEP: f64 = 4.0;
/// Imaginary residue tolerated in a transform of an even function.
const IMAG_TOL: f64 = 1e-10;
/// Allowed envelope undershoot on the verification grid.
pub const ENVELOPE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MollifierShape {
    /// exp(-1/(1 - (t/a)²)) on |t| < a.
    #[default]
    StandardBump,
}

/// Even, smooth, nonnegative bump χ vanishing for |t| ≥ support_radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    support_radius: f64,
    shape: MollifierShape,
}

/// Builds χ with the given support radius.
pub fn make_mollifier(support_radius: f64, shape: MollifierShape) -> Result<Mollifier> {
    require_positive("support_radius", support_radius)?;
    Ok(Mollifier {
        support_radius,
        shape,
    })
}

impl Mollifier {
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn shape(&self) -> MollifierShape {
        self.shape
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.shape {
            MollifierShape::StandardBump => standard_bump(t / self.support_radius),
        }
    }

    /// ∫ χ(t) dt.
    pub fn integral(&self) -> f64 {
        let a = self.support_radius;
        quad::adaptive(|t| self.eval(t), -a, a, Tolerance::new(1e-16, 1e-14)).value
    }

    /// χ̂(u) = ∫ χ(t) cos(ut) dt by composite Gauss-Legendre over the support.
    pub fn transform(&self, u: f64) -> f64 {
        let a = self.support_radius;
        let panels = MIN_PANELS.max((u.abs() * 2.0 * a / 4.0).ceil() as usize);
        GaussLegendre::new(PANEL_ORDER).composite(|t| self.eval(t) * (u * t).cos(), -a, a, panels)
    }
}

/// exp(-1/(1-x²)) for |x| < 1, zero otherwise.
pub fn standard_bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

/// Smallest composite panel count used for any transform table.
const MIN_PANELS: usize = 64;
/// Number of resolution levels; level k uses MIN_PANELS·2^k panels.
const LEVELS: usize = 7;

/// Panel count sufficient to resolve cos(ut) on an interval of the given
/// length with 16-node panels: u · (panel width) ≤ 4.
fn level_for(u: f64, length: f64) -> Option<usize> {
    let needed = (u.abs() * length / 4.0).ceil();
    (0..LEVELS).find(|k| (MIN_PANELS << k) as f64 >= needed)
}

/// η = χ⋆χ, tabulated lazily on composite Gauss-Legendre nodes of its
/// support at several resolutions.
#[derive(Debug)]
pub struct SelfConvolution {
    chi: Mollifier,
    /// Level k holds (t, weight, η(t)) over [-2a, 2a] with MIN_PANELS·2^k panels.
    levels: Vec<OnceLock<Vec<(f64, f64, f64)>>>,
}

/// η = χ⋆χ.
pub fn self_convolve(chi: &Mollifier) -> SelfConvolution {
    SelfConvolution {
        chi: *chi,
        levels: (0..LEVELS).map(|_| OnceLock::new()).collect(),
    }
}

/// η(t) = ∫ χ(s) χ(t - s) ds.
fn convolution_at(chi: &Mollifier, t: f64) -> f64 {
    let a = chi.support_radius;
    let lo = (-a).max(t - a);
    let hi = a.min(t + a);
    if hi <= lo {
        return 0.0;
    }
    quad::adaptive(
        |s| chi.eval(s) * chi.eval(t - s),
        lo,
        hi,
        Tolerance::new(1e-17, 1e-13),
    )
    .value
}

impl SelfConvolution {
    pub fn mollifier(&self) -> &Mollifier {
        &self.chi
    }

    pub fn support_radius(&self) -> f64 {
        2.0 * self.chi.support_radius
    }

    pub fn eval(&self, t: f64) -> f64 {
        convolution_at(&self.chi, t)
    }

    fn table(&self, level: usize) -> &[(f64, f64, f64)] {
        self.levels[level].get_or_init(|| {
            let r = self.support_radius();
            GaussLegendre::new(PANEL_ORDER)
                .composite_points(-r, r, MIN_PANELS << level)
                .into_iter()
                .map(|(t, w)| (t, w, convolution_at(&self.chi, t)))
                .collect()
        })
    }

    /// ∫ η from the coarsest table.
    pub fn integral(&self) -> f64 {
        self.table(0).iter().map(|(_, w, e)| w * e).sum()
    }

    /// η̂(u) by quadrature of η at a resolution chosen for u.
    pub fn transform(&self, u: f64) -> f64 {
        let length = 2.0 * self.support_radius();
        match level_for(u, length) {
            Some(level) => self
                .table(level)
                .iter()
                .map(|(t, w, e)| w * e * (u * t).cos())
                .sum(),
            None => {
                let r = self.support_radius();
                let panels = (u.abs() * length / 4.0).ceil() as usize;
                GaussLegendre::new(PANEL_ORDER).composite(
                    |t| self.eval(t) * (u * t).cos(),
                    -r,
                    r,
                    panels,
                )
            }
        }
    }
}

/// Tabulated w·f(t) for the unscaled test function, by resolution level.
#[derive(Debug)]
struct WeightedTables {
    levels: Vec<OnceLock<Vec<(f64, f64)>>>,
    resolved: OnceLock<f64>,
}

/// Normalized f(t) = β₀η(t)/(π(t²+β₀²)) / Z, optionally rescaled to
/// f_λ(t) = λ⁻¹ f(t/λ).
#[derive(Debug, Clone)]
pub struct TestFunction {
    eta: Arc<SelfConvolution>,
    beta0: f64,
    normalization: f64,
    scale: f64,
    tables: Arc<WeightedTables>,
}

fn lorentzian(beta0: f64, t: f64) -> f64 {
    beta0 / (std::f64::consts::PI * (t * t + beta0 * beta0))
}

/// Builds the normalized test function from η and β₀.
pub fn build_test_function(eta: SelfConvolution, beta0: f64) -> Result<TestFunction> {
    require_positive("beta0", beta0)?;
    let coarse: f64 = eta
        .table(0)
        .iter()
        .map(|(t, w, e)| w * e * lorentzian(beta0, *t))
        .sum();
    let fine: f64 = eta
        .table(1)
        .iter()
        .map(|(t, w, e)| w * e * lorentzian(beta0, *t))
        .sum();
    if !(fine.is_finite() && fine > 0.0) || (coarse - fine).abs() > 1e-12 * fine {
        return Err(LabError::Quadrature(format!(
            "normalization of f did not settle: {coarse:e} vs {fine:e}"
        )));
    }
    Ok(TestFunction {
        eta: Arc::new(eta),
        beta0,
        normalization: fine,
        scale: 1.0,
        tables: Arc::new(WeightedTables {
            levels: (0..LEVELS).map(|_| OnceLock::new()).collect(),
            resolved: OnceLock::new(),
        }),
    })
}

/// Test function with the default bump, a = 1 and the given β₀.
pub fn default_test_function(beta0: f64) -> Result<TestFunction> {
    let chi = make_mollifier(1.0, MollifierShape::StandardBump)?;
    build_test_function(self_convolve(&chi), beta0)
}

impl TestFunction {
    pub fn eta(&self) -> &SelfConvolution {
        &self.eta
    }

    /// β₀ of the unscaled function.
    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    /// Decay rate of the envelope of this (possibly rescaled) function: λβ₀.
    pub fn effective_beta0(&self) -> f64 {
        self.scale * self.beta0
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn support_radius(&self) -> f64 {
        self.scale * self.eta.support_radius()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let s = t / self.scale;
        lorentzian(self.beta0, s) * self.eta.eval(s) / self.normalization / self.scale
    }

    fn table(&self, level: usize) -> &[(f64, f64)] {
        self.tables.levels[level].get_or_init(|| {
            self.eta
                .table(level)
                .iter()
                .map(|(t, w, e)| (*t, w * e * lorentzian(self.beta0, *t) / self.normalization))
                .collect()
        })
    }

    /// ∫ f from the table.
    pub fn integral(&self) -> f64 {
        self.table(0).iter().map(|(_, wf)| wf).sum()
    }

    /// Real and imaginary parts of f̂(u) = ∫ e^{-iut} f(t) dt.
    pub fn transform_parts(&self, u: f64) -> (f64, f64) {
        // f̂_λ(u) = f̂(λu): work with the unscaled table.
        let v = u * self.scale;
        let length = 2.0 * self.eta.support_radius();
        let accumulate = |pts: &mut dyn Iterator<Item = (f64, f64)>| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (t, wf) in pts {
                let (s, c) = (v * t).sin_cos();
                re += wf * c;
                im -= wf * s;
            }
            (re, im)
        };
        match level_for(v, length) {
            Some(level) => accumulate(&mut self.table(level).iter().copied()),
            None => {
                let r = self.eta.support_radius();
                let panels = (v.abs() * length / 4.0).ceil() as usize;
                let pts = GaussLegendre::new(PANEL_ORDER).composite_points(-r, r, panels);
                accumulate(&mut pts.into_iter().map(|(t, w)| {
                    (
                        t,
                        w * lorentzian(self.beta0, t) * self.eta.eval(t) / self.normalization,
                    )
                }))
            }
        }
    }

    /// f̂(u) with the imaginary residue checked.
    pub fn fourier(&self, u: f64) -> Result<f64> {
        let (re, im) = self.transform_parts(u);
        if im.abs() > IMAG_TOL {
            return Err(LabError::Quadrature(format!(
                "imaginary residue {im:e} in transform at u = {u}"
            )));
        }
        Ok(re)
    }

    /// f̂(u), real part only. Used in hot loops after construction has been
    /// validated.
    pub fn fourier_real(&self, u: f64) -> f64 {
        self.transform_parts(u).0
    }

    /// First unscaled frequency at which |f̂| drops under TRANSFORM_FLOOR,
    /// found by a forward scan and shared by all rescalings.
    pub fn resolved_frequency(&self) -> f64 {
        *self.tables.resolved.get_or_init(|| {
            let unscaled = TestFunction {
                scale: 1.0,
                ..self.clone()
            };
            let step = RESOLVED_STEP / self.beta0;
            let mut v = step;
            while unscaled.fourier_real(v).abs() >= TRANSFORM_FLOOR
                && level_for(v, 2.0 * self.eta.support_radius()).is_some()
            {
                v += step;
            }
            v
        })
    }

    /// f̂(u), set to zero beyond the resolved range where the quadrature
    /// returns only rounding noise.
    pub fn fourier_resolved(&self, u: f64) -> f64 {
        if (u * self.scale).abs() >= self.resolved_frequency() {
            0.0
        } else {
            self.fourier_real(u)
        }
    }
}

/// f̂(u) by direct quadrature over the compact support.
pub fn fourier_eval(f: &TestFunction, u: f64) -> Result<f64> {
    f.fourier(u)
}

/// f_λ(t) = λ⁻¹ f(t/λ), with f̂_λ(u) = f̂(λu).
pub fn rescale(f: &TestFunction, lambda: f64) -> Result<TestFunction> {
    require_positive("lambda", lambda)?;
    let mut out = f.clone();
    out.scale = f.scale * lambda;
    Ok(out)
}

/// The decreasing lower bound u ↦ κ e^{-β₀u} on [m₀, ∞).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialEnvelope {
    pub kappa: f64,
    pub beta0: f64,
    pub m0: f64,
}

impl ExponentialEnvelope {
    pub fn new(kappa: f64, beta0: f64, m0: f64) -> Result<Self> {
        require_positive("kappa", kappa)?;
        if kappa > 1.0 {
            return Err(LabError::param(
                "kappa",
                format!("must be at most 1, got {kappa}"),
            ));
        }
        require_positive("beta0", beta0)?;
        if !(m0.is_finite() && m0 >= 0.0) {
            return Err(LabError::param(
                "m0",
                format!("must be nonnegative, got {m0}"),
            ));
        }
        Ok(ExponentialEnvelope { kappa, beta0, m0 })
    }

    /// φ(u) = κ e^{-β₀u}.
    pub fn phi(&self, u: f64) -> f64 {
        self.kappa * (-self.beta0 * u).exp()
    }

    pub fn with_cutoff(self, m0: f64) -> Result<Self> {
        ExponentialEnvelope::new(self.kappa, self.beta0, m0)
    }

    /// Envelope of f_λ: κ e^{-λβ₀|u|} with cutoff m₀/λ.
    pub fn rescaled(&self, lambda: f64) -> Result<Self> {
        require_positive("lambda", lambda)?;
        ExponentialEnvelope::new(self.kappa, lambda * self.beta0, self.m0 / lambda)
    }
}

/// Computes κ and verifies f̂(u) ≥ κe^{-β₀u} on u ∈ [0, 50/β₀] with spacing
/// 0.01/β₀. The returned envelope has m₀ = 0; the inequality holds for all u.
pub fn kappa_envelope(f: &TestFunction) -> Result<ExponentialEnvelope> {
    let beta0 = f.beta0;
    let chi = f.eta.chi;
    let eta_mass = f.eta.integral();
    let integrand = |v: f64| {
        let c = chi.transform(v);
        c * c * (-beta0 * v).exp()
    };
    // Tail bound: ∫_U^∞ η̂ e^{-β₀v} ≤ (∫η) e^{-β₀U}/β₀.
    let mut upper = 40.0 / beta0;
    let est = loop {
        let est = quad::adaptive(integrand, 0.0, upper, Tolerance::new(1e-18, 1e-14));
        let tail = eta_mass * (-beta0 * upper).exp() / beta0;
        if tail < 1e-12 * est.value || upper > 1e4 / beta0 {
            break est;
        }
        upper *= 2.0;
    };
    let kappa = (est.value - est.error) / (2.0 * std::f64::consts::PI * f.normalization);
    let envelope = ExponentialEnvelope::new(kappa, beta0, 0.0)?;
    let rescaled = envelope.rescaled(f.scale)?;
    let worst = envelope_slack(f, &rescaled);
    if worst.1 < -ENVELOPE_SLACK {
        return Err(LabError::CheckFailed(format!(
            "envelope violated at u = {}: slack {:e}",
            worst.0, worst.1
        )));
    }
    Ok(rescaled)
}

/// Verification grid for the envelope: [0, 50/β] with spacing 0.01/β.
pub fn verification_grid(beta: f64) -> Vec<f64> {
    (0..=5000).map(|k| k as f64 * 0.01 / beta).collect()
}

/// Minimum of f̂(u) - φ(u) over the verification grid, as (u, slack).
pub fn envelope_slack(f: &TestFunction, env: &ExponentialEnvelope) -> (f64, f64) {
    verification_grid(env.beta0)
        .into_iter()
        .map(|u| (u, f.fourier_real(u) - env.phi(u)))
        .fold(
            (0.0, f64::INFINITY),
            |acc, x| if x.1 < acc.1 { x } else { acc },
        )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_f() -> TestFunction {
        default_test_function(1.0).unwrap()
    }

    #[test]
    fn bump_values() {
        let chi = make_mollifier(1.0, MollifierShape::StandardBump).unwrap();
        assert!((chi.eval(0.0) - (-1.0f64).exp()).abs() < 1e-16);
        assert_eq!(chi.eval(1.0), 0.0);
        assert_eq!(chi.eval(-1.0), 0.0);
        assert_eq!(chi.eval(1.5), 0.0);
        let wide = make_mollifier(2.0, MollifierShape::StandardBump).unwrap();
        for k in -30..=30 {
            let t = k as f64 * 0.1;
            assert_eq!(wide.eval(t), chi.eval(t / 2.0));
        }
    }

    #[test]
    fn rejects_nonpositive_radius() {
        assert!(make_mollifier(0.0, MollifierShape::StandardBump).is_err());
        assert!(make_mollifier(-1.0, MollifierShape::StandardBump).is_err());
        assert!(make_mollifier(f64::NAN, MollifierShape::StandardBump).is_err());
    }

    #[test]
    fn convolution_support_and_mass() {
        let chi = make_mollifier(1.0, MollifierShape::StandardBump).unwrap();
        let eta = self_convolve(&chi);
        assert_eq!(eta.support_radius(), 2.0);
        assert_eq!(eta.eval(2.0), 0.0);
        assert_eq!(eta.eval(-2.5), 0.0);
        assert!(eta.eval(1.9) > 0.0);
        let m = chi.integral();
        assert!((eta.integral() - m * m).abs() < 1e-13);
    }

    #[test]
    fn convolution_transform_is_square() {
        let chi = make_mollifier(1.0, MollifierShape::StandardBump).unwrap();
        let eta = self_convolve(&chi);
        for k in 0..=100 {
            let u = k as f64;
            let lhs = eta.transform(u);
            let c = chi.transform(u);
            assert!(lhs >= -1e-15, "negative at {u}");
            assert!((lhs - c * c).abs() < 1e-8, "mismatch at {u}");
        }
    }

    #[test]
    fn test_function_basics() {
        let f = default_f();
        assert!((f.integral() - 1.0).abs() < 1e-8);
        assert!((f.fourier(0.0).unwrap() - 1.0).abs() < 1e-8);
        for k in 0..=40 {
            let t = k as f64 * 0.05;
            assert!((f.eval(t) - f.eval(-t)).abs() < 1e-15);
            assert!(f.eval(t) >= 0.0);
        }
        assert_eq!(f.eval(2.0), 0.0);
        assert_eq!(f.eval(3.0), 0.0);
        for k in 0..=50 {
            let u = k as f64 * 0.7;
            let a = f.fourier(u).unwrap();
            let b = f.fourier(-u).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_beta0() {
        let chi = make_mollifier(1.0, MollifierShape::StandardBump).unwrap();
        assert!(build_test_function(self_convolve(&chi), 0.0).is_err());
    }

    #[test]
    fn envelope_properties() {
        let f = default_f();
        let env = kappa_envelope(&f).unwrap();
        assert!(env.kappa > 0.0 && env.kappa <= 1.0);
        assert!(f.fourier(0.0).unwrap() >= env.kappa);
        let (_, slack) = envelope_slack(&f, &env);
        assert!(slack >= -ENVELOPE_SLACK);
    }

    #[test]
    fn rescale_identity_and_mass() {
        let f = default_f();
        let same = rescale(&f, 1.0).unwrap();
        for k in 0..20 {
            let u = k as f64 * 0.5;
            assert_eq!(same.fourier_real(u), f.fourier_real(u));
        }
        let g = rescale(&f, 3.0).unwrap();
        assert!((g.integral() - 1.0).abs() < 1e-8);
        assert!((g.support_radius() - 6.0).abs() < 1e-15);
        assert!((g.eval(1.5) - f.eval(0.5) / 3.0).abs() < 1e-15);
        assert!(rescale(&f, 0.0).is_err());
    }

    #[test]
    fn envelope_rescaling() {
        let env = ExponentialEnvelope::new(0.2, 1.0, 0.5).unwrap();
        let r = env.rescaled(2.0).unwrap();
        assert_eq!(r.beta0, 2.0);
        assert_eq!(r.m0, 0.25);
        assert!(ExponentialEnvelope::new(1.5, 1.0, 0.0).is_err());
    }
}
