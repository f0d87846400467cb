//! Negative-energy vacuum-plus-two-particle states for a free scalar field of
//! mass m: the momentum profile B, the kernel C it induces, the optimal
//! superposition weight λ₀, the constant Γ, and the averaged energy density
//! evaluated by quadrature with a Monte Carlo cross-check.
//!
//! The profile is separable, B(u, u′) = N_B g(|u|) g(|u′|) h(û·û′), which
//! reduces every six-dimensional momentum integral to (ρ, ρ′, cos θ).

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, LabError, Result};
use crate::legendre::legendre_all;
use crate::quad::{self, GaussLegendre, Tolerance};
use crate::testfn::{standard_bump, ExponentialEnvelope, TestFunction};

/// Initial Legendre cutoff for the angular convolution.
pub const INITIAL_CUTOFF: usize = 40;
const MAX_CUTOFF: usize = 4096;
/// Legendre tail must fall below this fraction of A(1).
pub const LEGENDRE_TAIL_REL: f64 = 1e-10;
/// Relative change that stops panel refinement of the energy integral.
pub const ENERGY_REL_TOL: f64 = 1e-6;
const MAX_REFINEMENTS: usize = 8;
const PANEL_ORDER: usize = 16;
const TRANSFORM_SLACK: f64 = 1e-10;
pub const MIN_MC_SAMPLES: usize = 10_000;
const MC_BATCH: usize = 8192;

fn two_pi_pow(k: i32) -> f64 {
    (2.0 * PI).powi(k)
}

/// Bump exp(-1/(1-x²)) rescaled to (center - half_width, center + half_width).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: f64,
    pub half_width: f64,
}

impl BumpSpec {
    pub fn eval(&self, x: f64) -> f64 {
        standard_bump((x - self.center) / self.half_width)
    }

    pub fn lo(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.center + self.half_width
    }

    /// ∫ x^k b(x)^p dx over the support.
    fn moment(&self, k: i32, p: i32) -> f64 {
        quad::adaptive(
            |x| x.powi(k) * self.eval(x).powi(p),
            self.lo(),
            self.hi(),
            Tolerance::new(0.0, 1e-14),
        )
        .value
    }
}

/// Radial bump on [1/2, 1] and angular bump on cos θ ∈ (1/2, 1), both
/// centred at 3/4.
pub const DEFAULT_BUMP: BumpSpec = BumpSpec {
    center: 0.75,
    half_width: 0.25,
};

/// Integrals of the profile factors that enter every closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileMoments {
    /// ∫ ρ² g
    pub g2: f64,
    /// ∫ ρ² g²
    pub g22: f64,
    /// ∫ h
    pub h0: f64,
    /// ∫ c h
    pub h1: f64,
    /// ∫ h²
    pub h2: f64,
}

/// B(u, u′) = N_B g(|u|) g(|u′|) h(û·û′).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialAngularProfile {
    pub g: BumpSpec,
    pub h: BumpSpec,
    pub normalization: f64,
    pub moments: ProfileMoments,
}

pub fn build_profile(g: BumpSpec, h: BumpSpec) -> Result<RadialAngularProfile> {
    for (name, b) in [("g", g), ("h", h)] {
        require_positive(name, b.half_width)?;
        if !b.center.is_finite() {
            return Err(LabError::param(name, "center must be finite"));
        }
    }
    if g.lo() < 0.5 || g.hi() > 1.0 {
        return Err(LabError::Support(format!(
            "radial bump support [{}, {}] is not inside [1/2, 1]",
            g.lo(),
            g.hi()
        )));
    }
    if h.lo() < 0.5 || h.hi() > 1.0 {
        return Err(LabError::Support(format!(
            "angular bump support [{}, {}] is not inside cos(theta) in [1/2, 1]",
            h.lo(),
            h.hi()
        )));
    }
    let moments = ProfileMoments {
        g2: g.moment(2, 1),
        g22: g.moment(2, 2),
        h0: h.moment(0, 1),
        h1: h.moment(1, 1),
        h2: h.moment(0, 2),
    };
    // ∬ B d³u d³u′ = N_B G2² · 8π² H0
    let normalization = two_pi_pow(6) / (moments.g2 * moments.g2 * 8.0 * PI * PI * moments.h0);
    Ok(RadialAngularProfile {
        g,
        h,
        normalization,
        moments,
    })
}

pub fn default_profile() -> RadialAngularProfile {
    build_profile(DEFAULT_BUMP, DEFAULT_BUMP).expect("default bumps satisfy the support conditions")
}

fn norm(u: [f64; 3]) -> f64 {
    dot(u, u).sqrt()
}

fn dot(u: [f64; 3], v: [f64; 3]) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

impl RadialAngularProfile {
    /// B in reduced variables.
    pub fn reduced(&self, rho: f64, rho2: f64, c: f64) -> f64 {
        self.normalization * self.g.eval(rho) * self.g.eval(rho2) * self.h.eval(c)
    }

    pub fn eval(&self, u: [f64; 3], v: [f64; 3]) -> f64 {
        let (a, b) = (norm(u), norm(v));
        if a == 0.0 || b == 0.0 {
            return 0.0;
        }
        self.reduced(a, b, dot(u, v) / (a * b))
    }

    /// ∬ B d³u d³u′/(2π)⁶ by tensor Gauss-Legendre quadrature in (ρ, ρ′, c).
    pub fn normalization_integral(&self) -> f64 {
        let rule = GaussLegendre::new(PANEL_ORDER);
        let radial = rule.composite_points(self.g.lo(), self.g.hi(), 8);
        let angular = rule.composite_points(self.h.lo(), self.h.hi(), 8);
        let mut total = 0.0;
        for &(r1, w1) in &radial {
            for &(r2, w2) in &radial {
                let inner: f64 = angular
                    .iter()
                    .map(|&(c, wc)| wc * self.reduced(r1, r2, c))
                    .sum();
                total += w1 * w2 * r1 * r1 * r2 * r2 * inner;
            }
        }
        total * 8.0 * PI * PI / two_pi_pow(6)
    }
}

/// C(u, u′) = ∫ d³u″/(2π)³ B(u″, u) B(u″, u′)
///          = N_B² G22/(2π)³ · g(|u|) g(|u′|) · A(û·û′)
/// with A(c) = ∫ dΩ″ h(n″·n) h(n″·n′) = Σ_l a_l² 4π/(2l+1) P_l(c).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelC {
    pub profile: RadialAngularProfile,
    /// a_l² 4π/(2l+1), l = 0..=cutoff.
    pub angular_coefficients: Vec<f64>,
    pub cutoff: usize,
    /// sup |A - A_L| ≤ tail_bound (Parseval; |P_l| ≤ 1).
    pub tail_bound: f64,
    /// N_B² G22/(2π)³
    pub radial_weight: f64,
    pub trace: f64,
    /// I_C = ∬ C d³u d³u′/(2π)⁶
    pub double_integral: f64,
    /// |I_C(quadrature) - I_C(closed form)| / I_C
    pub consistency_residual: f64,
}

/// Legendre coefficients a_l = (2l+1)/2 ∫ h P_l.
fn legendre_coefficients(h: &BumpSpec, lmax: usize) -> Vec<f64> {
    let rule = GaussLegendre::new(24);
    let panels = (lmax / 2).max(32);
    let mut acc = vec![0.0; lmax + 1];
    for (c, w) in rule.composite_points(h.lo(), h.hi(), panels) {
        let hv = h.eval(c);
        if hv == 0.0 {
            continue;
        }
        for (a, p) in acc.iter_mut().zip(legendre_all(lmax, c)) {
            *a += w * hv * p;
        }
    }
    acc.iter()
        .enumerate()
        .map(|(l, s)| (2 * l + 1) as f64 / 2.0 * s)
        .collect()
}

pub fn derive_kernel(profile: &RadialAngularProfile) -> Result<KernelC> {
    let mo = profile.moments;
    let a_at_one = 2.0 * PI * mo.h2;
    let mut cutoff = INITIAL_CUTOFF;
    let (coefficients, tail) = loop {
        let a = legendre_coefficients(&profile.h, cutoff);
        let coefficients: Vec<f64> = a
            .iter()
            .enumerate()
            .map(|(l, al)| al * al * 4.0 * PI / (2 * l + 1) as f64)
            .collect();
        let tail = (a_at_one - coefficients.iter().sum::<f64>()).max(0.0);
        if tail < LEGENDRE_TAIL_REL * a_at_one {
            break (coefficients, tail);
        }
        if cutoff >= MAX_CUTOFF {
            return Err(LabError::Quadrature(format!(
                "Legendre tail {tail:e} still above {:e} at cutoff {cutoff}",
                LEGENDRE_TAIL_REL * a_at_one
            )));
        }
        cutoff *= 2;
    };
    let nb = profile.normalization;
    let radial_weight = nb * nb * mo.g22 / two_pi_pow(3);
    let trace = nb * nb * mo.g22 * mo.g22 * 8.0 * PI * PI * mo.h2 / two_pi_pow(6);

    let mut kernel = KernelC {
        profile: profile.clone(),
        angular_coefficients: coefficients,
        cutoff,
        tail_bound: tail,
        radial_weight,
        trace,
        double_integral: 0.0,
        consistency_residual: 0.0,
    };
    let (a0, _) = kernel.angular_moments(16);
    let prefactor = nb * nb * mo.g22 * mo.g2 * mo.g2 * 8.0 * PI * PI / two_pi_pow(9);
    kernel.double_integral = prefactor * a0;
    // ∫ A dc = 2π H0² in closed form.
    let closed = prefactor * 2.0 * PI * mo.h0 * mo.h0;
    kernel.consistency_residual = (kernel.double_integral - closed).abs() / closed;
    if kernel.consistency_residual > 1e-6 {
        return Err(LabError::CheckFailed(format!(
            "kernel self-consistency residual {:e}",
            kernel.consistency_residual
        )));
    }
    Ok(kernel)
}

impl KernelC {
    /// A(c), zero outside (-1/2, 1].
    pub fn angular(&self, c: f64) -> f64 {
        if c <= -0.5 || c > 1.0 {
            return 0.0;
        }
        legendre_all(self.cutoff, c)
            .iter()
            .zip(&self.angular_coefficients)
            .map(|(p, a)| p * a)
            .sum()
    }

    pub fn reduced(&self, rho: f64, rho2: f64, c: f64) -> f64 {
        let g = &self.profile.g;
        self.radial_weight * g.eval(rho) * g.eval(rho2) * self.angular(c)
    }

    pub fn eval(&self, u: [f64; 3], v: [f64; 3]) -> f64 {
        let (a, b) = (norm(u), norm(v));
        if a == 0.0 || b == 0.0 {
            return 0.0;
        }
        self.reduced(a, b, dot(u, v) / (a * b))
    }

    /// (∫ A dc, ∫ c A dc) over c ∈ [-1/2, 1] with the given panel count.
    fn angular_moments(&self, panels: usize) -> (f64, f64) {
        let rule = GaussLegendre::new(PANEL_ORDER);
        rule.composite_points(-0.5, 1.0, panels)
            .into_iter()
            .fold((0.0, 0.0), |(s0, s1), (c, w)| {
                let a = self.angular(c);
                (s0 + w * a, s1 + w * c * a)
            })
    }
}

/// P(λ) = (3/16) λ - (8/√5) I_C λ².
pub fn p_lambda(kernel: &KernelC, lambda: f64) -> f64 {
    3.0 / 16.0 * lambda - 8.0 / 5f64.sqrt() * kernel.double_integral * lambda * lambda
}

/// Vertex of P: λ₀ = 3√5/(256 I_C), P(λ₀) = (3/32) λ₀.
pub fn optimize_lambda(kernel: &KernelC) -> Result<(f64, f64)> {
    require_positive("I_C", kernel.double_integral)?;
    let lambda0 = 3.0 * 5f64.sqrt() / (256.0 * kernel.double_integral);
    Ok((lambda0, 3.0 / 32.0 * lambda0))
}

/// Γ = P(λ₀)/(1 + λ₀² Tr C).
pub fn gamma_constant(kernel: &KernelC, lambda0: f64, p_max: f64) -> f64 {
    p_max / (1.0 + lambda0 * lambda0 * kernel.trace)
}

/// |𝒩_{m,λ}|² = (1 + λ² φ(2√2m)² Tr C)^{-1}.
pub fn normalization_sq(kernel: &KernelC, lambda: f64, phi: f64) -> f64 {
    1.0 / (1.0 + lambda * lambda * phi * phi * kernel.trace)
}

/// The two kinematic brackets at physical momenta |k| = mρ, |k′| = mρ′ with
/// cos θ = c: ((ωω′ + k·k′ + m²)/√(ωω′), (ωω′ + k·k′ - m²)/√(ωω′)).
pub fn kinematic_brackets(m: f64, rho: f64, rho2: f64, c: f64) -> (f64, f64) {
    let w = m * (1.0 + rho * rho).sqrt();
    let w2 = m * (1.0 + rho2 * rho2).sqrt();
    let kk = m * m * rho * rho2 * c;
    let s = (w * w2).sqrt();
    ((w * w2 + kk + m * m) / s, (w * w2 + kk - m * m) / s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyQuadResult {
    pub value: f64,
    pub positive_term: f64,
    pub negative_term: f64,
    pub error_estimate: f64,
    pub normalization_sq: f64,
    /// (radial nodes per axis, value) for every refinement level.
    pub refinement: Vec<(usize, f64)>,
}

/// Raw radial sums for one panel count: (C-term, B-term) before constants.
fn radial_sums(
    kernel: &KernelC,
    f: &TestFunction,
    m: f64,
    phi: f64,
    panels: usize,
) -> Result<(f64, f64)> {
    let rule = GaussLegendre::new(PANEL_ORDER);
    let profile = &kernel.profile;
    let nodes: Vec<(f64, f64, f64, f64)> = rule
        .composite_points(profile.g.lo(), profile.g.hi(), panels)
        .into_iter()
        .map(|(r, w)| (r, w * r * r * profile.g.eval(r), (1.0 + r * r).sqrt(), 0.0))
        .collect();
    let (a0, a1) = kernel.angular_moments(panels);
    let h = &profile.h;
    let (h0, h1) = rule
        .composite_points(h.lo(), h.hi(), panels)
        .into_iter()
        .fold((0.0, 0.0), |(s0, s1), (c, w)| {
            let v = h.eval(c);
            (s0 + w * v, s1 + w * c * v)
        });
    let rows: Vec<Result<(f64, f64)>> = nodes
        .par_iter()
        .map(|&(r1, wt1, w1, _)| {
            let mut pos = 0.0;
            let mut neg = 0.0;
            for &(r2, wt2, w2, _) in &nodes {
                let weight = wt1 * wt2 / (w1 * w2).sqrt();
                if weight == 0.0 {
                    continue;
                }
                let f_minus = f.fourier_real(m * (w2 - w1));
                let f_plus = f.fourier_real(m * (w1 + w2));
                if f_minus > 1.0 + TRANSFORM_SLACK {
                    return Err(LabError::CheckFailed(format!(
                        "transform {f_minus} exceeds 1 at {}",
                        m * (w2 - w1)
                    )));
                }
                if f_plus < phi - TRANSFORM_SLACK {
                    return Err(LabError::CheckFailed(format!(
                        "transform {f_plus} below phi(2 sqrt2 m) = {phi} at {}",
                        m * (w1 + w2)
                    )));
                }
                let ww = w1 * w2;
                let rr = r1 * r2;
                pos += weight * f_minus * ((ww + 1.0) * a0 + rr * a1);
                neg += weight * f_plus * ((ww - 1.0) * h0 + rr * h1);
            }
            Ok((pos, neg))
        })
        .collect();
    let mut pos = 0.0;
    let mut neg = 0.0;
    for row in rows {
        let (p, n) = row?;
        pos += p;
        neg += n;
    }
    Ok((pos, neg))
}

/// ∫ ⟨Ψ_{m,λ}, ρ_m(t, 0) Ψ_{m,λ}⟩ f(t) dt in the reduced form
/// |𝒩|² m⁴ 8π²/(2π)⁶ ∭ ρ²ρ′² (ww′)^{-1/2} [λ²φ² C (ww′+ρρ′c+1) f̂(m(w′-w))
///   - (λ/√2) φ B (ww′+ρρ′c-1) f̂(m(w+w′))] dρ dρ′ dc, w = √(1+ρ²).
pub fn averaged_energy(
    m: f64,
    lambda: f64,
    f: &TestFunction,
    kernel: &KernelC,
    envelope: &ExponentialEnvelope,
) -> Result<EnergyQuadResult> {
    require_positive("m", m)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(LabError::param(
            "lambda",
            format!("must be nonnegative, got {lambda}"),
        ));
    }
    if m <= envelope.m0 {
        return Err(LabError::param(
            "m",
            format!("mass {m} must exceed the envelope cutoff {}", envelope.m0),
        ));
    }
    let phi = envelope.phi(2.0 * SQRT_2 * m);
    let n2 = normalization_sq(kernel, lambda, phi);
    let common = n2 * m.powi(4) * 8.0 * PI * PI / two_pi_pow(6);
    let c_factor = common * lambda * lambda * phi * phi * kernel.radial_weight;
    let b_factor = common * lambda / SQRT_2 * phi * kernel.profile.normalization;

    let mut refinement = Vec::new();
    let mut previous: Option<(f64, f64, f64)> = None;
    let mut panels = 2;
    for _ in 0..MAX_REFINEMENTS {
        let (pos_raw, neg_raw) = radial_sums(kernel, f, m, phi, panels)?;
        let pos = c_factor * pos_raw;
        let neg = -b_factor * neg_raw;
        let value = pos + neg;
        refinement.push((panels * PANEL_ORDER, value));
        if let Some((p0, n0, v0)) = previous {
            let diff = (value - v0).abs();
            let scale = pos.abs().max(neg.abs());
            if diff <= ENERGY_REL_TOL * scale || scale == 0.0 {
                let error_estimate = diff + (pos - p0).abs() + (neg - n0).abs();
                return Ok(EnergyQuadResult {
                    value,
                    positive_term: pos,
                    negative_term: neg,
                    error_estimate,
                    normalization_sq: n2,
                    refinement,
                });
            }
        }
        previous = Some((pos, neg, value));
        panels *= 2;
    }
    let trace: Vec<String> = refinement
        .iter()
        .map(|(n, v)| format!("{n}:{v:.12e}"))
        .collect();
    Err(LabError::Quadrature(format!(
        "energy integral did not settle to {ENERGY_REL_TOL:e}: {}",
        trace.join(", ")
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

fn uniform_cube(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    ]
}

/// Plain Monte Carlo over u, u′, u″ ∈ [-1, 1]³ of the unreduced integrand,
/// using B directly (no Legendre expansion, no angular reduction). Batch b
/// draws from ChaCha stream b of the root seed; batches are reduced in order.
#[allow(clippy::too_many_arguments)]
pub fn mc_crosscheck(
    m: f64,
    lambda: f64,
    f: &TestFunction,
    kernel: &KernelC,
    envelope: &ExponentialEnvelope,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    require_positive("m", m)?;
    if samples < MIN_MC_SAMPLES {
        return Err(LabError::param(
            "samples",
            format!("at least {MIN_MC_SAMPLES} samples are required, got {samples}"),
        ));
    }
    let profile = &kernel.profile;
    let phi = envelope.phi(2.0 * SQRT_2 * m);
    let n2 = normalization_sq(kernel, lambda, phi);
    let c_factor = n2 * m.powi(4) * 512.0 / two_pi_pow(9) * lambda * lambda * phi * phi;
    let b_factor = n2 * m.powi(4) * 64.0 / two_pi_pow(6) * lambda / SQRT_2 * phi;
    let batches = samples.div_ceil(MC_BATCH);
    let partial: Vec<(f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(batch as u64);
            let count = MC_BATCH.min(samples - batch * MC_BATCH);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..count {
                let u = uniform_cube(&mut rng);
                let v = uniform_cube(&mut rng);
                let x = uniform_cube(&mut rng);
                let (r1, r2) = (norm(u), norm(v));
                let (w1, w2) = ((1.0 + r1 * r1).sqrt(), (1.0 + r2 * r2).sqrt());
                let ww = w1 * w2;
                let uv = dot(u, v);
                let mut value = 0.0;
                let bc = profile.eval(x, u) * profile.eval(x, v);
                if bc != 0.0 {
                    value +=
                        c_factor * bc * (ww + uv + 1.0) / ww.sqrt() * f.fourier_real(m * (w2 - w1));
                }
                let b = profile.eval(u, v);
                if b != 0.0 {
                    value -=
                        b_factor * b * (ww + uv - 1.0) / ww.sqrt() * f.fourier_real(m * (w1 + w2));
                }
                sum += value;
                sum_sq += value * value;
            }
            (sum, sum_sq)
        })
        .collect();
    let (sum, sum_sq) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let n = samples as f64;
    let mean = sum / n;
    let variance = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        estimate: mean,
        stderr: (variance / n).sqrt(),
        samples,
    })
}

/// Per-mass outcome of the bound ∫⟨Ψ_m, ρ_m Ψ_m⟩ f ≤ -Γ m⁴ φ(2√2m)².
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremRow {
    pub m: f64,
    pub lambda0: f64,
    pub gamma: f64,
    pub energy: f64,
    pub error_estimate: f64,
    pub bound: f64,
    /// |energy| / |bound|
    pub margin: f64,
    /// |𝒩|² ≥ 1/(1 + λ₀² Tr C)
    pub normalization_chain: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremReport {
    pub lambda0: f64,
    pub p_max: f64,
    pub gamma: f64,
    pub trace: f64,
    pub double_integral: f64,
    pub rows: Vec<TheoremRow>,
}

/// Evaluates the energy at λ₀ for every mass and asserts the bound with the
/// quadrature error added to the energy. A violation is a hard failure.
pub fn verify_theorem(
    masses: &[f64],
    f: &TestFunction,
    kernel: &KernelC,
    envelope: &ExponentialEnvelope,
) -> Result<TheoremReport> {
    let (lambda0, p_max) = optimize_lambda(kernel)?;
    let gamma = gamma_constant(kernel, lambda0, p_max);
    let mut rows = Vec::with_capacity(masses.len());
    for &m in masses {
        let energy = averaged_energy(m, lambda0, f, kernel, envelope)?;
        let phi = envelope.phi(2.0 * SQRT_2 * m);
        let bound = -gamma * m.powi(4) * phi * phi;
        let holds = energy.value + energy.error_estimate <= bound;
        let row = TheoremRow {
            m,
            lambda0,
            gamma,
            energy: energy.value,
            error_estimate: energy.error_estimate,
            bound,
            margin: energy.value.abs() / bound.abs(),
            normalization_chain: energy.normalization_sq
                >= 1.0 / (1.0 + lambda0 * lambda0 * kernel.trace),
            holds,
        };
        if !holds {
            return Err(LabError::CheckFailed(format!(
                "energy {:.6e} (+{:.1e}) exceeds -Gamma m^4 phi^2 = {bound:.6e} at m = {m}",
                row.energy, row.error_estimate
            )));
        }
        rows.push(row);
    }
    Ok(TheoremReport {
        lambda0,
        p_max,
        gamma,
        trace: kernel.trace,
        double_integral: kernel.double_integral,
        rows,
    })
}

/// Extremes of the kinematic quantities over random support points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KinematicSweep {
    pub omega_min: f64,
    pub omega_max: f64,
    /// max of the first bracket over supp C, in units of 8m/√5
    pub first_ratio_max: f64,
    /// min of the second bracket over supp B, in units of 3m/(8√2)
    pub second_ratio_min: f64,
}

pub fn kinematic_sweep(m: f64, samples: usize, seed: u64) -> Result<KinematicSweep> {
    require_positive("m", m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = KinematicSweep {
        omega_min: f64::INFINITY,
        omega_max: 0.0,
        first_ratio_max: 0.0,
        second_ratio_min: f64::INFINITY,
    };
    for _ in 0..samples {
        let r1: f64 = rng.gen_range(0.5..=1.0);
        let r2: f64 = rng.gen_range(0.5..=1.0);
        let c_any: f64 = rng.gen_range(-1.0..=1.0);
        let c_b: f64 = rng.gen_range(0.5..=1.0);
        for r in [r1, r2] {
            let w = m * (1.0 + r * r).sqrt();
            out.omega_min = out.omega_min.min(w);
            out.omega_max = out.omega_max.max(w);
        }
        let (first, _) = kinematic_brackets(m, r1, r2, c_any);
        let (_, second) = kinematic_brackets(m, r1, r2, c_b);
        out.first_ratio_max = out.first_ratio_max.max(first / (8.0 * m / 5f64.sqrt()));
        out.second_ratio_min = out
            .second_ratio_min
            .min(second / (3.0 * m / (8.0 * SQRT_2)));
    }
    Ok(out)
}
