//! Countable towers of free scalar fields: mass spectra with a gap, the
//! thermodynamic sums that decide nuclearity and local normality, the
//! counting function N(u), and the Tauberian bound on N.
//!
//! Every convergence verdict is driven by the analytic tail descriptor of the
//! tower (ratio bounds for arithmetic tails, p-series and integral tests for
//! logarithmic tails). Floating-point stagnation is never taken as evidence.

use serde::Serialize;

use crate::error::{require_positive, LabError, Result};
use crate::quad::{self, Estimate, TailOutcome, Tolerance};
use crate::testfn::ExponentialEnvelope;

/// Number of leading masses checked against the tail descriptor.
pub const CONSISTENCY_PREFIX: usize = 100;
const CONSISTENCY_TOL: f64 = 1e-12;
/// Cap on explicitly summed terms for arithmetic-type tails.
const MAX_GEOMETRIC_TERMS: u64 = 50_000_000;
/// Cap on explicitly summed terms for logarithmic tails.
const MAX_LOG_TERMS: u64 = 4_000_000;
/// |σ - 1| below this is treated as the p-series boundary σ = 1.
const BOUNDARY_EPS: f64 = 1e-12;
/// A jump piece below this fraction of the running integral is negligible.
const NEGLIGIBLE_PIECE: f64 = 1e-17;
/// Consecutive negligible pieces before switching to the tail test.
const NEGLIGIBLE_RUN: usize = 16;

/// Inverse temperatures probed by the nuclearity and local-normality checks.
pub const PROBE_BETAS: [f64; 10] = [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.2, 0.5, 1.0];
/// Leading part of [`PROBE_BETAS`] used for polynomial-growth fits.
pub const FIT_WINDOW: usize = 7;
/// RMS residual below which a log-log fit counts as polynomial growth.
pub const POLY_FIT_RESIDUAL: f64 = 0.05;

/// How the masses continue beyond the listed ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TailDescriptor {
    /// The listed masses are the whole spectrum.
    Finite,
    /// m_r = r · m₁.
    Arithmetic { m1: f64 },
    /// m_r = log(r + 1) / (2 d₀).
    Logarithmic { d0: f64 },
    /// Listed masses, followed by an unknown tail. With `tail_slope = Some(s)`
    /// the user certifies m_r ≥ s · r for every unlisted r.
    Custom { tail_slope: Option<f64> },
}

/// Nondecreasing mass sequence with a gap m₁ > 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassTower {
    listed: Vec<f64>,
    tail: TailDescriptor,
}

fn validate_listed(masses: &[f64]) -> Result<()> {
    let Some(&first) = masses.first() else {
        return Err(LabError::param("masses", "at least one mass is required"));
    };
    if !(first.is_finite() && first > 0.0) {
        return Err(LabError::MassGap(format!("m1 = {first}")));
    }
    for (i, pair) in masses.windows(2).enumerate() {
        if !pair[1].is_finite() || pair[1] < pair[0] {
            return Err(LabError::param(
                "masses",
                format!(
                    "not nondecreasing at index {}: {} then {}",
                    i + 1,
                    pair[0],
                    pair[1]
                ),
            ));
        }
    }
    Ok(())
}

impl MassTower {
    pub fn finite(masses: Vec<f64>) -> Result<Self> {
        validate_listed(&masses)?;
        Ok(MassTower {
            listed: masses,
            tail: TailDescriptor::Finite,
        })
    }

    pub fn arithmetic(m1: f64) -> Result<Self> {
        if !(m1.is_finite() && m1 > 0.0) {
            return Err(LabError::MassGap(format!("m1 = {m1}")));
        }
        let tail = TailDescriptor::Arithmetic { m1 };
        Ok(MassTower {
            listed: Self::generate(&tail, CONSISTENCY_PREFIX),
            tail,
        })
    }

    pub fn logarithmic(d0: f64) -> Result<Self> {
        require_positive("d0", d0)?;
        let tail = TailDescriptor::Logarithmic { d0 };
        Ok(MassTower {
            listed: Self::generate(&tail, CONSISTENCY_PREFIX),
            tail,
        })
    }

    pub fn custom(masses: Vec<f64>, tail_slope: Option<f64>) -> Result<Self> {
        validate_listed(&masses)?;
        if let Some(s) = tail_slope {
            require_positive("tail_bound", s)?;
        }
        Ok(MassTower {
            listed: masses,
            tail: TailDescriptor::Custom { tail_slope },
        })
    }

    /// Arithmetic or logarithmic tower whose leading masses are supplied
    /// explicitly; they must agree with the descriptor within 1e-12.
    pub fn with_prefix(tail: TailDescriptor, prefix: Vec<f64>) -> Result<Self> {
        let tower = match tail {
            TailDescriptor::Arithmetic { m1 } => Self::arithmetic(m1)?,
            TailDescriptor::Logarithmic { d0 } => Self::logarithmic(d0)?,
            TailDescriptor::Finite => return Self::finite(prefix),
            TailDescriptor::Custom { tail_slope } => return Self::custom(prefix, tail_slope),
        };
        validate_listed(&prefix)?;
        for (i, m) in prefix.iter().enumerate() {
            let expected = Self::closed_form(&tower.tail, i as u64 + 1).unwrap_or(f64::NAN);
            if (m - expected).abs() > CONSISTENCY_TOL * expected.abs().max(1.0) {
                return Err(LabError::param(
                    "masses",
                    format!(
                        "mass {} = {m} disagrees with tail descriptor value {expected}",
                        i + 1
                    ),
                ));
            }
        }
        Ok(tower)
    }

    fn closed_form(tail: &TailDescriptor, r: u64) -> Option<f64> {
        match *tail {
            TailDescriptor::Arithmetic { m1 } => Some(r as f64 * m1),
            TailDescriptor::Logarithmic { d0 } => Some(((r + 1) as f64).ln() / (2.0 * d0)),
            _ => None,
        }
    }

    fn generate(tail: &TailDescriptor, n: usize) -> Vec<f64> {
        (1..=n as u64)
            .filter_map(|r| Self::closed_form(tail, r))
            .collect()
    }

    pub fn tail(&self) -> &TailDescriptor {
        &self.tail
    }

    /// Explicitly listed masses (the leading prefix for closed-form tails).
    pub fn listed(&self) -> &[f64] {
        &self.listed
    }

    /// m_r for r ≥ 1, when known.
    pub fn mass(&self, r: u64) -> Option<f64> {
        if r == 0 {
            return None;
        }
        Self::closed_form(&self.tail, r).or_else(|| self.listed.get(r as usize - 1).copied())
    }

    /// The mass gap m₁.
    pub fn m1(&self) -> f64 {
        self.listed[0]
    }

    /// Whether the tower has finitely many fields.
    pub fn is_finite(&self) -> bool {
        matches!(self.tail, TailDescriptor::Finite)
    }

    /// N(u): number of masses m_r ≤ u. Custom towers count their listed
    /// masses only. Saturates at u64::MAX.
    pub fn counting(&self, u: f64) -> u64 {
        let real = self.counting_real(u);
        if real >= u64::MAX as f64 {
            u64::MAX
        } else {
            real as u64
        }
    }

    /// N(u) as a float, without saturation.
    pub fn counting_real(&self, u: f64) -> f64 {
        if !(u >= self.m1()) {
            return 0.0;
        }
        let guess = match self.tail {
            TailDescriptor::Finite | TailDescriptor::Custom { .. } => {
                return self.listed.partition_point(|&m| m <= u) as f64;
            }
            TailDescriptor::Arithmetic { m1 } => (u / m1).floor(),
            TailDescriptor::Logarithmic { d0 } => (2.0 * d0 * u).exp_m1().floor(),
        };
        if guess >= 2f64.powi(52) {
            return guess;
        }
        // Align with mass(r) exactly at the jump points.
        let mut n = guess as u64;
        while self.mass(n + 1).is_some_and(|m| m <= u) {
            n += 1;
        }
        while n > 0 && self.mass(n).is_some_and(|m| m > u) {
            n -= 1;
        }
        n as f64
    }
}

/// Anything that can serve as N(u) in a weighted integral.
pub trait CountingFunction: Sync {
    fn count(&self, u: f64) -> f64;
    /// Jump locations in increasing order, at most `limit` of them.
    fn jumps(&self, limit: usize) -> Vec<f64>;
}

impl CountingFunction for MassTower {
    fn count(&self, u: f64) -> f64 {
        self.counting_real(u)
    }

    fn jumps(&self, limit: usize) -> Vec<f64> {
        let mut out: Vec<f64> = (1..=limit as u64).map_while(|r| self.mass(r)).collect();
        out.dedup();
        out
    }
}

/// ∫₀^∞ g(u) N(u) du. The leading jumps of N are used as breakpoints; the
/// remainder is integrated by interval doubling (increment < `rel_increment`
/// of the running tail, at most `max_doublings` doublings).
pub fn integrate_against_counting<C, G>(
    counting: &C,
    g: G,
    jump_limit: usize,
    rel_increment: f64,
    max_doublings: usize,
) -> TailOutcome
where
    C: CountingFunction + ?Sized,
    G: Fn(f64) -> f64,
{
    let integrand = |u: f64| {
        let n = counting.count(u);
        if n == 0.0 {
            0.0
        } else {
            g(u) * n
        }
    };
    let tol = Tolerance::new(0.0, 1e-12);
    let jumps = counting.jumps(jump_limit);
    let mut total: f64 = 0.0;
    let mut error = 0.0;
    let mut intervals = 0;
    let mut converged = true;
    let mut start = jumps.first().copied().unwrap_or(0.0);
    let mut negligible = 0;
    for pair in jumps.windows(2) {
        let piece_tol = Tolerance {
            abs: NEGLIGIBLE_PIECE * total.abs(),
            ..tol
        };
        let est = quad::adaptive(integrand, pair[0], pair[1], piece_tol);
        if !est.value.is_finite() {
            return TailOutcome::Divergent {
                last_partial: total,
                last_increment: est.value,
                doublings: 0,
            };
        }
        total += est.value;
        error += est.error;
        intervals += est.intervals;
        converged &= est.converged;
        start = pair[1];
        // Hand over to the tail test once the pieces stop mattering.
        if est.value.abs() <= NEGLIGIBLE_PIECE * total.abs() {
            negligible += 1;
            if negligible >= NEGLIGIBLE_RUN {
                break;
            }
        } else {
            negligible = 0;
        }
    }
    let width = match jumps.first() {
        Some(&first) if start > first => (start - first).max(1.0),
        _ => start.max(1.0),
    };
    let tol = Tolerance::new(NEGLIGIBLE_PIECE * total.abs(), 1e-12);
    match quad::integrate_to_infinity(integrand, start, width, rel_increment, max_doublings, tol) {
        TailOutcome::Finite(tail) => TailOutcome::Finite(Estimate {
            value: total + tail.value,
            error: error + tail.error,
            intervals: intervals + tail.intervals,
            converged: converged && tail.converged,
        }),
        TailOutcome::Divergent {
            last_partial,
            last_increment,
            doublings,
        } => TailOutcome::Divergent {
            last_partial: total + last_partial,
            last_increment,
            doublings,
        },
    }
}

/// Summand families appearing in the nuclearity and normality criteria.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    /// e^{-4βm}/m², the terms of F(β).
    F { beta: f64 },
    /// e^{-βm/4}, the terms of G(β).
    G { beta: f64 },
    /// e^{-βm/2}.
    Half { beta: f64 },
    /// e^{-2βm}.
    Double { beta: f64 },
    /// e^{-βm}.
    Plain { beta: f64 },
    /// m⁴ φ(2√2 λ m)² with φ(u) = κ e^{-β₀u}.
    QuarticPhi {
        lambda: f64,
        envelope: ExponentialEnvelope,
    },
    /// |log(1 - e^{-βm/2})|, the single-field nuclearity-index exponent.
    LogPartition { beta: f64 },
}

/// Internal normal form of a weight.
#[derive(Debug, Clone, Copy)]
enum Term {
    /// scale · m^power · e^{-rate·m}
    ExpPoly { scale: f64, power: i32, rate: f64 },
    /// -log(1 - e^{-rate·m})
    LogOneMinus { rate: f64 },
}

impl Weight {
    fn term(&self) -> Result<Term> {
        let exp_poly = |beta: f64, power: i32, factor: f64| -> Result<Term> {
            require_positive("beta", beta)?;
            Ok(Term::ExpPoly {
                scale: 1.0,
                power,
                rate: factor * beta,
            })
        };
        match *self {
            Weight::F { beta } => exp_poly(beta, -2, 4.0),
            Weight::G { beta } => exp_poly(beta, 0, 0.25),
            Weight::Half { beta } => exp_poly(beta, 0, 0.5),
            Weight::Double { beta } => exp_poly(beta, 0, 2.0),
            Weight::Plain { beta } => exp_poly(beta, 0, 1.0),
            Weight::QuarticPhi { lambda, envelope } => {
                require_positive("lambda", lambda)?;
                Ok(Term::ExpPoly {
                    scale: envelope.kappa * envelope.kappa,
                    power: 4,
                    rate: 4.0 * std::f64::consts::SQRT_2 * envelope.beta0 * lambda,
                })
            }
            Weight::LogPartition { beta } => {
                require_positive("beta", beta)?;
                Ok(Term::LogOneMinus { rate: 0.5 * beta })
            }
        }
    }

    /// Term value at mass m.
    pub fn eval(&self, m: f64) -> Result<f64> {
        Ok(self.term()?.eval(m))
    }
}

impl Term {
    fn eval(&self, m: f64) -> f64 {
        match *self {
            Term::ExpPoly { scale, power, rate } => scale * m.powi(power) * (-rate * m).exp(),
            Term::LogOneMinus { rate } => -(-(-rate * m).exp()).ln_1p(),
        }
    }

    /// Mass beyond which the term is nonincreasing.
    fn monotone_from(&self) -> f64 {
        match *self {
            Term::ExpPoly { power, rate, .. } if power > 0 => power as f64 / rate,
            _ => 0.0,
        }
    }

    /// sup over m' ≥ m of the term.
    fn envelope(&self, m: f64) -> f64 {
        self.eval(m.max(self.monotone_from()))
    }

    /// Bound on Σ_{r > last} term(step · r).
    fn geometric_tail(&self, step: f64, last: u64) -> f64 {
        let next = (last + 1) as f64;
        match *self {
            Term::ExpPoly { power, rate, .. } => {
                let growth = if power > 0 {
                    ((next + 1.0) / next).powi(power)
                } else {
                    1.0
                };
                let q = growth * (-rate * step).exp();
                if q < 1.0 {
                    self.eval(step * next) / (1.0 - q)
                } else {
                    f64::INFINITY
                }
            }
            Term::LogOneMinus { rate } => {
                // -log(1-x) ≤ x/(1-x) and x ≤ e^{-rate·step}.
                let x = (-rate * step).exp();
                x.powf(next) / ((1.0 - x) * (1.0 - x))
            }
        }
    }
}

/// Certificate that a series diverges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceWitness {
    /// Comparison test that decided divergence.
    pub test: String,
    /// Exponent σ of the comparison p-series Σ n^{-σ}.
    pub exponent: f64,
    /// Power p of the logarithmic factor (log n)^p.
    pub log_power: f64,
    /// Partial sums S(n) at n = 10, 10², ..., showing the growth.
    pub partial_sums: Vec<(u64, f64)>,
}

/// Outcome of summing a weight over a tower.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum SumVerdict {
    /// |true sum - value| ≤ remainder_bound, from the tail descriptor.
    Convergent {
        value: f64,
        remainder_bound: f64,
    },
    Divergent {
        witness: DivergenceWitness,
    },
    /// The tail descriptor cannot certify either way.
    Undetermined {
        reason: String,
    },
}

impl SumVerdict {
    pub fn is_convergent(&self) -> bool {
        matches!(self, SumVerdict::Convergent { .. })
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, SumVerdict::Divergent { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            SumVerdict::Convergent { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn remainder(&self) -> Option<f64> {
        match self {
            SumVerdict::Convergent {
                remainder_bound, ..
            } => Some(*remainder_bound),
            _ => None,
        }
    }

    fn tri(&self) -> Tri {
        match self {
            SumVerdict::Convergent { .. } => Tri::Yes,
            SumVerdict::Divergent { .. } => Tri::No,
            SumVerdict::Undetermined { .. } => Tri::Undetermined,
        }
    }
}

/// Σ_r w(m_r) with a rigorous verdict from the tail descriptor.
pub fn weighted_mass_sum(tower: &MassTower, weight: Weight) -> Result<SumVerdict> {
    let term = weight.term()?;
    let listed_sum = || tower.listed.iter().map(|&m| term.eval(m)).sum::<f64>();
    Ok(match tower.tail {
        TailDescriptor::Finite => SumVerdict::Convergent {
            value: listed_sum(),
            remainder_bound: 0.0,
        },
        TailDescriptor::Arithmetic { m1 } => {
            let (value, tail) = geometric_sum(&term, m1, 1, 0.0, false);
            SumVerdict::Convergent {
                value,
                remainder_bound: tail,
            }
        }
        TailDescriptor::Logarithmic { d0 } => logarithmic_sum(&term, d0),
        TailDescriptor::Custom { tail_slope: None } => SumVerdict::Undetermined {
            reason: "custom tower without a certified tail bound".into(),
        },
        TailDescriptor::Custom {
            tail_slope: Some(slope),
        } => {
            let prefix = listed_sum();
            let floor = *tower.listed.last().expect("validated nonempty");
            let (sum, tail) =
                geometric_sum(&term, slope, tower.listed.len() as u64 + 1, floor, true);
            let bound = sum + tail;
            SumVerdict::Convergent {
                value: prefix + 0.5 * bound,
                remainder_bound: 0.5 * bound,
            }
        }
    })
}

/// Sums term(max(step·r, floor)) from r = first until the ratio-test tail
/// bound is negligible. With `envelope` the monotone majorant is summed.
/// Returns (partial sum, bound on the rest).
fn geometric_sum(term: &Term, step: f64, first: u64, floor: f64, envelope: bool) -> (f64, f64) {
    let start = floor.max(term.monotone_from());
    let mut sum = 0.0;
    let mut r = first;
    loop {
        let m = (step * r as f64).max(floor);
        sum += if envelope {
            term.envelope(m)
        } else {
            term.eval(m)
        };
        if step * (r + 1) as f64 >= start {
            let tail = term.geometric_tail(step, r);
            if tail <= 1e-17 * sum.abs() || tail == 0.0 || r - first >= MAX_GEOMETRIC_TERMS {
                return (sum, tail);
            }
        }
        r += 1;
    }
}

/// Σ_{n≥2} term(log n / (2d₀)), i.e. the tower m_r = log(r+1)/(2d₀).
fn logarithmic_sum(term: &Term, d0: f64) -> SumVerdict {
    let (rate, power) = match *term {
        Term::ExpPoly { rate, power, .. } => (rate, power),
        Term::LogOneMinus { rate } => (rate, 0),
    };
    // term ≍ (log n)^p n^{-σ}
    let sigma = rate / (2.0 * d0);
    let boundary = (sigma - 1.0).abs() <= BOUNDARY_EPS;
    let converges = match term {
        Term::ExpPoly { .. } => (sigma > 1.0 && !boundary) || (boundary && power < -1),
        Term::LogOneMinus { .. } => sigma > 1.0 && !boundary,
    };
    let at = |n: f64| term.eval(n.ln() / (2.0 * d0));

    if !converges {
        let mut partial_sums = Vec::new();
        let mut s = 0.0;
        let mut checkpoint = 10u64;
        for n in 2..=1_000_000u64 {
            s += at(n as f64);
            if n == checkpoint {
                partial_sums.push((n, s));
                checkpoint *= 10;
            }
        }
        let test = if boundary {
            format!("p-series boundary sigma = 1 with log power {power} >= -1")
        } else {
            format!("p-series comparison: exponent sigma = {sigma} < 1")
        };
        return SumVerdict::Divergent {
            witness: DivergenceWitness {
                test,
                exponent: sigma,
                log_power: power as f64,
                partial_sums,
            },
        };
    }

    let monotone_n = (2.0 * d0 * term.monotone_from()).exp().ceil() + 1.0;
    let mut s = 0.0;
    let mut n = 2u64;
    loop {
        let t = at(n as f64);
        s += t;
        if (n as f64 >= monotone_n && t <= 1e-13 * s) || n >= MAX_LOG_TERMS {
            break;
        }
        n += 1;
    }
    // Integral test on [n, ∞): J(n+1) ≤ tail ≤ J(n).
    let tail_integral = |x: f64| -> (f64, f64) {
        let y0 = x.ln();
        if boundary {
            let Term::ExpPoly { scale, power, .. } = *term else {
                unreachable!("boundary convergence only for power < -1");
            };
            let p = power as f64;
            let value = scale * (2.0 * d0).powf(-p) * y0.powf(p + 1.0) / (-(p + 1.0));
            return (value, 0.0);
        }
        let width = (1.0 / (sigma - 1.0)).clamp(1e-3, 1e3);
        match quad::integrate_to_infinity(
            |y| at(y.exp()) * y.exp(),
            y0,
            width,
            1e-15,
            60,
            Tolerance::new(0.0, 1e-13),
        ) {
            TailOutcome::Finite(e) => (e.value, e.error),
            TailOutcome::Divergent { .. } => (f64::INFINITY, f64::INFINITY),
        }
    };
    let nf = n as f64;
    let (upper, e1) = tail_integral(nf);
    let (lower, e2) = tail_integral(nf + 1.0);
    SumVerdict::Convergent {
        value: s + 0.5 * (upper + lower),
        remainder_bound: 0.5 * at(nf) + e1 + e2,
    }
}

/// F(β) = Σ e^{-4βm}/m².
pub fn f_sum(tower: &MassTower, beta: f64) -> Result<SumVerdict> {
    weighted_mass_sum(tower, Weight::F { beta })
}

/// G(β) = Σ e^{-βm/4}.
pub fn g_sum(tower: &MassTower, beta: f64) -> Result<SumVerdict> {
    weighted_mass_sum(tower, Weight::G { beta })
}

/// N(u).
pub fn counting(tower: &MassTower, u: f64) -> u64 {
    tower.counting(u)
}

/// Both sides of G(β) = (β/4) ∫₀^∞ e^{-βu/4} N(u) du.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub sum: f64,
    pub sum_remainder: f64,
    pub integral: f64,
    pub integral_error: f64,
    pub residual: f64,
}

/// Jump breakpoints used when integrating against N(u) with cheap weights.
const IDENTITY_JUMPS: usize = 200_000;

/// Compares the direct sum G(β) with the counting-function integral.
pub fn counting_integral_identity_check(tower: &MassTower, beta: f64) -> Result<IdentityCheck> {
    let (sum, sum_remainder) = match g_sum(tower, beta)? {
        SumVerdict::Convergent {
            value,
            remainder_bound,
        } => (value, remainder_bound),
        SumVerdict::Divergent { witness } => {
            return Err(LabError::Divergent(format!(
                "G({beta}) diverges: {}",
                witness.test
            )))
        }
        SumVerdict::Undetermined { reason } => {
            return Err(LabError::Divergent(format!(
                "G({beta}) undetermined: {reason}"
            )))
        }
    };
    let weight = |u: f64| 0.25 * beta * (-0.25 * beta * u).exp();
    let est = match integrate_against_counting(tower, weight, IDENTITY_JUMPS, 1e-14, 40) {
        TailOutcome::Finite(e) => e,
        TailOutcome::Divergent { .. } => {
            return Err(LabError::Quadrature(format!(
                "counting integral failed to converge at beta = {beta}"
            )))
        }
    };
    Ok(IdentityCheck {
        sum,
        sum_remainder,
        integral: est.value,
        integral_error: est.error,
        residual: (sum - est.value).abs(),
    })
}

/// Three-valued answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    Yes,
    No,
    Undetermined,
}

/// Least-squares line y = slope·x + intercept with x = log(1/β).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
}

impl LogLogFit {
    pub fn is_polynomial(&self) -> bool {
        self.rms_residual < POLY_FIT_RESIDUAL
    }
}

/// Fits y against log(1/β).
pub fn fit_against_inverse_beta(betas: &[f64], ys: &[f64]) -> LogLogFit {
    let xs: Vec<f64> = betas.iter().map(|b| (1.0 / b).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    LogLogFit {
        slope,
        intercept,
        rms_residual: (ss / n).sqrt(),
    }
}

/// Free constants of the nuclearity-index bounds (existence-only in theory).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexConstants {
    /// c in the exact upper bound.
    pub c: f64,
    /// C in the simplified upper bound.
    pub big_c: f64,
    /// C in the lower bound ‖Ξ(A_r)‖⁴ ≥ C e^{-4βm_r}/m_r².
    pub c_lower: f64,
}

impl Default for IndexConstants {
    fn default() -> Self {
        IndexConstants {
            c: 1.0,
            big_c: 1.0,
            c_lower: 1.0,
        }
    }
}

/// (n, β₀) with ‖Ξ‖₁ ≤ exp((β₀/β)ⁿ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriterionExponents {
    pub n: f64,
    pub beta0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuclearityVerdict {
    pub necessary_holds: Tri,
    pub sufficient_holds: Tri,
    pub exponents: Option<CriterionExponents>,
    pub necessary_fit: Option<LogLogFit>,
    pub sufficient_fit: Option<LogLogFit>,
}

/// Evaluates the necessary (F) and sufficient (G) conditions on the probe
/// grid, with default constants and a diamond of base radius 2/m₁.
pub fn classify_nuclearity(tower: &MassTower) -> Result<NuclearityVerdict> {
    classify_nuclearity_with(tower, &IndexConstants::default(), 2.0 / tower.m1())
}

pub fn classify_nuclearity_with(
    tower: &MassTower,
    constants: &IndexConstants,
    radius: f64,
) -> Result<NuclearityVerdict> {
    let window = &PROBE_BETAS[..FIT_WINDOW];

    let f_verdicts = PROBE_BETAS
        .iter()
        .map(|&b| f_sum(tower, b))
        .collect::<Result<Vec<_>>>()?;
    let (necessary_holds, necessary_fit) =
        grid_verdict(&f_verdicts, window, |v| v.ln().max(1.0).ln());

    let g_verdicts = PROBE_BETAS
        .iter()
        .map(|&b| g_sum(tower, b))
        .collect::<Result<Vec<_>>>()?;
    let (sufficient_holds, sufficient_fit) = grid_verdict(&g_verdicts, window, f64::ln);

    // G ≈ e^{a} β^{-k} turns the simplified bound into exp(C R³ e^{a} / (m₁ β^{4+k})).
    let exponents = match (sufficient_holds, sufficient_fit) {
        (Tri::Yes, Some(fit)) => {
            let n = 4.0 + fit.slope.max(0.0);
            let coefficient = constants.big_c * radius.powi(3) * fit.intercept.exp() / tower.m1();
            Some(CriterionExponents {
                n,
                beta0: coefficient.powf(1.0 / n),
            })
        }
        _ => None,
    };
    Ok(NuclearityVerdict {
        necessary_holds,
        sufficient_holds,
        exponents,
        necessary_fit,
        sufficient_fit,
    })
}

/// Combines per-β verdicts with a polynomial fit of transform(value) over
/// the fit window.
fn grid_verdict(
    verdicts: &[SumVerdict],
    window: &[f64],
    transform: impl Fn(f64) -> f64,
) -> (Tri, Option<LogLogFit>) {
    if verdicts.iter().any(SumVerdict::is_divergent) {
        return (Tri::No, None);
    }
    if verdicts.iter().any(|v| !v.is_convergent()) {
        return (Tri::Undetermined, None);
    }
    let ys: Vec<f64> = verdicts[..window.len()]
        .iter()
        .map(|v| transform(v.value().expect("convergent")))
        .collect();
    let fit = fit_against_inverse_beta(window, &ys);
    let tri = if fit.is_polynomial() {
        Tri::Yes
    } else {
        Tri::Undetermined
    };
    (tri, Some(fit))
}

/// Scalar bounds on the nuclearity index ‖Ξ‖₁ (log values are kept to
/// survive overflow).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexBounds {
    pub lower: f64,
    pub upper_exact: f64,
    pub upper_simplified: f64,
    pub log_upper_exact: f64,
    pub log_upper_simplified: f64,
}

/// Lower bound (C_lower F(β))^{1/2} and the two upper bounds for a diamond
/// with base radius R > 1/m₁. Divergent sums give infinite bounds.
pub fn nuclearity_index_bounds(
    tower: &MassTower,
    radius: f64,
    beta: f64,
    constants: &IndexConstants,
) -> Result<IndexBounds> {
    require_positive("beta", beta)?;
    require_positive("R", radius)?;
    require_positive("c", constants.c)?;
    require_positive("C", constants.big_c)?;
    require_positive("C_lower", constants.c_lower)?;
    let m1 = tower.m1();
    if radius <= 1.0 / m1 {
        return Err(LabError::param(
            "R",
            format!("diamond radius {radius} must exceed 1/m1 = {}", 1.0 / m1),
        ));
    }
    let certified = |v: SumVerdict, upper: bool| -> Result<f64> {
        match v {
            SumVerdict::Convergent {
                value,
                remainder_bound,
            } => Ok(if upper {
                value + remainder_bound
            } else {
                (value - remainder_bound).max(0.0)
            }),
            SumVerdict::Divergent { .. } => Ok(f64::INFINITY),
            SumVerdict::Undetermined { reason } => Err(LabError::Divergent(reason)),
        }
    };
    let f = certified(f_sum(tower, beta)?, false)?;
    let logs = certified(
        weighted_mass_sum(tower, Weight::LogPartition { beta })?,
        true,
    )?;
    let g = certified(g_sum(tower, beta)?, true)?;
    let r3 = radius.powi(3);
    let log_upper_exact = constants.c * r3 / beta.powi(3) * logs;
    let log_upper_simplified = constants.big_c * r3 / (m1 * beta.powi(4)) * g;
    Ok(IndexBounds {
        lower: (constants.c_lower * f).sqrt(),
        upper_exact: log_upper_exact.exp(),
        upper_simplified: log_upper_simplified.exp(),
        log_upper_exact,
        log_upper_simplified,
    })
}

/// Tauberian bound N(v) ≤ (A/β²) e^{(β₀/β)ⁿ + βv} at β = β₀^{n/(n+1)} (n/v)^{1/(n+1)}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauberianBound {
    pub beta: f64,
    pub log_value: f64,
    /// e^{log_value}; infinite when it overflows.
    pub value: f64,
}

/// Natural log of (A/β²) e^{(β₀/β)ⁿ + βv}.
pub fn tauberian_log_raw(n: f64, beta0: f64, a: f64, v: f64, beta: f64) -> f64 {
    a.ln() - 2.0 * beta.ln() + (beta0 / beta).powf(n) + beta * v
}

pub fn tauberian_counting_bound(n: f64, beta0: f64, a: f64, v: f64) -> Result<TauberianBound> {
    require_positive("n", n)?;
    require_positive("beta0", beta0)?;
    require_positive("A", a)?;
    require_positive("v", v)?;
    let beta = beta0.powf(n / (n + 1.0)) * (n / v).powf(1.0 / (n + 1.0));
    let log_value = tauberian_log_raw(n, beta0, a, v, beta);
    Ok(TauberianBound {
        beta,
        log_value,
        value: log_value.exp(),
    })
}

/// Minimizes the raw bound over β by golden-section search in log β (the
/// objective is convex there). Returns (β, log value).
pub fn tauberian_minimize(n: f64, beta0: f64, a: f64, v: f64) -> Result<(f64, f64)> {
    let start = tauberian_counting_bound(n, beta0, a, v)?.beta.ln();
    let objective = |x: f64| tauberian_log_raw(n, beta0, a, v, x.exp());
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (start - 30.0, start + 30.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    for _ in 0..200 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x.exp(), objective(x)))
}

/// Constants (B, C) with N(v) ≤ B v^{2/(n+1)} e^{C v^{n/(n+1)}}, obtained by
/// inserting the substituted β into the raw bound.
pub fn tauberian_constants(n: f64, beta0: f64, a: f64) -> Result<(f64, f64)> {
    require_positive("n", n)?;
    require_positive("beta0", beta0)?;
    require_positive("A", a)?;
    let q = n / (n + 1.0);
    let b = a * beta0.powf(-2.0 * q) * n.powf(-2.0 / (n + 1.0));
    let c = beta0.powf(q) * n.powf(-q) * (1.0 + n);
    Ok((b, c))
}

/// Thermal-state normality conditions at one β.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalNormality {
    /// Σ e^{-βm/2}: convergence suffices for local normality.
    pub sufficient: SumVerdict,
    /// Σ e^{-2βm}: convergence is necessary for local normality.
    pub necessary: SumVerdict,
    /// Local normality at every probe β ⇔ F finite at every probe β.
    pub all_beta: Tri,
}

pub fn local_normality_verdict(tower: &MassTower, beta: f64) -> Result<LocalNormality> {
    let sufficient = weighted_mass_sum(tower, Weight::Half { beta })?;
    let necessary = weighted_mass_sum(tower, Weight::Double { beta })?;
    let mut all_beta = Tri::Yes;
    for &b in PROBE_BETAS.iter() {
        match f_sum(tower, b)?.tri() {
            Tri::No => {
                all_beta = Tri::No;
                break;
            }
            Tri::Undetermined => all_beta = Tri::Undetermined,
            Tri::Yes => {}
        }
    }
    Ok(LocalNormality {
        sufficient,
        necessary,
        all_beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn constructors_enforce_gap_and_order() {
        assert!(matches!(
            MassTower::arithmetic(0.0),
            Err(LabError::MassGap(_))
        ));
        assert!(matches!(
            MassTower::finite(vec![0.0, 1.0]),
            Err(LabError::MassGap(_))
        ));
        assert!(MassTower::finite(vec![]).is_err());
        assert!(MassTower::finite(vec![2.0, 1.0]).is_err());
        assert!(MassTower::logarithmic(-1.0).is_err());
        assert!(MassTower::custom(vec![1.0], Some(0.0)).is_err());
    }

    #[test]
    fn prefix_consistency() {
        let tail = TailDescriptor::Arithmetic { m1: 0.5 };
        let ok: Vec<f64> = (1..=100).map(|r| r as f64 * 0.5).collect();
        assert!(MassTower::with_prefix(tail.clone(), ok.clone()).is_ok());
        let mut bad = ok;
        bad[40] += 1e-9;
        assert!(MassTower::with_prefix(tail, bad).is_err());
    }

    #[test]
    fn counting_examples() {
        let ar = MassTower::arithmetic(1.0).unwrap();
        assert_eq!(ar.counting(2.5), 2);
        assert_eq!(ar.counting(3.0), 3);
        assert_eq!(ar.counting(0.99), 0);
        let log = MassTower::logarithmic(1.0).unwrap();
        assert_eq!(log.counting(1.0), 6);
        assert_eq!(log.counting(0.3), 0);
        let fin = MassTower::finite(vec![1.0, 2.0, 2.0, 5.0]).unwrap();
        assert_eq!(fin.counting(2.0), 3);
        assert_eq!(fin.counting(100.0), 4);
    }

    #[test]
    fn counting_matches_masses_at_jumps() {
        let log = MassTower::logarithmic(0.7).unwrap();
        for r in 1..500u64 {
            let m = log.mass(r).unwrap();
            assert_eq!(log.counting(m), r);
            assert_eq!(log.counting(m * (1.0 - 1e-12)), r - 1);
        }
    }

    #[test]
    fn arithmetic_g_closed_form() {
        let ar = MassTower::arithmetic(1.0).unwrap();
        let v = g_sum(&ar, 4.0).unwrap();
        let exact = 1.0 / (std::f64::consts::E - 1.0);
        let SumVerdict::Convergent {
            value,
            remainder_bound,
        } = v
        else {
            panic!("expected convergence")
        };
        assert!((value - exact).abs() <= 1e-10 + remainder_bound);
    }

    #[test]
    fn arithmetic_f_value() {
        let ar = MassTower::arithmetic(1.0).unwrap();
        let v = f_sum(&ar, 1.0).unwrap();
        // independent partial sum, terms beyond r = 30 are below 1e-52
        let direct: f64 = (1..=30)
            .map(|r| (-4.0 * r as f64).exp() / (r * r) as f64)
            .sum();
        assert_close(v.value().unwrap(), direct, 1e-15);
        assert_close(v.value().unwrap(), 0.018400, 5e-7);
    }

    #[test]
    fn logarithmic_f_diverges_below_half_d0() {
        let log = MassTower::logarithmic(1.0).unwrap();
        let v = f_sum(&log, 0.4).unwrap();
        let SumVerdict::Divergent { witness } = v else {
            panic!("expected divergence")
        };
        assert!((witness.exponent - 0.8).abs() < 1e-12);
        let sums: Vec<f64> = witness.partial_sums.iter().map(|p| p.1).collect();
        assert!(sums.windows(2).all(|w| w[1] > w[0]));
        assert!(f_sum(&log, 0.6).unwrap().is_convergent());
    }

    #[test]
    fn logarithmic_sum_against_zeta() {
        // G(16) with d0 = 1 is Σ_{n≥2} n^{-2} = ζ(2) - 1.
        let log = MassTower::logarithmic(1.0).unwrap();
        let v = g_sum(&log, 16.0).unwrap();
        let exact = std::f64::consts::PI.powi(2) / 6.0 - 1.0;
        let (value, rem) = (v.value().unwrap(), v.remainder().unwrap());
        assert!(
            (value - exact).abs() <= rem + 1e-12,
            "{value} vs {exact} ± {rem}"
        );
        assert!(rem < 1e-10);
    }

    #[test]
    fn boundary_case_uses_log_power() {
        let log = MassTower::logarithmic(1.0).unwrap();
        // σ = 1 exactly: F has power -2 and converges, G diverges.
        assert!(f_sum(&log, 0.5).unwrap().is_convergent());
        assert!(g_sum(&log, 8.0).unwrap().is_divergent());
    }

    #[test]
    fn finite_and_custom() {
        let fin = MassTower::finite(vec![1.0, 2.0]).unwrap();
        let v = g_sum(&fin, 1.0).unwrap();
        assert_close(
            v.value().unwrap(),
            (-0.25f64).exp() + (-0.5f64).exp(),
            1e-15,
        );
        let open = MassTower::custom(vec![1.0, 2.0], None).unwrap();
        assert!(matches!(
            g_sum(&open, 1.0).unwrap(),
            SumVerdict::Undetermined { .. }
        ));
        let bounded = MassTower::custom(vec![1.0, 2.0], Some(1.0)).unwrap();
        let SumVerdict::Convergent {
            value,
            remainder_bound,
        } = g_sum(&bounded, 4.0).unwrap()
        else {
            panic!()
        };
        // The arithmetic tower m_r = r satisfies this certificate.
        let exact = 1.0 / (std::f64::consts::E - 1.0);
        assert!((value - exact).abs() <= remainder_bound + 1e-12);
    }

    #[test]
    fn identity_on_finite_tower() {
        let fin = MassTower::finite(vec![1.0, 2.0]).unwrap();
        let check = counting_integral_identity_check(&fin, 1.0).unwrap();
        let exact = (-0.25f64).exp() + (-0.5f64).exp();
        assert_close(check.sum, exact, 1e-15);
        assert_close(check.integral, exact, 1e-12);
    }

    #[test]
    fn identity_rejects_divergent_g() {
        let log = MassTower::logarithmic(1.0).unwrap();
        assert!(matches!(
            counting_integral_identity_check(&log, 8.0),
            Err(LabError::Divergent(_))
        ));
    }

    #[test]
    fn classify_example_spectra() {
        let ar = classify_nuclearity(&MassTower::arithmetic(1.0).unwrap()).unwrap();
        assert_eq!(ar.sufficient_holds, Tri::Yes);
        assert_eq!(ar.necessary_holds, Tri::Yes);
        assert!(ar.exponents.is_some());
        let log = classify_nuclearity(&MassTower::logarithmic(1.0).unwrap()).unwrap();
        assert_eq!(log.necessary_holds, Tri::No);
        assert_eq!(log.sufficient_holds, Tri::No);
        let fin = classify_nuclearity(&MassTower::finite(vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        assert_eq!(fin.necessary_holds, Tri::Yes);
        assert_eq!(fin.sufficient_holds, Tri::Yes);
        let open = classify_nuclearity(&MassTower::custom(vec![1.0], None).unwrap()).unwrap();
        assert_eq!(open.sufficient_holds, Tri::Undetermined);
    }

    #[test]
    fn index_bounds_single_field() {
        let one = MassTower::finite(vec![1.0]).unwrap();
        let b = nuclearity_index_bounds(&one, 2.0, 1.0, &IndexConstants::default()).unwrap();
        let expected = (8.0 * (1.0 - (-0.5f64).exp()).ln().abs()).exp();
        assert_close(b.upper_exact, expected, 1e-12 * expected);
        assert_close(b.lower, (-2.0f64).exp(), 1e-15);
        assert!(nuclearity_index_bounds(&one, 1.0, 1.0, &IndexConstants::default()).is_err());
    }

    #[test]
    fn index_bounds_diverge_with_f() {
        let log = MassTower::logarithmic(1.0).unwrap();
        let b = nuclearity_index_bounds(&log, 10.0, 0.1, &IndexConstants::default()).unwrap();
        assert!(b.lower.is_infinite());
        assert!(b.upper_exact.is_infinite());
    }

    #[test]
    fn simplified_bound_tends_to_one() {
        let ar = MassTower::arithmetic(1.0).unwrap();
        let mut last = f64::INFINITY;
        for beta in [1.0, 2.0, 5.0, 10.0, 20.0, 50.0] {
            let b = nuclearity_index_bounds(&ar, 2.0, beta, &IndexConstants::default()).unwrap();
            assert!(b.upper_simplified < last && b.upper_simplified > 1.0);
            last = b.upper_simplified;
        }
        assert!(last - 1.0 < 1e-6);
    }

    #[test]
    fn tauberian_plug_in() {
        let b = tauberian_counting_bound(1.0, 1.0, 1.0, 100.0).unwrap();
        assert_close(b.beta, 0.1, 1e-15);
        assert_close(b.log_value, 100f64.ln() + 20.0, 1e-12);
        let (bb, cc) = tauberian_constants(1.0, 1.0, 1.0).unwrap();
        // B v^{2/(n+1)} e^{C v^{n/(n+1)}} reproduces the plug-in value
        assert_close(bb.ln() + 100f64.ln() + cc * 10.0, b.log_value, 1e-12);
    }

    #[test]
    fn local_normality_examples() {
        let ar = MassTower::arithmetic(1.0).unwrap();
        let v = local_normality_verdict(&ar, 1.0).unwrap();
        assert!(v.sufficient.is_convergent() && v.necessary.is_convergent());
        assert_eq!(v.all_beta, Tri::Yes);
        let log = MassTower::logarithmic(1.0).unwrap();
        let v = local_normality_verdict(&log, 0.5).unwrap();
        let SumVerdict::Divergent { witness } = &v.sufficient else {
            panic!("expected divergence")
        };
        assert_close(witness.exponent, 0.125, 1e-15);
        assert_eq!(v.all_beta, Tri::No);
    }
}
