//! Splitting-distance calculus for radial diffeomorphisms of flat space,
//! f(x) = ψ(|x|) x/|x|, acting on origin-centred balls.
//!
//! ψ is assembled from constant-slope plateaus joined by smootherstep
//! transitions, so ψ, ψ′ and ψ⁻¹ are available in closed form or by a
//! bracketed monotone root find.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, LabError, Result};

const ROOT_TOL: f64 = 1e-15;
const KAPPA_GRID: usize = 256;

/// 6t⁵ - 15t⁴ + 10t³ clamped to [0, 1].
fn smootherstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    }
}

/// ∫₀ᵗ smootherstep.
fn smootherstep_integral(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        t - 0.5
    } else {
        t.powi(4) * (t * (t - 3.0) + 2.5)
    }
}

/// Slope change from the previous plateau to `slope` over [start, start + width].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub start: f64,
    pub width: f64,
    pub slope: f64,
}

/// ψ′(s) = σ₀ + Σᵢ (σᵢ - σᵢ₋₁) S((s - aᵢ)/wᵢ) with non-overlapping transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeProfile {
    pub initial_slope: f64,
    pub transitions: Vec<Transition>,
}

impl SlopeProfile {
    pub fn new(initial_slope: f64, transitions: Vec<Transition>) -> Result<Self> {
        require_positive("initial_slope", initial_slope)?;
        let mut end = 0.0;
        for t in &transitions {
            require_positive("transition width", t.width)?;
            require_positive("transition slope", t.slope)?;
            if !(t.start >= end) {
                return Err(LabError::param(
                    "transitions",
                    format!(
                        "transition at {} overlaps the previous one ending at {end}",
                        t.start
                    ),
                ));
            }
            end = t.start + t.width;
        }
        Ok(SlopeProfile {
            initial_slope,
            transitions,
        })
    }

    fn jumps(&self) -> impl Iterator<Item = (f64, &Transition)> {
        let mut prev = self.initial_slope;
        self.transitions.iter().map(move |t| {
            let d = t.slope - prev;
            prev = t.slope;
            (d, t)
        })
    }

    pub fn psi(&self, s: f64) -> f64 {
        self.initial_slope * s
            + self
                .jumps()
                .map(|(d, t)| d * t.width * smootherstep_integral((s - t.start) / t.width))
                .sum::<f64>()
    }

    pub fn derivative(&self, s: f64) -> f64 {
        self.initial_slope
            + self
                .jumps()
                .map(|(d, t)| d * smootherstep((s - t.start) / t.width))
                .sum::<f64>()
    }

    pub fn final_slope(&self) -> f64 {
        self.transitions
            .last()
            .map_or(self.initial_slope, |t| t.slope)
    }

    /// End of the last transition.
    pub fn last_knot(&self) -> f64 {
        self.transitions.last().map_or(0.0, |t| t.start + t.width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadialMap {
    Profile(SlopeProfile),
    /// outer ∘ inner
    Compose(Box<RadialMap>, Box<RadialMap>),
}

impl RadialMap {
    pub fn psi(&self, s: f64) -> f64 {
        match self {
            RadialMap::Profile(p) => p.psi(s),
            RadialMap::Compose(outer, inner) => outer.psi(inner.psi(s)),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            RadialMap::Profile(p) => p.derivative(s),
            RadialMap::Compose(outer, inner) => {
                outer.derivative(inner.psi(s)) * inner.derivative(s)
            }
        }
    }

    /// Radius beyond which ψ is the identity, if any.
    pub fn cutoff(&self) -> Option<f64> {
        match self {
            RadialMap::Profile(p) => {
                let end = p.last_knot();
                let identity = (p.final_slope() - 1.0).abs() <= 1e-12
                    && (p.psi(end) - end).abs() <= 1e-12 * end.max(1.0);
                identity.then_some(end)
            }
            RadialMap::Compose(outer, inner) => Some(outer.cutoff()?.max(inner.cutoff()?)),
        }
    }
}

/// f(x) = ψ(|x|) x/|x| on ℝ^dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialDiffeo {
    pub map: RadialMap,
    pub dimension: usize,
}

impl RadialDiffeo {
    pub fn from_profile(profile: SlopeProfile, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(LabError::param("dimension", "must be at least 1"));
        }
        Ok(RadialDiffeo {
            map: RadialMap::Profile(profile),
            dimension,
        })
    }

    pub fn identity(dimension: usize) -> Result<Self> {
        Self::from_profile(SlopeProfile::new(1.0, Vec::new())?, dimension)
    }

    /// ψ(s) = s/λ everywhere.
    pub fn scaling(lambda: f64, dimension: usize) -> Result<Self> {
        require_positive("lambda", lambda)?;
        Self::from_profile(SlopeProfile::new(1.0 / lambda, Vec::new())?, dimension)
    }

    /// self ∘ inner.
    pub fn compose(&self, inner: &RadialDiffeo) -> Result<Self> {
        if self.dimension != inner.dimension {
            return Err(LabError::param(
                "dimension",
                "composed maps must share a dimension",
            ));
        }
        Ok(RadialDiffeo {
            map: RadialMap::Compose(Box::new(self.map.clone()), Box::new(inner.map.clone())),
            dimension: self.dimension,
        })
    }

    pub fn psi(&self, s: f64) -> f64 {
        self.map.psi(s)
    }

    pub fn derivative(&self, s: f64) -> f64 {
        self.map.derivative(s)
    }

    pub fn cutoff(&self) -> Option<f64> {
        self.map.cutoff()
    }

    /// ψ⁻¹(y) by safeguarded Newton iteration inside a bisection bracket.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y.is_finite() && y >= 0.0) {
            return Err(LabError::param(
                "radius",
                format!("must be nonnegative, got {y}"),
            ));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let mut hi = y.max(1.0);
        let mut expansions = 0;
        while self.psi(hi) < y {
            hi *= 2.0;
            expansions += 1;
            if expansions > 200 {
                return Err(LabError::Quadrature(format!("cannot bracket psi^-1({y})")));
            }
        }
        let mut lo = 0.0;
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let fx = self.psi(x) - y;
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.derivative(x);
            let newton = x - fx / d;
            let next = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= ROOT_TOL * next.abs().max(1e-300) || hi - lo <= ROOT_TOL * hi {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }

    /// Operator norm of D(f⁻¹) at image radius s: max(1/ψ′(ψ⁻¹s), ψ⁻¹(s)/s),
    /// the tangential term only in dimension ≥ 2.
    pub fn inverse_derivative_norm(&self, s: f64) -> Result<f64> {
        let x = self.inverse(s)?;
        let radial = 1.0 / self.derivative(x);
        Ok(if self.dimension >= 2 {
            radial.max(x / s)
        } else {
            radial
        })
    }

    /// Checks ψ′ > 0 on a grid covering [0, max(cutoff, extent)].
    pub fn check_monotone(&self, extent: f64) -> Result<()> {
        let end = self.cutoff().unwrap_or(0.0).max(extent);
        for k in 0..=4096 {
            let s = end * k as f64 / 4096.0;
            let d = self.derivative(s);
            if !(d > 0.0) {
                return Err(LabError::CheckFailed(format!("psi' = {d} at s = {s}")));
            }
        }
        Ok(())
    }
}

/// Origin-centred open ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub radius: f64,
}

impl Ball {
    pub fn new(radius: f64) -> Result<Self> {
        require_positive("radius", radius)?;
        Ok(Ball { radius })
    }
}

/// inf{ρ > 0 : B(f(S), r) ⊂ f(B(S, ρ))} + slack = ψ⁻¹(ψ(R) + r) - R + slack.
pub fn covering_radius(f: &RadialDiffeo, s: &Ball, r: f64, slack: f64) -> Result<f64> {
    require_positive("r", r)?;
    if !(slack.is_finite() && slack >= 0.0) {
        return Err(LabError::param(
            "slack",
            format!("must be nonnegative, got {slack}"),
        ));
    }
    // Identity tail: the annulus lies where ψ(s) = s.
    if f.cutoff().is_some_and(|c| s.radius >= c) {
        return Ok(r + slack);
    }
    let image = f.psi(s.radius);
    Ok(f.inverse(image + r)? - s.radius + slack)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaResult {
    pub kappa: f64,
    /// Image radius where the supremum is attained.
    pub at_radius: f64,
}

/// sup of ‖D(f⁻¹)‖ over the annulus ψ(R) < |y| ≤ ψ(R) + r, by a uniform
/// grid followed by golden-section refinement around the best node.
pub fn derivative_kappa(f: &RadialDiffeo, s: &Ball, r: f64) -> Result<KappaResult> {
    require_positive("r", r)?;
    let a = f.psi(s.radius);
    let h = r / KAPPA_GRID as f64;
    let mut best = KappaResult {
        kappa: 0.0,
        at_radius: a + r,
    };
    for k in 1..=KAPPA_GRID {
        let y = a + h * k as f64;
        let v = f.inverse_derivative_norm(y)?;
        if v > best.kappa {
            best = KappaResult {
                kappa: v,
                at_radius: y,
            };
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (
        (best.at_radius - h).max(a + 1e-12 * r),
        (best.at_radius + h).min(a + r),
    );
    let objective = |y: f64| f.inverse_derivative_norm(y).unwrap_or(f64::NEG_INFINITY);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    for _ in 0..80 {
        if f1 > f2 {
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
    }
    let (y, v) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    if v > best.kappa {
        best = KappaResult {
            kappa: v,
            at_radius: y,
        };
    }
    Ok(best)
}

/// One step of the ball-shrinking argument.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrinkResult {
    pub diffeo: RadialDiffeo,
    pub radius: f64,
    pub d_s: f64,
    /// ψ(R + d_S/2), required to be ≥ R + d_S.
    pub psi_at_half: f64,
    pub covering_radius: f64,
    pub implied_bound: f64,
    pub holds: bool,
    /// Bounds d_S/2^k from iterating the step, k = 1, 2, ...
    pub iterates: Vec<f64>,
    pub conclusion: String,
}

const SHRINK_ITERATES: usize = 20;

/// ψ with slope 1 on [0, R], a rise to slope 3 over [R, R + d/8], slope 3 up
/// to R + d/2, then a low plateau σ solved so that ψ(R + 2d) = R + 2d, with
/// identity beyond. Then f(S) = S and B(S, d) ⊂ f(B(S, d/2)).
pub fn shrink_construction(s: &Ball, d_s: f64, dimension: usize) -> Result<ShrinkResult> {
    require_positive("d_S", d_s)?;
    let r = s.radius;
    let w = d_s / 8.0;
    let build = |sigma: f64| {
        SlopeProfile::new(
            1.0,
            vec![
                Transition {
                    start: r,
                    width: w,
                    slope: 3.0,
                },
                Transition {
                    start: r + d_s / 2.0,
                    width: w,
                    slope: sigma,
                },
                Transition {
                    start: r + 2.0 * d_s - w,
                    width: w,
                    slope: 1.0,
                },
            ],
        )
    };
    // ψ(R + 2d) is affine in σ.
    let end = r + 2.0 * d_s;
    let at = |sigma: f64| -> Result<f64> { Ok(build(sigma)?.psi(end)) };
    let (p1, p2) = (at(1.0)?, at(2.0)?);
    let sigma = 1.0 + (end - p1) / (p2 - p1);
    let diffeo = RadialDiffeo::from_profile(build(sigma)?, dimension)?;
    diffeo.check_monotone(end)?;
    if diffeo.cutoff().is_none() {
        return Err(LabError::CheckFailed(
            "shrinking map is not the identity beyond R + 2d".into(),
        ));
    }
    let psi_at_half = diffeo.psi(r + d_s / 2.0);
    let covering = covering_radius(&diffeo, s, d_s, 0.0)?;
    let implied_bound = d_s / 2.0;
    let holds = psi_at_half >= r + d_s && covering <= implied_bound;
    let iterates = (1..=SHRINK_ITERATES)
        .map(|k| d_s / 2f64.powi(k as i32))
        .collect();
    let conclusion = if holds {
        "f(S) = S and d(S) <= d_S/2; iterating forces d(S) in {0, infinity}".to_string()
    } else {
        "construction failed".to_string()
    };
    Ok(ShrinkResult {
        diffeo,
        radius: r,
        d_s,
        psi_at_half,
        covering_radius: covering,
        implied_bound,
        holds,
        iterates,
        conclusion,
    })
}

/// Known splitting-distance range d₀ ≤ d(r) ≤ 2d₀ of the logarithmic tower.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelBand {
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
    /// 1/d₀, of the order of the maximal temperature admitting locally
    /// normal equilibrium states.
    pub inverse_lower: f64,
    pub note: String,
}

pub fn distal_model_band(d0: f64, r: f64) -> Result<ModelBand> {
    require_positive("d0", d0)?;
    require_positive("r", r)?;
    Ok(ModelBand {
        lower: d0,
        upper: 2.0 * d0,
        width: d0,
        inverse_lower: 1.0 / d0,
        note: format!(
            "splitting distance of the logarithmic tower lies in [{d0}, {}] for every r; \
             1/d0 = {} is of the order of the maximal temperature",
            2.0 * d0,
            1.0 / d0
        ),
    })
}
