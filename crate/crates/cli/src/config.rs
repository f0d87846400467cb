//! Strict JSON run configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use splitlab::distal::{Ball, RadialDiffeo};
use splitlab::negstate::{build_profile, BumpSpec, DEFAULT_BUMP};
use splitlab::testfn::{make_mollifier, ExponentialEnvelope, MollifierShape};
use splitlab::tower::{IndexConstants, MassTower};
use splitlab::LabError;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    TowerReport,
    QeiReport,
    NegstateVerify,
    TestfnBuild,
    DistalDemo,
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Analysis::TowerReport => "tower-report",
            Analysis::QeiReport => "qei-report",
            Analysis::NegstateVerify => "negstate-verify",
            Analysis::TestfnBuild => "testfn-build",
            Analysis::DistalDemo => "distal-demo",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TowerType {
    Arithmetic,
    Logarithmic,
    Finite,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerSpec {
    #[serde(rename = "type")]
    pub kind: TowerType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
    /// Certified slope s with m_r ≥ s·r beyond the listed masses (custom only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<f64>,
}

impl Default for TowerSpec {
    fn default() -> Self {
        TowerSpec {
            kind: TowerType::Arithmetic,
            m1: Some(1.0),
            d0: None,
            masses: None,
            tail_bound: None,
        }
    }
}

impl TowerSpec {
    pub fn build(&self) -> Result<MassTower, String> {
        let unused = |field: &str, present: bool| {
            if present {
                Err(format!("`{field}` is not used by the {:?} tower", self.kind).to_lowercase())
            } else {
                Ok(())
            }
        };
        let need = |field: &str, v: Option<f64>| {
            v.ok_or_else(|| format!("{:?} tower requires `{field}`", self.kind).to_lowercase())
        };
        let tower = match self.kind {
            TowerType::Arithmetic => {
                unused("d0", self.d0.is_some())?;
                unused("masses", self.masses.is_some())?;
                unused("tail_bound", self.tail_bound.is_some())?;
                MassTower::arithmetic(need("m1", self.m1)?)
            }
            TowerType::Logarithmic => {
                unused("m1", self.m1.is_some())?;
                unused("masses", self.masses.is_some())?;
                unused("tail_bound", self.tail_bound.is_some())?;
                MassTower::logarithmic(need("d0", self.d0)?)
            }
            TowerType::Finite => {
                unused("m1", self.m1.is_some())?;
                unused("d0", self.d0.is_some())?;
                unused("tail_bound", self.tail_bound.is_some())?;
                let masses = self
                    .masses
                    .clone()
                    .ok_or("finite tower requires `masses`")?;
                MassTower::finite(masses)
            }
            TowerType::Custom => {
                unused("m1", self.m1.is_some())?;
                unused("d0", self.d0.is_some())?;
                let masses = self
                    .masses
                    .clone()
                    .ok_or("custom tower requires `masses`")?;
                MassTower::custom(masses, self.tail_bound)
            }
        };
        tower.map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFnSpec {
    /// Support radius of the mollifier χ.
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "one")]
    pub beta0: f64,
    #[serde(default)]
    pub shape: MollifierShape,
}

impl Default for TestFnSpec {
    fn default() -> Self {
        TestFnSpec {
            a: 1.0,
            beta0: 1.0,
            shape: MollifierShape::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    /// QEI constant and constant of the simplified index bound.
    #[serde(rename = "C", default = "one")]
    pub big_c: f64,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(rename = "C_lower", default = "one")]
    pub c_lower: f64,
    /// Prefactor of the Tauberian counting bound.
    #[serde(rename = "A", default = "one")]
    pub a: f64,
    /// Spacetime dimension entering u^d.
    #[serde(default = "four")]
    pub d: u32,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            big_c: 1.0,
            c: 1.0,
            c_lower: 1.0,
            a: 1.0,
            d: 4,
        }
    }
}

impl Constants {
    pub fn index(&self) -> IndexConstants {
        IndexConstants {
            c: self.c,
            big_c: self.big_c,
            c_lower: self.c_lower,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    #[serde(default = "default_beta")]
    pub beta: Vec<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: Vec<f64>,
    #[serde(default = "default_m")]
    pub m: Vec<f64>,
    #[serde(default = "default_u")]
    pub u: Vec<f64>,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            beta: default_beta(),
            lambda: default_lambda(),
            m: default_m(),
            u: default_u(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegstateSpec {
    /// Lower cutoff m₀ of the envelope φ.
    #[serde(default = "half")]
    pub m0: f64,
    /// Monte Carlo samples per mass; 0 skips the cross-check.
    #[serde(default = "default_samples")]
    pub mc_samples: usize,
    #[serde(default = "default_bump")]
    pub g: BumpSpec,
    #[serde(default = "default_bump")]
    pub h: BumpSpec,
}

impl Default for NegstateSpec {
    fn default() -> Self {
        NegstateSpec {
            m0: 0.5,
            mc_samples: default_samples(),
            g: DEFAULT_BUMP,
            h: DEFAULT_BUMP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistalSpec {
    /// Radius of the ball S.
    #[serde(default = "one")]
    pub radius: f64,
    /// Splitting distance d_S fed to the shrink construction.
    #[serde(default = "one")]
    pub d_s: f64,
    #[serde(default = "half")]
    pub r: f64,
    /// Global scaling factor for the κ demo.
    #[serde(default = "two")]
    pub lambda: f64,
    #[serde(default = "three")]
    pub dimension: usize,
    #[serde(default)]
    pub slack: f64,
    /// d₀ of the logarithmic model band.
    #[serde(default = "one")]
    pub d0: f64,
}

impl Default for DistalSpec {
    fn default() -> Self {
        DistalSpec {
            radius: 1.0,
            d_s: 1.0,
            r: 0.5,
            lambda: 2.0,
            dimension: 3,
            slack: 0.0,
            d0: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: default_dir() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<Analysis>,
    #[serde(default)]
    pub tower: TowerSpec,
    #[serde(default)]
    pub testfn: TestFnSpec,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub negstate: NegstateSpec,
    #[serde(default)]
    pub distal: DistalSpec,
    /// Not echoed into reports, so that moving the output keeps them identical.
    #[serde(default, skip_serializing)]
    pub output: OutputSpec,
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn half() -> f64 {
    0.5
}
fn three() -> usize {
    3
}
fn four() -> u32 {
    4
}
fn default_beta() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
}
fn default_lambda() -> Vec<f64> {
    vec![2.0, 1.0, 0.5, 0.25]
}
fn default_m() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}
fn default_u() -> Vec<f64> {
    (0..=80).map(|k| k as f64 * 0.25).collect()
}
fn default_samples() -> usize {
    100_000
}
fn default_bump() -> BumpSpec {
    DEFAULT_BUMP
}
fn default_dir() -> PathBuf {
    PathBuf::from("splitlab-out")
}

/// Reads, parses and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, CliError> {
    let config: RunConfig =
        serde_json::from_str(text).map_err(|e| CliError::Config(vec![e.to_string()]))?;
    let problems = config.validate();
    if problems.is_empty() {
        Ok(config)
    } else {
        Err(CliError::Config(problems))
    }
}

fn positive_grid(name: &str, grid: &[f64], problems: &mut Vec<String>) {
    if grid.is_empty() {
        problems.push(format!("grids.{name}: must not be empty"));
    }
    if let Some(v) = grid.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        problems.push(format!("grids.{name}: values must be positive, got {v}"));
    }
}

impl RunConfig {
    /// Every invariant violation, each prefixed with the module it belongs to.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut check = |module: &str, r: Result<(), String>| {
            if let Err(e) = r {
                problems.push(format!("{module}: {e}"));
            }
        };
        let lab = |r: Result<(), LabError>| r.map_err(|e| e.to_string());

        check("tower", self.tower.build().map(|_| ()));
        check(
            "testfn",
            lab(make_mollifier(self.testfn.a, self.testfn.shape).map(|_| ())),
        );
        check(
            "testfn",
            lab(ExponentialEnvelope::new(1.0, self.testfn.beta0, 0.0).map(|_| ())),
        );
        check(
            "negstate",
            lab(ExponentialEnvelope::new(1.0, self.testfn.beta0, self.negstate.m0).map(|_| ())),
        );
        check(
            "negstate",
            lab(build_profile(self.negstate.g, self.negstate.h).map(|_| ())),
        );
        if self.negstate.mc_samples != 0 && self.negstate.mc_samples < 10_000 {
            check(
                "negstate",
                Err("mc_samples must be 0 (skip) or at least 10000".into()),
            );
        }
        let c = &self.constants;
        for (name, v) in [
            ("C", c.big_c),
            ("c", c.c),
            ("C_lower", c.c_lower),
            ("A", c.a),
        ] {
            if !(v.is_finite() && v > 0.0) {
                check(
                    "constants",
                    Err(format!("{name} must be positive, got {v}")),
                );
            }
        }
        if c.d < 2 {
            check(
                "constants",
                Err(format!("d must be at least 2, got {}", c.d)),
            );
        }
        check("distal", lab(Ball::new(self.distal.radius).map(|_| ())));
        check(
            "distal",
            lab(RadialDiffeo::scaling(self.distal.lambda, self.distal.dimension).map(|_| ())),
        );
        for (name, v) in [
            ("d_s", self.distal.d_s),
            ("r", self.distal.r),
            ("d0", self.distal.d0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                check("distal", Err(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.distal.slack.is_finite() && self.distal.slack >= 0.0) {
            check("distal", Err("slack must be nonnegative".into()));
        }

        positive_grid("beta", &self.grids.beta, &mut problems);
        positive_grid("m", &self.grids.m, &mut problems);
        positive_grid("lambda", &self.grids.lambda, &mut problems);
        if self.grids.lambda.len() < 2 || self.grids.lambda.windows(2).any(|w| w[1] >= w[0]) {
            problems.push("grids.lambda: needs at least two strictly decreasing values".into());
        }
        if self.grids.u.is_empty() || self.grids.u.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            problems.push("grids.u: values must be nonnegative and the grid nonempty".into());
        }
        problems
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use splitlab::tower::TailDescriptor;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config_str("{}").unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.tower, TowerSpec::default());
        assert_eq!(cfg.grids.m, vec![1.0, 2.0, 4.0]);
        assert_eq!(cfg.negstate.m0, 0.5);
    }

    #[test]
    fn zero_gap_is_rejected() {
        let err = parse_config_str(r#"{"tower": {"type": "arithmetic", "m1": 0}}"#).unwrap_err();
        assert!(err.to_string().contains("mass gap violated"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn logarithmic_example_spectrum() {
        let cfg = parse_config_str(r#"{"tower": {"type": "logarithmic", "d0": 1}}"#).unwrap();
        let tower = cfg.tower.build().unwrap();
        assert_eq!(tower.tail(), &TailDescriptor::Logarithmic { d0: 1.0 });
        assert!((tower.m1() - 2f64.ln() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config_str(r#"{"sead": 3}"#).is_err());
        assert!(parse_config_str(r#"{"testfn": {"beta": 1}}"#).is_err());
    }

    #[test]
    fn problems_are_collected() {
        let err = parse_config_str(
            r#"{"tower": {"type": "finite"}, "grids": {"lambda": [1, 2]}, "constants": {"A": -1}}"#,
        )
        .unwrap_err();
        let CliError::Config(list) = err else {
            panic!("expected a config error")
        };
        assert_eq!(list.len(), 3, "{list:?}");
    }

    #[test]
    fn stray_fields_name_the_tower_type() {
        let err =
            parse_config_str(r#"{"tower": {"type": "arithmetic", "m1": 1, "d0": 2}}"#).unwrap_err();
        assert!(err.to_string().contains("`d0` is not used"), "{err}");
    }
}
