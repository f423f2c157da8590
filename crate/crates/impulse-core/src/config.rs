//! JSON experiment configuration.
//!
//! A config names the system (two maps, an impulse-time law, a domain) plus
//! numeric settings for each kind of run. Every field has a default; the
//! fully resolved config is echoed into the run manifest so outputs are
//! self-describing, and its canonical JSON hash stamps every output file.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::SystemError;
use crate::impulse::{ImpulseTimeDistribution, PmfKind};
use crate::maps::{BranchRule, Interval, IntervalMap};
use crate::simulate::{CountdownInit, ImpulseSystem, InitialPosition};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalSpec {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchSpec {
    pub lo: f64,
    pub hi: f64,
    pub rule: BranchRule,
}

/// A map is either one rule covering the whole domain or an explicit branch
/// list; an optional declared Lipschitz constant is validated on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<BranchRule>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub branches: Vec<BranchSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
}

impl MapSpec {
    pub fn single(rule: BranchRule) -> Self {
        Self { rule: Some(rule), branches: Vec::new(), lipschitz: None }
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn build(&self, domain: Interval) -> Result<IntervalMap, SystemError> {
        let branches: Vec<(Interval, BranchRule)> = if let Some(rule) = &self.rule {
            vec![(domain, rule.clone())]
        } else {
            self.branches
                .iter()
                .map(|b| Ok((Interval::new(b.lo, b.hi)?, b.rule.clone())))
                .collect::<Result<_, SystemError>>()?
        };
        let mut map = IntervalMap::from_branches(domain, branches)?;
        if let Some(l) = self.lipschitz {
            map = map.with_lipschitz(l)?;
        }
        Ok(map)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemSpec {
    pub domain: IntervalSpec,
    pub f: MapSpec,
    pub g: MapSpec,
    pub times: PmfKind,
}

impl SystemSpec {
    pub fn build(&self) -> Result<ImpulseSystem, SystemError> {
        let domain = Interval::domain(self.domain.lo, self.domain.hi)?;
        let f = self.f.build(domain)?;
        let g = self.g.build(domain)?;
        let times = match &self.times {
            PmfKind::Geometric { p } => ImpulseTimeDistribution::geometric(*p)?,
            PmfKind::Finite { probs } => ImpulseTimeDistribution::finite(probs.clone())?,
            PmfKind::Custom { probs, tail_mass } => {
                ImpulseTimeDistribution::custom(probs.clone(), *tail_mass)?
            }
        };
        ImpulseSystem::new(f, g, times)
    }
}

fn default_bins() -> usize {
    1024
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// State truncation; when absent, bounded supports use their bound plus
    /// one and unbounded supports use the stationary-tail rule, floored at 64.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { bins: default_bins(), states: None }
    }
}

impl GridConfig {
    pub fn resolve_states(&self, times: &ImpulseTimeDistribution) -> usize {
        self.states.unwrap_or_else(|| match times.support_bound() {
            Some(s) => (s + 1).max(64),
            None => times.default_truncation().max(64),
        })
    }
}

fn default_steps() -> usize {
    200
}
fn default_count() -> usize {
    10_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_initial")]
    pub initial: InitialPosition,
    #[serde(default)]
    pub countdown: CountdownInit,
}

fn default_initial() -> InitialPosition {
    InitialPosition::Uniform
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            steps: default_steps(),
            count: default_count(),
            seed: None,
            initial: default_initial(),
            countdown: CountdownInit::default(),
        }
    }
}

fn default_max_iter() -> usize {
    200
}
fn default_op_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorConfig {
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_op_tol")]
    pub tol: f64,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self { max_iter: default_max_iter(), tol: default_op_tol() }
    }
}

fn default_max_len() -> usize {
    32
}
fn default_paths() -> usize {
    1000
}
fn default_path_len() -> usize {
    200
}
fn default_sync_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityConfig {
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default = "default_path_len")]
    pub path_len: usize,
    #[serde(default = "default_sync_tol")]
    pub tol: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            max_len: default_max_len(),
            paths: default_paths(),
            path_len: default_path_len(),
            tol: default_sync_tol(),
        }
    }
}

fn default_out_dir() -> String {
    "out".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out_dir() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub operator: OperatorConfig,
    #[serde(default)]
    pub stability: StabilityConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hash of the canonical (fully resolved) JSON form; stamped on outputs.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut out = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    pub fn build_system(&self) -> Result<ImpulseSystem, SystemError> {
        self.system.build()
    }

    /// Compatibility notes surfaced in manifests (e.g. bounded-support
    /// impulse times restrict the countdown state space).
    pub fn notes(&self) -> Vec<String> {
        let mut notes = Vec::new();
        if let Ok(sys) = self.build_system() {
            if let Some(bound) = sys.times().support_bound() {
                notes.push(format!(
                    "bounded impulse-time support: countdown states restricted to 0..={bound}"
                ));
            }
        }
        notes
    }
}

/// Built-in configuration of the worked clipped-affine system
/// (`g(x) = x/2`, `f(x) = x+1` clipped at 2, Bernoulli(1/2) times on the interval from 0 to 2).
pub fn worked_example_config() -> ExperimentConfig {
    ExperimentConfig {
        system: SystemSpec {
            domain: IntervalSpec { lo: 0.0, hi: 2.0 },
            f: MapSpec {
                rule: None,
                branches: vec![
                    BranchSpec {
                        lo: 0.0,
                        hi: 1.0,
                        rule: BranchRule::Affine { slope: 1.0, intercept: 1.0 },
                    },
                    BranchSpec {
                        lo: 1.0,
                        hi: 2.0,
                        rule: BranchRule::Constant { value: 2.0 },
                    },
                ],
                lipschitz: Some(1.0),
            },
            g: MapSpec::single(BranchRule::Affine { slope: 0.5, intercept: 0.0 })
                .with_lipschitz(0.5),
            times: PmfKind::Finite { probs: vec![0.5, 0.5] },
        },
        grid: GridConfig { bins: 1024, states: Some(2) },
        simulation: SimulationConfig {
            steps: 200,
            count: 80_000,
            seed: Some(7),
            initial: InitialPosition::Uniform,
            countdown: CountdownInit::TimeDistribution,
        },
        operator: OperatorConfig::default(),
        stability: StabilityConfig::default(),
        output: OutputConfig::default(),
    }
}

/// Built-in configuration of the attraction-vs-root system
/// (`f(x) = (1−√2/2)x + √2`, `g(x) = √x`, geometric(1/2) times on the interval from 0 to 2).
pub fn splitting_example_config() -> ExperimentConfig {
    ExperimentConfig {
        system: SystemSpec {
            domain: IntervalSpec { lo: 0.0, hi: 2.0 },
            f: MapSpec::single(BranchRule::Affine {
                slope: 1.0 - std::f64::consts::SQRT_2 / 2.0,
                intercept: std::f64::consts::SQRT_2,
            }),
            g: MapSpec::single(BranchRule::Power { exponent: 0.5 }),
            times: PmfKind::Geometric { p: 0.5 },
        },
        grid: GridConfig::default(),
        simulation: SimulationConfig::default(),
        operator: OperatorConfig::default(),
        stability: StabilityConfig::default(),
        output: OutputConfig::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_hash_stability() {
        let cfg = worked_example_config();
        let json = cfg.to_json();
        let parsed = ExperimentConfig::from_json(&json).unwrap();
        assert_eq!(cfg.hash(), parsed.hash());
        assert!(parsed.build_system().is_ok());
    }

    #[test]
    fn defaults_fill_in() {
        let json = r#"{
            "system": {
                "domain": {"lo": 0.0, "hi": 1.0},
                "f": {"rule": {"kind": "logistic", "rate": 4.0}},
                "g": {"rule": {"kind": "affine", "slope": 0.125, "intercept": 0.0}},
                "times": {"kind": "geometric", "p": 0.5}
            }
        }"#;
        let cfg = ExperimentConfig::from_json(json).unwrap();
        assert_eq!(cfg.grid.bins, 1024);
        assert_eq!(cfg.simulation.steps, 200);
        let sys = cfg.build_system().unwrap();
        assert_eq!(cfg.grid.resolve_states(sys.times()), 64);
    }

    #[test]
    fn bounded_support_note() {
        let cfg = worked_example_config();
        let notes = cfg.notes();
        assert_eq!(notes.len(), 1);
        assert!(notes[0].contains("0..=1"));
    }

    #[test]
    fn bad_config_rejected() {
        let json = r#"{
            "system": {
                "domain": {"lo": 0.0, "hi": 1.0},
                "f": {"rule": {"kind": "affine", "slope": 3.0, "intercept": 0.0}},
                "g": {"rule": {"kind": "affine", "slope": 0.5, "intercept": 0.0}},
                "times": {"kind": "geometric", "p": 0.5}
            }
        }"#;
        let cfg = ExperimentConfig::from_json(json).unwrap();
        assert!(cfg.build_system().is_err());
    }
}
