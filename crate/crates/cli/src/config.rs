//! Experiment configuration, read from TOML.
//!
//! ```toml
//! direction = ["sqrt(2)-1", "1"]
//! start = [0.0, 0.0]
//! precision_bits = 106
//!
//! [polytope]
//! kind = "vertices"
//! vertices = [[0.1, 0.1], [0.9, 0.1], [0.1, 0.9]]
//!
//! [engine]
//! kind = "exact"
//!
//! [schedule]
//! kind = "integer"
//! t_max = 10000.0
//! samples = 1000
//! ```
//!
//! Every field of the optional tables has a default, so a table may be given
//! empty to switch a subcommand on with stock settings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::CliError;
use torusflow_core::engine::{schedule_times, Schedule};
use torusflow_core::geometry::{Direction, Facet, Polytope};

pub const DEFAULT_PRECISION_BITS: u32 = 106;
pub const MIN_PRECISION_BITS: u32 = 53;
pub const MAX_PRECISION_BITS: u32 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Algebraic literals such as `sqrt(2)-1`, `(1+sqrt(5))/2` or `3/7`.
    pub direction: Vec<String>,
    /// Start point `s`; zeros when empty.
    #[serde(default)]
    pub start: Vec<f64>,
    #[serde(default = "default_bits")]
    pub precision_bits: u32,
    /// Seed for randomly generated polytopes and sampled schedules; at most `i64::MAX`.
    #[serde(default)]
    pub seed: u64,
    pub polytope: PolytopeSpec,
    #[serde(default)]
    pub engine: EngineSpec,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier: Option<FourierSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boxsup: Option<BoxSupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discrete: Option<DiscreteSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dioph: Option<DiophSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSpec>,
}

fn default_bits() -> u32 {
    DEFAULT_PRECISION_BITS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PolytopeSpec {
    /// `[0, 1]^d`.
    Cube,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Convex hull of the points.
    Vertices { vertices: Vec<Vec<f64>> },
    /// `{x : ⟨normal_i, x⟩ <= offset_i}`.
    Halfspaces { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
    /// Convex hull of `points` uniform points in `[0.05, 0.95]^d`, drawn from `seed`.
    Random { points: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Exact,
    Quadrature,
}

impl EngineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::Exact => "exact",
            EngineKind::Quadrature => "quadrature",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSpec {
    pub kind: EngineKind,
    #[serde(default = "default_step")]
    pub quadrature_step: f64,
}

fn default_step() -> f64 {
    1e-4
}

impl Default for EngineSpec {
    fn default() -> Self {
        EngineSpec { kind: EngineKind::Exact, quadrature_step: default_step() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Linear,
    Geometric,
    /// Integer times `round(t_max · i / (samples − 1))`, deduplicated.
    Integer,
    /// `samples` distinct integers in `[1, t_max]` drawn from `seed`, plus 0.
    Sampled,
    /// The `times` list as given.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec { kind: ScheduleKind::Linear, t_max: default_t_max(), samples: default_samples(), times: Vec::new() }
    }
}

fn default_t_max() -> f64 {
    100.0
}

fn default_samples() -> usize {
    101
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSpec {
    /// Truncation point of `Σ 1/(n²‖nα₁‖)`; the rest is a certified tail.
    #[serde(default = "default_bound_n")]
    pub n_max: u64,
}

fn default_bound_n() -> u64 {
    100_000
}

impl Default for BoundSpec {
    fn default() -> Self {
        BoundSpec { n_max: default_bound_n() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierSpec {
    /// `n_max` for `d = 2`, the `ℓ∞` radius for `d = 3`.
    #[serde(default = "default_fourier_n")]
    pub n_max: i64,
    /// Radius of the majorant sum; defaults to `n_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub majorant_n: Option<i64>,
    /// `ℓ∞` shells `(s_0, s_1], (s_1, s_2], …` for the envelope fit.
    #[serde(default = "default_shells")]
    pub shells: Vec<i64>,
}

fn default_fourier_n() -> i64 {
    10_000
}

fn default_shells() -> Vec<i64> {
    vec![0, 25, 50]
}

impl Default for FourierSpec {
    fn default() -> Self {
        FourierSpec { n_max: default_fourier_n(), majorant_n: None, shells: default_shells() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSupSpec {
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    16
}

impl Default for BoxSupSpec {
    fn default() -> Self {
        BoxSupSpec { grid: default_grid() }
    }
}

/// A Kronecker sequence `{s + kα}` counted in a half-open box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteSpec {
    /// Defaults to the first `d − 1` normalized flow coordinates.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub start: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lo: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hi: Vec<f64>,
    #[serde(default = "default_discrete_n")]
    pub n_max: u64,
}

fn default_discrete_n() -> u64 {
    1_000_000
}

impl Default for DiscreteSpec {
    fn default() -> Self {
        DiscreteSpec { alpha: Vec::new(), start: Vec::new(), lo: Vec::new(), hi: Vec::new(), n_max: default_discrete_n() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiophSpec {
    #[serde(default = "default_dioph_n")]
    pub n_max: u64,
    /// Exponent of the `‖nα‖ < n^{−η}` scan.
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_depth")]
    pub depth: usize,
}

fn default_dioph_n() -> u64 {
    100_000
}

fn default_eta() -> f64 {
    1.0
}

fn default_depth() -> usize {
    40
}

impl Default for DiophSpec {
    fn default() -> Self {
        DiophSpec { n_max: default_dioph_n(), eta: default_eta(), depth: default_depth() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSpec {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Scan radius used to fit `C`.
    #[serde(default = "default_scan_n")]
    pub scan_n_max: u64,
    /// Number of occupied blocks to audit, spread evenly over `ℓ <= max_ell`.
    #[serde(default = "default_blocks")]
    pub blocks: usize,
    #[serde(default = "default_max_ell")]
    pub max_ell: u32,
    /// Linear forms `L_k`; the coordinate forms when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forms: Vec<Vec<f64>>,
}

fn default_gamma() -> f64 {
    0.5
}

fn default_scan_n() -> u64 {
    10_000
}

fn default_blocks() -> usize {
    20
}

fn default_max_ell() -> u32 {
    12
}

impl Default for AuditSpec {
    fn default() -> Self {
        AuditSpec {
            gamma: default_gamma(),
            scan_n_max: default_scan_n(),
            blocks: default_blocks(),
            max_ell: default_max_ell(),
            forms: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    /// Exact-trace samples in each decade `(10^k, 10^{k+1}]`.
    #[serde(default = "default_per_decade")]
    pub samples_per_decade: usize,
}

fn default_per_decade() -> usize {
    2000
}

impl Default for CompareSpec {
    fn default() -> Self {
        CompareSpec { samples_per_decade: default_per_decade() }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical TOML text. Fails only for integers beyond TOML's signed range.
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Validation(format!("config cannot be serialized: {e}")))
    }

    pub fn direction(&self) -> Result<Direction, CliError> {
        Ok(Direction::parse(&self.direction)?)
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    pub fn start_point(&self) -> Result<Vec<f64>, CliError> {
        if self.start.is_empty() {
            return Ok(vec![0.0; self.dim()]);
        }
        if self.start.len() != self.dim() {
            return Err(CliError::Validation(format!(
                "start has {} coordinates, direction has {}",
                self.start.len(),
                self.dim()
            )));
        }
        Ok(self.start.clone())
    }

    pub fn check_precision(&self) -> Result<(), CliError> {
        if !(MIN_PRECISION_BITS..=MAX_PRECISION_BITS).contains(&self.precision_bits) {
            return Err(CliError::Validation(format!(
                "precision_bits = {} outside [{MIN_PRECISION_BITS}, {MAX_PRECISION_BITS}]",
                self.precision_bits
            )));
        }
        Ok(())
    }

    pub fn build_polytope(&self) -> Result<Polytope, CliError> {
        let d = self.dim();
        let p = match &self.polytope {
            PolytopeSpec::Cube => Polytope::unit_cube(d),
            PolytopeSpec::Box { lo, hi } => Polytope::axis_box(lo, hi)?,
            PolytopeSpec::Vertices { vertices } => Polytope::from_vertices(vertices.clone())?,
            PolytopeSpec::Halfspaces { normals, offsets } => {
                if normals.len() != offsets.len() {
                    return Err(CliError::Validation("one offset per normal is required".into()));
                }
                let facets = normals
                    .iter()
                    .zip(offsets)
                    .map(|(n, &c)| Facet::new(n.clone(), c))
                    .collect::<Result<Vec<_>, _>>()?;
                Polytope::from_halfspaces(facets)?
            }
            PolytopeSpec::Random { points } => {
                if *points <= d {
                    return Err(CliError::Validation(format!("a random polytope in R^{d} needs more than {d} points")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let pts = (0..*points).map(|_| (0..d).map(|_| rng.gen_range(0.05..0.95)).collect()).collect();
                Polytope::from_vertices(pts)?
            }
        };
        if p.d() != d {
            return Err(CliError::Validation(format!("polytope lives in R^{}, direction in R^{d}", p.d())));
        }
        Ok(p)
    }

    /// Sample times of the schedule; empty when `samples == 0`.
    pub fn times(&self) -> Result<Vec<f64>, CliError> {
        let s = &self.schedule;
        if s.kind == ScheduleKind::Explicit {
            let mut t = s.times.clone();
            if t.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(CliError::Validation("explicit times must be finite and nonnegative".into()));
            }
            t.sort_by(f64::total_cmp);
            return Ok(t);
        }
        if s.samples == 0 {
            return Ok(Vec::new());
        }
        if !(s.t_max.is_finite() && s.t_max > 0.0) {
            return Err(CliError::Validation(format!("schedule t_max = {} must be positive", s.t_max)));
        }
        match s.kind {
            ScheduleKind::Linear => Ok(schedule_times(s.t_max, s.samples.max(2), Schedule::Linear)?),
            ScheduleKind::Geometric => Ok(schedule_times(s.t_max, s.samples.max(2), Schedule::Geometric)?),
            ScheduleKind::Integer => {
                let top = s.t_max.floor();
                let mut t: Vec<f64> = if s.samples == 1 {
                    vec![top]
                } else {
                    (0..s.samples).map(|i| (top * i as f64 / (s.samples - 1) as f64).round()).collect()
                };
                t.dedup();
                Ok(t)
            }
            ScheduleKind::Sampled => {
                let top = s.t_max.floor() as u64;
                if top == 0 {
                    return Err(CliError::Validation("sampled schedule needs t_max >= 1".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let n = (s.samples as u64).min(top) as usize;
                let mut picks = rand::seq::index::sample(&mut rng, top as usize, n).into_vec();
                picks.sort_unstable();
                let mut t = vec![0.0];
                t.extend(picks.into_iter().map(|k| (k + 1) as f64));
                Ok(t)
            }
            ScheduleKind::Explicit => unreachable!(),
        }
    }

    pub fn schedule_label(&self) -> Option<Schedule> {
        match self.schedule.kind {
            ScheduleKind::Linear => Some(Schedule::Linear),
            ScheduleKind::Geometric => Some(Schedule::Geometric),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = r#"
direction = ["sqrt(2)-1", "1"]

[polytope]
kind = "vertices"
vertices = [[0.1, 0.1], [0.9, 0.1], [0.1, 0.9]]

[schedule]
kind = "integer"
t_max = 10.0
samples = 11

[bound]
"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::parse(TRIANGLE).unwrap();
        assert_eq!(c.precision_bits, DEFAULT_PRECISION_BITS);
        assert_eq!(c.engine.kind, EngineKind::Exact);
        assert_eq!(c.bound, Some(BoundSpec { n_max: 100_000 }));
        assert_eq!(c.start_point().unwrap(), vec![0.0, 0.0]);
        assert_eq!(c.times().unwrap(), (0..=10).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::parse(TRIANGLE).unwrap();
        let again = ExperimentConfig::parse(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.to_toml().unwrap(), c.to_toml().unwrap());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = TRIANGLE.replace("t_max", "tmax");
        assert!(matches!(ExperimentConfig::parse(&bad), Err(CliError::Validation(_))));
    }

    #[test]
    fn sampled_schedule_is_seeded() {
        let mut c = ExperimentConfig::parse(TRIANGLE).unwrap();
        c.schedule = ScheduleSpec { kind: ScheduleKind::Sampled, t_max: 1e4, samples: 1000, times: vec![] };
        let a = c.times().unwrap();
        assert_eq!(a.len(), 1001);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(a.iter().all(|t| t.fract() == 0.0 && *t <= 1e4));
        assert_eq!(a, c.times().unwrap());
        c.seed = 7;
        assert_ne!(a, c.times().unwrap());
    }

    #[test]
    fn random_polytope_is_reproducible() {
        let mut c = ExperimentConfig::parse(TRIANGLE).unwrap();
        c.polytope = PolytopeSpec::Random { points: 8 };
        let a = c.build_polytope().unwrap();
        let b = c.build_polytope().unwrap();
        assert_eq!(a.vertices(), b.vertices());
        assert!(a.volume() > 0.0);
    }

    #[test]
    fn seed_beyond_toml_range_is_rejected() {
        let mut c = ExperimentConfig::parse(TRIANGLE).unwrap();
        c.seed = u64::MAX;
        assert!(matches!(c.to_toml(), Err(CliError::Validation(_))));
    }

    #[test]
    fn empty_schedule() {
        let mut c = ExperimentConfig::parse(TRIANGLE).unwrap();
        c.schedule.samples = 0;
        assert!(c.times().unwrap().is_empty());
    }

    #[test]
    fn partial_schedule_table_keeps_defaults() {
        let src = TRIANGLE.replace("t_max", "# t_max").replace("samples", "# samples");
        let c = ExperimentConfig::parse(&src).unwrap();
        assert_eq!((c.schedule.t_max, c.schedule.samples), (100.0, 101));
    }
}
