use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::run::{decade_maxima, discrete_instance, instance, DecadeMax};
use torusflow_core::engine::{discrete_discrepancy_series, DiscreteTarget};

/// Decades whose lower end is at least this count toward the plateau ratio.
pub const PLATEAU_FROM: f64 = 1e3;
/// Decades whose lower end is at least this count toward discrete growth.
pub const GROWTH_FROM: f64 = 1e2;

#[derive(Debug, Clone, Serialize)]
pub struct DecadeRow {
    pub lo: f64,
    pub hi: f64,
    pub continuous_max: Option<f64>,
    pub discrete_max: Option<f64>,
}

/// Per-decade `sup |Δ_T|` of a planar flow next to `max |D_N|` of a
/// one-dimensional rotation.
#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub continuous: Vec<DecadeMax>,
    pub discrete: Vec<DecadeMax>,
    pub rows: Vec<DecadeRow>,
    /// Last over first continuous decade maximum, decades from [`PLATEAU_FROM`] on.
    pub continuous_plateau_ratio: Option<f64>,
    /// Whether discrete decade maxima strictly increase from [`GROWTH_FROM`] on.
    pub discrete_strictly_increasing: Option<bool>,
}

impl CompareReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("decade_lo,decade_hi,continuous_max,discrete_max\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.lo, r.hi, opt(r.continuous_max), opt(r.discrete_max));
        }
        s
    }

    pub fn summary(&self) -> Value {
        json!({
            "decades": self.rows.len(),
            "continuous_plateau_ratio": self.continuous_plateau_ratio,
            "discrete_strictly_increasing": self.discrete_strictly_increasing,
        })
    }
}

/// Exact-trace sample times: `samples_per_decade` evenly spaced points in
/// `(0, 1]` and in each `(10^k, 10^{k+1}]` up to `t_max`.
fn decade_times(t_max: f64, per: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut lo = 0.0;
    let mut hi = 1.0f64.min(t_max);
    while lo < t_max {
        out.extend((1..=per).map(|i| lo + (hi - lo) * i as f64 / per as f64));
        lo = hi;
        hi = if hi < 10.0 { 10.0 } else { hi * 10.0 }.min(t_max);
    }
    out
}

pub fn compare_discrete_continuous(cfg: &ExperimentConfig) -> Result<CompareReport, CliError> {
    if cfg.dim() != 2 {
        return Err(CliError::Validation(format!("compare needs a planar flow, got d = {}", cfg.dim())));
    }
    let per = cfg.compare.clone().unwrap_or_default().samples_per_decade;
    let inst = instance(cfg)?;
    inst.require_transversal()?;
    let di = discrete_instance(cfg)?;
    // an empty schedule switches both sides off
    let empty = cfg.times()?.is_empty() || per == 0;
    let continuous = if empty {
        Vec::new()
    } else {
        let times = decade_times(cfg.schedule.t_max, per);
        let samples = inst.trace_exact(&times)?;
        decade_maxima(samples.iter().map(|s| (s.t, s.delta)))
    };
    let discrete = if empty {
        Vec::new()
    } else {
        let target = DiscreteTarget::Box { lo: di.lo.clone(), hi: di.hi.clone() };
        let series = discrete_discrepancy_series(&di.alpha, &di.start, &target, di.n_max)?;
        decade_maxima(series.iter().enumerate().map(|(i, &v)| ((i + 1) as f64, v)))
    };
    let mut rows: Vec<DecadeRow> = Vec::new();
    for d in continuous.iter().chain(&discrete) {
        if !rows.iter().any(|r| r.lo == d.lo) {
            rows.push(DecadeRow { lo: d.lo, hi: d.hi, continuous_max: None, discrete_max: None });
        }
    }
    rows.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    for r in &mut rows {
        r.continuous_max = continuous.iter().find(|d| d.lo == r.lo).map(|d| d.max_abs);
        r.discrete_max = discrete.iter().find(|d| d.lo == r.lo).map(|d| d.max_abs);
    }
    let late: Vec<f64> = continuous.iter().filter(|d| d.lo >= PLATEAU_FROM).map(|d| d.max_abs).collect();
    let continuous_plateau_ratio = (late.len() >= 2).then(|| late[late.len() - 1] / late[0]);
    let grow: Vec<f64> = discrete.iter().filter(|d| d.lo >= GROWTH_FROM).map(|d| d.max_abs).collect();
    let discrete_strictly_increasing = (grow.len() >= 2).then(|| grow.windows(2).all(|w| w[1] > w[0]));
    Ok(CompareReport { continuous, discrete, rows, continuous_plateau_ratio, discrete_strictly_increasing })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decade_times_cover_each_decade() {
        let t = decade_times(1000.0, 4);
        assert_eq!(t.len(), 16);
        assert_eq!(&t[..4], &[0.25, 0.5, 0.75, 1.0]);
        assert_eq!(t[7], 10.0);
        assert_eq!(*t.last().unwrap(), 1000.0);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }
}
