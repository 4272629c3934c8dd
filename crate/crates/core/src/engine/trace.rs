use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write;

use super::{quadrature_range, FlowInstance};
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::geometry::NormalizationMeta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Linear,
    /// `T = 0` followed by a geometric progression from `min(1, T_max)` to `T_max`.
    Geometric,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceSample {
    pub t: f64,
    pub delta: f64,
    pub err_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceMeta {
    pub alpha: Vec<String>,
    pub s: Vec<f64>,
    pub polytope_hash: String,
    pub lambda: f64,
    pub engine: String,
    pub precision_bits: u32,
    pub quadrature_step: Option<f64>,
    pub normalization: NormalizationMeta,
    pub schedule: Option<Schedule>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscrepancyTrace {
    pub samples: Vec<TraceSample>,
    pub meta: TraceMeta,
}

/// `n` sample times in `[0, T_max]`, starting at 0.
pub fn schedule_times(t_max: f64, n: usize, schedule: Schedule) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidInput("a trace needs at least 2 samples".into()));
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::InvalidInput(format!("T_max = {t_max} must be positive")));
    }
    Ok(match schedule {
        Schedule::Linear => (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect(),
        Schedule::Geometric => {
            let t1 = t_max.min(1.0);
            let mut out = vec![0.0];
            if n == 2 {
                out.push(t_max);
            } else {
                let ratio = (t_max / t1).ln() / (n - 2) as f64;
                out.extend((0..n - 1).map(|i| if i == n - 2 { t_max } else { t1 * (ratio * i as f64).exp() }));
            }
            out
        }
    })
}

fn meta(inst: &FlowInstance, engine: &str, step: Option<f64>, schedule: Option<Schedule>) -> TraceMeta {
    TraceMeta {
        alpha: inst.alpha().alpha().iter().map(|a| a.to_string()).collect(),
        s: inst.s().to_vec(),
        polytope_hash: inst.polytope_hash(),
        lambda: inst.lambda(),
        engine: engine.into(),
        precision_bits: 106,
        quadrature_step: step,
        normalization: inst.normalization().meta(),
        schedule,
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("sample times must be finite, nonnegative and ascending".into()));
    }
    Ok(())
}

/// Resumable exact trace: `Δ_T` for nondecreasing `T` with one running window sum.
pub struct TraceCursor<'a> {
    inst: &'a FlowInstance,
    x: Vec<Dd>,
    sd: f64,
    // occupation over τ ∈ [s_d, k_done] once k_done >= 1
    running: Dd,
    k_done: i64,
    last_t: f64,
}

impl<'a> TraceCursor<'a> {
    pub fn new(inst: &'a FlowInstance) -> Result<Self> {
        inst.require_transversal()?;
        let (x, sd) = inst.crossing();
        Ok(TraceCursor { inst, x, sd, running: Dd::ZERO, k_done: 0, last_t: 0.0 })
    }

    pub fn advance(&mut self, t: f64) -> Result<TraceSample> {
        if !(t.is_finite() && t >= self.last_t) {
            return Err(Error::InvalidInput(format!("sample time {t} precedes {}", self.last_t)));
        }
        self.last_t = t;
        if t == 0.0 {
            return Ok(TraceSample { t, delta: 0.0, err_bound: 0.0 });
        }
        let inst = self.inst;
        let c = inst.scale();
        let t_norm = Dd::from_f64(t) * inst.normalization().scale.approx();
        let tau_end = Dd::from_f64(self.sd) + t_norm;
        let k_last = tau_end.floor().to_f64() as i64;
        let frac_end = (tau_end - Dd::from_i64(k_last)).to_f64();
        let occ = if k_last == 0 {
            Dd::from_f64(inst.window(&self.x, 0, self.sd, frac_end))
        } else {
            if self.k_done == 0 {
                self.running = Dd::from_f64(inst.window(&self.x, 0, self.sd, 1.0));
                self.k_done = 1;
            }
            while self.k_done < k_last {
                self.running += inst.section(&inst.base_point(&self.x, self.k_done));
                self.k_done += 1;
            }
            let tail = if frac_end > 0.0 { inst.window(&self.x, k_last, 0.0, frac_end) } else { 0.0 };
            self.running + tail
        };
        let delta = ((occ - t_norm * inst.lambda()) / c).to_f64();
        let err_bound = 1e-15 * (k_last as f64 + 2.0) / c;
        Ok(TraceSample { t, delta, err_bound })
    }
}

impl FlowInstance {
    /// `Δ_T` at every time of `times` (ascending).
    pub fn trace_exact(&self, times: &[f64]) -> Result<Vec<TraceSample>> {
        check_times(times)?;
        let mut cur = TraceCursor::new(self)?;
        times.iter().map(|&t| cur.advance(t)).collect()
    }

    /// Quadrature values at `times`, summing independent intervals in order.
    pub fn trace_quadrature(&self, times: &[f64], step: f64) -> Result<Vec<TraceSample>> {
        check_times(times)?;
        let lambda = self.lambda();
        let poly = self.polytope();
        let alpha = self.alpha().approx();
        let mut edges = vec![0.0];
        edges.extend_from_slice(times);
        let parts = edges
            .par_windows(2)
            .map(|w| quadrature_range(self.s(), alpha, w[0], w[1], step, lambda, |x| poly.contains(x, 0.0)))
            .collect::<Result<Vec<_>>>()?;
        let (mut acc, mut err) = (Dd::ZERO, 0.0);
        Ok(times
            .iter()
            .zip(parts)
            .map(|(&t, q)| {
                acc += q.value;
                err += q.err_bound;
                TraceSample { t, delta: acc.to_f64(), err_bound: err }
            })
            .collect())
    }
}

/// Exact trace of `Δ_T` on the given schedule.
pub fn discrepancy_trace(inst: &FlowInstance, t_max: f64, n_samples: usize, schedule: Schedule) -> Result<DiscrepancyTrace> {
    let times = schedule_times(t_max, n_samples, schedule)?;
    Ok(DiscrepancyTrace { samples: inst.trace_exact(&times)?, meta: meta(inst, "exact", None, Some(schedule)) })
}

/// Quadrature trace of `Δ_T`; needs no transversality.
pub fn quadrature_trace(
    inst: &FlowInstance,
    t_max: f64,
    n_samples: usize,
    schedule: Schedule,
    step: f64,
) -> Result<DiscrepancyTrace> {
    let times = schedule_times(t_max, n_samples, schedule)?;
    Ok(DiscrepancyTrace {
        samples: inst.trace_quadrature(&times, step)?,
        meta: meta(inst, "quadrature", Some(step), Some(schedule)),
    })
}

impl DiscrepancyTrace {
    pub fn exact_at(inst: &FlowInstance, times: &[f64]) -> Result<Self> {
        Ok(DiscrepancyTrace { samples: inst.trace_exact(times)?, meta: meta(inst, "exact", None, None) })
    }

    pub fn quadrature_at(inst: &FlowInstance, times: &[f64], step: f64) -> Result<Self> {
        Ok(DiscrepancyTrace {
            samples: inst.trace_quadrature(times, step)?,
            meta: meta(inst, "quadrature", Some(step), None),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.delta.abs()))
    }

    /// `max |Δ_T|` over samples with `lo < T <= hi`.
    pub fn max_abs_in(&self, lo: f64, hi: f64) -> f64 {
        self.samples.iter().filter(|s| s.t > lo && s.t <= hi).fold(0.0, |m, s| m.max(s.delta.abs()))
    }

    /// Largest excess of `|Δ(T') − Δ(T)|` over `max(λ, 1 − λ)|T' − T| + err` on consecutive samples.
    pub fn lipschitz_excess(&self) -> f64 {
        let lam = self.meta.lambda;
        let l = lam.max(1.0 - lam);
        self.samples
            .windows(2)
            .map(|w| {
                let gap = (w[1].delta - w[0].delta).abs();
                gap - l * (w[1].t - w[0].t) - w[0].err_bound - w[1].err_bound
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rows `T,delta,engine,err_bound`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("T,delta,engine,err_bound\n");
        for x in &self.samples {
            let _ = writeln!(s, "{:.17e},{:.17e},{},{:.6e}", x.t, x.delta, self.meta.engine, x.err_bound);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Direction, Polytope};

    fn triangle_inst() -> FlowInstance {
        let p = Polytope::from_vertices(vec![vec![0.1, 0.1], vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        FlowInstance::new(Direction::parse(&["sqrt(2)", "1"]).unwrap(), vec![0.3, 0.4], p).unwrap()
    }

    #[test]
    fn schedules() {
        let lin = schedule_times(10.0, 11, Schedule::Linear).unwrap();
        assert_eq!(lin[0], 0.0);
        assert_eq!(lin[10], 10.0);
        assert!((lin[3] - 3.0).abs() < 1e-15);
        let geo = schedule_times(1e4, 6, Schedule::Geometric).unwrap();
        assert_eq!(geo.len(), 6);
        assert_eq!(geo[0], 0.0);
        assert_eq!(geo[1], 1.0);
        assert!((geo[2] - 10.0).abs() < 1e-9);
        assert_eq!(geo[5], 1e4);
        assert!(schedule_times(1.0, 1, Schedule::Linear).is_err());
    }

    #[test]
    fn trace_matches_pointwise_evaluation() {
        let inst = triangle_inst();
        let tr = discrepancy_trace(&inst, 300.0, 61, Schedule::Linear).unwrap();
        assert_eq!(tr.samples[0].delta, 0.0);
        for s in &tr.samples {
            assert!((s.delta - inst.delta_exact(s.t).unwrap()).abs() < 1e-11, "T = {}", s.t);
        }
        assert!(tr.lipschitz_excess() <= 0.0);
    }

    #[test]
    fn cube_trace_is_zero() {
        let inst =
            FlowInstance::new(Direction::parse(&["sqrt(3)", "sqrt(2)", "1"]).unwrap(), vec![0.5; 3], Polytope::unit_cube(3))
                .unwrap();
        let tr = discrepancy_trace(&inst, 50.0, 20, Schedule::Geometric).unwrap();
        assert!(tr.max_abs() < 1e-12);
    }

    #[test]
    fn quadrature_trace_tracks_exact() {
        let inst = triangle_inst();
        let times = [0.0, 2.5, 7.0, 19.0];
        let q = DiscrepancyTrace::quadrature_at(&inst, &times, 1e-5).unwrap();
        for s in &q.samples {
            assert!((s.delta - inst.delta_exact(s.t).unwrap()).abs() <= s.err_bound + 1e-12);
        }
        assert!(q.to_csv().lines().nth(1).unwrap().ends_with(&format!(",quadrature,{:.6e}", 0.0)));
    }

    #[test]
    fn csv_is_reproducible() {
        let inst = triangle_inst();
        let a = discrepancy_trace(&inst, 1000.0, 50, Schedule::Geometric).unwrap().to_csv();
        let b = discrepancy_trace(&inst, 1000.0, 50, Schedule::Geometric).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with("T,delta,engine,err_bound\n"));
    }
}
