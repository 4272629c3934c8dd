//! Continuous discrepancy `Δ_T(s, α, P)` of a linear flow, the discrete
//! Kronecker discrepancy `D_N`, box suprema and traces.
//!
//! The exact engine cuts the orbit at the transversal `x_d ∈ Z`: every full
//! unit window contributes `f(s* + kα*)` and the two partial windows are
//! clipped directly, so no `O(1)` slack is left. The quadrature engine is a
//! plain midpoint sum of `χ_P` and serves as the independent oracle.

mod boxsup;
mod discrete;
mod trace;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::geometry::{
    build_piecewise_linear_section, validate_transversality, Direction, Normalization, Polytope, SectionEvaluator,
    SectionFunction2D, TAU_TRANS,
};

pub use boxsup::{box_discrepancy_sup, box_sup_series, BoxSup};
pub use discrete::{discrete_discrepancy, discrete_discrepancy_series, DiscreteTarget};
pub use trace::{
    discrepancy_trace, quadrature_trace, schedule_times, DiscrepancyTrace, Schedule, TraceCursor, TraceMeta,
    TraceSample,
};

const CHUNK: i64 = 1 << 14;

/// Flow `s + tα` against `P`, kept both as given and in normalized form.
#[derive(Debug, Clone)]
pub struct FlowInstance {
    alpha: Direction,
    s: Vec<f64>,
    poly: Polytope,
    norm: Normalization,
    /// `s` and `P` in the normalized frame.
    s_n: Vec<f64>,
    poly_n: Polytope,
    ev: SectionEvaluator,
    section2d: Option<SectionFunction2D>,
    violations: Vec<usize>,
}

/// Midpoint-rule value with its error estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Quadrature {
    pub value: f64,
    pub err_bound: f64,
    pub steps: u64,
    /// Inside/outside changes between consecutive midpoints.
    pub transitions: u64,
}

/// Reduces `x` to the half-open representative in `[0, 1)`.
pub(crate) fn unit_rep(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl FlowInstance {
    pub fn new(alpha: Direction, s: Vec<f64>, poly: Polytope) -> Result<Self> {
        let d = alpha.d();
        if s.len() != d || poly.d() != d {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: α has {d}, s has {}, P has {}",
                s.len(),
                poly.d()
            )));
        }
        if s.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidInput(format!("start point {s:?} is outside [0,1]^{d}")));
        }
        let s: Vec<f64> = s.into_iter().map(unit_rep).collect();
        let norm = alpha.normalize()?;
        let (s_n, poly_n) = if norm.is_identity() {
            (s.clone(), poly.clone())
        } else {
            (norm.map_point(&s), poly.transformed(&norm.perm, norm.reflected)?)
        };
        let violations = validate_transversality(&poly_n, &norm.direction, TAU_TRANS);
        let ev = SectionEvaluator::new(&poly_n, &norm.direction)?;
        let section2d = if d == 2 && violations.is_empty() {
            Some(build_piecewise_linear_section(&poly_n, &norm.direction)?)
        } else {
            None
        };
        Ok(FlowInstance { alpha, s, poly, norm, s_n, poly_n, ev, section2d, violations })
    }

    pub fn alpha(&self) -> &Direction {
        &self.alpha
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn polytope(&self) -> &Polytope {
        &self.poly
    }

    pub fn lambda(&self) -> f64 {
        self.poly.volume()
    }

    pub fn normalization(&self) -> &Normalization {
        &self.norm
    }

    pub fn normalized_polytope(&self) -> &Polytope {
        &self.poly_n
    }

    pub fn evaluator(&self) -> &SectionEvaluator {
        &self.ev
    }

    pub fn section2d(&self) -> Option<&SectionFunction2D> {
        self.section2d.as_ref()
    }

    pub fn is_transversal(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn require_transversal(&self) -> Result<()> {
        if self.violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Transversality { facets: self.violations.clone() })
        }
    }

    /// Same flow and polytope from another start point.
    pub fn with_start(&self, s: Vec<f64>) -> Result<Self> {
        if s.len() != self.s.len() || s.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidInput(format!("start point {s:?} is outside [0,1]^{}", self.s.len())));
        }
        let s: Vec<f64> = s.into_iter().map(unit_rep).collect();
        let s_n = if self.norm.is_identity() { s.clone() } else { self.norm.map_point(&s) };
        Ok(FlowInstance { s, s_n, ..self.clone() })
    }

    /// `{s + Tα}` in original coordinates.
    pub fn orbit_point(&self, t: f64) -> Vec<f64> {
        let td = Dd::from_f64(t);
        self.s
            .iter()
            .zip(self.alpha.approx())
            .map(|(&s, a)| unit_rep((Dd::from_f64(s) + (*a * td).fract()).fract().to_f64()))
            .collect()
    }

    /// SHA-256 of the original polytope's vertex bit patterns.
    pub fn polytope_hash(&self) -> String {
        let mut h = Sha256::new();
        for v in self.poly.vertices() {
            for x in v {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Time scale `|c|` with `Δ_T = Δ'_{|c|T} / |c|`.
    pub(crate) fn scale(&self) -> f64 {
        self.norm.scale.to_f64()
    }

    /// Normalized-frame data: `(x*, s_d)` where `x* = s* − s_d α*` is where the
    /// lifted orbit crosses `x_d = 0`.
    fn crossing(&self) -> (Vec<Dd>, f64) {
        let d = self.s_n.len();
        let sd = self.s_n[d - 1];
        let star = self.norm.direction.star();
        let x = (0..d - 1).map(|k| Dd::from_f64(self.s_n[k]) - star[k].mul_f64(sd)).collect();
        (x, sd)
    }

    /// `{x* + kα*}` as `f64`.
    pub(crate) fn base_point(&self, x: &[Dd], k: i64) -> Vec<f64> {
        let star = self.norm.direction.star();
        x.iter().zip(star).map(|(&x0, &a)| unit_rep((x0 + a.mul_i64(k).fract()).fract().to_f64())).collect()
    }

    /// `f` at a point of `[0,1)^{d−1}`.
    pub(crate) fn section(&self, y: &[f64]) -> f64 {
        match &self.section2d {
            Some(s) => s.eval(y[0]),
            None => self.ev.f(y),
        }
    }

    /// Occupation time of window `k` restricted to `τ ∈ [k + a, k + b]`.
    fn window(&self, x: &[Dd], k: i64, a: f64, b: f64) -> f64 {
        let y = self.base_point(x, k);
        if a <= 0.0 && b >= 1.0 {
            self.section(&y)
        } else {
            self.ev.segment_length(&y, a.max(0.0), b.min(1.0))
        }
    }

    /// Ordered compensated sum of `f(x* + kα*)` over `k ∈ [k0, k1)`.
    fn full_windows(&self, x: &[Dd], k0: i64, k1: i64) -> Dd {
        if k1 <= k0 {
            return Dd::ZERO;
        }
        let starts: Vec<i64> = (k0..k1).step_by(CHUNK as usize).collect();
        let parts: Vec<Dd> = starts
            .par_iter()
            .map(|&c| {
                let mut acc = Dd::ZERO;
                for k in c..(c + CHUNK).min(k1) {
                    acc += self.section(&self.base_point(x, k));
                }
                acc
            })
            .collect();
        parts.into_iter().fold(Dd::ZERO, |a, b| a + b)
    }

    /// Occupation time `∫_0^{T'} χ_P` in the normalized frame, with `τ_end = s_d + T'`.
    fn occupation(&self, t_norm: f64) -> Dd {
        let (x, sd) = self.crossing();
        let tau_end = Dd::from_f64(sd) + Dd::from_f64(t_norm);
        let k_last = tau_end.floor().to_f64() as i64;
        let frac_end = (tau_end - Dd::from_i64(k_last)).to_f64();
        let mut total = Dd::ZERO;
        if k_last == 0 {
            return Dd::from_f64(self.window(&x, 0, sd, frac_end));
        }
        total += self.window(&x, 0, sd, 1.0);
        total += self.full_windows(&x, 1, k_last);
        if frac_end > 0.0 {
            total += self.window(&x, k_last, 0.0, frac_end);
        }
        total
    }

    /// `Δ_T(s, α, P)` by exact window integration; needs transversality.
    pub fn delta_exact(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidInput(format!("T = {t} must be finite and nonnegative")));
        }
        self.require_transversal()?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let c = self.scale();
        let t_norm = Dd::from_f64(t) * self.norm.scale.approx();
        let occ = self.occupation(t_norm.to_f64());
        Ok(((occ - t_norm * self.lambda()) / c).to_f64())
    }

    /// Midpoint sum of `χ_P({s + tα})` minus `Tλ(P)`, in original coordinates.
    pub fn delta_quadrature(&self, t: f64, step: f64) -> Result<Quadrature> {
        let lambda = self.lambda();
        let poly = &self.poly;
        quadrature_with(&self.s, self.alpha.approx(), t, step, lambda, |x| poly.contains(x, 0.0))
    }

    /// Quadrature against `1 − χ_P`, i.e. the closure of the complement.
    pub fn delta_quadrature_complement(&self, t: f64, step: f64) -> Result<Quadrature> {
        let lambda = 1.0 - self.lambda();
        let poly = &self.poly;
        quadrature_with(&self.s, self.alpha.approx(), t, step, lambda, |x| !poly.contains(x, 0.0))
    }
}

/// Midpoint rule for `∫_0^T χ({s + tα}) dt − T λ` with a crossing-count error estimate.
pub fn quadrature_with<F>(s: &[f64], alpha: &[Dd], t: f64, step: f64, lambda: f64, inside: F) -> Result<Quadrature>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    quadrature_range(s, alpha, 0.0, t, step, lambda, inside)
}

/// Midpoint rule for `∫_a^b χ({s + tα}) dt − (b − a) λ`.
pub fn quadrature_range<F>(
    s: &[f64],
    alpha: &[Dd],
    a: f64,
    b: f64,
    step: f64,
    lambda: f64,
    inside: F,
) -> Result<Quadrature>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!("quadrature step {step} must be positive")));
    }
    if !(a.is_finite() && b.is_finite() && 0.0 <= a && a <= b) {
        return Err(Error::InvalidInput(format!("time range [{a}, {b}] is invalid")));
    }
    let len = Dd::from_f64(b) - Dd::from_f64(a);
    let steps = (len.to_f64() / step).ceil() as u64;
    if steps == 0 {
        return Ok(Quadrature { value: 0.0, err_bound: 0.0, steps: 0, transitions: 0 });
    }
    let h = len / Dd::from_f64(steps as f64);
    let t0 = Dd::from_f64(a);
    let at = |i: u64| -> bool {
        let ti = t0 + h * Dd::from_f64(i as f64 + 0.5);
        let x: Vec<f64> =
            s.iter().zip(alpha).map(|(&sk, c)| unit_rep((Dd::from_f64(sk) + (*c * ti).fract()).to_f64())).collect();
        inside(&x)
    };
    let chunk = CHUNK as u64;
    let starts: Vec<u64> = (0..steps).step_by(chunk as usize).collect();
    // (hits, transitions, first, last)
    let parts: Vec<(u64, u64, bool, bool)> = starts
        .par_iter()
        .map(|&c| {
            let end = (c + chunk).min(steps);
            let first = at(c);
            let (mut hits, mut trans, mut prev) = (first as u64, 0u64, first);
            for i in c + 1..end {
                let cur = at(i);
                hits += cur as u64;
                trans += (cur != prev) as u64;
                prev = cur;
            }
            (hits, trans, first, prev)
        })
        .collect();
    let mut hits = 0u64;
    let mut transitions = 0u64;
    let mut last: Option<bool> = None;
    for (hc, tc, first, l) in parts {
        hits += hc;
        transitions += tc + last.map_or(0, |p| (p != first) as u64);
        last = Some(l);
    }
    let value = (h * Dd::from_f64(hits as f64) - len * lambda).to_f64();
    // each boundary crossing misattributes at most one step
    let err_bound = h.to_f64() * (2 * transitions + 2) as f64 + 1e-15 * b;
    Ok(Quadrature { value, err_bound, steps, transitions })
}

/// `Δ_T(s, α, P)` by exact window integration.
pub fn delta_t_exact(inst: &FlowInstance, t: f64) -> Result<f64> {
    inst.delta_exact(t)
}

/// `Δ_T(s, α, P)` by the midpoint rule with step at most `step`.
pub fn delta_t_quadrature(inst: &FlowInstance, t: f64, step: f64) -> Result<Quadrature> {
    inst.delta_quadrature(t, step)
}
