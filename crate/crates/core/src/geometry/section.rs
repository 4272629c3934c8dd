use serde::Serialize;
use std::fmt::Write;

use super::{Direction, Polytope};
use crate::error::{Error, Result};
use crate::linalg::dot;

pub const TAU_TRANS: f64 = 1e-10;
pub const TAU_BREAKPOINT: f64 = 1e-12;
const PARALLEL_TOL: f64 = 1e-14;

/// Facets with `|⟨ν, α⟩| <= τ |ν| |α|`; empty means transversal.
pub fn validate_transversality(p: &Polytope, alpha: &Direction, tau: f64) -> Vec<usize> {
    let a = alpha.to_f64();
    let an = alpha.norm();
    p.facets()
        .iter()
        .enumerate()
        .filter(|(_, f)| dot(&f.normal, &a).abs() <= tau * an * crate::linalg::norm(&f.normal))
        .map(|(i, _)| i)
        .collect()
}

pub fn require_transversal(p: &Polytope, alpha: &Direction) -> Result<()> {
    let bad = validate_transversality(p, alpha, TAU_TRANS);
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Transversality { facets: bad })
    }
}

/// `π(x) = (x_1 − α_1 x_d, …, x_{d−1} − α_{d−1} x_d)`.
pub fn projection_pi(x: &[f64], alpha: &Direction) -> Result<Vec<f64>> {
    alpha.require_normalized()?;
    let d = alpha.d();
    if x.len() != d {
        return Err(Error::InvalidInput(format!("point has {} coordinates, expected {d}", x.len())));
    }
    let a = alpha.to_f64();
    Ok((0..d - 1).map(|k| x[k] - a[k] * x[d - 1]).collect())
}

/// Angle `φ_k ∈ (0, π)` rotating `α` onto each edge line, with `cot φ_k`,
/// for the counterclockwise edges of a polygon.
pub fn cot_angles(p: &Polytope, alpha: &Direction) -> Result<Vec<(f64, f64)>> {
    if p.d() != 2 || alpha.d() != 2 {
        return Err(Error::InvalidInput("cotangent angles need d = 2".into()));
    }
    let a = alpha.to_f64();
    let an = alpha.norm();
    p.polygon_edges()?
        .iter()
        .enumerate()
        .map(|(k, (s, e))| {
            let u = [e[0] - s[0], e[1] - s[1]];
            let cross = a[0] * u[1] - a[1] * u[0];
            let dotp = a[0] * u[0] + a[1] * u[1];
            let ul = (u[0] * u[0] + u[1] * u[1]).sqrt();
            if cross.abs() <= TAU_TRANS * an * ul {
                return Err(Error::ParallelEdge { edge: k });
            }
            let mut phi = cross.atan2(dotp);
            if phi < 0.0 {
                phi += std::f64::consts::PI;
            }
            Ok((phi, dotp / cross))
        })
        .collect()
}

/// One clipping constraint `t · slope <= rhs − ⟨ν*, x⟩` of a translate.
#[derive(Debug, Clone)]
struct Clip {
    normal_star: Vec<f64>,
    slope: f64,
    rhs: f64,
}

/// Evaluates the section function `f(x) = ∫_0^1 χ_P({(x,0) + tα}) dt` by
/// clipping the lifted segment against every relevant translate `P + ε`.
#[derive(Debug, Clone)]
pub struct SectionEvaluator {
    poly: Polytope,
    alpha: Direction,
    m: i64,
    translates: Vec<Vec<i64>>,
    clips: Vec<Vec<Clip>>,
}

impl SectionEvaluator {
    pub fn new(poly: &Polytope, alpha: &Direction) -> Result<Self> {
        Self::build(poly, alpha, true)
    }

    /// Keeps every `ε ∈ [−M, M]^d`; used to validate the pruning.
    pub fn unpruned(poly: &Polytope, alpha: &Direction) -> Result<Self> {
        Self::build(poly, alpha, false)
    }

    fn build(poly: &Polytope, alpha: &Direction, prune: bool) -> Result<Self> {
        alpha.require_normalized()?;
        let d = alpha.d();
        if poly.d() != d {
            return Err(Error::InvalidInput(format!("polytope has d = {}, direction d = {d}", poly.d())));
        }
        let a = alpha.to_f64();
        let m = a.iter().map(|x| x.abs().ceil() as i64).max().unwrap().max(1);
        let (lo, hi) = bounding_box(poly);
        let mut translates = Vec::new();
        let mut eps = vec![-m; d];
        loop {
            let keep = !prune
                || (0..d).all(|k| {
                    let (swept_lo, swept_hi) = if k == d - 1 { (0.0, 1.0) } else { (a[k].min(0.0), 1.0 + a[k].max(0.0)) };
                    let overlap = (hi[k] + eps[k] as f64).min(swept_hi) - (lo[k] + eps[k] as f64).max(swept_lo);
                    overlap > 1e-12
                });
            if keep {
                translates.push(eps.clone());
            }
            let mut i = d;
            loop {
                if i == 0 {
                    let clips = translates.iter().map(|e| Self::clips_for(poly, &a, e)).collect();
                    return Ok(SectionEvaluator { poly: poly.clone(), alpha: alpha.clone(), m, translates, clips });
                }
                i -= 1;
                if eps[i] < m {
                    eps[i] += 1;
                    break;
                }
                eps[i] = -m;
            }
        }
    }

    fn clips_for(poly: &Polytope, a: &[f64], eps: &[i64]) -> Vec<Clip> {
        let d = a.len();
        poly.facets()
            .iter()
            .map(|f| {
                let shift: f64 = f.normal.iter().zip(eps).map(|(n, &e)| n * e as f64).sum();
                Clip { normal_star: f.normal[..d - 1].to_vec(), slope: dot(&f.normal, a), rhs: f.offset + shift }
            })
            .collect()
    }

    pub fn polytope(&self) -> &Polytope {
        &self.poly
    }

    pub fn direction(&self) -> &Direction {
        &self.alpha
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn translates(&self) -> &[Vec<i64>] {
        &self.translates
    }

    /// `t`-interval of translate `i` met by the segment from `(x, 0)`.
    fn interval(&self, i: usize, x: &[f64], ta: f64, tb: f64) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (ta, tb);
        for c in &self.clips[i] {
            let r = c.rhs - dot(&c.normal_star, x);
            if c.slope.abs() < PARALLEL_TOL {
                if r < 0.0 {
                    return None;
                }
            } else if c.slope > 0.0 {
                hi = hi.min(r / c.slope);
            } else {
                lo = lo.max(r / c.slope);
            }
            if lo >= hi {
                return None;
            }
        }
        Some((lo, hi))
    }

    /// Total length of `{t ∈ [ta, tb] : (x, 0) + tα ∈ ∪_ε (P + ε)}`.
    pub fn segment_length(&self, x: &[f64], ta: f64, tb: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.translates.len() {
            if let Some((lo, hi)) = self.interval(i, x, ta, tb) {
                total += hi - lo;
            }
        }
        total
    }

    /// `f(x)`.
    pub fn f(&self, x: &[f64]) -> f64 {
        self.segment_length(x, 0.0, 1.0)
    }

    /// Slope `df/dx` from the constraints active at `x` (d = 2).
    fn active_slope(&self, x: f64) -> f64 {
        let mut slope = 0.0;
        for i in 0..self.translates.len() {
            let (mut lo, mut hi) = (0.0, 1.0);
            let (mut s_lo, mut s_hi) = (0.0, 0.0);
            let mut empty = false;
            for c in &self.clips[i] {
                let r = c.rhs - c.normal_star[0] * x;
                if c.slope.abs() < PARALLEL_TOL {
                    if r < 0.0 {
                        empty = true;
                    }
                    continue;
                }
                let t = r / c.slope;
                // dt/dx of the bound t(x) = (rhs − ν_1 x)/⟨ν, α⟩
                let dt = -c.normal_star[0] / c.slope;
                if c.slope > 0.0 {
                    if t < hi {
                        hi = t;
                        s_hi = dt;
                    }
                } else if t > lo {
                    lo = t;
                    s_lo = dt;
                }
            }
            if !empty && hi > lo {
                slope += s_hi - s_lo;
            }
        }
        slope
    }
}

fn bounding_box(p: &Polytope) -> (Vec<f64>, Vec<f64>) {
    let d = p.d();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for v in p.vertices() {
        for k in 0..d {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    (lo, hi)
}

/// Exact piecewise-linear section function of a polygon.
#[derive(Debug, Clone, Serialize)]
pub struct SectionFunction2D {
    pub breakpoints: Vec<f64>,
    /// `(a_j, b_j)` with `f(x) = a_j x + b_j` on `[c_{j−1}, c_j]`.
    pub pieces: Vec<(f64, f64)>,
    /// `(φ_k, cot φ_k)` per edge.
    pub edge_angles: Vec<(f64, f64)>,
    pub n_edges: usize,
    pub volume: f64,
}

/// Maximum deviation of each structural invariant.
#[derive(Debug, Clone, Serialize)]
pub struct SectionDefects {
    pub continuity: f64,
    pub periodicity: f64,
    pub mean: f64,
    pub range: f64,
}

impl SectionDefects {
    pub fn max(&self) -> f64 {
        self.continuity.max(self.periodicity).max(self.mean).max(self.range)
    }
}

/// Breakpoints are the projections `v_1 + ε_1 − α_1 v_2` of every vertex of
/// every relevant translate that land in `(0, 1)`. Between them the lifted
/// segment meets a fixed set of edges, and the slope is read off the active
/// constraints at the piece midpoint.
pub fn build_piecewise_linear_section(p: &Polytope, alpha: &Direction) -> Result<SectionFunction2D> {
    if p.d() != 2 {
        return Err(Error::InvalidInput("piecewise-linear section needs d = 2".into()));
    }
    require_transversal(p, alpha)?;
    let edge_angles = cot_angles(p, alpha)?;
    let ev = SectionEvaluator::new(p, alpha)?;
    let a1 = alpha.to_f64()[0];
    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    for eps in ev.translates() {
        for v in p.vertices() {
            let c = v[0] + eps[0] as f64 - a1 * v[1];
            if c > 0.0 && c < 1.0 {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut breakpoints: Vec<f64> = Vec::with_capacity(cuts.len());
    for c in cuts {
        match breakpoints.last() {
            Some(&last) if c - last < TAU_BREAKPOINT => {
                if c == 1.0 {
                    *breakpoints.last_mut().unwrap() = 1.0;
                }
            }
            _ => breakpoints.push(c),
        }
    }
    if *breakpoints.last().unwrap() != 1.0 {
        breakpoints.push(1.0);
    }
    let pieces: Vec<(f64, f64)> = breakpoints
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let a = ev.active_slope(mid);
            (a, ev.f(&[mid]) - a * mid)
        })
        .collect();
    let n_edges = p.vertices().len();
    if a1 > 0.0 && a1 < 1.0 && pieces.len() > n_edges + 1 {
        return Err(Error::Arrangement(format!("{} pieces exceed N + 1 = {}", pieces.len(), n_edges + 1)));
    }
    Ok(SectionFunction2D { breakpoints, pieces, edge_angles, n_edges, volume: p.volume() })
}

impl SectionFunction2D {
    /// `f(x)` for any real `x` (1-periodic).
    pub fn eval(&self, x: f64) -> f64 {
        let mut y = x - x.floor();
        if y >= 1.0 {
            y = 0.0;
        }
        let j = self.breakpoints.partition_point(|&c| c <= y).clamp(1, self.pieces.len());
        let (a, b) = self.pieces[j - 1];
        a * y + b
    }

    /// `∫_0^1 f`.
    pub fn integral(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .zip(&self.pieces)
            .map(|(w, &(a, b))| a * (w[1] * w[1] - w[0] * w[0]) / 2.0 + b * (w[1] - w[0]))
            .sum()
    }

    pub fn max_cot_spread(&self) -> f64 {
        let mut m = 0.0f64;
        for (i, a) in self.edge_angles.iter().enumerate() {
            for b in &self.edge_angles[i + 1..] {
                m = m.max((a.1 - b.1).abs());
            }
        }
        m
    }

    pub fn defects(&self) -> SectionDefects {
        let m = self.pieces.len();
        let mut continuity = 0.0f64;
        for j in 0..m - 1 {
            let c = self.breakpoints[j + 1];
            let (a0, b0) = self.pieces[j];
            let (a1, b1) = self.pieces[j + 1];
            continuity = continuity.max(((a0 * c + b0) - (a1 * c + b1)).abs());
        }
        let (_, b0) = self.pieces[0];
        let (an, bn) = self.pieces[m - 1];
        let periodicity = (b0 - (an + bn)).abs();
        let mean = (self.integral() - self.volume).abs();
        let mut range = 0.0f64;
        for (j, &(a, b)) in self.pieces.iter().enumerate() {
            for c in [self.breakpoints[j], self.breakpoints[j + 1]] {
                let v = a * c + b;
                range = range.max(-v).max(v - 1.0);
            }
        }
        SectionDefects { continuity, periodicity, mean, range: range.max(0.0) }
    }

    /// Rows `c_j,a_j,b_j`, where `c_j` is the right end of piece `j`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("c_j,a_j,b_j\n");
        for (j, &(a, b)) in self.pieces.iter().enumerate() {
            let _ = writeln!(s, "{:.17e},{:.17e},{:.17e}", self.breakpoints[j + 1], a, b);
        }
        s
    }
}
