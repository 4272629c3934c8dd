use rayon::prelude::*;
use serde::Serialize;

use super::{FlowInstance, TraceCursor};
use crate::error::{Error, Result};
use crate::geometry::{Direction, Polytope};

/// Largest `|Δ_T(s, α, R)|` over boxes `R` with corners on the `g`-grid.
/// A lower estimate of the supremum over all boxes.
#[derive(Debug, Clone, Serialize)]
pub struct BoxSup {
    pub t: f64,
    pub value: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub boxes: usize,
}

fn grid_cells(d: usize, g: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(g.pow(d as u32));
    let mut idx = vec![0usize; d];
    loop {
        out.push(idx.clone());
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < g {
                break;
            }
            idx[i] = 0;
        }
    }
}

/// Inclusive prefix sums over a `(g+1)^d` lattice, row-major with the last axis fastest.
fn prefix_sums(cell_values: &[f64], d: usize, g: usize) -> Vec<f64> {
    let n = g + 1;
    let mut p = vec![0.0; n.pow(d as u32)];
    for (ci, idx) in grid_cells(d, g).iter().enumerate() {
        let flat = idx.iter().fold(0, |acc, &i| acc * n + i + 1);
        p[flat] = cell_values[ci];
    }
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        for flat in 0..p.len() {
            if (flat / stride) % n > 0 {
                p[flat] += p[flat - stride];
            }
        }
    }
    p
}

fn sup_from_prefix(p: &[f64], d: usize, g: usize, t: f64) -> BoxSup {
    let n = g + 1;
    let pairs: Vec<(usize, usize)> = (0..g).flat_map(|a| (a + 1..=g).map(move |b| (a, b))).collect();
    let total = pairs.len().pow(d as u32);
    let mut best = (f64::NEG_INFINITY, 0usize);
    let mut choice = vec![0usize; d];
    for b in 0..total {
        let mut r = b;
        for k in (0..d).rev() {
            choice[k] = r % pairs.len();
            r /= pairs.len();
        }
        let mut v = 0.0;
        for corner in 0..(1usize << d) {
            let mut flat = 0;
            let mut lows = 0;
            for (k, &c) in choice.iter().enumerate() {
                let (a, bb) = pairs[c];
                let use_lo = corner >> (d - 1 - k) & 1 == 1;
                lows += use_lo as usize;
                flat = flat * n + if use_lo { a } else { bb };
            }
            if lows % 2 == 0 {
                v += p[flat];
            } else {
                v -= p[flat];
            }
        }
        if v.abs() > best.0 {
            best = (v.abs(), b);
        }
    }
    let mut r = best.1;
    for k in (0..d).rev() {
        choice[k] = r % pairs.len();
        r /= pairs.len();
    }
    let gf = g as f64;
    BoxSup {
        t,
        value: best.0,
        lo: choice.iter().map(|&c| pairs[c].0 as f64 / gf).collect(),
        hi: choice.iter().map(|&c| pairs[c].1 as f64 / gf).collect(),
        boxes: total,
    }
}

const TIME_BLOCK: usize = 2048;

/// Grid-box suprema at each time of `times` (ascending). `Δ_T` of a box is the
/// sum of `Δ_T` over its grid cells, so each cell is traced once; times are
/// streamed in blocks to keep memory at `O(g^d)`.
pub fn box_sup_series(alpha: &Direction, s: &[f64], times: &[f64], g: usize) -> Result<Vec<BoxSup>> {
    if g == 0 {
        return Err(Error::InvalidInput("grid size g must be at least 1".into()));
    }
    if let Some(k) = alpha.approx().iter().position(|a| a.hi == 0.0) {
        return Err(Error::InvalidInput(format!("α has a zero coordinate at axis {k}; boxes are not transversal")));
    }
    let d = alpha.d();
    let gf = g as f64;
    let insts = grid_cells(d, g)
        .iter()
        .map(|idx| {
            let lo: Vec<f64> = idx.iter().map(|&i| i as f64 / gf).collect();
            let hi: Vec<f64> = idx.iter().map(|&i| (i + 1) as f64 / gf).collect();
            FlowInstance::new(alpha.clone(), s.to_vec(), Polytope::axis_box(&lo, &hi)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cursors = insts.iter().map(TraceCursor::new).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(times.len());
    for block in times.chunks(TIME_BLOCK) {
        let traces = cursors
            .par_iter_mut()
            .map(|cur| block.iter().map(|&t| Ok(cur.advance(t)?.delta)).collect::<Result<Vec<f64>>>())
            .collect::<Result<Vec<_>>>()?;
        out.par_extend(block.par_iter().enumerate().map(|(ti, &t)| {
            let values: Vec<f64> = traces.iter().map(|tr| tr[ti]).collect();
            sup_from_prefix(&prefix_sums(&values, d, g), d, g, t)
        }));
    }
    Ok(out)
}

/// `max_R |Δ_T(s, α, R)|` over grid boxes, with the maximizing box.
pub fn box_discrepancy_sup(alpha: &Direction, s: &[f64], t: f64, g: usize) -> Result<BoxSup> {
    Ok(box_sup_series(alpha, s, &[t], g)?.remove(0))
}
