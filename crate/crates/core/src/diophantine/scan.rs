use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write;

use super::LinearPhase;
use crate::algebraic::Real;
use crate::error::{Error, Result};
use crate::geometry::Direction;
use crate::linalg;

/// One lattice point found by a scan, with the quantities it was tested on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanHit {
    pub n: Vec<i64>,
    pub dist: f64,
    pub lhs: f64,
    pub threshold: f64,
}

const DIGITS: i32 = 10;

/// All `1 <= n <= n_max` with `‖nα₁‖ < n^{−η}`.
pub fn approximation_exponent_scan(alpha1: &Real, n_max: u64, eta: f64) -> Result<Vec<ScanHit>> {
    let phase = LinearPhase::new(std::slice::from_ref(alpha1));
    let ns: Vec<u64> = (1..=n_max).collect();
    let hits: Vec<Option<ScanHit>> = ns
        .par_chunks(4096)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&n| {
                    let dist = checked(&phase, &[n as i64])?;
                    let threshold = (n as f64).powf(-eta);
                    Ok((dist < threshold).then(|| ScanHit { n: vec![n as i64], dist, lhs: dist, threshold }))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(hits.into_iter().flatten().collect())
}

fn checked(phase: &LinearPhase, n: &[i64]) -> Result<f64> {
    Ok(phase.checked_dist(n, DIGITS)?.to_f64())
}

/// Checks that `forms` are `k` linearly independent forms in `k` variables.
pub fn validate_forms(forms: &[Vec<f64>], k: usize) -> Result<()> {
    if forms.len() != k || forms.iter().any(|f| f.len() != k) {
        return Err(Error::InvalidInput(format!("expected {k} linear forms in {k} variables")));
    }
    if linalg::rank(forms, 1e-10) < k {
        return Err(Error::InvalidInput("linear forms are dependent".into()));
    }
    Ok(())
}

fn form_product(forms: &[Vec<f64>], n: &[i64]) -> f64 {
    forms
        .iter()
        .map(|f| f.iter().zip(n).map(|(c, &k)| c * k as f64).sum::<f64>().abs() + 1.0)
        .product()
}

fn euclid(n: &[i64]) -> f64 {
    n.iter().map(|&k| (k as f64) * (k as f64)).sum::<f64>().sqrt()
}

/// Visits every `n ∈ [−m, m]^k` with first coordinate `first`, in
/// lexicographic order.
fn for_each_with_first(first: i64, k: usize, m: i64, mut visit: impl FnMut(&[i64]) -> Result<()>) -> Result<()> {
    let mut n = vec![-m; k];
    n[0] = first;
    if k == 1 {
        return visit(&n);
    }
    loop {
        visit(&n)?;
        let mut i = k - 1;
        loop {
            if n[i] < m {
                n[i] += 1;
                break;
            }
            n[i] = -m;
            if i == 1 {
                return Ok(());
            }
            i -= 1;
        }
    }
}

/// Evaluates `‖⟨α*, n⟩‖ · Π_k (|L_k(n)| + 1)` and `|n|` on the box
/// `0 < |n|_∞ <= n_max` and keeps the points selected by `keep`.
fn scan_box(
    alpha: &Direction,
    forms: &[Vec<f64>],
    n_max: u64,
    keep: impl Fn(&[i64], f64, f64) -> Option<ScanHit> + Sync,
) -> Result<Vec<ScanHit>> {
    alpha.require_normalized()?;
    let k = alpha.d() - 1;
    validate_forms(forms, k)?;
    let phase = LinearPhase::new(&alpha.alpha()[..k]);
    let m = n_max as i64;
    let firsts: Vec<i64> = (-m..=m).collect();
    let per_first: Vec<Vec<ScanHit>> = firsts
        .par_iter()
        .map(|&first| {
            let mut out = Vec::new();
            for_each_with_first(first, k, m, |n| {
                if n.iter().all(|&x| x == 0) {
                    return Ok(());
                }
                let dist = checked(&phase, n)?;
                let lhs = dist * form_product(forms, n);
                if let Some(hit) = keep(n, dist, lhs) {
                    out.push(hit);
                }
                Ok(())
            })?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_first.into_iter().flatten().collect())
}

/// All `n ∈ Z^{d−1}`, `0 < |n|_∞ <= n_max`, with
/// `‖α_1 n_1 + ⋯ + α_{d−1} n_{d−1}‖ · Π_k (|L_k(n)| + 1) < |n|^{−γ}`.
pub fn schmidt_inequality_scan(alpha: &Direction, forms: &[Vec<f64>], gamma: f64, n_max: u64) -> Result<Vec<ScanHit>> {
    scan_box(alpha, forms, n_max, |n, dist, lhs| {
        let threshold = euclid(n).powf(-gamma);
        (lhs < threshold).then(|| ScanHit { n: n.to_vec(), dist, lhs, threshold })
    })
}

/// Largest `C` with `‖⟨α*, n⟩‖ · Π_k (|L_k(n)| + 1) ≥ C |n|^{−γ}` on the scanned
/// box, together with the minimizing `n`.
pub fn fit_schmidt_constant(alpha: &Direction, forms: &[Vec<f64>], gamma: f64, n_max: u64) -> Result<(f64, Vec<i64>)> {
    let all = scan_box(alpha, forms, n_max, |n, dist, lhs| {
        Some(ScanHit { n: n.to_vec(), dist, lhs: lhs * euclid(n).powf(gamma), threshold: 0.0 })
    })?;
    all.into_iter()
        .min_by(|a, b| a.lhs.total_cmp(&b.lhs))
        .map(|h| (h.lhs, h.n))
        .ok_or_else(|| Error::InvalidInput("empty scan range".into()))
}

/// CSV with columns `n` (or `n1..nk`), `dist`, `lhs`, `threshold`.
pub fn hits_to_csv(hits: &[ScanHit], dim: usize) -> String {
    let mut s = String::new();
    if dim == 1 {
        s.push_str("n");
    } else {
        let cols: Vec<String> = (1..=dim).map(|i| format!("n{i}")).collect();
        s.push_str(&cols.join(","));
    }
    s.push_str(",dist,lhs,threshold\n");
    for h in hits {
        let ns: Vec<String> = h.n.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(s, "{},{:e},{:e},{:e}", ns.join(","), h.dist, h.lhs, h.threshold);
    }
    s
}
