use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use super::{fourier_coeff_exact_2d, fourier_coeff_exact_3d, flag_envelope, FlagFormSet};
use crate::algebraic::Real;
use crate::diophantine::{series_tail_bound, ContinuedFraction, LinearPhase, SeriesSum};
use crate::error::{Error, Result};
use crate::geometry::{cot_angles, require_transversal, Direction, Polytope, SectionFunction2D, SectionFunction3D};

/// Itemized planar bound
/// `|Δ_T| <= 2 + (N+1)/(π²|α|) · max|cot φ_k − cot φ_l| · Σ_{n>=1} 1/(n²‖nα₁‖)`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCertificate {
    pub alpha: Vec<String>,
    pub vertices: Vec<Vec<f64>>,
    pub bound_value: f64,
    /// The bound without the additive constant, valid for `s_2 = 0` and integer `T`.
    pub bound_integer_times: f64,
    pub additive_constant: f64,
    pub n_edges: usize,
    pub alpha_norm: f64,
    pub cot_spread: f64,
    pub cot_factor: f64,
    pub series_partial: f64,
    pub series_tail: f64,
    pub n_max: u64,
    pub valid: bool,
}

fn cot_spread(cots: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for (i, a) in cots.iter().enumerate() {
        for b in &cots[i + 1..] {
            m = m.max((a - b).abs());
        }
    }
    m
}

/// Assembles the certificate from a certified series sum.
pub fn planar_bound_certificate(p: &Polytope, alpha: &Direction, series: &SeriesSum) -> Result<BoundCertificate> {
    if p.d() != 2 {
        return Err(Error::InvalidInput("the planar bound needs a polygon".into()));
    }
    alpha.require_normalized()?;
    let a1 = &alpha.alpha()[0];
    let a1f = a1.to_f64();
    if a1.as_rational().is_some() || !(a1f > 0.0 && a1f < 1.0) {
        return Err(Error::InvalidInput(format!("α₁ = {a1} must be irrational in (0, 1)")));
    }
    require_transversal(p, alpha)?;
    let cots: Vec<f64> = cot_angles(p, alpha)?.into_iter().map(|c| c.1).collect();
    let n_edges = cots.len();
    let spread = cot_spread(&cots);
    let alpha_norm = alpha.norm();
    let cot_factor = (n_edges as f64 + 1.0) / (PI * PI * alpha_norm) * spread;
    let non_constant = cot_factor * (series.partial_sum + series.tail_bound);
    Ok(BoundCertificate {
        alpha: alpha.alpha().iter().map(|a| a.to_string()).collect(),
        vertices: p.vertices().to_vec(),
        bound_value: 2.0 + non_constant,
        bound_integer_times: non_constant,
        additive_constant: 2.0,
        n_edges,
        alpha_norm,
        cot_spread: spread,
        cot_factor,
        series_partial: series.partial_sum,
        series_tail: series.tail_bound,
        n_max: series.n_max,
        valid: series.tail_bound.is_finite(),
    })
}

/// `(N+1) max|cot φ_k − cot φ_l| / (π² |α| n²)`.
pub fn coefficient_bound_2d(n_edges: usize, cot_spread: f64, alpha_norm: f64, n: i64) -> f64 {
    let nf = n as f64;
    (n_edges as f64 + 1.0) * cot_spread / (PI * PI * alpha_norm * nf * nf)
}

/// `Σ_{0<|n|<=n_max} |f̂(n)| / (2‖⟨n, α*⟩‖)` plus a tail estimate.
#[derive(Debug, Clone, Serialize)]
pub struct Majorant {
    pub n_max: u64,
    pub partial: f64,
    pub tail: f64,
    pub total: f64,
    /// Whether the tail is a proof or an extrapolation.
    pub rigorous_tail: bool,
}

/// Planar majorant with a rigorous tail from `|f̂(n)| <= Σ_j |a_j| / (2π²n²)`.
pub fn fourier_majorant_2d(
    sec: &SectionFunction2D,
    alpha1: &Real,
    n_max: u64,
    cf: &ContinuedFraction,
) -> Result<Majorant> {
    let phase = LinearPhase::new(std::slice::from_ref(alpha1));
    let chunk = 1u64 << 12;
    let starts: Vec<u64> = (1..=n_max).step_by(chunk as usize).collect();
    let parts = starts
        .par_iter()
        .map(|&c| {
            let mut acc = 0.0;
            for n in c..(c + chunk).min(n_max + 1) {
                let dist = phase.checked_dist(&[n as i64], 6)?.to_f64();
                // n and −n together
                acc += fourier_coeff_exact_2d(sec, n as i64).abs() / dist;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<f64>>>()?;
    let partial: f64 = parts.iter().sum();
    let k: f64 = sec.pieces.iter().map(|p| p.0.abs()).sum::<f64>() / (2.0 * PI * PI);
    // both signs of n, each weighted by 1/2
    let tail = k * series_tail_bound(cf, n_max)? * (1.0 + 1e-9);
    Ok(Majorant { n_max, partial, tail, total: partial + tail, rigorous_tail: true })
}

/// Majorant over `0 < |n|_∞ <= r` with an envelope-based tail: the
/// `(r, 2r]` shell with `|f̂(n)|` replaced by `C_fit · envelope(n)`, doubled.
pub fn fourier_majorant_3d(
    sec: &SectionFunction3D,
    alpha_star: &[Real],
    r: i64,
    forms: &FlagFormSet,
    c_fit: f64,
) -> Result<Majorant> {
    if alpha_star.len() != 2 {
        return Err(Error::InvalidInput("the lattice majorant needs α* in R²".into()));
    }
    let phase = LinearPhase::new(alpha_star);
    let inner: Vec<[i64; 2]> =
        (-r..=r).flat_map(|a| (-r..=r).map(move |b| [a, b])).filter(|n| *n != [0, 0]).collect();
    let partial = inner
        .par_iter()
        .map(|&n| Ok(fourier_coeff_exact_3d(sec, n).abs() / (2.0 * phase.checked_dist(&n, 6)?.to_f64())))
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum::<f64>();
    let outer: Vec<[i64; 2]> = (-2 * r..=2 * r)
        .flat_map(|a| (-2 * r..=2 * r).map(move |b| [a, b]))
        .filter(|n| n[0].abs().max(n[1].abs()) > r)
        .collect();
    let shell = outer
        .par_iter()
        .map(|&n| Ok(c_fit * flag_envelope(forms, &n) / (2.0 * phase.checked_dist(&n, 6)?.to_f64())))
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum::<f64>();
    let tail = 2.0 * shell;
    Ok(Majorant { n_max: r as u64, partial, tail, total: partial + tail, rigorous_tail: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::diophantine_series;
    use crate::geometry::build_piecewise_linear_section;

    fn triangle() -> Polytope {
        Polytope::from_vertices(vec![vec![0.1, 0.1], vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap()
    }

    fn silver() -> (Real, Direction, ContinuedFraction) {
        let a1 = Real::parse("sqrt(2)-1").unwrap();
        let dir = Direction::parse(&["sqrt(2)-1", "1"]).unwrap();
        let cf = ContinuedFraction::expand_past(&a1, 100_000, 256).unwrap();
        (a1, dir, cf)
    }

    #[test]
    fn certificate_components_are_consistent() {
        let (a1, dir, cf) = silver();
        let series = diophantine_series(&a1, 100_000, &cf).unwrap();
        let cert = planar_bound_certificate(&triangle(), &dir, &series).unwrap();
        assert_eq!(cert.n_edges, 3);
        let expect = 2.0
            + (cert.n_edges as f64 + 1.0) / (PI * PI * cert.alpha_norm)
                * cert.cot_spread
                * (cert.series_partial + cert.series_tail);
        assert!((cert.bound_value - expect).abs() < 1e-12);
        assert!((cert.bound_value - cert.bound_integer_times - 2.0).abs() < 1e-12);
        assert!(cert.valid);
    }

    #[test]
    fn bound_is_linear_in_cot_spread() {
        let (a1, dir, cf) = silver();
        let series = diophantine_series(&a1, 1000, &cf).unwrap();
        let cert = planar_bound_certificate(&triangle(), &dir, &series).unwrap();
        let doubled = (cert.n_edges as f64 + 1.0) / (PI * PI * cert.alpha_norm)
            * (2.0 * cert.cot_spread)
            * (cert.series_partial + cert.series_tail);
        assert!((doubled - 2.0 * cert.bound_integer_times).abs() < 1e-12);
    }

    #[test]
    fn rejects_rational_and_out_of_range() {
        let (a1, _, cf) = silver();
        let series = diophantine_series(&a1, 100, &cf).unwrap();
        for lit in ["1/3", "sqrt(2)"] {
            let dir = Direction::parse(&[lit, "1"]).unwrap();
            assert!(planar_bound_certificate(&triangle(), &dir, &series).is_err());
        }
    }

    #[test]
    fn coefficients_respect_planar_bound() {
        let (_, dir, _) = silver();
        let sec = build_piecewise_linear_section(&triangle(), &dir).unwrap();
        let spread = sec.max_cot_spread();
        for n in 1..=10_000 {
            let c = fourier_coeff_exact_2d(&sec, n);
            assert!(c.abs() <= coefficient_bound_2d(sec.n_edges, spread, dir.norm(), n));
        }
    }

    #[test]
    fn majorant_sits_below_the_bound() {
        let (a1, dir, cf) = silver();
        let sec = build_piecewise_linear_section(&triangle(), &dir).unwrap();
        let m = fourier_majorant_2d(&sec, &a1, 10_000, &cf).unwrap();
        let series = diophantine_series(&a1, 10_000, &cf).unwrap();
        let cert = planar_bound_certificate(&triangle(), &dir, &series).unwrap();
        assert!(m.total <= cert.bound_integer_times);
        assert!(m.tail < m.partial);
        assert!((m.partial - GOLDEN_TRIANGLE_PARTIAL_1E4).abs() < 1e-12, "{m:?}");
    }

    // mpmath at 40 digits: segment clipping at the exact breakpoints, then direct
    // integration of each linear piece against the exponential
    const GOLDEN_TRIANGLE_PARTIAL_1E4: f64 = 0.548_330_699_394_963_8;

    #[test]
    fn majorant_dominates_integer_time_discrepancy() {
        let (a1, dir, cf) = silver();
        let sec = build_piecewise_linear_section(&triangle(), &dir).unwrap();
        let m = fourier_majorant_2d(&sec, &a1, 10_000, &cf).unwrap();
        let inst = crate::engine::FlowInstance::new(dir, vec![0.37, 0.0], triangle()).unwrap();
        let times: Vec<f64> = (0..=20_000).map(f64::from).collect();
        let worst = inst.trace_exact(&times).unwrap().iter().fold(0.0f64, |w, s| w.max(s.delta.abs()));
        assert!(worst <= m.total, "{worst} > {}", m.total);
        assert!(worst > 0.1 * m.total);
    }

    #[test]
    fn fourier_series_reconstructs_the_section() {
        let (_, dir, _) = silver();
        let sec = build_piecewise_linear_section(&triangle(), &dir).unwrap();
        let coeffs: Vec<_> = (1..=20_000).map(|n| fourier_coeff_exact_2d(&sec, n)).collect();
        let abs_sum: f64 = coeffs.iter().map(|c| c.abs()).sum();
        assert!(abs_sum.is_finite() && abs_sum < 1.0);
        for x in [0.0, 0.2, 0.5, 0.77, 0.9] {
            let mut v = sec.integral();
            for (k, c) in coeffs.iter().enumerate() {
                // f̂(−n) = conj f̂(n)
                let e = crate::fourier::cis_neg(crate::dd::Dd::from_f64(x).mul_i64(-(k as i64 + 1)));
                v += 2.0 * (c.value() * e).re;
            }
            assert!((v - sec.eval(x)).abs() < 1e-4, "x = {x}");
        }
    }

    #[test]
    fn envelope_constant_is_stable_across_shells() {
        use crate::fourier::{coefficients_3d, fit_envelope_constant, flag_forms_of_cells};
        use crate::geometry::arrangement_cells;
        let d = Direction::parse(&["sqrt(2)-1", "sqrt(3)-1", "1"]).unwrap();
        let bx = Polytope::axis_box(&[0.0; 3], &[0.4; 3]).unwrap();
        let sec = arrangement_cells(&bx, &d).unwrap();
        let forms = flag_forms_of_cells(&sec).unwrap();
        let coeffs = coefficients_3d(&sec, 32);
        let inner = fit_envelope_constant(&coeffs, &forms, 8, 16);
        let outer = fit_envelope_constant(&coeffs, &forms, 16, 32);
        assert!(inner.c_fit > 0.0 && outer.c_fit > 0.0);
        let ratio = outer.c_fit / inner.c_fit;
        assert!((0.1..10.0).contains(&ratio), "{inner:?} {outer:?}");
        let star = [Real::parse("sqrt(2)-1").unwrap(), Real::parse("sqrt(3)-1").unwrap()];
        let m = fourier_majorant_3d(&sec, &star, 8, &forms, inner.c_fit).unwrap();
        assert!(!m.rigorous_tail && m.partial > 0.0 && m.tail > 0.0);
    }

    #[test]
    fn constant_section_has_zero_majorant() {
        let (a1, dir, cf) = silver();
        let sec = build_piecewise_linear_section(&Polytope::unit_cube(2), &dir).unwrap();
        let m = fourier_majorant_2d(&sec, &a1, 1000, &cf).unwrap();
        assert!(m.total < 1e-10);
    }
}
