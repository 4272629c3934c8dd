//! End-to-end checks across the public API: direction in, certified numbers out.

use proptest::prelude::*;
use torusflow_core::diophantine::{diophantine_series, ContinuedFraction};
use torusflow_core::engine::{delta_t_exact, delta_t_quadrature, FlowInstance};
use torusflow_core::fourier::{fourier_coeff_exact_2d, planar_bound_certificate};
use torusflow_core::geometry::{build_piecewise_linear_section, Direction, Polytope};

fn pentagon() -> Polytope {
    Polytope::from_vertices(vec![
        vec![0.2, 0.1],
        vec![0.7, 0.15],
        vec![0.85, 0.6],
        vec![0.45, 0.9],
        vec![0.1, 0.5],
    ])
    .unwrap()
}

#[test]
fn unnormalized_direction_matches_quadrature() {
    // the exact engine rescales time and polytope; quadrature runs in the original frame
    let alpha = Direction::parse(&["5/2*(sqrt(3)-1)", "-5/2"]).unwrap();
    let inst = FlowInstance::new(alpha, vec![0.3, 0.6], pentagon()).unwrap();
    for t in [0.7, 13.0, 41.5] {
        let exact = delta_t_exact(&inst, t).unwrap();
        let quad = delta_t_quadrature(&inst, t, 1e-5).unwrap().value;
        assert!((exact - quad).abs() < 1e-3, "t = {t}: {exact} vs {quad}");
    }
}

#[test]
fn cursor_trace_matches_pointwise_evaluation() {
    let alpha = Direction::parse(&["sqrt(2)-1", "1"]).unwrap();
    let inst = FlowInstance::new(alpha, vec![0.05, 0.4], pentagon()).unwrap();
    let times: Vec<f64> = (0..200).map(|k| k as f64 * 3.7).collect();
    for s in inst.trace_exact(&times).unwrap() {
        let direct = inst.delta_exact(s.t).unwrap();
        assert!((s.delta - direct).abs() < 1e-12, "t = {}: {} vs {direct}", s.t, s.delta);
    }
}

#[test]
fn certificate_serializes_and_dominates_trace() {
    let alpha = Direction::parse(&["sqrt(2)-1", "1"]).unwrap();
    let a1 = alpha.alpha()[0].clone();
    let cf = ContinuedFraction::expand_past(&a1, 10_000, 256).unwrap();
    let series = diophantine_series(&a1, 10_000, &cf).unwrap();
    let cert = planar_bound_certificate(&pentagon(), &alpha, &series).unwrap();
    let json = serde_json::to_value(&cert).unwrap();
    assert_eq!(json["valid"], serde_json::Value::Bool(true));
    assert!(json["bound_value"].as_f64().unwrap() >= json["bound_integer_times"].as_f64().unwrap());

    let inst = FlowInstance::new(alpha, vec![0.0, 0.0], pentagon()).unwrap();
    let times: Vec<f64> = (1..=2000).map(f64::from).collect();
    let sup = inst.trace_exact(&times).unwrap().iter().fold(0.0f64, |m, s| m.max(s.delta.abs()));
    assert!(sup <= cert.bound_integer_times, "{sup} > {}", cert.bound_integer_times);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn discrepancy_is_additive_along_the_orbit(s0 in 0.0f64..1.0, s1 in 0.0f64..1.0, tau in 0.0f64..30.0, t in 0.0f64..30.0) {
        // Δ_{τ+T}(s) = Δ_τ(s) + Δ_T({s + τα})
        let alpha = Direction::parse(&["2*(sqrt(5)-2)", "2"]).unwrap();
        let a = FlowInstance::new(alpha, vec![s0, s1], pentagon()).unwrap();
        let b = a.with_start(a.orbit_point(tau)).unwrap();
        let lhs = a.delta_exact(tau + t).unwrap();
        let rhs = a.delta_exact(tau).unwrap() + b.delta_exact(t).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn discrepancy_is_at_most_time_and_lipschitz(t in 0.0f64..40.0, h in 0.0f64..1.0) {
        // |Δ_T| ≤ T max(λ, 1 − λ) and |Δ_{T+h} − Δ_T| ≤ h max(λ, 1 − λ)
        let alpha = Direction::parse(&["sqrt(7)-2", "1"]).unwrap();
        let inst = FlowInstance::new(alpha, vec![0.2, 0.9], pentagon()).unwrap();
        let lam = inst.lambda();
        let slope = lam.max(1.0 - lam);
        let (d0, d1) = (inst.delta_exact(t).unwrap(), inst.delta_exact(t + h).unwrap());
        prop_assert!(d0.abs() <= t * slope + 1e-9);
        prop_assert!((d1 - d0).abs() <= h * slope + 1e-9);
    }
}

#[test]
fn coefficient_sums_settle_on_the_last_dyadic_shell() {
    // Σ_{|n| ≤ R} |f̂(n)| with f̂(−n) = conj f̂(n); the shell (R/2, R] adds < 1e-6 of the total
    let tri = Polytope::from_vertices(vec![vec![0.1, 0.1], vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
    for (poly, alpha) in [
        (tri, Direction::parse(&["sqrt(2)-1", "1"]).unwrap()),
        (pentagon(), Direction::parse(&["sqrt(3)-1", "1"]).unwrap()),
    ] {
        let sec = build_piecewise_linear_section(&poly, &alpha).unwrap();
        let r = 1i64 << 20;
        let shell: f64 = (r / 2 + 1..=r).map(|n| 2.0 * fourier_coeff_exact_2d(&sec, n).abs()).sum();
        let inner: f64 = (1..=r / 2).map(|n| 2.0 * fourier_coeff_exact_2d(&sec, n).abs()).sum();
        let total = fourier_coeff_exact_2d(&sec, 0).abs() + inner + shell;
        assert!(shell < 1e-6 * total, "shell {shell:.3e} vs total {total:.4}");
    }
}
