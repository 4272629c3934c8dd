use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use torusflow_bench::{silver, spatial, triangle};
use torusflow_core::diophantine::{diophantine_series, ContinuedFraction};
use torusflow_core::engine::{box_discrepancy_sup, FlowInstance};
use torusflow_core::fourier::{coefficients_3d, fourier_coeff_exact_2d};
use torusflow_core::geometry::{arrangement_cells, build_piecewise_linear_section, Polytope};

fn delta_exact(c: &mut Criterion) {
    let inst = FlowInstance::new(silver(), vec![0.3, 0.7], triangle()).unwrap();
    let mut g = c.benchmark_group("delta_exact");
    for t in [1e2, 1e4, 1e6] {
        g.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| b.iter(|| inst.delta_exact(black_box(t)).unwrap()));
    }
    g.finish();
}

fn trace(c: &mut Criterion) {
    let inst = FlowInstance::new(silver(), vec![0.0, 0.0], triangle()).unwrap();
    let times: Vec<f64> = (1..=10_000).map(f64::from).collect();
    c.bench_function("trace_exact_1e4_integer_times", |b| b.iter(|| inst.trace_exact(black_box(&times)).unwrap()));
}

fn quadrature(c: &mut Criterion) {
    let inst = FlowInstance::new(silver(), vec![0.3, 0.7], triangle()).unwrap();
    c.bench_function("delta_quadrature_t100_h1e-4", |b| b.iter(|| inst.delta_quadrature(black_box(100.0), 1e-4).unwrap()));
}

fn fourier(c: &mut Criterion) {
    let sec = build_piecewise_linear_section(&triangle(), &silver()).unwrap();
    c.bench_function("fourier_2d_n1..1000", |b| {
        b.iter(|| (1..=1000).map(|n| fourier_coeff_exact_2d(&sec, black_box(n)).abs()).sum::<f64>())
    });
    let cube = Polytope::axis_box(&[0.0; 3], &[0.4; 3]).unwrap();
    let cells = arrangement_cells(&cube, &spatial()).unwrap();
    c.bench_function("fourier_3d_ball_r10", |b| b.iter(|| coefficients_3d(&cells, black_box(10))));
}

fn series(c: &mut Criterion) {
    let a = silver().alpha()[0].clone();
    let cf = ContinuedFraction::expand_past(&a, 100_000, 256).unwrap();
    c.bench_function("diophantine_series_1e5", |b| b.iter(|| diophantine_series(&a, black_box(100_000), &cf).unwrap()));
}

fn boxsup(c: &mut Criterion) {
    let alpha = torusflow_core::geometry::Direction::parse(&["sqrt(2)", "1"]).unwrap();
    c.bench_function("box_sup_g16_t1e3", |b| b.iter(|| box_discrepancy_sup(&alpha, &[0.0, 0.0], black_box(1000.0), 16).unwrap()));
}

criterion_group!(benches, delta_exact, trace, quadrature, fourier, series, boxsup);
criterion_main!(benches);
