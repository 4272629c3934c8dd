//! Exact Fourier coefficients of the section function, the explicit planar
//! discrepancy bound, Fourier-series majorants and the flag envelope.
//!
//! Phases `⟨n, x⟩` are reduced mod 1 in double-double before the exponential
//! is taken, so coefficients stay accurate for large `|n|`.

mod bound;
mod flags;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write;

use crate::dd::Dd;
use crate::geometry::{SectionFunction2D, SectionFunction3D};

pub use bound::{
    coefficient_bound_2d, fourier_majorant_2d, fourier_majorant_3d, planar_bound_certificate, BoundCertificate, Majorant,
};
pub use flags::{
    fit_envelope_constant, flag_forms, flag_forms_of_cells, flag_envelope, polygon_flag_forms, projection_chain_norms,
    EnvelopeFit, FlagFormSet, FlagTuple,
};

/// Below this `|⟨n, e⟩|` an edge integral switches to its Taylor series.
pub const SERIES_SWITCH: f64 = 1e-8;

/// `f̂(n) = ∫ f(x) e^{−2πi⟨n,x⟩} dx`.
#[derive(Debug, Clone, Serialize)]
pub struct FourierCoefficient {
    pub n: Vec<i64>,
    pub re: f64,
    pub im: f64,
    /// Size of the boundary term that integration by parts cancels (d = 2).
    pub boundary_residual: f64,
}

impl FourierCoefficient {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// `e^{−2πiθ}` with `θ` reduced mod 1 first.
pub(crate) fn cis_neg(theta: Dd) -> Complex64 {
    let t = theta.fract().to_f64();
    let a = 2.0 * PI * t;
    Complex64::new(a.cos(), -a.sin())
}

fn phase2(n: [i64; 2], p: [f64; 2]) -> Dd {
    Dd::from_f64(p[0]).mul_i64(n[0]) + Dd::from_f64(p[1]).mul_i64(n[1])
}

/// Exact `f̂(n)` of a piecewise-linear section.
///
/// For `n ≠ 0`, integrating by parts leaves
/// `Σ_j a_j (e^{−2πinc_j} − e^{−2πinc_{j−1}}) / (4π²n²)`; the telescoping boundary
/// term vanishes by continuity and periodicity and is reported as a check.
pub fn fourier_coeff_exact_2d(sec: &SectionFunction2D, n: i64) -> FourierCoefficient {
    if n == 0 {
        return FourierCoefficient { n: vec![0], re: sec.integral(), im: 0.0, boundary_residual: 0.0 };
    }
    let e: Vec<Complex64> = sec.breakpoints.iter().map(|&c| cis_neg(Dd::from_f64(c).mul_i64(n))).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut boundary = Complex64::new(0.0, 0.0);
    for (j, &(a, b)) in sec.pieces.iter().enumerate() {
        let (c0, c1) = (sec.breakpoints[j], sec.breakpoints[j + 1]);
        acc += (e[j + 1] - e[j]) * a;
        boundary += e[j + 1] * (a * c1 + b) - e[j] * (a * c0 + b);
    }
    let nf = n as f64;
    let v = acc / (4.0 * PI * PI * nf * nf);
    let boundary = boundary / (2.0 * PI * nf);
    FourierCoefficient { n: vec![n], re: v.re, im: v.im, boundary_residual: boundary.norm() }
}

/// `(e^{−2πiβ} − 1)/(−2πiβ) = ∫_0^1 e^{−2πiβt} dt`.
fn edge_factor(beta: f64) -> Complex64 {
    let z = Complex64::new(0.0, -2.0 * PI * beta);
    if beta.abs() < SERIES_SWITCH {
        // 1 + z/2 + z²/6 + z³/24
        Complex64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        // e^{−iθ} − 1 = −2sin²(θ/2) − i sin θ, with θ reduced to [−π, π]
        let th = 2.0 * PI * Dd::from_f64(beta).centered_fract().to_f64();
        Complex64::new(-2.0 * (th / 2.0).sin().powi(2), -th.sin()) / z
    }
}

/// `∫_A e^{−2πi⟨n,x⟩} dx` over a counterclockwise convex polygon, reduced to
/// edge integrals by the divergence theorem.
pub fn polygon_exponential_integral(vertices: &[[f64; 2]], n: [i64; 2]) -> Complex64 {
    let m = vertices.len();
    if n == [0, 0] {
        let area: f64 = (0..m)
            .map(|i| {
                let (p, q) = (vertices[i], vertices[(i + 1) % m]);
                p[0] * q[1] - q[0] * p[1]
            })
            .sum::<f64>()
            / 2.0;
        return Complex64::new(area, 0.0);
    }
    let (nx, ny) = (n[0] as f64, n[1] as f64);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..m {
        let (p, q) = (vertices[i], vertices[(i + 1) % m]);
        let e = [q[0] - p[0], q[1] - p[1]];
        // ⟨n, ν⟩|e| with ν the outward unit normal
        let flux = nx * e[1] - ny * e[0];
        if flux == 0.0 {
            continue;
        }
        let beta = nx * e[0] + ny * e[1];
        acc += cis_neg(phase2(n, p)) * edge_factor(beta) * flux;
    }
    acc * Complex64::new(0.0, 1.0 / (2.0 * PI * (nx * nx + ny * ny)))
}

/// Exact `f̂(n)` of a piecewise-affine section on `[0,1)²`:
/// `Σ_j ⟨a_j, n⟩/(2πi|n|²) ∫_{A_j} e^{−2πi⟨n,x⟩} dx` for `n ≠ 0`.
pub fn fourier_coeff_exact_3d(sec: &SectionFunction3D, n: [i64; 2]) -> FourierCoefficient {
    if n == [0, 0] {
        return FourierCoefficient { n: n.to_vec(), re: sec.integral(), im: 0.0, boundary_residual: 0.0 };
    }
    let n2 = (n[0] * n[0] + n[1] * n[1]) as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for c in &sec.cells {
        let an = c.a[0] * n[0] as f64 + c.a[1] * n[1] as f64;
        if an != 0.0 {
            acc += polygon_exponential_integral(&c.vertices, n) * an;
        }
    }
    let v = acc / Complex64::new(0.0, 2.0 * PI * n2);
    FourierCoefficient { n: n.to_vec(), re: v.re, im: v.im, boundary_residual: 0.0 }
}

/// Coefficients for `1 <= n <= n_max`, in order.
pub fn coefficients_2d(sec: &SectionFunction2D, n_max: i64) -> Vec<FourierCoefficient> {
    (1..=n_max).into_par_iter().map(|n| fourier_coeff_exact_2d(sec, n)).collect()
}

/// Coefficients over `|n|_∞ <= r`, row-major in `(n_1, n_2)`.
pub fn coefficients_3d(sec: &SectionFunction3D, r: i64) -> Vec<FourierCoefficient> {
    let ns: Vec<[i64; 2]> = (-r..=r).flat_map(|a| (-r..=r).map(move |b| [a, b])).collect();
    ns.par_iter().map(|&n| fourier_coeff_exact_3d(sec, n)).collect()
}

/// Rows `n,re,im,abs,envelope,thm4_bound` (or `n1,n2,…` for two indices);
/// `thm4_bound` is empty where no closed-form bound applies.
pub fn coefficients_to_csv(
    coeffs: &[FourierCoefficient],
    envelope: impl Fn(&[i64]) -> f64,
    thm4: impl Fn(&[i64]) -> Option<f64>,
) -> String {
    let dim = coeffs.first().map_or(1, |c| c.n.len());
    let mut s = String::new();
    if dim == 1 {
        s.push_str("n,re,im,abs,envelope,thm4_bound\n");
    } else {
        let cols: Vec<String> = (1..=dim).map(|k| format!("n{k}")).collect();
        let _ = writeln!(s, "{},re,im,abs,envelope,thm4_bound", cols.join(","));
    }
    for c in coeffs {
        let ns: Vec<String> = c.n.iter().map(|k| k.to_string()).collect();
        let b = thm4(&c.n).map(|b| format!("{b:.17e}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            ns.join(","),
            c.re,
            c.im,
            c.abs(),
            envelope(&c.n),
            b
        );
    }
    s
}
