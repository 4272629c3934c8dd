//! Continued fractions, distances to the nearest integer and the Diophantine
//! conditions that control bounded discrepancy.
//!
//! Every evaluation of `‖n·α‖` goes through [`LinearPhase`], which works in
//! double-double arithmetic (exact integer arithmetic for rational inputs) and
//! reports an error budget so scans can refuse results they cannot trust.

mod audit;
mod cf;
mod scan;
mod series;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;

use crate::algebraic::Real;
use crate::dd::Dd;
use crate::error::{Error, Result};

pub use audit::{dyadic_block, dyadic_spacing_audit, occupied_blocks, AuditReport, BlockSelector, DyadicBlock};
pub use cf::{ContinuedFraction, Convergent};
pub use scan::{
    approximation_exponent_scan, fit_schmidt_constant, hits_to_csv, schmidt_inequality_scan, validate_forms, ScanHit,
};
pub use series::{
    diophantine_partial_sum, diophantine_partial_sum_blockwise, diophantine_series, grepstad_larcher_sum,
    series_tail_bound, SeriesSum,
};

/// `‖x‖ = min_m |x − m|`.
pub fn nearest_integer_distance(x: Dd) -> Dd {
    x.dist_to_int()
}

pub fn nearest_integer_distance_f64(x: f64) -> f64 {
    let f = x - x.floor();
    f.min(1.0 - f)
}

/// `g(n) = Σ α_i n_i mod 1` for a fixed coefficient vector.
#[derive(Debug, Clone)]
pub struct LinearPhase {
    coeffs: Vec<Dd>,
    /// Common-denominator form `(numerators, denominator)` when every
    /// coefficient is a rational that fits in `i128`.
    exact: Option<(Vec<i128>, i128)>,
    scale: f64,
}

impl LinearPhase {
    pub fn new(alpha: &[Real]) -> Self {
        let coeffs: Vec<Dd> = alpha.iter().map(|a| a.approx()).collect();
        let scale = coeffs.iter().map(|c| c.abs().to_f64().max(1.0)).fold(0.0, f64::max);
        LinearPhase { exact: exact_form(alpha), coeffs, scale }
    }

    pub fn from_dd(coeffs: Vec<Dd>) -> Self {
        let scale = coeffs.iter().map(|c| c.abs().to_f64().max(1.0)).fold(0.0, f64::max);
        LinearPhase { coeffs, exact: None, scale }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Representative of `g(n)` in `(−1/2, 1/2]`.
    pub fn centered(&self, n: &[i64]) -> Dd {
        if let Some((num, den)) = &self.exact {
            let mut acc: i128 = 0;
            for (a, &k) in num.iter().zip(n) {
                acc = (acc + (a % den) * ((k as i128) % den)) % den;
            }
            let mut r = acc.rem_euclid(*den);
            if 2 * r > *den {
                r -= den;
            }
            return Dd::from_i64(r as i64) / Dd::from_i64(*den as i64);
        }
        let mut acc = Dd::ZERO;
        for (c, &k) in self.coeffs.iter().zip(n) {
            // reducing each product first keeps the sum small
            acc += c.mul_i64(k).fract();
        }
        acc.centered_fract()
    }

    pub fn dist(&self, n: &[i64]) -> Dd {
        self.centered(n).abs()
    }

    /// Upper bound on the absolute error of [`centered`](Self::centered).
    pub fn error_bound(&self, n: &[i64]) -> f64 {
        if self.exact.is_some() {
            return 0.0;
        }
        let l1: f64 = n.iter().map(|&k| (k as f64).abs()).sum();
        32.0 * Dd::EPSILON * (l1 * self.scale + 1.0)
    }

    /// `dist(n)` if it carries at least `digits` significant digits.
    pub fn checked_dist(&self, n: &[i64], digits: i32) -> Result<Dd> {
        let d = self.dist(n);
        let err = self.error_bound(n);
        if err > 0.0 && d.to_f64() < err * 10f64.powi(digits) {
            return Err(Error::PrecisionExhausted(format!(
                "‖n·α‖ ≈ {:e} at n = {n:?} is within {digits} digits of the error budget {err:e}",
                d.to_f64()
            )));
        }
        Ok(d)
    }
}

fn exact_form(alpha: &[Real]) -> Option<(Vec<i128>, i128)> {
    let rats: Vec<_> = alpha.iter().map(|a| a.as_rational()).collect::<Option<_>>()?;
    let mut den = BigInt::from(1);
    for r in &rats {
        den = den.lcm(r.denom());
    }
    let den_i = den.to_i128()?;
    // keep products below i128 overflow for any i64 multiplier
    if den_i > (1i128 << 62) {
        return None;
    }
    let nums = rats
        .iter()
        .map(|r| {
            let n: BigInt = r.numer() * (&den / r.denom());
            (n.abs() % &den * n.signum()).to_i128()
        })
        .collect::<Option<Vec<_>>>()?;
    Some((nums, den_i))
}

/// Summary of how well `α_1` is approximable over `1 <= n <= N`.
#[derive(Debug, Clone, Serialize)]
pub struct DiophantineProfile {
    pub alpha1: String,
    pub eta_scan_limit: u64,
    /// `max log(1/‖nα‖)/log n` over `2 <= n <= N`.
    pub worst_exponent: f64,
    pub worst_n: u64,
    /// Largest `a_{l+1}` over the convergents with `q_l <= N`.
    pub badly_approximable_bound: Option<i64>,
    pub series_partial: f64,
    /// `None` when the tail cannot be certified.
    pub series_tail_bound: Option<f64>,
    pub min_n_dist: f64,
}

impl DiophantineProfile {
    pub fn compute(alpha1: &Real, n: u64, bits: u32) -> Result<Self> {
        let phase = LinearPhase::new(std::slice::from_ref(alpha1));
        let mut worst = (f64::NEG_INFINITY, 0u64);
        let mut min_n_dist = f64::INFINITY;
        for k in 1..=n {
            let dist = phase.checked_dist(&[k as i64], 6)?.to_f64();
            min_n_dist = min_n_dist.min(dist * k as f64);
            if k >= 2 {
                let e = -dist.ln() / (k as f64).ln();
                if e > worst.0 {
                    worst = (e, k);
                }
            }
        }
        let cf = ContinuedFraction::expand_past(alpha1, n, bits).ok();
        let badly = cf.as_ref().and_then(|cf| cf.max_quotient_up_to(n));
        let (partial, tail) = match &cf {
            Some(cf) => match diophantine_series(alpha1, n, cf) {
                Ok(s) => (s.partial_sum, Some(s.tail_bound)),
                Err(Error::TailNotCertifiable(_)) => (diophantine_partial_sum(alpha1, n)?.to_f64(), None),
                Err(e) => return Err(e),
            },
            None => (diophantine_partial_sum(alpha1, n)?.to_f64(), None),
        };
        Ok(DiophantineProfile {
            alpha1: alpha1.to_string(),
            eta_scan_limit: n,
            worst_exponent: worst.0,
            worst_n: worst.1,
            badly_approximable_bound: badly,
            series_partial: partial,
            series_tail_bound: tail,
            min_n_dist,
        })
    }
}
