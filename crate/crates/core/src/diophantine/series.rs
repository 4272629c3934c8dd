use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use super::{ContinuedFraction, LinearPhase};
use crate::algebraic::Real;
use crate::dd::Dd;
use crate::error::{Error, Result};

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Serialize)]
pub struct SeriesSum {
    pub n_max: u64,
    pub partial_sum: f64,
    #[serde(skip)]
    pub partial_sum_dd: Dd,
    pub tail_bound: f64,
}

impl SeriesSum {
    pub fn total(&self) -> f64 {
        self.partial_sum + self.tail_bound
    }
}

fn term(phase: &LinearPhase, n: u64) -> Result<Dd> {
    let d = phase.checked_dist(&[n as i64], 6)?;
    if d.hi == 0.0 {
        return Err(Error::InvalidInput(format!("‖{n}·α‖ = 0")));
    }
    let n = n as f64;
    Ok((d * Dd::from_f64(n) * n).recip())
}

fn sum_range(phase: &LinearPhase, lo: u64, hi: u64) -> Result<Dd> {
    let mut acc = Dd::ZERO;
    for n in lo..hi {
        acc += term(phase, n)?;
    }
    Ok(acc)
}

fn reject_rational(alpha1: &Real) -> Result<()> {
    if alpha1.as_rational().is_some() {
        return Err(Error::InvalidInput(format!("α₁ = {alpha1} is rational; ‖nα₁‖ vanishes")));
    }
    Ok(())
}

/// `Σ_{n=1}^{n_max} 1/(n² ‖nα₁‖)` in ascending order.
///
/// Fixed chunks are summed in parallel and folded in chunk order, so the
/// result does not depend on the thread count.
pub fn diophantine_partial_sum(alpha1: &Real, n_max: u64) -> Result<Dd> {
    reject_rational(alpha1)?;
    let phase = LinearPhase::new(std::slice::from_ref(alpha1));
    let chunks = n_max.div_ceil(CHUNK);
    let parts: Vec<Dd> = (0..chunks)
        .into_par_iter()
        .map(|c| sum_range(&phase, 1 + c * CHUNK, (1 + (c + 1) * CHUNK).min(n_max + 1)))
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().sum())
}

/// The same sum grouped over the convergent ranges `[q_l, q_{l+1})`.
pub fn diophantine_partial_sum_blockwise(alpha1: &Real, n_max: u64, cf: &ContinuedFraction) -> Result<Dd> {
    reject_rational(alpha1)?;
    let phase = LinearPhase::new(std::slice::from_ref(alpha1));
    let mut bounds: Vec<u64> = vec![1];
    for (_, q) in cf.convergents() {
        match q.to_u64() {
            Some(q) if q <= n_max => bounds.push(q),
            _ => break,
        }
    }
    bounds.push(n_max + 1);
    bounds.dedup();
    let mut acc = Dd::ZERO;
    for w in bounds.windows(2) {
        if w[0] < w[1] {
            acc += sum_range(&phase, w[0], w[1])?;
        }
    }
    Ok(acc)
}

/// Partial sum plus a rigorous bound on `Σ_{n > n_max}`.
pub fn diophantine_series(alpha1: &Real, n_max: u64, cf: &ContinuedFraction) -> Result<SeriesSum> {
    reject_rational(alpha1)?;
    if cf.q(cf.depth()).to_u64().is_some_and(|q| q <= n_max) {
        return Err(Error::InvalidInput(format!(
            "continued fraction reaches q_L = {} <= n_max = {n_max}",
            cf.q(cf.depth())
        )));
    }
    let tail = series_tail_bound(cf, n_max)?;
    let partial = diophantine_partial_sum(alpha1, n_max)?;
    Ok(SeriesSum { n_max, partial_sum: partial.to_f64(), partial_sum_dd: partial, tail_bound: tail })
}

/// Upper bound on `Σ_{n ≥ lo, n < hi} 1/(n² ‖nα‖)` given that the points
/// `nα` in that range are pairwise `δ`-separated mod 1 and `‖nα‖ ≥ δ`, with
/// `inv_delta >= 1/δ`.
///
/// On each side of 0 the `i`-th nearest point is at distance `≥ iδ`, so `K`
/// points contribute at most `2 H(⌈K/2⌉)/δ` with `H(m) <= 1 + ln m`. The
/// range is split at doublings of `n` to keep the `1/n²` weight tight.
fn separated_range_bound(lo: f64, hi: f64, inv_delta: f64) -> f64 {
    let mut total = 0.0;
    let mut m = lo;
    while m < hi {
        let end = (2.0 * m).min(hi);
        let k = end - m;
        let harmonic = 1.0 + (k / 2.0).ceil().ln();
        total += 2.0 * harmonic * inv_delta / (m * m);
        m = end;
    }
    total
}

/// Rigorous bound on `Σ_{n > n_max} 1/(n² ‖nα‖)`.
///
/// For `1 <= n < q_{l+1}` the best-approximation property gives
/// `‖nα‖ ≥ ‖q_l α‖ > 1/(q_l + q_{l+1})`, and differences of such `n` obey the
/// same bound, which feeds [`separated_range_bound`] block by block. Past the
/// last generated convergent `q_L` every quotient is at most `A`, so the
/// block at `q_l` is below `2(A+2)(1 + ln(A+1) + ln q_l)/q_l`; since
/// `q_{l+2} ≥ 2 q_l`, summing the two interleaved geometric chains gives the
/// closed-form remainder below. Only periodic expansions know `A`.
pub fn series_tail_bound(cf: &ContinuedFraction, n_max: u64) -> Result<f64> {
    let a_bound = cf.quotient_bound().ok_or_else(|| {
        Error::TailNotCertifiable(
            "partial quotients beyond the computed expansion are not controlled (not a quadratic irrational)".into(),
        )
    })?;
    let mut cf = cf.clone();
    // walk far enough that the closed-form remainder is negligible
    let target = (n_max as f64).max(1.0) * 1e12;
    let mut depth = cf.depth();
    while cf.q_f64(depth) < target {
        depth += 8;
        cf.extend_to(depth)?;
    }
    let start = n_max as f64 + 1.0;
    let mut total = 0.0;
    for l in 0..depth {
        let (ql, qn) = (cf.q_f64(l), cf.q_f64(l + 1));
        let lo = ql.max(start);
        if lo >= qn {
            continue;
        }
        total += separated_range_bound(lo, qn, ql + qn);
    }
    let a = a_bound as f64;
    let c = 1.0 + (a + 1.0).ln();
    let q = cf.q_f64(depth);
    let ln2 = std::f64::consts::LN_2;
    total += 2.0 * (a + 2.0) * 2.0 * (2.0 * (c + q.ln()) + 2.0 * ln2) / q;
    // covers rounding in the f64 evaluation above
    Ok(total * (1.0 + 1e-9))
}

/// `Σ_{l=0}^{depth} a_{l+1} q_l^{-1/2} Σ_{k=1}^{l+1} a_k`.
pub fn grepstad_larcher_sum(cf: &ContinuedFraction, depth: usize) -> Result<f64> {
    let mut cf = cf.clone();
    if cf.depth() < depth + 1 {
        cf.extend_to(depth + 1)?;
    }
    let a = cf.partial_quotients();
    let mut prefix = 0.0;
    let mut total = 0.0;
    for l in 0..=depth {
        prefix += a[l + 1] as f64;
        total += a[l + 1] as f64 / cf.q_f64(l).sqrt() * prefix;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{Signed, Zero};

    fn silver() -> (Real, ContinuedFraction) {
        let x = Real::parse("sqrt(2)-1").unwrap();
        let cf = ContinuedFraction::expand_past(&x, 1_000_000, 256).unwrap();
        (x, cf)
    }

    /// ‖n(√2−1)‖ as an exact rational interval: with m = nearest integer to n√2,
    /// |n√2 − m| = |2n² − m²|/(n√2 + m), and n√2 is bracketed by integer square roots.
    fn oracle_term(n: u64) -> BigRational {
        let n = BigInt::from(n);
        let scale = BigInt::from(10u32).pow(30);
        let two_n2 = BigInt::from(2) * &n * &n;
        let root_scaled = (&two_n2 * &scale * &scale).sqrt(); // floor(n√2 · 10^30)
        let m = (&root_scaled + &scale / BigInt::from(2)) / &scale;
        let num = (&two_n2 - &m * &m).abs();
        let den = BigRational::new(root_scaled, scale.clone()) + BigRational::from_integer(m);
        let dist = BigRational::from_integer(num) / den;
        (dist * BigRational::from_integer(&n * &n)).recip()
    }

    #[test]
    fn partial_sum_matches_rational_oracle() {
        let (x, _) = silver();
        let n_max = 2_000u64;
        // fixed-point accumulation at 10^-40 keeps the oracle's denominators small
        let unit = BigInt::from(10u32).pow(40);
        let mut oracle = BigInt::zero();
        for n in 1..=n_max {
            oracle += (oracle_term(n) * BigRational::from_integer(unit.clone())).floor().to_integer();
        }
        let want = BigRational::new(oracle, unit).to_f64().unwrap();
        let got = diophantine_partial_sum(&x, n_max).unwrap().to_f64();
        assert!(((got - want) / want).abs() < 1e-13, "{got} vs {want}");
    }

    #[test]
    fn golden_partial_sum() {
        // frozen from a 50-digit independent summation at n_max = 10^4
        let (x, _) = silver();
        let got = diophantine_partial_sum(&x, 10_000).unwrap().to_f64();
        assert!((got - GOLDEN_SILVER_1E4).abs() < 1e-10 * GOLDEN_SILVER_1E4, "{got:.16}");
    }

    const GOLDEN_SILVER_1E4: f64 = 6.487_989_014_000_238;

    #[test]
    fn empty_sum_and_monotone() {
        let (x, cf) = silver();
        assert_eq!(diophantine_partial_sum(&x, 0).unwrap(), Dd::ZERO);
        let s4 = diophantine_series(&x, 10_000, &cf).unwrap();
        let s5 = diophantine_series(&x, 100_000, &cf).unwrap();
        assert!(s5.partial_sum >= s4.partial_sum);
        assert!(s5.total() <= s4.total() * (1.0 + 1e-12));
    }

    #[test]
    fn ascending_and_blockwise_orders_agree() {
        let (x, cf) = silver();
        for n_max in [1u64, 29, 1000, 70_000] {
            let a = diophantine_partial_sum(&x, n_max).unwrap();
            let b = diophantine_partial_sum_blockwise(&x, n_max, &cf).unwrap();
            let ulp = Dd::EPSILON * a.to_f64();
            assert!((a - b).abs().to_f64() <= 1e3 * ulp, "{n_max}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn tail_dominates_direct_continuation() {
        for lit in ["sqrt(2)-1", "(sqrt(5)-1)/2", "sqrt(19)-4", "sqrt(3)-1"] {
            let x = Real::parse(lit).unwrap();
            let cf = ContinuedFraction::expand_past(&x, 10_000_000, 256).unwrap();
            for n_max in [0u64, 1, 10, 100, 1_000, 10_000] {
                let tail = series_tail_bound(&cf, n_max).unwrap();
                let direct = (diophantine_partial_sum(&x, 10 * n_max.max(1)).unwrap()
                    - diophantine_partial_sum(&x, n_max).unwrap())
                .to_f64();
                assert!(tail >= direct, "{lit} n_max={n_max}: {tail} < {direct}");
                assert!(tail.is_finite());
            }
        }
    }

    #[test]
    fn rejections() {
        let (x, cf) = silver();
        assert!(matches!(
            diophantine_series(&Real::ratio(1, 3), 10, &cf),
            Err(Error::InvalidInput(_))
        ));
        let short = ContinuedFraction::expand(&x, 3, 256).unwrap();
        assert!(diophantine_series(&x, 1000, &short).is_err());
        let quartic = Real::parse("sqrt(2)+sqrt(3)-3").unwrap();
        let cf = ContinuedFraction::expand_past(&quartic, 1000, 512).unwrap();
        assert!(matches!(diophantine_series(&quartic, 1000, &cf), Err(Error::TailNotCertifiable(_))));
    }

    #[test]
    fn grepstad_larcher_values() {
        let golden = ContinuedFraction::expand(&Real::parse("(sqrt(5)-1)/2").unwrap(), 5, 128).unwrap();
        assert_eq!(grepstad_larcher_sum(&golden, 0).unwrap(), 1.0);
        let (_, cf) = silver();
        let mut prev = 0.0;
        for depth in 0..30 {
            let v = grepstad_larcher_sum(&cf, depth).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        // independent oracle: a_l = 2, q_l via the Pell recurrence
        let mut q = [1.0f64, 2.0];
        let mut want = 0.0;
        for l in 0..=30usize {
            let ql = if l == 0 { 1.0 } else { q[1] };
            want += 2.0 / ql.sqrt() * 2.0 * (l as f64 + 1.0);
            if l >= 1 {
                q = [q[1], 2.0 * q[1] + q[0]];
            }
        }
        let got = grepstad_larcher_sum(&cf, 30).unwrap();
        assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
        assert!((got - GOLDEN_GL_SILVER_30).abs() < 1e-12 * want, "{got:.16}");
    }

    const GOLDEN_GL_SILVER_30: f64 = 33.826_426_099_863_44;
}
