use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::algebraic::Real;
use crate::dd::Dd;
use crate::error::{Error, Result};

/// Simple continued fraction `[a_0; a_1, a_2, …]` with its convergents.
///
/// Quadratic irrationals are expanded exactly through the integer surd
/// recurrence and know their period, so they can be extended indefinitely.
/// Anything else is expanded from a rigorous rational enclosure and stops
/// where the two endpoints' expansions disagree.
#[derive(Debug, Clone)]
pub struct ContinuedFraction {
    value: Dd,
    quotients: Vec<i64>,
    convergents: Vec<(BigInt, BigInt)>,
    /// `(start, len)` of the repeating block of `quotients`.
    period: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Convergent {
    pub p: String,
    pub q: String,
}

impl ContinuedFraction {
    /// Expands `x` to `a_0, …, a_depth`.
    ///
    /// `bits` is the working precision of the enclosure used for non-quadratic
    /// inputs; quadratic surds are exact and ignore it.
    pub fn expand(x: &Real, depth: usize, bits: u32) -> Result<Self> {
        if let Some(q) = x.quadratic() {
            if q.b.is_zero() {
                return Err(Error::InvalidInput(format!(
                    "{x} is rational; its continued fraction terminates"
                )));
            }
            let (p, qq, d) = q.surd_form().expect("irrational");
            return Self::from_surd(x.approx(), p, qq, d, depth);
        }
        Self::from_interval(x, depth, bits)
    }

    /// Expands until some denominator `q_L` exceeds `bound`.
    pub fn expand_past(x: &Real, bound: u64, bits: u32) -> Result<Self> {
        let target = BigInt::from(bound);
        let mut depth = 16;
        loop {
            let cf = Self::expand(x, depth, bits)?;
            if cf.convergents.last().is_some_and(|(_, q)| *q > target) {
                return Ok(cf);
            }
            depth *= 2;
        }
    }

    fn from_surd(value: Dd, mut p: BigInt, mut q: BigInt, d: BigInt, depth: usize) -> Result<Self> {
        let s = d.sqrt();
        let mut quotients = Vec::with_capacity(depth + 1);
        let mut seen: HashMap<(BigInt, BigInt), usize> = HashMap::new();
        let mut period = None;
        // generate until the state repeats, then we know every future quotient
        while period.is_none() {
            if let Some(&start) = seen.get(&(p.clone(), q.clone())) {
                period = Some((start, quotients.len() - start));
                break;
            }
            seen.insert((p.clone(), q.clone()), quotients.len());
            let a = if q.is_positive() { (&p + &s).div_floor(&q) } else { (&p + &s + BigInt::one()).div_floor(&q) };
            quotients.push(a.to_i64().ok_or_else(|| Error::InvalidInput("partial quotient overflows i64".into()))?);
            p = &a * &q - &p;
            q = (&d - &p * &p) / &q;
        }
        let mut cf = ContinuedFraction { value, quotients, convergents: Vec::new(), period };
        cf.extend_to(depth)?;
        cf.quotients.truncate(depth + 1);
        cf.convergents.truncate(depth + 1);
        Ok(cf)
    }

    fn from_interval(x: &Real, depth: usize, bits: u32) -> Result<Self> {
        let iv = x.interval(bits)?;
        let (mut lo, mut hi) = (iv.lo, iv.hi);
        let mut quotients = Vec::with_capacity(depth + 1);
        while quotients.len() <= depth {
            let a_lo = lo.floor();
            let a_hi = hi.floor();
            if a_lo != a_hi {
                break;
            }
            let a = a_lo.to_integer();
            quotients.push(a.to_i64().ok_or_else(|| Error::InvalidInput("partial quotient overflows i64".into()))?);
            let a = BigRational::from_integer(a);
            let (rl, rh) = (&lo - &a, &hi - &a);
            if rl.is_zero() {
                break;
            }
            // 1/x reverses the order of the endpoints
            lo = rh.recip();
            hi = rl.recip();
        }
        if quotients.len() <= depth {
            return Err(Error::PrecisionExhausted(format!(
                "only {} of {} partial quotients are determined at {bits} bits",
                quotients.len(),
                depth + 1
            )));
        }
        let mut cf = ContinuedFraction { value: x.approx(), quotients, convergents: Vec::new(), period: None };
        cf.fill_convergents();
        Ok(cf)
    }

    /// Builds from explicit quotients, e.g. for tests on synthetic expansions.
    pub fn from_quotients(value: Dd, quotients: Vec<i64>) -> Result<Self> {
        if quotients.is_empty() || quotients[1..].iter().any(|&a| a < 1) {
            return Err(Error::InvalidInput("partial quotients a_l (l >= 1) must be positive".into()));
        }
        let mut cf = ContinuedFraction { value, quotients, convergents: Vec::new(), period: None };
        cf.fill_convergents();
        Ok(cf)
    }

    fn fill_convergents(&mut self) {
        let (mut p2, mut q2) = (BigInt::zero(), BigInt::one());
        let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
        if let Some(&(ref p, ref q)) = self.convergents.last() {
            p1 = p.clone();
            q1 = q.clone();
            if self.convergents.len() >= 2 {
                let (p, q) = &self.convergents[self.convergents.len() - 2];
                p2 = p.clone();
                q2 = q.clone();
            } else {
                p2 = BigInt::one();
                q2 = BigInt::zero();
            }
        }
        for &a in &self.quotients[self.convergents.len()..] {
            let a = BigInt::from(a);
            let p = &a * &p1 + &p2;
            let q = &a * &q1 + &q2;
            p2 = std::mem::replace(&mut p1, p.clone());
            q2 = std::mem::replace(&mut q1, q.clone());
            self.convergents.push((p, q));
        }
    }

    /// Makes `a_0, …, a_depth` available. Only possible beyond the computed
    /// range for periodic expansions.
    pub fn extend_to(&mut self, depth: usize) -> Result<()> {
        while self.quotients.len() <= depth {
            let (start, len) = self.period.ok_or_else(|| {
                Error::PrecisionExhausted(format!(
                    "expansion known to depth {} only",
                    self.quotients.len().saturating_sub(1)
                ))
            })?;
            let idx = start + (self.quotients.len() - start) % len;
            let a = self.quotients[idx];
            self.quotients.push(a);
        }
        self.fill_convergents();
        Ok(())
    }

    pub fn value(&self) -> Dd {
        self.value
    }

    /// Index of the last stored quotient.
    pub fn depth(&self) -> usize {
        self.quotients.len() - 1
    }

    pub fn partial_quotients(&self) -> &[i64] {
        &self.quotients
    }

    pub fn convergents(&self) -> &[(BigInt, BigInt)] {
        &self.convergents
    }

    pub fn q(&self, l: usize) -> &BigInt {
        &self.convergents[l].1
    }

    pub fn q_f64(&self, l: usize) -> f64 {
        self.convergents[l].1.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn period(&self) -> Option<(usize, usize)> {
        self.period
    }

    /// Bound on every partial quotient `a_l`, `l >= 1`, including the ones
    /// not yet generated. Only known for periodic expansions.
    pub fn quotient_bound(&self) -> Option<i64> {
        let (start, len) = self.period?;
        let head = self.quotients[1.min(self.quotients.len())..].iter().copied().max().unwrap_or(0);
        let per = self.quotients[start.max(1)..start + len].iter().copied().max().unwrap_or(0);
        Some(head.max(per).max(self.quotients.get(start).copied().unwrap_or(0)))
    }

    /// Largest `a_{l+1}` over the indices with `q_l <= n_max`; `None` if the
    /// expansion does not reach past `n_max`.
    pub fn max_quotient_up_to(&self, n_max: u64) -> Option<i64> {
        let n = BigInt::from(n_max);
        let mut best = None;
        for l in 0..self.quotients.len().saturating_sub(1) {
            if self.convergents[l].1 > n {
                return best;
            }
            best = Some(best.map_or(self.quotients[l + 1], |b: i64| b.max(self.quotients[l + 1])));
        }
        None
    }

    pub fn convergent_strings(&self) -> Vec<Convergent> {
        self.convergents.iter().map(|(p, q)| Convergent { p: p.to_string(), q: q.to_string() }).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac_of(p: &BigInt, q: &BigInt) -> BigRational {
        BigRational::new(p.clone(), q.clone())
    }

    #[test]
    fn silver_mean_quotients_and_convergents() {
        let x = Real::parse("sqrt(2)-1").unwrap();
        let cf = ContinuedFraction::expand(&x, 40, 256).unwrap();
        assert_eq!(cf.partial_quotients()[0], 0);
        assert!(cf.partial_quotients()[1..].iter().all(|&a| a == 2));
        assert_eq!(cf.partial_quotients().len(), 41);
        // hand recurrence: 0/1, 1/2, 2/5, 5/12, 12/29
        let want = [(0, 1), (1, 2), (2, 5), (5, 12), (12, 29)];
        for (l, (p, q)) in want.iter().enumerate() {
            assert_eq!(cf.convergents()[l], (BigInt::from(*p), BigInt::from(*q)));
        }
        assert_eq!(cf.period(), Some((1, 1)));
        assert_eq!(cf.quotient_bound(), Some(2));
    }

    #[test]
    fn golden_quotients() {
        let x = Real::parse("(sqrt(5)-1)/2").unwrap();
        let cf = ContinuedFraction::expand(&x, 30, 256).unwrap();
        assert_eq!(cf.partial_quotients()[0], 0);
        assert!(cf.partial_quotients()[1..].iter().all(|&a| a == 1));
    }

    #[test]
    fn interval_path_matches_exact_path() {
        // sqrt(2)+sqrt(3) is quartic, so it goes through the enclosure
        let x = Real::parse("sqrt(2)+sqrt(3)-3").unwrap();
        assert!(x.quadratic().is_none());
        let cf = ContinuedFraction::expand(&x, 20, 256).unwrap();
        // reference expansion computed independently at high precision
        let reference = [0i64, 6, 1, 5, 7, 1, 1, 4, 1, 38, 43, 1];
        assert_eq!(&cf.partial_quotients()[..reference.len()], &reference);
        // and the exact path agrees with the enclosure for a quadratic surd
        let y = Real::parse("(sqrt(7)+1)/3").unwrap();
        let exact = ContinuedFraction::expand(&y, 25, 256).unwrap();
        let enclosed = ContinuedFraction::from_interval(&y, 25, 256).unwrap();
        assert_eq!(exact.partial_quotients(), enclosed.partial_quotients());
    }

    #[test]
    fn precision_exhaustion_is_reported() {
        let x = Real::parse("sqrt(2)+sqrt(3)-3").unwrap();
        let err = ContinuedFraction::expand(&x, 200, 64).unwrap_err();
        assert!(matches!(err, Error::PrecisionExhausted(_)));
    }

    #[test]
    fn rational_rejected() {
        assert!(matches!(
            ContinuedFraction::expand(&Real::ratio(3, 7), 5, 128),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn convergent_invariants() {
        for lit in ["sqrt(2)-1", "(sqrt(5)-1)/2", "sqrt(3)-1", "sqrt(2)+sqrt(3)-3", "sqrt(19)-4"] {
            let x = Real::parse(lit).unwrap();
            let cf = ContinuedFraction::expand(&x, 25, 320).unwrap();
            let iv = x.interval(320).unwrap();
            let a = cf.partial_quotients();
            let c = cf.convergents();
            for l in 2..c.len() {
                assert_eq!(c[l].0, BigInt::from(a[l]) * &c[l - 1].0 + &c[l - 2].0);
                assert_eq!(c[l].1, BigInt::from(a[l]) * &c[l - 1].1 + &c[l - 2].1);
            }
            for l in 2..c.len() {
                assert!(c[l].1 > c[l - 1].1, "{lit}: q not increasing at {l}");
            }
            for l in 0..c.len() - 1 {
                let approx = frac_of(&c[l].0, &c[l].1);
                let err = (&iv.mid() - &approx).abs();
                let bound = BigRational::new(BigInt::one(), &c[l].1 * &c[l + 1].1);
                assert!(err < bound, "{lit}: convergent error at {l}");
                // alternating sign of x - p/q
                let sign = (&iv.mid() - &approx).is_positive();
                assert_eq!(sign, l % 2 == 0, "{lit}: sign at {l}");
                // q |q x - p| < 1
                let prod = (&iv.mid() * BigRational::from_integer(c[l].1.clone()) - BigRational::from_integer(c[l].0.clone())).abs()
                    * BigRational::from_integer(c[l].1.clone());
                assert!(prod < BigRational::one());
            }
        }
    }

    #[test]
    fn max_quotient_window() {
        let x = Real::parse("sqrt(19)-4").unwrap(); // [0; 2,1,3,1,2,8, ...]
        let cf = ContinuedFraction::expand(&x, 20, 256).unwrap();
        assert_eq!(&cf.partial_quotients()[..8], &[0, 2, 1, 3, 1, 2, 8, 2]);
        assert_eq!(cf.max_quotient_up_to(1), Some(2));
        assert_eq!(cf.quotient_bound(), Some(8));
    }
}
