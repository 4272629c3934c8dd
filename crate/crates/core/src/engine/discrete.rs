use rayon::prelude::*;

use super::unit_rep;
use crate::algebraic::Real;
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::geometry::{Polytope, SectionEvaluator, SectionFunction2D};

/// Test function for `D_N(s, α, f) = Σ_{k<N} f({s + kα}) − N ∫ f`.
#[derive(Debug, Clone)]
pub enum DiscreteTarget {
    /// Half-open box `Π [lo_k, hi_k)`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Polytope(Polytope),
    /// Section function of a polygon, with mean `λ(P)`.
    Section2D(SectionFunction2D),
    /// Pointwise section function, with mean `λ(P)`.
    Section(SectionEvaluator),
    Constant(f64),
}

impl DiscreteTarget {
    pub fn dim(&self) -> Option<usize> {
        match self {
            DiscreteTarget::Box { lo, .. } => Some(lo.len()),
            DiscreteTarget::Polytope(p) => Some(p.d()),
            DiscreteTarget::Section2D(_) => Some(1),
            DiscreteTarget::Section(ev) => Some(ev.polytope().d() - 1),
            DiscreteTarget::Constant(_) => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            DiscreteTarget::Box { lo, hi } => {
                let inside = x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v < *b);
                inside as u8 as f64
            }
            DiscreteTarget::Polytope(p) => p.contains(x, 0.0) as u8 as f64,
            DiscreteTarget::Section2D(s) => s.eval(x[0]),
            DiscreteTarget::Section(ev) => ev.f(x),
            DiscreteTarget::Constant(c) => *c,
        }
    }

    /// `∫_{[0,1]^m} f`.
    pub fn mean(&self) -> f64 {
        match self {
            DiscreteTarget::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| (b - a).max(0.0)).product(),
            DiscreteTarget::Polytope(p) => p.volume(),
            DiscreteTarget::Section2D(s) => s.volume,
            DiscreteTarget::Section(ev) => ev.polytope().volume(),
            DiscreteTarget::Constant(c) => *c,
        }
    }

    fn check(&self, alpha: &[Real], s: &[f64]) -> Result<()> {
        if alpha.len() != s.len() {
            return Err(Error::InvalidInput(format!("α has {} coordinates, s has {}", alpha.len(), s.len())));
        }
        if let Some(m) = self.dim() {
            if m != alpha.len() {
                return Err(Error::InvalidInput(format!("target lives in dimension {m}, α in {}", alpha.len())));
            }
        }
        if let DiscreteTarget::Box { lo, hi } = self {
            if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(0.0 <= *a && a <= b && *b <= 1.0)) {
                return Err(Error::InvalidInput("box must satisfy 0 <= lo <= hi <= 1".into()));
            }
        }
        Ok(())
    }
}

struct Orbit {
    s: Vec<Dd>,
    alpha: Vec<Dd>,
}

impl Orbit {
    fn point(&self, k: i64) -> Vec<f64> {
        self.s.iter().zip(&self.alpha).map(|(&s, &a)| unit_rep((s + a.mul_i64(k).fract()).fract().to_f64())).collect()
    }
}

/// `D_N(s, α, f)`; the `k`-th point is `s + kα` with an exact integer multiple.
pub fn discrete_discrepancy(alpha: &[Real], s: &[f64], target: &DiscreteTarget, n: u64) -> Result<f64> {
    target.check(alpha, s)?;
    let orbit = Orbit { s: s.iter().map(|&x| Dd::from_f64(x)).collect(), alpha: alpha.iter().map(|a| a.approx()).collect() };
    let chunk = 1u64 << 14;
    let starts: Vec<u64> = (0..n).step_by(chunk as usize).collect();
    let parts: Vec<Dd> = starts
        .par_iter()
        .map(|&c| {
            let mut acc = Dd::ZERO;
            for k in c..(c + chunk).min(n) {
                acc += target.eval(&orbit.point(k as i64));
            }
            acc
        })
        .collect();
    let total = parts.into_iter().fold(Dd::ZERO, |a, b| a + b);
    Ok((total - Dd::from_f64(n as f64) * target.mean()).to_f64())
}

/// `[D_1, …, D_{n_max}]`.
pub fn discrete_discrepancy_series(alpha: &[Real], s: &[f64], target: &DiscreteTarget, n_max: u64) -> Result<Vec<f64>> {
    target.check(alpha, s)?;
    let orbit = Orbit { s: s.iter().map(|&x| Dd::from_f64(x)).collect(), alpha: alpha.iter().map(|a| a.approx()).collect() };
    let values: Vec<f64> = (0..n_max).into_par_iter().map(|k| target.eval(&orbit.point(k as i64))).collect();
    let mean = Dd::from_f64(target.mean());
    let mut acc = Dd::ZERO;
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            acc += v;
            (acc - mean.mul_i64(k as i64 + 1)).to_f64()
        })
        .collect())
}
