use serde::Serialize;

use crate::algebraic::Real;
use crate::dd::Dd;
use crate::error::{Error, Result};

/// Flow direction `α ∈ R^d`, kept symbolically with a double-double shadow.
#[derive(Debug, Clone)]
pub struct Direction {
    alpha: Vec<Real>,
    approx: Vec<Dd>,
}

/// How a general direction was brought to the form `α_d = 1`.
///
/// The flow `s + tα` equals, after permuting coordinates by `perm`, dividing
/// `α` by `c = α_perm[d-1]` and (when `c < 0`) reflecting `x ↦ 1 − x`, the
/// flow of `direction` run for time `|c| T`. Hence
/// `Δ_T(s, α, P) = Δ_{|c|T}(s', α', P') / |c|`.
#[derive(Debug, Clone)]
pub struct Normalization {
    pub direction: Direction,
    /// `perm[i]` is the original axis placed at position `i`.
    pub perm: Vec<usize>,
    pub scale: Real,
    pub reflected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalizationMeta {
    pub perm: Vec<usize>,
    pub scale: String,
    pub reflected: bool,
}

impl Direction {
    pub fn new(alpha: Vec<Real>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::InvalidInput("direction needs d >= 2 coordinates".into()));
        }
        let approx: Vec<Dd> = alpha.iter().map(|a| a.approx()).collect();
        if approx.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("direction has a non-finite coordinate".into()));
        }
        if approx.iter().all(|a| a.hi == 0.0) {
            return Err(Error::InvalidInput("direction is zero".into()));
        }
        Ok(Direction { alpha, approx })
    }

    pub fn parse<S: AsRef<str>>(literals: &[S]) -> Result<Self> {
        Self::new(literals.iter().map(|s| Real::parse(s.as_ref())).collect::<Result<_>>()?)
    }

    /// `(α_1, …, α_{d-1}, 1)`.
    pub fn from_star(alpha_star: Vec<Real>) -> Result<Self> {
        let mut a = alpha_star;
        a.push(Real::from_int(1));
        Self::new(a)
    }

    pub fn from_f64(alpha: &[f64]) -> Result<Self> {
        Self::new(alpha.iter().map(|&x| Real::from_f64(x)).collect::<Result<_>>()?)
    }

    pub fn d(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[Real] {
        &self.alpha
    }

    pub fn approx(&self) -> &[Dd] {
        &self.approx
    }

    /// `α* = (α_1, …, α_{d-1})`.
    pub fn star(&self) -> &[Dd] {
        &self.approx[..self.d() - 1]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.approx.iter().map(|a| a.to_f64()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.approx.iter().map(|a| *a * *a).sum::<Dd>().sqrt().to_f64()
    }

    pub fn is_normalized(&self) -> bool {
        self.alpha[self.d() - 1].as_rational().is_some_and(|r| r == num_rational::BigRational::from_integer(1.into()))
    }

    pub fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("direction {self} does not have last coordinate 1")))
        }
    }

    /// Identity when already normalized; otherwise moves the largest
    /// coordinate last and divides by it.
    pub fn normalize(&self) -> Result<Normalization> {
        let d = self.d();
        if self.is_normalized() {
            return Ok(Normalization {
                direction: self.clone(),
                perm: (0..d).collect(),
                scale: Real::from_int(1),
                reflected: false,
            });
        }
        let big = (0..d)
            .max_by(|&i, &j| self.approx[i].abs().partial_cmp(&self.approx[j].abs()).unwrap())
            .unwrap();
        let mut perm: Vec<usize> = (0..d).collect();
        perm.swap(big, d - 1);
        let c = self.alpha[perm[d - 1]].clone();
        let reflected = c.approx().hi < 0.0;
        let mut out = Vec::with_capacity(d);
        for &p in &perm[..d - 1] {
            out.push(&self.alpha[p] / &c);
        }
        out.push(Real::from_int(1));
        let scale = if reflected { -&c } else { c };
        Ok(Normalization { direction: Direction::new(out)?, perm, scale, reflected })
    }
}

impl Normalization {
    pub fn is_identity(&self) -> bool {
        !self.reflected && self.perm.iter().enumerate().all(|(i, &p)| i == p) && self.scale.as_rational().is_some_and(|r| r == num_rational::BigRational::from_integer(1.into()))
    }

    /// Maps a point of the original torus to the normalized one.
    pub fn map_point(&self, x: &[f64]) -> Vec<f64> {
        self.perm
            .iter()
            .map(|&p| {
                let v = x[p];
                if self.reflected {
                    let r = 1.0 - v;
                    if r >= 1.0 {
                        r - 1.0
                    } else {
                        r
                    }
                } else {
                    v
                }
            })
            .collect()
    }

    pub fn meta(&self) -> NormalizationMeta {
        NormalizationMeta { perm: self.perm.clone(), scale: self.scale.to_string(), reflected: self.reflected }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.alpha.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}
