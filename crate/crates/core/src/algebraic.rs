//! Algebraic-number literals.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr   := term   (('+' | '-') term)*
//! term   := unary  (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | atom
//! atom   := number | 'sqrt' '(' expr ')' | '(' expr ')'
//! number := digits ['.' digits] [('e' | 'E') ['+' | '-'] digits]
//! ```
//!
//! Decimal numbers are read exactly as rationals, so `"0.1"` is `1/10`, not the
//! nearest double. A [`Real`] keeps the expression tree and evaluates it lazily:
//! to double-double for the hot loops, to a rigorous rational interval at any
//! requested precision, and exactly when the value lies in a quadratic field.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::{BigInt, Sign};
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::dd::Dd;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Rational(BigRational),
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Sqrt(Arc<Expr>),
}

/// A real number given by an algebraic expression, with a cached double-double value.
#[derive(Clone)]
pub struct Real {
    expr: Arc<Expr>,
    approx: Dd,
}

impl Real {
    pub fn parse(text: &str) -> Result<Real> {
        let mut p = Parser { src: text.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Real::from_expr(Arc::new(e))
    }

    pub fn from_expr(expr: Arc<Expr>) -> Result<Real> {
        let approx = eval_dd(&expr)?;
        Ok(Real { expr, approx })
    }

    pub fn from_rational(r: BigRational) -> Real {
        let approx = rational_to_dd(&r);
        Real { expr: Arc::new(Expr::Rational(r)), approx }
    }

    pub fn from_int(n: i64) -> Real {
        Real::from_rational(BigRational::from_integer(n.into()))
    }

    pub fn ratio(num: i64, den: i64) -> Real {
        Real::from_rational(BigRational::new(num.into(), den.into()))
    }

    /// Exact dyadic value of an `f64`.
    pub fn from_f64(x: f64) -> Result<Real> {
        BigRational::from_float(x)
            .map(Real::from_rational)
            .ok_or_else(|| Error::InvalidInput(format!("non-finite value {x}")))
    }

    pub fn sqrt_of(self) -> Result<Real> {
        Real::from_expr(Arc::new(Expr::Sqrt(self.expr)))
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    #[inline]
    pub fn approx(&self) -> Dd {
        self.approx
    }

    #[inline]
    pub fn to_f64(&self) -> f64 {
        self.approx.to_f64()
    }

    /// Exact value when it is rational.
    pub fn as_rational(&self) -> Option<BigRational> {
        let q = self.quadratic()?;
        if q.b.is_zero() {
            Some(q.a)
        } else {
            None
        }
    }

    /// Exact representation in `Q(sqrt D)`, if the expression stays inside one
    /// quadratic field.
    pub fn quadratic(&self) -> Option<QuadSurd> {
        eval_quad(&self.expr)
    }

    /// Rigorous enclosure `[lo, hi]` with endpoints rounded outward to `bits`
    /// fractional bits after every operation.
    pub fn interval(&self, bits: u32) -> Result<Interval> {
        eval_interval(&self.expr, bits)
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({} ≈ {:e})", self, self.approx.to_f64())
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(&self.expr, f, 0)
    }
}

impl PartialEq for Real {
    /// Structural equality of the expressions.
    fn eq(&self, other: &Self) -> bool {
        self.expr == other.expr
    }
}

fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>, parent_prec: u8) -> fmt::Result {
    // precedence: 1 = additive, 2 = multiplicative, 3 = unary, 4 = atom
    let (prec, body): (u8, Box<dyn Fn(&mut fmt::Formatter<'_>) -> fmt::Result + '_>) = match e {
        Expr::Rational(r) => {
            if r.is_integer() && !r.is_negative() {
                (4, Box::new(move |f| write!(f, "{}", r.numer())))
            } else if r.is_integer() {
                (3, Box::new(move |f| write!(f, "-{}", r.numer().abs())))
            } else if r.is_negative() {
                (3, Box::new(move |f| write!(f, "-({}/{})", r.numer().abs(), r.denom())))
            } else {
                (2, Box::new(move |f| write!(f, "{}/{}", r.numer(), r.denom())))
            }
        }
        Expr::Neg(a) => (3, Box::new(move |f| {
            write!(f, "-")?;
            write_expr(a, f, 3)
        })),
        Expr::Add(a, b) => (1, Box::new(move |f| {
            write_expr(a, f, 1)?;
            write!(f, "+")?;
            write_expr(b, f, 2)
        })),
        Expr::Sub(a, b) => (1, Box::new(move |f| {
            write_expr(a, f, 1)?;
            write!(f, "-")?;
            write_expr(b, f, 2)
        })),
        Expr::Mul(a, b) => (2, Box::new(move |f| {
            write_expr(a, f, 2)?;
            write!(f, "*")?;
            write_expr(b, f, 3)
        })),
        Expr::Div(a, b) => (2, Box::new(move |f| {
            write_expr(a, f, 2)?;
            write!(f, "/")?;
            write_expr(b, f, 3)
        })),
        Expr::Sqrt(a) => (4, Box::new(move |f| {
            write!(f, "sqrt(")?;
            write_expr(a, f, 0)?;
            write!(f, ")")
        })),
    };
    if prec < parent_prec {
        write!(f, "(")?;
        body(f)?;
        write!(f, ")")
    } else {
        body(f)
    }
}

macro_rules! real_binop {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl $trait<&Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                let expr = Arc::new(Expr::$variant(self.expr.clone(), rhs.expr.clone()));
                let approx = self.approx.$method(rhs.approx);
                Real { expr, approx }
            }
        }
        impl $trait for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                (&self).$method(&rhs)
            }
        }
    };
}

real_binop!(Add, add, Add);
real_binop!(Sub, sub, Sub);
real_binop!(Mul, mul, Mul);
real_binop!(Div, div, Div);

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real { expr: Arc::new(Expr::Neg(self.expr.clone())), approx: -self.approx }
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        -&self
    }
}

// ---------------------------------------------------------------------------
// parsing

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Add(Arc::new(lhs), Arc::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Arc::new(lhs), Arc::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = Expr::Mul(Arc::new(lhs), Arc::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = Expr::Div(Arc::new(lhs), Arc::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Arc::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                if name != b"sqrt" {
                    self.pos = start;
                    return Err(self.err("unknown function (only sqrt is supported)"));
                }
                self.expect(b'(')?;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::Sqrt(Arc::new(e)))
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let mut digits = String::new();
        let mut frac_digits = 0u32;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            digits.push(self.src[self.pos] as char);
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                digits.push(self.src[self.pos] as char);
                frac_digits += 1;
                self.pos += 1;
            }
        }
        if digits.is_empty() {
            self.pos = start;
            return Err(self.err("malformed number"));
        }
        let mut exp: i64 = 0;
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            self.pos += 1;
            let mut sign = 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-') {
                if self.src[self.pos] == b'-' {
                    sign = -1;
                }
                self.pos += 1;
            }
            let es = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let text = std::str::from_utf8(&self.src[es..self.pos]).unwrap_or("");
            exp = sign * text.parse::<i64>().map_err(|_| self.err("malformed exponent"))?;
            if exp.abs() > 4000 {
                return Err(self.err("exponent out of range"));
            }
        }
        let mantissa: BigInt = digits.parse().map_err(|_| self.err("malformed number"))?;
        let scale = exp - frac_digits as i64;
        let ten = BigInt::from(10);
        let r = if scale >= 0 {
            BigRational::from_integer(mantissa * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(mantissa, num_traits::pow(ten, (-scale) as usize))
        };
        Ok(Expr::Rational(r))
    }
}

// ---------------------------------------------------------------------------
// double-double evaluation

pub(crate) fn rational_to_dd(r: &BigRational) -> Dd {
    let hi = r.to_f64().unwrap_or(f64::NAN);
    if !hi.is_finite() {
        return Dd::from_f64(hi);
    }
    let rem = r - BigRational::from_float(hi).expect("finite");
    let lo = rem.to_f64().unwrap_or(0.0);
    Dd::new(hi, 0.0) + lo
}

fn eval_dd(e: &Expr) -> Result<Dd> {
    let v = match e {
        Expr::Rational(r) => rational_to_dd(r),
        Expr::Neg(a) => -eval_dd(a)?,
        Expr::Add(a, b) => eval_dd(a)? + eval_dd(b)?,
        Expr::Sub(a, b) => eval_dd(a)? - eval_dd(b)?,
        Expr::Mul(a, b) => eval_dd(a)? * eval_dd(b)?,
        Expr::Div(a, b) => {
            let d = eval_dd(b)?;
            if d.hi == 0.0 {
                return Err(Error::InvalidInput("division by zero in literal".into()));
            }
            eval_dd(a)? / d
        }
        Expr::Sqrt(a) => {
            let x = eval_dd(a)?;
            if x.hi < 0.0 {
                return Err(Error::InvalidInput("square root of a negative number".into()));
            }
            x.sqrt()
        }
    };
    if !v.is_finite() {
        return Err(Error::InvalidInput("literal does not evaluate to a finite number".into()));
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// exact quadratic arithmetic

/// `a + b sqrt(d)` with rational `a, b` and squarefree integer `d >= 2`
/// (or `d = 1` with `b = 0` for rationals).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadSurd {
    pub a: BigRational,
    pub b: BigRational,
    pub d: BigInt,
}

impl QuadSurd {
    pub fn rational(a: BigRational) -> QuadSurd {
        QuadSurd { a, b: BigRational::zero(), d: BigInt::one() }
    }

    fn common_d(&self, other: &QuadSurd) -> Option<BigInt> {
        match (self.b.is_zero(), other.b.is_zero()) {
            (true, true) => Some(BigInt::one()),
            (false, true) => Some(self.d.clone()),
            (true, false) => Some(other.d.clone()),
            (false, false) if self.d == other.d => Some(self.d.clone()),
            _ => None,
        }
    }

    fn normalized(mut self) -> QuadSurd {
        if self.b.is_zero() {
            self.d = BigInt::one();
        }
        self
    }

    fn add(&self, o: &QuadSurd) -> Option<QuadSurd> {
        let d = self.common_d(o)?;
        Some(QuadSurd { a: &self.a + &o.a, b: &self.b + &o.b, d }.normalized())
    }

    fn neg(&self) -> QuadSurd {
        QuadSurd { a: -&self.a, b: -&self.b, d: self.d.clone() }
    }

    fn mul(&self, o: &QuadSurd) -> Option<QuadSurd> {
        let d = self.common_d(o)?;
        let dr = BigRational::from_integer(d.clone());
        let a = &self.a * &o.a + &self.b * &o.b * dr;
        let b = &self.a * &o.b + &self.b * &o.a;
        Some(QuadSurd { a, b, d }.normalized())
    }

    fn recip(&self) -> Option<QuadSurd> {
        let dr = BigRational::from_integer(self.d.clone());
        let norm = &self.a * &self.a - &self.b * &self.b * dr;
        if norm.is_zero() {
            return None;
        }
        Some(QuadSurd { a: &self.a / &norm, b: -&self.b / &norm, d: self.d.clone() }.normalized())
    }

    fn sqrt(&self) -> Option<QuadSurd> {
        if !self.b.is_zero() || self.a.is_negative() {
            return None;
        }
        // sqrt(p/q) = sqrt(p q) / q, then pull square factors out of p q
        let p = self.a.numer().clone();
        let q = self.a.denom().clone();
        let pq = &p * &q;
        let (s, core) = squarefree_split(&pq)?;
        let coef = BigRational::new(s, q);
        if core.is_one() {
            Some(QuadSurd::rational(coef))
        } else {
            Some(QuadSurd { a: BigRational::zero(), b: coef, d: core })
        }
    }

    /// `(P, Q, D)` with value `(P + sqrt D)/Q` and `Q | D - P^2`, the form the
    /// integer continued-fraction recurrence needs. `None` when rational.
    pub fn surd_form(&self) -> Option<(BigInt, BigInt, BigInt)> {
        if self.b.is_zero() {
            return None;
        }
        // a + b sqrt(d) = (A + B sqrt d)/C over a common denominator C > 0
        let c = self.a.denom().lcm(self.b.denom());
        let big_a = self.a.numer() * (&c / self.a.denom());
        let big_b = self.b.numer() * (&c / self.b.denom());
        // (A + B sqrt d)/C = (A C + sqrt(B^2 d C^2)) / C^2 when B > 0; negate Q when B < 0
        let sign = if big_b.is_negative() { -1 } else { 1 };
        let dd = &big_b * &big_b * &self.d * &c * &c;
        let p = &big_a * &c * sign;
        let q = &c * &c * sign;
        debug_assert!({ let r: BigInt = (&dd - &p * &p) % &q; r.is_zero() });
        Some((p, q, dd))
    }
}

/// Writes `n = s^2 * core` with `core` squarefree. Gives up on large inputs.
fn squarefree_split(n: &BigInt) -> Option<(BigInt, BigInt)> {
    if n.is_zero() {
        return Some((BigInt::zero(), BigInt::one()));
    }
    let mut m = n.to_u128()?;
    if m > 1u128 << 80 {
        return None;
    }
    let mut s: u128 = 1;
    let mut core: u128 = 1;
    let mut p: u128 = 2;
    while p * p * p <= m.max(8) && p < 1 << 27 {
        while m % (p * p) == 0 {
            m /= p * p;
            s *= p;
        }
        if m % p == 0 {
            m /= p;
            core *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    // what remains has no prime factor below its cube root: it is 1, a prime,
    // a product of two distinct primes, or a prime square
    let r = m.sqrt();
    if r * r == m && m > 1 {
        s *= r;
    } else {
        core *= m;
    }
    Some((BigInt::from(s), BigInt::from(core)))
}

fn eval_quad(e: &Expr) -> Option<QuadSurd> {
    match e {
        Expr::Rational(r) => Some(QuadSurd::rational(r.clone())),
        Expr::Neg(a) => Some(eval_quad(a)?.neg()),
        Expr::Add(a, b) => eval_quad(a)?.add(&eval_quad(b)?),
        Expr::Sub(a, b) => eval_quad(a)?.add(&eval_quad(b)?.neg()),
        Expr::Mul(a, b) => eval_quad(a)?.mul(&eval_quad(b)?),
        Expr::Div(a, b) => eval_quad(a)?.mul(&eval_quad(b)?.recip()?),
        Expr::Sqrt(a) => eval_quad(a)?.sqrt(),
    }
}

// ---------------------------------------------------------------------------
// rigorous interval evaluation

#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    fn point(r: BigRational) -> Interval {
        Interval { lo: r.clone(), hi: r }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(2.into())
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    fn round_out(self, bits: u32) -> Interval {
        let scale = BigInt::one() << bits;
        let lo = (&self.lo * &scale).floor() / &scale;
        let hi = (&self.hi * &scale).ceil() / &scale;
        Interval { lo, hi }
    }
}

fn isqrt_floor(n: &BigInt) -> BigInt {
    if n.sign() != Sign::Plus {
        return BigInt::zero();
    }
    n.sqrt()
}

fn eval_interval(e: &Expr, bits: u32) -> Result<Interval> {
    let guard = bits + 16;
    let iv = match e {
        Expr::Rational(r) => Interval::point(r.clone()),
        Expr::Neg(a) => {
            let x = eval_interval(a, bits)?;
            Interval { lo: -x.hi, hi: -x.lo }
        }
        Expr::Add(a, b) => {
            let (x, y) = (eval_interval(a, bits)?, eval_interval(b, bits)?);
            Interval { lo: x.lo + y.lo, hi: x.hi + y.hi }
        }
        Expr::Sub(a, b) => {
            let (x, y) = (eval_interval(a, bits)?, eval_interval(b, bits)?);
            Interval { lo: x.lo - y.hi, hi: x.hi - y.lo }
        }
        Expr::Mul(a, b) => {
            let (x, y) = (eval_interval(a, bits)?, eval_interval(b, bits)?);
            mul_iv(&x, &y)
        }
        Expr::Div(a, b) => {
            let (x, y) = (eval_interval(a, bits)?, eval_interval(b, bits)?);
            if y.contains_zero() {
                return Err(Error::PrecisionExhausted(
                    "divisor interval contains zero; raise precision".into(),
                ));
            }
            let inv = Interval { lo: y.hi.recip(), hi: y.lo.recip() };
            mul_iv(&x, &inv)
        }
        Expr::Sqrt(a) => {
            let x = eval_interval(a, bits)?;
            if x.hi.is_negative() {
                return Err(Error::InvalidInput("square root of a negative number".into()));
            }
            let scale2 = BigInt::one() << (2 * guard);
            let scale = BigInt::one() << guard;
            let lo_n = (&x.lo * BigRational::from_integer(scale2.clone())).floor().to_integer();
            let hi_n = (&x.hi * BigRational::from_integer(scale2)).ceil().to_integer();
            let lo_r = isqrt_floor(&lo_n);
            let mut hi_r = isqrt_floor(&hi_n);
            if &hi_r * &hi_r < hi_n {
                hi_r += 1;
            }
            Interval {
                lo: BigRational::new(lo_r, scale.clone()),
                hi: BigRational::new(hi_r, scale),
            }
        }
    };
    Ok(iv.round_out(guard))
}

fn mul_iv(x: &Interval, y: &Interval) -> Interval {
    let c = [&x.lo * &y.lo, &x.lo * &y.hi, &x.hi * &y.lo, &x.hi * &y.hi];
    let lo = c.iter().min().cloned().expect("four");
    let hi = c.iter().max().cloned().expect("four");
    Interval { lo, hi }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_forms() {
        let a = Real::parse("sqrt(2)-1").unwrap();
        assert!((a.to_f64() - (2f64.sqrt() - 1.0)).abs() < 3e-16);
        let g = Real::parse("(sqrt(5)-1)/2").unwrap();
        assert!((g.to_f64() - 0.6180339887498949).abs() < 3e-16);
        let d = Real::parse("0.1").unwrap();
        assert_eq!(d.as_rational().unwrap(), BigRational::new(1.into(), 10.into()));
        assert_eq!(Real::parse("1.5e-3").unwrap().as_rational().unwrap(), BigRational::new(3.into(), 2000.into()));
        assert_eq!(Real::parse("-3").unwrap().to_f64(), -3.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(Real::parse("sqrt(2"), Err(Error::Parse { .. })));
        assert!(matches!(Real::parse("cbrt(2)"), Err(Error::Parse { .. })));
        assert!(matches!(Real::parse("1 2"), Err(Error::Parse { .. })));
        assert!(matches!(Real::parse("1/0"), Err(Error::InvalidInput(_))));
        assert!(matches!(Real::parse("sqrt(-2)"), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn display_round_trips() {
        for s in ["sqrt(2)-1", "(sqrt(5)-1)/2", "1/3", "-(2/3)", "sqrt(2)*sqrt(3)", "1-(2-3)", "-sqrt(2)"] {
            let r = Real::parse(s).unwrap();
            let again = Real::parse(&r.to_string()).unwrap();
            assert_eq!(r, again, "{s} -> {r}");
        }
    }

    #[test]
    fn quadratic_detection() {
        let q = Real::parse("(sqrt(5)-1)/2").unwrap().quadratic().unwrap();
        assert_eq!(q.d, BigInt::from(5));
        assert_eq!(q.a, BigRational::new((-1).into(), 2.into()));
        // sqrt(8) = 2 sqrt(2), sqrt(1/2) = sqrt(2)/2
        let q = Real::parse("sqrt(8) + sqrt(1/2)").unwrap().quadratic().unwrap();
        assert_eq!(q.d, BigInt::from(2));
        assert_eq!(q.b, BigRational::new(5.into(), 2.into()));
        assert!(Real::parse("sqrt(2)+sqrt(3)").unwrap().quadratic().is_none());
        assert_eq!(Real::parse("sqrt(2)*sqrt(2)").unwrap().as_rational().unwrap(), BigRational::from_integer(2.into()));
        assert_eq!(Real::parse("1/(sqrt(2)-1)").unwrap().quadratic().unwrap().a, BigRational::one());
    }

    #[test]
    fn surd_form_divisibility() {
        for s in ["sqrt(2)-1", "(sqrt(5)-1)/2", "1/sqrt(2)", "3/7 - 2*sqrt(11)/5"] {
            let (p, q, d) = Real::parse(s).unwrap().quadratic().unwrap().surd_form().unwrap();
            let r: BigInt = (&d - &p * &p) % &q;
            assert!(r.is_zero(), "{s}");
            let val = (p.to_f64().unwrap() + d.to_f64().unwrap().sqrt()) / q.to_f64().unwrap();
            assert!((val - Real::parse(s).unwrap().to_f64()).abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn interval_encloses_and_shrinks() {
        let r = Real::parse("(sqrt(5)-1)/2 + sqrt(3)/7").unwrap();
        let iv = r.interval(200).unwrap();
        let v = BigRational::from_float(r.to_f64()).unwrap();
        let eps = BigRational::new(1.into(), BigInt::one() << 50);
        assert!(iv.lo <= &v + &eps && &v - &eps <= iv.hi);
        let w = iv.width();
        assert!(w < BigRational::new(1.into(), BigInt::one() << 190));
    }
}
