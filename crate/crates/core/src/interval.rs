//! Closed-interval arithmetic and natural interval extensions of expression
//! graphs. These supply the `X × P` bounds that every relaxation consumes.
//!
//! Elemental results are inflated outward by one unit in the last place in
//! lieu of directed rounding; the validity tolerances used downstream sit far
//! above ulp level.

use crate::expr::{ExprGraph, Node};
use std::fmt;

/// A closed, bounded, nonempty real interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalError {
    /// Lower bound above upper, or a non-finite endpoint.
    BadBounds,
    /// Division by an interval containing zero, or a negative power of an
    /// interval containing zero.
    DivisionByZero,
    /// An endpoint overflowed to a non-finite value.
    Overflow,
}

impl fmt::Display for IntervalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntervalError::BadBounds => write!(f, "invalid interval bounds"),
            IntervalError::DivisionByZero => write!(f, "division by an interval containing zero"),
            IntervalError::Overflow => write!(f, "interval endpoint overflow"),
        }
    }
}

impl std::error::Error for IntervalError {}

fn outward(lo: f64, hi: f64) -> Result<Interval, IntervalError> {
    if !lo.is_finite() || !hi.is_finite() {
        return Err(IntervalError::Overflow);
    }
    Ok(Interval { lo: lo.next_down(), hi: hi.next_up() })
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_finite() && hi.is_finite() && lo <= hi {
            Ok(Interval { lo, hi })
        } else {
            Err(IntervalError::BadBounds)
        }
    }

    pub fn point(v: f64) -> Self {
        assert!(v.is_finite(), "point interval must be finite");
        Interval { lo: v, hi: v }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }

    pub fn add(&self, rhs: &Interval) -> Result<Interval, IntervalError> {
        outward(self.lo + rhs.lo, self.hi + rhs.hi)
    }

    pub fn sub(&self, rhs: &Interval) -> Result<Interval, IntervalError> {
        outward(self.lo - rhs.hi, self.hi - rhs.lo)
    }

    pub fn mul(&self, rhs: &Interval) -> Result<Interval, IntervalError> {
        let products = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = products.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        outward(lo, hi)
    }

    pub fn div(&self, rhs: &Interval) -> Result<Interval, IntervalError> {
        if rhs.lo <= 0.0 && rhs.hi >= 0.0 {
            return Err(IntervalError::DivisionByZero);
        }
        let quotients = [
            self.lo / rhs.lo,
            self.lo / rhs.hi,
            self.hi / rhs.lo,
            self.hi / rhs.hi,
        ];
        let lo = quotients.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = quotients.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        outward(lo, hi)
    }

    pub fn exp(&self) -> Result<Interval, IntervalError> {
        let out = outward(self.lo.exp(), self.hi.exp())?;
        // exp is positive; the ulp step below a subnormal result may cross zero
        Ok(Interval { lo: out.lo.max(0.0), hi: out.hi })
    }

    /// Parity-aware integer power. Negative exponents require `0 ∉ self`.
    pub fn powi(&self, m: i32) -> Result<Interval, IntervalError> {
        if m == 0 {
            return Ok(Interval::point(1.0));
        }
        if m == 1 {
            return Ok(*self);
        }
        if m < 0 && self.lo <= 0.0 && self.hi >= 0.0 {
            return Err(IntervalError::DivisionByZero);
        }
        let fl = self.lo.powi(m);
        let fh = self.hi.powi(m);
        if m > 0 && m % 2 == 0 && self.lo < 0.0 && self.hi > 0.0 {
            // even power over a zero-straddling interval: envelope bottoms at 0
            return outward(0.0, fl.max(fh));
        }
        // on any interval not straddling zero (and for odd positive powers
        // everywhere) x^m is monotone, so the endpoints bound the range
        outward(fl.min(fh), fl.max(fh))
    }

    /// Natural interval extension of a graph over boxes for `z` and `p`.
    pub fn eval_graph(
        graph: &ExprGraph,
        z: &[Interval],
        p: &[Interval],
    ) -> Result<Interval, IntervalError> {
        assert_eq!(z.len(), graph.n_z(), "state dimension mismatch");
        assert_eq!(p.len(), graph.n_p(), "parameter dimension mismatch");
        let mut vals: Vec<Interval> = Vec::with_capacity(graph.nodes().len());
        for node in graph.nodes() {
            let v = match *node {
                Node::Const(c) => Interval::point(c),
                Node::VarZ(k) => z[k],
                Node::VarP(k) => p[k],
                Node::Neg(a) => vals[a].neg(),
                Node::Add(a, b) => vals[a].add(&vals[b])?,
                Node::Sub(a, b) => vals[a].sub(&vals[b])?,
                Node::Mul(a, b) => vals[a].mul(&vals[b])?,
                Node::Div(a, b) => vals[a].div(&vals[b])?,
                Node::Exp(a) => vals[a].exp()?,
                Node::PowInt(a, m) => vals[a].powi(m)?,
            };
            vals.push(v);
        }
        Ok(vals[graph.root()])
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Convenience alias used throughout: evaluate a graph over interval boxes.
pub fn eval_interval(
    graph: &ExprGraph,
    z: &[Interval],
    p: &[Interval],
) -> Result<Interval, IntervalError> {
    Interval::eval_graph(graph, z, p)
}
