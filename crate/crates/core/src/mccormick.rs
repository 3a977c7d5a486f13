//! Forward-mode McCormick relaxation arithmetic with subgradient propagation.
//!
//! A [`McCormick`] scalar carries interval bounds, convex/concave relaxation
//! values at one evaluation point, and one subgradient for each side. Sweeping
//! these through a residual graph yields relaxation values and subgradients of
//! the residual at a reference point; subtangents built from them feed the
//! piecewise-affine constructions downstream.
//!
//! Rules follow the standard (nonsmooth) McCormick composition: the bilinear
//! envelope for products, exact convex/concave envelopes for the univariate
//! elementals, and mid-selection for composing through monotone envelope
//! pieces. Every elemental result is cut against its interval bounds, with the
//! clipped side's subgradient set to zero. Selection ties are broken in a
//! fixed order (convex track, then concave track, then constant; first
//! candidate wins among equal plane values), so sweeps are deterministic.

use crate::expr::{ExprGraph, Node};
use crate::interval::{Interval, IntervalError};
use crate::linalg::axpy;
use std::fmt;

/// Interval bounds plus convex/concave relaxation values and one subgradient
/// per side, with respect to `n_dirs` sweep directions.
#[derive(Debug, Clone, PartialEq)]
pub struct McCormick {
    bounds: Interval,
    cv: f64,
    cc: f64,
    sub_cv: Vec<f64>,
    sub_cc: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MccError {
    /// Seed point lies outside the seed box.
    SeedOutsideBounds,
    /// Propagated interval failure (zero-straddling denominator, overflow).
    Interval(IntervalError),
}

impl fmt::Display for MccError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MccError::SeedOutsideBounds => write!(f, "seed point outside its bounds"),
            MccError::Interval(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for MccError {}

impl From<IntervalError> for MccError {
    fn from(e: IntervalError) -> Self {
        MccError::Interval(e)
    }
}

/// Which track of an operand a composition rule selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Track {
    Cv,
    Cc,
    Const,
}

impl McCormick {
    /// A constant: degenerate bounds, zero subgradients.
    pub fn constant(value: f64, n_dirs: usize) -> Self {
        McCormick {
            bounds: Interval::point(value),
            cv: value,
            cc: value,
            sub_cv: vec![0.0; n_dirs],
            sub_cc: vec![0.0; n_dirs],
        }
    }

    /// Seed a variable at `point` within `bounds`, carrying the unit
    /// coordinate vector for sweep direction `dir` on both sides.
    pub fn seed(point: f64, bounds: Interval, n_dirs: usize, dir: usize) -> Result<Self, MccError> {
        if !bounds.contains(point) {
            return Err(MccError::SeedOutsideBounds);
        }
        assert!(dir < n_dirs, "sweep direction out of range");
        let mut unit = vec![0.0; n_dirs];
        unit[dir] = 1.0;
        Ok(McCormick {
            bounds,
            cv: point,
            cc: point,
            sub_cv: unit.clone(),
            sub_cc: unit,
        })
    }

    pub fn bounds(&self) -> Interval {
        self.bounds
    }

    pub fn cv(&self) -> f64 {
        self.cv
    }

    pub fn cc(&self) -> f64 {
        self.cc
    }

    pub fn sub_cv(&self) -> &[f64] {
        &self.sub_cv
    }

    pub fn sub_cc(&self) -> &[f64] {
        &self.sub_cc
    }

    pub fn n_dirs(&self) -> usize {
        self.sub_cv.len()
    }

    /// Cut the relaxation values against the interval bounds. The clipped
    /// side's subgradient becomes the zero vector (constant subtangent).
    fn cut(mut self) -> Self {
        if self.cv < self.bounds.lo() {
            self.cv = self.bounds.lo();
            self.sub_cv.iter_mut().for_each(|s| *s = 0.0);
        }
        if self.cc > self.bounds.hi() {
            self.cc = self.bounds.hi();
            self.sub_cc.iter_mut().for_each(|s| *s = 0.0);
        }
        self
    }

    /// Convex relaxation of `c · self` (value and subgradient source).
    fn scaled_cv(&self, c: f64) -> (f64, &[f64]) {
        if c >= 0.0 {
            (c * self.cv, &self.sub_cv)
        } else {
            (c * self.cc, &self.sub_cc)
        }
    }

    /// Concave relaxation of `c · self`.
    fn scaled_cc(&self, c: f64) -> (f64, &[f64]) {
        if c >= 0.0 {
            (c * self.cc, &self.sub_cc)
        } else {
            (c * self.cv, &self.sub_cv)
        }
    }

    /// `mid(cv, cc, z)` selection used when composing through a monotone
    /// envelope branch. Ties prefer the convex track, then the concave track,
    /// then the constant.
    fn mid(&self, z: f64) -> (f64, Track) {
        if z <= self.cv {
            (self.cv, Track::Cv)
        } else if z >= self.cc {
            (self.cc, Track::Cc)
        } else {
            (z, Track::Const)
        }
    }

    fn track_sub(&self, track: Track) -> Option<&[f64]> {
        match track {
            Track::Cv => Some(&self.sub_cv),
            Track::Cc => Some(&self.sub_cc),
            Track::Const => None,
        }
    }

    pub fn neg(&self) -> Self {
        McCormick {
            bounds: self.bounds.neg(),
            cv: -self.cc,
            cc: -self.cv,
            sub_cv: self.sub_cc.iter().map(|s| -s).collect(),
            sub_cc: self.sub_cv.iter().map(|s| -s).collect(),
        }
        .cut()
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, MccError> {
        debug_assert_eq!(self.n_dirs(), rhs.n_dirs());
        let mut sub_cv = self.sub_cv.clone();
        axpy(&mut sub_cv, 1.0, &rhs.sub_cv);
        let mut sub_cc = self.sub_cc.clone();
        axpy(&mut sub_cc, 1.0, &rhs.sub_cc);
        Ok(McCormick {
            bounds: self.bounds.add(&rhs.bounds)?,
            cv: self.cv + rhs.cv,
            cc: self.cc + rhs.cc,
            sub_cv,
            sub_cc,
        }
        .cut())
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, MccError> {
        debug_assert_eq!(self.n_dirs(), rhs.n_dirs());
        let mut sub_cv = self.sub_cv.clone();
        axpy(&mut sub_cv, -1.0, &rhs.sub_cc);
        let mut sub_cc = self.sub_cc.clone();
        axpy(&mut sub_cc, -1.0, &rhs.sub_cv);
        Ok(McCormick {
            bounds: self.bounds.sub(&rhs.bounds)?,
            cv: self.cv - rhs.cc,
            cc: self.cc - rhs.cv,
            sub_cv,
            sub_cc,
        }
        .cut())
    }

    /// Bilinear product with the McCormick envelope planes. The convex side
    /// takes the larger of the two underestimating planes, the concave side
    /// the smaller of the two overestimating planes; ties pick the first.
    pub fn mul(&self, rhs: &Self) -> Result<Self, MccError> {
        debug_assert_eq!(self.n_dirs(), rhs.n_dirs());
        let (xl, xu) = (self.bounds.lo(), self.bounds.hi());
        let (yl, yu) = (rhs.bounds.lo(), rhs.bounds.hi());

        let plane = |c_self: f64, c_rhs: f64, offset: f64, concave: bool| {
            let ((v1, s1), (v2, s2)) = if concave {
                (self.scaled_cc(c_self), rhs.scaled_cc(c_rhs))
            } else {
                (self.scaled_cv(c_self), rhs.scaled_cv(c_rhs))
            };
            // scaled_* pre-multiplies the values; the subgradients still need
            // the coefficients
            let sub: Vec<f64> = s1
                .iter()
                .zip(s2)
                .map(|(a, b)| c_self * a + c_rhs * b)
                .collect();
            (v1 + v2 - offset, sub)
        };

        let (cand_a, sub_a) = plane(yl, xl, xl * yl, false);
        let (cand_b, sub_b) = plane(yu, xu, xu * yu, false);
        let (cv, sub_cv) = if cand_a >= cand_b { (cand_a, sub_a) } else { (cand_b, sub_b) };

        let (cand_c, sub_c) = plane(yu, xl, xl * yu, true);
        let (cand_d, sub_d) = plane(yl, xu, xu * yl, true);
        let (cc, sub_cc) = if cand_c <= cand_d { (cand_c, sub_c) } else { (cand_d, sub_d) };

        Ok(McCormick {
            bounds: self.bounds.mul(&rhs.bounds)?,
            cv,
            cc,
            sub_cv,
            sub_cc,
        }
        .cut())
    }

    /// Quotient: product with the reciprocal envelope of the denominator.
    /// The interval lane uses exact quotient bounds.
    pub fn div(&self, rhs: &Self) -> Result<Self, MccError> {
        let recip = rhs.powi(-1)?;
        let mut out = self.mul(&recip)?;
        out.bounds = self.bounds.div(&rhs.bounds)?;
        Ok(out.cut())
    }

    pub fn exp(&self) -> Result<Self, MccError> {
        let bounds = self.bounds.exp()?;
        let (a, b) = (self.bounds.lo(), self.bounds.hi());
        if self.bounds.width() == 0.0 {
            let mut out = Self::constant(a.exp(), self.n_dirs());
            out.bounds = bounds;
            return Ok(out.cut());
        }
        // convex increasing elemental: envelope minimum at the left endpoint
        let (t, track) = self.mid(a);
        let et = t.exp();
        let sub_cv = match self.track_sub(track) {
            Some(s) => s.iter().map(|si| et * si).collect(),
            None => vec![0.0; self.n_dirs()],
        };
        // concave side: the secant over the operand range
        let slope = (b.exp() - a.exp()) / (b - a);
        let cc = a.exp() + slope * (self.cc - a);
        let sub_cc = self.sub_cc.iter().map(|si| slope * si).collect();
        Ok(McCormick { bounds, cv: et, cc, sub_cv, sub_cc }.cut())
    }

    /// Integer power with exact envelopes per parity and sign region,
    /// including the mixed-sign envelope of odd powers.
    pub fn powi(&self, m: i32) -> Result<Self, MccError> {
        let n_dirs = self.n_dirs();
        if m == 0 {
            return Ok(Self::constant(1.0, n_dirs));
        }
        if m == 1 {
            return Ok(self.clone());
        }
        let bounds = self.bounds.powi(m)?;
        let (a, b) = (self.bounds.lo(), self.bounds.hi());
        let f = |x: f64| x.powi(m);
        let df = |x: f64| f64::from(m) * x.powi(m - 1);
        if self.bounds.width() == 0.0 {
            let mut out = Self::constant(f(a), n_dirs);
            out.bounds = bounds;
            return Ok(out.cut());
        }

        let even = m % 2 == 0;
        let out = if m > 0 && even {
            // convex everywhere; minimum at 0 clamped into the range
            let zmin = self.bounds.clamp(0.0);
            self.convex_composition(f, df, zmin, a, b, bounds)
        } else if m > 0 {
            // odd positive power
            if a >= 0.0 {
                self.convex_composition(f, df, a, a, b, bounds)
            } else if b <= 0.0 {
                self.concave_composition(f, df, b, a, b, bounds)
            } else {
                self.odd_power_mixed(m, bounds)
            }
        } else if even {
            // negative even power, sign-definite operand: convex
            let zmin = if a > 0.0 { b } else { a };
            self.convex_composition(f, df, zmin, a, b, bounds)
        } else {
            // negative odd power: convex on positive operands, concave on negative
            if a > 0.0 {
                self.convex_composition(f, df, b, a, b, bounds)
            } else {
                self.concave_composition(f, df, a, a, b, bounds)
            }
        };
        Ok(out)
    }

    /// Composition through a convex univariate elemental: the convex side
    /// evaluates the elemental at the mid-selection toward its minimizer,
    /// the concave side takes the secant over the operand range.
    fn convex_composition(
        &self,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
        zmin: f64,
        a: f64,
        b: f64,
        bounds: Interval,
    ) -> Self {
        let (t, track) = self.mid(zmin);
        let cv = f(t);
        let slope_cv = df(t);
        let sub_cv = match self.track_sub(track) {
            Some(s) => s.iter().map(|si| slope_cv * si).collect(),
            None => vec![0.0; self.n_dirs()],
        };
        let (cc, sub_cc) = self.secant(f, a, b, true);
        McCormick { bounds, cv, cc, sub_cv, sub_cc }.cut()
    }

    /// Mirror image of [`Self::convex_composition`] for concave elementals.
    fn concave_composition(
        &self,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
        zmax: f64,
        a: f64,
        b: f64,
        bounds: Interval,
    ) -> Self {
        let (t, track) = self.mid(zmax);
        let cc = f(t);
        let slope_cc = df(t);
        let sub_cc = match self.track_sub(track) {
            Some(s) => s.iter().map(|si| slope_cc * si).collect(),
            None => vec![0.0; self.n_dirs()],
        };
        let (cv, sub_cv) = self.secant(f, a, b, false);
        McCormick { bounds, cv, cc, sub_cv, sub_cc }.cut()
    }

    /// Secant of `f` over `[a, b]` composed with the appropriate operand
    /// track for its slope sign. `over` selects the concave (true) or convex
    /// (false) role of the secant.
    fn secant(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, over: bool) -> (f64, Vec<f64>) {
        let slope = (f(b) - f(a)) / (b - a);
        let (t, sub) = if (slope >= 0.0) == over {
            (self.cc, &self.sub_cc)
        } else {
            (self.cv, &self.sub_cv)
        };
        (f(a) + slope * (t - a), sub.iter().map(|si| slope * si).collect())
    }

    /// Exact envelope of an odd power over a zero-straddling operand range.
    /// The convex envelope follows the line from the left endpoint to its
    /// tangency point `r ≥ 0`, then the power itself; the concave envelope is
    /// the point reflection.
    fn odd_power_mixed(&self, m: i32, bounds: Interval) -> Self {
        let (a, b) = (self.bounds.lo(), self.bounds.hi());
        let f = |x: f64| x.powi(m);
        let df = |x: f64| f64::from(m) * x.powi(m - 1);

        // cv side: increasing convex envelope, minimum at a
        let r_cv = odd_tangent_point(m, a, b);
        let (t, track) = self.mid(a);
        let (cv, slope_cv) = match r_cv {
            Some(r) if t <= r => (f(a) + df(r) * (t - a), df(r)),
            Some(_) => (f(t), df(t)),
            // tangency beyond b: the secant is the envelope
            None => {
                let s = (f(b) - f(a)) / (b - a);
                (f(a) + s * (t - a), s)
            }
        };
        let sub_cv = match self.track_sub(track) {
            Some(s) => s.iter().map(|si| slope_cv * si).collect(),
            None => vec![0.0; self.n_dirs()],
        };

        // cc side by point symmetry: tangency from the right endpoint
        let r_cc = odd_tangent_point(m, -b, -a).map(|r| -r);
        let (t, track) = self.mid(b);
        let (cc, slope_cc) = match r_cc {
            Some(r) if t >= r => (f(b) + df(r) * (t - b), df(r)),
            Some(_) => (f(t), df(t)),
            None => {
                let s = (f(b) - f(a)) / (b - a);
                (f(b) + s * (t - b), s)
            }
        };
        let sub_cc = match self.track_sub(track) {
            Some(s) => s.iter().map(|si| slope_cc * si).collect(),
            None => vec![0.0; self.n_dirs()],
        };

        McCormick { bounds, cv, cc, sub_cv, sub_cc }.cut()
    }
}

/// Tangency point of the line from `(a, a^m)` to the curve `x ↦ x^m` on the
/// positive side, for odd `m ≥ 3` and `a < 0 < b`. Returns `None` when the
/// tangency falls at or beyond `b` (secant case). The defining equation
/// `(m−1) r^m − m a r^{m−1} + a^m = 0` has a unique root on `(0, ∞)`; solved
/// by bisection, which is deterministic.
fn odd_tangent_point(m: i32, a: f64, b: f64) -> Option<f64> {
    debug_assert!(m >= 3 && m % 2 == 1 && a < 0.0 && b > 0.0);
    let q = |r: f64| {
        f64::from(m - 1) * r.powi(m) - f64::from(m) * a * r.powi(m - 1) + a.powi(m)
    };
    if q(b) <= 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0, b);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if q(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Sweep a residual graph at `(z_point, p_point)` over `z_box × p_box`.
/// Subgradients have length `n_z + n_p`, z-directions first.
pub fn eval_mccormick(
    graph: &ExprGraph,
    z_point: &[f64],
    p_point: &[f64],
    z_box: &[Interval],
    p_box: &[Interval],
) -> Result<McCormick, MccError> {
    let n_z = graph.n_z();
    let n_p = graph.n_p();
    assert_eq!(z_point.len(), n_z, "state dimension mismatch");
    assert_eq!(p_point.len(), n_p, "parameter dimension mismatch");
    assert_eq!(z_box.len(), n_z, "state box dimension mismatch");
    assert_eq!(p_box.len(), n_p, "parameter box dimension mismatch");
    let n_dirs = n_z + n_p;
    let mut vals: Vec<McCormick> = Vec::with_capacity(graph.nodes().len());
    for node in graph.nodes() {
        let v = match *node {
            Node::Const(c) => McCormick::constant(c, n_dirs),
            Node::VarZ(k) => McCormick::seed(z_point[k], z_box[k], n_dirs, k)?,
            Node::VarP(k) => McCormick::seed(p_point[k], p_box[k], n_dirs, n_z + k)?,
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
    Ok(vals.swap_remove(graph.root()))
}
