//! Closed-form relaxations of a scalar implicit function defined by a single
//! residual with piecewise-affine relaxations.
//!
//! With one state variable, each relaxation piece `a·p + α·ξ + b` with
//! nonzero slope `α` resolves into an affine-in-`p` bound on `ξ`: pieces with
//! `α < 0` on the convex side and `α > 0` on the concave side bound `ξ` from
//! below, the others from above. The pointwise max of the lower bounds and
//! min of the upper bounds, clipped to the state interval, give the
//! implicit-function relaxations in closed form — no optimization problem is
//! solved, and the active bound's gradient is a valid subgradient.

use crate::interval::Interval;
use crate::linalg::dot;
use crate::pwa::PwaRelaxationPair;
use std::fmt;

/// A piece transformed into an affine-in-`p` bound on `ξ`: stores
/// `coeffs = −a/α` and `offset = −b/α`, with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundPiece {
    pub source: PieceRef,
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl BoundPiece {
    pub fn eval(&self, p: &[f64]) -> f64 {
        dot(&self.coeffs, p) + self.offset
    }
}

/// Provenance of a transformed piece: index into the original convex or
/// concave piece list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceRef {
    CvPiece(usize),
    CcPiece(usize),
}

/// A zero-slope piece, retained as a pure feasibility requirement on `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterConstraint {
    /// `coeffs·p + offset ≤ 0` when from the convex side, `≥ 0` otherwise.
    pub source: PieceRef,
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

/// The classified closed-form relaxation data for one scalar residual.
#[derive(Debug, Clone)]
pub struct ScalarImplicitRelaxation {
    x_bounds: Interval,
    /// transformed cv pieces (nonzero slope), index-aligned with `k_minus`/`k_plus`
    g_pieces: Vec<BoundPiece>,
    /// transformed cc pieces, index-aligned with `l_minus`/`l_plus`
    gamma_pieces: Vec<BoundPiece>,
    /// positions in `g_pieces` with negative slope (lower bounds on ξ)
    k_minus: Vec<usize>,
    /// positions in `g_pieces` with positive slope (upper bounds on ξ)
    k_plus: Vec<usize>,
    /// positions in `gamma_pieces` with negative slope (upper bounds on ξ)
    l_minus: Vec<usize>,
    /// positions in `gamma_pieces` with positive slope (lower bounds on ξ)
    l_plus: Vec<usize>,
    p_only: Vec<ParameterConstraint>,
}

/// Result of evaluating the two bound aggregates at a parameter point. A side
/// with no contributing pieces is absent (the relaxation clips to the state
/// bound there).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HEval {
    pub h_cv: Option<(f64, PieceRef)>,
    pub h_cc: Option<(f64, PieceRef)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarError {
    /// The relaxations are infinite at the queried point.
    InfeasiblePoint,
}

impl fmt::Display for ScalarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarError::InfeasiblePoint => write!(f, "relaxations are infeasible at this point"),
        }
    }
}

impl std::error::Error for ScalarError {}

const CROSS_TOL: f64 = 1e-9;

/// Classify the pieces of a relaxation pair by slope sign and transform each
/// nonzero-slope piece into its bound form. Zero-slope pieces divert to
/// parameter-only feasibility constraints.
pub fn classify_pieces(pair: &PwaRelaxationPair, x_bounds: Interval) -> ScalarImplicitRelaxation {
    let mut rel = ScalarImplicitRelaxation {
        x_bounds,
        g_pieces: Vec::new(),
        gamma_pieces: Vec::new(),
        k_minus: Vec::new(),
        k_plus: Vec::new(),
        l_minus: Vec::new(),
        l_plus: Vec::new(),
        p_only: Vec::new(),
    };
    for (idx, piece) in pair.cv_pieces.iter().enumerate() {
        assert_eq!(piece.z_coeffs.len(), 1, "scalar pipeline requires one state variable");
        let alpha = piece.z_coeffs[0];
        let source = PieceRef::CvPiece(idx);
        if alpha == 0.0 {
            rel.p_only.push(ParameterConstraint {
                source,
                coeffs: piece.p_coeffs.clone(),
                offset: piece.offset,
            });
            continue;
        }
        let transformed = BoundPiece {
            source,
            coeffs: piece.p_coeffs.iter().map(|a| -a / alpha).collect(),
            offset: -piece.offset / alpha,
        };
        let pos = rel.g_pieces.len();
        rel.g_pieces.push(transformed);
        if alpha < 0.0 {
            rel.k_minus.push(pos);
        } else {
            rel.k_plus.push(pos);
        }
    }
    for (idx, piece) in pair.cc_pieces.iter().enumerate() {
        assert_eq!(piece.z_coeffs.len(), 1, "scalar pipeline requires one state variable");
        let alpha = piece.z_coeffs[0];
        let source = PieceRef::CcPiece(idx);
        if alpha == 0.0 {
            rel.p_only.push(ParameterConstraint {
                source,
                coeffs: piece.p_coeffs.clone(),
                offset: piece.offset,
            });
            continue;
        }
        let transformed = BoundPiece {
            source,
            coeffs: piece.p_coeffs.iter().map(|a| -a / alpha).collect(),
            offset: -piece.offset / alpha,
        };
        let pos = rel.gamma_pieces.len();
        rel.gamma_pieces.push(transformed);
        if alpha < 0.0 {
            rel.l_minus.push(pos);
        } else {
            rel.l_plus.push(pos);
        }
    }
    rel
}

impl ScalarImplicitRelaxation {
    pub fn x_bounds(&self) -> Interval {
        self.x_bounds
    }

    pub fn g_pieces(&self) -> &[BoundPiece] {
        &self.g_pieces
    }

    pub fn gamma_pieces(&self) -> &[BoundPiece] {
        &self.gamma_pieces
    }

    pub fn sets(&self) -> (&[usize], &[usize], &[usize], &[usize]) {
        (&self.k_minus, &self.k_plus, &self.l_minus, &self.l_plus)
    }

    pub fn p_only_constraints(&self) -> &[ParameterConstraint] {
        &self.p_only
    }

    /// Contributors to the lower aggregate, in selection order: negative-slope
    /// cv pieces first, then positive-slope cc pieces, ascending indices.
    fn lower_contributors(&self) -> impl Iterator<Item = &BoundPiece> {
        self.k_minus
            .iter()
            .map(|&i| &self.g_pieces[i])
            .chain(self.l_plus.iter().map(|&i| &self.gamma_pieces[i]))
    }

    /// Contributors to the upper aggregate: negative-slope cc pieces first,
    /// then positive-slope cv pieces (the subgradient case order).
    fn upper_contributors(&self) -> impl Iterator<Item = &BoundPiece> {
        self.l_minus
            .iter()
            .map(|&i| &self.gamma_pieces[i])
            .chain(self.k_plus.iter().map(|&i| &self.g_pieces[i]))
    }

    /// Evaluate the two aggregates; the first contributor attaining the
    /// max/min wins on ties.
    pub fn h_eval(&self, p: &[f64]) -> HEval {
        let mut h_cv: Option<(f64, PieceRef)> = None;
        for piece in self.lower_contributors() {
            let v = piece.eval(p);
            if h_cv.is_none_or(|(best, _)| v > best) {
                h_cv = Some((v, piece.source));
            }
        }
        let mut h_cc: Option<(f64, PieceRef)> = None;
        for piece in self.upper_contributors() {
            let v = piece.eval(p);
            if h_cc.is_none_or(|(best, _)| v < best) {
                h_cc = Some((v, piece.source));
            }
        }
        HEval { h_cv, h_cc }
    }

    fn p_only_feasible(&self, p: &[f64]) -> bool {
        self.p_only.iter().all(|c| {
            let v = dot(&c.coeffs, p) + c.offset;
            match c.source {
                PieceRef::CvPiece(_) => v <= CROSS_TOL,
                PieceRef::CcPiece(_) => v >= -CROSS_TOL,
            }
        })
    }

    /// Closed-form relaxation values, `(+∞, −∞)` at infeasible points.
    pub fn relax_eval(&self, p: &[f64]) -> (f64, f64) {
        if !self.p_only_feasible(p) {
            return (f64::INFINITY, f64::NEG_INFINITY);
        }
        let h = self.h_eval(p);
        let x_cv = match h.h_cv {
            Some((v, _)) => self.x_bounds.lo().max(v),
            None => self.x_bounds.lo(),
        };
        let x_cc = match h.h_cc {
            Some((v, _)) => self.x_bounds.hi().min(v),
            None => self.x_bounds.hi(),
        };
        if x_cv > x_cc + CROSS_TOL {
            return (f64::INFINITY, f64::NEG_INFINITY);
        }
        (x_cv, x_cc)
    }

    /// Subgradients of both relaxations at `p`. The zero vector when the
    /// state bound clips (exact clip semantics: a tie at the clip boundary
    /// selects the bound branch), otherwise the active piece's gradient.
    pub fn subgradients(&self, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>), ScalarError> {
        let (x_cv, x_cc) = self.relax_eval(p);
        if !x_cv.is_finite() || !x_cc.is_finite() {
            return Err(ScalarError::InfeasiblePoint);
        }
        let n_p = p.len();
        let h = self.h_eval(p);
        let s_cv = match h.h_cv {
            Some((v, _)) if v > self.x_bounds.lo() => {
                let (_, source) = h.h_cv.unwrap();
                self.piece_by_ref(source).coeffs.clone()
            }
            _ => vec![0.0; n_p],
        };
        let s_cc = match h.h_cc {
            Some((v, _)) if v < self.x_bounds.hi() => {
                let (_, source) = h.h_cc.unwrap();
                self.piece_by_ref(source).coeffs.clone()
            }
            _ => vec![0.0; n_p],
        };
        Ok((s_cv, s_cc))
    }

    fn piece_by_ref(&self, source: PieceRef) -> &BoundPiece {
        match source {
            PieceRef::CvPiece(idx) => self
                .g_pieces
                .iter()
                .find(|piece| piece.source == PieceRef::CvPiece(idx))
                .expect("transformed piece exists"),
            PieceRef::CcPiece(idx) => self
                .gamma_pieces
                .iter()
                .find(|piece| piece.source == PieceRef::CcPiece(idx))
                .expect("transformed piece exists"),
        }
    }

    /// Exact one-sided directional derivative of the convex relaxation:
    /// a max of affine functions differentiates into the max of the active
    /// gradients' directional values, and the clip at the state bound
    /// contributes a zero slope when active.
    pub fn dir_deriv_cv(&self, p: &[f64], d: &[f64]) -> Option<f64> {
        let (x_cv, x_cc) = self.relax_eval(p);
        if !x_cv.is_finite() || !x_cc.is_finite() {
            return None;
        }
        let h = self.h_eval(p);
        let lo = self.x_bounds.lo();
        match h.h_cv {
            None => Some(0.0),
            Some((v, _)) if v < lo => Some(0.0),
            Some((v, _)) => {
                let tol = 1e-12 * (1.0 + v.abs());
                let best = self
                    .lower_contributors()
                    .filter(|piece| (piece.eval(p) - v).abs() <= tol)
                    .map(|piece| dot(&piece.coeffs, d))
                    .fold(f64::NEG_INFINITY, f64::max);
                if v == lo {
                    Some(best.max(0.0))
                } else {
                    Some(best)
                }
            }
        }
    }

    /// Mirror of [`Self::dir_deriv_cv`] for the concave relaxation.
    pub fn dir_deriv_cc(&self, p: &[f64], d: &[f64]) -> Option<f64> {
        let (x_cv, x_cc) = self.relax_eval(p);
        if !x_cv.is_finite() || !x_cc.is_finite() {
            return None;
        }
        let h = self.h_eval(p);
        let hi = self.x_bounds.hi();
        match h.h_cc {
            None => Some(0.0),
            Some((v, _)) if v > hi => Some(0.0),
            Some((v, _)) => {
                let tol = 1e-12 * (1.0 + v.abs());
                let best = self
                    .upper_contributors()
                    .filter(|piece| (piece.eval(p) - v).abs() <= tol)
                    .map(|piece| dot(&piece.coeffs, d))
                    .fold(f64::INFINITY, f64::min);
                if v == hi {
                    Some(best.min(0.0))
                } else {
                    Some(best)
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Display-form derivation
// ---------------------------------------------------------------------------

/// One affine-in-`p` term of the displayed closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplayTerm {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

/// The displayed closed form of both relaxations: the state bound constant
/// followed by the contributing affine terms.
#[derive(Debug, Clone)]
pub struct ScalarDisplay {
    pub x_lo: f64,
    pub x_hi: f64,
    pub cv_terms: Vec<DisplayTerm>,
    pub cc_terms: Vec<DisplayTerm>,
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Derive the displayed closed form the way a report rounds it: piece
/// coefficients are rounded to two decimals first, then transformed, then
/// rounded again. Division after rounding is deliberate — it reproduces what
/// a printed two-decimal report implies.
pub fn display_form(pair: &PwaRelaxationPair, x_bounds: Interval) -> ScalarDisplay {
    let mut rounded = pair.clone();
    for piece in rounded.cv_pieces.iter_mut().chain(rounded.cc_pieces.iter_mut()) {
        piece.p_coeffs.iter_mut().for_each(|c| *c = round2(*c));
        piece.z_coeffs.iter_mut().for_each(|c| *c = round2(*c));
        piece.offset = round2(piece.offset);
    }
    let rel = classify_pieces(&rounded, x_bounds);
    let term = |piece: &BoundPiece| DisplayTerm {
        coeffs: piece.coeffs.iter().map(|&c| round2(c)).collect(),
        offset: round2(piece.offset),
    };
    ScalarDisplay {
        x_lo: x_bounds.lo(),
        x_hi: x_bounds.hi(),
        cv_terms: rel.lower_contributors().map(term).collect(),
        cc_terms: rel.upper_contributors().map(term).collect(),
    }
}

/// Render the closed form in the two-decimal max/min display format.
pub fn format_scalar_report(pair: &PwaRelaxationPair, x_bounds: Interval) -> String {
    let display = display_form(pair, x_bounds);
    let mut out = String::new();
    let render = |terms: &[DisplayTerm], bound: f64| {
        let mut items = vec![format!("{bound:.2}")];
        for t in terms {
            let mut s = String::new();
            for (k, c) in t.coeffs.iter().enumerate() {
                if k == 0 {
                    s.push_str(&format!("{c:.2}*p{}", k + 1));
                } else if *c >= 0.0 {
                    s.push_str(&format!(" + {c:.2}*p{}", k + 1));
                } else {
                    s.push_str(&format!(" - {:.2}*p{}", c.abs(), k + 1));
                }
            }
            if t.offset >= 0.0 {
                s.push_str(&format!(" + {:.2}", t.offset));
            } else {
                s.push_str(&format!(" - {:.2}", t.offset.abs()));
            }
            items.push(s);
        }
        items.join(", ")
    };
    out.push_str(&format!("x^cv(p) = max{{ {} }}\n", render(&display.cv_terms, display.x_lo)));
    out.push_str(&format!("x^cc(p) = min{{ {} }}\n", render(&display.cc_terms, display.x_hi)));
    out
}
