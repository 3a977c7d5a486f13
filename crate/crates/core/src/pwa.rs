//! Piecewise-affine relaxations of residual components, built from
//! subtangents of McCormick relaxations at reference points.
//!
//! A subtangent is the affine function through a reference point on the
//! relaxation whose slope is the subgradient there; the pointwise maximum of
//! convex-side subtangents is a valid convex relaxation, the pointwise minimum
//! of concave-side subtangents a valid concave one.

use crate::expr::ExprGraph;
use crate::interval::Interval;
use crate::linalg::dot;
use crate::mccormick::{eval_mccormick, MccError};

/// One affine piece `p_coeffs·p + z_coeffs·ξ + offset` of a residual
/// relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePiece {
    pub p_coeffs: Vec<f64>,
    pub z_coeffs: Vec<f64>,
    pub offset: f64,
}

impl AffinePiece {
    pub fn eval(&self, z: &[f64], p: &[f64]) -> f64 {
        dot(&self.p_coeffs, p) + dot(&self.z_coeffs, z) + self.offset
    }
}

/// Piecewise-affine convex under- and concave over-estimator of one residual
/// component: `max` over `cv_pieces`, `min` over `cc_pieces`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PwaRelaxationPair {
    pub cv_pieces: Vec<AffinePiece>,
    pub cc_pieces: Vec<AffinePiece>,
}

impl PwaRelaxationPair {
    /// Serialize the pieces as CSV rows `side,a…,alpha…,b` (parameter
    /// coefficients, state coefficients, offset), convex pieces first.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        let mut emit = |side: &str, pieces: &[AffinePiece]| {
            for piece in pieces {
                let mut fields = vec![side.to_string()];
                fields.extend(piece.p_coeffs.iter().map(|v| format!("{v}")));
                fields.extend(piece.z_coeffs.iter().map(|v| format!("{v}")));
                fields.push(format!("{}", piece.offset));
                out.push_str(&fields.join(","));
                out.push('\n');
            }
        };
        emit("cv", &self.cv_pieces);
        emit("cc", &self.cc_pieces);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PwaMode {
    Max,
    Min,
}

/// Subtangents of the McCormick relaxations of `graph` at a reference point.
/// The convex piece supports the convex relaxation from below with equality
/// at the reference; the concave piece mirrors it.
pub fn subtangent(
    graph: &ExprGraph,
    z_box: &[Interval],
    p_box: &[Interval],
    z_ref: &[f64],
    p_ref: &[f64],
) -> Result<(AffinePiece, AffinePiece), MccError> {
    let m = eval_mccormick(graph, z_ref, p_ref, z_box, p_box)?;
    let n_z = graph.n_z();
    let piece = |value: f64, sub: &[f64]| {
        let z_coeffs = sub[..n_z].to_vec();
        let p_coeffs = sub[n_z..].to_vec();
        let offset = value - dot(&z_coeffs, z_ref) - dot(&p_coeffs, p_ref);
        AffinePiece { p_coeffs, z_coeffs, offset }
    };
    Ok((piece(m.cv(), m.sub_cv()), piece(m.cc(), m.sub_cc())))
}

/// Build a piecewise-affine relaxation pair from subtangents at each
/// reference point (each reference is a combined `(z, p)` vector).
pub fn build_pwa(
    graph: &ExprGraph,
    z_box: &[Interval],
    p_box: &[Interval],
    refs: &[Vec<f64>],
) -> Result<PwaRelaxationPair, MccError> {
    assert!(!refs.is_empty(), "at least one reference point is required");
    let n_z = graph.n_z();
    let mut pair = PwaRelaxationPair::default();
    for r in refs {
        assert_eq!(r.len(), n_z + graph.n_p(), "reference point dimension mismatch");
        let (cv, cc) = subtangent(graph, z_box, p_box, &r[..n_z], &r[n_z..])?;
        pair.cv_pieces.push(cv);
        pair.cc_pieces.push(cc);
    }
    Ok(pair)
}

/// Pointwise max (or min) over a nonempty piece list, returning the value and
/// the lowest piece index attaining it.
pub fn pwa_eval(pieces: &[AffinePiece], mode: PwaMode, z: &[f64], p: &[f64]) -> (f64, usize) {
    assert!(!pieces.is_empty(), "piece list must be nonempty");
    let mut best = pieces[0].eval(z, p);
    let mut best_idx = 0;
    for (idx, piece) in pieces.iter().enumerate().skip(1) {
        let v = piece.eval(z, p);
        let improves = match mode {
            PwaMode::Max => v > best,
            PwaMode::Min => v < best,
        };
        if improves {
            best = v;
            best_idx = idx;
        }
    }
    (best, best_idx)
}

/// Deterministic low-discrepancy reference points inside the box: a Halton
/// sequence over the combined `(z, p)` dimensions, one prime base per
/// coordinate, starting at index 1. Used when a problem file supplies no
/// reference points.
pub fn default_reference_points(
    z_box: &[Interval],
    p_box: &[Interval],
    count: usize,
) -> Vec<Vec<f64>> {
    const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    let boxes: Vec<Interval> = z_box.iter().chain(p_box).copied().collect();
    assert!(boxes.len() <= PRIMES.len(), "too many dimensions for the Halton generator");
    (1..=count as u64)
        .map(|i| {
            boxes
                .iter()
                .enumerate()
                .map(|(dim, b)| b.lo() + radical_inverse(i, PRIMES[dim]) * b.width())
                .collect()
        })
        .collect()
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 0.0;
    let mut scale = 1.0 / base as f64;
    while i > 0 {
        inv += (i % base) as f64 * scale;
        i /= base;
        scale /= base as f64;
    }
    inv
}
