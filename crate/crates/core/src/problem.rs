//! JSON problem files: residual expressions, boxes, reference points and
//! options, validated and assembled into ready-to-query relaxations.
//!
//! Schema (see `docs/problem-format.md` for the full reference):
//!
//! ```json
//! {
//!   "residuals": ["(p1 + 3.610*1/(z1^2))*(z1 - 0.0429) - 0.0820574*p2"],
//!   "z_bounds": [[10.0, 70.0]],
//!   "p_bounds": [[0.5, 1.1], [250.0, 320.0]],
//!   "reference_points": [[17.67, 0.68, 274.27], [67.78, 0.73, 288.82]],
//!   "options": { "tol_active": 1e-7, "piece_count": 2, "seed": 0 }
//! }
//! ```
//!
//! `reference_points` (combined `z` then `p` coordinates) are optional; when
//! absent, deterministic low-discrepancy points are generated. An optional
//! `pwa` array supplies explicit relaxation pieces per residual instead of
//! subtangent construction (`null` entries keep the automatic route).

use crate::expr::{ExprGraph, ParseError};
use crate::interval::Interval;
use crate::pwa::{default_reference_points, AffinePiece, PwaRelaxationPair};
use crate::scalar_implicit::{classify_pieces, ScalarImplicitRelaxation};
use crate::vector_implicit::{BuildError, RelaxedResidual, VectorImplicitProblem};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub residuals: Vec<String>,
    pub z_bounds: Vec<[f64; 2]>,
    pub p_bounds: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_points: Option<Vec<Vec<f64>>>,
    /// Explicit relaxation pieces per residual; `null` entries use the
    /// automatic subtangent construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pwa: Option<Vec<Option<PwaSpec>>>,
    #[serde(default)]
    pub options: ProblemOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PwaSpec {
    pub cv: Vec<PieceSpec>,
    pub cc: Vec<PieceSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceSpec {
    pub p_coeffs: Vec<f64>,
    pub z_coeffs: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProblemOptions {
    #[serde(default = "default_tol_active")]
    pub tol_active: f64,
    #[serde(default = "default_piece_count")]
    pub piece_count: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_tol_active() -> f64 {
    1e-7
}

fn default_piece_count() -> usize {
    2
}

impl Default for ProblemOptions {
    fn default() -> Self {
        ProblemOptions { tol_active: default_tol_active(), piece_count: default_piece_count(), seed: 0 }
    }
}

/// A validated, fully constructed problem. The LP-based route is always
/// available; the closed-form route exists for single-state problems and
/// shares the same relaxation pieces.
#[derive(Debug, Clone)]
pub struct BuiltProblem {
    pub graphs: Vec<ExprGraph>,
    pub z_box: Vec<Interval>,
    pub p_box: Vec<Interval>,
    pub refs: Vec<Vec<f64>>,
    pub options: ProblemOptions,
    pub vector: VectorImplicitProblem,
    pub scalar: Option<ScalarImplicitRelaxation>,
}

#[derive(Debug)]
pub enum ProblemError {
    Io(std::io::Error),
    /// JSON syntax or shape error with line/column.
    Json { line: usize, column: usize, message: String },
    /// Expression parse failure in residual `index`.
    Expr { index: usize, error: ParseError },
    /// Dimension or bound validation failure (detectable from the file).
    Invalid(String),
    /// Relaxation construction failure.
    Build(BuildError),
}

impl fmt::Display for ProblemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemError::Io(e) => write!(f, "{e}"),
            ProblemError::Json { line, column, message } => {
                write!(f, "JSON error at line {line}, column {column}: {message}")
            }
            ProblemError::Expr { index, error } => {
                write!(f, "residual {}: {error}", index + 1)
            }
            ProblemError::Invalid(what) => write!(f, "{what}"),
            ProblemError::Build(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ProblemError {}

impl ProblemError {
    /// True when the failure is detectable from the file alone (I/O, JSON,
    /// expressions, dimensions); false for mathematical construction
    /// failures.
    pub fn is_file_error(&self) -> bool {
        !matches!(self, ProblemError::Build(_))
    }
}

impl From<BuildError> for ProblemError {
    fn from(e: BuildError) -> Self {
        ProblemError::Build(e)
    }
}

pub fn load_problem(path: &Path) -> Result<BuiltProblem, ProblemError> {
    build_problem(&read_problem_file(path)?)
}

/// Read and JSON-decode a problem file without building it, so callers can
/// adjust options first.
pub fn read_problem_file(path: &Path) -> Result<ProblemFile, ProblemError> {
    let text = std::fs::read_to_string(path).map_err(ProblemError::Io)?;
    serde_json::from_str(&text).map_err(|e| ProblemError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn parse_problem(text: &str) -> Result<BuiltProblem, ProblemError> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| ProblemError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    build_problem(&file)
}

pub fn build_problem(file: &ProblemFile) -> Result<BuiltProblem, ProblemError> {
    let n_z = file.z_bounds.len();
    let n_p = file.p_bounds.len();
    if file.residuals.is_empty() {
        return Err(ProblemError::Invalid("no residuals".into()));
    }
    if file.residuals.len() != n_z {
        return Err(ProblemError::Invalid(format!(
            "{} residuals for {} state variables (system must be square)",
            file.residuals.len(),
            n_z
        )));
    }
    let box_of = |pairs: &[[f64; 2]], what: &str| -> Result<Vec<Interval>, ProblemError> {
        pairs
            .iter()
            .enumerate()
            .map(|(k, &[lo, hi])| {
                Interval::new(lo, hi).map_err(|_| {
                    ProblemError::Invalid(format!("{what} bound {} is not a valid interval", k + 1))
                })
            })
            .collect()
    };
    let z_box = box_of(&file.z_bounds, "state")?;
    let p_box = box_of(&file.p_bounds, "parameter")?;

    let mut graphs = Vec::with_capacity(file.residuals.len());
    for (index, text) in file.residuals.iter().enumerate() {
        let g = ExprGraph::parse(text, n_z, n_p)
            .map_err(|error| ProblemError::Expr { index, error })?;
        graphs.push(g);
    }

    let options = file.options;
    let refs = match &file.reference_points {
        Some(refs) => {
            for (k, r) in refs.iter().enumerate() {
                if r.len() != n_z + n_p {
                    return Err(ProblemError::Invalid(format!(
                        "reference point {} has {} coordinates, expected {}",
                        k + 1,
                        r.len(),
                        n_z + n_p
                    )));
                }
                let inside = r[..n_z]
                    .iter()
                    .zip(&z_box)
                    .chain(r[n_z..].iter().zip(&p_box))
                    .all(|(v, b)| b.contains(*v));
                if !inside {
                    return Err(ProblemError::Invalid(format!(
                        "reference point {} lies outside the box",
                        k + 1
                    )));
                }
            }
            refs.clone()
        }
        None => default_reference_points(&z_box, &p_box, options.piece_count.max(1)),
    };

    let vector = match &file.pwa {
        None => VectorImplicitProblem::from_graphs(
            graphs.clone(),
            z_box.clone(),
            p_box.clone(),
            &refs,
            options.tol_active,
        )?,
        Some(specs) => {
            if specs.len() != graphs.len() {
                return Err(ProblemError::Invalid(format!(
                    "pwa override has {} entries for {} residuals",
                    specs.len(),
                    graphs.len()
                )));
            }
            let mut relaxed = Vec::new();
            for (i, spec) in specs.iter().enumerate() {
                let pair = match spec {
                    Some(spec) => pair_from_spec(spec, n_z, n_p, i)?,
                    None => crate::pwa::build_pwa(&graphs[i], &z_box, &p_box, &refs)
                        .map_err(BuildError::from)?,
                };
                relaxed.push(RelaxedResidual { residual: i, pair });
            }
            VectorImplicitProblem::from_parts(
                graphs.clone(),
                z_box.clone(),
                p_box.clone(),
                relaxed,
                Vec::new(),
                options.tol_active,
            )?
        }
    };

    let scalar = if n_z == 1 {
        let pair = vector
            .relaxed()
            .first()
            .map(|r| r.pair.clone())
            .expect("single-state problems keep their residual relaxed");
        Some(classify_pieces(&pair, z_box[0]))
    } else {
        None
    };

    Ok(BuiltProblem { graphs, z_box, p_box, refs, options, vector, scalar })
}

fn pair_from_spec(
    spec: &PwaSpec,
    n_z: usize,
    n_p: usize,
    residual: usize,
) -> Result<PwaRelaxationPair, ProblemError> {
    let convert = |pieces: &[PieceSpec], side: &str| -> Result<Vec<AffinePiece>, ProblemError> {
        if pieces.is_empty() {
            return Err(ProblemError::Invalid(format!(
                "residual {}: {side} piece list must be nonempty",
                residual + 1
            )));
        }
        pieces
            .iter()
            .map(|p| {
                if p.p_coeffs.len() != n_p || p.z_coeffs.len() != n_z {
                    return Err(ProblemError::Invalid(format!(
                        "residual {}: {side} piece has wrong coefficient dimensions",
                        residual + 1
                    )));
                }
                Ok(AffinePiece {
                    p_coeffs: p.p_coeffs.clone(),
                    z_coeffs: p.z_coeffs.clone(),
                    offset: p.offset,
                })
            })
            .collect()
    };
    Ok(PwaRelaxationPair {
        cv_pieces: convert(&spec.cv, "cv")?,
        cc_pieces: convert(&spec.cc, "cc")?,
    })
}
