//! Relaxations and subgradients for vector-valued implicit functions with
//! piecewise-affine residual relaxations.
//!
//! Relaxation values are small dense LPs over the state box: one row per
//! relaxation piece, plus equality rows for residuals detected affine. At an
//! optimal point, the active rows form a sensitivity system from which
//! directional derivatives of the relaxation follow as LPs; subgradients are
//! then assembled per parameter dimension:
//!
//! * `n_p = 1`: one directional derivative is already a subgradient;
//! * `n_p = 2`: the half-differences of the four cardinal directional
//!   derivatives form a subgradient;
//! * general `n_p`: a lexicographic sequence of dual LPs pins down a
//!   subgradient, stopping early as soon as a stage has a unique optimum
//!   (in the common smooth case after a single stage plus one uniqueness
//!   examination).

use crate::expr::ExprGraph;
use crate::interval::Interval;
use crate::linalg::{dot, mat_t_vec, mat_vec, rank, solve};
use crate::lp::{lp_solve_with, LinearProgram, LpConfig, LpError, Sense, Status};
use crate::mccormick::{eval_mccormick, MccError};
use crate::pwa::{build_pwa, PwaRelaxationPair};
use std::fmt;

/// Which relaxation a query targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxSense {
    Cv,
    Cc,
}

/// How a subgradient was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Np1,
    Np2,
    LdSequence,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Np1 => write!(f, "np1"),
            Regime::Np2 => write!(f, "np2"),
            Regime::LdSequence => write!(f, "ld_sequence"),
        }
    }
}

/// An affine residual component kept as an equality row
/// `z_coeffs·ξ + p_coeffs·p + constant = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineResidual {
    pub z_coeffs: Vec<f64>,
    pub p_coeffs: Vec<f64>,
    pub constant: f64,
}

/// A non-affine residual's piecewise-affine relaxation pair, tagged with the
/// index of the residual it relaxes.
#[derive(Debug, Clone)]
pub struct RelaxedResidual {
    pub residual: usize,
    pub pair: PwaRelaxationPair,
}

/// The assembled problem: residual graphs, boxes, relaxation pieces and
/// affine equalities.
#[derive(Debug, Clone)]
pub struct VectorImplicitProblem {
    residuals: Vec<ExprGraph>,
    z_box: Vec<Interval>,
    p_box: Vec<Interval>,
    relaxed: Vec<RelaxedResidual>,
    equalities: Vec<AffineResidual>,
    tol_active: f64,
    lp_cfg: LpConfig,
}

/// Identity of one inequality row of the relaxation system, in the fixed
/// enumeration order: all cv pieces and cc pieces per relaxed residual, then
/// box facets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowId {
    CvPiece { relaxed: usize, piece: usize },
    CcPiece { relaxed: usize, piece: usize },
    BoxLower(usize),
    BoxUpper(usize),
}

/// Active rows at an optimal point; equalities are always active.
#[derive(Debug, Clone)]
pub struct ActiveSet {
    pub inequalities: Vec<RowId>,
    pub equalities: Vec<usize>,
}

/// The compact data behind every sensitivity LP: state-gradients `A`/`B` of
/// the active inequalities and equalities, and the negated parameter
/// gradients `G_A`/`G_B`, aligned row for row.
#[derive(Debug, Clone)]
pub struct SensitivitySystem {
    pub a: Vec<Vec<f64>>,
    pub g_a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub g_b: Vec<Vec<f64>>,
    pub obj_index: usize,
    pub sense: RelaxSense,
    pub n_x: usize,
    pub n_p: usize,
}

/// A computed subgradient with its provenance. `lps_solved` counts the LPs
/// of the subgradient computation itself (stage LPs plus uniqueness
/// examinations for the sequence regime; the valuation LP is not included).
#[derive(Debug, Clone)]
pub struct SubgradientResult {
    pub value: f64,
    pub subgradient: Vec<f64>,
    pub regime: Regime,
    pub lps_solved: usize,
    pub early_stop_stage: Option<usize>,
}

/// Per-stage record of the dual LP sequence.
#[derive(Debug, Clone)]
pub struct LdStage {
    pub value: f64,
    pub multipliers: Vec<f64>,
}

/// Outcome of the dual LP sequence.
#[derive(Debug, Clone)]
pub struct LdOutcome {
    pub subgradient: Vec<f64>,
    pub lps_solved: usize,
    pub early_stop_stage: Option<usize>,
    pub stages: Vec<LdStage>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BuildError {
    /// The equality rows' state gradients are linearly dependent.
    RankDeficientEqualities,
    /// A reference point has the wrong dimension or leaves the box.
    InvalidReference(String),
    /// Relaxation construction failed.
    Relaxation(MccError),
    NoResiduals,
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildError::RankDeficientEqualities => {
                write!(f, "affine equality rows have linearly dependent state gradients")
            }
            BuildError::InvalidReference(what) => write!(f, "invalid reference point: {what}"),
            BuildError::Relaxation(e) => write!(f, "relaxation construction failed: {e}"),
            BuildError::NoResiduals => write!(f, "problem has no residuals"),
        }
    }
}

impl std::error::Error for BuildError {}

impl From<MccError> for BuildError {
    fn from(e: MccError) -> Self {
        BuildError::Relaxation(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubgradError {
    /// The relaxation LP is infeasible at this parameter point.
    InfeasibleAt,
    /// A sensitivity LP was infeasible or unbounded, signalling a violated
    /// regularity assumption rather than a numerical artifact.
    AssumptionViolated(String),
    Lp(LpError),
}

impl fmt::Display for SubgradError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubgradError::InfeasibleAt => write!(f, "relaxation infeasible at this point"),
            SubgradError::AssumptionViolated(what) => {
                write!(f, "sensitivity assumption violated: {what}")
            }
            SubgradError::Lp(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SubgradError {}

impl From<LpError> for SubgradError {
    fn from(e: LpError) -> Self {
        SubgradError::Lp(e)
    }
}

// ---------------------------------------------------------------------------
// Affine residual detection
// ---------------------------------------------------------------------------

/// Decide whether a residual graph is affine over its box and recover its
/// exact coefficients. Three stages: second differences must vanish along
/// every coordinate and coordinate pair, the McCormick relaxation values at a
/// handful of deterministic points must coincide, and the reconstructed
/// affine form must reproduce the graph on a sample grid. Any evaluation
/// failure classifies the residual as non-affine.
pub fn detect_affine(
    graph: &ExprGraph,
    z_box: &[Interval],
    p_box: &[Interval],
) -> Option<AffineResidual> {
    let n_z = graph.n_z();
    let n_p = graph.n_p();
    let dims = n_z + n_p;
    let mid: Vec<f64> = z_box.iter().chain(p_box).map(|b| b.midpoint()).collect();
    let widths: Vec<f64> = z_box.iter().chain(p_box).map(|b| b.width().max(1e-3)).collect();
    let eval = |point: &[f64]| -> Option<f64> {
        graph.eval_real(&point[..n_z], &point[n_z..]).ok()
    };
    let f_mid = eval(&mid)?;
    let scale = 1.0 + f_mid.abs();

    // second differences along coordinates and coordinate pairs
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for k in 0..dims {
        let mut d = vec![0.0; dims];
        d[k] = 1.0;
        dirs.push(d);
    }
    for i in 0..dims {
        for j in (i + 1)..dims {
            let mut d = vec![0.0; dims];
            d[i] = 1.0;
            d[j] = 1.0;
            dirs.push(d);
        }
    }
    for d in &dirs {
        let h = 0.25;
        let plus: Vec<f64> =
            mid.iter().zip(d).zip(&widths).map(|((m, dk), w)| m + h * dk * w).collect();
        let minus: Vec<f64> =
            mid.iter().zip(d).zip(&widths).map(|((m, dk), w)| m - h * dk * w).collect();
        let second = eval(&plus)? - 2.0 * f_mid + eval(&minus)?;
        if second.abs() > 1e-8 * scale {
            return None;
        }
    }

    // relaxation values must coincide at deterministic probe points
    let probes = crate::pwa::default_reference_points(z_box, p_box, 5);
    for probe in &probes {
        let m = eval_mccormick(graph, &probe[..n_z], &probe[n_z..], z_box, p_box).ok()?;
        if (m.cc() - m.cv()).abs() > 1e-9 * scale {
            return None;
        }
    }

    // exact coefficient reconstruction via tangent sweeps at the midpoint
    let mut coeffs = vec![0.0; dims];
    for k in 0..dims {
        let mut dz = vec![0.0; n_z];
        let mut dp = vec![0.0; n_p];
        if k < n_z {
            dz[k] = 1.0;
        } else {
            dp[k - n_z] = 1.0;
        }
        let (_, d) = graph.eval_tangent(&mid[..n_z], &mid[n_z..], &dz, &dp).ok()?;
        coeffs[k] = d;
    }
    let constant = f_mid - dot(&coeffs, &mid);
    let check_points = crate::pwa::default_reference_points(z_box, p_box, 20);
    for point in &check_points {
        let v = eval(point)?;
        let affine = dot(&coeffs, point) + constant;
        if (v - affine).abs() > 1e-9 * (1.0 + v.abs()) {
            return None;
        }
    }
    Some(AffineResidual {
        z_coeffs: coeffs[..n_z].to_vec(),
        p_coeffs: coeffs[n_z..].to_vec(),
        constant,
    })
}

// ---------------------------------------------------------------------------
// Problem construction
// ---------------------------------------------------------------------------

impl VectorImplicitProblem {
    /// Build from residual graphs: residuals detected affine become equality
    /// rows, the rest get subtangent-based relaxation pairs at the reference
    /// points. With a single state variable no affine split is performed, so
    /// the LP route shares its pieces with the closed-form pipeline.
    pub fn from_graphs(
        residuals: Vec<ExprGraph>,
        z_box: Vec<Interval>,
        p_box: Vec<Interval>,
        refs: &[Vec<f64>],
        tol_active: f64,
    ) -> Result<Self, BuildError> {
        if residuals.is_empty() {
            return Err(BuildError::NoResiduals);
        }
        let n_z = z_box.len();
        let n_p = p_box.len();
        for r in refs {
            if r.len() != n_z + n_p {
                return Err(BuildError::InvalidReference(format!(
                    "expected {} coordinates, got {}",
                    n_z + n_p,
                    r.len()
                )));
            }
            let inside = r[..n_z]
                .iter()
                .zip(&z_box)
                .chain(r[n_z..].iter().zip(&p_box))
                .all(|(v, b)| b.contains(*v));
            if !inside {
                return Err(BuildError::InvalidReference(format!("{r:?} outside the box")));
            }
        }
        let mut relaxed = Vec::new();
        let mut equalities = Vec::new();
        for (i, graph) in residuals.iter().enumerate() {
            let affine = if n_z > 1 { detect_affine(graph, &z_box, &p_box) } else { None };
            match affine {
                Some(eq) => equalities.push(eq),
                None => relaxed.push(RelaxedResidual {
                    residual: i,
                    pair: build_pwa(graph, &z_box, &p_box, refs)?,
                }),
            }
        }
        Self::from_parts(residuals, z_box, p_box, relaxed, equalities, tol_active)
    }

    /// Assemble from prepared parts (explicit pieces, synthetic problems).
    /// Verifies the linear independence of the equality state gradients.
    pub fn from_parts(
        residuals: Vec<ExprGraph>,
        z_box: Vec<Interval>,
        p_box: Vec<Interval>,
        relaxed: Vec<RelaxedResidual>,
        equalities: Vec<AffineResidual>,
        tol_active: f64,
    ) -> Result<Self, BuildError> {
        if !equalities.is_empty() {
            let rows: Vec<Vec<f64>> = equalities.iter().map(|e| e.z_coeffs.clone()).collect();
            if rank(&rows, 1e-10) < equalities.len() {
                return Err(BuildError::RankDeficientEqualities);
            }
        }
        Ok(VectorImplicitProblem {
            residuals,
            z_box,
            p_box,
            relaxed,
            equalities,
            tol_active,
            lp_cfg: LpConfig::default(),
        })
    }

    pub fn n_x(&self) -> usize {
        self.z_box.len()
    }

    pub fn n_p(&self) -> usize {
        self.p_box.len()
    }

    pub fn z_box(&self) -> &[Interval] {
        &self.z_box
    }

    pub fn p_box(&self) -> &[Interval] {
        &self.p_box
    }

    pub fn residual_graphs(&self) -> &[ExprGraph] {
        &self.residuals
    }

    pub fn relaxed(&self) -> &[RelaxedResidual] {
        &self.relaxed
    }

    pub fn equalities(&self) -> &[AffineResidual] {
        &self.equalities
    }

    pub fn tol_active(&self) -> f64 {
        self.tol_active
    }

    /// Total inequality row count: all pieces plus the `2·n_x` box facets.
    pub fn n_inequalities(&self) -> usize {
        self.relaxed
            .iter()
            .map(|r| r.pair.cv_pieces.len() + r.pair.cc_pieces.len())
            .sum::<usize>()
            + 2 * self.n_x()
    }

    /// The relaxation-value LP at `p` for component `i`: variables `ξ` in the
    /// state box, a `≤` row per cv piece, a `≥` row per cc piece, equality
    /// rows for affine residuals.
    fn value_lp(&self, p: &[f64], i: usize, sense: RelaxSense) -> LinearProgram {
        let n_x = self.n_x();
        let mut a_ub = Vec::new();
        let mut b_ub = Vec::new();
        for rr in &self.relaxed {
            for piece in &rr.pair.cv_pieces {
                // p_coeffs·p + z_coeffs·ξ + offset ≤ 0
                a_ub.push(piece.z_coeffs.clone());
                b_ub.push(-(dot(&piece.p_coeffs, p) + piece.offset));
            }
            for piece in &rr.pair.cc_pieces {
                // p_coeffs·p + z_coeffs·ξ + offset ≥ 0
                a_ub.push(piece.z_coeffs.iter().map(|c| -c).collect());
                b_ub.push(dot(&piece.p_coeffs, p) + piece.offset);
            }
        }
        let mut a_eq = Vec::new();
        let mut b_eq = Vec::new();
        for eq in &self.equalities {
            a_eq.push(eq.z_coeffs.clone());
            b_eq.push(-(dot(&eq.p_coeffs, p) + eq.constant));
        }
        let mut c = vec![0.0; n_x];
        c[i] = 1.0;
        LinearProgram {
            c,
            a_ub,
            b_ub,
            a_eq,
            b_eq,
            bounds: self.z_box.iter().map(|b| (b.lo(), b.hi())).collect(),
            sense: match sense {
                RelaxSense::Cv => Sense::Min,
                RelaxSense::Cc => Sense::Max,
            },
        }
    }

    /// Relaxation value of component `i` at `p`. Infeasible problems return
    /// `+∞` (cv) or `−∞` (cc) with no optimizer, following the optimal-value
    /// convention.
    pub fn relax_value(
        &self,
        p: &[f64],
        i: usize,
        sense: RelaxSense,
    ) -> Result<(f64, Option<Vec<f64>>), SubgradError> {
        assert!(i < self.n_x(), "component index out of range");
        assert_eq!(p.len(), self.n_p(), "parameter dimension mismatch");
        let lp = self.value_lp(p, i, sense);
        let sol = lp_solve_with(&lp, &self.lp_cfg)?;
        match sol.status {
            Status::Optimal => Ok((sol.value, Some(sol.x))),
            Status::Infeasible => Ok((
                match sense {
                    RelaxSense::Cv => f64::INFINITY,
                    RelaxSense::Cc => f64::NEG_INFINITY,
                },
                None,
            )),
            Status::Unbounded => Err(SubgradError::AssumptionViolated(
                "relaxation LP unbounded over a compact box".into(),
            )),
        }
    }

    /// Rows with residual magnitude within `tol` at `(ξ̂, p)`; equalities are
    /// always listed. Follows the fixed row enumeration order.
    pub fn identify_active(&self, p: &[f64], xi_hat: &[f64], tol: f64) -> ActiveSet {
        let mut inequalities = Vec::new();
        for (ri, rr) in self.relaxed.iter().enumerate() {
            for (pi, piece) in rr.pair.cv_pieces.iter().enumerate() {
                if piece.eval(xi_hat, p).abs() <= tol {
                    inequalities.push(RowId::CvPiece { relaxed: ri, piece: pi });
                }
            }
            for (pi, piece) in rr.pair.cc_pieces.iter().enumerate() {
                if piece.eval(xi_hat, p).abs() <= tol {
                    inequalities.push(RowId::CcPiece { relaxed: ri, piece: pi });
                }
            }
        }
        for (k, b) in self.z_box.iter().enumerate() {
            if (xi_hat[k] - b.lo()).abs() <= tol {
                inequalities.push(RowId::BoxLower(k));
            }
            if (b.hi() - xi_hat[k]).abs() <= tol {
                inequalities.push(RowId::BoxUpper(k));
            }
        }
        ActiveSet { inequalities, equalities: (0..self.equalities.len()).collect() }
    }

    /// Assemble the sensitivity system from an active set: each active
    /// inequality contributes its state gradient to `A` and its negated
    /// parameter gradient to `G_A`; equality rows likewise into `B`/`G_B`.
    pub fn build_sensitivity(
        &self,
        act: &ActiveSet,
        i: usize,
        sense: RelaxSense,
    ) -> SensitivitySystem {
        let n_x = self.n_x();
        let n_p = self.n_p();
        let mut a = Vec::new();
        let mut g_a = Vec::new();
        for row in &act.inequalities {
            match *row {
                RowId::CvPiece { relaxed, piece } => {
                    let piece = &self.relaxed[relaxed].pair.cv_pieces[piece];
                    a.push(piece.z_coeffs.clone());
                    g_a.push(piece.p_coeffs.iter().map(|c| -c).collect());
                }
                RowId::CcPiece { relaxed, piece } => {
                    let piece = &self.relaxed[relaxed].pair.cc_pieces[piece];
                    a.push(piece.z_coeffs.iter().map(|c| -c).collect());
                    g_a.push(piece.p_coeffs.clone());
                }
                RowId::BoxLower(k) => {
                    let mut row = vec![0.0; n_x];
                    row[k] = -1.0;
                    a.push(row);
                    g_a.push(vec![0.0; n_p]);
                }
                RowId::BoxUpper(k) => {
                    let mut row = vec![0.0; n_x];
                    row[k] = 1.0;
                    a.push(row);
                    g_a.push(vec![0.0; n_p]);
                }
            }
        }
        let mut b = Vec::new();
        let mut g_b = Vec::new();
        for &ei in &act.equalities {
            let eq = &self.equalities[ei];
            b.push(eq.z_coeffs.clone());
            g_b.push(eq.p_coeffs.iter().map(|c| -c).collect());
        }
        SensitivitySystem { a, g_a, b, g_b, obj_index: i, sense, n_x, n_p }
    }

    /// Compute a subgradient of the chosen relaxation of component `i` at
    /// `p`, dispatching on the parameter dimension. For the concave side the
    /// convex machinery runs on the negated component and the result is
    /// negated back.
    pub fn subgradient(
        &self,
        p: &[f64],
        i: usize,
        sense: RelaxSense,
    ) -> Result<SubgradientResult, SubgradError> {
        let (value, xi_hat) = self.relax_value(p, i, sense)?;
        let Some(xi_hat) = xi_hat else {
            return Err(SubgradError::InfeasibleAt);
        };
        let act = self.identify_active(p, &xi_hat, self.tol_active);
        let sys = self.build_sensitivity(&act, i, sense);
        let n_p = self.n_p();
        let (mut subgradient, regime, lps_solved, early_stop_stage) = match n_p {
            1 => (vec![subgrad_np1(&sys, &self.lp_cfg)?], Regime::Np1, 1, None),
            2 => (subgrad_np2(&sys, &self.lp_cfg)?, Regime::Np2, 4, None),
            _ => {
                let identity = identity_matrix(n_p);
                let out = ld_subgrad(&sys, &identity, &self.lp_cfg)?;
                (out.subgradient, Regime::LdSequence, out.lps_solved, out.early_stop_stage)
            }
        };
        if sense == RelaxSense::Cc {
            subgradient.iter_mut().for_each(|s| *s = -*s);
        }
        Ok(SubgradientResult { value, subgradient, regime, lps_solved, early_stop_stage })
    }

    /// Strict-feasibility margin at `p`: the largest `t` such that every
    /// inequality keeps slack `t` while the equalities hold. A margin near
    /// zero warns that the strong Slater condition is failing.
    pub fn slater_margin(&self, p: &[f64]) -> Result<f64, SubgradError> {
        let n_x = self.n_x();
        let base = self.value_lp(p, 0, RelaxSense::Cv);
        let mut a_ub: Vec<Vec<f64>> = Vec::new();
        let mut b_ub = Vec::new();
        for (row, &rhs) in base.a_ub.iter().zip(&base.b_ub) {
            let mut r = row.clone();
            r.push(1.0);
            a_ub.push(r);
            b_ub.push(rhs);
        }
        for (k, bx) in self.z_box.iter().enumerate() {
            let mut lower = vec![0.0; n_x + 1];
            lower[k] = -1.0;
            lower[n_x] = 1.0;
            a_ub.push(lower);
            b_ub.push(-bx.lo());
            let mut upper = vec![0.0; n_x + 1];
            upper[k] = 1.0;
            upper[n_x] = 1.0;
            a_ub.push(upper);
            b_ub.push(bx.hi());
        }
        let mut a_eq = Vec::new();
        for row in &base.a_eq {
            let mut r = row.clone();
            r.push(0.0);
            a_eq.push(r);
        }
        let mut c = vec![0.0; n_x + 1];
        c[n_x] = 1.0;
        let mut bounds: Vec<(f64, f64)> = vec![(f64::NEG_INFINITY, f64::INFINITY); n_x];
        bounds.push((f64::NEG_INFINITY, f64::INFINITY));
        let lp = LinearProgram {
            c,
            a_ub,
            b_ub,
            a_eq,
            b_eq: base.b_eq.clone(),
            bounds,
            sense: Sense::Max,
        };
        let sol = lp_solve_with(&lp, &self.lp_cfg)?;
        match sol.status {
            Status::Optimal => Ok(sol.value),
            Status::Infeasible => Ok(f64::NEG_INFINITY),
            Status::Unbounded => Err(SubgradError::AssumptionViolated(
                "slater margin unbounded".into(),
            )),
        }
    }

    pub fn lp_config(&self) -> &LpConfig {
        &self.lp_cfg
    }
}

fn identity_matrix(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            row
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Directional derivatives and subgradient regimes
// ---------------------------------------------------------------------------

/// Directional derivative of the relaxation (of `−x_i^cc` when the system was
/// built for the concave side) along `d`, as the optimal value of the
/// sensitivity LP: minimize `±w_i` subject to `A w ≤ G_A d`, `B w = G_B d`.
/// Infeasibility or unboundedness signals a violated regularity assumption.
pub fn dir_deriv(sys: &SensitivitySystem, d: &[f64], cfg: &LpConfig) -> Result<f64, SubgradError> {
    assert_eq!(d.len(), sys.n_p, "direction dimension mismatch");
    let mut c = vec![0.0; sys.n_x];
    c[sys.obj_index] = match sys.sense {
        RelaxSense::Cv => 1.0,
        RelaxSense::Cc => -1.0,
    };
    let lp = LinearProgram {
        c,
        a_ub: sys.a.clone(),
        b_ub: mat_vec(&sys.g_a, d),
        a_eq: sys.b.clone(),
        b_eq: mat_vec(&sys.g_b, d),
        bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); sys.n_x],
        sense: Sense::Min,
    };
    let sol = lp_solve_with(&lp, cfg)?;
    match sol.status {
        Status::Optimal => Ok(sol.value),
        Status::Infeasible => Err(SubgradError::AssumptionViolated(
            "directional-derivative LP infeasible".into(),
        )),
        Status::Unbounded => Err(SubgradError::AssumptionViolated(
            "directional-derivative LP unbounded (strict feasibility fails)".into(),
        )),
    }
}

/// One parameter: the directional derivative along `+1` is a subgradient.
pub fn subgrad_np1(sys: &SensitivitySystem, cfg: &LpConfig) -> Result<f64, SubgradError> {
    assert_eq!(sys.n_p, 1, "regime requires one parameter");
    dir_deriv(sys, &[1.0], cfg)
}

/// Two parameters: half-differences of the four cardinal directional
/// derivatives. Exactly four LP solves.
pub fn subgrad_np2(sys: &SensitivitySystem, cfg: &LpConfig) -> Result<Vec<f64>, SubgradError> {
    assert_eq!(sys.n_p, 2, "regime requires two parameters");
    let pe1 = dir_deriv(sys, &[1.0, 0.0], cfg)?;
    let me1 = dir_deriv(sys, &[-1.0, 0.0], cfg)?;
    let pe2 = dir_deriv(sys, &[0.0, 1.0], cfg)?;
    let me2 = dir_deriv(sys, &[0.0, -1.0], cfg)?;
    Ok(vec![0.5 * (pe1 - me1), 0.5 * (pe2 - me2)])
}

/// The dual LP of the directional-derivative problem for stage objective
/// `G·m`, with one accumulated cut per completed stage forcing optimality
/// for every earlier stage objective.
fn stage_lp(
    sys: &SensitivitySystem,
    g_stack: &[Vec<f64>],
    objective: &[f64],
    cuts: &[(Vec<f64>, f64)],
) -> LinearProgram {
    let n_a = sys.a.len();
    let n_b = sys.b.len();
    let n_dual = n_a + n_b;
    let _ = g_stack;
    // equality block: Aᵀλ_A + Bᵀλ_B = ±e_i
    let mut a_eq = vec![vec![0.0; n_dual]; sys.n_x];
    for (row_idx, row) in sys.a.iter().enumerate() {
        for t in 0..sys.n_x {
            a_eq[t][row_idx] = row[t];
        }
    }
    for (row_idx, row) in sys.b.iter().enumerate() {
        for t in 0..sys.n_x {
            a_eq[t][n_a + row_idx] = row[t];
        }
    }
    let mut b_eq = vec![0.0; sys.n_x];
    b_eq[sys.obj_index] = match sys.sense {
        RelaxSense::Cv => 1.0,
        RelaxSense::Cc => -1.0,
    };
    let mut a_ub = Vec::new();
    let mut b_ub = Vec::new();
    for (gm, v) in cuts {
        a_ub.push(gm.iter().map(|x| -x).collect());
        b_ub.push(-v);
    }
    let mut bounds = Vec::with_capacity(n_dual);
    bounds.extend(std::iter::repeat_n((f64::NEG_INFINITY, 0.0), n_a));
    bounds.extend(std::iter::repeat_n((f64::NEG_INFINITY, f64::INFINITY), n_b));
    LinearProgram {
        c: objective.to_vec(),
        a_ub,
        b_ub,
        a_eq,
        b_eq,
        bounds,
        sense: Sense::Max,
    }
}

/// Subgradient via the lexicographic dual LP sequence along the columns of a
/// square nonsingular direction matrix `m` (the identity in ordinary use).
///
/// Stage `j` maximizes `[G m_(j+1)]ᵀλ` over the dual-feasible set restricted
/// by cuts that pin optimality for all earlier stage objectives; the nested
/// optimal sets shrink toward a set whose members all yield valid
/// subgradients `Gᵀλ`. After every stage but the last a uniqueness
/// examination runs; a unique optimum ends the sequence early.
/// `lps_solved` counts stage LPs plus uniqueness examinations.
pub fn ld_subgrad(
    sys: &SensitivitySystem,
    m: &[Vec<f64>],
    cfg: &LpConfig,
) -> Result<LdOutcome, SubgradError> {
    let n_p = sys.n_p;
    assert_eq!(m.len(), n_p, "direction matrix must be square");
    assert!(m.iter().all(|row| row.len() == n_p), "direction matrix must be square");
    let is_identity = m
        .iter()
        .enumerate()
        .all(|(i, row)| row.iter().enumerate().all(|(j, &v)| v == if i == j { 1.0 } else { 0.0 }));
    if !is_identity && solve(m, &vec![0.0; n_p]).is_none() {
        return Err(SubgradError::AssumptionViolated("direction matrix is singular".into()));
    }

    // stacked parameter gradients [G_A; G_B]
    let g_stack: Vec<Vec<f64>> = sys.g_a.iter().chain(sys.g_b.iter()).cloned().collect();
    let columns: Vec<Vec<f64>> = (0..n_p).map(|j| m.iter().map(|row| row[j]).collect()).collect();
    let g_m: Vec<Vec<f64>> = columns.iter().map(|col| mat_vec(&g_stack, col)).collect();

    let mut cuts: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut stages = Vec::new();
    let mut lps_solved = 0;
    let mut early_stop_stage = None;
    let mut lambda: Vec<f64> = Vec::new();
    for stage in 0..n_p {
        let lp = stage_lp(sys, &g_stack, &g_m[stage], &cuts);
        lps_solved += 1;
        let mut sol = lp_solve_with(&lp, cfg)?;
        if sol.status == Status::Infeasible && stage > 0 {
            // accumulated cuts can turn marginally infeasible in floating
            // point; retry once with relaxed cut right-hand sides
            let mut relaxed = lp.clone();
            for b in relaxed.b_ub.iter_mut() {
                *b += 1e-7;
            }
            lps_solved += 1;
            sol = lp_solve_with(&relaxed, cfg)?;
        }
        match sol.status {
            Status::Optimal => {}
            Status::Infeasible => {
                return Err(SubgradError::AssumptionViolated(
                    "dual stage LP infeasible".into(),
                ))
            }
            Status::Unbounded => {
                return Err(SubgradError::AssumptionViolated(
                    "dual stage LP unbounded (directional derivative undefined)".into(),
                ))
            }
        }
        lambda = sol.x.clone();
        stages.push(LdStage { value: sol.value, multipliers: sol.x.clone() });
        if stage + 1 < n_p {
            lps_solved += 1;
            if crate::lp::optimal_face_is_singleton(&lp, &sol, cfg)? {
                early_stop_stage = Some(stage);
                break;
            }
            cuts.push((g_m[stage].clone(), sol.value));
        }
    }

    // LD row vector λᵀ(G M); the subgradient solves sᵀM = λᵀGM, which is
    // λᵀG directly for the identity
    let gt_lambda = mat_t_vec(&g_stack, &lambda);
    let subgradient = if is_identity {
        gt_lambda
    } else {
        let row: Vec<f64> = columns.iter().map(|col| dot(&gt_lambda, col)).collect();
        let mt: Vec<Vec<f64>> = (0..n_p).map(|i| (0..n_p).map(|j| m[j][i]).collect()).collect();
        solve(&mt, &row).ok_or_else(|| {
            SubgradError::AssumptionViolated("direction matrix is singular".into())
        })?
    };
    Ok(LdOutcome { subgradient, lps_solved, early_stop_stage, stages })
}
