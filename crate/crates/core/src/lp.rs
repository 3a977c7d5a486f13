//! Self-contained dense linear programming.
//!
//! A two-phase primal simplex over a dense tableau, with Bland's anti-cycling
//! rule for deterministic pivoting. Problem sizes in this crate are tiny
//! (rows + columns on the order of the state dimension plus a handful of
//! relaxation pieces), so a dense tableau is the right tool. The solver
//! certifies optimal solutions (primal feasibility, complementary slackness,
//! duality gap) and reports the active set at the optimum.
//!
//! [`optimal_face_is_singleton`] decides whether an optimal solution is
//! unique by re-optimizing deterministic probe objectives over the optimal
//! face. It is conservative: `false` is always safe for callers, `true` is
//! only reported when every probe lands on the same point.

use crate::linalg::dot;
use std::fmt;

/// Optimization sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// Dense LP data: objective, inequality rows `a_ub·x ≤ b_ub`, equality rows,
/// and per-variable bounds (`±inf` allowed).
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub sense: Sense,
}

impl LinearProgram {
    /// A minimization problem with no rows and free variables.
    pub fn minimize(c: Vec<f64>) -> Self {
        let n = c.len();
        LinearProgram {
            c,
            a_ub: Vec::new(),
            b_ub: Vec::new(),
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
            sense: Sense::Min,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    fn assert_consistent(&self) {
        let n = self.num_vars();
        assert!(n > 0, "LP must have at least one variable");
        assert_eq!(self.bounds.len(), n, "bounds dimension mismatch");
        assert_eq!(self.a_ub.len(), self.b_ub.len(), "inequality block mismatch");
        assert_eq!(self.a_eq.len(), self.b_eq.len(), "equality block mismatch");
        for row in self.a_ub.iter().chain(&self.a_eq) {
            assert_eq!(row.len(), n, "row dimension mismatch");
        }
        for v in self.c.iter().chain(&self.b_ub).chain(&self.b_eq) {
            assert!(v.is_finite(), "LP data must be finite");
        }
    }

    /// Fixed human-readable dump for debugging (stable ordering).
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Min => "min",
            Sense::Max => "max",
        };
        out.push_str(&format!("{sense} {:?}\n", self.c));
        for (row, b) in self.a_ub.iter().zip(&self.b_ub) {
            out.push_str(&format!("  {row:?} <= {b}\n"));
        }
        for (row, b) in self.a_eq.iter().zip(&self.b_eq) {
            out.push_str(&format!("  {row:?} == {b}\n"));
        }
        for (j, (lo, hi)) in self.bounds.iter().enumerate() {
            out.push_str(&format!("  x{j} in [{lo}, {hi}]\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

/// A constraint holding with equality at the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveConstraint {
    UbRow(usize),
    EqRow(usize),
    LowerBound(usize),
    UpperBound(usize),
}

/// Certification residuals of an optimal solution.
#[derive(Debug, Clone, Copy, Default)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub comp_slack: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    /// Primal point (empty unless optimal).
    pub x: Vec<f64>,
    /// Objective value in the problem's own sense (NaN unless optimal).
    pub value: f64,
    /// Row multipliers `[ub rows..., eq rows...]` in the Lagrangian
    /// convention of the minimization form: `λ_ub ≥ 0` and
    /// `c + A_ubᵀλ_ub + A_eqᵀλ_eq` vanishes against the variable bounds.
    /// For `Max` problems these are the multipliers of the negated objective.
    pub duals: Vec<f64>,
    /// Active-set certificate at the optimum.
    pub active_set: Vec<ActiveConstraint>,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpError {
    /// Iteration cap or a pivot below the numerical threshold.
    NumericalBreakdown(String),
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::NumericalBreakdown(what) => write!(f, "LP numerical breakdown: {what}"),
        }
    }
}

impl std::error::Error for LpError {}

/// Centralized solver tolerances, overridable per call.
#[derive(Debug, Clone, Copy)]
pub struct LpConfig {
    pub feas_tol: f64,
    pub tie_tol: f64,
    pub pivot_tol: f64,
    pub max_iter: usize,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig { feas_tol: 1e-8, tie_tol: 1e-9, pivot_tol: 1e-10, max_iter: 10_000 }
    }
}

pub fn lp_solve(lp: &LinearProgram) -> Result<Solution, LpError> {
    lp_solve_with(lp, &LpConfig::default())
}

pub fn lp_solve_with(lp: &LinearProgram, cfg: &LpConfig) -> Result<Solution, LpError> {
    lp.assert_consistent();
    let mut tab = Tableau::build(lp);
    match tab.run(cfg)? {
        Status::Optimal => {
            let x = tab.extract_x(lp);
            let duals = tab.extract_duals(lp);
            let value = dot(&lp.c, &x);
            let active_set = active_set(lp, &x, cfg.feas_tol);
            let residuals = certify(lp, &x, &duals);
            Ok(Solution { status: Status::Optimal, x, value, duals, active_set, residuals })
        }
        status => Ok(Solution {
            status,
            x: Vec::new(),
            value: f64::NAN,
            duals: Vec::new(),
            active_set: Vec::new(),
            residuals: Residuals::default(),
        }),
    }
}

// ---------------------------------------------------------------------------
// Standard-form tableau
// ---------------------------------------------------------------------------

/// How an original variable maps onto nonnegative internal columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = lo + t`
    Shifted { col: usize, lo: f64 },
    /// `x = hi - t`
    Mirrored { col: usize, hi: f64 },
    /// `x = t⁺ - t⁻`
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowOrigin {
    Ub(usize),
    Eq(usize),
    /// Internal upper-bound row `t ≤ hi - lo` for a doubly bounded variable.
    VarUpper,
}

struct Tableau {
    /// rows × (cols + 1); the last column is the right-hand side
    rows: Vec<Vec<f64>>,
    /// phase-1 and phase-2 reduced-cost rows, same layout
    cost1: Vec<f64>,
    cost2: Vec<f64>,
    basis: Vec<usize>,
    n_struct: usize,
    first_artificial: usize,
    n_cols: usize,
    var_map: Vec<VarMap>,
    /// per tableau row: origin and the scaling applied to reach rhs ≥ 0
    row_origin: Vec<(RowOrigin, f64)>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.num_vars();
        let sense_factor = match lp.sense {
            Sense::Min => 1.0,
            Sense::Max => -1.0,
        };

        // map variables to nonnegative internal columns
        let mut var_map = Vec::with_capacity(n);
        let mut n_struct = 0;
        let mut upper_rows: Vec<(usize, f64)> = Vec::new(); // (col, hi - lo)
        for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
            debug_assert!(lo <= hi, "variable {j} has crossed bounds");
            if lo.is_finite() {
                var_map.push(VarMap::Shifted { col: n_struct, lo });
                if hi.is_finite() {
                    upper_rows.push((n_struct, hi - lo));
                }
                n_struct += 1;
            } else if hi.is_finite() {
                var_map.push(VarMap::Mirrored { col: n_struct, hi });
                n_struct += 1;
            } else {
                var_map.push(VarMap::Split { pos: n_struct, neg: n_struct + 1 });
                n_struct += 2;
            }
        }

        // transform a row of original coefficients into internal columns,
        // returning the adjusted right-hand side
        let transform = |coeffs: &[f64], rhs: f64| -> (Vec<f64>, f64) {
            let mut t = vec![0.0; n_struct];
            let mut b = rhs;
            for (j, &a) in coeffs.iter().enumerate() {
                match var_map[j] {
                    VarMap::Shifted { col, lo } => {
                        t[col] += a;
                        b -= a * lo;
                    }
                    VarMap::Mirrored { col, hi } => {
                        t[col] -= a;
                        b -= a * hi;
                    }
                    VarMap::Split { pos, neg } => {
                        t[pos] += a;
                        t[neg] -= a;
                    }
                }
            }
            (t, b)
        };

        struct RawRow {
            coeffs: Vec<f64>,
            rhs: f64,
            is_eq: bool,
            origin: RowOrigin,
        }
        let mut raw: Vec<RawRow> = Vec::new();
        for (i, (row, &b)) in lp.a_ub.iter().zip(&lp.b_ub).enumerate() {
            let (coeffs, rhs) = transform(row, b);
            raw.push(RawRow { coeffs, rhs, is_eq: false, origin: RowOrigin::Ub(i) });
        }
        for (i, (row, &b)) in lp.a_eq.iter().zip(&lp.b_eq).enumerate() {
            let (coeffs, rhs) = transform(row, b);
            raw.push(RawRow { coeffs, rhs, is_eq: true, origin: RowOrigin::Eq(i) });
        }
        for &(col, ub) in &upper_rows {
            let mut coeffs = vec![0.0; n_struct];
            coeffs[col] = 1.0;
            raw.push(RawRow { coeffs, rhs: ub, is_eq: false, origin: RowOrigin::VarUpper });
        }

        let m = raw.len();
        let n_slack = raw.iter().filter(|r| !r.is_eq).count();
        let n_cols = n_struct + n_slack + m; // artificial slots for every row
        let first_artificial = n_struct + n_slack;

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut row_origin = Vec::with_capacity(m);
        let mut slack_idx = n_struct;
        let mut artificial_used = 0usize;
        for r in raw.into_iter() {
            let scale = if r.rhs < 0.0 { -1.0 } else { 1.0 };
            let mut row = vec![0.0; n_cols + 1];
            for (k, &a) in r.coeffs.iter().enumerate() {
                row[k] = scale * a;
            }
            row[n_cols] = scale * r.rhs;
            let mut basic = None;
            if !r.is_eq {
                row[slack_idx] = scale;
                if scale > 0.0 {
                    basic = Some(slack_idx);
                }
                slack_idx += 1;
            }
            let basic = basic.unwrap_or_else(|| {
                let a_col = first_artificial + artificial_used;
                artificial_used += 1;
                row[a_col] = 1.0;
                a_col
            });
            basis.push(basic);
            rows.push(row);
            row_origin.push((r.origin, scale));
        }

        // internal minimization objective
        let mut c_internal = vec![0.0; n_struct];
        for (j, &cj) in lp.c.iter().enumerate() {
            let cj = cj * sense_factor;
            match var_map[j] {
                VarMap::Shifted { col, .. } => c_internal[col] += cj,
                VarMap::Mirrored { col, .. } => c_internal[col] -= cj,
                VarMap::Split { pos, neg } => {
                    c_internal[pos] += cj;
                    c_internal[neg] -= cj;
                }
            }
        }

        // reduced-cost rows, eliminated against the starting basis
        let mut cost1 = vec![0.0; n_cols + 1];
        for a in first_artificial..n_cols {
            cost1[a] = 1.0;
        }
        let mut cost2 = vec![0.0; n_cols + 1];
        cost2[..n_struct].copy_from_slice(&c_internal);
        for (i, &b) in basis.iter().enumerate() {
            if b >= first_artificial {
                for k in 0..=n_cols {
                    cost1[k] -= rows[i][k];
                }
            }
            // starting basics are slacks or artificials: cost2 coefficient 0
        }

        Tableau {
            rows,
            cost1,
            cost2,
            basis,
            n_struct,
            first_artificial,
            n_cols,
            var_map,
            row_origin,
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let m = self.rows.len();
        let p = self.rows[row][col];
        for k in 0..=self.n_cols {
            self.rows[row][k] /= p;
        }
        for i in 0..m {
            if i == row {
                continue;
            }
            let f = self.rows[i][col];
            if f != 0.0 {
                for k in 0..=self.n_cols {
                    self.rows[i][k] -= f * self.rows[row][k];
                }
                self.rows[i][col] = 0.0;
            }
        }
        for cost in [&mut self.cost1, &mut self.cost2] {
            let f = cost[col];
            if f != 0.0 {
                for k in 0..=self.n_cols {
                    cost[k] -= f * self.rows[row][k];
                }
                cost[col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule: lowest-index entering column with negative reduced cost;
    /// leaving row by the ratio test with lowest basic index on ties.
    fn simplex(&mut self, phase1: bool, cfg: &LpConfig) -> Result<Status, LpError> {
        let col_limit = if phase1 { self.n_cols } else { self.first_artificial };
        for _ in 0..cfg.max_iter {
            let cost = if phase1 { &self.cost1 } else { &self.cost2 };
            let entering = (0..col_limit).find(|&j| cost[j] < -cfg.tie_tol);
            let Some(e) = entering else {
                return Ok(Status::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][e];
                if a > cfg.pivot_tol {
                    let ratio = (self.rows[i][self.n_cols] / a).max(0.0);
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - cfg.tie_tol
                                || (ratio < lr + cfg.tie_tol && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((l, _)) = leave else {
                return Ok(Status::Unbounded);
            };
            self.pivot(l, e);
        }
        Err(LpError::NumericalBreakdown("simplex iteration cap exceeded".into()))
    }

    fn run(&mut self, cfg: &LpConfig) -> Result<Status, LpError> {
        if self.basis.iter().any(|&b| b >= self.first_artificial) {
            match self.simplex(true, cfg)? {
                Status::Optimal => {}
                Status::Unbounded => {
                    return Err(LpError::NumericalBreakdown(
                        "phase 1 reported unbounded".into(),
                    ))
                }
                s => return Ok(s),
            }
            let infeas: f64 = self
                .basis
                .iter()
                .enumerate()
                .filter(|(_, &b)| b >= self.first_artificial)
                .map(|(i, _)| self.rows[i][self.n_cols].max(0.0))
                .sum();
            if infeas > cfg.feas_tol {
                return Ok(Status::Infeasible);
            }
            // drive remaining zero-level artificials out of the basis where a
            // nonzero pivot exists; all-zero rows are redundant and inert
            for i in 0..self.rows.len() {
                if self.basis[i] >= self.first_artificial {
                    if let Some(col) = (0..self.first_artificial)
                        .find(|&j| self.rows[i][j].abs() > cfg.pivot_tol)
                    {
                        self.pivot(i, col);
                    }
                }
            }
        }
        self.simplex(false, cfg)
    }

    fn internal_x(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.n_cols];
        for (i, &b) in self.basis.iter().enumerate() {
            t[b] = self.rows[i][self.n_cols];
        }
        t
    }

    fn extract_x(&self, lp: &LinearProgram) -> Vec<f64> {
        let t = self.internal_x();
        lp.bounds
            .iter()
            .enumerate()
            .map(|(j, _)| match self.var_map[j] {
                VarMap::Shifted { col, lo } => lo + t[col],
                VarMap::Mirrored { col, hi } => hi - t[col],
                VarMap::Split { pos, neg } => t[pos] - t[neg],
            })
            .collect()
    }

    /// Row multipliers `y = B⁻ᵀ c_B` read off the final reduced costs: each
    /// row owns a unit column (its slack, or its artificial for equality
    /// rows) whose reduced cost is `c_j − yᵀA_j` with `A_j` a scaled unit
    /// vector and `c_j = 0`.
    fn extract_duals(&self, lp: &LinearProgram) -> Vec<f64> {
        let mut y = vec![0.0; self.rows.len()];
        let mut slack_idx = self.n_struct;
        let mut artificial_idx = self.first_artificial;
        for (i, &(origin, scale)) in self.row_origin.iter().enumerate() {
            let is_eq = matches!(origin, RowOrigin::Eq(_));
            let (unit_col, a_unit);
            if is_eq {
                unit_col = artificial_idx;
                a_unit = 1.0;
                artificial_idx += 1;
            } else {
                unit_col = slack_idx;
                a_unit = scale;
                slack_idx += 1;
                if scale < 0.0 {
                    artificial_idx += 1;
                }
            }
            y[i] = -self.cost2[unit_col] / a_unit;
        }
        // Lagrangian multipliers of the minimization form: undo the row
        // scaling and flip sign (λ_ub = −y for slack-form rows). Variable
        // upper-bound rows fold into bound multipliers and are not reported.
        let mut duals = vec![0.0; lp.a_ub.len() + lp.b_eq.len()];
        for (i, &(origin, scale)) in self.row_origin.iter().enumerate() {
            let lambda = -scale * y[i];
            match origin {
                RowOrigin::Ub(k) => duals[k] = lambda,
                RowOrigin::Eq(k) => duals[lp.a_ub.len() + k] = lambda,
                RowOrigin::VarUpper => {}
            }
        }
        duals
    }
}

fn active_set(lp: &LinearProgram, x: &[f64], tol: f64) -> Vec<ActiveConstraint> {
    let mut act = Vec::new();
    for (i, (row, &b)) in lp.a_ub.iter().zip(&lp.b_ub).enumerate() {
        if (dot(row, x) - b).abs() <= tol {
            act.push(ActiveConstraint::UbRow(i));
        }
    }
    for i in 0..lp.a_eq.len() {
        act.push(ActiveConstraint::EqRow(i));
    }
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        if lo.is_finite() && (x[j] - lo).abs() <= tol {
            act.push(ActiveConstraint::LowerBound(j));
        }
        if hi.is_finite() && (hi - x[j]).abs() <= tol {
            act.push(ActiveConstraint::UpperBound(j));
        }
    }
    act
}

/// Certification residuals in the minimization convention.
fn certify(lp: &LinearProgram, x: &[f64], duals: &[f64]) -> Residuals {
    let sense = match lp.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let n_ub = lp.a_ub.len();
    let mut primal: f64 = 0.0;
    for (row, &b) in lp.a_ub.iter().zip(&lp.b_ub) {
        primal = primal.max(dot(row, x) - b);
    }
    for (row, &b) in lp.a_eq.iter().zip(&lp.b_eq) {
        primal = primal.max((dot(row, x) - b).abs());
    }
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        primal = primal.max(lo - x[j]).max(x[j] - hi);
    }

    let mut comp_slack: f64 = 0.0;
    let mut dual_feas: f64 = 0.0;
    // stationarity vector d = c_min + A_ubᵀλ_ub + A_eqᵀλ_eq
    let mut d: Vec<f64> = lp.c.iter().map(|&cj| cj * sense).collect();
    for (i, (row, &b)) in lp.a_ub.iter().zip(&lp.b_ub).enumerate() {
        let lambda = duals[i];
        dual_feas = dual_feas.max(-lambda); // λ_ub ≥ 0
        comp_slack = comp_slack.max((lambda * (dot(row, x) - b)).abs());
        for (dj, &a) in d.iter_mut().zip(row) {
            *dj += lambda * a;
        }
    }
    for (i, row) in lp.a_eq.iter().enumerate() {
        let lambda = duals[n_ub + i];
        for (dj, &a) in d.iter_mut().zip(row) {
            *dj += lambda * a;
        }
    }
    // d_j must push against an active bound: ≥ 0 at lower, ≤ 0 at upper
    let tol_bound = 1e-7;
    let mut dual_value = 0.0;
    for (i, &b) in lp.b_ub.iter().enumerate() {
        dual_value -= duals[i] * b;
    }
    for (i, &b) in lp.b_eq.iter().enumerate() {
        dual_value -= duals[n_ub + i] * b;
    }
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        let dj = d[j];
        let at_lo = lo.is_finite() && (x[j] - lo).abs() <= tol_bound;
        let at_hi = hi.is_finite() && (hi - x[j]).abs() <= tol_bound;
        if at_lo && at_hi {
            // fixed variable: any d_j is consistent
        } else if at_lo {
            dual_feas = dual_feas.max(-dj);
        } else if at_hi {
            dual_feas = dual_feas.max(dj);
        } else {
            dual_feas = dual_feas.max(dj.abs());
        }
        // bound contribution min_{x_j ∈ [lo, hi]} d_j x_j of the dual value
        dual_value += if dj > tol_bound {
            if lo.is_finite() { dj * lo } else { f64::NEG_INFINITY }
        } else if dj < -tol_bound {
            if hi.is_finite() { dj * hi } else { f64::NEG_INFINITY }
        } else {
            // a vanishing stationarity residual contributes nothing
            0.0
        };
    }
    let obj_min = sense * dot(&lp.c, x);
    let gap = (obj_min - dual_value).abs();
    Residuals { primal: primal.max(0.0), dual: dual_feas.max(0.0), comp_slack, gap }
}

/// Deterministic uniqueness test for the optimal solution set: fix the
/// optimal face with the extra constraint `c·x = value`, then re-optimize a
/// probe objective along ± every coordinate direction and one strictly
/// positive combination. Reports `true` only when every probe returns the
/// same point within `1e-9`; any unbounded or failed probe reports `false`.
pub fn optimal_face_is_singleton(
    lp: &LinearProgram,
    sol: &Solution,
    cfg: &LpConfig,
) -> Result<bool, LpError> {
    assert_eq!(sol.status, Status::Optimal, "uniqueness test requires an optimal solution");
    let n = lp.num_vars();
    let mut face = lp.clone();
    face.sense = Sense::Min;
    face.a_eq.push(lp.c.clone());
    face.b_eq.push(dot(&lp.c, &sol.x));

    let mut reference: Option<Vec<f64>> = None;
    let mut probes: Vec<Vec<f64>> = Vec::with_capacity(2 * n + 1);
    for j in 0..n {
        let mut plus = vec![0.0; n];
        plus[j] = 1.0;
        let mut minus = vec![0.0; n];
        minus[j] = -1.0;
        probes.push(plus);
        probes.push(minus);
    }
    probes.push((0..n).map(|j| 1.0 / (j + 1) as f64).collect());

    for probe in probes {
        face.c = probe;
        let s = lp_solve_with(&face, cfg)?;
        if s.status != Status::Optimal {
            return Ok(false);
        }
        match &reference {
            None => reference = Some(s.x),
            Some(r) => {
                let dist = r
                    .iter()
                    .zip(&s.x)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if dist > 1e-9 {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_lp() -> LinearProgram {
        // min -x - y  s.t.  x + y ≤ 1, x ≥ 0, y ≥ 0
        LinearProgram {
            c: vec![-1.0, -1.0],
            a_ub: vec![vec![1.0, 1.0]],
            b_ub: vec![1.0],
            a_eq: vec![],
            b_eq: vec![],
            bounds: vec![(0.0, f64::INFINITY), (0.0, f64::INFINITY)],
            sense: Sense::Min,
        }
    }

    #[test]
    fn optimal_edge_value() {
        let sol = lp_solve(&simple_lp()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.value + 1.0).abs() < 1e-10);
        // any vertex of the optimal edge is acceptable
        let (x, y) = (sol.x[0], sol.x[1]);
        assert!((x + y - 1.0).abs() < 1e-10 && x >= -1e-10 && y >= -1e-10);
        // Lagrangian multiplier of the single row
        assert!((sol.duals[0] - 1.0).abs() < 1e-9);
        assert!(sol.residuals.primal <= 1e-8);
        assert!(sol.residuals.comp_slack <= 1e-8);
        assert!(sol.residuals.gap <= 1e-8 * (1.0 + sol.value.abs()));
    }

    #[test]
    fn infeasible_detected() {
        // x ≤ -1 and x ≥ 0
        let lp = LinearProgram {
            c: vec![1.0],
            a_ub: vec![vec![1.0]],
            b_ub: vec![-1.0],
            a_eq: vec![],
            b_eq: vec![],
            bounds: vec![(0.0, f64::INFINITY)],
            sense: Sense::Min,
        };
        assert_eq!(lp_solve(&lp).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        // min -x s.t. x ≥ 0
        let lp = LinearProgram {
            c: vec![-1.0],
            a_ub: vec![],
            b_ub: vec![],
            a_eq: vec![],
            b_eq: vec![],
            bounds: vec![(0.0, f64::INFINITY)],
            sense: Sense::Min,
        };
        assert_eq!(lp_solve(&lp).unwrap().status, Status::Unbounded);
    }

    #[test]
    fn max_sense_and_free_variables() {
        // max x - y s.t. x + y = 2, -1 ≤ x ≤ 3, y free with y ≥ x - 4
        let lp = LinearProgram {
            c: vec![1.0, -1.0],
            a_ub: vec![vec![1.0, -1.0]],
            b_ub: vec![4.0],
            a_eq: vec![vec![1.0, 1.0]],
            b_eq: vec![2.0],
            bounds: vec![(-1.0, 3.0), (f64::NEG_INFINITY, f64::INFINITY)],
            sense: Sense::Max,
        };
        let sol = lp_solve(&lp).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        // optimum at x = 3, y = -1 (value 4)
        assert!((sol.value - 4.0).abs() < 1e-9);
        assert!((sol.x[0] - 3.0).abs() < 1e-9);
        assert!((sol.x[1] + 1.0).abs() < 1e-9);
        assert!(sol
            .active_set
            .contains(&ActiveConstraint::UpperBound(0)));
    }

    #[test]
    fn equality_pins_value() {
        // min x2 s.t. x1 = 3, x2 - x1 = 0, x in [0,10]²
        let lp = LinearProgram {
            c: vec![0.0, 1.0],
            a_ub: vec![],
            b_ub: vec![],
            a_eq: vec![vec![1.0, 0.0], vec![-1.0, 1.0]],
            b_eq: vec![3.0, 0.0],
            bounds: vec![(0.0, 10.0), (0.0, 10.0)],
            sense: Sense::Min,
        };
        let sol = lp_solve(&lp).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn face_test_detects_optimal_edge() {
        let lp = simple_lp();
        let sol = lp_solve(&lp).unwrap();
        assert!(!optimal_face_is_singleton(&lp, &sol, &LpConfig::default()).unwrap());
    }

    #[test]
    fn face_test_confirms_unique_point() {
        // min x + y s.t. x + y ≥ 1, x - y = 0, x,y ≥ 0: unique (0.5, 0.5)
        let lp = LinearProgram {
            c: vec![1.0, 1.0],
            a_ub: vec![vec![-1.0, -1.0]],
            b_ub: vec![-1.0],
            a_eq: vec![vec![1.0, -1.0]],
            b_eq: vec![0.0],
            bounds: vec![(0.0, f64::INFINITY), (0.0, f64::INFINITY)],
            sense: Sense::Min,
        };
        let sol = lp_solve(&lp).unwrap();
        assert!((sol.x[0] - 0.5).abs() < 1e-9);
        assert!(optimal_face_is_singleton(&lp, &sol, &LpConfig::default()).unwrap());
    }

    #[test]
    fn face_test_handles_degenerate_unique_vertex() {
        // minimum at (0,0) where three constraints meet (one redundant)
        let lp = LinearProgram {
            c: vec![1.0, 1.0],
            a_ub: vec![vec![-1.0, -1.0]],
            b_ub: vec![0.0],
            a_eq: vec![],
            b_eq: vec![],
            bounds: vec![(0.0, 5.0), (0.0, 5.0)],
            sense: Sense::Min,
        };
        let sol = lp_solve(&lp).unwrap();
        assert!((sol.value - 0.0).abs() < 1e-10);
        assert!(optimal_face_is_singleton(&lp, &sol, &LpConfig::default()).unwrap());
    }

    #[test]
    fn deterministic_given_identical_input() {
        let lp = simple_lp();
        let a = lp_solve(&lp).unwrap();
        let b = lp_solve(&lp).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
