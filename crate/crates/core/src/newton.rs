//! Damped Newton solver for the residual system, used as the reference
//! evaluation of the true implicit function when validating relaxations.

use crate::expr::{EvalError, ExprGraph};
use crate::interval::Interval;
use crate::linalg::solve;
use std::fmt;

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Residual ∞-norm convergence bound.
    pub tol: f64,
    /// Backtracking factor for the damped step.
    pub damping: f64,
    /// Clamp iterates into the state box.
    pub box_projection: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iter: 100, tol: 1e-10, damping: 0.5, box_projection: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NewtonError {
    NoConvergence { iterations: usize, residual_norm: f64 },
    /// A second singular Jacobian after the gradient-step rescue.
    SingularJacobian { iteration: usize },
    Eval(EvalError),
}

impl fmt::Display for NewtonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NewtonError::NoConvergence { iterations, residual_norm } => {
                write!(
                    f,
                    "no convergence after {iterations} iterations (residual {residual_norm:.3e})"
                )
            }
            NewtonError::SingularJacobian { iteration } => {
                write!(f, "singular Jacobian at iteration {iteration}")
            }
            NewtonError::Eval(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for NewtonError {}

impl From<EvalError> for NewtonError {
    fn from(e: EvalError) -> Self {
        NewtonError::Eval(e)
    }
}

fn residual(graphs: &[ExprGraph], x: &[f64], p: &[f64]) -> Result<Vec<f64>, EvalError> {
    graphs.iter().map(|g| g.eval_real(x, p)).collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Jacobian columns via tangent sweeps along the state unit directions.
fn jacobian(graphs: &[ExprGraph], x: &[f64], p: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
    let n = x.len();
    let dp = vec![0.0; p.len()];
    let mut jac = vec![vec![0.0; n]; graphs.len()];
    for k in 0..n {
        let mut dz = vec![0.0; n];
        dz[k] = 1.0;
        for (i, g) in graphs.iter().enumerate() {
            let (_, d) = g.eval_tangent(x, p, &dz, &dp)?;
            jac[i][k] = d;
        }
    }
    Ok(jac)
}

/// Solve `f(x, p) = 0` for `x` from the starting point `x0 ∈ z_box`.
///
/// Damped Newton with backtracking; a singular Jacobian is rescued once with
/// a gradient step on `½‖f‖²`, a second occurrence fails. Identical inputs
/// produce identical iterates.
pub fn newton_solve(
    graphs: &[ExprGraph],
    p: &[f64],
    x0: &[f64],
    z_box: &[Interval],
    opts: &NewtonOptions,
) -> Result<Vec<f64>, NewtonError> {
    assert_eq!(graphs.len(), x0.len(), "system must be square");
    assert_eq!(z_box.len(), x0.len(), "state box dimension mismatch");
    let mut x = x0.to_vec();
    let mut f = residual(graphs, &x, p)?;
    let mut rescued = false;
    for iter in 0..opts.max_iter {
        let norm = inf_norm(&f);
        if norm <= opts.tol {
            return Ok(x);
        }
        let jac = jacobian(graphs, &x, p)?;
        let step = match solve(&jac, &f) {
            Some(s) => s,
            None => {
                if rescued {
                    return Err(NewtonError::SingularJacobian { iteration: iter });
                }
                rescued = true;
                // gradient of ½‖f‖²: Jᵀf, normalized to a unit-size step
                let mut g = vec![0.0; x.len()];
                for (row, fi) in jac.iter().zip(&f) {
                    for (gk, a) in g.iter_mut().zip(row) {
                        *gk += a * fi;
                    }
                }
                let gn = inf_norm(&g);
                if gn < 1e-14 {
                    return Err(NewtonError::SingularJacobian { iteration: iter });
                }
                g.iter_mut().for_each(|v| *v /= gn);
                g
            }
        };
        // backtracking on the residual norm
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-12 {
            let mut trial: Vec<f64> =
                x.iter().zip(&step).map(|(xi, s)| xi - lambda * s).collect();
            if opts.box_projection {
                for (t, b) in trial.iter_mut().zip(z_box) {
                    *t = b.clamp(*t);
                }
            }
            match residual(graphs, &trial, p) {
                Ok(tf) if inf_norm(&tf) < norm => {
                    x = trial;
                    f = tf;
                    accepted = true;
                    break;
                }
                _ => lambda *= opts.damping,
            }
        }
        if !accepted {
            return Err(NewtonError::NoConvergence { iterations: iter, residual_norm: norm });
        }
    }
    let norm = inf_norm(&f);
    if norm <= opts.tol {
        Ok(x)
    } else {
        Err(NewtonError::NoConvergence { iterations: opts.max_iter, residual_norm: norm })
    }
}

/// Newton from the box midpoint, falling back to the box corners (capped at
/// 16 starts) on failure. Deterministic start ordering.
pub fn newton_multistart(
    graphs: &[ExprGraph],
    p: &[f64],
    z_box: &[Interval],
    opts: &NewtonOptions,
) -> Result<Vec<f64>, NewtonError> {
    let mid: Vec<f64> = z_box.iter().map(|b| b.midpoint()).collect();
    let first = newton_solve(graphs, p, &mid, z_box, opts);
    if first.is_ok() {
        return first;
    }
    let n = z_box.len();
    let corners = 1usize << n.min(4);
    for mask in 0..corners {
        let x0: Vec<f64> = z_box
            .iter()
            .enumerate()
            .map(|(k, b)| if mask >> k & 1 == 1 { b.hi() } else { b.lo() })
            .collect();
        if let Ok(x) = newton_solve(graphs, p, &x0, z_box, opts) {
            return Ok(x);
        }
    }
    first
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn square_root_of_four() {
        let g = ExprGraph::parse("z1^2 - p1", 1, 1).unwrap();
        let x = newton_solve(&[g], &[4.0], &[3.0], &[iv(0.5, 5.0)], &NewtonOptions::default())
            .unwrap();
        assert!((x[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn van_der_waals_root_matches_bisection() {
        let g = ExprGraph::parse("(p1 + 3.610*1/(z1^2))*(z1 - 0.0429) - 0.0820574*p2", 1, 2)
            .unwrap();
        let p = [1.0, 300.0];
        let eval = |v: f64| g.eval_real(&[v], &p).unwrap();
        // bisection oracle on [10, 70]
        let (mut lo, mut hi) = (10.0f64, 70.0f64);
        assert!(eval(lo) < 0.0 && eval(hi) > 0.0);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if eval(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let x = newton_solve(&[g], &p, &[40.0], &[iv(10.0, 70.0)], &NewtonOptions::default())
            .unwrap();
        assert!((x[0] - oracle).abs() < 1e-7, "newton {} vs bisection {}", x[0], oracle);
    }

    #[test]
    fn no_root_in_box_fails() {
        let g = ExprGraph::parse("z1^2 + 1", 1, 0).unwrap();
        let r = newton_solve(&[g], &[], &[0.5], &[iv(-1.0, 1.0)], &NewtonOptions::default());
        assert!(r.is_err());
    }

    #[test]
    fn roots_satisfy_residual_tolerance() {
        let g1 = ExprGraph::parse("z1 + z2 - p1", 2, 1).unwrap();
        let g2 = ExprGraph::parse("z1*z2 - 1", 2, 1).unwrap();
        let graphs = [g1, g2];
        let zb = [iv(0.1, 5.0), iv(0.1, 5.0)];
        let opts = NewtonOptions::default();
        let x = newton_multistart(&graphs, &[3.0], &zb, &opts).unwrap();
        for g in &graphs {
            assert!(g.eval_real(&x, &[3.0]).unwrap().abs() <= opts.tol);
        }
    }

    #[test]
    fn deterministic_iterates() {
        let g = ExprGraph::parse("exp(z1) - p1", 1, 1).unwrap();
        let zb = [iv(-1.0, 3.0)];
        let a =
            newton_solve(std::slice::from_ref(&g), &[5.0], &[1.0], &zb, &NewtonOptions::default())
                .unwrap();
        let b = newton_solve(&[g], &[5.0], &[1.0], &zb, &NewtonOptions::default()).unwrap();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
    }
}
