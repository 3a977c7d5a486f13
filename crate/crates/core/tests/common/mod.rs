//! Shared helpers for the integration suites: a brute-force vertex
//! enumeration oracle for small LPs and loaders for the bundled demo
//! problems. The oracle is deliberately independent of the simplex code
//! path it checks.
//!
//! Compiled once per integration-test target; not every target uses every
//! helper.
#![allow(dead_code)]

use irelax::lp::{LinearProgram, Sense};
use irelax::problem::{load_problem, BuiltProblem};
use std::path::{Path, PathBuf};

pub fn problems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/problems")
}

pub fn load_demo(name: &str) -> BuiltProblem {
    load_problem(&problems_dir().join(format!("{name}.json")))
        .unwrap_or_else(|e| panic!("demo problem {name} must build: {e}"))
}

/// Oracle outcome for a bounded LP: either infeasible or the optimal value
/// with the set of distinct optimal vertices.
pub enum OracleOutcome {
    Infeasible,
    Optimal { value: f64, optimal_vertices: Vec<Vec<f64>> },
}

/// Exhaustive vertex enumeration for LPs whose variables all carry finite
/// bounds. Every choice of `n` tight constraints (equalities always tight)
/// is solved and checked for feasibility; the optimum is read off the
/// feasible vertices.
pub fn enumerate_vertices(lp: &LinearProgram) -> OracleOutcome {
    let n = lp.c.len();
    // constraint pool: inequality rows then bound facets, as (row, rhs)
    let mut pool: Vec<(Vec<f64>, f64)> = Vec::new();
    for (row, &b) in lp.a_ub.iter().zip(&lp.b_ub) {
        pool.push((row.clone(), b));
    }
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        let mut row = vec![0.0; n];
        row[j] = 1.0;
        pool.push((row.clone(), hi));
        row[j] = -1.0;
        pool.push((row, -lo));
    }
    let n_eq = lp.a_eq.len();
    assert!(n_eq <= n, "oracle requires at most n equality rows");
    let need = n - n_eq;

    let feasible = |x: &[f64]| -> bool {
        let tol = 1e-7;
        lp.a_ub
            .iter()
            .zip(&lp.b_ub)
            .all(|(row, &b)| dot(row, x) <= b + tol)
            && lp
                .a_eq
                .iter()
                .zip(&lp.b_eq)
                .all(|(row, &b)| (dot(row, x) - b).abs() <= tol)
            && lp
                .bounds
                .iter()
                .zip(x)
                .all(|(&(lo, hi), &v)| v >= lo - tol && v <= hi + tol)
    };

    let mut vertices: Vec<Vec<f64>> = Vec::new();
    if need > pool.len() {
        return finish(lp, vertices);
    }
    let mut combo = (0..need).collect::<Vec<usize>>();
    loop {
        // assemble the square tight system: equalities plus the combo rows
        let mut a: Vec<Vec<f64>> = lp.a_eq.clone();
        let mut b: Vec<f64> = lp.b_eq.clone();
        for &k in &combo {
            a.push(pool[k].0.clone());
            b.push(pool[k].1);
        }
        if let Some(x) = irelax::linalg::solve(&a, &b) {
            if feasible(&x) && !vertices.iter().any(|v| inf_dist(v, &x) <= 1e-7) {
                vertices.push(x);
            }
        }
        // next combination of `need` indices out of pool.len()
        if need == 0 {
            break;
        }
        let mut advanced = false;
        let mut i = need;
        while i > 0 {
            i -= 1;
            if combo[i] + (need - i) < pool.len() {
                combo[i] += 1;
                for j in (i + 1)..need {
                    combo[j] = combo[j - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    finish(lp, vertices)
}

fn finish(lp: &LinearProgram, vertices: Vec<Vec<f64>>) -> OracleOutcome {
    if vertices.is_empty() {
        return OracleOutcome::Infeasible;
    }
    let better = |a: f64, b: f64| match lp.sense {
        Sense::Min => a < b,
        Sense::Max => a > b,
    };
    let mut best = dot(&lp.c, &vertices[0]);
    for v in &vertices[1..] {
        let val = dot(&lp.c, v);
        if better(val, best) {
            best = val;
        }
    }
    let optimal_vertices: Vec<Vec<f64>> = vertices
        .into_iter()
        .filter(|v| (dot(&lp.c, v) - best).abs() <= 1e-9 * (1.0 + best.abs()))
        .collect();
    OracleOutcome::Optimal { value: best, optimal_vertices }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
