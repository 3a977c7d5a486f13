//! Randomized property checks over a built problem: the subgradient
//! inequality, the sandwich against Newton-computed roots, convexity along
//! segments, and directional-derivative/finite-difference consistency. Used
//! by the `verify` CLI command; the same checks back the test suites.

use crate::newton::{newton_multistart, NewtonOptions};
use crate::problem::BuiltProblem;
use crate::vector_implicit::{dir_deriv, RelaxSense};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

const SUBGRAD_SLACK: f64 = 1e-7;
const SANDWICH_SLACK: f64 = 1e-6;
const MIDPOINT_SLACK: f64 = 1e-9;
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    /// First few failing sample descriptions.
    pub witnesses: Vec<String>,
}

impl CheckResult {
    fn new(name: &'static str) -> Self {
        CheckResult { name, passed: 0, failed: 0, skipped: 0, witnesses: Vec::new() }
    }

    fn pass(&mut self) {
        self.passed += 1;
    }

    fn skip(&mut self) {
        self.skipped += 1;
    }

    fn fail(&mut self, witness: String) {
        self.failed += 1;
        if self.witnesses.len() < 5 {
            self.witnesses.push(witness);
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.failed == 0)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "check {}: {} passed, {} failed ({} skipped)\n",
                c.name, c.passed, c.failed, c.skipped
            ));
            for w in &c.witnesses {
                out.push_str(&format!("  witness: {w}\n"));
            }
        }
        out.push_str(if self.all_passed() { "verification: PASS\n" } else { "verification: FAIL\n" });
        out
    }
}

fn sample_p(rng: &mut ChaCha8Rng, built: &BuiltProblem) -> Vec<f64> {
    built
        .p_box
        .iter()
        .map(|b| {
            if b.width() == 0.0 {
                b.lo()
            } else {
                rng.random_range(b.lo()..=b.hi())
            }
        })
        .collect()
}

/// Relaxation values per the problem's natural route (closed form for a
/// single state, the LP otherwise).
fn values(built: &BuiltProblem, p: &[f64], component: usize) -> Option<(f64, f64)> {
    if let Some(scalar) = &built.scalar {
        let (cv, cc) = scalar.relax_eval(p);
        if cv.is_finite() && cc.is_finite() {
            Some((cv, cc))
        } else {
            None
        }
    } else {
        let (cv, _) = built.vector.relax_value(p, component, RelaxSense::Cv).ok()?;
        let (cc, _) = built.vector.relax_value(p, component, RelaxSense::Cc).ok()?;
        if cv.is_finite() && cc.is_finite() {
            Some((cv, cc))
        } else {
            None
        }
    }
}

fn subgradients(built: &BuiltProblem, p: &[f64], component: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    if let Some(scalar) = &built.scalar {
        scalar.subgradients(p).ok()
    } else {
        let cv = built.vector.subgradient(p, component, RelaxSense::Cv).ok()?;
        let cc = built.vector.subgradient(p, component, RelaxSense::Cc).ok()?;
        Some((cv.subgradient, cc.subgradient))
    }
}

/// Run all property checks with `samples` random draws per check.
pub fn run_verification(built: &BuiltProblem, samples: usize, seed: u64) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_x = built.vector.n_x();
    let components: Vec<usize> = (0..n_x).collect();

    let mut sub_ineq = CheckResult::new("subgradient-inequality");
    for _ in 0..samples {
        let a = sample_p(&mut rng, built);
        let q = sample_p(&mut rng, built);
        let component = components[rng.random_range(0..components.len())];
        let Some((cv_a, cc_a)) = values(built, &a, component) else {
            sub_ineq.skip();
            continue;
        };
        let Some((s_cv, s_cc)) = subgradients(built, &a, component) else {
            sub_ineq.fail(format!("no subgradient at feasible p={a:?} (component {component})"));
            continue;
        };
        let Some((cv_q, cc_q)) = values(built, &q, component) else {
            // probe infeasible: +∞ ≥ any plane, −∞ ≤ any plane
            sub_ineq.pass();
            continue;
        };
        let step_cv: f64 = s_cv.iter().zip(q.iter().zip(&a)).map(|(s, (q, a))| s * (q - a)).sum();
        let step_cc: f64 = s_cc.iter().zip(q.iter().zip(&a)).map(|(s, (q, a))| s * (q - a)).sum();
        if cv_q < cv_a + step_cv - SUBGRAD_SLACK {
            sub_ineq.fail(format!(
                "cv at q={q:?} is {cv_q}, below plane {} from a={a:?} (component {component})",
                cv_a + step_cv
            ));
        } else if cc_q > cc_a + step_cc + SUBGRAD_SLACK {
            sub_ineq.fail(format!(
                "cc at q={q:?} is {cc_q}, above plane {} from a={a:?} (component {component})",
                cc_a + step_cc
            ));
        } else {
            sub_ineq.pass();
        }
    }

    let mut sandwich = CheckResult::new("sandwich");
    if built.graphs.is_empty() {
        sandwich.skipped = samples;
    } else {
        let opts = NewtonOptions::default();
        for _ in 0..samples {
            let p = sample_p(&mut rng, built);
            let Ok(root) = newton_multistart(&built.graphs, &p, &built.z_box, &opts) else {
                sandwich.skip();
                continue;
            };
            let mut ok = true;
            for &component in &components {
                let Some((cv, cc)) = values(built, &p, component) else {
                    sandwich.fail(format!(
                        "relaxation infeasible at p={p:?} although a root exists"
                    ));
                    ok = false;
                    break;
                };
                if cv - SANDWICH_SLACK > root[component] || root[component] > cc + SANDWICH_SLACK {
                    sandwich.fail(format!(
                        "component {component} at p={p:?}: {} !<= {} !<= {}",
                        cv, root[component], cc
                    ));
                    ok = false;
                    break;
                }
            }
            if ok {
                sandwich.pass();
            }
        }
    }

    let mut convexity = CheckResult::new("midpoint-convexity");
    for _ in 0..samples {
        let a = sample_p(&mut rng, built);
        let b = sample_p(&mut rng, built);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let component = components[rng.random_range(0..components.len())];
        let (Some((cv_a, cc_a)), Some((cv_b, cc_b))) =
            (values(built, &a, component), values(built, &b, component))
        else {
            convexity.skip();
            continue;
        };
        match values(built, &mid, component) {
            None => convexity.fail(format!(
                "midpoint of feasible {a:?} and {b:?} infeasible (component {component})"
            )),
            Some((cv_m, cc_m)) => {
                if cv_m > 0.5 * (cv_a + cv_b) + MIDPOINT_SLACK {
                    convexity.fail(format!(
                        "cv midpoint {cv_m} above chord {} between {a:?} and {b:?}",
                        0.5 * (cv_a + cv_b)
                    ));
                } else if cc_m < 0.5 * (cc_a + cc_b) - MIDPOINT_SLACK {
                    convexity.fail(format!(
                        "cc midpoint {cc_m} below chord {} between {a:?} and {b:?}",
                        0.5 * (cc_a + cc_b)
                    ));
                } else {
                    convexity.pass();
                }
            }
        }
    }

    let mut fd = CheckResult::new("directional-derivative-fd");
    for _ in 0..samples {
        let p = sample_p(&mut rng, built);
        let component = components[rng.random_range(0..components.len())];
        let n_p = built.p_box.len();
        let d: Vec<f64> = (0..n_p).map(|_| rng.random_range(-1.0..=1.0)).collect();
        if d.iter().all(|x| x.abs() < 1e-3) {
            fd.skip();
            continue;
        }
        let q: Vec<f64> = p.iter().zip(&d).map(|(pk, dk)| pk + FD_STEP * dk).collect();
        if !q.iter().zip(&built.p_box).all(|(v, b)| b.contains(*v)) {
            fd.skip();
            continue;
        }
        let dd = if let Some(scalar) = &built.scalar {
            scalar.dir_deriv_cv(&p, &d)
        } else {
            match built.vector.relax_value(&p, component, RelaxSense::Cv) {
                Ok((v, Some(xi))) if v.is_finite() => {
                    let act = built.vector.identify_active(&p, &xi, built.options.tol_active);
                    let sys = built.vector.build_sensitivity(&act, component, RelaxSense::Cv);
                    dir_deriv(&sys, &d, built.vector.lp_config()).ok()
                }
                _ => None,
            }
        };
        let Some(dd) = dd else {
            fd.skip();
            continue;
        };
        let (Some((cv_p, _)), Some((cv_q, _))) =
            (values(built, &p, component), values(built, &q, component))
        else {
            fd.skip();
            continue;
        };
        let forward = (cv_q - cv_p) / FD_STEP;
        if (forward - dd).abs() > 1e-3 * (1.0 + dd.abs()) {
            fd.fail(format!(
                "component {component} at p={p:?} along {d:?}: derivative {dd} vs difference {forward}"
            ));
        } else {
            fd.pass();
        }
    }

    let mut checks = vec![sub_ineq, sandwich, convexity, fd];

    if let Some(scalar) = &built.scalar {
        let mut agree = CheckResult::new("closed-form-vs-lp");
        for _ in 0..samples {
            let p = sample_p(&mut rng, built);
            let (cv_closed, cc_closed) = scalar.relax_eval(&p);
            let cv_lp = built.vector.relax_value(&p, 0, RelaxSense::Cv);
            let cc_lp = built.vector.relax_value(&p, 0, RelaxSense::Cc);
            let (Ok((cv_lp, _)), Ok((cc_lp, _))) = (cv_lp, cc_lp) else {
                agree.skip();
                continue;
            };
            let same = |a: f64, b: f64| {
                (a.is_infinite() && b.is_infinite() && a.signum() == b.signum())
                    || (a - b).abs() <= 1e-7
            };
            if same(cv_closed, cv_lp) && same(cc_closed, cc_lp) {
                agree.pass();
            } else {
                agree.fail(format!(
                    "p={p:?}: closed form ({cv_closed}, {cc_closed}) vs LP ({cv_lp}, {cc_lp})"
                ));
            }
        }
        checks.push(agree);
    }

    VerifyReport { checks }
}
