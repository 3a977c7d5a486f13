//! Convex and concave relaxations of implicit functions, with valid subgradients.
//!
//! An implicit function `x(p)` is defined by a residual system `f(x(p), p) = 0`
//! together with a known enclosure `x(p) ∈ X` for every parameter value `p` in
//! a box `P`. Given convex/concave relaxations of the residual components on
//! `X × P`, relaxations of `x` itself are obtained as optimal-value functions:
//! `x_i^cv(p)` minimizes `ξ_i` over all `ξ ∈ X` satisfying
//! `f^cv(ξ, p) ≤ 0 ≤ f^cc(ξ, p)`, and `x_i^cc(p)` maximizes it. This crate
//! builds piecewise-affine residual relaxations from subtangents of McCormick
//! relaxations, evaluates the implicit-function relaxations, and computes
//! valid subgradients of them:
//!
//! * for a scalar state (`n_x = 1`), relaxation values and subgradients are
//!   available in closed form without solving any optimization problem
//!   ([`scalar_implicit`]);
//! * for vector states, relaxation values are small dense LPs, directional
//!   derivatives are obtained from an auxiliary LP built on the active
//!   constraints, and subgradients follow either from cardinal-direction
//!   derivatives (`n_p ≤ 2`) or from a lexicographic sequence of dual LPs
//!   with early termination on unique optima ([`vector_implicit`]).
//!
//! Supporting pieces: an expression-graph representation of residuals
//! ([`expr`]), interval bound propagation ([`interval`]), forward-mode
//! McCormick relaxation arithmetic with subgradients ([`mccormick`]),
//! piecewise-affine relaxation assembly ([`pwa`]), a self-contained dense
//! simplex solver with an optimal-face uniqueness test ([`lp`]), a damped
//! Newton reference solver ([`newton`]), a JSON problem-file front end
//! ([`problem`]), and a property-check driver ([`verify`]).
//!
//! ```
//! use irelax::problem::parse_problem;
//!
//! // molar gas volume as an implicit function of pressure and temperature
//! let built = parse_problem(r#"{
//!     "residuals": ["(p1 + 3.610*1/(z1^2))*(z1 - 0.0429) - 0.0820574*p2"],
//!     "z_bounds": [[10.0, 70.0]],
//!     "p_bounds": [[0.5, 1.1], [250.0, 320.0]],
//!     "reference_points": [[17.67, 0.68, 274.27], [67.78, 0.73, 288.82]]
//! }"#).unwrap();
//!
//! // closed-form relaxation values and subgradients, no LP solved
//! let scalar = built.scalar.as_ref().unwrap();
//! let p = [0.68, 274.27];
//! let (cv, cc) = scalar.relax_eval(&p);
//! assert!(cv <= cc);
//! let (s_cv, _s_cc) = scalar.subgradients(&p).unwrap();
//! assert_eq!(s_cv.len(), 2);
//! ```

// index-based loops are clearer than iterator chains for the dense
// matrix/tableau code in this crate
#![allow(clippy::needless_range_loop)]

pub mod expr;
pub mod interval;
pub mod linalg;
pub mod lp;
pub mod mccormick;
pub mod newton;
pub mod problem;
pub mod pwa;
pub mod scalar_implicit;
pub mod vector_implicit;
pub mod verify;

pub use expr::ExprGraph;
pub use interval::Interval;
pub use mccormick::McCormick;
pub use pwa::{AffinePiece, PwaRelaxationPair};
