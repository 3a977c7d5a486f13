//! Cross-module property suites that go beyond single-module unit tests:
//! agreement between the two-parameter subgradient regimes, convexity of the
//! LP-evaluated relaxations along segments, and closed-form convexity for the
//! scalar route.

mod common;

use common::load_demo;
use irelax::interval::Interval;
use irelax::lp::LpConfig;
use irelax::vector_implicit::{ld_subgrad, RelaxSense};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample_box(rng: &mut ChaCha8Rng, boxes: &[Interval]) -> Vec<f64> {
    boxes.iter().map(|b| rng.random_range(b.lo()..=b.hi())).collect()
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            row
        })
        .collect()
}

/// Both two-parameter regimes yield valid subgradients on the exponential
/// demo system (whose optimal vertices are heavily degenerate, so the dual is
/// never unique there), and they coincide with the unique dual-determined
/// vector on a nondegenerate synthetic problem whenever the first stage of
/// the dual sequence has a unique optimum.
#[test]
fn np2_and_ld_regimes_agree_where_the_dual_is_unique() {
    let built = load_demo("exp_network");
    let cfg = LpConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let component = 2;
    for _ in 0..15 {
        let p = sample_box(&mut rng, &built.p_box);
        let Ok(np2) = built.vector.subgradient(&p, component, RelaxSense::Cv) else {
            continue;
        };
        let (v, xi) = built.vector.relax_value(&p, component, RelaxSense::Cv).unwrap();
        if !v.is_finite() {
            continue;
        }
        let act = built.vector.identify_active(&p, &xi.unwrap(), built.options.tol_active);
        let sys = built.vector.build_sensitivity(&act, component, RelaxSense::Cv);
        let ld = ld_subgrad(&sys, &identity(2), &cfg).unwrap();

        // validity of both candidates over probe points
        for _ in 0..25 {
            let q = sample_box(&mut rng, &built.p_box);
            let (vq, _) = built.vector.relax_value(&q, component, RelaxSense::Cv).unwrap();
            if !vq.is_finite() {
                continue;
            }
            for s in [&np2.subgradient, &ld.subgradient] {
                let step: f64 =
                    s.iter().zip(q.iter().zip(&p)).map(|(s, (q, p))| s * (q - p)).sum();
                assert!(
                    vq >= v + step - 1e-7,
                    "subgradient {s:?} at {p:?} cuts off {q:?}"
                );
            }
        }
    }

    // nondegenerate synthetic problem: ξ1 bounded below by max(p1, p2)
    use irelax::pwa::{AffinePiece, PwaRelaxationPair};
    use irelax::vector_implicit::{RelaxedResidual, VectorImplicitProblem};
    let iv = |lo: f64, hi: f64| Interval::new(lo, hi).unwrap();
    let pair = PwaRelaxationPair {
        cv_pieces: vec![
            AffinePiece { p_coeffs: vec![1.0, 0.0], z_coeffs: vec![-1.0], offset: 0.0 },
            AffinePiece { p_coeffs: vec![0.0, 1.0], z_coeffs: vec![-1.0], offset: 0.0 },
        ],
        cc_pieces: vec![AffinePiece {
            p_coeffs: vec![0.0, 0.0],
            z_coeffs: vec![-1.0],
            offset: 100.0,
        }],
    };
    let prob = VectorImplicitProblem::from_parts(
        vec![],
        vec![iv(-10.0, 10.0)],
        vec![iv(-5.0, 5.0), iv(-5.0, 5.0)],
        vec![RelaxedResidual { residual: 0, pair }],
        vec![],
        1e-7,
    )
    .unwrap();
    let mut agreements = 0;
    for _ in 0..50 {
        let p = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
        let np2 = prob.subgradient(&p, 0, RelaxSense::Cv).unwrap();
        let (_, xi) = prob.relax_value(&p, 0, RelaxSense::Cv).unwrap();
        let act = prob.identify_active(&p, &xi.unwrap(), 1e-7);
        let sys = prob.build_sensitivity(&act, 0, RelaxSense::Cv);
        let ld = ld_subgrad(&sys, &identity(2), &cfg).unwrap();
        if ld.early_stop_stage == Some(0) {
            agreements += 1;
            for (a, b) in np2.subgradient.iter().zip(&ld.subgradient) {
                assert!(
                    (a - b).abs() <= 1e-8,
                    "regimes disagree at a unique-dual point {p:?}: {:?} vs {:?}",
                    np2.subgradient,
                    ld.subgradient
                );
            }
        }
    }
    assert!(agreements > 20, "too few unique-dual points to compare: {agreements}");
}

/// The LP-evaluated relaxation value is convex in the parameters (midpoint
/// test along random segments), for every component of both vector demos.
#[test]
fn relax_value_is_convex_along_segments() {
    for name in ["exp_network", "cstr"] {
        let built = load_demo(name);
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        for _ in 0..100 {
            let a = sample_box(&mut rng, &built.p_box);
            let b = sample_box(&mut rng, &built.p_box);
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let i = rng.random_range(0..built.vector.n_x());
            let (cv_a, _) = built.vector.relax_value(&a, i, RelaxSense::Cv).unwrap();
            let (cv_b, _) = built.vector.relax_value(&b, i, RelaxSense::Cv).unwrap();
            if !cv_a.is_finite() || !cv_b.is_finite() {
                continue;
            }
            let (cv_m, _) = built.vector.relax_value(&mid, i, RelaxSense::Cv).unwrap();
            assert!(
                cv_m <= 0.5 * (cv_a + cv_b) + 1e-9,
                "{name} component {i}: cv not convex along [{a:?}, {b:?}]"
            );
            let (cc_a, _) = built.vector.relax_value(&a, i, RelaxSense::Cc).unwrap();
            let (cc_b, _) = built.vector.relax_value(&b, i, RelaxSense::Cc).unwrap();
            let (cc_m, _) = built.vector.relax_value(&mid, i, RelaxSense::Cc).unwrap();
            assert!(
                cc_m >= 0.5 * (cc_a + cc_b) - 1e-9,
                "{name} component {i}: cc not concave along [{a:?}, {b:?}]"
            );
        }
    }
}

/// At the cross-section reference point of the exponential demo, the
/// relaxation of the third component is finite and lies within its state
/// bounds.
#[test]
fn exp_network_value_is_enclosed_at_reference_point() {
    let built = load_demo("exp_network");
    let p = [0.6, 1.348];
    let (cv, _) = built.vector.relax_value(&p, 2, RelaxSense::Cv).unwrap();
    let (cc, _) = built.vector.relax_value(&p, 2, RelaxSense::Cc).unwrap();
    assert!(cv.is_finite() && cc.is_finite());
    assert!(cv >= 0.42 - 1e-9 && cc <= 0.53 + 1e-9, "cv {cv}, cc {cc}");
    assert!(cv <= cc);
}

/// At a parameter point where the first derived lower piece of the van der
/// Waals closed form is uniquely active, the convex subgradient equals that
/// piece's gradient (about (-8.8, 0.07) before display rounding).
#[test]
fn van_der_waals_subgradient_tracks_the_active_piece() {
    let built = load_demo("van_der_waals");
    let scalar = built.scalar.as_ref().unwrap();
    // every piece of this system has positive state slope
    let (k_minus, k_plus, l_minus, l_plus) = scalar.sets();
    assert!(k_minus.is_empty() && l_minus.is_empty());
    assert_eq!(k_plus, &[0, 1]);
    assert_eq!(l_plus, &[0, 1]);
    let p = [0.68, 274.27];
    let (s_cv, _) = scalar.subgradients(&p).unwrap();
    assert!((s_cv[0] - -8.81).abs() <= 0.05, "dP {}", s_cv[0]);
    assert!((s_cv[1] - 0.07).abs() <= 0.05, "dT {}", s_cv[1]);
}

/// The closed-form scalar relaxation is piecewise affine and convex along
/// random segments.
#[test]
fn scalar_closed_form_is_convex_along_segments() {
    let built = load_demo("van_der_waals");
    let scalar = built.scalar.as_ref().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    for _ in 0..100 {
        let a = sample_box(&mut rng, &built.p_box);
        let b = sample_box(&mut rng, &built.p_box);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let (cv_a, cc_a) = scalar.relax_eval(&a);
        let (cv_b, cc_b) = scalar.relax_eval(&b);
        if !cv_a.is_finite() || !cv_b.is_finite() {
            continue;
        }
        let (cv_m, cc_m) = scalar.relax_eval(&mid);
        assert!(cv_m <= 0.5 * (cv_a + cv_b) + 1e-9);
        assert!(cc_m >= 0.5 * (cc_a + cc_b) - 1e-9);
    }
}
