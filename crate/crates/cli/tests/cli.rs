//! End-to-end tests of the binary: exit codes, CSV shape, byte stability.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_irelax")
}

fn problems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/problems")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn relax_emits_grid_rows_with_header() {
    let problem = problems_dir().join("van_der_waals.json");
    let out = run(&["relax", problem.to_str().unwrap(), "--grid", "4,3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# irelax relax v1: p1,p2,x_cv,x_cc,x_newton");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 12);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 5);
        let cv: f64 = fields[2].parse().unwrap();
        let cc: f64 = fields[3].parse().unwrap();
        let newton: f64 = fields[4].parse().unwrap();
        assert!(cv - 1e-6 <= newton && newton <= cc + 1e-6, "sandwich violated in {row}");
    }
}

#[test]
fn relax_single_point_grid() {
    let problem = problems_dir().join("van_der_waals.json");
    let out = run(&["relax", problem.to_str().unwrap(), "--grid", "1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 2);
}

#[test]
fn relax_full_surface_grid() {
    let problem = problems_dir().join("van_der_waals.json");
    let out = run(&["relax", problem.to_str().unwrap(), "--grid", "50,50"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 2501);
    // lexicographic order: the first parameter varies slowest
    let first_fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let second_fields: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(first_fields[0], second_fields[0]);
    assert!(second_fields[1].parse::<f64>().unwrap() > first_fields[1].parse::<f64>().unwrap());
}

#[test]
fn out_flag_writes_the_csv_to_a_file() {
    let problem = problems_dir().join("van_der_waals.json");
    let path = tempdir().join("surface.csv");
    let out = run(&[
        "relax",
        problem.to_str().unwrap(),
        "--grid",
        "3,3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.starts_with("# irelax relax v1:"));
    assert_eq!(written.lines().count(), 10);
}

#[test]
fn csv_output_is_byte_stable() {
    let problem = problems_dir().join("exp_network.json");
    let args = ["relax", problem.to_str().unwrap(), "--grid", "3,3", "--component", "3"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let args =
        ["verify", problem.to_str().unwrap(), "--samples", "20", "--seed", "11"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn subgrad_reports_regimes_per_problem() {
    let vdw = problems_dir().join("van_der_waals.json");
    let out = run(&["subgrad", vdw.to_str().unwrap(), "--point", "0.68,274.27"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("closed_form"), "{text}");

    let exp = problems_dir().join("exp_network.json");
    let out = run(&[
        "subgrad",
        exp.to_str().unwrap(),
        "--point",
        "0.6,1.348",
        "--component",
        "3",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("np2"));

    let cstr = problems_dir().join("cstr.json");
    let out = run(&[
        "subgrad",
        cstr.to_str().unwrap(),
        "--point",
        "0.40,0.0575,8.7",
        "--component",
        "1",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("ld_sequence"), "{text}");
}

#[test]
fn np1_regime_on_two_state_problem() {
    let dir = tempdir();
    let path = dir.join("np1.json");
    std::fs::write(
        &path,
        r#"{
            "residuals": ["z1^2 - p1", "z2 - z1"],
            "z_bounds": [[0.5, 3.0], [0.5, 3.0]],
            "p_bounds": [[1.0, 4.0]],
            "options": { "piece_count": 3 }
        }"#,
    )
    .unwrap();
    let out = run(&["subgrad", path.to_str().unwrap(), "--point", "2.0", "--component", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("np1"));
}

#[test]
fn malformed_expression_exits_2_with_position() {
    let dir = tempdir();
    let path = dir.join("bad.json");
    std::fs::write(
        &path,
        r#"{
            "residuals": ["z1 ^ 0.5"],
            "z_bounds": [[0.0, 1.0]],
            "p_bounds": [[0.0, 1.0]]
        }"#,
    )
    .unwrap();
    let out = run(&["relax", path.to_str().unwrap(), "--grid", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("byte 5"), "missing position diagnostic: {err}");
}

#[test]
fn missing_file_exits_2() {
    let out = run(&["relax", "/nonexistent/problem.json", "--grid", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn construction_failure_exits_3() {
    let dir = tempdir();
    let path = dir.join("div0.json");
    // the state box straddles zero, so relaxing 1/z1 fails
    std::fs::write(
        &path,
        r#"{
            "residuals": ["1/z1 - p1"],
            "z_bounds": [[-1.0, 1.0]],
            "p_bounds": [[0.0, 1.0]]
        }"#,
    )
    .unwrap();
    let out = run(&["relax", path.to_str().unwrap(), "--grid", "2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn infeasible_point_exits_4() {
    let dir = tempdir();
    let path = dir.join("crossed.json");
    // explicit pieces force ξ ≤ p1 − 1 and ξ ≥ p1 + 1
    std::fs::write(
        &path,
        r#"{
            "residuals": ["z1 - p1"],
            "z_bounds": [[-10.0, 10.0]],
            "p_bounds": [[-5.0, 5.0]],
            "pwa": [{
                "cv": [{ "p_coeffs": [-1.0], "z_coeffs": [1.0], "offset": 1.0 }],
                "cc": [{ "p_coeffs": [-1.0], "z_coeffs": [1.0], "offset": -1.0 }]
            }]
        }"#,
    )
    .unwrap();
    let out = run(&["subgrad", path.to_str().unwrap(), "--point", "0.0"]);
    assert_eq!(out.status.code(), Some(4));

    // the grid sweep encodes per-row infeasibility instead of failing
    let out = run(&["relax", path.to_str().unwrap(), "--grid", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for row in text.lines().skip(1) {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[1], "+inf", "{row}");
        assert_eq!(fields[2], "-inf", "{row}");
    }
}

#[test]
fn verify_detects_corrupted_pieces_and_exits_1() {
    let dir = tempdir();
    let path = dir.join("corrupt.json");
    // honest subtangent data for the van der Waals residual, with the first
    // cv offset raised by 1 (computed by the library, then corrupted)
    let vdw = problems_dir().join("van_der_waals.json");
    let built = irelax::problem::load_problem(&vdw).unwrap();
    let pair = &built.vector.relaxed()[0].pair;
    let piece_json = |p: &irelax::pwa::AffinePiece, bump: f64| {
        format!(
            r#"{{ "p_coeffs": [{}, {}], "z_coeffs": [{}], "offset": {} }}"#,
            p.p_coeffs[0],
            p.p_coeffs[1],
            p.z_coeffs[0],
            p.offset + bump
        )
    };
    let cv: Vec<String> = pair
        .cv_pieces
        .iter()
        .enumerate()
        .map(|(k, p)| piece_json(p, if k == 0 { 1.0 } else { 0.0 }))
        .collect();
    let cc: Vec<String> = pair.cc_pieces.iter().map(|p| piece_json(p, 0.0)).collect();
    std::fs::write(
        &path,
        format!(
            r#"{{
                "residuals": ["(p1 + 3.610*1/(z1^2))*(z1 - 0.0429) - 0.0820574*p2"],
                "z_bounds": [[10.0, 70.0]],
                "p_bounds": [[0.5, 1.1], [250.0, 320.0]],
                "pwa": [{{ "cv": [{}], "cc": [{}] }}]
            }}"#,
            cv.join(","),
            cc.join(",")
        ),
    )
    .unwrap();
    let out = run(&["verify", path.to_str().unwrap(), "--samples", "100", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("verification: FAIL"));
    assert!(stdout(&out).contains("witness"));

    // the honest file passes with the same settings
    let out = run(&["verify", vdw.to_str().unwrap(), "--samples", "100", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("verification: PASS"));
}

#[test]
fn verify_zero_samples_passes_vacuously() {
    let vdw = problems_dir().join("van_der_waals.json");
    let out = run(&["verify", vdw.to_str().unwrap(), "--samples", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("verification: PASS"));
}

fn tempdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("irelax-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
