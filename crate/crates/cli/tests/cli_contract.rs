//! End-to-end contract of the binary: exit codes, file formats, and the
//! config round trip.

mod util;

use coexist_cli::config::RunConfig;
use coexist_cli::csvio;
use std::f64::consts::PI;
use util::*;

#[test]
fn eigen_prints_lambda1_and_writes_eigenfunction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"[domain]
dim = 1
lengths = 1.0
interior_counts = 400

[outputs]
fields_path = {0}/fields.csv
report_path = {0}/report.json
"#,
        dir.path().display()
    );
    let path = write_config(dir.path(), &cfg);
    let out = run(&["eigen", "--config", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let lambda_line = text
        .lines()
        .find(|l| l.starts_with("lambda1 = "))
        .expect("lambda1 printed");
    let lambda: f64 = lambda_line["lambda1 = ".len()..].trim().parse().unwrap();
    assert!((lambda - PI * PI).abs() / (PI * PI) < 1e-3, "{lambda}");

    let (header, rows) = csvio::read_csv(&dir.path().join("fields.csv")).unwrap();
    assert_eq!(header, vec!["x", "phi1"]);
    assert_eq!(rows.len(), 400);
    assert!(rows.iter().all(|r| r[1] > 0.0));
}

#[test]
fn tiny_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = symmetric_config(dir.path(), 2, 15.0, 0.1, 1e-8);
    let path = write_config(dir.path(), &cfg);
    let out = run(&["eigen", "--config", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn malformed_expression_reports_position_exit1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = symmetric_config(dir.path(), 41, 15.0, 0.1, 1e-8)
        .replace("15.0 - u - 0.1*v", "15.0 - u -");
    let path = write_config(dir.path(), &cfg);
    let out = run(&["check", "--config", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("position"), "{}", stderr(&out));
}

#[test]
fn check_symmetric_model_exits_zero_with_frozen_report_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = symmetric_config(dir.path(), 81, 15.0, 0.1, 1e-8);
    let path = write_config(dir.path(), &cfg);
    let out = run(&["check", "--config", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("coexistence state exists"));

    let report = report_json(dir.path());
    let mut keys: Vec<&str> = report.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        vec![
            "existence",
            "grid",
            "lambda1",
            "nonexistence",
            "sampling",
            "uniqueness_2sp",
            "uniqueness_Nsp"
        ]
    );
    assert!(report["uniqueness_2sp"]["satisfied"].as_bool().unwrap());
    assert!(report["existence"]
        .as_array()
        .unwrap()
        .iter()
        .all(|m| m["satisfied"].as_bool().unwrap()));
}

#[test]
fn check_subcritical_model_certifies_nonexistence_exit2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = symmetric_config(dir.path(), 81, 5.0, 0.1, 1e-8);
    let path = write_config(dir.path(), &cfg);
    let out = run(&["check", "--config", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2, "stderr: {}", stderr(&out));
    let report = report_json(dir.path());
    assert!(report["nonexistence"]
        .as_array()
        .unwrap()
        .iter()
        .any(|m| m["satisfied"].as_bool().unwrap()));
}

#[test]
fn solve_writes_fields_with_envelopes_and_reloads_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = symmetric_config(dir.path(), 61, 15.0, 0.1, 1e-8);
    let path = write_config(dir.path(), &cfg);
    let out = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));

    let csv_path = dir.path().join("fields.csv");
    let (header, rows) = csvio::read_csv(&csv_path).unwrap();
    assert_eq!(
        header,
        vec!["x", "u", "v", "u_lower", "u_upper", "v_lower", "v_upper"]
    );
    assert_eq!(rows.len(), 61);
    for row in &rows {
        assert!((row[1] - row[2]).abs() <= 1e-6, "u ~ v by symmetry");
        assert!(row[3] <= row[1] + 1e-7 && row[1] <= row[4] + 1e-7, "sandwich");
    }
    // Reload exactness: every parsed cell reprints to the identical token.
    let text = std::fs::read_to_string(&csv_path).unwrap();
    for line in text.lines().skip(1) {
        for cell in line.split(',') {
            let v: f64 = cell.parse().unwrap();
            assert_eq!(csvio::full_precision(v), cell, "cell {cell}");
        }
    }

    let report = report_json(dir.path());
    assert_eq!(report["mode"], "coexistence");
    assert!(report["unique_in_sector"].as_bool().unwrap());
    assert!(report["sandwich"]["within_bounds"]
        .as_array()
        .unwrap()
        .iter()
        .all(|b| b.as_bool().unwrap()));
}

#[test]
fn three_species_solve_has_near_identical_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"[domain]
dim = 1
lengths = 1.0
interior_counts = 41

[species.a]
growth = "12 - u1 - 0.05*(u2 + u3)"

[species.b]
growth = "12 - u2 - 0.05*(u1 + u3)"

[species.c]
growth = "12 - u3 - 0.05*(u1 + u2)"

[outputs]
fields_path = {0}/fields.csv
report_path = {0}/report.json
"#,
        dir.path().display()
    );
    let path = write_config(dir.path(), &cfg);
    let out = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let (header, rows) = csvio::read_csv(&dir.path().join("fields.csv")).unwrap();
    assert_eq!(
        header,
        vec!["x", "a", "b", "c", "a_lower", "a_upper", "b_lower", "b_upper", "c_lower", "c_upper"]
    );
    for row in &rows {
        assert!((row[1] - row[2]).abs() <= 1e-9 && (row[1] - row[3]).abs() <= 1e-9);
    }
}

#[test]
fn solve_refuses_subcritical_without_force_exit2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = symmetric_config(dir.path(), 41, 5.0, 0.1, 1e-8);
    let path = write_config(dir.path(), &cfg);
    let out = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2, "stderr: {}", stderr(&out));
}

#[test]
fn forced_solve_reports_decay_below_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = symmetric_config(dir.path(), 41, 5.0, 0.1, 1e-8);
    let path = write_config(dir.path(), &cfg);
    let out = run(&["solve", "--config", path.to_str().unwrap(), "--force"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let report = report_json(dir.path());
    assert_eq!(report["mode"], "decay");
    for sp in report["species"].as_array().unwrap() {
        assert!(sp["decayed"].as_bool().unwrap());
        assert!(sp["final_sup"].as_f64().unwrap() <= 1e-6);
    }
    let (_, rows) = csvio::read_csv(&dir.path().join("fields.csv")).unwrap();
    for row in &rows {
        assert!(row[1].abs() <= 1e-6 && row[2].abs() <= 1e-6);
    }
}

#[test]
fn exhausted_iteration_budget_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = symmetric_config(dir.path(), 41, 15.0, 0.1, 1e-8).replace(
        "[solver]\ntol_outer",
        "[solver]\nmax_iter = 1\ntol_outer",
    );
    let path = write_config(dir.path(), &cfg);
    let out = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 3, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("did not converge"), "{}", stderr(&out));
}

#[test]
fn sweep_brackets_the_existence_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"[domain]
dim = 1
lengths = 1.0
interior_counts = 61

[species.u]
growth = "a - u - 0.1*v"

[species.v]
growth = "15 - 0.1*u - v"

[solver]
tol_outer = 1e-8

[outputs]
fields_path = {0}/sweep.csv
report_path = {0}/report.json

[sweep]
parameter = a
from = 8.0
to = 16.0
step = 0.5
"#,
        dir.path().display()
    );
    let path = write_config(dir.path(), &cfg);
    let out = run(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));

    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(
        header,
        vec![
            "parameter",
            "lambda1",
            "margin_u",
            "margin_v",
            "uniq2_lhs",
            "uniq2_rhs",
            "uniqN_min_margin",
            "sup_u",
            "sup_v",
            "status"
        ]
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 17);

    let lambda1: f64 = rows[0][1].parse().unwrap();
    // Existence margin for u is a - 0.1*15 - lambda1: flips at 1.5 + lambda1.
    let threshold = 1.5 + lambda1;
    let mut first_ok = None;
    for (i, row) in rows.iter().enumerate() {
        let a: f64 = row[0].parse().unwrap();
        let status = row[9];
        if status == "ok" && first_ok.is_none() {
            first_ok = Some(i);
            let margin: f64 = row[2].parse().unwrap();
            assert!(margin > 0.0, "first ok row has positive margin");
            assert!(a >= threshold && a - 0.5 < threshold, "flip brackets the threshold");
        }
        if a <= lambda1 {
            assert_eq!(status, "nonexistence", "a = {a}");
            let sup_u: f64 = row[7].parse().unwrap();
            assert!(sup_u <= 1e-6, "decayed sup {sup_u} at a = {a}");
        }
    }
    let first_ok = first_ok.expect("some case exists");
    for row in &rows[first_ok..] {
        assert_eq!(row[9], "ok");
        let lhs: f64 = row[4].parse().unwrap();
        assert!((lhs - 4.0).abs() < 1e-9);
    }
    // Parameter column is sorted.
    let params: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(params.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn empty_sweep_range_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"[domain]
dim = 1
lengths = 1.0
interior_counts = 41

[species.u]
growth = "a - u - 0.1*v"

[species.v]
growth = "15 - 0.1*u - v"

[outputs]
fields_path = {0}/sweep.csv
report_path = {0}/report.json

[sweep]
parameter = a
from = 5.0
to = 4.0
step = 0.5
"#,
        dir.path().display()
    );
    let path = write_config(dir.path(), &cfg);
    let out = run(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1, "header only");
}

#[test]
fn out_flag_redirects_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let other = dir.path().join("elsewhere");
    let cfg = symmetric_config(dir.path(), 41, 15.0, 0.1, 1e-8);
    let path = write_config(dir.path(), &cfg);
    let out = run(&[
        "check",
        "--config",
        path.to_str().unwrap(),
        "--out",
        other.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert!(other.join("report.json").exists());
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn config_round_trip_preserves_behavior() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_text = symmetric_config(dir.path(), 41, 15.0, 0.1, 1e-8);
    let parsed = RunConfig::parse(&cfg_text).unwrap();
    let regenerated = parsed.to_config_string();
    assert_eq!(RunConfig::parse(&regenerated).unwrap(), parsed);

    let p1 = write_config(dir.path(), &cfg_text);
    let out1 = run(&["check", "--config", p1.to_str().unwrap()]);
    let report1 = std::fs::read(dir.path().join("report.json")).unwrap();

    let dir2 = tempfile::tempdir().unwrap();
    let regenerated = regenerated.replace(
        &format!("{}", dir.path().display()),
        &format!("{}", dir2.path().display()),
    );
    let p2 = write_config(dir2.path(), &regenerated);
    let out2 = run(&["check", "--config", p2.to_str().unwrap()]);
    let report2 = std::fs::read(dir2.path().join("report.json")).unwrap();

    assert_eq!(exit_code(&out1), exit_code(&out2));
    assert_eq!(report1, report2, "identical dispatch and numerics");
}
