//! Shared helpers for driving the `coexist` binary from integration tests.
#![allow(dead_code)] // each test binary uses its own subset

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coexist"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).expect("config written");
    path
}

/// Two-species config on (0,1): growth a - u - cross*v and its mirror.
pub fn symmetric_config(dir: &Path, n: usize, a: f64, cross: f64, tol: f64) -> String {
    format!(
        r#"[domain]
dim = 1
lengths = 1.0
interior_counts = {n}

[species.u]
growth = "{a:?} - u - {cross:?}*v"

[species.v]
growth = "{a:?} - {cross:?}*u - v"

[solver]
tol_outer = {tol:?}

[outputs]
fields_path = {dir}/fields.csv
report_path = {dir}/report.json
"#,
        dir = dir.display()
    )
}

pub fn report_json(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("report.json")).expect("report exists");
    serde_json::from_str(&text).expect("report parses")
}
