//! Subcommand implementations. Exit codes: 0 success, 1 config/validation
//! error, 2 criterion-negative (nonexistence certified or a refused solve),
//! 3 numerical failure.

use crate::config::RunConfig;
use crate::csvio;
use coexist_core::coexist::{
    build_pair, decay_check, solve_coexistence, verify_pair, CoexistencePair,
};
use coexist_core::criteria::{assemble_report, CriterionReport};
use coexist_core::eigen::{principal_eigenpair, EigenResult};
use coexist_core::error::Error as CoreError;
use coexist_core::expr;
use coexist_core::grid::{Grid, ScalarField};
use coexist_core::growth::{self, GrowthModel};
use serde_json::json;
use std::path::Path;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_CRITERION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Sup-norm threshold under which a species counts as extinct in decay runs.
pub const DECAY_THRESHOLD: f64 = 1e-6;

fn exit_code_for(e: &CoreError) -> i32 {
    match e {
        CoreError::Parse { .. }
        | CoreError::InvalidGrid(_)
        | CoreError::InvalidField(_)
        | CoreError::MonotonicityViolated { .. }
        | CoreError::LogisticPatternViolated { .. }
        | CoreError::UnboundedGrowth { .. } => EXIT_CONFIG,
        CoreError::LogisticNonexistence { .. } => EXIT_CRITERION,
        _ => EXIT_NUMERICAL,
    }
}

fn fail(e: &CoreError) -> i32 {
    eprintln!("error: {e}");
    exit_code_for(e)
}

fn fail_io(context: &str, e: &std::io::Error) -> i32 {
    eprintln!("error: {context}: {e}");
    EXIT_NUMERICAL
}

fn build_grid(config: &RunConfig) -> Result<Grid, CoreError> {
    Grid::new(&config.domain.lengths, &config.domain.interior_counts)
}

fn build_model(config: &RunConfig, constants: &[(String, f64)]) -> Result<GrowthModel, CoreError> {
    let n = config.species.len();
    let asts = config
        .species
        .iter()
        .map(|sp| expr::parse_with_constants(&sp.growth, n, constants))
        .collect::<Result<Vec<_>, _>>()?;
    growth::build(asts)
}

fn write_json(path: &Path, value: &serde_json::Value) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, format!("{:#}\n", value))
}

/// `eigen`: principal eigenvalue of -Delta + q for the configured constant
/// potential; prints lambda1 and writes the eigenfunction as CSV.
pub fn cmd_eigen(config: &RunConfig) -> i32 {
    let grid = match build_grid(config) {
        Ok(g) => g,
        Err(e) => return fail(&e),
    };
    let q = ScalarField::constant(&grid, config.solver.potential);
    let eig = match principal_eigenpair(&grid, &q, config.solver.tol_outer) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    println!("lambda1 = {:.12}", eig.lambda1);
    println!("residual = {:.3e}", eig.residual);
    println!("iterations = {}", eig.iterations);
    let columns = [("phi1".to_string(), &eig.phi1)];
    if let Err(e) = csvio::write_fields_csv(&config.outputs.fields_path, &grid, &columns) {
        return fail_io("writing eigenfunction CSV", &e);
    }
    println!("phi1 -> {}", config.outputs.fields_path.display());
    EXIT_OK
}

struct CheckOutcome {
    eig: EigenResult,
    report: CriterionReport,
    pair: Option<CoexistencePair>,
}

fn run_checks(config: &RunConfig, grid: &Grid, model: &GrowthModel) -> Result<CheckOutcome, CoreError> {
    let tol = config.solver.tol_outer;
    let q = ScalarField::zeros(grid);
    let eig = principal_eigenpair(grid, &q, tol.min(1e-10))?;
    let existence = coexist_core::criteria::check_existence(model, eig.lambda1)?;
    let pair = if existence.iter().all(|m| m.satisfied) {
        Some(build_pair(grid, model, tol)?)
    } else {
        None
    };
    let report = assemble_report(grid, model, &eig, pair.as_ref())?;
    Ok(CheckOutcome { eig, report, pair })
}

fn print_report_summary(report: &CriterionReport) {
    println!("lambda1 = {:.12}", report.lambda1);
    for m in &report.existence {
        println!(
            "existence[{}]: value {:.6}, margin {:+.6} -> {}",
            m.species,
            m.value,
            m.margin,
            if m.satisfied { "ok" } else { "fail" }
        );
    }
    for m in &report.nonexistence {
        if m.satisfied {
            println!(
                "nonexistence[{}]: g({}) = {:.6} <= lambda1, extinction certified",
                m.species, m.species, m.value
            );
        }
    }
    if let Some(u) = &report.uniqueness_2sp {
        println!(
            "uniqueness (2sp): lhs {:.6} vs rhs {:.6} -> {}",
            u.lhs,
            u.rhs,
            if u.satisfied { "unique" } else { "not certified" }
        );
    }
    if let Some(u) = &report.uniqueness_nsp {
        println!(
            "uniqueness (Nsp): K = {:.6} -> {}",
            u.k,
            if u.satisfied { "unique" } else { "not certified" }
        );
    }
    if report.existence_verdict() {
        println!("verdict: coexistence state exists");
    } else if report.nonexistence_verdict() {
        println!("verdict: no positive coexistence state");
    } else {
        println!("verdict: inconclusive (neither criterion certified)");
    }
}

/// `check`: evaluate every criterion and write the JSON report.
pub fn cmd_check(config: &RunConfig) -> i32 {
    if config.species.len() < 2 {
        eprintln!("error: 'check' needs at least two species");
        return EXIT_CONFIG;
    }
    let grid = match build_grid(config) {
        Ok(g) => g,
        Err(e) => return fail(&e),
    };
    let model = match build_model(config, &[]) {
        Ok(m) => m,
        Err(e) => return fail(&e),
    };
    let outcome = match run_checks(config, &grid, &model) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    let value = serde_json::to_value(&outcome.report).expect("report serializes");
    if let Err(e) = write_json(&config.outputs.report_path, &value) {
        return fail_io("writing report", &e);
    }
    print_report_summary(&outcome.report);
    println!("report -> {}", config.outputs.report_path.display());
    if outcome.report.existence_verdict() {
        EXIT_OK
    } else if outcome.report.nonexistence_verdict() {
        EXIT_CRITERION
    } else {
        EXIT_OK
    }
}

/// `solve`: monotone iteration to a coexistence state; refuses (exit 2) when
/// the existence criterion fails unless `--force`, in which case the decay
/// behaviour is computed and reported instead.
pub fn cmd_solve(config: &RunConfig, force: bool) -> i32 {
    if config.species.len() < 2 {
        eprintln!("error: 'solve' needs at least two species");
        return EXIT_CONFIG;
    }
    let grid = match build_grid(config) {
        Ok(g) => g,
        Err(e) => return fail(&e),
    };
    let model = match build_model(config, &[]) {
        Ok(m) => m,
        Err(e) => return fail(&e),
    };
    let outcome = match run_checks(config, &grid, &model) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    print_report_summary(&outcome.report);

    if !outcome.report.existence_verdict() {
        if !force {
            eprintln!("refusing to solve: existence criterion not satisfied (use --force)");
            return EXIT_CRITERION;
        }
        return solve_decay_mode(config, &grid, &model, &outcome);
    }

    let tol = config.solver.tol_outer;
    let pair = outcome.pair.as_ref().expect("pair built when existence holds");
    let pair_report = match verify_pair(&grid, &model, pair, tol) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    if !pair_report.all_ok() {
        eprintln!("warning: pair inequalities not verified: {pair_report:?}");
    }
    let result = match coexist_core::coexist::solve_coexistence_from(
        &grid,
        &model,
        pair,
        pair.uppers.clone(),
        pair.lowers.clone(),
        tol,
        config.solver.max_iter,
        true,
    ) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };

    let mut columns: Vec<(String, &ScalarField)> = Vec::new();
    for (sp, field) in config.species.iter().zip(&result.fields) {
        columns.push((sp.name.clone(), field));
    }
    for (i, sp) in config.species.iter().enumerate() {
        columns.push((format!("{}_lower", sp.name), &pair.lowers[i]));
        columns.push((format!("{}_upper", sp.name), &pair.uppers[i]));
    }
    if let Err(e) = csvio::write_fields_csv(&config.outputs.fields_path, &grid, &columns) {
        return fail_io("writing fields CSV", &e);
    }

    let report = json!({
        "mode": "coexistence",
        "lambda1": outcome.eig.lambda1,
        "species": config.species.iter().map(|s| s.name.clone()).collect::<Vec<_>>(),
        "residuals": result.residuals,
        "iterations": result.iterations,
        "maximal_minimal_gap": result.maximal_minimal_gap,
        "unique_in_sector": result.unique_in_sector,
        "pair_verified": pair_report.all_ok(),
        "sandwich": {
            "within_bounds": result.sandwich.within_bounds,
            "strict_interior": result.sandwich.strict_interior,
            "lower_margin": result.sandwich.lower_margin,
            "upper_margin": result.sandwich.upper_margin,
        },
        "criteria": serde_json::to_value(&outcome.report).expect("report serializes"),
    });
    if let Err(e) = write_json(&config.outputs.report_path, &report) {
        return fail_io("writing report", &e);
    }
    for (i, sp) in config.species.iter().enumerate() {
        println!(
            "{}: sup {:.6}, residual {:.3e}",
            sp.name,
            result.fields[i].sup_norm(),
            result.residuals[i]
        );
    }
    println!(
        "maximal/minimal gap = {:.3e} ({})",
        result.maximal_minimal_gap,
        if result.unique_in_sector {
            "unique in sector"
        } else {
            "flagged non-unique"
        }
    );
    println!("fields -> {}", config.outputs.fields_path.display());
    println!("report -> {}", config.outputs.report_path.display());
    EXIT_OK
}

fn solve_decay_mode(
    config: &RunConfig,
    grid: &Grid,
    model: &GrowthModel,
    outcome: &CheckOutcome,
) -> i32 {
    let tol = config.solver.tol_outer;
    println!("existence not certified; --force runs the single-species decay check");
    let mut fields = Vec::new();
    let mut entries = Vec::new();
    for (i, sp) in config.species.iter().enumerate() {
        let check = match decay_check(grid, model, i, DECAY_THRESHOLD, tol, config.solver.max_iter)
        {
            Ok(c) => c,
            Err(e) => return fail(&e),
        };
        println!(
            "{}: sup {:.3e} after {} iterations ({})",
            sp.name,
            check.final_sup,
            check.iterations,
            if check.decayed { "decayed" } else { "persistent" }
        );
        entries.push(json!({
            "species": sp.name,
            "decayed": check.decayed,
            "final_sup": check.final_sup,
            "iterations": check.iterations,
        }));
        fields.push(check.final_field);
    }
    let columns: Vec<(String, &ScalarField)> = config
        .species
        .iter()
        .zip(&fields)
        .map(|(sp, f)| (sp.name.clone(), f))
        .collect();
    if let Err(e) = csvio::write_fields_csv(&config.outputs.fields_path, grid, &columns) {
        return fail_io("writing fields CSV", &e);
    }
    let report = json!({
        "mode": "decay",
        "lambda1": outcome.eig.lambda1,
        "threshold": DECAY_THRESHOLD,
        "species": entries,
        "criteria": serde_json::to_value(&outcome.report).expect("report serializes"),
    });
    if let Err(e) = write_json(&config.outputs.report_path, &report) {
        return fail_io("writing report", &e);
    }
    println!("fields -> {}", config.outputs.fields_path.display());
    println!("report -> {}", config.outputs.report_path.display());
    EXIT_OK
}

/// `sweep`: re-run the criteria (and solves where possible) across a range
/// of one scalar constant in one growth expression. Per-case failures land
/// in the row's status cell; the command itself still succeeds.
pub fn cmd_sweep(config: &RunConfig) -> i32 {
    let sweep = match &config.sweep {
        Some(s) => s.clone(),
        None => {
            eprintln!("error: 'sweep' needs a [sweep] section");
            return EXIT_CONFIG;
        }
    };
    if config.species.len() < 2 {
        eprintln!("error: 'sweep' needs at least two species");
        return EXIT_CONFIG;
    }
    let grid = match build_grid(config) {
        Ok(g) => g,
        Err(e) => return fail(&e),
    };
    let tol = config.solver.tol_outer;
    // The eigenvalue depends only on the grid, not on the swept constant.
    let eig = match principal_eigenpair(&grid, &ScalarField::zeros(&grid), tol.min(1e-10)) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };

    let mut header = vec!["parameter".to_string(), "lambda1".to_string()];
    for sp in &config.species {
        header.push(format!("margin_{}", sp.name));
    }
    header.push("uniq2_lhs".to_string());
    header.push("uniq2_rhs".to_string());
    header.push("uniqN_min_margin".to_string());
    for sp in &config.species {
        header.push(format!("sup_{}", sp.name));
    }
    header.push("status".to_string());

    let mut rows = Vec::new();
    for value in sweep.values() {
        let row = sweep_case(config, &grid, &eig, &sweep.parameter, value, tol);
        rows.push(match row {
            Ok(r) => r,
            Err(e) => {
                let mut r = vec![csvio::full_precision(value), csvio::full_precision(eig.lambda1)];
                r.resize(header.len() - 1, String::new());
                r.push(format!("error: {e}"));
                r
            }
        });
    }

    if let Err(e) = csvio::write_table_csv(&config.outputs.fields_path, &header, &rows) {
        return fail_io("writing sweep CSV", &e);
    }
    let report = json!({
        "mode": "sweep",
        "parameter": sweep.parameter,
        "cases": rows.len(),
        "lambda1": eig.lambda1,
        "table": config.outputs.fields_path.display().to_string(),
    });
    if let Err(e) = write_json(&config.outputs.report_path, &report) {
        return fail_io("writing report", &e);
    }
    println!(
        "swept {} case(s) of '{}' -> {}",
        rows.len(),
        sweep.parameter,
        config.outputs.fields_path.display()
    );
    EXIT_OK
}

fn sweep_case(
    config: &RunConfig,
    grid: &Grid,
    eig: &EigenResult,
    parameter: &str,
    value: f64,
    tol: f64,
) -> Result<Vec<String>, CoreError> {
    let n = config.species.len();
    let model = build_model(config, &[(parameter.to_string(), value)])?;
    let existence = coexist_core::criteria::check_existence(&model, eig.lambda1)?;
    let nonexistence = coexist_core::criteria::check_nonexistence(&model, eig.lambda1)?;

    let mut row = vec![csvio::full_precision(value), csvio::full_precision(eig.lambda1)];
    for m in &existence {
        row.push(csvio::full_precision(m.margin));
    }

    let exists = existence.iter().all(|m| m.satisfied);
    let extinct = nonexistence.iter().any(|m| m.satisfied);
    if exists {
        let pair = build_pair(grid, &model, tol)?;
        if n == 2 {
            let u2 = coexist_core::criteria::check_uniqueness_2sp(&model, &pair)?;
            row.push(csvio::full_precision(u2.lhs));
            row.push(csvio::full_precision(u2.rhs));
        } else {
            row.push(String::new());
            row.push(String::new());
        }
        let un = coexist_core::criteria::check_uniqueness_nsp(&model, &pair)?;
        let min_margin = un
            .lhs
            .iter()
            .zip(&un.rhs)
            .map(|(l, r)| l - r)
            .fold(f64::INFINITY, f64::min);
        row.push(csvio::full_precision(min_margin));
        let result = solve_coexistence(grid, &model, &pair, tol)?;
        for f in &result.fields {
            row.push(csvio::full_precision(f.sup_norm()));
        }
        row.push("ok".to_string());
    } else if extinct {
        row.push(String::new());
        row.push(String::new());
        row.push(String::new());
        for i in 0..n {
            let check = decay_check(grid, &model, i, DECAY_THRESHOLD, tol, config.solver.max_iter)?;
            row.push(csvio::full_precision(check.final_sup));
        }
        row.push("nonexistence".to_string());
    } else {
        row.push(String::new());
        row.push(String::new());
        row.push(String::new());
        for _ in 0..n {
            row.push(String::new());
        }
        row.push("inconclusive".to_string());
    }
    Ok(row)
}
