//! Cross-checks of the iterative solvers against independent oracles:
//! dense factorization for the linear solves, damped Newton for the
//! nonlinear ones.

#![allow(clippy::needless_range_loop)]

use coexist_core::coexist::{build_pair, solve_coexistence};
use coexist_core::expr::parse;
use coexist_core::grid::{solve_spd, Grid, LinearOperator, ScalarField};
use coexist_core::growth;
use coexist_core::logistic::solve_logistic;
use coexist_testkit::{dense_shifted_laplacian, dense_solve, newton_coexistence, newton_logistic_1d};

#[test]
fn cg_matches_dense_factorization_1d() {
    // (-Delta_h + 1) w = 1 on (0,1).
    let grid = Grid::line(1.0, 31).unwrap();
    let op = LinearOperator::new(&grid, 1.0).unwrap();
    let rhs = ScalarField::constant(&grid, 1.0);
    let w = solve_spd(&op, &rhs, 1e-12).unwrap();
    let dense = dense_solve(dense_shifted_laplacian(&grid, 1.0), vec![1.0; 31]);
    for (a, b) in w.values().iter().zip(&dense) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn cg_matches_dense_factorization_2d() {
    let grid = Grid::rectangle(1.0, 1.5, 9, 7).unwrap();
    let op = LinearOperator::new(&grid, 0.5).unwrap();
    let rhs = ScalarField::from_fn(&grid, |x| x[0] + 2.0 * x[1]);
    let w = solve_spd(&op, &rhs, 1e-12).unwrap();
    let dense = dense_solve(
        dense_shifted_laplacian(&grid, 0.5),
        rhs.values().to_vec(),
    );
    for (a, b) in w.values().iter().zip(&dense) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn logistic_agrees_with_newton_oracle() {
    let grid = Grid::line(1.0, 199).unwrap();
    let f = parse("12 - u", 1).unwrap();
    let result = solve_logistic(&grid, &f, 1e-9).unwrap();
    let theta = result.theta.as_ref().unwrap();

    let capacity = result.capacity;
    let start: Vec<f64> = (0..grid.node_count())
        .map(|k| {
            let x = grid.coords(k)[0];
            capacity * 4.0 * x * (1.0 - x)
        })
        .collect();
    let oracle = newton_logistic_1d(&grid, &f, &start);

    let mid = grid.node_count() / 2;
    assert!((grid.coords(mid)[0] - 0.5).abs() < 1e-12, "odd node count centers the grid");
    assert!(
        (theta.values()[mid] - oracle[mid]).abs() < 1e-6,
        "midpoint {} vs oracle {}",
        theta.values()[mid],
        oracle[mid]
    );
    let worst = theta
        .values()
        .iter()
        .zip(&oracle)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(worst < 1e-6, "sup distance {worst}");
}

#[test]
fn coexistence_agrees_with_coupled_newton_oracle() {
    let grid = Grid::line(1.0, 25).unwrap();
    let asts = vec![
        parse("15 - u - 0.1*v", 2).unwrap(),
        parse("15 - 0.1*u - v", 2).unwrap(),
    ];
    let model = growth::build(asts.clone()).unwrap();
    let pair = build_pair(&grid, &model, 1e-9).unwrap();
    let result = solve_coexistence(&grid, &model, &pair, 1e-9).unwrap();

    let start: Vec<Vec<f64>> = result
        .fields
        .iter()
        .enumerate()
        .map(|(i, _)| {
            // Seed inside the sector, independent of the converged state.
            pair.lowers[i]
                .values()
                .iter()
                .zip(pair.uppers[i].values())
                .map(|(lo, hi)| 0.5 * (lo + hi))
                .collect()
        })
        .collect();
    let oracle = newton_coexistence(&grid, &asts, &start);
    for i in 0..2 {
        let worst = result.fields[i]
            .values()
            .iter()
            .zip(&oracle[i])
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(worst < 1e-6, "species {i} sup distance {worst}");
    }
}

#[test]
fn two_dimensional_coexistence_small_grid() {
    let grid = Grid::rectangle(1.0, 1.0, 11, 11).unwrap();
    // lambda1 ~ 2 pi^2; a = 25 leaves margin for both sections.
    let model = growth::build(vec![
        parse("25 - u - 0.1*v", 2).unwrap(),
        parse("25 - 0.1*u - v", 2).unwrap(),
    ])
    .unwrap();
    let pair = build_pair(&grid, &model, 1e-8).unwrap();
    let result = solve_coexistence(&grid, &model, &pair, 1e-8).unwrap();
    assert!(result.unique_in_sector);
    for r in &result.residuals {
        assert!(*r <= 1e-8);
    }
    let oracle = newton_coexistence(
        &grid,
        &[
            parse("25 - u - 0.1*v", 2).unwrap(),
            parse("25 - 0.1*u - v", 2).unwrap(),
        ],
        &result
            .fields
            .iter()
            .map(|f| f.values().to_vec())
            .collect::<Vec<_>>(),
    );
    for i in 0..2 {
        let worst = result.fields[i]
            .values()
            .iter()
            .zip(&oracle[i])
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(worst < 1e-6, "species {i} sup distance {worst}");
    }
}
