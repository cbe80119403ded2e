#![allow(clippy::needless_range_loop)] // indexed loops over stacked unknowns

//! Independent oracles backing the test suites.
//!
//! Everything here deliberately avoids the solver paths of `coexist-core`:
//! stencils are re-assembled from scratch, linear systems go through dense
//! Gaussian elimination or the Thomas algorithm instead of conjugate
//! gradients, nonlinear systems are solved by damped Newton instead of
//! monotone iteration, and growth-rate partials are taken by central finite
//! differences instead of symbolic differentiation. Agreement between the
//! two paths is the point of the comparison tests.

use coexist_core::expr::ExprAst;
use coexist_core::grid::Grid;
use rand::Rng;

/// Dense Gaussian elimination with partial pivoting. Panics on singular
/// systems; oracle failures should be loud.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    assert_eq!(a.len(), n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        assert!(a[pivot][col].abs() > 1e-300, "singular matrix at column {col}");
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x
}

/// Thomas algorithm for a tridiagonal system (sub, diag, sup are the three
/// bands; sub[0] and sup[n-1] are ignored).
pub fn tridiag_solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        assert!(denom.abs() > 1e-300, "tridiagonal breakdown at row {i}");
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Dense matrix of the negative discrete Dirichlet Laplacian plus a constant
/// shift, assembled directly from the grid geometry.
pub fn dense_shifted_laplacian(grid: &Grid, shift: f64) -> Vec<Vec<f64>> {
    let count = grid.node_count();
    let mut a = vec![vec![0.0; count]; count];
    match grid.dimension() {
        1 => {
            let h2 = grid.spacing(0) * grid.spacing(0);
            for i in 0..count {
                a[i][i] = 2.0 / h2 + shift;
                if i > 0 {
                    a[i][i - 1] = -1.0 / h2;
                }
                if i + 1 < count {
                    a[i][i + 1] = -1.0 / h2;
                }
            }
        }
        _ => {
            let nx = grid.interior_counts()[0];
            let ny = grid.interior_counts()[1];
            let hx2 = grid.spacing(0) * grid.spacing(0);
            let hy2 = grid.spacing(1) * grid.spacing(1);
            for iy in 0..ny {
                for ix in 0..nx {
                    let k = iy * nx + ix;
                    a[k][k] = 2.0 / hx2 + 2.0 / hy2 + shift;
                    if ix > 0 {
                        a[k][k - 1] = -1.0 / hx2;
                    }
                    if ix + 1 < nx {
                        a[k][k + 1] = -1.0 / hx2;
                    }
                    if iy > 0 {
                        a[k][k - nx] = -1.0 / hy2;
                    }
                    if iy + 1 < ny {
                        a[k][k + nx] = -1.0 / hy2;
                    }
                }
            }
        }
    }
    a
}

/// Second expression evaluator, written as an explicit post-order stack
/// machine rather than direct recursion. Returns `None` on any domain error
/// or non-finite intermediate.
pub fn eval_independent(ast: &ExprAst, point: &[f64]) -> Option<f64> {
    enum Job<'a> {
        Visit(&'a ExprAst),
        Combine(&'a ExprAst),
    }
    let mut jobs = vec![Job::Visit(ast)];
    let mut values: Vec<f64> = Vec::new();
    while let Some(job) = jobs.pop() {
        match job {
            Job::Visit(node) => match node {
                ExprAst::Const(c) => values.push(*c),
                ExprAst::Var(i) => values.push(*point.get(*i)?),
                ExprAst::Neg(e) | ExprAst::Exp(e) | ExprAst::Log(e) => {
                    jobs.push(Job::Combine(node));
                    jobs.push(Job::Visit(e));
                }
                ExprAst::Pow(e, _) => {
                    jobs.push(Job::Combine(node));
                    jobs.push(Job::Visit(e));
                }
                ExprAst::Add(a, b)
                | ExprAst::Sub(a, b)
                | ExprAst::Mul(a, b)
                | ExprAst::Div(a, b) => {
                    jobs.push(Job::Combine(node));
                    jobs.push(Job::Visit(b));
                    jobs.push(Job::Visit(a));
                }
            },
            Job::Combine(node) => {
                let out = match node {
                    ExprAst::Neg(_) => -values.pop()?,
                    ExprAst::Exp(_) => values.pop()?.exp(),
                    ExprAst::Log(_) => {
                        let v = values.pop()?;
                        if v <= 0.0 {
                            return None;
                        }
                        v.ln()
                    }
                    ExprAst::Pow(_, k) => {
                        let v = values.pop()?;
                        if v == 0.0 && *k < 0 {
                            return None;
                        }
                        v.powi(*k)
                    }
                    ExprAst::Add(..) => {
                        let b = values.pop()?;
                        values.pop()? + b
                    }
                    ExprAst::Sub(..) => {
                        let b = values.pop()?;
                        values.pop()? - b
                    }
                    ExprAst::Mul(..) => {
                        let b = values.pop()?;
                        values.pop()? * b
                    }
                    ExprAst::Div(..) => {
                        let b = values.pop()?;
                        if b == 0.0 {
                            return None;
                        }
                        values.pop()? / b
                    }
                    _ => unreachable!("leaves never schedule a combine"),
                };
                if !out.is_finite() {
                    return None;
                }
                values.push(out);
            }
        }
    }
    values.pop()
}

/// Central finite difference of `ast` w.r.t. variable `var`.
pub fn fd_partial(ast: &ExprAst, point: &[f64], var: usize, h: f64) -> Option<f64> {
    let mut plus = point.to_vec();
    let mut minus = point.to_vec();
    plus[var] += h;
    minus[var] -= h;
    Some((eval_independent(ast, &plus)? - eval_independent(ast, &minus)?) / (2.0 * h))
}

/// Damped Newton solve of the 1D discrete logistic equation
/// (u[i-1] - 2u[i] + u[i+1])/h^2 + u[i] f(u[i]) = 0 with zero boundary
/// ghosts, Jacobian bands solved by the Thomas algorithm and the slope of f
/// taken by finite differences. Panics when Newton stalls.
pub fn newton_logistic_1d(grid: &Grid, f: &ExprAst, start: &[f64]) -> Vec<f64> {
    assert_eq!(grid.dimension(), 1, "tridiagonal oracle is one-dimensional");
    let n = grid.node_count();
    let h2 = grid.spacing(0) * grid.spacing(0);
    let feval = |s: f64| eval_independent(f, &[s]).expect("oracle growth eval");
    let fslope = |s: f64| {
        let d = 1e-7 * (1.0 + s.abs());
        (feval(s + d) - feval(s - d)) / (2.0 * d)
    };
    let residual = |u: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let left = if i > 0 { u[i - 1] } else { 0.0 };
                let right = if i + 1 < n { u[i + 1] } else { 0.0 };
                (left - 2.0 * u[i] + right) / h2 + u[i] * feval(u[i])
            })
            .collect()
    };

    let mut u = start.to_vec();
    let mut res = residual(&u);
    let mut res_norm = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    for _ in 0..200 {
        // The residual itself is only computable to ~eps * |u| / h^2.
        let sup_u = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let stop = 8.0 * f64::EPSILON * (1.0 + sup_u) / h2;
        if res_norm <= stop.max(1e-13) {
            return u;
        }
        let sub = vec![1.0 / h2; n];
        let sup = vec![1.0 / h2; n];
        let diag: Vec<f64> = (0..n)
            .map(|i| -2.0 / h2 + feval(u[i]) + u[i] * fslope(u[i]))
            .collect();
        let neg_res: Vec<f64> = res.iter().map(|r| -r).collect();
        let delta = tridiag_solve(&sub, &diag, &sup, &neg_res);

        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
            let trial_res = residual(&trial);
            let trial_norm = trial_res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
            if trial_norm <= (1.0 - 0.25 * t) * res_norm || t < 1e-10 {
                u = trial;
                res = trial_res;
                res_norm = trial_norm;
                break;
            }
            t *= 0.5;
        }
    }
    panic!("logistic Newton oracle stalled at residual {res_norm:.3e}");
}

/// Damped Newton solve of the full coupled discrete system
/// Delta_h u_i + u_i g_i(u) = 0 for all species at once, with a dense LU of
/// the stacked Jacobian and finite-difference growth partials.
pub fn newton_coexistence(grid: &Grid, growth: &[ExprAst], start: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let species = growth.len();
    let count = grid.node_count();
    let dim = species * count;
    let lap = dense_shifted_laplacian(grid, 0.0);
    let geval = |i: usize, point: &[f64]| -> f64 {
        eval_independent(&growth[i], point).expect("oracle growth eval")
    };
    let gslope = |i: usize, j: usize, point: &[f64]| -> f64 {
        let d = 1e-7 * (1.0 + point[j].abs());
        let mut plus = point.to_vec();
        let mut minus = point.to_vec();
        plus[j] += d;
        minus[j] -= d;
        (geval(i, &plus) - geval(i, &minus)) / (2.0 * d)
    };

    let residual = |u: &[Vec<f64>]| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        let mut point = vec![0.0; species];
        for i in 0..species {
            for k in 0..count {
                let mut lap_val = 0.0;
                for m in 0..count {
                    if lap[k][m] != 0.0 {
                        lap_val -= lap[k][m] * u[i][m];
                    }
                }
                for (j, p) in point.iter_mut().enumerate() {
                    *p = u[j][k];
                }
                out[i * count + k] = lap_val + u[i][k] * geval(i, &point);
            }
        }
        out
    };
    let sup = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let h2_min = (0..grid.dimension())
        .map(|a| grid.spacing(a) * grid.spacing(a))
        .fold(f64::INFINITY, f64::min);
    let mut u: Vec<Vec<f64>> = start.to_vec();
    let mut res = residual(&u);
    let mut res_norm = sup(&res);
    for _ in 0..200 {
        let sup_u = u
            .iter()
            .flat_map(|f| f.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let stop = 8.0 * f64::EPSILON * (1.0 + sup_u) / h2_min;
        if res_norm <= stop.max(1e-13) {
            return u;
        }
        let mut jac = vec![vec![0.0; dim]; dim];
        let mut point = vec![0.0; species];
        for i in 0..species {
            for k in 0..count {
                let row = i * count + k;
                for m in 0..count {
                    if lap[k][m] != 0.0 {
                        jac[row][i * count + m] -= lap[k][m];
                    }
                }
                for (j, p) in point.iter_mut().enumerate() {
                    *p = u[j][k];
                }
                for j in 0..species {
                    let col = j * count + k;
                    let mut entry = u[i][k] * gslope(i, j, &point);
                    if j == i {
                        entry += geval(i, &point);
                    }
                    jac[row][col] += entry;
                }
            }
        }
        let neg_res: Vec<f64> = res.iter().map(|r| -r).collect();
        let delta = dense_solve(jac, neg_res);

        let mut t = 1.0;
        loop {
            let trial: Vec<Vec<f64>> = (0..species)
                .map(|i| {
                    (0..count)
                        .map(|k| u[i][k] + t * delta[i * count + k])
                        .collect()
                })
                .collect();
            let trial_res = residual(&trial);
            let trial_norm = sup(&trial_res);
            if trial_norm <= (1.0 - 0.25 * t) * res_norm || t < 1e-10 {
                u = trial;
                res = trial_res;
                res_norm = trial_norm;
                break;
            }
            t *= 0.5;
        }
    }
    panic!("coexistence Newton oracle stalled at residual {res_norm:.3e}");
}

/// Random expression over `num_vars` variables. Division and logarithm are
/// generated with positively-bounded arguments so that most draws evaluate
/// cleanly on [0, 1]^N; callers still filter on finiteness.
pub fn random_ast<R: Rng>(rng: &mut R, num_vars: usize, depth: usize) -> ExprAst {
    if depth == 0 || rng.gen_bool(0.3) {
        return if rng.gen_bool(0.5) {
            ExprAst::Const(rng.gen_range(0.5..3.0))
        } else {
            ExprAst::Var(rng.gen_range(0..num_vars))
        };
    }
    // c + (sub)^2 with c > 0.5 stays away from zero.
    fn positive_arg<R: Rng>(rng: &mut R, num_vars: usize, d: usize) -> ExprAst {
        ExprAst::Add(
            Box::new(ExprAst::Const(rng.gen_range(0.5..2.0))),
            Box::new(ExprAst::Pow(Box::new(random_ast(rng, num_vars, d)), 2)),
        )
    }
    match rng.gen_range(0..10) {
        0 | 1 => ExprAst::Add(
            Box::new(random_ast(rng, num_vars, depth - 1)),
            Box::new(random_ast(rng, num_vars, depth - 1)),
        ),
        2 | 3 => ExprAst::Sub(
            Box::new(random_ast(rng, num_vars, depth - 1)),
            Box::new(random_ast(rng, num_vars, depth - 1)),
        ),
        4 | 5 => ExprAst::Mul(
            Box::new(random_ast(rng, num_vars, depth - 1)),
            Box::new(random_ast(rng, num_vars, depth - 1)),
        ),
        6 => ExprAst::Div(
            Box::new(random_ast(rng, num_vars, depth - 1)),
            Box::new(positive_arg(rng, num_vars, depth.saturating_sub(2))),
        ),
        7 => ExprAst::Neg(Box::new(random_ast(rng, num_vars, depth - 1))),
        8 => ExprAst::Pow(
            Box::new(random_ast(rng, num_vars, depth - 1)),
            rng.gen_range(2..4),
        ),
        _ => {
            if rng.gen_bool(0.5) {
                ExprAst::Exp(Box::new(random_ast(rng, num_vars, depth - 1)))
            } else {
                ExprAst::Log(Box::new(positive_arg(rng, num_vars, depth.saturating_sub(2))))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use coexist_core::expr::parse;

    #[test]
    fn dense_solver_inverts_small_system() {
        let a = vec![vec![4.0, 1.0], vec![1.0, 3.0]];
        let x = dense_solve(a, vec![1.0, 2.0]);
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-12);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tridiag_matches_dense() {
        let sub = vec![0.0, -1.0, -1.0, -1.0];
        let diag = vec![2.5, 2.5, 2.5, 2.5];
        let sup = vec![-1.0, -1.0, -1.0, 0.0];
        let rhs = vec![1.0, 0.0, 2.0, -1.0];
        let x = tridiag_solve(&sub, &diag, &sup, &rhs);
        let mut a = vec![vec![0.0; 4]; 4];
        for i in 0..4 {
            a[i][i] = 2.5;
            if i > 0 {
                a[i][i - 1] = -1.0;
            }
            if i < 3 {
                a[i][i + 1] = -1.0;
            }
        }
        let y = dense_solve(a, rhs);
        for (xi, yi) in x.iter().zip(&y) {
            assert!((xi - yi).abs() < 1e-12);
        }
    }

    #[test]
    fn independent_evaluator_handles_domains() {
        let ast = parse("log(u) + 1/v", 2).unwrap();
        assert!(eval_independent(&ast, &[-1.0, 1.0]).is_none());
        assert!(eval_independent(&ast, &[1.0, 0.0]).is_none());
        let v = eval_independent(&ast, &[1.0, 2.0]).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
    }
}
