//! Property tests for the expression layer: symbolic derivatives against
//! central finite differences, the recursive evaluator against an
//! independent stack-machine evaluator, and printer round-trips.

use coexist_core::expr::{parse, ExprAst};
use coexist_testkit::{eval_independent, fd_partial, random_ast};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CASES: usize = 300;

/// Draw a random expression that evaluates to a moderate finite value (and
/// has moderate partials) at all supplied points; resample otherwise.
fn usable_ast(
    rng: &mut ChaCha8Rng,
    num_vars: usize,
    points: &[Vec<f64>],
) -> (ExprAst, Vec<ExprAst>) {
    'outer: for _ in 0..200 {
        let ast = random_ast(rng, num_vars, 4);
        let partials: Vec<ExprAst> = (0..num_vars).map(|v| ast.differentiate(v)).collect();
        for p in points {
            match eval_independent(&ast, p) {
                Some(v) if v.abs() <= 1e3 => {}
                _ => continue 'outer,
            }
            for d in &partials {
                match eval_independent(d, p) {
                    Some(v) if v.abs() <= 1e3 => {}
                    _ => continue 'outer,
                }
            }
        }
        return (ast, partials);
    }
    panic!("could not draw a usable expression in 200 attempts");
}

#[test]
fn symbolic_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1ff);
    for case in 0..CASES {
        let num_vars = rng.gen_range(1..=3);
        let points: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..num_vars).map(|_| rng.gen_range(0.1..0.9)).collect())
            .collect();
        let (ast, partials) = usable_ast(&mut rng, num_vars, &points);
        for p in &points {
            for (v, d) in partials.iter().enumerate() {
                let symbolic = d.eval(p).unwrap();
                let fd = fd_partial(&ast, p, v, 1e-6).unwrap();
                let tol = 1e-6 * (1.0 + symbolic.abs());
                assert!(
                    (symbolic - fd).abs() <= tol,
                    "case {case}, var {v} at {p:?}: symbolic {symbolic} vs fd {fd}"
                );
            }
        }
    }
}

#[test]
fn recursive_and_stack_evaluators_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xe7a1);
    for _ in 0..CASES {
        let num_vars = rng.gen_range(1..=3);
        let point: Vec<f64> = (0..num_vars).map(|_| rng.gen_range(0.05..1.5)).collect();
        let ast = random_ast(&mut rng, num_vars, 4);
        match (ast.eval(&point), eval_independent(&ast, &point)) {
            (Ok(a), Some(b)) => {
                assert!(
                    (a - b).abs() <= 1e-12 * (1.0 + a.abs()),
                    "{a} vs {b} at {point:?}"
                );
            }
            (Err(_), None) => {} // both reject the same domain violation
            (a, b) => panic!("evaluators disagree on domain: {a:?} vs {b:?}"),
        }
    }
}

#[test]
fn print_parse_round_trip_is_evaluation_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9041);
    for _ in 0..CASES {
        let num_vars = rng.gen_range(1..=3);
        let ast = random_ast(&mut rng, num_vars, 4);
        let reparsed = parse(&ast.print(), num_vars).unwrap();
        for _ in 0..3 {
            let point: Vec<f64> = (0..num_vars).map(|_| rng.gen_range(0.1..1.2)).collect();
            match (ast.eval(&point), reparsed.eval(&point)) {
                (Ok(a), Ok(b)) => assert_eq!(a.to_bits(), b.to_bits(), "at {point:?}"),
                (Err(_), Err(_)) => {}
                (a, b) => panic!("round trip changed domain behaviour: {a:?} vs {b:?}"),
            }
        }
    }
}
