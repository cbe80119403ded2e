//! Upper/lower solution pairs and the coupled monotone iteration to
//! coexistence states.
//!
//! For a competitive model the pair is built from 2N scalar logistic
//! problems: species i's upper solution solves the logistic problem with all
//! competitors at zero, its lower solution the one with all competitors
//! frozen at their carrying capacities. The coupled solver then maintains
//! two interleaved N-tuples, starting at the uppers (non-increasing) and at
//! the lowers (non-decreasing); species i of one tuple is always updated
//! with competitors read from the *other* tuple, which is what makes both
//! sequences monotone for the competitive sign pattern. The limits are the
//! maximal and minimal solutions in the sector; their sup-distance is the
//! natural numerical witness of uniqueness, and the returned state is their
//! midpoint (both limits are kept when the gap stays above tolerance).

use crate::eigen::principal_eigenpair;
use crate::error::{Error, Result};
use crate::grid::{apply_laplacian, solve_spd_from, Grid, LinearOperator, ScalarField};
use crate::growth::GrowthModel;
use crate::logistic::{eigen_tol, solve_logistic_with, MONOTONE_SLACK};

/// Default cap on outer iterations of the coupled scheme.
pub const DEFAULT_MAX_OUTER: usize = 100_000;

/// Upper and lower solution tuples trapping every coexistence state.
#[derive(Debug, Clone)]
pub struct CoexistencePair {
    /// theta of g_i with all competitors at zero, per species.
    pub uppers: Vec<ScalarField>,
    /// theta of g_i with all competitors at their capacities, per species.
    pub lowers: Vec<ScalarField>,
}

/// Pointwise verification of the defining pair inequalities.
#[derive(Debug, Clone)]
pub struct PairReport {
    /// Slack per species: 10 tol (1 + sup |g_i| over the box).
    pub slack: Vec<f64>,
    /// Worst (node, value) of Delta ubar_i + ubar_i g_i(competitors at
    /// lowers); the inequality asks value <= slack.
    pub worst_upper: Vec<(usize, f64)>,
    /// Worst (node, value) of Delta ulow_i + ulow_i g_i(competitors at
    /// uppers); the inequality asks value >= -slack.
    pub worst_lower: Vec<(usize, f64)>,
    pub upper_ok: Vec<bool>,
    pub lower_ok: Vec<bool>,
}

impl PairReport {
    pub fn all_ok(&self) -> bool {
        self.upper_ok.iter().all(|b| *b) && self.lower_ok.iter().all(|b| *b)
    }
}

/// Pointwise sandwich certificate for a computed state.
#[derive(Debug, Clone)]
pub struct SandwichCertificate {
    /// lowers - slack <= u_i <= uppers + slack everywhere.
    pub within_bounds: Vec<bool>,
    /// Strict inequalities on nodes at distance >= 2h from the boundary.
    pub strict_interior: Vec<bool>,
    /// min over nodes of u_i - lower_i.
    pub lower_margin: Vec<f64>,
    /// min over nodes of upper_i - u_i.
    pub upper_margin: Vec<f64>,
}

impl SandwichCertificate {
    pub fn all_within(&self) -> bool {
        self.within_bounds.iter().all(|b| *b)
    }
}

/// Converged output of the interleaved scheme.
#[derive(Debug, Clone)]
pub struct CoexistenceResult {
    /// Midpoint of the maximal and minimal limits, per species.
    pub fields: Vec<ScalarField>,
    /// Limit of the sequence started at the uppers (maximal state).
    pub maximal: Vec<ScalarField>,
    /// Limit of the sequence started at the lowers (minimal state).
    pub minimal: Vec<ScalarField>,
    /// Sup norm of Delta_h u_i + u_i g_i(u) at the returned fields.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// Largest sup-distance between the two limits over all species.
    pub maximal_minimal_gap: f64,
    /// True when the gap closed below tolerance; otherwise both limits are
    /// distinct and the state may be non-unique in the sector.
    pub unique_in_sector: bool,
    pub sandwich: SandwichCertificate,
    /// Largest observed monotonicity violation (<= round-off slack).
    pub monotone_violation: f64,
}

/// Build the upper/lower pair by solving 2N scalar logistic problems.
///
/// Any nonexistence at the discrete level (a section with f(0) <= lambda1)
/// aborts with [`Error::LogisticNonexistence`].
pub fn build_pair(grid: &Grid, model: &GrowthModel, tol: f64) -> Result<CoexistencePair> {
    let n = model.species_count();
    let eig = principal_eigenpair(grid, &ScalarField::zeros(grid), eigen_tol(tol))?;
    let zeros = vec![0.0; n];
    let mut uppers = Vec::with_capacity(n);
    let mut lowers = Vec::with_capacity(n);
    for i in 0..n {
        let upper_section = model.section(i, &zeros);
        let lower_section = model.section(i, model.capacities());
        for (section, out) in [(upper_section, &mut uppers), (lower_section, &mut lowers)] {
            let r = solve_logistic_with(grid, &section, tol, DEFAULT_MAX_OUTER, &eig)?;
            match r.theta {
                Some(theta) => out.push(theta),
                None => {
                    return Err(Error::LogisticNonexistence {
                        f0: r.f0,
                        lambda1: r.lambda1,
                    })
                }
            }
        }
    }
    for i in 0..n {
        let crossing = lowers[i].max_excess_over(&uppers[i]);
        if crossing > 10.0 * tol {
            return Err(Error::MonotonicityBroken {
                direction: "pair (lower <= upper)",
                iteration: 0,
                violation: crossing,
                shift: 0.0,
            });
        }
    }
    Ok(CoexistencePair { uppers, lowers })
}

/// Check the pair inequalities discretely at every interior node.
///
/// By the competitive monotonicity it suffices to test the upper inequality
/// with competitors at their lower fields and the lower inequality with
/// competitors at their upper fields; the slack absorbs the logistic solves'
/// residual.
pub fn verify_pair(
    grid: &Grid,
    model: &GrowthModel,
    pair: &CoexistencePair,
    tol: f64,
) -> Result<PairReport> {
    let n = model.species_count();
    let count = grid.node_count();
    let mut report = PairReport {
        slack: Vec::with_capacity(n),
        worst_upper: Vec::with_capacity(n),
        worst_lower: Vec::with_capacity(n),
        upper_ok: Vec::with_capacity(n),
        lower_ok: Vec::with_capacity(n),
    };
    let mut point = vec![0.0; n];
    for i in 0..n {
        let slack = 10.0 * tol * (1.0 + model.growth_sup_abs(i));
        let lap_up = apply_laplacian(&pair.uppers[i]);
        let lap_low = apply_laplacian(&pair.lowers[i]);
        let mut worst_up = (0usize, f64::NEG_INFINITY);
        let mut worst_low = (0usize, f64::INFINITY);
        for k in 0..count {
            for j in 0..n {
                point[j] = pair.lowers[j].values()[k];
            }
            point[i] = pair.uppers[i].values()[k];
            let up_val = lap_up.values()[k] + point[i] * model.growth(i).eval(&point)?;
            if up_val > worst_up.1 {
                worst_up = (k, up_val);
            }
            for j in 0..n {
                point[j] = pair.uppers[j].values()[k];
            }
            point[i] = pair.lowers[i].values()[k];
            let low_val = lap_low.values()[k] + point[i] * model.growth(i).eval(&point)?;
            if low_val < worst_low.1 {
                worst_low = (k, low_val);
            }
        }
        report.upper_ok.push(worst_up.1 <= slack);
        report.lower_ok.push(worst_low.1 >= -slack);
        report.worst_upper.push(worst_up);
        report.worst_lower.push(worst_low);
        report.slack.push(slack);
    }
    Ok(report)
}

/// Coupled monotone iteration from the verified pair.
pub fn solve_coexistence(
    grid: &Grid,
    model: &GrowthModel,
    pair: &CoexistencePair,
    tol: f64,
) -> Result<CoexistenceResult> {
    solve_coexistence_from(
        grid,
        model,
        pair,
        pair.uppers.clone(),
        pair.lowers.clone(),
        tol,
        DEFAULT_MAX_OUTER,
        true,
    )
}

/// Interleaved scheme from explicit starting tuples.
///
/// Monotonicity of the two sequences is only guaranteed (and only enforced)
/// when starting at the pair itself; multi-start verification launches from
/// interior points with `enforce_monotone = false`, where the iteration is a
/// plain fixed-point scheme confined to the sector.
#[allow(clippy::too_many_arguments)]
pub fn solve_coexistence_from(
    grid: &Grid,
    model: &GrowthModel,
    pair: &CoexistencePair,
    over_start: Vec<ScalarField>,
    under_start: Vec<ScalarField>,
    tol: f64,
    max_outer: usize,
    enforce_monotone: bool,
) -> Result<CoexistenceResult> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidField(format!("tolerance {tol} must be positive")));
    }
    let n = model.species_count();
    let shifts: Vec<f64> = (0..n).map(|i| model.monotone_shift(i)).collect();
    let ops: Vec<LinearOperator> = shifts
        .iter()
        .map(|&m| LinearOperator::new(grid, m))
        .collect::<Result<_>>()?;
    let cap_scale = model
        .capacities()
        .iter()
        .fold(0.0f64, |m, &c| m.max(c));
    let max_shift = shifts.iter().fold(0.0f64, |m, &s| m.max(s));
    let inner_tol = crate::logistic::inner_cg_tol_for(grid, max_shift, cap_scale, tol);

    let mut over = over_start;
    let mut under = under_start;
    let mut stag_req = tol / (2.0 * (1.0 + max_shift));
    let mut gap_req = tol;
    let mut gap_checkpoint = f64::INFINITY;
    let mut violation = 0.0f64;
    let mut iterations = 0;

    loop {
        if iterations >= max_outer {
            let gap = tuple_gap(&over, &under);
            let fields = midpoints(&over, &under);
            return Err(Error::IterationDidNotConverge {
                iterations,
                gap,
                residual: residuals(model, &fields)?.iter().fold(0.0f64, |m, r| m.max(*r)),
            });
        }

        // Jacobi-style sweep: every update reads the previous snapshot.
        let mut next_over = Vec::with_capacity(n);
        let mut next_under = Vec::with_capacity(n);
        for i in 0..n {
            next_over.push(coupled_step(&ops[i], model, i, &over, &under, inner_tol)?);
            next_under.push(coupled_step(&ops[i], model, i, &under, &over, inner_tol)?);
        }
        iterations += 1;

        let mut step = 0.0f64;
        for i in 0..n {
            let up_viol = next_over[i].max_excess_over(&over[i]);
            let low_viol = under[i].max_excess_over(&next_under[i]);
            let crossing = next_under[i].max_excess_over(&next_over[i]);
            if enforce_monotone {
                violation = violation.max(up_viol).max(low_viol).max(crossing);
                if up_viol > MONOTONE_SLACK {
                    return Err(Error::MonotonicityBroken {
                        direction: "overbar (non-increasing)",
                        iteration: iterations,
                        violation: up_viol,
                        shift: shifts[i],
                    });
                }
                if low_viol > MONOTONE_SLACK {
                    return Err(Error::MonotonicityBroken {
                        direction: "underbar (non-decreasing)",
                        iteration: iterations,
                        violation: low_viol,
                        shift: shifts[i],
                    });
                }
                if crossing > MONOTONE_SLACK {
                    return Err(Error::MonotonicityBroken {
                        direction: "sandwich (underbar <= overbar)",
                        iteration: iterations,
                        violation: crossing,
                        shift: shifts[i],
                    });
                }
            }
            step = step
                .max(next_over[i].sup_distance(&over[i]))
                .max(next_under[i].sup_distance(&under[i]));
        }
        over = next_over;
        under = next_under;

        if step > stag_req {
            continue;
        }
        let gap = tuple_gap(&over, &under);
        if gap <= gap_req {
            let fields = midpoints(&over, &under);
            let res = residuals(model, &fields)?;
            if res.iter().all(|r| *r <= tol) {
                let sandwich = verify_sandwich(&fields, pair, tol);
                return Ok(CoexistenceResult {
                    fields,
                    maximal: over,
                    minimal: under,
                    residuals: res,
                    iterations,
                    maximal_minimal_gap: gap,
                    unique_in_sector: true,
                    sandwich,
                    monotone_violation: violation,
                });
            }
            stag_req *= 0.25;
            gap_req *= 0.25;
        } else if gap > 0.98 * gap_checkpoint {
            // Both sequences stagnated and the gap has stopped moving: the
            // limits are genuinely distinct. Return both, flagged.
            let fields = midpoints(&over, &under);
            let res = residuals(model, &fields)?;
            let sandwich = verify_sandwich(&fields, pair, tol);
            return Ok(CoexistenceResult {
                fields,
                maximal: over,
                minimal: under,
                residuals: res,
                iterations,
                maximal_minimal_gap: gap,
                unique_in_sector: false,
                sandwich,
                monotone_violation: violation,
            });
        } else {
            gap_checkpoint = gap;
            stag_req *= 0.25;
        }
    }
}

/// One update of species `i` of the tuple `own`, competitors read from
/// `other`: solve (-Delta_h + M_i) w = M_i u_i + u_i g_i(...).
fn coupled_step(
    op: &LinearOperator,
    model: &GrowthModel,
    i: usize,
    own: &[ScalarField],
    other: &[ScalarField],
    inner_tol: f64,
) -> Result<ScalarField> {
    let n = model.species_count();
    let shift = op.shift();
    let mut rhs = own[i].clone();
    let mut point = vec![0.0; n];
    for k in 0..rhs.values().len() {
        for j in 0..n {
            point[j] = other[j].values()[k];
        }
        point[i] = own[i].values()[k];
        let u = point[i];
        rhs.values_mut()[k] = shift * u + u * model.growth(i).eval(&point)?;
    }
    solve_spd_from(op, &rhs, &own[i], inner_tol)
}

/// Sup norms of Delta_h u_i + u_i g_i(u) for a candidate state.
pub fn residuals(model: &GrowthModel, fields: &[ScalarField]) -> Result<Vec<f64>> {
    let n = model.species_count();
    let mut out = Vec::with_capacity(n);
    let mut point = vec![0.0; n];
    for i in 0..n {
        let lap = apply_laplacian(&fields[i]);
        let mut worst = 0.0f64;
        for k in 0..fields[i].values().len() {
            for j in 0..n {
                point[j] = fields[j].values()[k];
            }
            worst = worst
                .max((lap.values()[k] + point[i] * model.growth(i).eval(&point)?).abs());
        }
        out.push(worst);
    }
    Ok(out)
}

/// Pointwise sandwich check of `fields` against the pair, slack = 10 tol;
/// strictness is asked only of nodes at distance >= 2h from the boundary,
/// where the inequalities do not degenerate with the boundary data.
pub fn verify_sandwich(
    fields: &[ScalarField],
    pair: &CoexistencePair,
    tol: f64,
) -> SandwichCertificate {
    let slack = 10.0 * tol;
    let n = fields.len();
    let mut cert = SandwichCertificate {
        within_bounds: Vec::with_capacity(n),
        strict_interior: Vec::with_capacity(n),
        lower_margin: Vec::with_capacity(n),
        upper_margin: Vec::with_capacity(n),
    };
    for i in 0..n {
        let grid = fields[i].grid().clone();
        let mut lower_margin = f64::INFINITY;
        let mut upper_margin = f64::INFINITY;
        let mut strict = true;
        for k in 0..fields[i].values().len() {
            let u = fields[i].values()[k];
            let lo = pair.lowers[i].values()[k];
            let hi = pair.uppers[i].values()[k];
            lower_margin = lower_margin.min(u - lo);
            upper_margin = upper_margin.min(hi - u);
            if grid.is_deep_interior(k) && (u - lo <= 0.0 || hi - u <= 0.0) {
                strict = false;
            }
        }
        cert.within_bounds
            .push(lower_margin >= -slack && upper_margin >= -slack);
        cert.strict_interior.push(strict);
        cert.lower_margin.push(lower_margin);
        cert.upper_margin.push(upper_margin);
    }
    cert
}

/// Outcome of the standalone extinction check for one species.
#[derive(Debug, Clone)]
pub struct DecayCheck {
    /// True when the sup norm fell below the threshold within the budget.
    pub decayed: bool,
    pub final_sup: f64,
    pub iterations: usize,
    pub final_field: ScalarField,
}

/// Iterate the single-species scheme (competitors frozen at zero) from the
/// constant capacity and watch the sup norm. When g_i(0,...,0) <= lambda1
/// the iterates decay toward zero, witnessing nonexistence.
pub fn decay_check(
    grid: &Grid,
    model: &GrowthModel,
    species: usize,
    threshold: f64,
    tol: f64,
    max_iter: usize,
) -> Result<DecayCheck> {
    let n = model.species_count();
    let section = model.section(species, &vec![0.0; n]);
    let shift = model.monotone_shift(species);
    let op = LinearOperator::new(grid, shift)?;
    let inner_tol = crate::logistic::inner_cg_tol_for(grid, shift, model.capacity(species), tol);

    let mut u = ScalarField::constant(grid, model.capacity(species));
    let mut iterations = 0;
    while iterations < max_iter {
        let mut rhs = u.clone();
        for v in rhs.values_mut() {
            *v = shift * *v + *v * section.eval(&[*v])?;
        }
        let next = solve_spd_from(&op, &rhs, &u, inner_tol)?;
        let viol = next.max_excess_over(&u);
        if viol > MONOTONE_SLACK {
            return Err(Error::MonotonicityBroken {
                direction: "decay (non-increasing)",
                iteration: iterations,
                violation: viol,
                shift,
            });
        }
        u = next;
        iterations += 1;
        if u.sup_norm() <= threshold {
            return Ok(DecayCheck {
                decayed: true,
                final_sup: u.sup_norm(),
                iterations,
                final_field: u,
            });
        }
    }
    Ok(DecayCheck {
        decayed: false,
        final_sup: u.sup_norm(),
        iterations,
        final_field: u,
    })
}

fn tuple_gap(over: &[ScalarField], under: &[ScalarField]) -> f64 {
    over.iter()
        .zip(under)
        .fold(0.0f64, |m, (o, u)| m.max(o.sup_distance(u)))
}

fn midpoints(over: &[ScalarField], under: &[ScalarField]) -> Vec<ScalarField> {
    over.iter()
        .zip(under)
        .map(|(o, u)| ScalarField::midpoint(o, u))
        .collect()
}
