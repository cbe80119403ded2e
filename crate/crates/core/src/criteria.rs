//! Algebraically computable criteria for existence, nonexistence, and
//! uniqueness of coexistence states, assembled into a serializable report.
//!
//! All criteria are evaluated against the *discrete* principal eigenvalue of
//! the supplied grid, and every margin entering a verdict is stored, so a
//! report can be re-derived and re-checked after grid refinement. The theta
//! ratios entering the uniqueness inequalities are taken as suprema over
//! interior nodes: if the inequality holds with the sup ratios it holds
//! pointwise, so sufficiency is preserved.

use crate::coexist::{solve_coexistence, solve_coexistence_from, CoexistencePair};
use crate::eigen::EigenResult;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::growth::{GrowthModel, SamplingResolution};
use serde::Serialize;

/// Smallest admissible theta value when forming ratios of fields that all
/// vanish on the boundary.
const RATIO_FLOOR: f64 = 1e-14;

/// One species' contribution to a criterion: the tested value, its margin
/// against lambda1, and whether the inequality holds.
#[derive(Debug, Clone, Serialize)]
pub struct SpeciesMargin {
    pub species: usize,
    pub value: f64,
    pub margin: f64,
    pub satisfied: bool,
}

/// Two-species uniqueness inequality
/// 4 inf(-g_u) inf(-h_v) >= R1 (sup g_v)^2 + R2 (sup h_u)^2 + 2 (sup g_v)(sup h_u).
#[derive(Debug, Clone, Serialize)]
pub struct Uniqueness2 {
    pub lhs: f64,
    pub rhs: f64,
    /// sup over interior nodes of theta-upper_1 / theta-lower_2.
    pub r1: f64,
    /// sup over interior nodes of theta-upper_2 / theta-lower_1.
    pub r2: f64,
    pub satisfied: bool,
}

/// N-species uniqueness: per species i,
/// 2 inf(-dg_i/dx_i) > sum_{j != i} (sup(-dg_i/dx_j) + K sup(-dg_j/dx_i)).
#[derive(Debug, Clone, Serialize)]
pub struct UniquenessN {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// K = sup over interior nodes and ordered pairs i != j of
    /// theta-upper_j / theta-lower_i.
    pub k: f64,
    pub satisfied_per_species: Vec<bool>,
    pub satisfied: bool,
}

/// Grid metadata carried by the report so criteria can be re-checked after
/// refinement.
#[derive(Debug, Clone, Serialize)]
pub struct GridMeta {
    pub dimension: usize,
    pub lengths: Vec<f64>,
    pub interior_counts: Vec<usize>,
    pub spacings: Vec<f64>,
}

impl GridMeta {
    pub fn from_grid(grid: &Grid) -> Self {
        GridMeta {
            dimension: grid.dimension(),
            lengths: grid.lengths().to_vec(),
            interior_counts: grid.interior_counts().to_vec(),
            spacings: (0..grid.dimension()).map(|a| grid.spacing(a)).collect(),
        }
    }
}

/// Machine-readable criterion report. The serialized key set is frozen:
/// `{lambda1, existence, nonexistence, uniqueness_2sp, uniqueness_Nsp,
/// grid, sampling}`. The uniqueness sections are `null` when no pair could
/// be built (existence fails) or, for the two-species form, when N != 2.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub lambda1: f64,
    pub existence: Vec<SpeciesMargin>,
    pub nonexistence: Vec<SpeciesMargin>,
    pub uniqueness_2sp: Option<Uniqueness2>,
    #[serde(rename = "uniqueness_Nsp")]
    pub uniqueness_nsp: Option<UniquenessN>,
    pub grid: GridMeta,
    pub sampling: SamplingResolution,
}

impl CriterionReport {
    /// All existence margins strictly positive.
    pub fn existence_verdict(&self) -> bool {
        self.existence.iter().all(|e| e.satisfied)
    }

    /// Some species already extinct by the eigenvalue comparison.
    pub fn nonexistence_verdict(&self) -> bool {
        self.nonexistence.iter().any(|e| e.satisfied)
    }
}

/// Existence margins: g_i at the capacity point with a zero in slot i must
/// exceed lambda1, strictly, for every species.
pub fn check_existence(model: &GrowthModel, lambda1: f64) -> Result<Vec<SpeciesMargin>> {
    let n = model.species_count();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let point = model.capacity_point_without(i);
        let value = model.growth(i).eval(&point)?;
        let margin = value - lambda1;
        out.push(SpeciesMargin {
            species: i,
            value,
            margin,
            satisfied: margin > 0.0,
        });
    }
    Ok(out)
}

/// Nonexistence margins: species i is certified extinct when
/// g_i(0, ..., 0) <= lambda1 (non-strict).
pub fn check_nonexistence(model: &GrowthModel, lambda1: f64) -> Result<Vec<SpeciesMargin>> {
    let n = model.species_count();
    let origin = vec![0.0; n];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let value = model.growth(i).eval(&origin)?;
        let margin = lambda1 - value;
        out.push(SpeciesMargin {
            species: i,
            value,
            margin,
            satisfied: value <= lambda1,
        });
    }
    Ok(out)
}

/// Two-species uniqueness check from a built pair.
pub fn check_uniqueness_2sp(model: &GrowthModel, pair: &CoexistencePair) -> Result<Uniqueness2> {
    assert_eq!(model.species_count(), 2, "two-species criterion");
    let r1 = sup_ratio(&pair.uppers[0], &pair.lowers[1])?;
    let r2 = sup_ratio(&pair.uppers[1], &pair.lowers[0])?;
    let (_, sup_gu) = model.partial_bounds(0, 0);
    let (_, sup_hv) = model.partial_bounds(1, 1);
    let (_, sup_gv) = model.partial_bounds(0, 1);
    let (_, sup_hu) = model.partial_bounds(1, 0);
    Ok(uniqueness_2sp_from_bounds(
        -sup_gu, -sup_hv, sup_gv, sup_hu, r1, r2,
    ))
}

/// The bare two-species inequality from its ingredients:
/// `inf_neg_gu` = inf(-dg/du), `inf_neg_hv` = inf(-dh/dv), and the signed
/// suprema of the cross partials.
pub fn uniqueness_2sp_from_bounds(
    inf_neg_gu: f64,
    inf_neg_hv: f64,
    sup_gv: f64,
    sup_hu: f64,
    r1: f64,
    r2: f64,
) -> Uniqueness2 {
    let lhs = 4.0 * inf_neg_gu * inf_neg_hv;
    let rhs = r1 * sup_gv * sup_gv + r2 * sup_hu * sup_hu + 2.0 * sup_gv * sup_hu;
    Uniqueness2 {
        lhs,
        rhs,
        r1,
        r2,
        satisfied: lhs >= rhs,
    }
}

/// N-species uniqueness check from a built pair.
pub fn check_uniqueness_nsp(model: &GrowthModel, pair: &CoexistencePair) -> Result<UniquenessN> {
    let n = model.species_count();
    let mut k = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if j != i {
                k = k.max(sup_ratio(&pair.uppers[j], &pair.lowers[i])?);
            }
        }
    }
    let mut inf_neg_diag = Vec::with_capacity(n);
    let mut sup_neg = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        let (_, sup_d) = model.partial_bounds(i, i);
        inf_neg_diag.push(-sup_d);
        for j in 0..n {
            let (lo, _) = model.partial_bounds(i, j);
            sup_neg[i][j] = -lo;
        }
    }
    Ok(uniqueness_nsp_from_bounds(&inf_neg_diag, &sup_neg, k))
}

/// The bare N-species inequality from its ingredients: `inf_neg_diag[i]` =
/// inf(-dg_i/dx_i), `sup_neg[i][j]` = sup(-dg_i/dx_j).
pub fn uniqueness_nsp_from_bounds(
    inf_neg_diag: &[f64],
    sup_neg: &[Vec<f64>],
    k: f64,
) -> UniquenessN {
    let n = inf_neg_diag.len();
    let mut lhs = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    let mut per = Vec::with_capacity(n);
    for i in 0..n {
        let l = 2.0 * inf_neg_diag[i];
        let r: f64 = (0..n)
            .filter(|j| *j != i)
            .map(|j| sup_neg[i][j] + k * sup_neg[j][i])
            .sum();
        per.push(l > r);
        lhs.push(l);
        rhs.push(r);
    }
    let satisfied = per.iter().all(|b| *b);
    UniquenessN {
        lhs,
        rhs,
        k,
        satisfied_per_species: per,
        satisfied,
    }
}

/// sup over interior nodes of numerator/denominator; errors when a
/// denominator falls below 1e-14 (the grid resolves the boundary layer too
/// coarsely to form the ratio).
fn sup_ratio(num: &ScalarField, den: &ScalarField) -> Result<f64> {
    let mut sup = 0.0f64;
    for (k, (a, b)) in num.values().iter().zip(den.values()).enumerate() {
        if *b < RATIO_FLOOR {
            return Err(Error::RatioDegenerate { node: k, value: *b });
        }
        sup = sup.max(a / b);
    }
    Ok(sup)
}

/// Evaluate every criterion against the discrete eigenvalue and assemble the
/// report. `pair` enables the uniqueness sections; without it they are null.
pub fn assemble_report(
    grid: &Grid,
    model: &GrowthModel,
    eig: &EigenResult,
    pair: Option<&CoexistencePair>,
) -> Result<CriterionReport> {
    let lambda1 = eig.lambda1;
    let existence = check_existence(model, lambda1)?;
    let nonexistence = check_nonexistence(model, lambda1)?;
    let uniqueness_2sp = match pair {
        Some(p) if model.species_count() == 2 => Some(check_uniqueness_2sp(model, p)?),
        _ => None,
    };
    let uniqueness_nsp = match pair {
        Some(p) => Some(check_uniqueness_nsp(model, p)?),
        None => None,
    };
    Ok(CriterionReport {
        lambda1,
        existence,
        nonexistence,
        uniqueness_2sp,
        uniqueness_nsp,
        grid: GridMeta::from_grid(grid),
        sampling: model.validation().resolution.clone(),
    })
}

/// Empirical uniqueness evidence from multiple starts.
#[derive(Debug, Clone)]
pub struct EmpiricalUniqueness {
    /// maximal/minimal gap of the canonical run plus the spread of the
    /// perturbed-start solutions.
    pub gap: f64,
    pub base_gap: f64,
    pub spread: f64,
    /// gap <= 10 tol.
    pub witnessed: bool,
}

/// Run the interleaved scheme from the pair and from three interior starts
/// (the convex mixtures t = 1/4, 1/2, 3/4 of lowers and uppers) and measure
/// how far the resulting states spread.
pub fn verify_uniqueness_empirically(
    grid: &Grid,
    model: &GrowthModel,
    pair: &CoexistencePair,
    tol: f64,
) -> Result<EmpiricalUniqueness> {
    let base = solve_coexistence(grid, model, pair, tol)?;
    let mut solutions: Vec<Vec<ScalarField>> = vec![base.fields.clone()];
    for t in [0.25, 0.5, 0.75] {
        let start: Vec<ScalarField> = pair
            .lowers
            .iter()
            .zip(&pair.uppers)
            .map(|(lo, hi)| {
                let mut s = lo.clone();
                s.scale(1.0 - t);
                s.add_scaled(t, hi);
                s
            })
            .collect();
        let run = solve_coexistence_from(
            grid,
            model,
            pair,
            start.clone(),
            start,
            tol,
            crate::coexist::DEFAULT_MAX_OUTER,
            false,
        )?;
        solutions.push(run.fields);
    }
    let mut spread = 0.0f64;
    for a in 0..solutions.len() {
        for b in a + 1..solutions.len() {
            for i in 0..model.species_count() {
                spread = spread.max(solutions[a][i].sup_distance(&solutions[b][i]));
            }
        }
    }
    let gap = base.maximal_minimal_gap + spread;
    Ok(EmpiricalUniqueness {
        gap,
        base_gap: base.maximal_minimal_gap,
        spread,
        witnessed: gap <= 10.0 * tol,
    })
}
