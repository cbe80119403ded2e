//! Validated growth models: monotonicity of the interaction, carrying
//! capacities, and sampled bounds on partial derivatives over the capacity
//! box.
//!
//! A model holds N growth rates g_i : R^N -> R with their exact symbolic
//! partials. Validation checks the competitive sign pattern
//! (every dg_i/du_j < 0) on the box prod [0, c_i] and the logistic tail
//! (g_i non-positive past its capacity along its own axis). Suprema and
//! infima of partials are obtained by dense sampling: exact at the corners
//! for growth laws affine in each variable, and recorded with their
//! resolution so reports remain reproducible.

use crate::error::{Error, Result};
use crate::expr::ExprAst;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Points per axis for dense box sampling (N <= 3 axes sampled jointly).
pub const POINTS_PER_AXIS: usize = 101;
/// Latin-hypercube sample count used when N > 3.
pub const LHS_SAMPLES: usize = 100_000;
/// Points used on one-dimensional sections (shift bounds, tail checks).
const SECTION_POINTS: usize = 1001;
/// Capacity search gives up past this density.
const CAPACITY_CAP: f64 = 1e12;
/// Bisection tolerance for capacity roots.
const CAPACITY_TOL: f64 = 1e-10;
/// Slack when requiring the growth tail to be non-positive; the capacity
/// root itself is only known to CAPACITY_TOL.
const TAIL_SLACK: f64 = 1e-9;

/// How sup/inf over the box were estimated. Monotonicity is checked on the
/// capacity box only (the a-priori bounds confine every solution there), so
/// the sampled region is recorded alongside the resolution.
#[derive(Debug, Clone, Serialize)]
pub struct SamplingResolution {
    pub region: &'static str,
    pub points_per_axis: Option<usize>,
    pub latin_hypercube_samples: Option<usize>,
    pub seed: u64,
}

/// Evidence recorded while validating the model.
#[derive(Debug, Clone)]
pub struct Validation {
    /// Largest sampled value of any dg_i/du_j over the box (valid: < 0).
    pub worst_partial: f64,
    /// Largest sampled value of g_i(0,..,s,..,0) for s in [c_i, 2 c_i]
    /// (valid: <= ~0).
    pub worst_tail: f64,
    /// Species whose isolated growth rate is non-positive already at zero
    /// density (capacity 0; the model is trivial in that slot).
    pub trivial: Vec<bool>,
    pub resolution: SamplingResolution,
}

/// N growth rates with partials, capacities, and sampled box bounds.
#[derive(Debug, Clone)]
pub struct GrowthModel {
    n: usize,
    growth: Vec<ExprAst>,
    partials: Vec<Vec<ExprAst>>,
    capacities: Vec<f64>,
    partial_ranges: Vec<Vec<(f64, f64)>>,
    growth_sup_abs: Vec<f64>,
    shift_bounds: Vec<f64>,
    validation: Validation,
}

impl GrowthModel {
    pub fn species_count(&self) -> usize {
        self.n
    }

    pub fn growth(&self, i: usize) -> &ExprAst {
        &self.growth[i]
    }

    pub fn partial(&self, i: usize, j: usize) -> &ExprAst {
        &self.partials[i][j]
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    pub fn capacity(&self, i: usize) -> f64 {
        self.capacities[i]
    }

    /// Sampled (inf, sup) of dg_i/du_j over the capacity box.
    pub fn partial_bounds(&self, i: usize, j: usize) -> (f64, f64) {
        self.partial_ranges[i][j]
    }

    /// Sampled sup of |g_i| over the box (slack scale for pair verification).
    pub fn growth_sup_abs(&self, i: usize) -> f64 {
        self.growth_sup_abs[i]
    }

    /// Shift making the monotone iteration map order-preserving for species
    /// i: sampled sup over the box of |d(s g_i)/ds| = |g_i + u_i dg_i/du_i|,
    /// plus a unit margin against sampling error.
    pub fn monotone_shift(&self, i: usize) -> f64 {
        self.shift_bounds[i] + 1.0
    }

    pub fn validation(&self) -> &Validation {
        &self.validation
    }

    /// g_i as a one-variable section in its own density, competitors frozen
    /// at `frozen` (length N; entry i is ignored).
    pub fn section(&self, i: usize, frozen: &[f64]) -> ExprAst {
        self.growth[i].section(i, frozen)
    }

    /// Point (c_1, ..., 0 at slot i, ..., c_N) entering the existence
    /// criterion.
    pub fn capacity_point_without(&self, i: usize) -> Vec<f64> {
        let mut p = self.capacities.clone();
        p[i] = 0.0;
        p
    }
}

/// Build and validate a growth model from N parsed growth rates.
///
/// Capacities are computed first (bracketing + bisection along each species'
/// own axis), then all N^2 partials are differentiated symbolically and the
/// competitive sign pattern is checked on a sampled box. Any violation is a
/// structured error carrying the condition name, the species pair, and a
/// witness point.
pub fn build(asts: Vec<ExprAst>) -> Result<GrowthModel> {
    let n = asts.len();
    if n < 2 {
        return Err(Error::InvalidField(format!(
            "a growth model needs at least 2 species, got {n}"
        )));
    }
    for (i, ast) in asts.iter().enumerate() {
        if let Some(m) = ast.max_var() {
            if m >= n {
                return Err(Error::InvalidField(format!(
                    "growth rate {i} references variable u{} but only {n} species are declared",
                    m + 1
                )));
            }
        }
    }

    let mut capacities = Vec::with_capacity(n);
    let mut trivial = Vec::with_capacity(n);
    for (i, ast) in asts.iter().enumerate() {
        let c = carrying_capacity(ast, n, i)?;
        trivial.push(c == 0.0);
        capacities.push(c);
    }

    let partials: Vec<Vec<ExprAst>> = asts
        .iter()
        .map(|g| (0..n).map(|j| g.differentiate(j)).collect())
        .collect();

    let cond_mono = if n == 2 { "G1" } else { "M1" };
    let cond_tail = if n == 2 { "G2" } else { "M2" };

    // One pass over the sampled box: validate the sign pattern and collect
    // every range the criteria evaluators will need.
    let samples = box_samples(&capacities);
    let resolution = resolution_for(n);
    let mut partial_ranges = vec![vec![(f64::INFINITY, f64::NEG_INFINITY); n]; n];
    let mut growth_sup_abs = vec![0.0f64; n];
    let mut shift_bounds = vec![0.0f64; n];
    let mut worst_partial = f64::NEG_INFINITY;
    for point in &samples {
        for i in 0..n {
            let g_val = asts[i].eval(point)?;
            growth_sup_abs[i] = growth_sup_abs[i].max(g_val.abs());
            for j in 0..n {
                let d = partials[i][j].eval(point)?;
                if d >= 0.0 {
                    return Err(Error::MonotonicityViolated {
                        condition: cond_mono,
                        i,
                        j,
                        point: point.clone(),
                        value: d,
                    });
                }
                worst_partial = worst_partial.max(d);
                let (lo, hi) = partial_ranges[i][j];
                partial_ranges[i][j] = (lo.min(d), hi.max(d));
                if j == i {
                    shift_bounds[i] = shift_bounds[i].max((g_val + point[i] * d).abs());
                }
            }
        }
    }

    // Logistic tail: along its own axis the growth rate must stay
    // non-positive past the capacity. Sampled on [c, 2c]; together with the
    // negative partial this extends to all larger densities.
    let mut worst_tail = f64::NEG_INFINITY;
    for i in 0..n {
        let c = capacities[i];
        if c == 0.0 {
            continue;
        }
        let f = asts[i].section(i, &vec![0.0; n]);
        let df = f.differentiate(0);
        for k in 0..SECTION_POINTS {
            let s = c + c * k as f64 / (SECTION_POINTS - 1) as f64;
            let val = f.eval(&[s])?;
            worst_tail = worst_tail.max(val);
            if val > TAIL_SLACK {
                return Err(Error::LogisticPatternViolated {
                    condition: cond_tail,
                    i,
                    density: s,
                    value: val,
                });
            }
            let slope = df.eval(&[s])?;
            if slope >= 0.0 {
                return Err(Error::MonotonicityViolated {
                    condition: cond_mono,
                    i,
                    j: i,
                    point: vec![s],
                    value: slope,
                });
            }
        }
    }

    Ok(GrowthModel {
        n,
        growth: asts,
        partials,
        capacities,
        partial_ranges,
        growth_sup_abs,
        shift_bounds,
        validation: Validation {
            worst_partial,
            worst_tail: if worst_tail.is_finite() { worst_tail } else { 0.0 },
            trivial,
            resolution,
        },
    })
}

/// Smallest c_i such that g_i(0, ..., u_i, ..., 0) <= 0 for all u_i >= c_i.
///
/// Returns 0 when the isolated growth rate is already non-positive at zero
/// density (a trivial species, reported rather than rejected). Errors when
/// no sign change occurs below 1e12.
pub fn carrying_capacity(ast: &ExprAst, num_vars: usize, i: usize) -> Result<f64> {
    let f = ast.section(i, &vec![0.0; num_vars]);
    section_capacity(&f, i)
}

/// Capacity of a one-variable growth section.
pub fn section_capacity(f: &ExprAst, species: usize) -> Result<f64> {
    if f.eval(&[0.0])? <= 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while f.eval(&[hi])? > 0.0 {
        hi *= 2.0;
        if hi > CAPACITY_CAP {
            return Err(Error::UnboundedGrowth { i: species });
        }
    }
    let mut lo = hi / 2.0;
    if hi == 1.0 {
        lo = 0.0;
    }
    while hi - lo > CAPACITY_TOL {
        let mid = 0.5 * (lo + hi);
        if f.eval(&[mid])? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Checked one-variable growth section for the logistic solver: value at
/// zero, capacity, and a sampled strict-decrease check on [0, 2c].
pub struct SectionCheck {
    pub f0: f64,
    pub capacity: f64,
}

pub fn validate_section(f: &ExprAst) -> Result<SectionCheck> {
    let f0 = f.eval(&[0.0])?;
    let capacity = section_capacity(f, 0)?;
    if f0 > 0.0 {
        let df = f.differentiate(0);
        let span = 2.0 * capacity;
        for k in 0..SECTION_POINTS {
            let s = span * k as f64 / (SECTION_POINTS - 1) as f64;
            let slope = df.eval(&[s])?;
            if slope >= 0.0 {
                return Err(Error::MonotonicityViolated {
                    condition: "decreasing f",
                    i: 0,
                    j: 0,
                    point: vec![s],
                    value: slope,
                });
            }
        }
    }
    Ok(SectionCheck { f0, capacity })
}

fn resolution_for(n: usize) -> SamplingResolution {
    if n <= 3 {
        SamplingResolution {
            region: "capacity-box",
            points_per_axis: Some(POINTS_PER_AXIS),
            latin_hypercube_samples: None,
            seed: BOX_SAMPLE_SEED,
        }
    } else {
        SamplingResolution {
            region: "capacity-box",
            points_per_axis: None,
            latin_hypercube_samples: Some(LHS_SAMPLES),
            seed: BOX_SAMPLE_SEED,
        }
    }
}

const BOX_SAMPLE_SEED: u64 = 0x5eed_0001;

/// Sample points of the box prod [0, c_i]: a dense tensor grid for up to
/// three axes, Latin-hypercube samples (fixed seed) beyond.
fn box_samples(capacities: &[f64]) -> Vec<Vec<f64>> {
    let n = capacities.len();
    if n <= 3 {
        let axes: Vec<Vec<f64>> = capacities
            .iter()
            .map(|&c| {
                if c == 0.0 {
                    vec![0.0]
                } else {
                    (0..POINTS_PER_AXIS)
                        .map(|k| c * k as f64 / (POINTS_PER_AXIS - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let total: usize = axes.iter().map(|a| a.len()).product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        loop {
            out.push((0..n).map(|a| axes[a][idx[a]]).collect());
            let mut axis = 0;
            loop {
                idx[axis] += 1;
                if idx[axis] < axes[axis].len() {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
                if axis == n {
                    return out;
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(BOX_SAMPLE_SEED);
        let mut strata: Vec<Vec<usize>> = (0..n)
            .map(|_| {
                let mut perm: Vec<usize> = (0..LHS_SAMPLES).collect();
                for k in (1..perm.len()).rev() {
                    perm.swap(k, rng.gen_range(0..=k));
                }
                perm
            })
            .collect();
        // Corners matter for affine rates; make sure the extremes appear.
        let mut out: Vec<Vec<f64>> = vec![vec![0.0; n], capacities.to_vec()];
        for s in 0..LHS_SAMPLES {
            out.push(
                (0..n)
                    .map(|a| {
                        let u: f64 = rng.gen();
                        capacities[a] * (strata[a][s] as f64 + u) / LHS_SAMPLES as f64
                    })
                    .collect(),
            );
        }
        strata.clear();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn symmetric_two_species() -> Vec<ExprAst> {
        vec![
            parse("15 - u - 0.1*v", 2).unwrap(),
            parse("15 - 0.1*u - v", 2).unwrap(),
        ]
    }

    #[test]
    fn builds_symmetric_lotka_volterra() {
        let model = build(symmetric_two_species()).unwrap();
        assert_eq!(model.species_count(), 2);
        assert!((model.capacity(0) - 15.0).abs() < 1e-9);
        assert!((model.capacity(1) - 15.0).abs() < 1e-9);
        assert!(model.validation().worst_partial < 0.0);
        assert!(!model.validation().trivial.iter().any(|t| *t));
    }

    #[test]
    fn rejects_cooperative_sign_with_witness() {
        let asts = vec![
            parse("15 - u + 0.1*v", 2).unwrap(),
            parse("15 - 0.1*u - v", 2).unwrap(),
        ];
        match build(asts).unwrap_err() {
            Error::MonotonicityViolated {
                condition,
                i,
                j,
                value,
                ..
            } => {
                assert_eq!(condition, "G1");
                assert_eq!((i, j), (0, 1));
                assert!((value - 0.1).abs() < 1e-12);
            }
            other => panic!("expected monotonicity violation, got {other}"),
        }
    }

    #[test]
    fn three_species_symmetric_model() {
        let asts = vec![
            parse("12 - u1 - 0.05*(u2 + u3)", 3).unwrap(),
            parse("12 - u2 - 0.05*(u1 + u3)", 3).unwrap(),
            parse("12 - u3 - 0.05*(u1 + u2)", 3).unwrap(),
        ];
        let model = build(asts).unwrap();
        for i in 0..3 {
            assert!((model.capacity(i) - 12.0).abs() < 1e-9);
            let (lo, hi) = model.partial_bounds(i, i);
            assert!((lo + 1.0).abs() < 1e-12 && (hi + 1.0).abs() < 1e-12);
            for j in 0..3 {
                if j != i {
                    let (lo, hi) = model.partial_bounds(i, j);
                    assert!((lo + 0.05).abs() < 1e-12 && (hi + 0.05).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn capacity_closed_forms() {
        // Linear root, within the bisection tolerance.
        let g = parse("15 - u - 0.1*v", 2).unwrap();
        assert!((carrying_capacity(&g, 2, 0).unwrap() - 15.0).abs() <= 1e-10);
        // Quadratic root sqrt(10).
        let g = parse("10 - u^2", 1).unwrap();
        assert!((carrying_capacity(&g, 1, 0).unwrap() - 10.0f64.sqrt()).abs() < 1e-8);
        // Never non-positive.
        let g = parse("1 + u", 1).unwrap();
        assert!(matches!(
            carrying_capacity(&g, 1, 0),
            Err(Error::UnboundedGrowth { i: 0 })
        ));
    }

    #[test]
    fn trivial_species_reported_not_rejected() {
        let g = parse("0 - u - v", 2).unwrap();
        assert_eq!(carrying_capacity(&g, 2, 0).unwrap(), 0.0);
    }

    #[test]
    fn partial_bounds_constant_and_bilinear() {
        let model = build(symmetric_two_species()).unwrap();
        let (lo, hi) = model.partial_bounds(0, 0);
        assert!((lo + 1.0).abs() < 1e-12 && (hi + 1.0).abs() < 1e-12);
        let (_, hi_v) = model.partial_bounds(0, 1);
        assert!((hi_v + 0.1).abs() < 1e-12);

        // Bilinear interaction: g_u = -1 - 0.1 v on [0,15]^2, so the bounds
        // sit at the corners: inf -2.5 at v = 15, sup -1 at v = 0. (The
        // plain -0.1*u*v coupling has g_v = 0 on the u = 0 edge and is
        // rejected by the strict sign check; keep g_v negative there.)
        let asts = vec![
            parse("15 - u - 0.1*(u + 0.5)*v", 2).unwrap(),
            parse("15 - 0.1*u - v", 2).unwrap(),
        ];
        let model = build(asts).unwrap();
        let (lo, hi) = model.partial_bounds(0, 0);
        assert!((lo + 2.5).abs() < 1e-9, "corner inf, got {lo}");
        assert!((hi + 1.0).abs() < 1e-12, "inf(-g_u) = 1 at v = 0, got {hi}");
    }

    #[test]
    fn monotone_shift_dominates_slope() {
        let model = build(symmetric_two_species()).unwrap();
        // |g + u g_u| = |15 - 2u - 0.1 v| peaks at 16.5 on the box.
        assert!((model.monotone_shift(0) - 17.5).abs() < 1e-9);
    }

    #[test]
    fn validate_section_accepts_decreasing_rejects_increasing() {
        let f = parse("12 - u", 1).unwrap();
        let check = validate_section(&f).unwrap();
        assert!((check.capacity - 12.0).abs() < 1e-9);
        assert_eq!(check.f0, 12.0);

        let f = parse("1 + u - u^2", 1).unwrap();
        assert!(validate_section(&f).is_err());
    }
}
