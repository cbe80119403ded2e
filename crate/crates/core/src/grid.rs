//! Rectangular-domain discretization: grids, scalar fields, the discrete
//! Dirichlet Laplacian, and conjugate-gradient solves of shifted systems.
//!
//! Boundary nodes are implicit: every field vanishes on the boundary, so the
//! 3-point (1D) / 5-point (2D) stencil reads zero ghost values there.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Discretized open box in 1 or 2 dimensions, interior nodes only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lengths: Vec<f64>,
    interior_counts: Vec<usize>,
}

impl Grid {
    /// Interval (0, length) with `n` interior nodes.
    pub fn line(length: f64, n: usize) -> Result<Self> {
        Self::new(&[length], &[n])
    }

    /// Rectangle (0, lx) x (0, ly) with `nx * ny` interior nodes.
    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(&[lx, ly], &[nx, ny])
    }

    pub fn new(lengths: &[f64], interior_counts: &[usize]) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {}",
                lengths.len()
            )));
        }
        if lengths.len() != interior_counts.len() {
            return Err(Error::InvalidGrid(
                "lengths and interior_counts must have the same dimension".into(),
            ));
        }
        for &l in lengths {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("length {l} must be positive")));
            }
        }
        for &n in interior_counts {
            if n < 3 {
                return Err(Error::InvalidGrid(format!(
                    "interior count {n} must be at least 3"
                )));
            }
        }
        Ok(Grid {
            lengths: lengths.to_vec(),
            interior_counts: interior_counts.to_vec(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn interior_counts(&self) -> &[usize] {
        &self.interior_counts
    }

    /// Total number of interior nodes.
    pub fn node_count(&self) -> usize {
        self.interior_counts.iter().product()
    }

    /// Mesh spacing along `axis`; boundary sits half outside the first and
    /// last interior node, so spacing = length / (count + 1).
    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / (self.interior_counts[axis] + 1) as f64
    }

    /// Volume of one grid cell (h in 1D, hx * hy in 2D).
    pub fn cell_volume(&self) -> f64 {
        (0..self.dimension()).map(|a| self.spacing(a)).product()
    }

    /// Coordinates of interior node `idx` (x fastest in 2D).
    pub fn coords(&self, idx: usize) -> Vec<f64> {
        match self.dimension() {
            1 => vec![(idx + 1) as f64 * self.spacing(0)],
            _ => {
                let nx = self.interior_counts[0];
                let ix = idx % nx;
                let iy = idx / nx;
                vec![
                    (ix + 1) as f64 * self.spacing(0),
                    (iy + 1) as f64 * self.spacing(1),
                ]
            }
        }
    }

    /// Smallest eigenvalue of the discrete Dirichlet Laplacian -Delta_h on
    /// this grid. Exact for the tensor-product stencil:
    /// sum over axes of (4/h^2) sin^2(pi h / (2 L)).
    pub fn laplacian_min_eig(&self) -> f64 {
        (0..self.dimension())
            .map(|a| {
                let h = self.spacing(a);
                let s = (std::f64::consts::PI * h / (2.0 * self.lengths[a])).sin();
                4.0 / (h * h) * s * s
            })
            .sum()
    }

    /// True when node `idx` lies at distance >= 2h from the boundary along
    /// every axis (the region where strict sandwich inequalities are checked).
    pub fn is_deep_interior(&self, idx: usize) -> bool {
        match self.dimension() {
            1 => {
                let n = self.interior_counts[0];
                idx >= 1 && idx + 2 <= n
            }
            _ => {
                let nx = self.interior_counts[0];
                let ny = self.interior_counts[1];
                let ix = idx % nx;
                let iy = idx / nx;
                ix >= 1 && ix + 2 <= nx && iy >= 1 && iy + 2 <= ny
            }
        }
    }
}

/// Real-valued function on the interior nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![c; grid.node_count()],
        }
    }

    /// Sample `f` at every interior node.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|i| f(&grid.coords(i))).collect();
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidField(format!(
                "{} values for a grid with {} interior nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value {v}")));
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Volume-weighted L2 norm: sqrt(sum v^2 * cell_volume).
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// self += s * other
    pub fn add_scaled(&mut self, s: f64, other: &ScalarField) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// Largest positive excess of `self` over `other` (0 when self <= other
    /// everywhere).
    pub fn max_excess_over(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max(a - b))
    }

    pub fn sup_distance(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Pointwise midpoint of two fields.
    pub fn midpoint(a: &ScalarField, b: &ScalarField) -> ScalarField {
        let values = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| 0.5 * (x + y))
            .collect();
        ScalarField {
            grid: a.grid.clone(),
            values,
        }
    }
}

/// Volume-weighted inner product of two fields on the same grid.
pub fn dot(f: &ScalarField, g: &ScalarField) -> f64 {
    f.values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * f.grid.cell_volume()
}

/// (sup norm, volume-weighted L2 norm) of a field.
pub fn norms(f: &ScalarField) -> (f64, f64) {
    (f.sup_norm(), f.l2_norm())
}

/// Discrete Dirichlet Laplacian of `f`: central 3-point / 5-point stencil
/// with zero ghost values outside the boundary.
pub fn apply_laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let v = f.values();
    let mut out = vec![0.0; v.len()];
    match grid.dimension() {
        1 => {
            let n = grid.interior_counts()[0];
            let inv_h2 = 1.0 / (grid.spacing(0) * grid.spacing(0));
            for i in 0..n {
                let left = if i > 0 { v[i - 1] } else { 0.0 };
                let right = if i + 1 < n { v[i + 1] } else { 0.0 };
                out[i] = (left - 2.0 * v[i] + right) * inv_h2;
            }
        }
        _ => {
            let nx = grid.interior_counts()[0];
            let ny = grid.interior_counts()[1];
            let inv_hx2 = 1.0 / (grid.spacing(0) * grid.spacing(0));
            let inv_hy2 = 1.0 / (grid.spacing(1) * grid.spacing(1));
            for iy in 0..ny {
                for ix in 0..nx {
                    let k = iy * nx + ix;
                    let left = if ix > 0 { v[k - 1] } else { 0.0 };
                    let right = if ix + 1 < nx { v[k + 1] } else { 0.0 };
                    let down = if iy > 0 { v[k - nx] } else { 0.0 };
                    let up = if iy + 1 < ny { v[k + nx] } else { 0.0 };
                    out[k] = (left - 2.0 * v[k] + right) * inv_hx2
                        + (down - 2.0 * v[k] + up) * inv_hy2;
                }
            }
        }
    }
    ScalarField {
        grid: grid.clone(),
        values: out,
    }
}

/// Symmetric positive definite operator -Delta_h + M I (+ optional
/// nonnegative-shifted diagonal potential).
#[derive(Debug, Clone)]
pub struct LinearOperator {
    grid: Grid,
    shift: f64,
    potential: Option<ScalarField>,
}

impl LinearOperator {
    /// -Delta_h + shift * I with shift >= 0.
    pub fn new(grid: &Grid, shift: f64) -> Result<Self> {
        if !(shift.is_finite() && shift >= 0.0) {
            return Err(Error::InvalidGrid(format!(
                "operator shift {shift} must be nonnegative"
            )));
        }
        Ok(LinearOperator {
            grid: grid.clone(),
            shift,
            potential: None,
        })
    }

    /// -Delta_h + shift * I + diag(p). Positive definiteness requires
    /// shift + min(p) >= 0; -Delta_h itself is already positive definite.
    pub fn with_potential(grid: &Grid, shift: f64, potential: ScalarField) -> Result<Self> {
        if potential.grid() != grid {
            return Err(Error::GridMismatch);
        }
        if !(shift.is_finite() && shift + potential.min() >= 0.0) {
            return Err(Error::InvalidGrid(format!(
                "shift {shift} plus potential minimum {} must be nonnegative",
                potential.min()
            )));
        }
        Ok(LinearOperator {
            grid: grid.clone(),
            shift,
            potential: Some(potential),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn apply(&self, f: &ScalarField) -> ScalarField {
        let mut out = apply_laplacian(f);
        for (o, v) in out.values.iter_mut().zip(f.values()) {
            *o = -*o + self.shift * v;
        }
        if let Some(p) = &self.potential {
            for (o, (v, pv)) in out.values.iter_mut().zip(f.values().iter().zip(p.values())) {
                *o += pv * v;
            }
        }
        out
    }

    /// Lower bound on the smallest eigenvalue (exact when the potential is
    /// constant): lambda_min(-Delta_h) + shift + min(potential).
    pub fn min_eig_lower_bound(&self) -> f64 {
        self.grid.laplacian_min_eig()
            + self.shift
            + self.potential.as_ref().map_or(0.0, |p| p.min())
    }

    fn diagonal(&self) -> Vec<f64> {
        let base: f64 = (0..self.grid.dimension())
            .map(|a| 2.0 / (self.grid.spacing(a) * self.grid.spacing(a)))
            .sum();
        match &self.potential {
            None => vec![base + self.shift; self.grid.node_count()],
            Some(p) => p.values().iter().map(|pv| base + self.shift + pv).collect(),
        }
    }
}

/// Default cap on CG iterations: 10 x node count.
pub fn default_cg_max_iter(grid: &Grid) -> usize {
    10 * grid.node_count()
}

/// Solve op * w = rhs by preconditioned conjugate gradients from a zero
/// initial guess, to relative residual `tol`.
pub fn solve_spd(op: &LinearOperator, rhs: &ScalarField, tol: f64) -> Result<ScalarField> {
    solve_spd_from(op, rhs, &ScalarField::zeros(op.grid()), tol)
}

/// Same as [`solve_spd`] but warm-started from `x0`.
pub fn solve_spd_from(
    op: &LinearOperator,
    rhs: &ScalarField,
    x0: &ScalarField,
    tol: f64,
) -> Result<ScalarField> {
    if rhs.grid() != op.grid() || x0.grid() != op.grid() {
        return Err(Error::GridMismatch);
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidField(format!("tolerance {tol} must be positive")));
    }
    let n = rhs.values().len();
    let b_norm = rhs.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Ok(ScalarField::zeros(op.grid()));
    }
    let target = tol * b_norm;
    let inv_diag: Vec<f64> = op.diagonal().iter().map(|d| 1.0 / d).collect();
    let max_iter = default_cg_max_iter(op.grid());

    let mut x = x0.clone();
    let ax = op.apply(&x);
    let mut r: Vec<f64> = rhs
        .values()
        .iter()
        .zip(ax.values())
        .map(|(b, a)| b - a)
        .collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut iterations = 0;
    while r_norm > target {
        if iterations >= max_iter {
            return Err(Error::CgDidNotConverge {
                iterations,
                relative_residual: r_norm / b_norm,
                requested: tol,
            });
        }
        let p_field = ScalarField {
            grid: op.grid().clone(),
            values: p.clone(),
        };
        let ap = op.apply(&p_field);
        let pap: f64 = p.iter().zip(ap.values()).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            // Round-off exhausted: the direction carries no energy left.
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x.values[i] += alpha * p[i];
            r[i] -= alpha * ap.values()[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rz = rz_new;
        r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        iterations += 1;
    }

    if r_norm > target {
        // pap <= 0 exit above; recompute the true residual before giving up.
        let ax = op.apply(&x);
        let true_norm = rhs
            .values()
            .iter()
            .zip(ax.values())
            .map(|(b, a)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt();
        if true_norm > target {
            return Err(Error::CgDidNotConverge {
                iterations,
                relative_residual: true_norm / b_norm,
                requested: tol,
            });
        }
    }
    Ok(x)
}
