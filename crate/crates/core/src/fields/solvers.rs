//! Torsion and first-eigenpair solves on masked grids.

use serde::{Deserialize, Serialize};

use super::laplacian::{conjugate_gradient, dot, norm, MaskedLaplacian};
use crate::error::{Result, ShapeError};
use crate::geometry::{GridDomain, GridSpec};

/// Values on the full grid box, zero off the mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(spec: GridSpec) -> Self {
        let n = spec.len();
        Self {
            spec,
            values: vec![0.0; n],
        }
    }

    pub fn from_unknowns(spec: &GridSpec, op: &MaskedLaplacian, x: &[f64]) -> Self {
        let mut f = Self::zeros(spec.clone());
        for (k, &i) in op.cells().iter().enumerate() {
            f.values[i] = x[k];
        }
        f
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    /// `h^N Σ values`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.cell_volume()
    }

    /// Values on the occupied cells of `dom`, in index order.
    pub fn on_cells(&self, dom: &GridDomain) -> Vec<f64> {
        dom.occupied().map(|i| self.values[i]).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative residual target for linear solves and `|Δλ|/λ` target for the eigen loop.
    pub tol: f64,
    /// Linear-solve iteration cap; defaults to `50·cells_per_axis`.
    pub max_iter: Option<usize>,
    pub max_outer: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: None,
            max_outer: 1000,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    fn cap(&self, spec: &GridSpec) -> usize {
        self.max_iter
            .unwrap_or_else(|| MaskedLaplacian::default_max_iter(spec.cells_per_axis()))
    }

    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(ShapeError::Domain(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorsionSolution {
    pub w: ScalarField,
    /// `E = −½ h^N Σ w`.
    pub energy: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSolution {
    /// Normalized so that `h^N Σ u² = 1`, and non-negative.
    pub u: ScalarField,
    pub lambda1: f64,
    /// `‖Au − λu‖ / (λ‖u‖)`.
    pub residual_norm: f64,
    pub outer_iterations: usize,
}

pub fn solve_torsion(dom: &GridDomain, tol: f64) -> Result<TorsionSolution> {
    solve_torsion_with(dom, &SolverOptions::with_tol(tol))
}

/// Solves `−Δw = 1` with zero boundary values. Disconnected domains are
/// allowed; the components decouple.
pub fn solve_torsion_with(dom: &GridDomain, opts: &SolverOptions) -> Result<TorsionSolution> {
    opts.check()?;
    if dom.is_empty() {
        return Err(ShapeError::Domain("torsion of an empty domain".into()));
    }
    let spec = dom.spec();
    let op = MaskedLaplacian::new(dom);
    let h = spec.spacing();
    let b = vec![h * h; op.len()];
    let mut x = vec![0.0; op.len()];
    let out = conjugate_gradient(&op, &b, &mut x, opts.tol, opts.cap(spec))?;
    let energy = -0.5 * x.iter().sum::<f64>() * spec.cell_volume();
    Ok(TorsionSolution {
        w: ScalarField::from_unknowns(spec, &op, &x),
        energy,
        residual_norm: out.relative_residual,
        iterations: out.iterations,
    })
}

pub fn solve_first_eigen(dom: &GridDomain, tol: f64) -> Result<EigenSolution> {
    solve_first_eigen_with(dom, &SolverOptions::with_tol(tol))
}

/// Inverse power iteration from the all-ones vector, inner solves by CG
/// warm-started at `x/λ`.
pub fn solve_first_eigen_with(dom: &GridDomain, opts: &SolverOptions) -> Result<EigenSolution> {
    opts.check()?;
    if dom.is_empty() {
        return Err(ShapeError::Domain("eigenvalue of an empty domain".into()));
    }
    let comps = dom.component_count();
    if comps != 1 {
        return Err(ShapeError::Precondition(format!(
            "first eigenfunction needs a connected domain, found {comps} components"
        )));
    }
    let spec = dom.spec();
    let op = MaskedLaplacian::new(dom);
    let n = op.len();
    let h2 = spec.spacing().powi(2);
    let cap = opts.cap(spec);
    let inner_tol = (0.1 * opts.tol).max(1e-13);

    let mut x = vec![1.0; n];
    let s = 1.0 / norm(&x);
    x.iter_mut().for_each(|v| *v *= s);
    let mut ax = vec![0.0; n];
    op.apply(&x, &mut ax);
    let mut mu = dot(&x, &ax);
    let mut y = vec![0.0; n];
    let mut converged = false;
    let mut outer = 0;
    while outer < opts.max_outer {
        outer += 1;
        for k in 0..n {
            y[k] = x[k] / mu;
        }
        conjugate_gradient(&op, &x, &mut y, inner_tol, cap)?;
        let s = 1.0 / norm(&y);
        for k in 0..n {
            x[k] = y[k] * s;
        }
        let mu_new = op.energy(&x);
        let change = (mu_new - mu).abs() / mu_new;
        mu = mu_new;
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    op.apply(&x, &mut ax);
    let res: f64 = ax
        .iter()
        .zip(&x)
        .map(|(a, v)| (a - mu * v).powi(2))
        .sum::<f64>()
        .sqrt()
        / mu;
    if !converged {
        return Err(ShapeError::Solver {
            iterations: outer,
            residual: res,
        });
    }
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    // normalize to h^N Σ u² = 1
    let scale = 1.0 / spec.cell_volume().sqrt();
    x.iter_mut().for_each(|v| *v *= scale);
    Ok(EigenSolution {
        u: ScalarField::from_unknowns(spec, &op, &x),
        lambda1: mu / h2,
        residual_norm: res,
        outer_iterations: outer,
    })
}

/// Discrete Dirichlet energy `h^N Σ|∇f|²` of a field supported on `dom`,
/// using the same face discretization as the solvers.
pub fn dirichlet_energy(dom: &GridDomain, f: &ScalarField) -> f64 {
    let op = MaskedLaplacian::new(dom);
    let x: Vec<f64> = op.cells().iter().map(|&i| f.values[i]).collect();
    let spec = dom.spec();
    op.energy(&x) * spec.cell_volume() / spec.spacing().powi(2)
}

/// Rayleigh quotient `∫|∇f|² / ∫f²` on `dom`.
pub fn rayleigh_quotient(dom: &GridDomain, f: &ScalarField) -> f64 {
    let mass: f64 = dom.occupied().map(|i| f.values[i].powi(2)).sum::<f64>() * dom.spec().cell_volume();
    dirichlet_energy(dom, f) / mass
}
