//! First-order optimality residual `q_u² − εv_Ω = Λ` on the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShapeError};
use crate::fields::{solve_torsion, torsion_flux};
use crate::functionals::PenaltyParams;
use crate::geometry::{GridDomain, Point};
use crate::riesz::riesz_potential;

/// Fewest usable boundary samples.
pub const MIN_SAMPLES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    /// Boundary mean of `q² − wεv`.
    pub lambda: f64,
    /// `q² − wεv − Λ` per boundary sample.
    pub residuals: Vec<f64>,
    /// Standard deviation of the residuals over `|Λ|`.
    pub relative_std: f64,
    /// Weight `w` on the potential term.
    pub weight: f64,
    pub dropped: usize,
}

/// Residual of `q_u² − εv_Ω = Λ`.
pub fn optimality_residual(dom: &GridDomain, params: &PenaltyParams) -> Result<OptimalityReport> {
    optimality_residual_weighted(dom, params, 1.0)
}

/// Residual of `q_u² − wεv_Ω = Λ`. The first variation of `E + εV` with
/// `E = ½∫|∇u|² − ∫u` gives `w = 4`.
pub fn optimality_residual_weighted(dom: &GridDomain, params: &PenaltyParams, weight: f64) -> Result<OptimalityReport> {
    if !dom.is_connected() {
        return Err(ShapeError::Precondition("optimality residual needs a connected domain".into()));
    }
    let sol = solve_torsion(dom, 1e-8)?;
    let flux = torsion_flux(dom, &sol);
    if flux.samples.len() < MIN_SAMPLES {
        return Err(ShapeError::InsufficientBoundary {
            found: flux.samples.len(),
            required: MIN_SAMPLES,
        });
    }
    let eps = params.epsilon;
    let v = if eps > 0.0 {
        Some(riesz_potential(dom, params.alpha)?.v.values)
    } else {
        None
    };
    let raw: Vec<f64> = flux
        .samples
        .iter()
        .map(|s| {
            let pot = v.as_ref().map_or(0.0, |v| interpolate_box(dom, v, &s.point));
            s.q * s.q - weight * eps * pot
        })
        .collect();
    let lambda = raw.iter().sum::<f64>() / raw.len() as f64;
    let residuals: Vec<f64> = raw.iter().map(|r| r - lambda).collect();
    let sd = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(OptimalityReport {
        lambda,
        residuals,
        relative_std: sd / lambda.abs(),
        weight,
        dropped: flux.dropped.len(),
    })
}

/// Multilinear interpolation of a whole-box field at a physical point,
/// clamped to the outermost cell centers.
fn interpolate_box(dom: &GridDomain, values: &[f64], p: &Point) -> f64 {
    let spec = dom.spec();
    let dim = spec.dim();
    let n = spec.cells_per_axis();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..dim {
        let g = spec.grid_coord(p, a).clamp(0.0, (n - 1) as f64);
        let f = g.floor().min((n - 2) as f64);
        base[a] = f as usize;
        frac[a] = g - f;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << dim) {
        let mut c = base;
        let mut w = 1.0;
        for a in 0..dim {
            if corner >> a & 1 == 1 {
                c[a] += 1;
                w *= frac[a];
            } else {
                w *= 1.0 - frac[a];
            }
        }
        acc += w * values[spec.index(c)];
    }
    acc
}
