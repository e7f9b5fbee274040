//! Norms of nearly spherical perturbations and log-log fits of the deficits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShapeError};
use crate::fields::{solve_torsion_with, SolverOptions};
use crate::geometry::{measure, rasterize_star, GridDomain, GridSpec, StarBoundary};
use crate::riesz::riesz_energy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalNorms {
    /// `R ∫ φ² dθ`.
    pub l2_sq: f64,
    /// `πR Σ_k (1 + |k|)|c_k|²` over the complex coefficients of `φ`.
    pub h_half_sq: f64,
    /// `|c_k|²` for `k = 0..K`; negative `k` mirror these.
    pub spectrum: Vec<f64>,
}

pub fn nearly_spherical_norms(b: &StarBoundary) -> SphericalNorms {
    let r = b.base_radius;
    let mut spectrum = vec![b.fourier_cos[0].powi(2)];
    for k in 1..b.fourier_cos.len() {
        spectrum.push(0.25 * (b.fourier_cos[k].powi(2) + b.fourier_sin[k].powi(2)));
    }
    // Parseval: ∫φ² = 2π Σ_{k∈ℤ} |c_k|²
    let mut l2 = spectrum[0];
    let mut hh = spectrum[0];
    for (k, c) in spectrum.iter().enumerate().skip(1) {
        l2 += 2.0 * c;
        hh += 2.0 * (1.0 + k as f64) * c;
    }
    SphericalNorms {
        l2_sq: 2.0 * PI * r * l2,
        h_half_sq: PI * r * hh,
        spectrum,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSample {
    pub amplitude: f64,
    pub e_deficit: f64,
    pub v_deficit: f64,
    pub e_used: bool,
    pub v_used: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub mode: usize,
    pub alpha: f64,
    pub e_slope: f64,
    pub e_r_squared: f64,
    pub v_slope: f64,
    pub v_r_squared: f64,
    pub samples: Vec<FitSample>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub grid: GridSpec,
    pub solver: SolverOptions,
    /// Sub-cell center shifts averaged per sample, in cell units.
    pub offsets: Vec<[f64; 2]>,
}

impl FitOptions {
    pub fn new(cells: usize) -> Result<Self> {
        Ok(Self {
            grid: GridSpec::centered(2, cells, 1.8)?,
            solver: SolverOptions::default(),
            offsets: vec![[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5], [0.25, 0.75], [0.75, 0.25]],
        })
    }
}

/// Scale-invariant `(E|Ω|^{−(N+2)/N}, V|Ω|^{−(N+α)/N})` averaged over the offsets.
fn normalized(b: &StarBoundary, alpha: f64, opts: &FitOptions) -> Result<(f64, f64)> {
    let h = opts.grid.spacing();
    let mut e = 0.0;
    let mut v = 0.0;
    for o in &opts.offsets {
        let mut s = b.clone();
        s.center = [o[0] * h, o[1] * h];
        let dom: GridDomain = rasterize_star(&s, &opts.grid)?;
        let m = measure(&dom);
        e += solve_torsion_with(&dom, &opts.solver)?.energy * m.powi(-2);
        v += riesz_energy(&dom, alpha)? * m.powf(-(2.0 + alpha) / 2.0);
    }
    let k = opts.offsets.len() as f64;
    Ok((e / k, v / k))
}

fn loglog(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

/// Deficits of unit-area `r = R(1 + a cos kθ)` against the rasterized disk on
/// the same grid, and their log-log slopes in `a`. Non-positive deficits are
/// left out of the fit and flagged.
pub fn deficit_quadratic_fit(mode: usize, amplitudes: &[f64], alpha: f64, opts: &FitOptions) -> Result<QuadraticFit> {
    if mode < 2 {
        return Err(ShapeError::Domain(format!("mode must be at least 2, got {mode}")));
    }
    if amplitudes.len() < 5 || amplitudes.iter().any(|&a| !(0.0..=0.2).contains(&a)) {
        return Err(ShapeError::Precondition(
            "need at least five amplitudes in [0, 0.2]".into(),
        ));
    }
    let disk = StarBoundary::circle_with_area(1.0, [0.0, 0.0], mode);
    let (e0, v0) = normalized(&disk, alpha, opts)?;
    let mut samples = Vec::new();
    for &a in amplitudes {
        let b = StarBoundary::single_mode(1.0, mode, a, mode).with_area(1.0);
        let (e, v) = normalized(&b, alpha, opts)?;
        let (ed, vd) = (e - e0, v0 - v);
        samples.push(FitSample {
            amplitude: a,
            e_deficit: ed,
            v_deficit: vd,
            e_used: a > 0.0 && ed > 0.0,
            v_used: a > 0.0 && vd > 0.0,
        });
    }
    let e_pts: Vec<(f64, f64)> = samples.iter().filter(|s| s.e_used).map(|s| (s.amplitude, s.e_deficit)).collect();
    let v_pts: Vec<(f64, f64)> = samples.iter().filter(|s| s.v_used).map(|s| (s.amplitude, s.v_deficit)).collect();
    if e_pts.len() < 3 || v_pts.len() < 3 {
        return Err(ShapeError::Degenerate(format!(
            "too few positive deficits to fit ({} for E, {} for V)",
            e_pts.len(),
            v_pts.len()
        )));
    }
    let (e_slope, e_r_squared) = loglog(&e_pts);
    let (v_slope, v_r_squared) = loglog(&v_pts);
    Ok(QuadraticFit {
        mode,
        alpha,
        e_slope,
        e_r_squared,
        v_slope,
        v_r_squared,
        samples,
    })
}
