//! Shape-gradient descent over star-shaped Fourier boundaries.
//!
//! Objectives are evaluated on the rasterized star, with the raster measure
//! error removed by continuum scaling: every grid quantity is rescaled from
//! the raster measure to the exact Fourier area of the boundary. In
//! projection mode the boundary is kept at unit area and the objective is the
//! scale-invariant form of `F` or `F̃`; in penalty mode `f_η` is applied to
//! the exact area.

pub mod optimality;
pub mod spherical;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShapeError};
use crate::fields::{solve_first_eigen_with, solve_torsion_with, SolverOptions};
use crate::functionals::{f_eta, PenaltyParams};
use crate::geometry::{fraenkel_asymmetry, measure, rasterize_star, GridDomain, GridSpec, StarBoundary};
use crate::riesz::riesz_energy;

pub use optimality::{optimality_residual, optimality_residual_weighted, OptimalityReport};
pub use spherical::{
    deficit_quadratic_fit, nearly_spherical_norms, FitOptions, FitSample, QuadraticFit, SphericalNorms,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Functional {
    /// `E + εV`.
    F,
    /// `λ₁ + εV`.
    FTilde,
    /// `E + εV + f_η(|Ω|)`.
    G,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StepRule {
    Fixed { step: f64 },
    /// Armijo backtracking along the normalized negative gradient; steps are
    /// lengths in coefficient space.
    Backtracking { initial: f64, shrink: f64, armijo: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VolumeMode {
    /// Rescale to unit area after every step.
    Projection,
    /// Leave the area free and rely on `f_η`.
    Penalty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentConfig {
    pub params: PenaltyParams,
    pub functional: Functional,
    pub max_mode: usize,
    pub step: StepRule,
    pub volume: VolumeMode,
    pub max_iter: usize,
    /// Stop after three consecutive accepted coefficient changes below this.
    pub tol: f64,
    pub grid: GridSpec,
    pub solver: SolverOptions,
    /// Finite-difference step; defaults to `max(10⁻³, 2h/R)`.
    pub fd_step: Option<f64>,
    /// Compute the optimality residual on every trace row.
    pub trace_residual: bool,
}

impl DescentConfig {
    /// Projection-mode `F` descent on a 2D grid of `cells` per axis over a box of side 2.4.
    pub fn new(params: PenaltyParams, cells: usize) -> Result<Self> {
        Ok(Self {
            params,
            functional: Functional::F,
            max_mode: 6,
            step: StepRule::Backtracking {
                initial: 0.05,
                shrink: 0.5,
                armijo: 1e-4,
            },
            volume: VolumeMode::Projection,
            max_iter: 60,
            tol: 2e-4,
            grid: GridSpec::centered(2, cells, 2.4)?,
            solver: SolverOptions::default(),
            fd_step: None,
            trace_residual: false,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.max_mode < 2 {
            return Err(ShapeError::Domain("max_mode must be at least 2".into()));
        }
        let ok = match self.step {
            StepRule::Fixed { step } => step > 0.0,
            StepRule::Backtracking { initial, shrink, armijo } => {
                initial > 0.0 && shrink > 0.0 && shrink < 1.0 && armijo > 0.0 && armijo < 1.0
            }
        };
        if !ok {
            return Err(ShapeError::Domain("invalid step rule".into()));
        }
        if self.grid.dim() != 2 {
            return Err(ShapeError::Domain("star descent runs on planar grids".into()));
        }
        if self.volume == VolumeMode::Penalty && self.functional != Functional::G {
            return Err(ShapeError::Domain(
                "penalty volume handling needs the functional G".into(),
            ));
        }
        Ok(())
    }

    pub fn fd_step_for(&self, boundary: &StarBoundary) -> f64 {
        self.fd_step
            .unwrap_or_else(|| (2.0 * self.grid.spacing() / boundary.base_radius).max(1e-3))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub objective: f64,
    pub energy: f64,
    pub lambda1: Option<f64>,
    pub riesz: f64,
    /// Exact area of the boundary.
    pub area: f64,
    pub raster_measure: f64,
}

fn prepare(boundary: &StarBoundary, cfg: &DescentConfig) -> StarBoundary {
    match cfg.volume {
        VolumeMode::Projection => boundary.with_area(1.0),
        VolumeMode::Penalty => boundary.clone(),
    }
}

/// Objective of the selected functional for a boundary; the boundary is
/// projected to unit area first in projection mode.
pub fn evaluate_boundary(boundary: &StarBoundary, cfg: &DescentConfig) -> Result<Evaluation> {
    let b = prepare(boundary, cfg);
    let dom = rasterize_star(&b, &cfg.grid)?;
    evaluate_domain(&dom, b.area(), cfg)
}

fn evaluate_domain(dom: &GridDomain, area: f64, cfg: &DescentConfig) -> Result<Evaluation> {
    if dom.is_empty() {
        return Err(ShapeError::Resolution("boundary rasterizes to no cells".into()));
    }
    let n = cfg.grid.dim() as f64;
    let alpha = cfg.params.alpha;
    let eps = cfg.params.epsilon;
    let m = measure(dom);
    let scale = area / m;
    let riesz = if eps > 0.0 {
        riesz_energy(dom, alpha)? * scale.powf((n + alpha) / n)
    } else {
        0.0
    };
    let (energy, lambda1) = match cfg.functional {
        Functional::FTilde => {
            let l = solve_first_eigen_with(dom, &cfg.solver)?.lambda1 * scale.powf(-2.0 / n);
            (f64::NAN, Some(l))
        }
        _ => {
            let e = solve_torsion_with(dom, &cfg.solver)?.energy * scale.powf((n + 2.0) / n);
            (e, None)
        }
    };
    let objective = match cfg.functional {
        Functional::F => energy + eps * riesz,
        Functional::FTilde => lambda1.unwrap_or(f64::NAN) + eps * riesz,
        Functional::G => energy + eps * riesz + f_eta(area, cfg.params.eta),
    };
    Ok(Evaluation {
        objective,
        energy,
        lambda1,
        riesz,
        area,
        raster_measure: m,
    })
}

/// Puts a boundary at its optimal size: unit area in projection mode; in
/// penalty mode the area minimizing `G` over dilations, found from the scaling
/// laws `E ∝ t^{N+2}`, `V ∝ t^{N+α}` and one evaluation.
pub fn settle(boundary: &StarBoundary, cfg: &DescentConfig) -> Result<(StarBoundary, Evaluation)> {
    let b = prepare(boundary, cfg);
    let ev = evaluate_boundary(&b, cfg)?;
    if cfg.volume == VolumeMode::Projection {
        return Ok((b, ev));
    }
    let n = cfg.grid.dim() as f64;
    let eps = cfg.params.epsilon;
    let alpha = cfg.params.alpha;
    let a = ev.area;
    let g = |s: f64| {
        let r = s / a;
        ev.energy * r.powf((n + 2.0) / n) + eps * ev.riesz * r.powf((n + alpha) / n) + f_eta(s, cfg.params.eta)
    };
    let (mut lo, mut hi) = ((0.25 * a).ln(), (4.0 * a).ln());
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = hi - phi * (hi - lo);
        let x2 = lo + phi * (hi - lo);
        if g(x1.exp()) <= g(x2.exp()) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let mut best = (0.5 * (lo + hi)).exp();
    if (0.25 * a..=4.0 * a).contains(&1.0) && g(1.0) <= g(best) {
        best = 1.0;
    }
    let out = b.with_area(best);
    let ev = evaluate_boundary(&out, cfg)?;
    Ok((out, ev))
}

fn wrap(index: usize, e: ShapeError) -> ShapeError {
    ShapeError::Coefficient {
        index,
        source: Box::new(e),
    }
}

/// Central-difference gradient of the objective with respect to
/// `[a_0..a_K, b_1..b_K]`. The `a_0` entry is zero: it only dilates the
/// boundary, and dilations are settled separately (see [`settle`]).
pub fn shape_gradient(boundary: &StarBoundary, cfg: &DescentConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    boundary.validate()?;
    let c = boundary.coefficients();
    let d = cfg.fd_step_for(&prepare(boundary, cfg));
    (0..c.len())
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return Ok(0.0);
            }
            let at = |sign: f64| -> Result<f64> {
                let mut x = c.clone();
                x[i] += sign * d;
                Ok(evaluate_boundary(&boundary.with_coefficients(&x), cfg)?.objective)
            };
            let plus = at(1.0).map_err(|e| wrap(i, e))?;
            let minus = at(-1.0).map_err(|e| wrap(i, e))?;
            Ok((plus - minus) / (2.0 * d))
        })
        .collect()
}

/// Gradient noise scale: spread of the objective under sub-cell translations
/// of the boundary, propagated through the central difference.
pub fn gradient_noise_floor(boundary: &StarBoundary, cfg: &DescentConfig) -> Result<f64> {
    let h = cfg.grid.spacing();
    let shifts = [
        [0.0, 0.0],
        [0.25, 0.0],
        [0.0, 0.25],
        [0.25, 0.25],
        [0.5, 0.0],
        [0.0, 0.5],
        [0.5, 0.5],
        [0.5, 0.25],
    ];
    let vals: Vec<f64> = shifts
        .iter()
        .map(|s| {
            let mut b = boundary.clone();
            b.center[0] += s[0] * h;
            b.center[1] += s[1] * h;
            Ok(evaluate_boundary(&b, cfg)?.objective)
        })
        .collect::<Result<_>>()?;
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt();
    let free = boundary.coefficients().len() - usize::from(cfg.volume == VolumeMode::Projection);
    let d = cfg.fd_step_for(&prepare(boundary, cfg));
    Ok(sd * std::f64::consts::SQRT_2 / (2.0 * d) * (free as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub energy: f64,
    pub lambda1: Option<f64>,
    pub riesz: f64,
    pub measure: f64,
    pub raster_measure: f64,
    pub asymmetry: f64,
    pub residual_std: Option<f64>,
    pub step: f64,
    pub gradient_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DescentStatus {
    Converged,
    MaxIterations,
    /// Backtracking shrank the step below `10⁻⁶` of the initial step.
    Stagnated { diagnostic: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentResult {
    pub final_boundary: StarBoundary,
    pub trace: Vec<TraceRow>,
    pub status: DescentStatus,
    pub final_asymmetry: f64,
    pub optimality: Option<OptimalityReport>,
}

fn trace_row(
    iteration: usize,
    b: &StarBoundary,
    ev: &Evaluation,
    cfg: &DescentConfig,
    step: f64,
    gradient_norm: f64,
    with_residual: bool,
) -> Result<TraceRow> {
    let dom = rasterize_star(&prepare(b, cfg), &cfg.grid)?;
    let asymmetry = fraenkel_asymmetry(&dom)?.value;
    let residual_std = if with_residual {
        optimality_residual(&dom, &cfg.params).ok().map(|r| r.relative_std)
    } else {
        None
    };
    Ok(TraceRow {
        iteration,
        objective: ev.objective,
        energy: ev.energy,
        lambda1: ev.lambda1,
        riesz: ev.riesz,
        measure: ev.area,
        raster_measure: ev.raster_measure,
        asymmetry,
        residual_std,
        step,
        gradient_norm,
    })
}

pub fn descend(start: &StarBoundary, cfg: &DescentConfig) -> Result<DescentResult> {
    cfg.validate()?;
    start.validate()?;
    let mut b = prepare(start, cfg);
    if b.max_mode() < cfg.max_mode {
        let mut padded = StarBoundary::circle(b.base_radius, b.center, cfg.max_mode);
        padded.fourier_cos[..b.fourier_cos.len()].copy_from_slice(&b.fourier_cos);
        padded.fourier_sin[..b.fourier_sin.len()].copy_from_slice(&b.fourier_sin);
        b = padded;
    }
    let (settled, mut cur) = settle(&b, cfg)?;
    b = settled;
    let mut trace = vec![trace_row(0, &b, &cur, cfg, 0.0, f64::NAN, cfg.trace_residual)?];
    let (initial, shrink, armijo, fixed) = match cfg.step {
        StepRule::Fixed { step } => (step, 1.0, 0.0, true),
        StepRule::Backtracking { initial, shrink, armijo } => (initial, shrink, armijo, false),
    };
    let mut step = initial;
    let mut status = DescentStatus::MaxIterations;
    let mut small_steps = 0;
    for it in 1..=cfg.max_iter {
        let g = shape_gradient(&b, cfg)?;
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gn == 0.0 {
            status = DescentStatus::Converged;
            break;
        }
        let c = b.coefficients();
        let mut s = step;
        let accepted = loop {
            let x: Vec<f64> = c.iter().zip(&g).map(|(ci, gi)| ci - s * gi / gn).collect();
            let trial = b.with_coefficients(&x);
            let settled = if trial.validate().is_ok() {
                settle(&trial, cfg).ok()
            } else {
                None
            };
            if let Some((trial, ev)) = settled {
                if fixed || ev.objective <= cur.objective - armijo * s * gn {
                    break Some((trial, ev));
                }
            }
            if fixed {
                break None;
            }
            s *= shrink;
            if s < 1e-6 * initial {
                break None;
            }
        };
        let Some((trial, ev)) = accepted else {
            status = DescentStatus::Stagnated {
                diagnostic: format!(
                    "no decrease at iteration {it}: step below {:.1e}, gradient norm {gn:.3e}",
                    1e-6 * initial
                ),
            };
            break;
        };
        let change = trial
            .coefficients()
            .iter()
            .zip(&c)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        b = trial;
        cur = ev;
        trace.push(trace_row(it, &b, &cur, cfg, s, gn, cfg.trace_residual)?);
        small_steps = if change < cfg.tol { small_steps + 1 } else { 0 };
        if small_steps >= 3 {
            status = DescentStatus::Converged;
            break;
        }
        step = (2.0 * s).min(initial);
    }
    let dom = rasterize_star(&b, &cfg.grid)?;
    let final_asymmetry = fraenkel_asymmetry(&dom)?.value;
    let optimality = optimality_residual(&dom, &cfg.params).ok();
    Ok(DescentResult {
        final_boundary: b,
        trace,
        status,
        final_asymmetry,
        optimality,
    })
}

/// Trace as CSV with a fixed header.
pub fn write_trace_csv<W: Write>(out: W, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "iteration",
        "objective",
        "energy",
        "lambda1",
        "riesz",
        "measure",
        "raster_measure",
        "asymmetry",
        "residual_std",
        "step",
        "gradient_norm",
    ])
    ?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.12e}"));
    for r in trace {
        w.write_record([
            r.iteration.to_string(),
            format!("{:.12e}", r.objective),
            format!("{:.12e}", r.energy),
            opt(r.lambda1),
            format!("{:.12e}", r.riesz),
            format!("{:.12e}", r.measure),
            format!("{:.12e}", r.raster_measure),
            format!("{:.6e}", r.asymmetry),
            opt(r.residual_std),
            format!("{:.6e}", r.step),
            format!("{:.6e}", r.gradient_norm),
        ])
        ?;
    }
    w.flush()?;
    Ok(())
}

/// Unit-area start with a mode-2 perturbation of the given amplitude at a
/// random phase, plus small random modes 3..=K (amplitude ≤ 0.02).
pub fn seeded_start(seed: u64, amplitude: f64, max_mode: usize) -> StarBoundary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = StarBoundary::circle(1.0, [0.0, 0.0], max_mode.max(2));
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    b.fourier_cos[2] = amplitude * (2.0 * phase).cos();
    b.fourier_sin[2] = amplitude * (2.0 * phase).sin();
    for k in 3..=max_mode {
        b.fourier_cos[k] = rng.gen_range(-0.02..0.02);
        b.fourier_sin[k] = rng.gen_range(-0.02..0.02);
    }
    b.with_area(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(eps: f64) -> DescentConfig {
        let p = PenaltyParams::unconstrained(eps, 1.5).unwrap();
        let mut c = DescentConfig::new(p, 96).unwrap();
        c.max_mode = 4;
        c
    }

    #[test]
    fn ball_is_stationary() {
        let c = cfg(0.0);
        let b = StarBoundary::circle_with_area(1.0, [0.0, 0.0], 4);
        let g = shape_gradient(&b, &c).unwrap();
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let floor = gradient_noise_floor(&b, &c).unwrap();
        assert!(gn <= 3.0 * floor.max(1e-12), "{gn} {floor}");
    }

    #[test]
    fn mode_two_gradient_points_back() {
        let c = cfg(0.0);
        let b = StarBoundary::single_mode(0.56, 2, 0.1, 4);
        let g = shape_gradient(&b, &c).unwrap();
        assert!(g[2] > 0.0, "{g:?}");
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn dilation_mode_is_projected_out() {
        let c = cfg(0.01);
        let b = StarBoundary::single_mode(0.56, 3, 0.08, 4);
        let mut dilated = b.clone();
        dilated.base_radius *= 1.3;
        let g1 = shape_gradient(&b, &c).unwrap();
        let g2 = shape_gradient(&dilated, &c).unwrap();
        assert_eq!(g1[0], 0.0);
        for i in 1..g1.len() {
            assert!((g1[i] - g2[i]).abs() <= 1e-9 * g1[i].abs().max(1e-9), "{i} {g1:?} {g2:?}");
        }
    }

    #[test]
    fn trace_csv_has_header() {
        let row = TraceRow {
            iteration: 0,
            objective: -0.02,
            energy: -0.02,
            lambda1: None,
            riesz: 0.0,
            measure: 1.0,
            raster_measure: 1.0,
            asymmetry: 0.0,
            residual_std: None,
            step: 0.0,
            gradient_norm: 0.0,
        };
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iteration,objective,energy"));
        assert_eq!(text.lines().count(), 2);
    }
}
