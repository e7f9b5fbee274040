use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{build_cut_extension, classify_layer, slice_statistics, Direction, Trichotomy};
use crate::error::{Result, ShapeError};
use crate::fields::{rayleigh_quotient, solve_first_eigen_with, EigenSolution, SolverOptions};
use crate::functionals::{first_eigenvalue, inequality_slack, riesz_energy_cached};
use crate::geometry::{diameter, fraenkel_asymmetry, measure, rescale_to_measure, unit_ball_volume, GridDomain};
use crate::riesz::check_alpha;

pub const DEFAULT_C4: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurgeryParams {
    pub epsilon: f64,
    pub alpha: f64,
    pub c4: f64,
    pub solver: SolverOptions,
}

impl SurgeryParams {
    pub fn new(epsilon: f64, alpha: f64) -> Self {
        Self {
            epsilon,
            alpha,
            c4: DEFAULT_C4,
            solver: SolverOptions::default(),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        check_alpha(dim, self.alpha)?;
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(ShapeError::Domain(format!("epsilon must be finite and non-negative, got {}", self.epsilon)));
        }
        if !(self.c4 > 2.0) {
            return Err(ShapeError::Domain(format!("C4 must exceed 2, got {}", self.c4)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutCase {
    /// Condition (3) holds nowhere in the tail; the domain is kept.
    TailShort,
    Cut,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailCutResult {
    pub direction: Direction,
    pub case: CutCase,
    pub t_star: Option<f64>,
    /// Tag at `t*`, or at the first tail slice when nothing is cut.
    pub label: Trichotomy,
    pub eps: f64,
    pub delta: f64,
    pub m: f64,
    /// `Ω̃(t*)`.
    pub cut_domain: GridDomain,
    /// `Ω̃(t*)` dilated back to the measure of the input.
    pub rescaled: GridDomain,
    pub lambda_before: f64,
    pub lambda_after: f64,
    pub riesz_before: f64,
    pub riesz_after: f64,
    pub f_tilde_before: f64,
    pub f_tilde_after: f64,
    /// `R(ũ, Ω̃)` and a fresh `λ₁(Ω̃)`.
    pub rq_tilde: f64,
    pub lambda_tilde: f64,
    pub variational_ok: bool,
    /// `λ₁(Ω̂) ≤ λ₁(Ω) + slack` when a cut was made.
    pub contract_ok: bool,
}

/// Cuts the tail in `direction` at the condition-(3) slice of largest tail
/// volume lying within one unit of the condition-(3) slice nearest the body.
///
/// The tail region starts one unit-ball radius beyond the center of the best
/// ball of the Fraenkel asymmetry. `Ω̃` is dilated about its centroid back to
/// `|Ω|`.
pub fn apply_tail_cut(
    dom: &GridDomain,
    eig: &EigenSolution,
    direction: Direction,
    params: &SurgeryParams,
) -> Result<TailCutResult> {
    let dim = dom.dim();
    params.validate(dim)?;
    let m0 = measure(dom);
    if (m0 - 1.0).abs() > 0.02 {
        return Err(ShapeError::Precondition(format!("surgery needs unit measure within 2%, got {m0:.4}")));
    }
    if !dom.is_connected() {
        return Err(ShapeError::Precondition("surgery needs a connected domain".into()));
    }
    let stats = slice_statistics(dom, eig, direction)?;
    let center = fraenkel_asymmetry(dom)?.best_ball.center[direction.axis];
    let t_bar = unit_ball_volume(dim).powf(-1.0 / dim as f64);
    let eligible: Vec<usize> = (0..stats.thresholds.len())
        .filter(|&i| {
            let t = stats.thresholds[i];
            if direction.positive {
                t >= center + t_bar
            } else {
                t <= center - t_bar
            }
        })
        .collect();
    let cond3: Vec<usize> = eligible
        .iter()
        .copied()
        .filter(|&i| classify_layer(&stats, i, params.c4) == Trichotomy::Cond3)
        .collect();

    let lambda_before = eig.lambda1;
    let riesz_before = riesz_energy_cached(dom, params.alpha)?;
    let f_before = lambda_before + params.epsilon * riesz_before;

    // t̂ is the condition-(3) slice nearest the body
    let t_hat = if direction.positive {
        cond3.iter().map(|&i| stats.thresholds[i]).reduce(f64::min)
    } else {
        cond3.iter().map(|&i| stats.thresholds[i]).reduce(f64::max)
    };
    let mut window: Vec<usize> = match t_hat {
        Some(th) => cond3
            .iter()
            .copied()
            .filter(|&i| (stats.thresholds[i] - th).abs() <= 1.0 + 1e-12)
            .collect(),
        None => Vec::new(),
    };
    window.sort_by(|&a, &b| {
        stats.m_t[b]
            .total_cmp(&stats.m_t[a])
            .then((stats.thresholds[a] - t_hat.unwrap_or(0.0)).abs().total_cmp(
                &(stats.thresholds[b] - t_hat.unwrap_or(0.0)).abs(),
            ))
    });

    for &i in &window {
        let t = stats.thresholds[i];
        let ext = match build_cut_extension(dom, eig, t, direction) {
            Ok(e) => e,
            Err(ShapeError::Bounds(msg)) => {
                log::warn!("skipping t = {t:.4}: {msg}");
                continue;
            }
            Err(e) => return Err(e),
        };
        if !ext.domain.is_connected() {
            log::warn!("skipping t = {t:.4}: the cut disconnects the domain");
            continue;
        }
        let rescaled = match rescale_to_measure(&ext.domain, m0) {
            Ok(r) if r.is_connected() => r,
            Ok(_) => {
                log::warn!("skipping t = {t:.4}: rescaling disconnects the domain");
                continue;
            }
            Err(ShapeError::Bounds(msg)) => {
                log::warn!("skipping t = {t:.4}: {msg}");
                continue;
            }
            Err(e) => return Err(e),
        };
        let rq_tilde = rayleigh_quotient(&ext.domain, &ext.field);
        let lambda_tilde = first_eigenvalue(&ext.domain, &params.solver)?;
        let lambda_after = first_eigenvalue(&rescaled, &params.solver)?;
        let riesz_after = riesz_energy_cached(&rescaled, params.alpha)?;
        let contract_ok = lambda_after <= lambda_before + inequality_slack(lambda_before);
        if !contract_ok {
            log::warn!(
                "cut along {direction} at t = {t:.4} raised λ₁ from {lambda_before:.6} to {lambda_after:.6}"
            );
        }
        return Ok(TailCutResult {
            direction,
            case: CutCase::Cut,
            t_star: Some(t),
            label: Trichotomy::Cond3,
            eps: stats.eps_t[i],
            delta: stats.delta_t[i],
            m: stats.m_t[i],
            cut_domain: ext.domain,
            rescaled,
            lambda_before,
            lambda_after,
            riesz_before,
            riesz_after,
            f_tilde_before: f_before,
            f_tilde_after: lambda_after + params.epsilon * riesz_after,
            rq_tilde,
            lambda_tilde,
            variational_ok: lambda_tilde <= rq_tilde * (1.0 + 1e-6),
            contract_ok,
        });
    }

    // nearest tail slice to the body, for the record
    let first = if direction.positive { eligible.first() } else { eligible.last() };
    let (label, eps, delta, m) = match first {
        Some(&i) => (
            classify_layer(&stats, i, params.c4),
            stats.eps_t[i],
            stats.delta_t[i],
            stats.m_t[i],
        ),
        None => (Trichotomy::Cond2, 0.0, 0.0, 0.0),
    };
    Ok(TailCutResult {
        direction,
        case: CutCase::TailShort,
        t_star: None,
        label,
        eps,
        delta,
        m,
        cut_domain: dom.clone(),
        rescaled: dom.clone(),
        lambda_before,
        lambda_after: lambda_before,
        riesz_before,
        riesz_after: riesz_before,
        f_tilde_before: f_before,
        f_tilde_after: f_before,
        rq_tilde: lambda_before,
        lambda_tilde: lambda_before,
        variational_ok: true,
        contract_ok: true,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassLog {
    pub direction: Direction,
    pub case: CutCase,
    pub t_star: Option<f64>,
    pub label: Trichotomy,
    pub eps: f64,
    pub delta: f64,
    pub m: f64,
    pub lambda_before: f64,
    pub lambda_after: f64,
    pub f_tilde_before: f64,
    pub f_tilde_after: f64,
    pub diameter: f64,
    pub measure: f64,
    pub variational_ok: bool,
    pub contract_ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub domain: GridDomain,
    pub passes: Vec<PassLog>,
    pub initial_diameter: f64,
    pub final_diameter: f64,
    pub initial_f_tilde: f64,
    pub final_f_tilde: f64,
    /// No pass raised `λ₁` or `F̃` beyond the slack.
    pub monotone: bool,
}

/// One tail cut per direction `−e₁, +e₁, …, +e_N`, each on the previous result.
pub fn surgery_sweep(dom: &GridDomain, params: &SurgeryParams) -> Result<SweepResult> {
    surgery_sweep_along(dom, params, &Direction::sweep_order(dom.dim()))
}

/// Sequential tail cuts along the given directions.
pub fn surgery_sweep_along(dom: &GridDomain, params: &SurgeryParams, directions: &[Direction]) -> Result<SweepResult> {
    let mut current = dom.clone();
    let mut passes = Vec::new();
    let initial_diameter = diameter(dom)?;
    let mut initial_f = None;
    let mut monotone = true;
    for &dir in directions {
        let eig = solve_first_eigen_with(&current, &params.solver)?;
        let r = apply_tail_cut(&current, &eig, dir, params)?;
        initial_f.get_or_insert(r.f_tilde_before);
        let up = r.lambda_after > r.lambda_before + inequality_slack(r.lambda_before)
            || r.f_tilde_after > r.f_tilde_before + inequality_slack(r.f_tilde_before);
        monotone &= !up;
        current = r.rescaled;
        log::info!(
            "{dir}: {:?} at {:?}, F̃ {:.6} -> {:.6}",
            r.case,
            r.t_star,
            r.f_tilde_before,
            r.f_tilde_after
        );
        passes.push(PassLog {
            direction: dir,
            case: r.case,
            t_star: r.t_star,
            label: r.label,
            eps: r.eps,
            delta: r.delta,
            m: r.m,
            lambda_before: r.lambda_before,
            lambda_after: r.lambda_after,
            f_tilde_before: r.f_tilde_before,
            f_tilde_after: r.f_tilde_after,
            diameter: diameter(&current)?,
            measure: measure(&current),
            variational_ok: r.variational_ok,
            contract_ok: r.contract_ok,
        });
    }
    let final_f = passes.last().map_or(f64::NAN, |p| p.f_tilde_after);
    Ok(SweepResult {
        final_diameter: diameter(&current)?,
        domain: current,
        passes,
        initial_diameter,
        initial_f_tilde: initial_f.unwrap_or(f64::NAN),
        final_f_tilde: final_f,
        monotone,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub c4: f64,
    pub cuts: usize,
    pub final_diameter: f64,
    pub final_f_tilde: f64,
    pub monotone: bool,
}

/// Sweep outcome for several values of `C₄`.
pub fn c4_sensitivity(dom: &GridDomain, params: &SurgeryParams, c4s: &[f64]) -> Result<Vec<Sensitivity>> {
    c4s.iter()
        .map(|&c4| {
            let p = SurgeryParams { c4, ..*params };
            let s = surgery_sweep(dom, &p)?;
            Ok(Sensitivity {
                c4,
                cuts: s.passes.iter().filter(|p| p.case == CutCase::Cut).count(),
                final_diameter: s.final_diameter,
                final_f_tilde: s.final_f_tilde,
                monotone: s.monotone,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(out: W, passes: &[PassLog]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "direction",
        "case",
        "t_star",
        "label",
        "eps",
        "delta",
        "m",
        "lambda_before",
        "lambda_after",
        "f_tilde_before",
        "f_tilde_after",
        "diameter",
    ])?;
    for p in passes {
        w.write_record([
            p.direction.to_string(),
            match p.case {
                CutCase::Cut => "cut".to_string(),
                CutCase::TailShort => "tail_short".to_string(),
            },
            p.t_star.map_or(String::new(), |t| format!("{t:.6}")),
            p.label.to_string(),
            format!("{:.6e}", p.eps),
            format!("{:.6e}", p.delta),
            format!("{:.6e}", p.m),
            format!("{:.10e}", p.lambda_before),
            format!("{:.10e}", p.lambda_after),
            format!("{:.10e}", p.f_tilde_before),
            format!("{:.10e}", p.f_tilde_after),
            format!("{:.6}", p.diameter),
        ])?;
    }
    w.flush()?;
    Ok(())
}
