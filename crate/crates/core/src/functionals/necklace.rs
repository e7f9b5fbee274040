//! Ball against necklace of `k = ⌊δ^{−N}⌋` equal balls for `F = E + εV`.

use serde::{Deserialize, Serialize};

use super::deficits::ball_torsion_energy;
use super::{riesz_energy_cached, torsion_energy};
use crate::error::{Result, ShapeError};
use crate::fields::SolverOptions;
use crate::geometry::{make_ball, make_necklace, unit_ball_volume, BallSpec, GridSpec, NecklaceSpec};
use crate::riesz::{ball_riesz_energy, check_alpha};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NecklaceOptions {
    pub cells_per_axis: usize,
    /// Box side; the chain runs along the first axis and is spread over the box.
    pub side: f64,
    pub solver: SolverOptions,
}

impl NecklaceOptions {
    pub fn for_dim(dim: usize) -> Self {
        match dim {
            3 => Self {
                cells_per_axis: 96,
                side: 4.0,
                solver: SolverOptions::default(),
            },
            _ => Self {
                cells_per_axis: 384,
                side: 4.0,
                solver: SolverOptions::default(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NecklaceBounds {
    pub delta: f64,
    pub epsilon: f64,
    pub dim: usize,
    pub alpha: f64,
    pub ball_count: usize,
    /// Center spacing `q` of neighbouring balls.
    pub gap: f64,
    /// `α ∈ (N − 1, N)`.
    pub in_regime: bool,
    pub ball_energy: f64,
    pub ball_riesz: f64,
    pub necklace_energy: f64,
    pub necklace_riesz: f64,
    /// `F(B)` on the grid.
    pub lower_ball_side: f64,
    /// `F(necklace)` on the grid.
    pub upper_necklace_side: f64,
    /// `E(B) + εV(B)` from closed forms.
    pub analytic_ball: f64,
    /// `k^{−2/N}E(B) + εk^{−α/N}V(B) + ε Σ_{i≠j} k^{−2}|x_i − x_j|^{α−N}`.
    pub analytic_necklace: f64,
    pub necklace_wins: bool,
}

impl NecklaceBounds {
    /// Same geometry at another ε; only the linear combination changes.
    pub fn at_epsilon(&self, epsilon: f64) -> Self {
        let mut out = self.clone();
        let k = self.ball_count as f64;
        let n = self.dim as f64;
        out.epsilon = epsilon;
        out.lower_ball_side = self.ball_energy + epsilon * self.ball_riesz;
        out.upper_necklace_side = self.necklace_energy + epsilon * self.necklace_riesz;
        let (eb, vb) = unit_ball_references(self.dim, self.alpha);
        out.analytic_ball = eb + epsilon * vb;
        let cross = cross_sum(self.dim, self.alpha, self.ball_count, self.gap);
        out.analytic_necklace =
            k.powf(-2.0 / n) * eb + epsilon * (k.powf(-self.alpha / n) * vb + cross);
        out.necklace_wins = out.upper_necklace_side < out.lower_ball_side;
        out
    }
}

fn unit_ball_references(dim: usize, alpha: f64) -> (f64, f64) {
    let r = unit_ball_volume(dim).powf(-1.0 / dim as f64);
    let v = ball_riesz_energy(dim, alpha, r).unwrap_or(f64::NAN);
    (ball_torsion_energy(dim, r), v)
}

/// Point-mass interaction of `k` balls of mass `1/k` with centers `step` apart.
fn cross_sum(dim: usize, alpha: f64, k: usize, step: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let d = step * (i as f64 - j as f64).abs();
                s += d.powf(alpha - dim as f64);
            }
        }
    }
    s / (k * k) as f64
}

/// Analytic necklace value for a given ball count, used to inspect the `k` dependence.
pub fn analytic_necklace_value(dim: usize, alpha: f64, epsilon: f64, k: usize, gap: f64) -> f64 {
    let (eb, vb) = unit_ball_references(dim, alpha);
    let kf = k as f64;
    let n = dim as f64;
    kf.powf(-2.0 / n) * eb + epsilon * (kf.powf(-alpha / n) * vb + cross_sum(dim, alpha, k, gap))
}

pub fn necklace_bounds(
    delta: f64,
    epsilon: f64,
    dim: usize,
    alpha: f64,
    opts: &NecklaceOptions,
) -> Result<NecklaceBounds> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(ShapeError::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(epsilon >= 0.0) {
        return Err(ShapeError::Domain(format!("epsilon must be non-negative, got {epsilon}")));
    }
    check_alpha(dim, alpha)?;
    let n = dim as f64;
    let k = delta.powf(-n).floor() as usize;
    if k < 2 {
        return Err(ShapeError::Degenerate(format!("delta = {delta} gives k = {k} < 2 balls")));
    }
    let in_regime = alpha > n - 1.0;
    if !in_regime {
        log::warn!("alpha = {alpha} is outside ({}, {dim}); the necklace comparison is outside its regime", dim - 1);
    }
    let spec = GridSpec::centered(dim, opts.cells_per_axis, opts.side)?;
    let h = spec.spacing();
    let r = (1.0 / (k as f64 * unit_ball_volume(dim))).powf(1.0 / n);
    let room = opts.side - 4.0 * h - 2.0 * k as f64 * r;
    let gap = 2.0 * r + room / (k - 1) as f64;
    if room < 0.0 {
        return Err(ShapeError::Bounds(format!(
            "{k} balls of radius {r:.4} do not fit in a box of side {}",
            opts.side
        )));
    }
    let neck = NecklaceSpec {
        ball_count: k,
        gap,
        total_measure: 1.0,
        center: [0.0; 3],
    };
    let chain = make_necklace(&spec, &neck)?;
    let ball = make_ball(&spec, &BallSpec::with_measure(dim, [0.0; 3], 1.0))?;
    let base = NecklaceBounds {
        delta,
        epsilon,
        dim,
        alpha,
        ball_count: k,
        gap,
        in_regime,
        ball_energy: torsion_energy(&ball, &opts.solver)?,
        ball_riesz: riesz_energy_cached(&ball, alpha)?,
        necklace_energy: torsion_energy(&chain, &opts.solver)?,
        necklace_riesz: riesz_energy_cached(&chain, alpha)?,
        lower_ball_side: 0.0,
        upper_necklace_side: 0.0,
        analytic_ball: 0.0,
        analytic_necklace: 0.0,
        necklace_wins: false,
    };
    Ok(base.at_epsilon(epsilon))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlipPoint {
    /// Bracket `[lo, hi]` with the necklace losing at `lo` and winning at `hi`.
    pub bracket: (f64, f64),
    pub epsilon_numeric: f64,
    /// Crossing of the analytic values.
    pub epsilon_analytic: f64,
    pub bisection_steps: usize,
    pub at_flip: NecklaceBounds,
}

/// Bisection on `necklace_wins(ε)` over the grid values of the fixed geometry.
pub fn necklace_flip_point(delta: f64, dim: usize, alpha: f64, opts: &NecklaceOptions) -> Result<FlipPoint> {
    let base = necklace_bounds(delta, 0.0, dim, alpha, opts)?;
    if base.necklace_wins {
        return Err(ShapeError::Degenerate("the necklace already wins at epsilon = 0".into()));
    }
    if base.necklace_riesz >= base.ball_riesz {
        return Err(ShapeError::Degenerate(
            "the necklace does not lower the Riesz energy; no flip point exists".into(),
        ));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while !base.at_epsilon(hi).necklace_wins {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(ShapeError::Degenerate("no flip found below 1e300".into()));
        }
    }
    let mut steps = 0;
    while hi - lo > 1e-12 * hi && steps < 200 {
        let mid = 0.5 * (lo + hi);
        if base.at_epsilon(mid).necklace_wins {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    let eps = 0.5 * (lo + hi);
    let (eb, vb) = unit_ball_references(dim, alpha);
    let k = base.ball_count as f64;
    let n = dim as f64;
    let cross = cross_sum(dim, alpha, base.ball_count, base.gap);
    let epsilon_analytic = (k.powf(-2.0 / n) * eb - eb) / (vb - k.powf(-alpha / n) * vb - cross);
    Ok(FlipPoint {
        bracket: (lo, hi),
        epsilon_numeric: eps,
        epsilon_analytic,
        bisection_steps: steps,
        at_flip: base.at_epsilon(eps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> NecklaceOptions {
        NecklaceOptions {
            cells_per_axis: 160,
            side: 4.0,
            solver: SolverOptions::default(),
        }
    }

    #[test]
    fn zero_epsilon_ball_wins() {
        let b = necklace_bounds(0.4, 0.0, 2, 1.5, &coarse()).unwrap();
        assert_eq!(b.ball_count, 6);
        assert!(!b.necklace_wins);
        assert!(b.in_regime);
    }

    #[test]
    fn flip_point_exists() {
        let f = necklace_flip_point(0.4, 2, 1.5, &coarse()).unwrap();
        assert!(f.epsilon_numeric.is_finite() && f.epsilon_numeric > 0.0);
        assert!(f.at_flip.at_epsilon(f.bracket.1).necklace_wins);
        assert!(!f.at_flip.at_epsilon(f.bracket.0).necklace_wins);
    }

    #[test]
    fn energy_term_shrinks_with_k() {
        let e = |k: usize| analytic_necklace_value(2, 1.5, 0.0, k, 1.0);
        let (e4, e16) = (e(4), e(16));
        assert!(e16.abs() < e4.abs());
        assert!((e4 / e16 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_delta() {
        assert!(matches!(
            necklace_bounds(0.8, 0.0, 2, 1.5, &coarse()),
            Err(ShapeError::Degenerate(_))
        ));
    }
}
