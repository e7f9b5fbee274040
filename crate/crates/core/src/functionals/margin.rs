//! The margin function `u(t) = (P(1 − t^{N+2}) − Q(1 − t^{N+α})) / (1 − t^N)`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShapeError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub inf_value: f64,
    pub argmin: f64,
}

/// `(1 − t^a)/(1 − t^N)` with its limit `a/N` at `t = 1`.
fn ratio(t: f64, a: f64, n: f64) -> f64 {
    if t >= 1.0 {
        return a / n;
    }
    if t <= 0.0 {
        return 1.0;
    }
    let l = t.ln();
    (a * l).exp_m1() / (n * l).exp_m1()
}

fn u(t: f64, p: f64, q: f64, n: f64, alpha: f64) -> f64 {
    p * ratio(t, n + 2.0, n) - q * ratio(t, n + alpha, n)
}

/// Minimum of `u` on the uniform grid `t_i = i/grid`, `i = 0..=grid`, refined
/// by golden-section search around the best node.
pub fn penalty_margin(p: f64, q: f64, dim: usize, alpha: f64, grid: usize) -> Result<Margin> {
    if !(p > 0.0) || !(q >= 0.0) {
        return Err(ShapeError::Domain(format!("need P > 0 and Q >= 0, got P = {p}, Q = {q}")));
    }
    if grid < 1000 {
        return Err(ShapeError::Domain(format!("grid must have at least 1000 intervals, got {grid}")));
    }
    let n = dim as f64;
    let f = |t: f64| u(t, p, q, n, alpha);
    let mut best = (f(0.0), 0usize);
    for i in 1..=grid {
        let v = f(i as f64 / grid as f64);
        if v < best.0 {
            best = (v, i);
        }
    }
    let step = 1.0 / grid as f64;
    let mut lo = (best.1 as f64 - 1.0).max(0.0) * step;
    let mut hi = (best.1 as f64 + 1.0).min(grid as f64) * step;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let (mut inf_value, mut argmin) = (best.0, best.1 as f64 * step);
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v < inf_value {
            inf_value = v;
            argmin = x;
        }
    }
    Ok(Margin { inf_value, argmin })
}

/// `u(1) = P(N+2)/N − Q(N+α)/N`.
pub fn margin_limit(p: f64, q: f64, dim: usize, alpha: f64) -> f64 {
    let n = dim as f64;
    p * (n + 2.0) / n - q * (n + alpha) / n
}

/// `(m_f, M_g)`: minimum of `(1 − t^{N+2})/(1 − t^N)` and maximum of
/// `(1 − t^{N+α})/(1 − t^N)` over `[0, 1]`, on a grid of `grid` intervals.
pub fn margin_constants(dim: usize, alpha: f64, grid: usize) -> (f64, f64) {
    let n = dim as f64;
    let mut mf = f64::INFINITY;
    let mut mg = f64::NEG_INFINITY;
    for i in 0..=grid {
        let t = i as f64 / grid as f64;
        mf = mf.min(ratio(t, n + 2.0, n));
        mg = mg.max(ratio(t, n + alpha, n));
    }
    (mf, mg)
}

/// Value of `u` at a single `t ∈ [0, 1]`.
pub fn margin_value(t: f64, p: f64, q: f64, dim: usize, alpha: f64) -> f64 {
    u(t, p, q, dim as f64, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_torsion_margin() {
        let m = penalty_margin(1.3, 0.0, 2, 1.0, 1000).unwrap();
        assert!((m.inf_value - 1.3).abs() < 1e-12 && m.argmin == 0.0);
        assert!((margin_value(1.0, 1.3, 0.0, 2, 1.0) - 2.6).abs() < 1e-15);
    }

    #[test]
    fn limit_is_continuous() {
        let (p, q) = (0.8, 0.3);
        let near = margin_value(1.0 - 1e-9, p, q, 3, 2.5);
        assert!((near - margin_limit(p, q, 3, 2.5)).abs() < 1e-6);
    }

    #[test]
    fn small_q_keeps_half_margin() {
        let (mf, mg) = margin_constants(2, 1.5, 100_000);
        assert!((mf - 1.0).abs() < 1e-12);
        let p = 2.0;
        let q = p * mf / (2.0 * mg);
        let m = penalty_margin(p, q, 2, 1.5, 10_000).unwrap();
        assert!(m.inf_value >= p * mf / 2.0 - 1e-12);
    }

    #[test]
    fn input_ranges() {
        assert!(penalty_margin(0.0, 0.0, 2, 1.0, 1000).is_err());
        assert!(penalty_margin(1.0, -0.1, 2, 1.0, 1000).is_err());
        assert!(penalty_margin(1.0, 0.1, 2, 1.0, 999).is_err());
    }
}
