//! Ball references and the scale-invariant deficits.

use serde::{Deserialize, Serialize};

use super::{first_eigenvalue, inequality_slack, riesz_energy_cached, torsion_energy};
use crate::error::{Result, ShapeError};
use crate::fields::SolverOptions;
use crate::geometry::{fraenkel_asymmetry, measure, unit_ball_volume, GridDomain};
use crate::riesz::ball_riesz_energy;

/// First zero of `J_0`.
pub const J01: f64 = 2.404_825_557_695_773;

/// Asymmetry below which the deficit ratio is not reported.
pub const RATIO_THRESHOLD: f64 = 0.02;

/// `E(B_r) = −ω_N r^{N+2} / (2N(N+2))`.
pub fn ball_torsion_energy(dim: usize, r: f64) -> f64 {
    let n = dim as f64;
    -unit_ball_volume(dim) * r.powf(n + 2.0) / (2.0 * n * (n + 2.0))
}

/// `λ₁(B_r)`: `j₀₁²/r²` in the plane, `π²/r²` in space.
pub fn ball_eigenvalue(dim: usize, r: f64) -> Result<f64> {
    match dim {
        2 => Ok(J01 * J01 / (r * r)),
        3 => Ok(std::f64::consts::PI.powi(2) / (r * r)),
        _ => Err(ShapeError::Domain(format!("dimension must be 2 or 3, got {dim}"))),
    }
}

fn unit_measure_radius(dim: usize) -> f64 {
    unit_ball_volume(dim).powf(-1.0 / dim as f64)
}

/// `E(B)|B|^{−(N+2)/N}`, independent of the ball.
pub fn saint_venant_reference(dim: usize) -> f64 {
    ball_torsion_energy(dim, unit_measure_radius(dim))
}

/// `|B|^{2/N} λ₁(B)`.
pub fn faber_krahn_reference(dim: usize) -> f64 {
    ball_eigenvalue(dim, unit_measure_radius(dim)).unwrap_or(f64::NAN)
}

/// `V_α(B)|B|^{−(N+α)/N}`.
pub fn riesz_reference(dim: usize, alpha: f64) -> Result<f64> {
    ball_riesz_energy(dim, alpha, unit_measure_radius(dim))
}

pub(crate) fn saint_venant_value(dim: usize, energy: f64, m: f64) -> f64 {
    let n = dim as f64;
    energy * m.powf(-(n + 2.0) / n) - saint_venant_reference(dim)
}

pub(crate) fn faber_krahn_value(dim: usize, lambda1: f64, m: f64) -> f64 {
    m.powf(2.0 / dim as f64) * lambda1 - faber_krahn_reference(dim)
}

/// Balls maximize `V`, so the deficit is reference minus value.
pub(crate) fn riesz_value(dim: usize, alpha: f64, v: f64, m: f64) -> Result<f64> {
    let n = dim as f64;
    Ok(riesz_reference(dim, alpha)? - v * m.powf(-(n + alpha) / n))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeficitReport {
    pub name: String,
    pub deficit: f64,
    /// Deficit divided by the magnitude of the ball reference.
    pub relative: f64,
    pub asymmetry: f64,
    /// `deficit / A²` when `A > 0.02`.
    pub ratio: Option<f64>,
    pub ok: bool,
}

fn report(name: &str, deficit: f64, reference: f64, asymmetry: f64) -> DeficitReport {
    DeficitReport {
        name: name.to_string(),
        deficit,
        relative: deficit / reference.abs(),
        asymmetry,
        ratio: (asymmetry > RATIO_THRESHOLD).then(|| deficit / (asymmetry * asymmetry)),
        ok: deficit >= -inequality_slack(reference),
    }
}

/// `E(Ω)|Ω|^{−1−2/N} − E(B)|B|^{−1−2/N}`.
pub fn saint_venant_deficit(dom: &GridDomain, opts: &SolverOptions) -> Result<DeficitReport> {
    let e = torsion_energy(dom, opts)?;
    let a = fraenkel_asymmetry(dom)?.value;
    let d = saint_venant_value(dom.dim(), e, measure(dom));
    Ok(report("saint_venant", d, saint_venant_reference(dom.dim()), a))
}

/// `|Ω|^{2/N}λ₁(Ω) − |B|^{2/N}λ₁(B)`.
pub fn faber_krahn_deficit(dom: &GridDomain, opts: &SolverOptions) -> Result<DeficitReport> {
    let l = first_eigenvalue(dom, opts)?;
    let a = fraenkel_asymmetry(dom)?.value;
    let d = faber_krahn_value(dom.dim(), l, measure(dom));
    Ok(report("faber_krahn", d, faber_krahn_reference(dom.dim()), a))
}

/// `V_α(B)|B|^{−(N+α)/N} − V_α(Ω)|Ω|^{−(N+α)/N}`.
pub fn riesz_deficit(dom: &GridDomain, alpha: f64) -> Result<DeficitReport> {
    let v = riesz_energy_cached(dom, alpha)?;
    let a = fraenkel_asymmetry(dom)?.value;
    let d = riesz_value(dom.dim(), alpha, v, measure(dom))?;
    Ok(report("riesz", d, riesz_reference(dom.dim(), alpha)?, a))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KohlerJobin {
    /// `λ₁(Ω)/λ₁(B)`.
    pub lhs: f64,
    /// `(E(B)/E(Ω))^{2/(N+2)}`.
    pub rhs: f64,
    pub ok: bool,
}

/// Scale-invariant, so the unit ball serves as `B`.
pub fn kohler_jobin_check(dom: &GridDomain, opts: &SolverOptions) -> Result<KohlerJobin> {
    let dim = dom.dim();
    let l = first_eigenvalue(dom, opts)?;
    let e = torsion_energy(dom, opts)?;
    let lhs = l / ball_eigenvalue(dim, 1.0)?;
    let rhs = (ball_torsion_energy(dim, 1.0) / e).powf(2.0 / (dim as f64 + 2.0));
    Ok(KohlerJobin {
        lhs,
        rhs,
        ok: lhs >= rhs - inequality_slack(rhs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_ball, make_box, make_ellipsoid_with_measure, BallSpec, GridSpec};
    use std::f64::consts::PI;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn references() {
        assert!((ball_torsion_energy(2, 1.0) + PI / 16.0).abs() < 1e-15);
        assert!((saint_venant_reference(2) + 1.0 / (16.0 * PI)).abs() < 1e-15);
        assert!((faber_krahn_reference(2) - PI * J01 * J01).abs() < 1e-12);
        assert!((ball_eigenvalue(3, 2.0).unwrap() - PI * PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn ball_deficits_vanish() {
        let spec = GridSpec::centered(2, 160, 1.4).unwrap();
        let dom = make_ball(&spec, &BallSpec::with_measure(2, [0.0; 3], 1.0)).unwrap();
        let sv = saint_venant_deficit(&dom, &opts()).unwrap();
        let fk = faber_krahn_deficit(&dom, &opts()).unwrap();
        let rz = riesz_deficit(&dom, 1.0).unwrap();
        for d in [&sv, &fk, &rz] {
            assert!(d.relative.abs() < 1e-2, "{d:?}");
            assert!(d.ratio.is_none());
        }
        let kj = kohler_jobin_check(&dom, &opts()).unwrap();
        assert!((kj.lhs / kj.rhs - 1.0).abs() < 1e-2, "{kj:?}");
    }

    #[test]
    fn ellipse_deficits_positive() {
        let spec = GridSpec::centered(2, 128, 2.0).unwrap();
        let dom = make_ellipsoid_with_measure(&spec, [0.0; 3], 1.0, 2.0).unwrap();
        for d in [
            saint_venant_deficit(&dom, &opts()).unwrap(),
            faber_krahn_deficit(&dom, &opts()).unwrap(),
            riesz_deficit(&dom, 1.5).unwrap(),
        ] {
            assert!(d.deficit > 0.0 && d.ok, "{d:?}");
            assert!(d.ratio.unwrap() > 0.0);
        }
    }

    #[test]
    fn square_is_strict_for_kohler_jobin() {
        let spec = GridSpec::centered(2, 128, 1.4).unwrap();
        let dom = make_box(&spec, &[-0.5, -0.5], &[0.5, 0.5]).unwrap();
        let kj = kohler_jobin_check(&dom, &opts()).unwrap();
        assert!(kj.ok && kj.lhs > kj.rhs * 1.001, "{kj:?}");
    }
}
