//! Riesz interaction: potential, energy, gradient and the difference bound.

pub mod convolution;
pub mod gradient;
pub mod kernel;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShapeError};
use crate::fields::ScalarField;
use crate::geometry::{measure, unit_ball_volume, GridDomain};

pub use convolution::{convolve_direct, operator_for, RieszOperator};
pub use gradient::riesz_potential_gradient;
pub use kernel::{check_alpha, RieszKernelTable, CACHE_ENV};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszPotentialField {
    /// `v_Ω` on every cell of the box.
    pub v: ScalarField,
    /// `V = h^N Σ_Ω v`.
    pub energy: f64,
}

fn energy_from(dom: &GridDomain, v: &[f64]) -> f64 {
    dom.occupied().map(|i| v[i]).sum::<f64>() * dom.spec().cell_volume()
}

pub fn riesz_potential(dom: &GridDomain, alpha: f64) -> Result<RieszPotentialField> {
    check_alpha(dom.dim(), alpha)?;
    let spec = dom.spec();
    if dom.is_empty() {
        return Ok(RieszPotentialField {
            v: ScalarField::zeros(spec.clone()),
            energy: 0.0,
        });
    }
    let op = operator_for(spec, alpha)?;
    let v = op.convolve(dom.mask());
    let energy = energy_from(dom, &v);
    Ok(RieszPotentialField {
        v: ScalarField {
            spec: spec.clone(),
            values: v,
        },
        energy,
    })
}

pub fn riesz_energy(dom: &GridDomain, alpha: f64) -> Result<f64> {
    Ok(riesz_potential(dom, alpha)?.energy)
}

/// Pairwise reference evaluation, `O(M²)`.
pub fn riesz_potential_direct(dom: &GridDomain, alpha: f64) -> Result<RieszPotentialField> {
    check_alpha(dom.dim(), alpha)?;
    let table = RieszKernelTable::load_or_build(dom.spec(), alpha)?;
    let v = convolve_direct(&table, dom);
    let energy = energy_from(dom, &v);
    Ok(RieszPotentialField {
        v: ScalarField {
            spec: dom.spec().clone(),
            values: v,
        },
        energy,
    })
}

/// `∫_B |z|^{α−N} dz` over the unit-measure ball: `N ω_N r^α / α`, `r = ω_N^{−1/N}`.
pub fn c0_constant(dim: usize, alpha: f64) -> Result<f64> {
    if dim != 2 && dim != 3 {
        return Err(ShapeError::Domain(format!("dimension must be 2 or 3, got {dim}")));
    }
    if !(alpha > 0.0) || alpha >= dim as f64 {
        if alpha <= 0.0 && alpha > -f64::MIN_POSITIVE {
            return Err(ShapeError::Overflow("C0 diverges as alpha -> 0".into()));
        }
        return Err(ShapeError::Domain(format!("alpha must lie in (0, {dim}), got {alpha}")));
    }
    let w = unit_ball_volume(dim);
    let r = w.powf(-1.0 / dim as f64);
    let c = dim as f64 * w * r.powf(alpha) / alpha;
    if !c.is_finite() {
        return Err(ShapeError::Overflow(format!("C0 overflows at alpha = {alpha:e}")));
    }
    Ok(c)
}

/// `max(C0, 1)`; the second value reports whether the clamp was active.
pub fn c0_clamped(dim: usize, alpha: f64) -> Result<(f64, bool)> {
    let c = c0_constant(dim, alpha)?;
    if c < 1.0 {
        log::info!("C0({dim}, {alpha}) = {c:.6} < 1, using 1");
        return Ok((1.0, true));
    }
    Ok((c, false))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferenceBound {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
    pub c0: f64,
    pub clamped: bool,
}

/// `V(b) − V(a) ≤ C0 |a Δ b| (|a|^{α/N} + |b|^{α/N})`.
pub fn km_difference_bound_check(a: &GridDomain, b: &GridDomain, alpha: f64) -> Result<DifferenceBound> {
    a.spec().ensure_same(b.spec())?;
    let dim = a.dim();
    let (c0, clamped) = c0_clamped(dim, alpha)?;
    let lhs = riesz_energy(b, alpha)? - riesz_energy(a, alpha)?;
    let sym = measure(&a.symmetric_difference(b)?);
    let e = alpha / dim as f64;
    let rhs = c0 * sym * (measure(a).powf(e) + measure(b).powf(e));
    Ok(DifferenceBound {
        lhs,
        rhs,
        ok: lhs <= rhs + 1e-6,
        c0,
        clamped,
    })
}

/// `V_α` of the continuum ball of radius `r`, from the distribution of the
/// distance between two uniform points: `V = |B|² E[d^{α−N}]`.
pub fn ball_riesz_energy(dim: usize, alpha: f64, r: f64) -> Result<f64> {
    check_alpha(dim, alpha)?;
    let vol = unit_ball_volume(dim) * r.powi(dim as i32);
    let mean = match dim {
        2 => {
            // d = 2r cos φ; with t = cos^α φ the singular weight integrates out
            let gl = kernel::gauss_legendre_01(32);
            let g = |t: f64| {
                let phi = t.powf(1.0 / alpha).min(1.0).acos();
                phi - phi.sin() * phi.cos()
            };
            // t = u⁴ near 0 and t = 1 − s² near 1 smooth both endpoints
            let panels = 32;
            let u_max = 0.5f64.powf(0.25);
            let s_max = 0.5f64.sqrt();
            let mut j = 0.0;
            for k in 0..panels {
                let a = k as f64 / panels as f64;
                let w = 1.0 / panels as f64;
                for &(x, wx) in &gl {
                    let u = u_max * (a + w * x);
                    j += u_max * w * wx * 4.0 * u.powi(3) * g(u.powi(4));
                    let s = s_max * (a + w * x);
                    j += s_max * w * wx * 2.0 * s * g(1.0 - s * s);
                }
            }
            j /= alpha;
            // E[d^{α−2}] = (2r)^{α−2} (16/π) J
            (2.0 * r).powf(alpha - 2.0) * 16.0 / std::f64::consts::PI * j
        }
        3 => {
            // p(d) = 3d²/r³ − 9d³/(4r⁴) + 3d⁵/(16r⁶) on [0, 2r]
            let q = alpha - 3.0;
            let d = 2.0 * r;
            3.0 / r.powi(3) * d.powf(q + 3.0) / (q + 3.0)
                - 9.0 / (4.0 * r.powi(4)) * d.powf(q + 4.0) / (q + 4.0)
                + 3.0 / (16.0 * r.powi(6)) * d.powf(q + 6.0) / (q + 6.0)
        }
        _ => return Err(ShapeError::Domain(format!("dimension must be 2 or 3, got {dim}"))),
    };
    Ok(vol * vol * mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_ball, BallSpec, GridSpec};
    use std::f64::consts::PI;

    #[test]
    fn ball_energy_flat_kernel_limits() {
        // α → N: kernel 1, V = |B|²
        let v2 = ball_riesz_energy(2, 2.0 - 1e-12, 1.0).unwrap();
        assert!((v2 - PI * PI).abs() < 1e-8, "{v2}");
        let v3 = ball_riesz_energy(3, 3.0 - 1e-12, 1.0).unwrap();
        let b = 4.0 * PI / 3.0;
        assert!((v3 - b * b).abs() < 1e-8);
    }

    #[test]
    fn ball_energy_3d_coulomb() {
        // ∫∫_{B×B} |x − y|^{-1} = 32π²/15 for the unit ball
        let v = ball_riesz_energy(3, 2.0, 1.0).unwrap();
        assert!((v - 32.0 * PI * PI / 15.0).abs() < 1e-12);
    }

    #[test]
    fn ball_energy_2d_logarithmic_check() {
        // α = 1: ∫∫_{B×B} |x − y|^{-1} = 16π/3 for the unit disk
        let v = ball_riesz_energy(2, 1.0, 1.0).unwrap();
        assert!((v - 16.0 * PI / 3.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn c0_values() {
        let c = c0_constant(2, 1.0).unwrap();
        assert!((c - 2.0 * PI.sqrt()).abs() < 1e-12);
        let w3 = 4.0 * PI / 3.0;
        let r = (3.0 / (4.0 * PI)).powf(1.0 / 3.0);
        assert!((c0_constant(3, 2.0).unwrap() - 3.0 * w3 * r * r / 2.0).abs() < 1e-12);
        assert!(matches!(c0_constant(2, 1e-320), Err(ShapeError::Overflow(_))));
    }

    #[test]
    fn empty_domain_has_zero_potential() {
        let spec = GridSpec::centered(2, 16, 1.0).unwrap();
        let p = riesz_potential(&GridDomain::empty(spec), 1.0).unwrap();
        assert_eq!(p.energy, 0.0);
        assert!(p.v.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fft_matches_direct_sum() {
        let spec = GridSpec::centered(3, 12, 1.2).unwrap();
        let dom = make_ball(&spec, &BallSpec::new([0.05, 0.0, -0.02], 0.4)).unwrap();
        let a = riesz_potential(&dom, 1.7).unwrap();
        let b = riesz_potential_direct(&dom, 1.7).unwrap();
        assert!(((a.energy - b.energy) / b.energy).abs() < 1e-12);
        let vmax = b.v.values.iter().cloned().fold(0.0, f64::max);
        for (x, y) in a.v.values.iter().zip(&b.v.values) {
            assert!((x - y).abs() <= 1e-12 * vmax);
        }
    }

    #[test]
    fn disk_energy_close_to_continuum() {
        let spec = GridSpec::centered(2, 128, 2.4).unwrap();
        let dom = make_ball(&spec, &BallSpec::new([0.0; 3], 1.0)).unwrap();
        let v = riesz_energy(&dom, 1.0).unwrap();
        let exact = 16.0 * PI / 3.0;
        assert!((v - exact).abs() / exact < 0.01, "{v}");
    }
}
