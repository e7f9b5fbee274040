//! Boundary normal derivatives of solved fields and the density diagnostic.

use serde::{Deserialize, Serialize};

use super::solvers::{EigenSolution, ScalarField, TorsionSolution};
use crate::error::{Result, ShapeError};
use crate::geometry::{GridDomain, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldSource {
    Torsion,
    Eigen,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxSample {
    pub cell: usize,
    /// Estimated boundary location: the cell center moved half a cell along the normal.
    pub point: Point,
    pub normal: Point,
    /// `−∂f/∂n`.
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFlux {
    pub source: FieldSource,
    pub samples: Vec<FluxSample>,
    /// Boundary cells whose sampling stencil left the domain.
    pub dropped: Vec<usize>,
}

impl BoundaryFlux {
    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.q).collect()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values())
    }

    /// Standard deviation divided by the mean.
    pub fn relative_spread(&self) -> f64 {
        let v = self.values();
        std_dev(&v) / mean(&v).abs()
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Multilinear interpolation of per-cell values at a continuous grid
/// coordinate (cell centers at integers). `None` when any stencil cell lies
/// outside the domain.
fn interpolate(dom: &GridDomain, values: &[f64], g: &[f64; 3]) -> Option<f64> {
    let spec = dom.spec();
    let dim = spec.dim();
    let mut base = [0i64; 3];
    let mut frac = [0.0; 3];
    for a in 0..dim {
        let f = g[a].floor();
        base[a] = f as i64;
        frac[a] = g[a] - f;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << dim) {
        let mut c = base;
        let mut wgt = 1.0;
        for a in 0..dim {
            if corner >> a & 1 == 1 {
                c[a] += 1;
                wgt *= frac[a];
            } else {
                wgt *= 1.0 - frac[a];
            }
        }
        let idx = spec.index_signed(c)?;
        if !dom.is_occupied(idx) {
            if wgt == 0.0 {
                continue;
            }
            return None;
        }
        acc += wgt * values[idx];
    }
    Some(acc)
}

/// Central-difference gradient in cell units, zero outside the domain.
fn gradient_field(dom: &GridDomain, f: &ScalarField) -> Vec<Vec<f64>> {
    let spec = dom.spec();
    (0..spec.dim())
        .map(|a| {
            (0..spec.len())
                .map(|i| {
                    if !dom.is_occupied(i) {
                        return 0.0;
                    }
                    let up = spec.neighbor(i, a, true).map_or(0.0, |j| f.values[j]);
                    let dn = spec.neighbor(i, a, false).map_or(0.0, |j| f.values[j]);
                    0.5 * (up - dn)
                })
                .collect()
        })
        .collect()
}

fn unit(v: [f64; 3]) -> Option<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    (n > 0.0 && n.is_finite()).then(|| v.map(|x| x / n))
}

/// Sampling depth in cells; grows slowly with resolution so the fitted
/// profile spans a fixed-ish fraction of the domain.
pub fn flux_depth(cells_per_axis: usize) -> f64 {
    (0.3 * (cells_per_axis as f64).sqrt()).max(2.0)
}

/// Outward normal derivative `q = −∂f/∂n` at every boundary cell.
///
/// The normal comes from the field gradient, re-sampled one depth inside the
/// domain. The field is sampled at depths `d, 2d, 3d` along the inward normal,
/// a quadratic is fitted through the three values and differentiated at the
/// face location half a cell outside the cell center.
pub fn boundary_flux(dom: &GridDomain, f: &ScalarField, source: FieldSource) -> BoundaryFlux {
    let spec = dom.spec();
    let dim = spec.dim();
    let h = spec.spacing();
    let grad = gradient_field(dom, f);
    let d0 = flux_depth(spec.cells_per_axis());
    let mut samples = Vec::new();
    let mut dropped = Vec::new();
    for b in dom.boundary_cells() {
        let c = spec.coords(b);
        let gc = [c[0] as f64, c[1] as f64, c[2] as f64];
        let mut g = [0.0; 3];
        for a in 0..dim {
            g[a] = -grad[a][b];
        }
        let mut exposed = [0.0; 3];
        for a in 0..dim {
            if !dom.neighbor_occupied(b, a, true) {
                exposed[a] += 1.0;
            }
            if !dom.neighbor_occupied(b, a, false) {
                exposed[a] -= 1.0;
            }
        }
        let Some(mut n) = unit(g).or_else(|| unit(exposed)) else {
            dropped.push(b);
            continue;
        };
        let mut probe = [0.0; 3];
        for a in 0..dim {
            probe[a] = gc[a] - d0 * n[a];
        }
        let mut g2 = [0.0; 3];
        let mut ok = true;
        for a in 0..dim {
            match interpolate(dom, &grad[a], &probe) {
                Some(v) => g2[a] = -v,
                None => ok = false,
            }
        }
        if ok {
            if let Some(n2) = unit(g2) {
                n = n2;
            }
        }
        let mut d = d0;
        let mut vals = None;
        while d >= 1.0 {
            let at = |k: f64| {
                let mut p = [0.0; 3];
                for a in 0..dim {
                    p[a] = gc[a] - k * d * n[a];
                }
                interpolate(dom, &f.values, &p)
            };
            if let (Some(v1), Some(v2), Some(v3)) = (at(1.0), at(2.0), at(3.0)) {
                vals = Some((v1, v2, v3));
                break;
            }
            d *= 0.5;
        }
        let Some((v1, v2, v3)) = vals else {
            dropped.push(b);
            continue;
        };
        // quadratic through s = −d, −2d, −3d, differentiated at s = +½
        let slope = (v1 - v3) / (2.0 * d);
        let curv = (v1 - 2.0 * v2 + v3) / (2.0 * d * d);
        let deriv = slope + 2.0 * curv * (0.5 + 2.0 * d);
        let mut point = spec.center(b);
        for a in 0..dim {
            point[a] += 0.5 * h * n[a];
        }
        samples.push(FluxSample {
            cell: b,
            point,
            normal: n,
            q: -deriv / h,
        });
    }
    BoundaryFlux {
        source,
        samples,
        dropped,
    }
}

pub fn torsion_flux(dom: &GridDomain, sol: &TorsionSolution) -> BoundaryFlux {
    boundary_flux(dom, &sol.w, FieldSource::Torsion)
}

pub fn eigen_flux(dom: &GridDomain, sol: &EigenSolution) -> BoundaryFlux {
    boundary_flux(dom, &sol.u, FieldSource::Eigen)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityScan {
    pub rho: f64,
    pub samples: Vec<(Point, f64)>,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// `|Ω ∩ B_ρ(x₀)| / |B_ρ|` counted on cell centers. `x₀` is the boundary point
/// of each boundary cell: its center moved half a cell along the mean outward
/// direction of its exposed faces.
pub fn density_estimate_scan(dom: &GridDomain, rho: f64) -> Result<DensityScan> {
    let spec = dom.spec();
    let h = spec.spacing();
    if rho < 4.0 * h {
        return Err(ShapeError::Resolution(format!(
            "rho = {rho} is below four cells (4h = {})",
            4.0 * h
        )));
    }
    let dim = spec.dim();
    let r = (rho / h).ceil() as i64 + 1;
    let r2 = (rho / h).powi(2);
    let mut samples = Vec::new();
    for b in dom.boundary_cells() {
        let c = spec.coords(b);
        let mut out = [0.0; 3];
        for a in 0..dim {
            if !dom.neighbor_occupied(b, a, true) {
                out[a] += 1.0;
            }
            if !dom.neighbor_occupied(b, a, false) {
                out[a] -= 1.0;
            }
        }
        let n = unit(out).unwrap_or([0.0; 3]);
        let mut inside = 0usize;
        let mut total = 0usize;
        let zr = if dim == 3 { r } else { 0 };
        for z in -zr..=zr {
            for y in -r..=r {
                for x in -r..=r {
                    let o = [x, y, z];
                    let d2: f64 = (0..dim).map(|a| (o[a] as f64 - 0.5 * n[a]).powi(2)).sum();
                    if d2 > r2 {
                        continue;
                    }
                    total += 1;
                    let t = [c[0] as i64 + x, c[1] as i64 + y, c[2] as i64 + z];
                    if spec.index_signed(t).is_some_and(|j| dom.is_occupied(j)) {
                        inside += 1;
                    }
                }
            }
        }
        let mut p = spec.center(b);
        for a in 0..dim {
            p[a] += 0.5 * h * n[a];
        }
        samples.push((p, inside as f64 / total as f64));
    }
    let min_ratio = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let max_ratio = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(DensityScan {
        rho,
        samples,
        min_ratio,
        max_ratio,
    })
}
