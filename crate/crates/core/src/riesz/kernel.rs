//! Cell-pair kernel table for `|x − y|^{α−N}`.
//!
//! The table stores dimensionless weights `K(o)` on the offset lattice. The
//! discrete potential is `v_i = h^α Σ_j K(i − j) χ_j`. For `|o|_∞ ≥ 2` the
//! weight is the point kernel `|o|^{α−N}`. For the coincident cell and its
//! `3^N − 1` neighbours it is the exact average of the kernel over a pair of
//! unit cells,
//!
//! `K(o) = ∫ |z|^{α−N} Π_a (1 − |z_a − o_a|)_+ dz`,
//!
//! evaluated by Gauss–Legendre quadrature on the unit cubes of the support.
//! Cubes with a corner at the singularity use pyramid (Duffy) coordinates, in
//! which the radial integral is done in closed form.

use std::path::{Path, PathBuf};

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShapeError};
use crate::geometry::GridSpec;

pub const CACHE_ENV: &str = "SHAPELAB_KERNEL_CACHE";
pub const TABLE_FORMAT_VERSION: u32 = 1;
/// Gauss–Legendre degree used for the near-offset integrals.
pub const DEFAULT_ORDER: usize = 20;

/// Nodes and weights of the Gauss–Legendre rule on `[0, 1]`.
pub(crate) fn gauss_legendre_01(degree: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(degree.try_into().expect("degree > 0"));
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

fn tent(x: f64) -> f64 {
    (1.0 - x.abs()).max(0.0)
}

/// Multiplies the polynomial `p` (coefficients by degree) by `a + b t`.
fn poly_mul_linear(p: &mut Vec<f64>, a: f64, b: f64) {
    let mut out = vec![0.0; p.len() + 1];
    for (k, &c) in p.iter().enumerate() {
        out[k] += a * c;
        out[k + 1] += b * c;
    }
    *p = out;
}

/// Integral of the cell-pair weight over the unit cube with a corner at the
/// origin and extending in direction `sign`.
fn singular_cube(dim: usize, alpha: f64, o: &[i64; 3], sign: &[f64; 3], gl: &[(f64, f64)]) -> f64 {
    let p = alpha - dim as f64;
    let mut total = 0.0;
    for lead in 0..dim {
        let others: Vec<usize> = (0..dim).filter(|&a| a != lead).collect();
        let m = others.len();
        let count = gl.len().pow(m as u32);
        for idx in 0..count {
            let mut s = [0.0; 3];
            let mut w = 1.0;
            let mut r = idx;
            for slot in s.iter_mut().take(m) {
                let (x, wx) = gl[r % gl.len()];
                *slot = x;
                w *= wx;
                r /= gl.len();
            }
            // ray direction (1 on the lead axis, s on the others)
            let mut dir = [0.0; 3];
            dir[lead] = 1.0;
            for (j, &a) in others.iter().enumerate() {
                dir[a] = s[j];
            }
            let norm2: f64 = dir.iter().take(dim).map(|d| d * d).sum();
            let mut poly = vec![1.0];
            for a in 0..dim {
                // tent factor along the ray, y_a = t·dir_a
                if o[a] == 0 {
                    poly_mul_linear(&mut poly, 1.0, -dir[a]);
                } else {
                    debug_assert!((o[a] as f64 - sign[a]).abs() < 0.5);
                    poly_mul_linear(&mut poly, 0.0, dir[a]);
                }
            }
            let radial: f64 = poly
                .iter()
                .enumerate()
                .map(|(k, c)| c / (alpha + k as f64))
                .sum();
            total += w * norm2.powf(0.5 * p) * radial;
        }
    }
    total
}

fn regular_cube(dim: usize, alpha: f64, o: &[i64; 3], lo: &[i64; 3], gl: &[(f64, f64)]) -> f64 {
    let p = alpha - dim as f64;
    let count = gl.len().pow(dim as u32);
    let mut total = 0.0;
    for idx in 0..count {
        let mut r = idx;
        let mut w = 1.0;
        let mut z = [0.0; 3];
        for a in 0..dim {
            let (x, wx) = gl[r % gl.len()];
            r /= gl.len();
            z[a] = lo[a] as f64 + x;
            w *= wx;
        }
        let mut f = 1.0;
        let mut n2 = 0.0;
        for a in 0..dim {
            f *= tent(z[a] - o[a] as f64);
            n2 += z[a] * z[a];
        }
        total += w * f * n2.powf(0.5 * p);
    }
    total
}

/// Exact average of `|x − y|^{α−N}` over `x ∈ C_0`, `y ∈ C_o` for unit cells
/// with `|o|_∞ ≤ 1`.
pub fn unit_cell_pair_integral(dim: usize, alpha: f64, o: &[i64; 3], order: usize) -> f64 {
    let gl = gauss_legendre_01(order);
    let mut total = 0.0;
    for corner in 0..(1usize << dim) {
        let mut lo = [0i64; 3];
        let mut sign = [1.0; 3];
        let mut at_origin = true;
        for a in 0..dim {
            lo[a] = o[a] - 1 + (corner >> a & 1) as i64;
            if lo[a] == 0 {
                sign[a] = 1.0;
            } else if lo[a] == -1 {
                sign[a] = -1.0;
            } else {
                at_origin = false;
            }
        }
        total += if at_origin {
            singular_cube(dim, alpha, o, &sign, &gl)
        } else {
            regular_cube(dim, alpha, o, &lo, &gl)
        };
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszKernelTable {
    pub version: u32,
    pub dim: usize,
    pub alpha: f64,
    pub spacing: f64,
    pub cells_per_axis: usize,
    pub order: usize,
    /// `K(0)`.
    pub self_cell: f64,
    /// `K(o)` for `0 < |o|_∞ ≤ 1`, offsets padded to three entries.
    pub near: Vec<([i64; 3], f64)>,
}

pub fn check_alpha(dim: usize, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < dim as f64) {
        return Err(ShapeError::Domain(format!(
            "alpha must lie in (0, {dim}), got {alpha}"
        )));
    }
    Ok(())
}

impl RieszKernelTable {
    pub fn build(spec: &GridSpec, alpha: f64, order: usize) -> Result<Self> {
        let dim = spec.dim();
        check_alpha(dim, alpha)?;
        let mut near = Vec::new();
        let mut self_cell = 0.0;
        for k in 0..3usize.pow(dim as u32) {
            let mut o = [0i64; 3];
            let mut r = k;
            for slot in o.iter_mut().take(dim) {
                *slot = (r % 3) as i64 - 1;
                r /= 3;
            }
            let v = unit_cell_pair_integral(dim, alpha, &o, order);
            if o == [0; 3] {
                self_cell = v;
            } else {
                near.push((o, v));
            }
        }
        Ok(Self {
            version: TABLE_FORMAT_VERSION,
            dim,
            alpha,
            spacing: spec.spacing(),
            cells_per_axis: spec.cells_per_axis(),
            order,
            self_cell,
            near,
        })
    }

    /// Cached build: reads from / writes to the directory named by
    /// `SHAPELAB_KERNEL_CACHE` when it is set.
    pub fn load_or_build(spec: &GridSpec, alpha: f64) -> Result<Self> {
        match std::env::var_os(CACHE_ENV) {
            Some(dir) if !dir.is_empty() => Self::load_or_build_in(Path::new(&dir), spec, alpha),
            _ => Self::build(spec, alpha, DEFAULT_ORDER),
        }
    }

    pub fn cache_file_name(spec: &GridSpec, alpha: f64, order: usize) -> String {
        format!(
            "riesz-v{}-N{}-a{:016x}-h{:016x}-n{}-q{}.json",
            TABLE_FORMAT_VERSION,
            spec.dim(),
            alpha.to_bits(),
            spec.spacing().to_bits(),
            spec.cells_per_axis(),
            order
        )
    }

    pub fn load_or_build_in(dir: &Path, spec: &GridSpec, alpha: f64) -> Result<Self> {
        check_alpha(spec.dim(), alpha)?;
        let path: PathBuf = dir.join(Self::cache_file_name(spec, alpha, DEFAULT_ORDER));
        if let Ok(text) = std::fs::read_to_string(&path) {
            match serde_json::from_str::<Self>(&text) {
                Ok(t) if t.matches(spec, alpha, DEFAULT_ORDER) => return Ok(t),
                _ => log::warn!("ignoring stale kernel cache file {}", path.display()),
            }
        }
        let table = Self::build(spec, alpha, DEFAULT_ORDER)?;
        std::fs::create_dir_all(dir)?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_string(&table).expect("table serializes"))?;
        std::fs::rename(&tmp, &path)?;
        Ok(table)
    }

    fn matches(&self, spec: &GridSpec, alpha: f64, order: usize) -> bool {
        self.version == TABLE_FORMAT_VERSION
            && self.dim == spec.dim()
            && self.alpha.to_bits() == alpha.to_bits()
            && self.spacing.to_bits() == spec.spacing().to_bits()
            && self.cells_per_axis == spec.cells_per_axis()
            && self.order == order
    }

    /// Dimensionless weight `K(o)`.
    pub fn weight(&self, o: &[i64; 3]) -> f64 {
        let cheb = o.iter().take(self.dim).map(|x| x.abs()).max().unwrap_or(0);
        if cheb == 0 {
            return self.self_cell;
        }
        if cheb == 1 {
            return self
                .near
                .iter()
                .find(|(q, _)| q == o)
                .map(|(_, v)| *v)
                .expect("near offset present");
        }
        let r2: f64 = o.iter().take(self.dim).map(|&x| (x * x) as f64).sum();
        r2.powf(0.5 * (self.alpha - self.dim as f64))
    }

    /// Kernel value `h^{α−N} K(o)`.
    pub fn value(&self, o: &[i64; 3]) -> f64 {
        self.spacing.powf(self.alpha - self.dim as f64) * self.weight(o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_kernel_gives_unit_weights() {
        // α = N: the kernel is 1 and every pair average is 1
        for dim in [2usize, 3] {
            for o in [[0i64, 0, 0], [1, 0, 0], [1, -1, 0], [1, 1, 1]] {
                let mut o = o;
                for slot in o.iter_mut().skip(dim) {
                    *slot = 0;
                }
                let v = unit_cell_pair_integral(dim, dim as f64, &o, 12);
                assert!((v - 1.0).abs() < 1e-12, "{dim} {o:?} {v}");
            }
        }
    }

    fn midpoint_pair(dim: usize, alpha: f64, o: &[i64; 3], n: usize) -> f64 {
        // brute midpoint sum over sub-cell pairs, skipping coincident ones
        let total = n.pow(dim as u32);
        let mut acc = 0.0;
        for i in 0..total {
            for j in 0..total {
                let mut d2 = 0.0;
                let (mut a, mut b) = (i, j);
                for ax in 0..dim {
                    let xi = (a % n) as f64 + 0.5;
                    let yj = (b % n) as f64 + 0.5 + (o[ax] * n as i64) as f64;
                    a /= n;
                    b /= n;
                    d2 += (xi - yj).powi(2);
                }
                if d2 > 0.0 {
                    acc += (d2.sqrt() / n as f64).powf(alpha - dim as f64);
                }
            }
        }
        acc / (total * total) as f64
    }

    #[test]
    fn matches_fine_midpoint_for_touching_cells() {
        let o = [1i64, 0, 0];
        let exact = unit_cell_pair_integral(2, 1.5, &o, 20);
        let mid = midpoint_pair(2, 1.5, &o, 48);
        assert!((exact - mid).abs() / exact < 2e-3, "{exact} {mid}");
        let o = [1i64, 1, 0];
        let exact = unit_cell_pair_integral(2, 0.7, &o, 20);
        let mid = midpoint_pair(2, 0.7, &o, 48);
        assert!((exact - mid).abs() / exact < 2e-3, "{exact} {mid}");
    }

    #[test]
    fn self_cell_matches_known_2d_coulomb_value() {
        // ∫∫_{[0,1]²×[0,1]²} |x − y|^{-1}: closed form
        // 4/3 (1 − √2) + 4 ln(1 + √2)
        let exact = 4.0 / 3.0 * (1.0 - 2f64.sqrt()) + 4.0 * (1.0 + 2f64.sqrt()).ln();
        let v = unit_cell_pair_integral(2, 1.0, &[0, 0, 0], 20);
        assert!((v - exact).abs() < 1e-10, "{v} {exact}");
    }

    #[test]
    fn rejects_alpha_outside_range() {
        let spec = GridSpec::centered(2, 16, 1.0).unwrap();
        assert!(RieszKernelTable::build(&spec, 2.0, 8).is_err());
        assert!(RieszKernelTable::build(&spec, 0.0, 8).is_err());
    }

    #[test]
    fn disk_cache_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::centered(3, 16, 1.0).unwrap();
        let a = RieszKernelTable::load_or_build_in(dir.path(), &spec, 1.3).unwrap();
        let b = RieszKernelTable::load_or_build_in(dir.path(), &spec, 1.3).unwrap();
        assert_eq!(a, b);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
