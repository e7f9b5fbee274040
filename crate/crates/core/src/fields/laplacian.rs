//! Matrix-free masked Laplacian and a Jacobi-preconditioned conjugate gradient.
//!
//! The operator is `h²·(−Δ_h)` restricted to the occupied cells. The zero
//! Dirichlet value sits on the face between an occupied and an unoccupied
//! cell: the ghost value across that face is `−u`, which adds 2 (not 1) to the
//! diagonal for every exposed face. The matrix stays symmetric positive
//! definite.

use crate::error::{Result, ShapeError};
use crate::geometry::GridDomain;

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct MaskedLaplacian {
    dim: usize,
    cells: Vec<usize>,
    local: Vec<u32>,
    neighbors: Vec<u32>,
    diag: Vec<f64>,
}

impl MaskedLaplacian {
    pub fn new(dom: &GridDomain) -> Self {
        let spec = dom.spec();
        let dim = spec.dim();
        let cells: Vec<usize> = dom.occupied().collect();
        let mut local = vec![NONE; spec.len()];
        for (k, &i) in cells.iter().enumerate() {
            local[i] = k as u32;
        }
        let mut neighbors = Vec::with_capacity(2 * dim * cells.len());
        let mut diag = Vec::with_capacity(cells.len());
        for &i in &cells {
            let mut d = 0.0;
            for a in 0..dim {
                for fwd in [false, true] {
                    match spec.neighbor(i, a, fwd).filter(|&j| dom.is_occupied(j)) {
                        Some(j) => {
                            neighbors.push(local[j]);
                            d += 1.0;
                        }
                        None => {
                            neighbors.push(NONE);
                            d += 2.0;
                        }
                    }
                }
            }
            diag.push(d);
        }
        Self {
            dim,
            cells,
            local,
            neighbors,
            diag,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Grid indices of the unknowns, in unknown order.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// Unknown index of grid cell `idx`, if occupied.
    pub fn local_index(&self, idx: usize) -> Option<usize> {
        let l = self.local[idx];
        (l != NONE).then_some(l as usize)
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = 2 * self.dim;
        for k in 0..self.cells.len() {
            let mut s = self.diag[k] * x[k];
            for &j in &self.neighbors[k * m..(k + 1) * m] {
                if j != NONE {
                    s -= x[j as usize];
                }
            }
            y[k] = s;
        }
    }

    /// `xᵀ A x`, accumulated face by face so it is exactly non-negative.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let m = 2 * self.dim;
        let mut s = 0.0;
        for k in 0..self.cells.len() {
            for (f, &j) in self.neighbors[k * m..(k + 1) * m].iter().enumerate() {
                if j == NONE {
                    // half-cell gap to the boundary value: (2x)² split evenly
                    s += 2.0 * x[k] * x[k];
                } else if f % 2 == 1 {
                    let d = x[k] - x[j as usize];
                    s += d * d;
                }
            }
        }
        s
    }

    /// Default iteration cap for a grid with `cells_per_axis` cells per axis.
    pub fn default_max_iter(cells_per_axis: usize) -> usize {
        50 * cells_per_axis
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `A x = b` starting from the contents of `x`; stops once
/// `‖b − Ax‖ ≤ tol‖b‖`.
pub fn conjugate_gradient(
    op: &MaskedLaplacian,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = op.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    let inv_diag: Vec<f64> = op.diag.iter().map(|d| 1.0 / d).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = norm(&r) / bnorm;
    let mut it = 0;
    while rel > tol {
        if it >= max_iter {
            return Err(ShapeError::Solver {
                iterations: it,
                residual: rel,
            });
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(ShapeError::Solver {
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        it += 1;
        // periodic true-residual refresh guards against drift
        if it % 200 == 0 {
            op.apply(x, &mut ap);
            for k in 0..n {
                r[k] = b[k] - ap[k];
            }
        }
        rel = norm(&r) / bnorm;
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Ok(CgOutcome {
        iterations: it,
        relative_residual: rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_ball, BallSpec, GridSpec};

    #[test]
    fn operator_is_symmetric_and_energy_matches() {
        let spec = GridSpec::centered(2, 24, 2.0).unwrap();
        let dom = make_ball(&spec, &BallSpec::new([0.05, 0.0, 0.0], 0.7)).unwrap();
        let op = MaskedLaplacian::new(&dom);
        let n = op.len();
        let x: Vec<f64> = (0..n).map(|k| ((k * 7919) % 101) as f64 / 101.0).collect();
        let y: Vec<f64> = (0..n).map(|k| ((k * 104729) % 37) as f64 / 37.0).collect();
        let mut ax = vec![0.0; n];
        let mut ay = vec![0.0; n];
        op.apply(&x, &mut ax);
        op.apply(&y, &mut ay);
        assert!((dot(&ax, &y) - dot(&x, &ay)).abs() < 1e-10);
        assert!((dot(&ax, &x) - op.energy(&x)).abs() < 1e-9);
    }

    #[test]
    fn cg_reports_nonconvergence() {
        let spec = GridSpec::centered(2, 64, 2.0).unwrap();
        let dom = make_ball(&spec, &BallSpec::new([0.0; 3], 0.9)).unwrap();
        let op = MaskedLaplacian::new(&dom);
        let b = vec![1.0; op.len()];
        let mut x = vec![0.0; op.len()];
        match conjugate_gradient(&op, &b, &mut x, 1e-12, 3) {
            Err(ShapeError::Solver { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }
}
