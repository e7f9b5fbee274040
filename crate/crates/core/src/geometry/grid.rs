//! Uniform Cartesian grids and boolean occupancy masks.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ShapeError};

/// A point in the ambient space. Coordinates beyond the grid dimension are zero.
pub type Point = [f64; 3];

/// Integer cell coordinates. Entries beyond the grid dimension are zero.
pub type CellIndex = [usize; 3];

/// Volume of the unit ball in `dim` dimensions.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Cubic bounding box subdivided into `cells_per_axis^dim` cells of side `spacing`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    cells: usize,
    spacing: f64,
    origin: Point,
}

impl GridSpec {
    pub fn new(dim: usize, cells_per_axis: usize, spacing: f64, origin: &[f64]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(ShapeError::Domain(format!("dimension must be 2 or 3, got {dim}")));
        }
        if cells_per_axis < 8 {
            return Err(ShapeError::Domain(format!(
                "cells_per_axis must be at least 8, got {cells_per_axis}"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(ShapeError::Domain(format!("spacing must be positive, got {spacing}")));
        }
        if origin.len() != dim {
            return Err(ShapeError::Domain(format!(
                "origin has {} coordinates, expected {dim}",
                origin.len()
            )));
        }
        let mut o = [0.0; 3];
        o[..dim].copy_from_slice(origin);
        Ok(Self {
            dim,
            cells: cells_per_axis,
            spacing,
            origin: o,
        })
    }

    /// Box `[-side/2, side/2]^dim` split into `cells_per_axis` cells per axis.
    pub fn centered(dim: usize, cells_per_axis: usize, side: f64) -> Result<Self> {
        let h = side / cells_per_axis as f64;
        Self::new(dim, cells_per_axis, h, &vec![-0.5 * side; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn side(&self) -> f64 {
        self.spacing * self.cells as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Total number of cells in the box.
    pub fn len(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.cells.pow(axis as u32)
    }

    pub fn coords(&self, idx: usize) -> CellIndex {
        let n = self.cells;
        let mut c = [0usize; 3];
        let mut rest = idx;
        for slot in c.iter_mut().take(self.dim) {
            *slot = rest % n;
            rest /= n;
        }
        c
    }

    pub fn index(&self, c: CellIndex) -> usize {
        let n = self.cells;
        let mut idx = 0;
        for a in (0..self.dim).rev() {
            idx = idx * n + c[a];
        }
        idx
    }

    /// Index of the cell with signed coordinates `c`, if it lies in the box.
    pub fn index_signed(&self, c: [i64; 3]) -> Option<usize> {
        let n = self.cells as i64;
        let mut u = [0usize; 3];
        for a in 0..self.dim {
            if c[a] < 0 || c[a] >= n {
                return None;
            }
            u[a] = c[a] as usize;
        }
        Some(self.index(u))
    }

    pub fn center_of(&self, c: CellIndex) -> Point {
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.origin[a] + (c[a] as f64 + 0.5) * self.spacing;
        }
        p
    }

    pub fn center(&self, idx: usize) -> Point {
        self.center_of(self.coords(idx))
    }

    /// Continuous grid coordinate of `p` along `axis`, in cell units, such that
    /// cell centers sit at integers.
    pub fn grid_coord(&self, p: &Point, axis: usize) -> f64 {
        (p[axis] - self.origin[axis]) / self.spacing - 0.5
    }

    /// Cell containing `p`, if inside the box.
    pub fn cell_of(&self, p: &Point) -> Option<usize> {
        let mut c = [0i64; 3];
        for a in 0..self.dim {
            c[a] = ((p[a] - self.origin[a]) / self.spacing).floor() as i64;
        }
        self.index_signed(c)
    }

    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let c = self.coords(idx)[axis];
        let s = self.stride(axis);
        if forward {
            (c + 1 < self.cells).then(|| idx + s)
        } else {
            (c > 0).then(|| idx - s)
        }
    }

    /// True when `p` is at least `margin` away from every face of the box.
    pub fn contains_with_margin(&self, p: &Point, margin: f64) -> bool {
        (0..self.dim).all(|a| {
            p[a] - margin >= self.origin[a] && p[a] + margin <= self.origin[a] + self.side()
        })
    }

    pub fn box_center(&self) -> Point {
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.origin[a] + 0.5 * self.side();
        }
        p
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(ShapeError::SpecMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Binary occupancy mask on a [`GridSpec`]: a cell belongs to the set iff its
/// center does.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDomain {
    spec: GridSpec,
    mask: Vec<bool>,
}

impl GridDomain {
    pub fn new(spec: GridSpec, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != spec.len() {
            return Err(ShapeError::Domain(format!(
                "mask has {} cells, spec expects {}",
                mask.len(),
                spec.len()
            )));
        }
        Ok(Self { spec, mask })
    }

    pub fn empty(spec: GridSpec) -> Self {
        let n = spec.len();
        Self {
            spec,
            mask: vec![false; n],
        }
    }

    pub fn full(spec: GridSpec) -> Self {
        let n = spec.len();
        Self {
            spec,
            mask: vec![true; n],
        }
    }

    /// Occupies every cell whose center satisfies `inside`.
    pub fn from_predicate(spec: GridSpec, inside: impl Fn(&Point) -> bool) -> Self {
        let mask = (0..spec.len()).map(|i| inside(&spec.center(i))).collect();
        Self { spec, mask }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spec.spacing
    }

    pub fn is_occupied(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn set(&mut self, idx: usize, value: bool) {
        self.mask[idx] = value;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
    }

    /// Occupied state of the face neighbor; cells outside the box count as empty.
    pub fn neighbor_occupied(&self, idx: usize, axis: usize, forward: bool) -> bool {
        self.spec
            .neighbor(idx, axis, forward)
            .is_some_and(|j| self.mask[j])
    }

    /// An occupied cell with at least one unoccupied face neighbor.
    pub fn is_boundary_cell(&self, idx: usize) -> bool {
        self.mask[idx]
            && (0..self.dim()).any(|a| {
                !self.neighbor_occupied(idx, a, true) || !self.neighbor_occupied(idx, a, false)
            })
    }

    pub fn boundary_cells(&self) -> Vec<usize> {
        self.occupied().filter(|&i| self.is_boundary_cell(i)).collect()
    }

    /// Face-connected components, each listed in increasing index order.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.mask.len()];
        let mut comps = Vec::new();
        let mut stack = Vec::new();
        for start in 0..self.mask.len() {
            if !self.mask[start] || label[start] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut members = Vec::new();
            label[start] = id;
            stack.push(start);
            while let Some(i) = stack.pop() {
                members.push(i);
                for a in 0..self.dim() {
                    for fwd in [false, true] {
                        if let Some(j) = self.spec.neighbor(i, a, fwd) {
                            if self.mask[j] && label[j] == usize::MAX {
                                label[j] = id;
                                stack.push(j);
                            }
                        }
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps
    }

    pub fn component_count(&self) -> usize {
        self.components().len()
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// Keeps only the given cells.
    pub fn restricted_to(&self, cells: &[usize]) -> Self {
        let mut out = Self::empty(self.spec.clone());
        for &i in cells {
            out.mask[i] = self.mask[i];
        }
        out
    }

    pub fn centroid(&self) -> Option<Point> {
        let mut sum = [0.0; 3];
        let mut n = 0usize;
        for i in self.occupied() {
            let p = self.spec.center(i);
            for a in 0..3 {
                sum[a] += p[a];
            }
            n += 1;
        }
        (n > 0).then(|| sum.map(|s| s / n as f64))
    }

    /// Inclusive index bounds `(lo, hi)` of the occupied cells per axis.
    pub fn bounding_cells(&self) -> Option<(CellIndex, CellIndex)> {
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        let mut any = false;
        for i in self.occupied() {
            any = true;
            let c = self.spec.coords(i);
            for a in 0..self.dim() {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
        if !any {
            return None;
        }
        for a in self.dim()..3 {
            lo[a] = 0;
        }
        Some((lo, hi))
    }

    fn combine(&self, other: &GridDomain, op: impl Fn(bool, bool) -> bool) -> Result<Self> {
        self.spec.ensure_same(&other.spec)?;
        let mask = self
            .mask
            .iter()
            .zip(&other.mask)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(Self {
            spec: self.spec.clone(),
            mask,
        })
    }

    pub fn union(&self, other: &GridDomain) -> Result<Self> {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &GridDomain) -> Result<Self> {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &GridDomain) -> Result<Self> {
        self.combine(other, |a, b| a && !b)
    }

    pub fn symmetric_difference(&self, other: &GridDomain) -> Result<Self> {
        self.combine(other, |a, b| a != b)
    }

    /// Shifts the set by whole cells; occupied cells leaving the box are an error.
    pub fn translated(&self, shift: [i64; 3]) -> Result<Self> {
        let mut out = Self::empty(self.spec.clone());
        for i in self.occupied() {
            let c = self.spec.coords(i);
            let mut t = [0i64; 3];
            for a in 0..self.dim() {
                t[a] = c[a] as i64 + shift[a];
            }
            let j = self
                .spec
                .index_signed(t)
                .ok_or_else(|| ShapeError::Bounds("translation leaves the grid box".into()))?;
            out.mask[j] = true;
        }
        Ok(out)
    }

    /// Deterministic hex digest of the spec and mask.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&self.spec).expect("spec serializes"));
        let bytes: Vec<u8> = self.mask.iter().map(|&b| b as u8).collect();
        hasher.update(&bytes);
        hex::encode(hasher.finalize())
    }

    /// Cheap in-process key used by caches.
    pub fn cache_key(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.spec.dim.hash(&mut h);
        self.spec.cells.hash(&mut h);
        self.spec.spacing.to_bits().hash(&mut h);
        for o in self.spec.origin {
            o.to_bits().hash(&mut h);
        }
        self.mask.hash(&mut h);
        h.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip_3d() {
        let spec = GridSpec::centered(3, 10, 1.0).unwrap();
        for idx in [0, 7, 123, 999] {
            assert_eq!(spec.index(spec.coords(idx)), idx);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::new(4, 16, 0.1, &[0.0; 4]).is_err());
        assert!(GridSpec::new(2, 4, 0.1, &[0.0; 2]).is_err());
        assert!(GridSpec::new(2, 16, 0.0, &[0.0; 2]).is_err());
        assert!(GridSpec::new(2, 16, 0.1, &[0.0; 3]).is_err());
    }

    #[test]
    fn components_of_two_blocks() {
        let spec = GridSpec::centered(2, 16, 1.6).unwrap();
        let dom = GridDomain::from_predicate(spec, |p| {
            (p[0] < -0.2 || p[0] > 0.2) && p[1].abs() < 0.3
        });
        assert_eq!(dom.component_count(), 2);
        assert!(!dom.is_connected());
    }

    #[test]
    fn boundary_cells_of_full_box_are_its_faces() {
        let spec = GridSpec::centered(2, 8, 1.0).unwrap();
        let dom = GridDomain::full(spec);
        assert_eq!(dom.boundary_cells().len(), 28);
    }

    #[test]
    fn set_algebra_requires_matching_specs() {
        let a = GridDomain::empty(GridSpec::centered(2, 8, 1.0).unwrap());
        let b = GridDomain::empty(GridSpec::centered(2, 8, 2.0).unwrap());
        assert!(matches!(a.union(&b), Err(ShapeError::SpecMismatch(_))));
    }
}
