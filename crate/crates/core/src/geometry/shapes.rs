//! Constructors for the fixture shapes: balls, boxes, ellipsoids, necklaces,
//! dumbbells with tails, and crosses.

use serde::{Deserialize, Serialize};

use super::grid::{unit_ball_volume, GridDomain, GridSpec, Point};
use crate::error::{Result, ShapeError};

fn dist2(p: &Point, q: &Point, dim: usize) -> f64 {
    (0..dim).map(|a| (p[a] - q[a]).powi(2)).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: Point,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn with_measure(dim: usize, center: Point, measure: f64) -> Self {
        Self {
            center,
            radius: (measure / unit_ball_volume(dim)).powf(1.0 / dim as f64),
        }
    }

    pub fn measure(&self, dim: usize) -> f64 {
        unit_ball_volume(dim) * self.radius.powi(dim as i32)
    }
}

fn ensure_fits(spec: &GridSpec, center: &Point, extent: &[f64]) -> Result<()> {
    let h = spec.spacing();
    let o = spec.origin();
    for a in 0..spec.dim() {
        let lo = center[a] - extent[a];
        let hi = center[a] + extent[a];
        if lo < o[a] + h || hi > o[a] + spec.side() - h {
            return Err(ShapeError::Bounds(format!(
                "shape extent [{lo:.4}, {hi:.4}] on axis {a} leaves the grid box"
            )));
        }
    }
    Ok(())
}

pub fn make_ball(spec: &GridSpec, ball: &BallSpec) -> Result<GridDomain> {
    if !(ball.radius > 0.0) {
        return Err(ShapeError::Construction("ball radius must be positive".into()));
    }
    ensure_fits(spec, &ball.center, &[ball.radius; 3])?;
    let r2 = ball.radius * ball.radius;
    let dim = spec.dim();
    Ok(GridDomain::from_predicate(spec.clone(), |p| {
        dist2(p, &ball.center, dim) < r2
    }))
}

/// Axis-aligned box `lo < x < hi`.
pub fn make_box(spec: &GridSpec, lo: &[f64], hi: &[f64]) -> Result<GridDomain> {
    let dim = spec.dim();
    if lo.len() != dim || hi.len() != dim || (0..dim).any(|a| hi[a] <= lo[a]) {
        return Err(ShapeError::Construction("box corners are inconsistent".into()));
    }
    let mut c = [0.0; 3];
    let mut ext = [0.0; 3];
    for a in 0..dim {
        c[a] = 0.5 * (lo[a] + hi[a]);
        ext[a] = 0.5 * (hi[a] - lo[a]);
    }
    let o = spec.origin();
    for a in 0..dim {
        if lo[a] < o[a] || hi[a] > o[a] + spec.side() {
            return Err(ShapeError::Bounds(format!("box leaves the grid on axis {a}")));
        }
    }
    let _ = (c, ext);
    Ok(GridDomain::from_predicate(spec.clone(), |p| {
        (0..dim).all(|a| p[a] > lo[a] && p[a] < hi[a])
    }))
}

/// Axis-aligned ellipsoid with the given semi-axes.
pub fn make_ellipsoid(spec: &GridSpec, center: Point, semi_axes: &[f64]) -> Result<GridDomain> {
    let dim = spec.dim();
    if semi_axes.len() != dim || semi_axes.iter().any(|&s| !(s > 0.0)) {
        return Err(ShapeError::Construction("semi-axes must be positive".into()));
    }
    ensure_fits(spec, &center, semi_axes)?;
    Ok(GridDomain::from_predicate(spec.clone(), |p| {
        (0..dim)
            .map(|a| ((p[a] - center[a]) / semi_axes[a]).powi(2))
            .sum::<f64>()
            < 1.0
    }))
}

/// Ellipsoid of prescribed measure whose first semi-axis is `aspect` times the others.
pub fn make_ellipsoid_with_measure(
    spec: &GridSpec,
    center: Point,
    measure: f64,
    aspect: f64,
) -> Result<GridDomain> {
    let dim = spec.dim();
    let b = (measure / (unit_ball_volume(dim) * aspect)).powf(1.0 / dim as f64);
    let mut axes = vec![b; dim];
    axes[0] = aspect * b;
    make_ellipsoid(spec, center, &axes)
}

/// `k` equal balls with centers on the first axis, spaced `gap` apart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NecklaceSpec {
    pub ball_count: usize,
    pub gap: f64,
    pub total_measure: f64,
    /// Midpoint of the chain.
    pub center: Point,
}

impl NecklaceSpec {
    pub fn ball_radius(&self, dim: usize) -> f64 {
        (self.total_measure / (self.ball_count as f64 * unit_ball_volume(dim)))
            .powf(1.0 / dim as f64)
    }

    /// Tangent chain (`gap = 2r`).
    pub fn tangent(dim: usize, ball_count: usize, total_measure: f64, center: Point) -> Self {
        let mut s = Self {
            ball_count,
            gap: 0.0,
            total_measure,
            center,
        };
        s.gap = 2.0 * s.ball_radius(dim);
        s
    }

    pub fn centers(&self) -> Vec<Point> {
        let k = self.ball_count as f64;
        (0..self.ball_count)
            .map(|i| {
                let mut c = self.center;
                c[0] += (i as f64 - 0.5 * (k - 1.0)) * self.gap;
                c
            })
            .collect()
    }

    pub fn is_tangent(&self, dim: usize) -> bool {
        let r = self.ball_radius(dim);
        (self.gap - 2.0 * r).abs() <= 1e-9 * r
    }
}

/// Rasterizes a necklace. Tangent chains also occupy the cell holding each
/// tangency point, so the rasterized chain stays face-connected.
pub fn make_necklace(spec: &GridSpec, neck: &NecklaceSpec) -> Result<GridDomain> {
    let dim = spec.dim();
    if neck.ball_count == 0 {
        return Err(ShapeError::Construction("necklace needs at least one ball".into()));
    }
    if !(neck.total_measure > 0.0) {
        return Err(ShapeError::Construction("necklace measure must be positive".into()));
    }
    let r = neck.ball_radius(dim);
    if neck.ball_count > 1 && neck.gap < 2.0 * r * (1.0 - 1e-9) {
        return Err(ShapeError::Construction(format!(
            "gap {:.4} is smaller than the ball diameter {:.4}: balls overlap",
            neck.gap,
            2.0 * r
        )));
    }
    let centers = neck.centers();
    let mut ext = [r; 3];
    ext[0] = r + 0.5 * (neck.ball_count as f64 - 1.0) * neck.gap;
    ensure_fits(spec, &neck.center, &ext)?;
    let r2 = r * r;
    let mut dom = GridDomain::from_predicate(spec.clone(), |p| {
        centers.iter().any(|c| dist2(p, c, dim) < r2)
    });
    if neck.ball_count > 1 && neck.is_tangent(dim) {
        for w in centers.windows(2) {
            let mut mid = w[0];
            mid[0] = 0.5 * (w[0][0] + w[1][0]);
            if let Some(i) = spec.cell_of(&mid) {
                dom.set(i, true);
            }
        }
    }
    Ok(dom)
}

/// Two lobes joined by a thin neck along the first axis, with an optional thin
/// tail leaving the left lobe in the `-e1` direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumbbellSpec {
    pub center: Point,
    pub left_radius: f64,
    pub right_radius: f64,
    /// Distance between the lobe centers.
    pub separation: f64,
    pub neck_width: f64,
    pub tail_length: f64,
    pub tail_width: f64,
}

impl DumbbellSpec {
    pub fn left_center(&self) -> Point {
        let mut c = self.center;
        c[0] -= 0.5 * self.separation;
        c
    }

    pub fn right_center(&self) -> Point {
        let mut c = self.center;
        c[0] += 0.5 * self.separation;
        c
    }

    /// Same fixture with every length multiplied by `t` about `center`.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            center: self.center,
            left_radius: t * self.left_radius,
            right_radius: t * self.right_radius,
            separation: t * self.separation,
            neck_width: t * self.neck_width,
            tail_length: t * self.tail_length,
            tail_width: t * self.tail_width,
        }
    }
}

pub fn make_dumbbell_tail(spec: &GridSpec, params: &DumbbellSpec) -> Result<GridDomain> {
    let dim = spec.dim();
    let p = params;
    if p.left_radius <= 0.0 || p.right_radius <= 0.0 || p.neck_width <= 0.0 {
        return Err(ShapeError::Construction("dumbbell radii and neck width must be positive".into()));
    }
    if p.tail_length > 0.0 && p.tail_width <= 0.0 {
        return Err(ShapeError::Construction("tail width must be positive".into()));
    }
    let lc = p.left_center();
    let rc = p.right_center();
    let x_min = (lc[0] - p.left_radius - p.tail_length).min(rc[0] - p.right_radius);
    let x_max = (rc[0] + p.right_radius).max(lc[0] + p.left_radius);
    let r_max = p.left_radius.max(p.right_radius);
    let mut mid = p.center;
    mid[0] = 0.5 * (x_min + x_max);
    let mut ext = [r_max; 3];
    ext[0] = 0.5 * (x_max - x_min);
    ensure_fits(spec, &mid, &ext)?;
    let tail_start = lc[0] - p.left_radius - p.tail_length;
    let transverse2 = |q: &Point| -> f64 { (1..dim).map(|a| (q[a] - p.center[a]).powi(2)).sum() };
    Ok(GridDomain::from_predicate(spec.clone(), |q| {
        if dist2(q, &lc, dim) < p.left_radius.powi(2) || dist2(q, &rc, dim) < p.right_radius.powi(2)
        {
            return true;
        }
        let t2 = transverse2(q);
        if q[0] > lc[0] && q[0] < rc[0] && t2 < (0.5 * p.neck_width).powi(2) {
            return true;
        }
        p.tail_length > 0.0 && q[0] > tail_start && q[0] < lc[0] && t2 < (0.5 * p.tail_width).powi(2)
    }))
}

/// A round core with `2N` straight arms along `±e_a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossSpec {
    pub center: Point,
    pub core_radius: f64,
    pub arm_width: f64,
    /// Arm lengths measured from the center, ordered `-e1, +e1, -e2, +e2, ...`.
    pub arm_lengths: Vec<f64>,
}

pub fn make_cross(spec: &GridSpec, cross: &CrossSpec) -> Result<GridDomain> {
    let dim = spec.dim();
    if cross.arm_lengths.len() != 2 * dim {
        return Err(ShapeError::Construction(format!(
            "cross needs {} arm lengths",
            2 * dim
        )));
    }
    let reach = cross
        .arm_lengths
        .iter()
        .cloned()
        .fold(cross.core_radius, f64::max);
    ensure_fits(spec, &cross.center, &[reach; 3])?;
    let c = cross.center;
    let hw2 = (0.5 * cross.arm_width).powi(2);
    Ok(GridDomain::from_predicate(spec.clone(), |p| {
        if dist2(p, &c, dim) < cross.core_radius.powi(2) {
            return true;
        }
        (0..dim).any(|a| {
            let along = p[a] - c[a];
            let across: f64 = (0..dim).filter(|&b| b != a).map(|b| (p[b] - c[b]).powi(2)).sum();
            let len = if along < 0.0 {
                cross.arm_lengths[2 * a]
            } else {
                cross.arm_lengths[2 * a + 1]
            };
            across < hw2 && along.abs() < len
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::metrics::measure;

    #[test]
    fn single_ball_necklace_equals_ball() {
        let spec = GridSpec::centered(2, 64, 3.0).unwrap();
        let neck = NecklaceSpec::tangent(2, 1, 1.0, [0.0; 3]);
        let ball = BallSpec::with_measure(2, [0.0; 3], 1.0);
        assert_eq!(make_necklace(&spec, &neck).unwrap(), make_ball(&spec, &ball).unwrap());
    }

    #[test]
    fn tangent_necklace_closed_form_radius() {
        let neck = NecklaceSpec::tangent(2, 4, 1.0, [0.0; 3]);
        let r = neck.ball_radius(2);
        assert!((r - (1.0 / (4.0 * std::f64::consts::PI)).sqrt()).abs() < 1e-12);
        assert!((r - 0.2821).abs() < 1e-4);
        assert!((8.0 * r - 2.2568).abs() < 1e-4);
    }

    #[test]
    fn overlapping_necklace_is_rejected() {
        let spec = GridSpec::centered(2, 64, 3.0).unwrap();
        let mut neck = NecklaceSpec::tangent(2, 3, 1.0, [0.0; 3]);
        neck.gap *= 0.8;
        assert!(matches!(make_necklace(&spec, &neck), Err(ShapeError::Construction(_))));
    }

    #[test]
    fn separated_necklace_has_k_components_and_keeps_measure() {
        let spec = GridSpec::centered(2, 256, 6.0).unwrap();
        let mut neck = NecklaceSpec::tangent(2, 2, 1.0, [0.0; 3]);
        neck.gap = 10.0 * neck.ball_radius(2);
        let dom = make_necklace(&spec, &neck).unwrap();
        assert_eq!(dom.component_count(), 2);
        assert!((measure(&dom) - 1.0).abs() < 0.02);
    }

    #[test]
    fn tangent_necklace_is_connected() {
        let spec = GridSpec::centered(2, 200, 3.0).unwrap();
        let neck = NecklaceSpec::tangent(2, 4, 1.0, [0.0; 3]);
        assert!(make_necklace(&spec, &neck).unwrap().is_connected());
        let mut apart = neck.clone();
        apart.gap += 3.0 * spec.spacing();
        assert_eq!(make_necklace(&spec, &apart).unwrap().component_count(), 4);
    }

    #[test]
    fn dumbbell_with_tail_is_connected() {
        let spec = GridSpec::centered(2, 128, 4.0).unwrap();
        let d = DumbbellSpec {
            center: [0.5, 0.0, 0.0],
            left_radius: 0.35,
            right_radius: 0.45,
            separation: 1.0,
            neck_width: 0.12,
            tail_length: 1.5,
            tail_width: 0.12,
        };
        let dom = make_dumbbell_tail(&spec, &d).unwrap();
        assert!(dom.is_connected());
    }
}
