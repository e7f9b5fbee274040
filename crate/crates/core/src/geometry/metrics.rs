//! Measures, rescaling, asymmetry and distances on grid domains.

use serde::{Deserialize, Serialize};

use super::grid::{GridDomain, GridSpec, Point};
use super::morphology::distance_to_set;
use super::shapes::BallSpec;
use crate::error::{Result, ShapeError};

pub fn measure(dom: &GridDomain) -> f64 {
    dom.count() as f64 * dom.spec().cell_volume()
}

pub fn symmetric_difference_measure(a: &GridDomain, b: &GridDomain) -> Result<f64> {
    Ok(measure(&a.symmetric_difference(b)?))
}

/// Re-rasterizes `t·(Ω − c) + c`: a cell is occupied when the pre-image of its
/// center falls in an occupied cell.
pub fn dilate_about(dom: &GridDomain, t: f64, center: &Point) -> Result<GridDomain> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(ShapeError::Domain(format!("dilation factor must be positive, got {t}")));
    }
    let spec = dom.spec();
    let dim = spec.dim();
    // every occupied cell's image must stay inside the box
    if let Some((lo, hi)) = dom.bounding_cells() {
        for a in 0..dim {
            let h = spec.spacing();
            let o = spec.origin()[a];
            let lo_x = center[a] + t * (o + lo[a] as f64 * h - center[a]);
            let hi_x = center[a] + t * (o + (hi[a] + 1) as f64 * h - center[a]);
            if lo_x < o || hi_x > o + spec.side() {
                return Err(ShapeError::Bounds(format!(
                    "dilation by {t:.4} leaves the grid box on axis {a}"
                )));
            }
        }
    }
    let mut out = GridDomain::empty(spec.clone());
    for i in 0..spec.len() {
        let x = spec.center(i);
        let mut y = [0.0; 3];
        for a in 0..dim {
            y[a] = center[a] + (x[a] - center[a]) / t;
        }
        if let Some(j) = spec.cell_of(&y) {
            if dom.is_occupied(j) {
                out.set(i, true);
            }
        }
    }
    Ok(out)
}

/// Dilation about the centroid to the target measure.
pub fn rescale_to_measure(dom: &GridDomain, target: f64) -> Result<GridDomain> {
    if !(target > 0.0) {
        return Err(ShapeError::Domain(format!("target measure must be positive, got {target}")));
    }
    let m = measure(dom);
    if m <= 0.0 {
        return Err(ShapeError::Domain("cannot rescale an empty domain".into()));
    }
    let t = (target / m).powf(1.0 / dom.dim() as f64);
    let c = dom.centroid().expect("non-empty");
    dilate_about(dom, t, &c)
}

/// Cells of `dom` whose centers fall inside the ball, as a count.
fn overlap_count(dom: &GridDomain, center: &Point, radius: f64) -> usize {
    let spec = dom.spec();
    let dim = spec.dim();
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    let n = spec.cells_per_axis() as i64;
    for a in 0..dim {
        lo[a] = (spec.grid_coord(center, a) - radius / spec.spacing()).floor().max(0.0) as i64;
        hi[a] = ((spec.grid_coord(center, a) + radius / spec.spacing()).ceil() as i64).min(n - 1);
        if hi[a] < lo[a] {
            return 0;
        }
    }
    let r2 = radius * radius;
    let mut count = 0;
    let (z0, z1) = if dim == 3 { (lo[2], hi[2]) } else { (0, 0) };
    for z in z0..=z1 {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                let idx = spec.index([x as usize, y as usize, z as usize]);
                if !dom.is_occupied(idx) {
                    continue;
                }
                let p = spec.center(idx);
                let d2: f64 = (0..dim).map(|a| (p[a] - center[a]).powi(2)).sum();
                if d2 < r2 {
                    count += 1;
                }
            }
        }
    }
    count
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Asymmetry {
    pub value: f64,
    pub best_ball: BallSpec,
}

fn asymmetry_at(dom: &GridDomain, count: usize, center: &Point, radius: f64) -> f64 {
    let overlap = overlap_count(dom, center, radius);
    2.0 * (count - overlap) as f64 / count as f64
}

/// Fraenkel asymmetry `min_x |Ω Δ B(x)|/|Ω|` over balls with `|B| = |Ω|`.
///
/// Coarse 9-point-per-axis scan over the centroid-centered window covering
/// the occupied cells, then pattern search from the three best candidates with
/// the step halved down to `h/4`.
pub fn fraenkel_asymmetry(dom: &GridDomain) -> Result<Asymmetry> {
    let spec = dom.spec();
    let dim = spec.dim();
    let count = dom.count();
    if count == 0 {
        return Err(ShapeError::Domain("asymmetry of an empty domain".into()));
    }
    let radius = BallSpec::with_measure(dim, [0.0; 3], measure(dom)).radius;
    let c = dom.centroid().expect("non-empty");
    let (lo, hi) = dom.bounding_cells().expect("non-empty");
    let h = spec.spacing();
    let mut half = 0.0f64;
    for a in 0..dim {
        let l = spec.center_of(lo)[a];
        let u = spec.center_of(hi)[a];
        half = half.max((c[a] - l).abs()).max((u - c[a]).abs());
    }
    half = half.max(h);
    let per_axis = 9usize;
    let step0 = 2.0 * half / (per_axis - 1) as f64;
    let total = per_axis.pow(dim as u32);
    let mut cands: Vec<(f64, Point)> = (0..total)
        .map(|k| {
            let mut p = c;
            let mut r = k;
            for a in 0..dim {
                p[a] = c[a] - half + (r % per_axis) as f64 * step0;
                r /= per_axis;
            }
            (asymmetry_at(dom, count, &p, radius), p)
        })
        .collect();
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = cands[0];
    for &(v0, p0) in cands.iter().take(3) {
        let (mut v, mut p) = (v0, p0);
        let mut step = 0.5 * step0;
        while step >= 0.25 * h {
            let mut moved = false;
            for a in 0..dim {
                for s in [-1.0, 1.0] {
                    let mut q = p;
                    q[a] += s * step;
                    let vq = asymmetry_at(dom, count, &q, radius);
                    if vq < v {
                        v = vq;
                        p = q;
                        moved = true;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        if v < best.0 {
            best = (v, p);
        }
    }
    Ok(Asymmetry {
        value: best.0,
        best_ball: BallSpec::new(best.1, radius),
    })
}

/// Exhaustive scan over a lattice of spacing `step` covering the occupied
/// bounding box. Slow; used as a reference.
pub fn fraenkel_asymmetry_exhaustive(dom: &GridDomain, step: f64) -> Result<Asymmetry> {
    let spec = dom.spec();
    let dim = spec.dim();
    let count = dom.count();
    if count == 0 {
        return Err(ShapeError::Domain("asymmetry of an empty domain".into()));
    }
    let radius = BallSpec::with_measure(dim, [0.0; 3], measure(dom)).radius;
    let (lo, hi) = dom.bounding_cells().expect("non-empty");
    let plo = spec.center_of(lo);
    let phi = spec.center_of(hi);
    let mut n = [1usize; 3];
    for a in 0..dim {
        n[a] = ((phi[a] - plo[a]) / step).floor() as usize + 1;
    }
    let mut best = (f64::INFINITY, plo);
    for k in 0..n[0] * n[1] * n[2] {
        let mut p = [0.0; 3];
        let mut r = k;
        for a in 0..dim {
            p[a] = plo[a] + (r % n[a]) as f64 * step;
            r /= n[a];
        }
        let v = asymmetry_at(dom, count, &p, radius);
        if v < best.0 {
            best = (v, p);
        }
    }
    Ok(Asymmetry {
        value: best.0,
        best_ball: BallSpec::new(best.1, radius),
    })
}

fn boundary_set(dom: &GridDomain) -> GridDomain {
    let mut b = GridDomain::empty(dom.spec().clone());
    for i in dom.boundary_cells() {
        b.set(i, true);
    }
    b
}

/// Symmetric Hausdorff distance between the boundary-cell center sets.
pub fn hausdorff_boundary_distance(a: &GridDomain, b: &GridDomain) -> Result<f64> {
    a.spec().ensure_same(b.spec())?;
    if a.is_empty() || b.is_empty() {
        return Err(ShapeError::Domain("Hausdorff distance needs non-empty domains".into()));
    }
    let ba = boundary_set(a);
    let bb = boundary_set(b);
    let da = distance_to_set(&ba);
    let db = distance_to_set(&bb);
    let ab = ba.occupied().map(|i| db[i]).fold(0.0, f64::max);
    let ba_ = bb.occupied().map(|i| da[i]).fold(0.0, f64::max);
    Ok(ab.max(ba_))
}

fn cross(o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn convex_hull_2d(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Cells extremal along some axis-0 line; these contain the convex hull vertices.
fn line_extremes(dom: &GridDomain) -> Vec<usize> {
    let spec = dom.spec();
    let n = spec.cells_per_axis();
    let lines = spec.len() / n;
    let mut out = Vec::new();
    for l in 0..lines {
        let base = l * n;
        let first = (0..n).find(|&x| dom.is_occupied(base + x));
        if let Some(f) = first {
            let last = (0..n).rev().find(|&x| dom.is_occupied(base + x)).unwrap();
            out.push(base + f);
            if last != f {
                out.push(base + last);
            }
        }
    }
    out
}

/// Largest distance between occupied cell centers.
pub fn diameter(dom: &GridDomain) -> Result<f64> {
    if dom.is_empty() {
        return Err(ShapeError::Domain("diameter of an empty domain".into()));
    }
    let spec = dom.spec();
    let cand = line_extremes(dom);
    let pts: Vec<Point> = if spec.dim() == 2 {
        convex_hull_2d(
            cand.iter()
                .map(|&i| {
                    let p = spec.center(i);
                    [p[0], p[1]]
                })
                .collect(),
        )
        .into_iter()
        .map(|p| [p[0], p[1], 0.0])
        .collect()
    } else {
        cand.iter().map(|&i| spec.center(i)).collect()
    };
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d2: f64 = (0..3).map(|a| (pts[i][a] - pts[j][a]).powi(2)).sum();
            best = best.max(d2);
        }
    }
    Ok(best.sqrt())
}

/// Measure of a domain built on `spec` from a mask count; convenience for callers
/// that track counts.
pub fn measure_of_count(spec: &GridSpec, count: usize) -> f64 {
    count as f64 * spec.cell_volume()
}
