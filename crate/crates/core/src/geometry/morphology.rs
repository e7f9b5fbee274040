//! Exact Euclidean distance transforms and the discrete internal-ball test.

use super::grid::GridDomain;
use crate::error::{Result, ShapeError};

const INF: f64 = 1e30;

/// One-dimensional lower-envelope transform of sampled parabolas; samples at
/// `INF` are skipped.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let mut k: isize = -1;
    for q in 0..f.len() {
        if f[q] >= INF {
            continue;
        }
        loop {
            if k < 0 {
                k = 0;
                v[0] = q;
                z[0] = -INF;
                z[1] = INF;
                break;
            }
            let ku = k as usize;
            let p = v[ku];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[ku] {
                k -= 1;
                continue;
            }
            v[ku + 1] = q;
            z[ku + 1] = s;
            z[ku + 2] = INF;
            k += 1;
            break;
        }
    }
    if k < 0 {
        out.iter_mut().for_each(|o| *o = INF);
        return;
    }
    let mut k = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared distance, in cell units, from every cell of an `n^dim` array to the
/// nearest feature cell. Returns `INF`-like values when there are no features.
pub fn squared_distance_transform(shape: &[usize], features: &[bool]) -> Vec<f64> {
    let total: usize = shape.iter().product();
    assert_eq!(total, features.len());
    let mut d: Vec<f64> = features.iter().map(|&f| if f { 0.0 } else { INF }).collect();
    let maxn = *shape.iter().max().unwrap_or(&1);
    let mut line = vec![0.0; maxn];
    let mut out = vec![0.0; maxn];
    let mut v = vec![0usize; maxn];
    let mut z = vec![0.0; maxn + 2];
    let mut stride = 1usize;
    for &n in shape {
        let outer = total / n;
        for o in 0..outer {
            let base = (o / stride) * stride * n + o % stride;
            for i in 0..n {
                line[i] = d[base + i * stride];
            }
            edt_1d(&line[..n], &mut out[..n], &mut v, &mut z);
            for i in 0..n {
                d[base + i * stride] = out[i];
            }
        }
        stride *= n;
    }
    d
}

fn padded_shape(dom: &GridDomain) -> (Vec<usize>, usize) {
    let n = dom.spec().cells_per_axis() + 2;
    (vec![n; dom.dim()], n)
}

fn pad_index(dom: &GridDomain, idx: usize, n: usize) -> usize {
    let c = dom.spec().coords(idx);
    let mut out = 0;
    for a in (0..dom.dim()).rev() {
        out = out * n + c[a] + 1;
    }
    out
}

/// Distance from each occupied cell center to the nearest unoccupied cell
/// center; the box exterior counts as unoccupied. Zero on unoccupied cells.
pub fn distance_to_complement(dom: &GridDomain) -> Vec<f64> {
    let (shape, n) = padded_shape(dom);
    let total: usize = shape.iter().product();
    let mut feat = vec![true; total];
    for i in dom.occupied() {
        feat[pad_index(dom, i, n)] = false;
    }
    let d2 = squared_distance_transform(&shape, &feat);
    let h = dom.spacing();
    (0..dom.spec().len())
        .map(|i| {
            if dom.is_occupied(i) {
                d2[pad_index(dom, i, n)].sqrt() * h
            } else {
                0.0
            }
        })
        .collect()
}

/// Distance from every cell center to the nearest cell of `set`.
pub fn distance_to_set(dom_set: &GridDomain) -> Vec<f64> {
    let shape = vec![dom_set.spec().cells_per_axis(); dom_set.dim()];
    let h = dom_set.spacing();
    squared_distance_transform(&shape, dom_set.mask())
        .into_iter()
        .map(|d| if d >= INF { f64::INFINITY } else { d.sqrt() * h })
        .collect()
}

/// Morphological opening of `dom` by a discrete ball of radius `delta`.
pub fn opening(dom: &GridDomain, delta: f64) -> GridDomain {
    let h = dom.spacing();
    let inner = distance_to_complement(dom);
    let mut eroded = GridDomain::empty(dom.spec().clone());
    for i in dom.occupied() {
        // one cell of slack: ball centers need not sit on cell centers
        if inner[i] >= delta - h {
            eroded.set(i, true);
        }
    }
    let reach = distance_to_set(&eroded);
    let mut out = GridDomain::empty(dom.spec().clone());
    for i in dom.occupied() {
        if reach[i] <= delta + 0.5 * h {
            out.set(i, true);
        }
    }
    out
}

/// Discrete surrogate of the internal `delta`-ball condition: every occupied
/// cell lies within one cell of the opening by a radius-`delta` ball.
pub fn check_internal_ball_condition(dom: &GridDomain, delta: f64) -> Result<bool> {
    let h = dom.spacing();
    if delta < 2.0 * h {
        return Err(ShapeError::Resolution(format!(
            "delta = {delta} is below two cells (2h = {})",
            2.0 * h
        )));
    }
    if dom.is_empty() {
        return Ok(false);
    }
    let open = opening(dom, delta);
    if open.is_empty() {
        return Ok(false);
    }
    let reach = distance_to_set(&open);
    Ok(dom.occupied().all(|i| reach[i] <= h * (1.0 + 1e-9)))
}
