//! Gradient of the Riesz potential at an arbitrary point.
//!
//! `∇v(x) = Σ_cells ∫_C ∇_x |x − y|^{α−N} dy`. Cells within two and a half
//! cells of `x` are integrated exactly through the divergence theorem,
//! `∫_C ∇_x k(x − y) dy = −∮_{∂C} k(x − y) n_y dS`; the face integrals are
//! one-dimensional after a polar split. Cells up to eight cells away use a
//! tensor Gauss rule, the rest the midpoint rule.

use super::kernel::{check_alpha, gauss_legendre_01};
use crate::error::{Result, ShapeError};
use crate::geometry::{GridDomain, Point};

const EXACT_RADIUS: f64 = 2.5;
const GAUSS_RADIUS: f64 = 8.5;

struct Rules {
    line: Vec<(f64, f64)>,
    cell: Vec<(f64, f64)>,
}

/// `∫_0^L (t² + z²)^{p/2} dt` for `L ≥ 0`, `p ∈ (−1, 0)`.
fn line_integral(l: f64, z: f64, p: f64, gl: &[(f64, f64)]) -> f64 {
    if l <= 0.0 {
        return 0.0;
    }
    if z <= 1e-14 * l {
        return l.powf(p + 1.0) / (p + 1.0);
    }
    let f = |t: f64| (t * t + z * z).powf(0.5 * p);
    let head = l.min(z);
    let mut s: f64 = gl.iter().map(|&(x, w)| w * head * f(head * x)).sum();
    if l > z {
        // t = z e^u flattens the algebraic tail
        let span = (l / z).ln();
        s += gl
            .iter()
            .map(|&(x, w)| {
                let t = z * (span * x).exp();
                w * span * t * f(t)
            })
            .sum::<f64>();
    }
    s
}

/// `∫_0^X ∫_0^Y (s² + t² + z²)^{p/2} ds dt` for `X, Y ≥ 0`, `p ∈ (−2, −1)`,
/// split into two triangles and integrated radially in closed form.
fn rect_integral(x: f64, y: f64, z: f64, p: f64, gl: &[(f64, f64)]) -> f64 {
    if x <= 0.0 || y <= 0.0 {
        return 0.0;
    }
    let q = p + 2.0;
    let z2 = z * z;
    let zq = if z > 0.0 { z.powf(q) } else { 0.0 };
    let radial = |r: f64| ((r * r + z2).powf(0.5 * q) - zq) / q;
    let theta0 = y.atan2(x);
    let mut s = 0.0;
    for &(u, w) in gl {
        let t1 = theta0 * u;
        s += w * theta0 * radial(x / t1.cos());
        let t2 = theta0 + (std::f64::consts::FRAC_PI_2 - theta0) * u;
        s += w * (std::f64::consts::FRAC_PI_2 - theta0) * radial(y / t2.sin());
    }
    s
}

fn signed(v: f64) -> (f64, f64) {
    (v.signum(), v.abs())
}

/// `∫_face |x − y|^{p} dS` for the face of the cell at `center` (half-width
/// `half`) normal to `axis` on side `side`, in coordinates relative to `x`.
fn face_integral(
    dim: usize,
    rel_center: &[f64; 3],
    half: f64,
    axis: usize,
    side: f64,
    p: f64,
    gl: &[(f64, f64)],
) -> f64 {
    let z = (rel_center[axis] + side * half).abs();
    let others: Vec<usize> = (0..dim).filter(|&a| a != axis).collect();
    if dim == 2 {
        let b = others[0];
        let (sl, l) = signed(rel_center[b] - half);
        let (sh, hgh) = signed(rel_center[b] + half);
        sh * line_integral(hgh, z, p, gl) - sl * line_integral(l, z, p, gl)
    } else {
        let (b, c) = (others[0], others[1]);
        let lo = [rel_center[b] - half, rel_center[c] - half];
        let hi = [rel_center[b] + half, rel_center[c] + half];
        let r = |xv: f64, yv: f64| {
            let (sx, ax) = signed(xv);
            let (sy, ay) = signed(yv);
            sx * sy * rect_integral(ax, ay, z, p, gl)
        };
        r(hi[0], hi[1]) - r(lo[0], hi[1]) - r(hi[0], lo[1]) + r(lo[0], lo[1])
    }
}

fn exact_cell(dim: usize, rel: &[f64; 3], half: f64, p: f64, rules: &Rules, out: &mut [f64; 3]) {
    for a in 0..dim {
        let plus = face_integral(dim, rel, half, a, 1.0, p, &rules.line);
        let minus = face_integral(dim, rel, half, a, -1.0, p, &rules.line);
        out[a] -= plus - minus;
    }
}

/// `∫_C (α−N)(x − y)|x − y|^{α−N−2} dy` with a tensor Gauss rule; `rel = y_c − x`.
fn gauss_cell(dim: usize, rel: &[f64; 3], h: f64, p: f64, rules: &Rules, out: &mut [f64; 3]) {
    let m = rules.cell.len();
    let vol = h.powi(dim as i32);
    for idx in 0..m.pow(dim as u32) {
        let mut r = idx;
        let mut w = vol;
        let mut d = [0.0; 3];
        for a in 0..dim {
            let (x, wx) = rules.cell[r % m];
            r /= m;
            w *= wx;
            // x − y
            d[a] = -(rel[a] + (x - 0.5) * h);
        }
        let n2: f64 = d.iter().map(|v| v * v).sum();
        let f = p * n2.powf(0.5 * p - 1.0) * w;
        for a in 0..dim {
            out[a] += f * d[a];
        }
    }
}

/// `∇v_Ω(x)` for `α ∈ (1, N)`.
pub fn riesz_potential_gradient(dom: &GridDomain, alpha: f64, x: &Point) -> Result<[f64; 3]> {
    let dim = dom.dim();
    check_alpha(dim, alpha)?;
    if alpha <= 1.0 {
        return Err(ShapeError::Regularity(format!(
            "the potential gradient needs alpha > 1, got {alpha}"
        )));
    }
    let spec = dom.spec();
    let h = spec.spacing();
    let p = alpha - dim as f64;
    let rules = Rules {
        line: gauss_legendre_01(24),
        cell: gauss_legendre_01(3),
    };
    let mut g = [0.0; 3];
    let vol = spec.cell_volume();
    for j in dom.occupied() {
        let c = spec.center(j);
        let mut rel = [0.0; 3];
        let mut cheb: f64 = 0.0;
        for a in 0..dim {
            rel[a] = c[a] - x[a];
            cheb = cheb.max(rel[a].abs() / h);
        }
        if cheb <= EXACT_RADIUS {
            exact_cell(dim, &rel, 0.5 * h, p, &rules, &mut g);
        } else if cheb <= GAUSS_RADIUS {
            gauss_cell(dim, &rel, h, p, &rules, &mut g);
        } else {
            let n2: f64 = rel.iter().map(|v| v * v).sum();
            let f = p * n2.powf(0.5 * p - 1.0) * vol;
            for a in 0..dim {
                g[a] -= f * rel[a];
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_ball, BallSpec, GridSpec};

    #[test]
    fn exact_cell_matches_fine_gauss_away_from_the_cell() {
        let rules = Rules {
            line: gauss_legendre_01(24),
            cell: gauss_legendre_01(12),
        };
        for dim in [2usize, 3] {
            let p = 1.5 - dim as f64 + if dim == 3 { 1.0 } else { 0.0 };
            let rel = [1.3, -0.4, 0.7];
            let mut a = [0.0; 3];
            let mut b = [0.0; 3];
            exact_cell(dim, &rel, 0.5, p, &rules, &mut a);
            gauss_cell(dim, &rel, 1.0, p, &rules, &mut b);
            for k in 0..dim {
                assert!((a[k] - b[k]).abs() < 1e-8, "{dim} {a:?} {b:?}");
            }
        }
    }

    #[test]
    fn gradient_vanishes_at_ball_center() {
        let spec = GridSpec::centered(2, 64, 2.0).unwrap();
        let dom = make_ball(&spec, &BallSpec::new([0.0; 3], 0.7)).unwrap();
        let g = riesz_potential_gradient(&dom, 1.5, &[0.0; 3]).unwrap();
        assert!(g[0].abs() < 1e-9 && g[1].abs() < 1e-9);
    }

    #[test]
    fn small_alpha_is_a_regularity_error() {
        let spec = GridSpec::centered(2, 16, 2.0).unwrap();
        let dom = make_ball(&spec, &BallSpec::new([0.0; 3], 0.5)).unwrap();
        assert!(matches!(
            riesz_potential_gradient(&dom, 1.0, &[0.0; 3]),
            Err(ShapeError::Regularity(_))
        ));
    }

    #[test]
    fn matches_finite_differences_of_grid_potential() {
        use crate::geometry::make_ellipsoid;
        use crate::riesz::riesz_potential;
        let spec = GridSpec::centered(2, 96, 2.4).unwrap();
        let dom = make_ellipsoid(&spec, [0.05, -0.02, 0.0], &[0.9, 0.55]).unwrap();
        let alpha = 1.5;
        let v = riesz_potential(&dom, alpha).unwrap().v.values;
        let h = spec.spacing();
        // difference quotients lose accuracy where v is only C^{1,α−1}
        let depth = crate::geometry::morphology::distance_to_complement(&dom);
        let mut checked = 0;
        for (k, i) in dom.occupied().enumerate() {
            if k % 41 != 0 || depth[i] < 4.0 * h {
                continue;
            }
            let fd: Vec<f64> = (0..2)
                .map(|a| {
                    let up = spec.neighbor(i, a, true).unwrap();
                    let dn = spec.neighbor(i, a, false).unwrap();
                    (v[up] - v[dn]) / (2.0 * h)
                })
                .collect();
            let g = riesz_potential_gradient(&dom, alpha, &spec.center(i)).unwrap();
            let scale = fd[0].hypot(fd[1]).max(0.1);
            for a in 0..2 {
                assert!((g[a] - fd[a]).abs() < 0.01 * scale, "{i} {g:?} {fd:?}");
            }
            checked += 1;
        }
        assert!(checked >= 20);
    }

    #[test]
    fn translation_equivariant() {
        let spec = GridSpec::centered(2, 64, 2.0).unwrap();
        let h = spec.spacing();
        let a = make_ball(&spec, &BallSpec::new([0.0; 3], 0.5)).unwrap();
        let b = a.translated([3, -2, 0]).unwrap();
        let x = [0.31, -0.17, 0.0];
        let y = [x[0] + 3.0 * h, x[1] - 2.0 * h, 0.0];
        let ga = riesz_potential_gradient(&a, 1.4, &x).unwrap();
        let gb = riesz_potential_gradient(&b, 1.4, &y).unwrap();
        for k in 0..2 {
            assert!((ga[k] - gb[k]).abs() < 1e-10 * (1.0 + ga[k].abs()));
        }
    }
}
