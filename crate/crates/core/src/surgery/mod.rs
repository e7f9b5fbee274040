//! Tail surgery: slice statistics of the first eigenfunction, the cylinder
//! extension `Ω̃(t) = Ω⁺(t) ∪ Q(t)`, the trichotomy and the directional sweep.

mod cut;
pub mod fixtures;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShapeError};
use crate::fields::{rayleigh_quotient, EigenSolution, ScalarField, SolverOptions};
use crate::functionals::first_eigenvalue;
use crate::geometry::GridDomain;

pub use cut::{
    apply_tail_cut, c4_sensitivity, surgery_sweep, surgery_sweep_along, write_sweep_csv, CutCase, PassLog, Sensitivity,
    SurgeryParams, SweepResult, TailCutResult, DEFAULT_C4,
};

/// Tail direction: the tail lies on the `sign` side of the cut along `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Direction {
    pub axis: usize,
    pub positive: bool,
}

impl Direction {
    pub fn new(axis: usize, positive: bool) -> Self {
        Self { axis, positive }
    }

    /// `−e₁, +e₁, −e₂, +e₂, …`.
    pub fn sweep_order(dim: usize) -> Vec<Direction> {
        (0..dim)
            .flat_map(|a| [Direction::new(a, false), Direction::new(a, true)])
            .collect()
    }

    /// Whether layer `l` lies strictly in the tail beyond layer `i`.
    fn in_tail(&self, l: usize, i: usize) -> bool {
        if self.positive {
            l > i
        } else {
            l < i
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}e{}", if self.positive { '+' } else { '-' }, self.axis + 1)
    }
}

impl FromStr for Direction {
    type Err = ShapeError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || ShapeError::parse("direction", format!("expected ±e1, ±e2 or ±e3, got `{s}`"));
        let s = s.trim();
        let (positive, rest) = match s.chars().next() {
            Some('+') => (true, &s[1..]),
            Some('-') => (false, &s[1..]),
            _ => return Err(bad()),
        };
        let axis: usize = rest.strip_prefix('e').ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if !(1..=3).contains(&axis) {
            return Err(bad());
        }
        Ok(Direction::new(axis - 1, positive))
    }
}

/// Per-layer statistics along one axis. Entry `i` belongs to the slice through
/// the centers of layer `i`; the tail `Ω⁻(t_i)` is the set of layers strictly
/// beyond it in the tail direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceStats {
    pub direction: Direction,
    pub thresholds: Vec<f64>,
    /// `(N−1)`-measure of the slice.
    pub eps_t: Vec<f64>,
    /// `∫_{Ω_t} |∇u|²`.
    pub delta_t: Vec<f64>,
    /// `∫_{Ω_t} u²`.
    pub mu_t: Vec<f64>,
    /// Tail volume.
    pub m_t: Vec<f64>,
    /// Tail Dirichlet energy.
    pub phi_t: Vec<f64>,
    pub spacing: f64,
    pub dim: usize,
}

impl SliceStats {
    /// Layer whose center is nearest to `t`.
    pub fn layer_of(&self, t: f64) -> usize {
        let n = self.thresholds.len();
        let i = ((t - self.thresholds[0]) / self.spacing).round();
        i.clamp(0.0, (n - 1) as f64) as usize
    }

    /// `μ(t) / (ε(t)^{2/(N−1)} δ(t))` on slices where it is defined.
    pub fn mu_ratios(&self) -> Vec<f64> {
        let p = 2.0 / (self.dim as f64 - 1.0);
        (0..self.thresholds.len())
            .filter_map(|i| {
                let d = self.eps_t[i].powf(p) * self.delta_t[i];
                (self.eps_t[i] > 0.0 && d > 0.0).then(|| self.mu_t[i] / d)
            })
            .collect()
    }
}

/// Cell-wise share of the face-discretized Dirichlet form: half of each shared
/// face, all of each exposed face. Sums to the discrete energy in units of `h^{N−2}`.
fn cell_energy(dom: &GridDomain, u: &ScalarField, idx: usize) -> f64 {
    let spec = dom.spec();
    let x = u.values[idx];
    let mut s = 0.0;
    for a in 0..spec.dim() {
        for fwd in [false, true] {
            match spec.neighbor(idx, a, fwd) {
                Some(j) if dom.is_occupied(j) => s += 0.5 * (x - u.values[j]).powi(2),
                _ => s += 2.0 * x * x,
            }
        }
    }
    s
}

pub fn slice_statistics(dom: &GridDomain, eig: &EigenSolution, direction: Direction) -> Result<SliceStats> {
    let spec = dom.spec();
    let dim = spec.dim();
    if direction.axis >= dim {
        return Err(ShapeError::Domain(format!("direction {direction} in dimension {dim}")));
    }
    spec.ensure_same(&eig.u.spec)?;
    let n = spec.cells_per_axis();
    let h = spec.spacing();
    let area = h.powi(dim as i32 - 1);
    let mut count = vec![0usize; n];
    let mut energy = vec![0.0; n];
    let mut mass = vec![0.0; n];
    for idx in dom.occupied() {
        let l = spec.coords(idx)[direction.axis];
        count[l] += 1;
        energy[l] += cell_energy(dom, &eig.u, idx);
        mass[l] += eig.u.values[idx].powi(2);
    }
    let eps_t: Vec<f64> = count.iter().map(|&c| c as f64 * area).collect();
    let delta_t: Vec<f64> = energy.iter().map(|e| e * h.powi(dim as i32 - 3)).collect();
    let mu_t: Vec<f64> = mass.iter().map(|m| m * area).collect();
    let mut m_t = vec![0.0; n];
    let mut phi_t = vec![0.0; n];
    let order: Vec<usize> = if direction.positive {
        (0..n).rev().collect()
    } else {
        (0..n).collect()
    };
    let (mut m, mut phi) = (0.0, 0.0);
    for &i in &order {
        m_t[i] = m;
        phi_t[i] = phi;
        m += eps_t[i] * h;
        phi += delta_t[i] * h;
    }
    let o = spec.origin()[direction.axis];
    Ok(SliceStats {
        direction,
        thresholds: (0..n).map(|i| o + (i as f64 + 0.5) * h).collect(),
        eps_t,
        delta_t,
        mu_t,
        m_t,
        phi_t,
        spacing: h,
        dim,
    })
}

/// Cylinder extension of the eigenfunction past the cut.
#[derive(Clone, Debug, PartialEq)]
pub struct CutExtension {
    pub domain: GridDomain,
    pub field: ScalarField,
    /// Layer of the cut slice.
    pub layer: usize,
    /// Cylinder length in cells.
    pub cylinder_cells: usize,
    /// Snapped `σ`: distance from the slice centers to the outer cylinder face.
    pub sigma: f64,
    /// Unsnapped `ε(t)^{1/(N−1)}`.
    pub sigma_exact: f64,
}

/// `Ω̃(t) = Ω⁺(t) ∪ Q(t)` with `ũ = u` on `Ω⁺(t)` and the linear ramp on `Q(t)`.
///
/// `σ(t) = ε(t)^{1/(N−1)}` is snapped to `s ≥ 1` whole cells; the ramp reaches
/// zero on the outer face of the last cylinder cell, where the discrete
/// Dirichlet condition sits.
pub fn build_cut_extension(
    dom: &GridDomain,
    eig: &EigenSolution,
    t: f64,
    direction: Direction,
) -> Result<CutExtension> {
    let stats = slice_statistics(dom, eig, direction)?;
    let spec = dom.spec();
    let h = spec.spacing();
    let axis = direction.axis;
    let i = stats.layer_of(t);
    let eps = stats.eps_t[i];
    if eps == 0.0 {
        if stats.m_t[i] > 0.0 {
            return Err(ShapeError::Precondition(format!(
                "slice at t = {t:.4} is empty but the tail beyond it is not"
            )));
        }
        return Ok(CutExtension {
            domain: dom.clone(),
            field: eig.u.clone(),
            layer: i,
            cylinder_cells: 0,
            sigma: 0.0,
            sigma_exact: 0.0,
        });
    }
    let sigma_exact = eps.powf(1.0 / (spec.dim() as f64 - 1.0));
    let s = ((sigma_exact / h).round() as usize).max(1);
    let sigma = (s as f64 + 0.5) * h;
    let n = spec.cells_per_axis() as i64;
    let last = if direction.positive { i as i64 + s as i64 } else { i as i64 - s as i64 };
    if last < 0 || last >= n {
        return Err(ShapeError::Bounds(format!(
            "cylinder of {s} cells past layer {i} leaves the grid box along {direction}"
        )));
    }
    let mut out = dom.clone();
    let mut field = ScalarField::zeros(spec.clone());
    for idx in dom.occupied() {
        let l = spec.coords(idx)[axis];
        if direction.in_tail(l, i) {
            out.set(idx, false);
        } else {
            field.values[idx] = eig.u.values[idx];
        }
    }
    let stride = spec.stride(axis) as i64;
    for idx in dom.occupied() {
        if spec.coords(idx)[axis] != i {
            continue;
        }
        let u0 = eig.u.values[idx];
        for k in 1..=s {
            let off = if direction.positive { k as i64 } else { -(k as i64) };
            let j = (idx as i64 + off * stride) as usize;
            out.set(j, true);
            field.values[j] = (1.0 - k as f64 * h / sigma) * u0;
        }
    }
    Ok(CutExtension {
        domain: out,
        field,
        layer: i,
        cylinder_cells: s,
        sigma,
        sigma_exact,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayleighCheck {
    /// `R(ũ, Ω̃(t))`.
    pub rq_tilde: f64,
    /// Fresh `λ₁(Ω̃(t))`.
    pub lambda_tilde: f64,
    pub lambda: f64,
    /// `(R(ũ) − λ₁(Ω)) / (ε^{1/(N−1)} δ)`, when the denominator is positive.
    pub c3_ratio: Option<f64>,
    /// `λ₁(Ω̃(t)) ≤ R(ũ) (1 + 10⁻⁶)`.
    pub ok: bool,
}

pub fn rayleigh_bound_check(
    dom: &GridDomain,
    eig: &EigenSolution,
    t: f64,
    direction: Direction,
    opts: &SolverOptions,
) -> Result<RayleighCheck> {
    let stats = slice_statistics(dom, eig, direction)?;
    let ext = build_cut_extension(dom, eig, t, direction)?;
    let rq_tilde = rayleigh_quotient(&ext.domain, &ext.field);
    let lambda_tilde = first_eigenvalue(&ext.domain, opts)?;
    let i = ext.layer;
    let denom = stats.eps_t[i].powf(1.0 / (dom.dim() as f64 - 1.0)) * stats.delta_t[i];
    let c3_ratio = (denom > 0.0).then(|| (rq_tilde - eig.lambda1) / denom);
    if let Some(c) = c3_ratio {
        log::debug!("cut at {t:.4} along {direction}: C3 ratio {c:.4}");
    }
    Ok(RayleighCheck {
        rq_tilde,
        lambda_tilde,
        lambda: eig.lambda1,
        c3_ratio,
        ok: lambda_tilde <= rq_tilde * (1.0 + 1e-6),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trichotomy {
    /// `max{ε, δ} > 1`.
    Cond1,
    /// `m ≤ C₄(ε + δ)ε^{1/(N−1)}`.
    Cond2,
    /// Neither: the cut lowers the functional.
    Cond3,
}

impl fmt::Display for Trichotomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trichotomy::Cond1 => "cond1",
            Trichotomy::Cond2 => "cond2",
            Trichotomy::Cond3 => "cond3",
        })
    }
}

pub fn classify_trichotomy(stats: &SliceStats, t: f64, c4: f64) -> Trichotomy {
    classify_layer(stats, stats.layer_of(t), c4)
}

fn classify_layer(stats: &SliceStats, i: usize, c4: f64) -> Trichotomy {
    let (e, d, m) = (stats.eps_t[i], stats.delta_t[i], stats.m_t[i]);
    if e.max(d) > 1.0 {
        Trichotomy::Cond1
    } else if m <= c4 * (e + d) * e.powf(1.0 / (stats.dim as f64 - 1.0)) {
        Trichotomy::Cond2
    } else {
        Trichotomy::Cond3
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::solve_first_eigen;
    use crate::geometry::{make_ball, make_box, BallSpec, GridSpec, GridSpec as G};
    use std::f64::consts::PI;

    fn unit_square(cells: usize) -> (GridDomain, EigenSolution) {
        // the square [0, 1]² filling the whole box
        let spec = G::new(2, cells, 1.0 / cells as f64, &[0.0, 0.0]).unwrap();
        let dom = GridDomain::full(spec.clone());
        let mut u = ScalarField::zeros(spec.clone());
        for i in 0..spec.len() {
            let p = spec.center(i);
            u.values[i] = 2.0 * (PI * p[0]).sin() * (PI * p[1]).sin();
        }
        let eig = EigenSolution {
            u,
            lambda1: 2.0 * PI * PI,
            residual_norm: 0.0,
            outer_iterations: 0,
        };
        (dom, eig)
    }

    #[test]
    fn direction_round_trip() {
        for d in Direction::sweep_order(3) {
            assert_eq!(d.to_string().parse::<Direction>().unwrap(), d);
        }
        assert_eq!(Direction::sweep_order(2)[1].to_string(), "+e1");
        assert!("e1".parse::<Direction>().is_err());
        assert!("+e4".parse::<Direction>().is_err());
    }

    #[test]
    fn square_slices() {
        let (dom, eig) = unit_square(256);
        let st = slice_statistics(&dom, &eig, Direction::new(0, false)).unwrap();
        for i in 0..256 {
            assert!((st.eps_t[i] - 1.0).abs() < 1e-12);
        }
        // boundary layers carry the one-sided face error; interior matches 2π²
        for i in 8..248 {
            assert!((st.delta_t[i] / (2.0 * PI * PI) - 1.0).abs() < 0.02, "{i}: {}", st.delta_t[i]);
        }
        assert!(st.mu_ratios().iter().all(|r| r.is_finite() && *r > 0.0));
        assert_eq!(classify_trichotomy(&st, 0.5, DEFAULT_C4), Trichotomy::Cond1);
    }

    #[test]
    fn cumulative_sums_are_consistent() {
        let spec = GridSpec::centered(2, 96, 2.0).unwrap();
        let dom = make_ball(&spec, &BallSpec::with_measure(2, [0.0; 3], 1.0)).unwrap();
        let eig = solve_first_eigen(&dom, 1e-8).unwrap();
        let h = spec.spacing();
        for dir in Direction::sweep_order(2) {
            let st = slice_statistics(&dom, &eig, dir).unwrap();
            for i in 0..95 {
                let (a, b) = if dir.positive { (i + 1, i) } else { (i, i + 1) };
                assert!((st.m_t[b] - st.m_t[a] - st.eps_t[a] * h).abs() <= h * h);
                assert!((st.phi_t[b] - st.phi_t[a] - st.delta_t[a] * h).abs() <= h * h);
                assert!(st.m_t[b] >= st.m_t[a] && st.phi_t[b] >= st.phi_t[a]);
            }
            let total: f64 = st.delta_t.iter().sum::<f64>() * h;
            assert!((total / eig.lambda1 - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn ball_far_tail_is_cond2() {
        let spec = GridSpec::centered(2, 96, 2.0).unwrap();
        let dom = make_ball(&spec, &BallSpec::with_measure(2, [0.0; 3], 1.0)).unwrap();
        let eig = solve_first_eigen(&dom, 1e-8).unwrap();
        let st = slice_statistics(&dom, &eig, Direction::new(0, false)).unwrap();
        let r = BallSpec::with_measure(2, [0.0; 3], 1.0).radius;
        assert_eq!(classify_trichotomy(&st, -r - spec.spacing(), DEFAULT_C4), Trichotomy::Cond2);
        assert_eq!(classify_trichotomy(&st, -0.95, DEFAULT_C4), Trichotomy::Cond2);
        // the boundary slices already carry a steep gradient
        assert_eq!(classify_trichotomy(&st, -r + 0.5 * spec.spacing(), DEFAULT_C4), Trichotomy::Cond1);
        for &t in st.thresholds.iter().filter(|&&t| t <= -r) {
            assert_ne!(classify_trichotomy(&st, t, DEFAULT_C4), Trichotomy::Cond3);
        }
    }

    #[test]
    fn extension_endpoints() {
        let spec = GridSpec::centered(2, 80, 2.0).unwrap();
        let dom = make_box(&spec, &[-0.5, -0.3], &[0.5, 0.3]).unwrap();
        let eig = solve_first_eigen(&dom, 1e-8).unwrap();
        let dir = Direction::new(0, false);
        let ext = build_cut_extension(&dom, &eig, -0.3, dir).unwrap();
        let h = spec.spacing();
        let s = ext.cylinder_cells;
        assert!((s as f64 * h - ext.sigma_exact).abs() <= 0.5 * h + 1e-12);
        let stride = spec.stride(0);
        for idx in dom.occupied().filter(|&i| spec.coords(i)[0] == ext.layer) {
            assert_eq!(ext.field.values[idx], eig.u.values[idx]);
            let last = idx - s * stride;
            let prev = last + stride;
            // linear ramp extrapolated to the outer face is zero
            let face = ext.field.values[last] - 0.5 * (ext.field.values[prev] - ext.field.values[last]);
            assert!(face.abs() < 1e-12);
            assert!(!ext.domain.is_occupied(last - stride));
        }
        let rc = rayleigh_bound_check(&dom, &eig, -0.3, dir, &SolverOptions::default()).unwrap();
        assert!(rc.ok && rc.c3_ratio.unwrap().is_finite());
    }

    #[test]
    fn empty_tail_is_identity() {
        let spec = GridSpec::centered(2, 64, 2.0).unwrap();
        let dom = make_ball(&spec, &BallSpec::new([0.0; 3], 0.5)).unwrap();
        let eig = solve_first_eigen(&dom, 1e-8).unwrap();
        let ext = build_cut_extension(&dom, &eig, -0.9, Direction::new(0, false)).unwrap();
        assert_eq!(ext.domain, dom);
        let rc = rayleigh_bound_check(&dom, &eig, -0.9, Direction::new(0, false), &SolverOptions::default())
            .unwrap();
        assert!((rc.rq_tilde / eig.lambda1 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cylinder_outside_box() {
        let spec = GridSpec::centered(2, 64, 2.0).unwrap();
        let dom = make_box(&spec, &[-1.0, -0.5], &[0.5, 0.5]).unwrap();
        let eig = solve_first_eigen(&dom, 1e-8).unwrap();
        let r = build_cut_extension(&dom, &eig, -0.99, Direction::new(0, false));
        assert!(matches!(r, Err(ShapeError::Bounds(_))));
    }

    #[test]
    fn c4_moves_only_between_cond2_and_cond3() {
        let spec = GridSpec::centered(2, 96, 2.0).unwrap();
        let dom = make_box(&spec, &[-0.9, -0.05], &[0.4, 0.05])
            .unwrap()
            .union(&make_ball(&spec, &BallSpec::new([0.4, 0.0, 0.0], 0.5)).unwrap())
            .unwrap();
        let eig = solve_first_eigen(&dom, 1e-8).unwrap();
        let st = slice_statistics(&dom, &eig, Direction::new(0, false)).unwrap();
        for &t in &st.thresholds {
            let tags: Vec<_> = [2.5, 5.0, 10.0, 20.0, 80.0]
                .iter()
                .map(|&c| classify_trichotomy(&st, t, c))
                .collect();
            let ones = tags.iter().filter(|&&x| x == Trichotomy::Cond1).count();
            assert!(ones == 0 || ones == tags.len());
            // larger C4 never turns cond2 into cond3
            for w in tags.windows(2) {
                assert!(!(w[0] == Trichotomy::Cond2 && w[1] == Trichotomy::Cond3));
            }
        }
    }
}
