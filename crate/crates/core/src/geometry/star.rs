//! Star-shaped planar domains with a truncated Fourier radius function
//! `r(θ) = R (1 + φ(θ))`, `φ(θ) = Σ a_k cos kθ + Σ b_k sin kθ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::grid::{GridDomain, GridSpec, Point};
use crate::error::{Result, ShapeError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarBoundary {
    pub base_radius: f64,
    pub center: [f64; 2],
    /// `a_0 .. a_K`.
    pub fourier_cos: Vec<f64>,
    /// `b_0 .. b_K`; `b_0` is ignored and kept at zero.
    pub fourier_sin: Vec<f64>,
}

impl StarBoundary {
    pub fn circle(radius: f64, center: [f64; 2], max_mode: usize) -> Self {
        Self {
            base_radius: radius,
            center,
            fourier_cos: vec![0.0; max_mode + 1],
            fourier_sin: vec![0.0; max_mode + 1],
        }
    }

    /// Circle of area `area` centered at `center`.
    pub fn circle_with_area(area: f64, center: [f64; 2], max_mode: usize) -> Self {
        Self::circle((area / PI).sqrt(), center, max_mode)
    }

    /// Single-mode perturbation `a cos(kθ)` of a circle.
    pub fn single_mode(radius: f64, mode: usize, amplitude: f64, max_mode: usize) -> Self {
        let mut s = Self::circle(radius, [0.0, 0.0], max_mode.max(mode));
        s.fourier_cos[mode] = amplitude;
        s
    }

    pub fn max_mode(&self) -> usize {
        self.fourier_cos.len().saturating_sub(1)
    }

    pub fn phi(&self, theta: f64) -> f64 {
        let mut v = 0.0;
        for k in 0..self.fourier_cos.len() {
            let kt = k as f64 * theta;
            v += self.fourier_cos[k] * kt.cos();
            if k > 0 {
                v += self.fourier_sin.get(k).copied().unwrap_or(0.0) * kt.sin();
            }
        }
        v
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.base_radius * (1.0 + self.phi(theta))
    }

    fn sample_count(&self) -> usize {
        (16 * self.max_mode().max(1)).max(256)
    }

    /// Checks `R > 0`, matching coefficient lengths and `r(θ) > 0` on the sampling ring.
    pub fn validate(&self) -> Result<()> {
        if !(self.base_radius > 0.0 && self.base_radius.is_finite()) {
            return Err(ShapeError::Precondition(format!(
                "base radius must be positive, got {}",
                self.base_radius
            )));
        }
        if self.fourier_cos.len() != self.fourier_sin.len() || self.fourier_cos.is_empty() {
            return Err(ShapeError::Precondition(
                "cosine and sine coefficient lists must have equal non-zero length".into(),
            ));
        }
        let n = self.sample_count();
        for i in 0..n {
            let t = 2.0 * PI * i as f64 / n as f64;
            let r = self.radius(t);
            if !(r > 0.0) {
                return Err(ShapeError::Precondition(format!(
                    "radius function is non-positive ({r:.4}) at theta = {t:.4}"
                )));
            }
        }
        Ok(())
    }

    /// Upper bound of `r(θ)`: dense sample maximum plus the Lipschitz slack of
    /// the sampling step.
    pub fn max_radius(&self) -> f64 {
        let n = 4 * self.sample_count();
        let mut best: f64 = 0.0;
        for i in 0..n {
            best = best.max(self.radius(2.0 * PI * i as f64 / n as f64));
        }
        let lip: f64 = (1..self.fourier_cos.len())
            .map(|k| k as f64 * (self.fourier_cos[k].abs() + self.fourier_sin[k].abs()))
            .sum();
        best + self.base_radius * lip * PI / n as f64
    }

    /// Exact area `½∫ r² dθ` from the Fourier coefficients.
    pub fn area(&self) -> f64 {
        let a0 = self.fourier_cos[0];
        let mut s = 2.0 * PI * (1.0 + a0).powi(2);
        for k in 1..self.fourier_cos.len() {
            s += PI * (self.fourier_cos[k].powi(2) + self.fourier_sin[k].powi(2));
        }
        0.5 * self.base_radius.powi(2) * s
    }

    /// Same shape with `R` chosen so that the exact area equals `area`.
    pub fn with_area(&self, area: f64) -> Self {
        let mut out = self.clone();
        out.base_radius *= (area / self.area()).sqrt();
        out
    }

    pub fn contains(&self, p: &Point) -> bool {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let r = dx.hypot(dy);
        if r == 0.0 {
            return true;
        }
        r < self.radius(dy.atan2(dx))
    }

    /// Coefficient vector `[a_0..a_K, b_1..b_K]`.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut c = self.fourier_cos.clone();
        c.extend_from_slice(&self.fourier_sin[1..]);
        c
    }

    pub fn with_coefficients(&self, coeffs: &[f64]) -> Self {
        let k = self.max_mode();
        assert_eq!(coeffs.len(), 2 * k + 1, "coefficient vector length");
        let mut out = self.clone();
        out.fourier_cos.copy_from_slice(&coeffs[..=k]);
        out.fourier_sin[0] = 0.0;
        out.fourier_sin[1..].copy_from_slice(&coeffs[k + 1..]);
        out
    }
}

/// Cell-center rasterization of a star boundary. The shape must stay at least
/// one cell away from the box faces.
pub fn rasterize_star(boundary: &StarBoundary, spec: &GridSpec) -> Result<GridDomain> {
    if spec.dim() != 2 {
        return Err(ShapeError::Domain("star boundaries are planar".into()));
    }
    boundary.validate()?;
    let rmax = boundary.max_radius();
    let c = [boundary.center[0], boundary.center[1], 0.0];
    if !spec.contains_with_margin(&c, rmax + spec.spacing()) {
        return Err(ShapeError::Bounds(format!(
            "star boundary of radius up to {rmax:.4} does not fit the grid box"
        )));
    }
    Ok(GridDomain::from_predicate(spec.clone(), |p| boundary.contains(p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_formula_matches_quadrature() {
        let mut s = StarBoundary::circle(0.7, [0.0, 0.0], 4);
        s.fourier_cos[2] = 0.2;
        s.fourier_sin[3] = -0.1;
        s.fourier_cos[0] = 0.05;
        let n = 20_000;
        let quad: f64 = (0..n)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                0.5 * s.radius(t).powi(2)
            })
            .sum::<f64>()
            * 2.0
            * PI
            / n as f64;
        assert!((quad - s.area()).abs() < 1e-10);
    }

    #[test]
    fn negative_radius_is_rejected() {
        let s = StarBoundary::single_mode(1.0, 2, -1.5, 2);
        let spec = GridSpec::centered(2, 64, 6.0).unwrap();
        assert!(matches!(
            rasterize_star(&s, &spec),
            Err(ShapeError::Precondition(_))
        ));
    }

    #[test]
    fn oversized_star_is_a_bounds_error() {
        let s = StarBoundary::circle(1.0, [0.0, 0.0], 2);
        let spec = GridSpec::centered(2, 32, 2.0).unwrap();
        assert!(matches!(rasterize_star(&s, &spec), Err(ShapeError::Bounds(_))));
    }

    #[test]
    fn coefficient_roundtrip() {
        let mut s = StarBoundary::circle(1.0, [0.1, 0.0], 3);
        s.fourier_cos[1] = 0.3;
        s.fourier_sin[2] = 0.2;
        let c = s.coefficients();
        assert_eq!(c.len(), 7);
        assert_eq!(s.with_coefficients(&c), s);
    }
}
