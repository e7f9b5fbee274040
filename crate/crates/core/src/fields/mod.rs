//! Dirichlet problems on masked grids: torsion, first eigenpair, boundary flux.

pub mod flux;
pub mod laplacian;
pub mod solvers;

pub use flux::{
    boundary_flux, density_estimate_scan, eigen_flux, torsion_flux, BoundaryFlux, DensityScan,
    FieldSource, FluxSample,
};
pub use laplacian::MaskedLaplacian;
pub use solvers::{
    dirichlet_energy, rayleigh_quotient, solve_first_eigen, solve_first_eigen_with, solve_torsion,
    solve_torsion_with, EigenSolution, ScalarField, SolverOptions, TorsionSolution,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_ball, make_box, measure, BallSpec, GridSpec};
    use std::f64::consts::PI;

    const J01: f64 = 2.404_825_557_695_773;

    #[test]
    fn disk_torsion_energy() {
        let spec = GridSpec::centered(2, 128, 2.2).unwrap();
        let dom = make_ball(&spec, &BallSpec::new([0.0; 3], 1.0)).unwrap();
        let sol = solve_torsion(&dom, 1e-8).unwrap();
        let exact = -PI / 16.0;
        assert!(((sol.energy - exact) / exact).abs() < 0.02, "{}", sol.energy);
        assert!(sol.residual_norm <= 1e-8);
    }

    #[test]
    fn disk_eigenvalue_and_rayleigh_identity() {
        let spec = GridSpec::centered(2, 128, 2.2).unwrap();
        let dom = make_ball(&spec, &BallSpec::new([0.0; 3], 1.0)).unwrap();
        let sol = solve_first_eigen(&dom, 1e-8).unwrap();
        assert!(((sol.lambda1 - J01 * J01) / (J01 * J01)).abs() < 0.01, "{}", sol.lambda1);
        assert!(sol.u.values.iter().all(|&v| v >= 0.0));
        let rq = rayleigh_quotient(&dom, &sol.u);
        assert!(((rq - sol.lambda1) / sol.lambda1).abs() < 1e-7);
        let mass: f64 = sol.u.values.iter().map(|v| v * v).sum::<f64>() * spec.cell_volume();
        assert!((mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn disconnected_eigen_is_rejected_but_torsion_adds() {
        let spec = GridSpec::centered(2, 64, 4.0).unwrap();
        let a = make_ball(&spec, &BallSpec::new([-1.0, 0.0, 0.0], 0.5)).unwrap();
        let b = make_ball(&spec, &BallSpec::new([1.0, 0.0, 0.0], 0.5)).unwrap();
        let both = a.union(&b).unwrap();
        assert!(matches!(
            solve_first_eigen(&both, 1e-8),
            Err(crate::ShapeError::Precondition(_))
        ));
        let ea = solve_torsion(&a, 1e-10).unwrap().energy;
        let eb = solve_torsion(&b, 1e-10).unwrap().energy;
        let e = solve_torsion(&both, 1e-10).unwrap().energy;
        assert!((e - ea - eb).abs() < 1e-9 * e.abs());
    }

    #[test]
    fn torsion_flux_on_disk_is_nearly_constant() {
        let spec = GridSpec::centered(2, 128, 2.2).unwrap();
        let dom = make_ball(&spec, &BallSpec::new([0.0; 3], 1.0)).unwrap();
        let sol = solve_torsion(&dom, 1e-10).unwrap();
        let flux = torsion_flux(&dom, &sol);
        assert!(flux.dropped.is_empty());
        assert!((flux.mean() - 0.5).abs() < 0.02, "{}", flux.mean());
        assert!(flux.relative_spread() < 0.05, "{}", flux.relative_spread());
    }

    #[test]
    fn half_plane_density_is_one_half() {
        let spec = GridSpec::centered(2, 64, 2.0).unwrap();
        let dom = make_box(&spec, &[-0.9, -0.9], &[0.0, 0.9]).unwrap();
        let scan = density_estimate_scan(&dom, 6.0 * spec.spacing()).unwrap();
        // the straight edge at x = 0 away from the corners
        let mid: Vec<f64> = scan
            .samples
            .iter()
            .filter(|(p, _)| p[0] > -0.1 && p[1].abs() < 0.4)
            .map(|s| s.1)
            .collect();
        assert!(!mid.is_empty());
        assert!(mid.iter().all(|r| (r - 0.5).abs() < 0.05));
        assert!(measure(&dom) > 0.0);
    }
}
