use proptest::prelude::*;

use shapelab::fields::{rayleigh_quotient, solve_first_eigen, SolverOptions};
use shapelab::functionals::{
    container_lower_bound, evaluate_all, f_eta, first_eigenvalue, mass_to_epsilon_eigen, mass_to_epsilon_torsion,
    torsion_energy, PenaltyParams,
};
use shapelab::geometry::{
    diameter, dilate_about, fraenkel_asymmetry, make_box, measure, rasterize_star, rescale_to_measure,
    symmetric_difference_measure, GridDomain, GridSpec, StarBoundary,
};

fn star(coeffs: &[(f64, f64)], area: f64) -> StarBoundary {
    let mut s = StarBoundary::circle(1.0, [0.0, 0.0], coeffs.len() + 1);
    for (i, &(amp, ph)) in coeffs.iter().enumerate() {
        let k = i + 2;
        s.fourier_cos[k] = amp / k as f64 * ph.cos();
        s.fourier_sin[k] = amp / k as f64 * ph.sin();
    }
    s.with_area(area)
}

fn star_coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((0.0f64..0.5, 0.0f64..std::f64::consts::TAU), 5)
}

fn opts() -> SolverOptions {
    SolverOptions::with_tol(1e-9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn symmetric_difference_identity(
        a in proptest::collection::vec(any::<bool>(), 400),
        b in proptest::collection::vec(any::<bool>(), 400),
    ) {
        // h = 1/16 keeps cell volumes exact in binary
        let spec = GridSpec::centered(2, 20, 1.25).unwrap();
        let a = GridDomain::new(spec.clone(), a).unwrap();
        let b = GridDomain::new(spec, b).unwrap();
        let cap = measure(&a.intersection(&b).unwrap());
        let sym = symmetric_difference_measure(&a, &b).unwrap();
        prop_assert!(sym >= 0.0);
        prop_assert_eq!(sym, measure(&a) + measure(&b) - 2.0 * cap);
    }

    #[test]
    fn f_eta_is_bi_lipschitz(s1 in 0.0f64..4.0, s2 in 0.0f64..4.0, eta in 0.01f64..0.99) {
        let (hi, lo) = if s1 >= s2 { (s1, s2) } else { (s2, s1) };
        let diff = f_eta(hi, eta) - f_eta(lo, eta);
        let tol = 1e-12 * (1.0 + hi);
        prop_assert!(eta * (hi - lo) <= diff + tol);
        prop_assert!(diff <= (hi - lo) / eta + tol);
    }

    #[test]
    fn mass_maps_are_monotone(m1 in 0.05f64..5.0, m2 in 0.05f64..5.0, alpha in 0.1f64..1.95) {
        prop_assume!((m1 - m2).abs() > 1e-6);
        let (lo, hi) = if m1 < m2 { (m1, m2) } else { (m2, m1) };
        for dim in [2, 3] {
            prop_assert!(mass_to_epsilon_eigen(lo, dim, alpha).unwrap() < mass_to_epsilon_eigen(hi, dim, alpha).unwrap());
            // α < 2: the torsion map decreases in m
            prop_assert!(mass_to_epsilon_torsion(lo, dim, alpha).unwrap() > mass_to_epsilon_torsion(hi, dim, alpha).unwrap());
        }
        let a3 = 2.0 + alpha / 2.0;
        prop_assert!(mass_to_epsilon_torsion(lo, 3, a3).unwrap() < mass_to_epsilon_torsion(hi, 3, a3).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn asymmetry_lies_in_range(c in star_coeffs()) {
        let spec = GridSpec::centered(2, 64, 2.6).unwrap();
        let dom = rasterize_star(&star(&c, 1.0), &spec).unwrap();
        let a = fraenkel_asymmetry(&dom).unwrap().value;
        prop_assert!((0.0..2.0).contains(&a), "{a}");
    }

    #[test]
    fn rescales_compose(c in star_coeffs(), m1 in 0.5f64..1.5, m2 in 0.5f64..1.5) {
        let spec = GridSpec::centered(2, 128, 3.2).unwrap();
        let dom = rasterize_star(&star(&c, 1.0), &spec).unwrap();
        let once = rescale_to_measure(&dom, m2).unwrap();
        let twice = rescale_to_measure(&rescale_to_measure(&dom, m1).unwrap(), m2).unwrap();
        prop_assert!((measure(&once) / m2 - 1.0).abs() < 0.02);
        prop_assert!((measure(&twice) / measure(&once) - 1.0).abs() < 0.02);
    }

    #[test]
    fn diameter_scales(c in star_coeffs(), t in 0.5f64..1.6) {
        let spec = GridSpec::centered(2, 128, 3.2).unwrap();
        let dom = rasterize_star(&star(&c, 1.0), &spec).unwrap();
        let scaled = dilate_about(&dom, t, &[0.0; 3]).unwrap();
        let (d0, d1) = (diameter(&dom).unwrap(), diameter(&scaled).unwrap());
        prop_assert!((d1 - t * d0).abs() <= 2.0 * spec.spacing() * (1.0 + t), "{d0} {d1}");
    }

    #[test]
    fn torsion_and_eigenvalue_are_monotone_under_inclusion(c in star_coeffs(), grow in 1.05f64..1.5) {
        let spec = GridSpec::centered(2, 64, 3.2).unwrap();
        let s = star(&c, 0.8);
        let inner = rasterize_star(&s, &spec).unwrap();
        let outer = rasterize_star(&s.with_area(0.8 * grow), &spec).unwrap();
        prop_assert_eq!(inner.difference(&outer).unwrap().count(), 0);
        let (e_in, e_out) = (torsion_energy(&inner, &opts()).unwrap(), torsion_energy(&outer, &opts()).unwrap());
        prop_assert!(e_in < 0.0 && e_out <= e_in);
        let (l_in, l_out) = (first_eigenvalue(&inner, &opts()).unwrap(), first_eigenvalue(&outer, &opts()).unwrap());
        prop_assert!(l_out <= l_in);
    }

    #[test]
    fn rayleigh_identity(c in star_coeffs()) {
        let spec = GridSpec::centered(2, 64, 2.6).unwrap();
        let dom = rasterize_star(&star(&c, 1.0), &spec).unwrap();
        let eig = solve_first_eigen(&dom, 1e-9).unwrap();
        let rq = rayleigh_quotient(&dom, &eig.u);
        prop_assert!((rq - eig.lambda1).abs() <= 1e-8 * eig.lambda1, "{rq} {}", eig.lambda1);
    }

    #[test]
    fn penalized_functional_respects_container_bound(c in star_coeffs(), area in 0.3f64..1.5, eps in 0.0f64..0.5) {
        let spec = GridSpec::centered(2, 64, 4.0).unwrap();
        let radius = 1.9;
        let params = PenaltyParams::new(0.5, eps, 1.5, radius).unwrap();
        let dom = rasterize_star(&star(&c, area), &spec).unwrap();
        let rep = evaluate_all(&dom, &params, false).unwrap();
        prop_assert!(rep.g >= container_lower_bound(2, radius, 0.5));
    }
}

#[test]
fn penalized_equals_unpenalized_at_unit_measure() {
    // 32 × 32 cells of side 1/32
    let spec = GridSpec::centered(2, 64, 2.0).unwrap();
    let dom = make_box(&spec, &[-0.5, -0.5], &[0.5, 0.5]).unwrap();
    assert_eq!(measure(&dom), 1.0);
    let rep = evaluate_all(&dom, &PenaltyParams::unconstrained(0.3, 1.5).unwrap(), false).unwrap();
    assert_eq!(rep.g, rep.f);
}
