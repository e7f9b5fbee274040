use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shapelab::geometry::{
    make_ball, make_ellipsoid_with_measure, measure, rasterize_star, BallSpec, GridDomain, GridSpec, StarBoundary,
};
use shapelab::riesz::{
    c0_constant, km_difference_bound_check, riesz_energy, riesz_potential, riesz_potential_direct,
};

const ALPHA: f64 = 1.5;

fn center_value(dom: &GridDomain) -> f64 {
    let spec = dom.spec();
    let idx = spec.cell_of(&[0.0; 3]).unwrap();
    riesz_potential(dom, ALPHA).unwrap().v.values[idx]
}

#[test]
fn potential_at_center_scales_like_t_alpha() {
    // odd cell count puts a cell center on the origin
    let spec = GridSpec::centered(2, 129, 1.6).unwrap();
    let small = make_ball(&spec, &BallSpec::new([0.0; 3], 0.3)).unwrap();
    let big = make_ball(&spec, &BallSpec::new([0.0; 3], 0.6)).unwrap();
    let ratio = center_value(&big) / center_value(&small);
    let want = 2f64.powf(ALPHA);
    assert!((ratio / want - 1.0).abs() < 0.02, "{ratio} vs {want}");
}

#[test]
fn energy_scales_like_t_n_plus_alpha() {
    let spec = GridSpec::centered(2, 128, 1.6).unwrap();
    let b = make_ball(&spec, &BallSpec::new([0.0; 3], 0.3)).unwrap();
    let b2 = make_ball(&spec, &BallSpec::new([0.0; 3], 0.6)).unwrap();
    let ratio = riesz_energy(&b2, ALPHA).unwrap() / riesz_energy(&b, ALPHA).unwrap();
    let want = 2f64.powf(2.0 + ALPHA);
    assert!((ratio / want - 1.0).abs() < 0.03, "{ratio} vs {want}");
}

#[test]
fn ball_beats_ellipse_of_equal_measure() {
    for dim in [2, 3] {
        let cells = if dim == 2 { 128 } else { 40 };
        let spec = GridSpec::centered(dim, cells, 2.2).unwrap();
        let ball = make_ball(&spec, &BallSpec::with_measure(dim, [0.0; 3], 1.0)).unwrap();
        let ell = make_ellipsoid_with_measure(&spec, [0.0; 3], 1.0, 1.6).unwrap();
        let vb = riesz_energy(&ball, ALPHA).unwrap() / measure(&ball).powf((dim as f64 + ALPHA) / dim as f64);
        let ve = riesz_energy(&ell, ALPHA).unwrap() / measure(&ell).powf((dim as f64 + ALPHA) / dim as f64);
        assert!(vb > ve, "N={dim}: ball {vb} ellipse {ve}");
    }
}

#[test]
fn far_pair_matches_multipole_expansion() {
    let spec = GridSpec::centered(2, 256, 1.2).unwrap();
    let r = 0.05;
    let d = 1.0;
    let a = make_ball(&spec, &BallSpec::new([-0.5 * d, 0.0, 0.0], r)).unwrap();
    let b = make_ball(&spec, &BallSpec::new([0.5 * d, 0.0, 0.0], r)).unwrap();
    let pair = a.union(&b).unwrap();
    let (ma, mb) = (measure(&a), measure(&b));
    let want = riesz_energy(&a, ALPHA).unwrap()
        + riesz_energy(&b, ALPHA).unwrap()
        + 2.0 * ma * mb * d.powf(ALPHA - 2.0);
    let got = riesz_energy(&pair, ALPHA).unwrap();
    assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
}

#[test]
fn c0_closed_forms() {
    assert!((c0_constant(2, 1.0).unwrap() - 2.0 * std::f64::consts::PI.sqrt()).abs() < 1e-12);
    let w3 = 4.0 * std::f64::consts::PI / 3.0;
    let r = (3.0 / (4.0 * std::f64::consts::PI)).powf(1.0 / 3.0);
    assert!((c0_constant(3, 2.0).unwrap() - 1.5 * w3 * r * r).abs() < 1e-12);
    assert!(c0_constant(2, 0.0).is_err());
    assert!(c0_constant(3, 3.0).is_err());
}

#[test]
fn difference_bound_trivial_and_half_ball() {
    let spec = GridSpec::centered(2, 96, 1.4).unwrap();
    let ball = make_ball(&spec, &BallSpec::with_measure(2, [0.0; 3], 1.0)).unwrap();
    let same = km_difference_bound_check(&ball, &ball, ALPHA).unwrap();
    assert_eq!(same.lhs, 0.0);
    assert_eq!(same.rhs, 0.0);
    assert!(same.ok);

    let half = GridDomain::from_predicate(spec.clone(), |p| p[0] < 0.0).intersection(&ball).unwrap();
    let chk = km_difference_bound_check(&half, &ball, ALPHA).unwrap();
    assert!(chk.lhs > 0.0);
    assert!(chk.ok, "{chk:?}");
}

fn random_star(rng: &mut ChaCha8Rng, area: f64) -> StarBoundary {
    let mut s = StarBoundary::circle(1.0, [0.0, 0.0], 6);
    for k in 2..=6 {
        let amp = rng.gen_range(0.0..0.4) / k as f64;
        let ph: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        s.fourier_cos[k] = amp * ph.cos();
        s.fourier_sin[k] = amp * ph.sin();
    }
    s.with_area(area)
}

#[test]
fn difference_bound_on_fifty_random_pairs() {
    let spec = GridSpec::centered(2, 96, 2.6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for i in 0..50 {
        let area = rng.gen_range(0.6..1.2);
        let s = random_star(&mut rng, area);
        let mut t = s.clone();
        for k in 2..=6 {
            t.fourier_cos[k] += rng.gen_range(-0.05..0.05);
            t.fourier_sin[k] += rng.gen_range(-0.05..0.05);
        }
        let t = t.with_area(s.area() * rng.gen_range(0.8..1.25));
        let a = rasterize_star(&s, &spec).unwrap();
        let b = rasterize_star(&t, &spec).unwrap();
        let chk = km_difference_bound_check(&a, &b, ALPHA).unwrap();
        assert!(chk.ok, "pair {i}: {chk:?}");
    }
}

fn mask_strategy(dim: usize, cells: usize) -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(proptest::bool::weighted(0.4), cells.pow(dim as u32))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fft_equals_pairwise_sum_in_2d(mask in mask_strategy(2, 16), alpha in 0.3f64..1.9) {
        let spec = GridSpec::centered(2, 16, 1.0).unwrap();
        let dom = GridDomain::new(spec, mask).unwrap();
        let fft = riesz_potential(&dom, alpha).unwrap().energy;
        let direct = riesz_potential_direct(&dom, alpha).unwrap().energy;
        prop_assert!((fft - direct).abs() <= 1e-12 * direct.abs().max(f64::MIN_POSITIVE), "{fft} {direct}");
    }

    #[test]
    fn energy_grows_when_a_cell_is_added(mask in mask_strategy(2, 20), pick in 0usize..400, alpha in 0.3f64..1.9) {
        let spec = GridSpec::centered(2, 20, 1.0).unwrap();
        let mut dom = GridDomain::new(spec, mask).unwrap();
        let free: Vec<usize> = (0..400).filter(|&i| !dom.is_occupied(i)).collect();
        prop_assume!(!free.is_empty());
        let before = riesz_energy(&dom, alpha).unwrap();
        prop_assert!(before >= 0.0);
        dom.set(free[pick % free.len()], true);
        prop_assert!(riesz_energy(&dom, alpha).unwrap() > before);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn fft_equals_pairwise_sum_in_3d(mask in mask_strategy(3, 16), alpha in 0.3f64..2.9) {
        let spec = GridSpec::centered(3, 16, 1.0).unwrap();
        let dom = GridDomain::new(spec, mask).unwrap();
        let fft = riesz_potential(&dom, alpha).unwrap();
        let direct = riesz_potential_direct(&dom, alpha).unwrap();
        prop_assert!((fft.energy - direct.energy).abs() <= 1e-12 * direct.energy);
        let scale = direct.v.values.iter().cloned().fold(0.0, f64::max);
        for (x, y) in fft.v.values.iter().zip(&direct.v.values) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }
}
