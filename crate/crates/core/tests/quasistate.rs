use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sympack::quasistate::*;
use sympack::Error;

fn random_function(space: &DiscreteSpace, rng: &mut ChaCha8Rng) -> CellFunction {
    // Smooth part plus noise, so the contour trees have real saddles.
    let (a, b, c) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let values = space
        .centers
        .iter()
        .map(|p| a * p[0] + b * p[1] * p[2] + c * (3.0 * p[2]).sin() + 0.3 * rng.gen_range(-1.0..1.0))
        .collect();
    CellFunction::new(values).unwrap()
}

fn random_measure(space: &DiscreteSpace, rng: &mut ChaCha8Rng) -> DiscreteMeasure {
    let w: Vec<f64> = (0..space.len()).map(|_| rng.gen_range(0.0..1.0f64).powi(3)).collect();
    DiscreteMeasure::from_weights(&w).unwrap()
}

#[test]
fn integral_and_median_routes_agree() {
    let space = DiscreteSpace::cube_sphere(8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..100 {
        let mu = if i % 2 == 0 { DiscreteMeasure::uniform(&space, i) } else { random_measure(&space, &mut rng) };
        let f = random_function(&space, &mut rng);
        let a = zeta_integral(&space, &mu, &f).unwrap();
        let b = zeta_median(&space, &mu, &f).unwrap().value;
        assert_eq!(a.to_bits(), b.to_bits(), "case {i}");
    }
}

#[test]
fn pushforward_is_a_ring_homomorphism() {
    let space = DiscreteSpace::cube_sphere(8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let hs = [
        Poly::identity(),
        Poly::new(vec![0.0, 0.0, 1.0]),
        Poly::new(vec![0.1, -1.0, 0.0, 1.0]),
        Poly::new(vec![0.0, 2.0, 0.0, 0.5]),
    ];
    for i in 0..100 {
        let mu = random_measure(&space, &mut rng);
        let f = random_function(&space, &mut rng);
        let z = zeta_median(&space, &mu, &f).unwrap().value;
        for h in &hs {
            let got = pushforward_eval(&space, &mu, &f, h).unwrap();
            assert_eq!(got.to_bits(), h.eval(z).to_bits(), "case {i}, h = {:?}", h.coeffs);
        }
    }
}

#[test]
fn simplicity_of_squares() {
    let space = DiscreteSpace::cube_sphere(8).unwrap();
    let mu = DiscreteMeasure::uniform(&space, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let sq = Poly::new(vec![0.0, 0.0, 1.0]);
    for _ in 0..100 {
        let f = random_function(&space, &mut rng);
        let z = zeta_integral(&space, &mu, &f).unwrap();
        assert_eq!(pushforward_eval(&space, &mu, &f, &sq).unwrap(), z * z);
    }
}

#[test]
fn normalization_and_constant_shift() {
    let space = DiscreteSpace::cube_sphere(6).unwrap();
    let mu = DiscreteMeasure::uniform(&space, 0);
    let one = CellFunction::new(vec![1.0; space.len()]).unwrap();
    assert_eq!(zeta_integral(&space, &mu, &one).unwrap(), 1.0);
    assert_eq!(zeta_median(&space, &mu, &one).unwrap().value, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let f = random_function(&space, &mut rng);
    let z = zeta_median(&space, &mu, &f).unwrap().value;
    for c in [-3.0, 0.25, 8.0] {
        let g = f.map(|v| v + c);
        assert_eq!(zeta_median(&space, &mu, &g).unwrap().value, z + c);
    }
}

#[test]
fn heavy_atom_collapses_to_evaluation() {
    let space = DiscreteSpace::cube_sphere(8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..100 {
        let x0 = rng.gen_range(0..space.len());
        let mu = DiscreteMeasure::with_atom(&space, x0, 0.6, 1).unwrap();
        let f = random_function(&space, &mut rng);
        assert_eq!(zeta_median(&space, &mu, &f).unwrap().value, f.values[x0]);
        assert_eq!(zeta_integral(&space, &mu, &f).unwrap(), f.values[x0]);
        assert!(superheavy_check(&space, &mu, &indicator(&space, &[x0]).unwrap()).unwrap());
    }
}

#[test]
fn height_function_on_uniform_sphere() {
    let space = DiscreteSpace::cube_sphere(32).unwrap();
    let mu = DiscreteMeasure::uniform(&space, 0);
    let f = CellFunction::height(&space);
    let z = zeta_integral(&space, &mu, &f).unwrap();
    assert!(z.abs() < 2.0 / 32.0, "{z}");
    let fiber = special_fiber_component(&space, &mu, &f).unwrap();
    assert!(fiber.iter().all(|&c| space.centers[c][2].abs() < 0.1));
    let set = indicator(&space, &fiber).unwrap();
    assert!(superheavy_check(&space, &mu, &set).unwrap());
}

#[test]
fn plateau_function_takes_heavy_plateau() {
    // Northern cap of mass 0.6 at level 0.7, the rest at 0.3.
    let space = DiscreteSpace::cube_sphere(6).unwrap();
    let cap: Vec<bool> = space.centers.iter().map(|c| c[2] > 0.0).collect();
    let n_cap = cap.iter().filter(|&&b| b).count() as f64;
    let n_rest = space.len() as f64 - n_cap;
    let masses: Vec<f64> = cap.iter().map(|&b| if b { 0.6 / n_cap } else { 0.4 / n_rest }).collect();
    let mu = DiscreteMeasure::from_masses(&space, &masses).unwrap();
    let f = CellFunction::new(cap.iter().map(|&b| if b { 0.7 } else { 0.3 }).collect()).unwrap();
    assert!(is_solid(&space, &cap).unwrap());
    assert_eq!(zeta_integral(&space, &mu, &f).unwrap(), 0.7);
    assert_eq!(zeta_median(&space, &mu, &f).unwrap().value, 0.7);
}

#[test]
fn exact_half_split_is_flagged() {
    let space = DiscreteSpace::cube_sphere(4).unwrap();
    let cap: Vec<bool> = space.centers.iter().map(|c| c[2] > 0.0).collect();
    let n_cap = cap.iter().filter(|&&b| b).count() as f64;
    let masses: Vec<f64> = cap.iter().map(|&b| if b { 0.5 / n_cap } else { 0.5 / (space.len() as f64 - n_cap) }).collect();
    let mu = DiscreteMeasure::from_weights(&masses).unwrap();
    assert_eq!(mu.units_of(&cap), HALF_UNITS);
    let f = CellFunction::new(cap.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()).unwrap();
    assert_eq!(zeta_median(&space, &mu, &f), Err(Error::MedianAmbiguous));
    assert_eq!(zeta_integral(&space, &mu, &f), Err(Error::MedianAmbiguous));
}

#[test]
fn special_fibers_are_superheavy_and_intersect() {
    let space = DiscreteSpace::cube_sphere(8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mu = random_measure(&space, &mut rng);
    let fibers: Vec<Vec<bool>> = (0..12)
        .map(|_| {
            let f = random_function(&space, &mut rng);
            let c = special_fiber_component(&space, &mu, &f).unwrap();
            let set = indicator(&space, &c).unwrap();
            assert!(superheavy_check(&space, &mu, &set).unwrap());
            set
        })
        .collect();
    for (i, a) in fibers.iter().enumerate() {
        for b in &fibers[i + 1..] {
            assert!(a.iter().zip(b).any(|(x, y)| *x && *y));
        }
    }
}

#[test]
fn complement_rule_on_solid_caps() {
    let space = DiscreteSpace::cube_sphere(6).unwrap();
    let mu = DiscreteMeasure::uniform(&space, 2);
    for t in [-0.9, -0.3, 0.1, 0.6] {
        let cap: Vec<bool> = space.centers.iter().map(|c| c[2] > t).collect();
        let rest: Vec<bool> = cap.iter().map(|b| !b).collect();
        let a = aarnes_tau(&space, &mu, &cap, false).unwrap();
        let b = aarnes_tau(&space, &mu, &rest, true).unwrap();
        assert_eq!(a + b, 1, "t = {t}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monotone_and_lipschitz(seed in any::<u64>(), bump in 0.0f64..0.5) {
        let space = DiscreteSpace::cube_sphere(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_measure(&space, &mut rng);
        let f = random_function(&space, &mut rng);
        let g = CellFunction::new(f.values.iter().map(|v| v + bump * rng.gen_range(0.0..1.0)).collect()).unwrap();
        let zf = zeta_median(&space, &mu, &f).unwrap().value;
        let zg = zeta_median(&space, &mu, &g).unwrap().value;
        let sup = f.values.iter().zip(&g.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(zf <= zg);
        prop_assert!((zf - zg).abs() <= sup);
    }

    #[test]
    fn monotone_reparametrization(seed in any::<u64>()) {
        let space = DiscreteSpace::cube_sphere(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_measure(&space, &mut rng);
        let f = random_function(&space, &mut rng);
        let z = zeta_integral(&space, &mu, &f).unwrap();
        let g = f.map(f64::exp);
        prop_assert_eq!(zeta_integral(&space, &mu, &g).unwrap(), z.exp());
    }
}
