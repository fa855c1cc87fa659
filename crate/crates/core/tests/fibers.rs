use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sympack::assembly::build_total_embedding;
use sympack::fibers::*;
use sympack::measure::MeasureSpec;
use sympack::Error;

fn polydisk_points(a: &[f64], n: usize, fill: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            a.iter()
                .flat_map(|&aj| {
                    let r = (fill * aj * rng.gen_range(0.0..1.0f64)).sqrt();
                    let th = rng.gen_range(0.0..std::f64::consts::TAU);
                    [r * th.cos(), r * th.sin()]
                })
                .collect()
        })
        .collect()
}

#[test]
fn standard_moment_map_is_involutive() {
    let pts = polydisk_points(&[1.0, 2.0, 0.5], 1000, 1.0, 1);
    let phi = |z: &[f64]| Ok(phi_std(z));
    let r = involutivity_certify(&phi, &pts, 1e-5);
    assert_eq!(r.skipped, 0);
    assert!(r.max_bracket <= 1e-10, "{r:?}");
}

#[test]
fn cutoff_moment_map_is_involutive() {
    let a = [1.0, 1.0, 1.0];
    let pts = polydisk_points(&a, 1000, 0.8, 2);
    let phi = |z: &[f64]| Ok(rho_a(&a, &phi_std(z)));
    let r = involutivity_certify(&phi, &pts, 1e-5);
    assert!(r.max_bracket <= 1e-8, "{r:?}");
}

#[test]
fn fibers_round_trip_with_all_sign_choices() {
    let a = [1.0, 1.0, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let t: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.9..0.9)).collect();
        let c = rho_a(&a, &t);
        let sol = rho_fiber_solve(&a, &c).unwrap();
        let FiberSolution::Product { alpha, residual } = &sol else { panic!("{sol:?}") };
        assert!(*residual <= 1e-10);
        for (x, y) in alpha.iter().zip(&t) {
            assert!((x - y.abs()).abs() < 1e-8, "{alpha:?} vs {t:?}");
        }
        let pts = sol.points();
        assert_eq!(pts.len(), 1 << torus_dimension(alpha));
        for p in pts {
            let back = rho_a(&a, &p);
            assert!(back.iter().zip(&c).all(|(u, v)| (u - v).abs() <= 1e-10));
        }
    }
}

#[test]
fn center_value_is_the_origin_fiber() {
    let a = [1.0, 0.5];
    let c = rho_a(&a, &[0.0, 0.0]);
    // The branch is flat to second order at the peak, so `t_1` is only
    // resolved to about the square root of machine precision.
    let sol = rho_fiber_solve(&a, &c).unwrap();
    let FiberSolution::Product { alpha, residual } = &sol else { panic!("{sol:?}") };
    assert!(alpha.iter().all(|x| x.abs() < 1e-7) && *residual <= 1e-12);
    assert!(rho_fiber_solve(&a, &[c[0] * 1.01, c[1] * 1.01]) == Err(Error::NotInImage));
}

#[test]
fn identity_chart_values() {
    let chart = IdentityChart { b: vec![2.0, 2.0] };
    let a = [1.0, 1.5];
    assert_eq!(phi_iota_a(&chart, &a, &[3.0, 0.0, 0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    let w = [0.3, 0.4, 0.0, 0.5];
    assert_eq!(phi_iota_a(&chart, &a, &w).unwrap(), rho_a(&a, &phi_std(&w)));
    assert!(phi_iota_a(&chart, &[2.5, 1.0], &w).is_err());
}

#[test]
fn embedded_fibers_are_image_tori() {
    let mu = MeasureSpec::from_json(include_str!("../data/three-atoms.json")).unwrap();
    let chart = EmbeddedChart::new(build_total_embedding(&mu, 0.1).unwrap());
    let a: Vec<f64> = chart.radii_squared().iter().map(|x| 0.9 * x).collect();
    let alpha: Vec<f64> = a.iter().map(|x| 0.5 * x).collect();
    let c = rho_a(&a, &alpha);
    let FiberSolution::Product { alpha: found, .. } = rho_fiber_solve(&a, &c).unwrap() else { panic!() };
    for (x, y) in found.iter().zip(&alpha) {
        assert!((x - y).abs() <= 1e-8 * y);
    }
    for w in torus_points(&alpha, 50, 9) {
        let z = chart.embed(&w).unwrap();
        let v = phi_iota_a(&chart, &a, &z).unwrap();
        for (p, q) in v.iter().zip(&c) {
            assert!((p - q).abs() <= 1e-9 * q, "{v:?} vs {c:?}");
        }
    }
    // Far from every cube the map vanishes.
    assert_eq!(phi_iota_a(&chart, &a, &[50.0, 50.0, 50.0, 50.0]).unwrap(), vec![0.0, 0.0]);
}

#[test]
fn embedded_map_brackets_shrink_quadratically() {
    let mu = MeasureSpec::from_json(include_str!("../data/three-atoms.json")).unwrap();
    let chart = EmbeddedChart::new(build_total_embedding(&mu, 0.1).unwrap());
    let eta = chart.total.plan().eta;
    let a: Vec<f64> = chart.radii_squared().iter().map(|x| 0.9 * x).collect();
    let pts = chart.sample_image(300, 5, 0.1, 0.85).unwrap();
    let phi = |z: &[f64]| phi_iota_a(&chart, &a, z);
    let study = step_halving_study(&phi, &pts, eta / 200.0, 3);
    assert!(study.iter().all(|r| r.skipped == 0));
    for w in study.windows(2) {
        let ratio = w[0].max_normalized / w[1].max_normalized;
        assert!(ratio > 3.0 && ratio < 5.0, "{study:?}");
    }
    assert!(study[2].max_normalized <= 1e-4 && study[2].max_bracket <= 1e-4);
}

proptest! {
    #[test]
    fn rho_vanishes_off_the_box(t in prop::collection::vec(-3.0f64..3.0, 3), j in 0usize..3, s in 1.0f64..2.0) {
        let a = [1.0, 0.7, 1.3];
        let mut t = t;
        t[j] = s * a[j] * if t[j] < 0.0 { -1.0 } else { 1.0 };
        prop_assert_eq!(rho_a(&a, &t), vec![0.0; 3]);
    }

    #[test]
    fn rho_is_even_per_axis(t in prop::collection::vec(-1.0f64..1.0, 3), j in 0usize..3) {
        let a = [1.0, 1.0, 1.0];
        let mut u = t.clone();
        u[j] = -u[j];
        prop_assert_eq!(rho_a(&a, &t), rho_a(&a, &u));
    }

    #[test]
    fn fiber_round_trip(t in prop::collection::vec(0.01f64..0.85, 2..5)) {
        let a: Vec<f64> = (0..t.len()).map(|j| 1.0 + 0.25 * j as f64).collect();
        let t: Vec<f64> = t.iter().zip(&a).map(|(x, y)| x * y).collect();
        let c = rho_a(&a, &t);
        let sol = rho_fiber_solve(&a, &c).unwrap();
        for p in sol.points() {
            let back = rho_a(&a, &p);
            prop_assert!(back.iter().zip(&c).all(|(u, v)| (u - v).abs() <= 1e-10));
        }
    }
}
