use std::sync::Arc;

use sympack::assembly::*;
use sympack::audit::{defect_stats, injectivity};
use sympack::cli::box_points;
use sympack::geometry::{hamiltonian_flow, SymplecticMap};
use sympack::lattice::measure_of_lattice;
use sympack::measure::*;

use rand::Rng;

fn three_atoms() -> MeasureSpec {
    MeasureSpec::from_json(include_str!("../data/three-atoms.json")).unwrap()
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn point_in(rng: &mut impl Rng, c: &[f64], rad: f64) -> Vec<f64> {
    c.iter().map(|x| x + rad * rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn plan_invariants_hold() {
    let mu = three_atoms();
    for eps in [0.5, 0.2, 0.1, 0.05] {
        let plan = plan_embedding(&mu, eps).unwrap();
        plan.check().unwrap();
        assert!(plan.k % 2 == 1 && plan.k >= 5);
        assert!(plan.inner_mass > 1.0 - eps);
        assert!(plan.xi_bound() > 0.0);
        assert!(2.0 * plan.a_mid / plan.k as f64 == plan.eta);
        let fold = plan.fold_length;
        assert!((plan.beta - (plan.r as f64 * fold + (plan.r - 1) as f64 * 2.0 * plan.a_mid)).abs() <= 1e-12 * plan.beta);
    }
}

#[test]
fn smaller_epsilon_never_coarsens() {
    let mu = three_atoms();
    let plans: Vec<EmbeddingPlan> = [0.5, 0.3, 0.1, 0.05, 0.01].iter().map(|&e| plan_embedding(&mu, e).unwrap()).collect();
    for w in plans.windows(2) {
        assert!(w[1].r >= w[0].r && w[1].k >= w[0].k, "eps {} -> {}", w[0].eps, w[1].eps);
    }
}

#[test]
fn bad_dimension_and_epsilon() {
    let mut mu = three_atoms();
    assert!(plan_embedding(&mu, 0.0).is_err());
    mu.dim = 3;
    assert!(plan_embedding(&mu, 0.1).is_err());
}

#[test]
fn cutoff_flow_translates_inside_and_fixes_outside() {
    let plan = plan_embedding(&three_atoms(), 0.1).unwrap();
    let n = plan.dim;
    let s = 0.4 * plan.xi_bound() / (n as f64).sqrt();
    let xi: Vec<f64> = (0..n).map(|j| if j % 2 == 0 { s } else { -0.5 * s }).collect();
    let phi = CutoffFlow::new(&plan, xi.clone());
    let mut rng = indexed_rng(1, 0);
    for i in 0..plan.r {
        let c = plan.shifted_center(i);
        for _ in 0..50 {
            let z = point_in(&mut rng, &c, 0.999 * plan.a_mid);
            let expect: Vec<f64> = z.iter().zip(&xi).map(|(a, b)| a + b).collect();
            assert_eq!(phi.eval(&z).unwrap(), expect);
            // Dual route: integrating the cutoff Hamiltonian gives the same translation.
            let flowed = hamiltonian_flow(&phi.k, 1.0, &z, 1e-2).unwrap();
            assert!(linf(&flowed, &expect) <= 1e-12, "cube {i}: {flowed:?} vs {expect:?}");
        }
        let far: Vec<f64> = plan.targets[i].iter().map(|x| x + 1.01 * plan.a).collect();
        let pt = phi.eval(&far).unwrap();
        let others_far = (0..plan.r).all(|j| linf(&far, &plan.targets[j]) >= plan.a);
        if others_far {
            assert_eq!(pt, far);
        }
    }
}

#[test]
fn cutoff_flow_is_symplectic_and_invertible_in_the_shell() {
    let plan = plan_embedding(&three_atoms(), 0.1).unwrap();
    let n = plan.dim;
    let s = 0.4 * plan.xi_bound() / (n as f64).sqrt();
    let phi = CutoffFlow::new(&plan, vec![s; n]);
    let mut rng = indexed_rng(2, 0);
    let mut pts = Vec::new();
    for i in 0..plan.r {
        let c = &plan.targets[i];
        while pts.len() < 100 * (i + 1) {
            let z = point_in(&mut rng, c, plan.a);
            let d = linf(&z, c);
            if d > plan.a_mid && d < plan.a {
                pts.push(z);
            }
        }
    }
    let stats = defect_stats(&phi, &pts, 1e-6);
    assert!(stats.pass, "{stats:?}");
    for z in &pts {
        let w = phi.eval(z).unwrap();
        let back = phi.inverse(&w).unwrap().unwrap();
        assert!(linf(&back, z) <= 1e-10);
    }
}

#[test]
fn correction_shift_clears_an_atom_on_the_default_lattice() {
    let plan = plan_embedding(&three_atoms(), 0.1).unwrap();
    let n = plan.dim;
    // Atoms exactly on the unshifted lattice planes.
    let eta = plan.eta;
    let nu = MeasureSpec {
        dim: n,
        atoms: vec![
            Atom { point: vec![0.0; n], mass: 0.5 },
            Atom { point: (0..n).map(|j| (j as f64 + 1.0) * eta).collect(), mass: 0.5 },
        ],
        boxes: vec![],
        samples: vec![],
        sample_mass: 0.0,
    };
    assert_eq!(measure_of_lattice(&nu, &excluded_lattice(&plan, &vec![0.0; n])), 1.0);
    let xi = correction_shift(&plan, &nu).unwrap();
    assert!(xi.iter().any(|&x| x != 0.0));
    assert!(xi.iter().map(|x| x * x).sum::<f64>().sqrt() < plan.xi_bound());
    assert_eq!(measure_of_lattice(&nu, &excluded_lattice(&plan, &xi)), 0.0);
}

#[test]
fn total_embedding_is_symplectic_and_injective() {
    let mu = three_atoms();
    let total = build_total_embedding(&mu, 0.1).unwrap();
    let plan = total.plan().clone();
    let pts = box_points(&plan, 5000, 3);
    let d = defect_stats(&total, &pts, 1e-6);
    assert!(d.pass, "{d:?}");
    let inj = injectivity(&total, &pts, 1e-3 * plan.eta, 1e-6 * plan.eta);
    assert!(inj.pass, "{inj:?}");
    let nu = pullback_measure(&plan, &mu);
    assert_eq!(measure_of_lattice(&nu, &excluded_lattice(&plan, &total.xi)), 0.0);
}

#[test]
fn coverage_of_three_atoms() {
    let mu = three_atoms();
    let (total, rep) = embed_measure(&mu, 0.1, 20_000, 4).unwrap();
    assert!(rep.exact_bound > 0.9, "{rep:?}");
    assert_eq!(rep.lattice_mass, 0.0);
    assert!(rep.mc_fraction >= 0.9 - 3.0 * rep.mc_sigma);
    assert!(rep.atoms.iter().all(|a| a.covered));
    // Witnesses returned by the cover map back onto the frame point.
    for x in sample(&mu, 200, 5) {
        if let sympack::folding::Membership::In { witness, .. } = total.covers(&x) {
            let q = to_frame(total.plan(), &x).unwrap();
            assert!(linf(&total.eval(&witness).unwrap(), &q) <= 1e-8);
        }
    }
}

#[test]
fn mismatched_fold_is_rejected() {
    let plan = plan_embedding(&three_atoms(), 0.1).unwrap();
    let wrong = Arc::new(sympack::folding::build_polydisk_embedding(plan.k + 2, plan.dim / 2).unwrap());
    assert!(assemble_hat_iota(&plan, wrong).is_err());
}

#[test]
fn box_to_polydisk_preserves_area() {
    let b = box_to_polydisk(3.0, 0.5, 2);
    let a = b.radii_squared();
    assert!((a[0] * std::f64::consts::PI - 1.5).abs() <= 1e-15);
    assert!((a[1] * std::f64::consts::PI - 0.25).abs() <= 1e-15);
    let pts = vec![vec![0.3, 0.2, 0.1, 0.4], vec![2.9, 0.01, 0.49, 0.3]];
    assert!(defect_stats(&b, &pts, 1e-10).pass);
}

#[test]
fn plans_beyond_double_precision_are_rejected() {
    // Many cubes force a fine staircase and a long box.
    let n = 2000;
    let mu = MeasureSpec {
        dim: 4,
        atoms: (0..n).map(|i| Atom { point: vec![i as f64, 0.0, 0.0, 0.0], mass: 1.0 / n as f64 }).collect(),
        boxes: vec![],
        samples: vec![],
        sample_mass: 0.0,
    };
    match plan_embedding(&mu, 0.1) {
        Err(sympack::Error::EpsilonTooSmall(msg)) => assert!(msg.contains("double precision"), "{msg}"),
        other => panic!("expected a precision error, got {:?}", other.map(|p| (p.r, p.k, p.beta))),
    }
}
