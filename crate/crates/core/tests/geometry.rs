use std::sync::Arc;

use proptest::prelude::*;
use sympack::geometry::*;

fn lift_h(variable: LiftVariable, a: f64, b: f64, c: f64) -> LiftHamiltonian {
    LiftHamiltonian::new(4, 0, 1, variable, a, b, c).unwrap()
}

fn point4() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 4)
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Time-1 lift by direct RK4 integration of `x' = dH/dy`, `y' = -dH/dx`.
/// Independent of the library integrator and of the closed form.
fn lift_by_rk4(h: &LiftHamiltonian, z: &[f64], steps: usize) -> Vec<f64> {
    let field = |p: &[f64]| {
        let g = h.gradient(p);
        let mut v = vec![0.0; 4];
        for j in 0..2 {
            v[2 * j] = -g[2 * j + 1];
            v[2 * j + 1] = g[2 * j];
        }
        v
    };
    let dt = 1.0 / steps as f64;
    let mut p = z.to_vec();
    for _ in 0..steps {
        let k1 = field(&p);
        let q: Vec<f64> = p.iter().zip(&k1).map(|(a, b)| a + 0.5 * dt * b).collect();
        let k2 = field(&q);
        let q: Vec<f64> = p.iter().zip(&k2).map(|(a, b)| a + 0.5 * dt * b).collect();
        let k3 = field(&q);
        let q: Vec<f64> = p.iter().zip(&k3).map(|(a, b)| a + dt * b).collect();
        let k4 = field(&q);
        for i in 0..4 {
            p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    p
}

#[test]
fn closed_form_lift_matches_integrated_flow() {
    for (variable, a, b) in [(LiftVariable::Y, -1.0, 2.0), (LiftVariable::X, 1.0, -1.0)] {
        let h = lift_h(variable, a, b, 0.0);
        let lift = Lift { h: h.clone() };
        let flow = Flow::new(Arc::new(h.clone()), 1.0);
        for i in 0..200 {
            let z = [-1.0 + 0.01 * i as f64, 0.3, 0.45, 0.7];
            let exact = lift.eval(&z).unwrap();
            assert!(linf(&exact, &lift_by_rk4(&h, &z, 2000)) < 1e-10, "z = {z:?}");
            assert!(linf(&exact, &flow.eval(&z).unwrap()) < 1e-10);
        }
    }
}

#[test]
fn lift_displaces_by_one_after_the_ramp() {
    // Y-lift with a = -1, b = l + 1 moves the fiber x by +1 past the window.
    let lift = Lift { h: lift_h(LiftVariable::Y, -1.0, 3.0, 0.0) };
    let z = [0.5, 0.2, 0.3, 0.4];
    let w = lift.eval(&z).unwrap();
    assert_eq!(w, vec![0.5, 0.2, 1.3, 0.4]);
    assert_eq!(lift.eval(&[-1.0, 0.2, 0.3, 0.4]).unwrap(), vec![-1.0, 0.2, 0.3, 0.4]);
}

proptest! {
    #[test]
    fn analytic_pieces_are_symplectic(z in point4(), c0 in -1.0f64..1.0, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0) {
        let shear = Shear::new(4, 1, Func1::Poly { coeffs: vec![c0, c1, c2] }).unwrap();
        prop_assert!(shear.defect(&z).unwrap() <= 1e-10);
        let smear = Smear::new(4, 0, Func1::Trapezoid { k: 5 }).unwrap();
        prop_assert!(smear.defect(&z).unwrap() <= 1e-10);
        let lift = Lift { h: lift_h(LiftVariable::Y, c1, c0, c2) };
        prop_assert!(lift.defect(&z).unwrap() <= 1e-10);
    }

    #[test]
    fn flow_pieces_are_symplectic_and_conserve_energy(z in point4(), c in -1.0f64..1.0) {
        let h = lift_h(LiftVariable::X, 1.0, -0.5, c);
        let flow = Flow::new(Arc::new(h.clone()), 1.0);
        prop_assert!(flow.defect(&z).unwrap() <= 1e-6);
        let w = flow.eval(&z).unwrap();
        prop_assert!((h.value(&w) - h.value(&z)).abs() <= 1e-8);
        let lin = LinearHamiltonian { c: vec![0.3, -0.2, 0.5, 0.1] };
        let w = hamiltonian_flow(&lin, 0.7, &z, 1e-3).unwrap();
        prop_assert!((lin.value(&w) - lin.value(&z)).abs() <= 1e-8);
    }

    #[test]
    fn composition_is_sequential_evaluation(z in point4(), c in -1.0f64..1.0) {
        let a: Arc<dyn SymplecticMap> = Arc::new(Shear::new(4, 0, Func1::Poly { coeffs: vec![0.0, c, 1.0] }).unwrap());
        let b: Arc<dyn SymplecticMap> = Arc::new(Lift { h: lift_h(LiftVariable::Y, -1.0, 1.0, c) });
        let ab = compose(a.clone(), b.clone());
        prop_assert_eq!(ab.eval(&z).unwrap(), a.eval(&b.eval(&z).unwrap()).unwrap());
        let j = ab.jacobian(&z).unwrap();
        let expect = a.jacobian(&b.eval(&z).unwrap()).unwrap() * b.jacobian(&z).unwrap();
        prop_assert!((j - expect).amax() <= 1e-14);
    }

    #[test]
    fn analytic_inverses_round_trip(z in point4(), c in -1.0f64..1.0) {
        let maps: Vec<Arc<dyn SymplecticMap>> = vec![
            Arc::new(Translation { v: vec![c, 1.0, -2.0, 0.5] }),
            Arc::new(Shear::new(4, 1, Func1::Poly { coeffs: vec![c, 0.0, 2.0] }).unwrap()),
            Arc::new(Lift { h: lift_h(LiftVariable::X, 1.0, c, 0.0) }),
            Arc::new(Smear::new(4, 0, Func1::Poly { coeffs: vec![2.0] }).unwrap()),
        ];
        for m in maps {
            let back = m.inverse(&m.eval(&z).unwrap()).unwrap().unwrap();
            prop_assert!(linf(&back, &z) <= 1e-12);
        }
    }

    #[test]
    fn bracket_is_antisymmetric(z in point4(), p in prop::collection::vec(-1.0f64..1.0, 8)) {
        let f = |w: &[f64]| p[0] * w[0] * w[1] + p[1] * w[2] * w[2] + p[2] * w[3] + p[3] * w[0] * w[3];
        let g = |w: &[f64]| p[4] * w[1] * w[1] + p[5] * w[0] * w[2] + p[6] * w[3] * w[1] + p[7] * w[2];
        let s = poisson_bracket_fd(&f, &g, &z, 1e-4) + poisson_bracket_fd(&g, &f, &z, 1e-4);
        prop_assert!(s.abs() <= 2e-10);
    }
}
