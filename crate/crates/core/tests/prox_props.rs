use decoupled_saddle::geometry::{ScaledMetric, Vector};
use decoupled_saddle::problems::{prox_composite, CompositeTerm};
use proptest::prelude::*;

const DIM: usize = 3;

fn vec3(lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, DIM)
}

fn term() -> impl Strategy<Value = CompositeTerm> {
    prop_oneof![
        Just(CompositeTerm::Zero),
        (vec3(-2.0, 2.0), 0.1f64..3.0).prop_map(|(c, r)| CompositeTerm::Ball { center: c, radius: r }),
        (vec3(-2.0, 0.0), vec3(0.0, 2.0)).prop_map(|(l, u)| CompositeTerm::Box { lower: l, upper: u }),
        (0.1f64..5.0, vec3(-2.0, 2.0)).prop_map(|(mu, c)| CompositeTerm::QuadraticReg { mu, center: c }),
        (0.1f64..5.0, vec3(-2.0, 2.0), vec3(-1.0, 1.0), 0.5f64..3.0).prop_map(|(mu, c, bc, r)| {
            CompositeTerm::sum(
                Box::new(CompositeTerm::QuadraticReg { mu, center: c }),
                Box::new(CompositeTerm::Ball { center: bc, radius: r }),
            )
        }),
    ]
}

proptest! {
    #[test]
    fn prox_is_feasible_and_optimal(
        psi in term(),
        w in vec3(0.2, 5.0),
        v in vec3(-6.0, 6.0),
        step in 0.01f64..10.0,
    ) {
        let metric = ScaledMetric::new(w).unwrap();
        let v = Vector::from_vec(v);
        let p = prox_composite(&psi, &metric, &v, step).unwrap();
        prop_assert!(psi.value(&metric, &p).is_finite());
        // optimality: P(v − p)/step ∈ ∂ψ(p)
        let g = metric.apply(&(&v - &p)) / step;
        prop_assert!(psi.is_subgradient(&metric, &p, &g, 1e-8), "psi = {psi:?}, p = {p}, g = {g}");
    }

    #[test]
    fn prox_is_nonexpansive(
        psi in term(),
        w in vec3(0.2, 5.0),
        a in vec3(-6.0, 6.0),
        b in vec3(-6.0, 6.0),
        step in 0.01f64..10.0,
    ) {
        let metric = ScaledMetric::new(w).unwrap();
        let (a, b) = (Vector::from_vec(a), Vector::from_vec(b));
        let pa = prox_composite(&psi, &metric, &a, step).unwrap();
        let pb = prox_composite(&psi, &metric, &b, step).unwrap();
        prop_assert!(metric.norm(&(&pa - &pb)) <= metric.norm(&(&a - &b)) * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn min_linear_minimizes(
        psi in term(),
        w in vec3(0.2, 5.0),
        g in vec3(-3.0, 3.0),
        probe in vec3(-4.0, 4.0),
    ) {
        let metric = ScaledMetric::new(w).unwrap();
        let g = Vector::from_vec(g);
        if let Some(x) = psi.min_linear(&metric, &g).unwrap() {
            let f = |y: &Vector| g.dot(y) + psi.value(&metric, y);
            let probe = psi.project_domain(&metric, &Vector::from_vec(probe)).unwrap();
            prop_assert!(f(&x) <= f(&probe) + 1e-9 * (1.0 + f(&probe).abs()));
        }
    }
}
