use decoupled_saddle::geometry::{AssembledMetric, ScaledMetric, Vector};
use proptest::prelude::*;

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..10.0, n)
}

fn vec_n(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, n)
}

fn setup() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, f64, f64, Vec<f64>)> {
    (1usize..5, 1usize..5).prop_flat_map(|(nx, ny)| {
        (weights(nx), weights(ny), vec_n(nx + ny), 0.01f64..10.0, 0.01f64..10.0, vec_n(nx + ny))
    })
}

fn metric(px: &[f64], py: &[f64], ax: f64, ay: f64) -> AssembledMetric {
    AssembledMetric::new(
        vec![ScaledMetric::new(px.to_vec()).unwrap(), ScaledMetric::new(py.to_vec()).unwrap()],
        vec![ax, ay],
    )
    .unwrap()
}

proptest! {
    #[test]
    fn dual_pairing_bounded((px, py, z, ax, ay, g) in setup()) {
        let e = metric(&px, &py, ax, ay);
        let z = Vector::from_vec(z);
        let g = Vector::from_vec(g);
        let lhs = g.dot(&z).abs();
        let rhs = e.norm(&z).unwrap() * e.dual_norm(&g).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn dual_norm_attained((px, py, _z, ax, ay, g) in setup()) {
        let e = metric(&px, &py, ax, ay);
        let g = Vector::from_vec(g);
        prop_assume!(g.norm() > 1e-6);
        let w = e.apply_inv(&g).unwrap();
        let ratio = g.dot(&w) / e.norm(&w).unwrap();
        prop_assert!((ratio - e.dual_norm(&g).unwrap()).abs() <= 1e-9 * (1.0 + ratio));
    }

    #[test]
    fn assembled_norm_is_weighted_sum((px, py, z, ax, ay, _g) in setup()) {
        let e = metric(&px, &py, ax, ay);
        let nx = px.len();
        let expect: f64 = z.iter().enumerate().map(|(i, v)| {
            if i < nx { ax * px[i] * v * v } else { ay * py[i - nx] * v * v }
        }).sum();
        let z = Vector::from_vec(z);
        prop_assert!((e.norm_sq(&z).unwrap() - expect).abs() <= 1e-10 * (1.0 + expect));
    }

    #[test]
    fn apply_and_inverse_cancel((px, py, z, ax, ay, _g) in setup()) {
        let e = metric(&px, &py, ax, ay);
        let z = Vector::from_vec(z);
        let back = e.apply_inv(&e.apply(&z).unwrap()).unwrap();
        prop_assert!((back - &z).amax() <= 1e-10 * (1.0 + z.amax()));
    }
}
