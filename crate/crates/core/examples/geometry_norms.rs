//! Block metrics, the assembled norm and its dual.

use decoupled_saddle::geometry::{AssembledMetric, ScaledMetric, Vector};

fn main() {
    let px = ScaledMetric::new(vec![1.0, 4.0]).unwrap();
    let py = ScaledMetric::identity(1);
    let e = AssembledMetric::new(vec![px, py], vec![2.0, 0.5]).unwrap();

    let z = Vector::from_vec(vec![1.0, 1.0, 2.0]);
    let g = Vector::from_vec(vec![3.0, -1.0, 0.5]);
    let norm = e.norm(&z).unwrap();
    let dual = e.dual_norm(&g).unwrap();
    println!("||z||_E   = {norm:.6}");
    println!("||g||_E*  = {dual:.6}");
    println!("<g, z>    = {:.6} <= {:.6}", g.dot(&z), norm * dual);

    // the dual norm is attained at E^{-1} g
    let w = e.apply_inv(&g).unwrap();
    println!("<g, E^-1 g> / ||E^-1 g||_E = {:.6}", g.dot(&w) / e.norm(&w).unwrap());
}
