//! The accumulative regularization solver on a strongly convex quadratic,
//! against its query bound `34 sqrt(3L/(2 xi))`.

use decoupled_saddle::dm::{arm_query_bound, arm_solve, MrnTask, DEFAULT_INNER_FACTOR};
use decoupled_saddle::geometry::{ScaledMetric, Vector};
use decoupled_saddle::problems::generators::{gaussian_vector, random_spd, rng};
use decoupled_saddle::problems::CompositeTerm;

fn main() {
    let n = 20;
    let mut r = rng(11);
    let h = random_spd(n, 0.0, 1.0, &mut r);
    let b = gaussian_vector(n, &mut r);
    for xi in [1.0, 0.1, 0.01] {
        let task = MrnTask {
            composite: CompositeTerm::Zero,
            reference: Vector::zeros(n),
            delta: xi,
            metric: ScaledMetric::identity(n),
            mu: None,
            lipschitz: 1.0,
        };
        let out = arm_solve(&task, xi, DEFAULT_INNER_FACTOR, &mut |w| &h * w - &b).unwrap();
        let residual = (&h * &out.w - &b + &out.subgradient).norm();
        println!(
            "xi = {xi:<5} queries = {:>4} (bound {:>6.1})  ||grad|| = {residual:.3e}",
            out.queries,
            arm_query_bound(1.0, xi)
        );
    }
}
