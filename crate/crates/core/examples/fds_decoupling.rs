//! One decoupled subproblem solve: every agent works alone with the remote
//! blocks frozen at the anchor, and the joint point still satisfies the
//! proximal acceptance test.

use decoupled_saddle::accounting::Ledger;
use decoupled_saddle::dm::{coupled_conditioning, decoupled_weights, fds_solve, InnerSolver};
use decoupled_saddle::geometry::Vector;
use decoupled_saddle::problems::generators::random_polymatrix;

fn main() {
    let inst = random_polymatrix(&[3, 2, 2], 1.0, 0.5, &[1.0, 1.0, 1.0], 4).unwrap();
    let alpha = decoupled_weights(&inst.lipschitz, &inst.radii, 0.1, 2.0);
    let lambda = 2.0 * coupled_conditioning(&inst.lipschitz, &inst.radii, &alpha);
    let inner = vec![InnerSolver::default(); inst.num_blocks()];
    for seed in 0..3u64 {
        let anchor = Vector::from_fn(inst.layout.total(), |i, _| ((i as u64 * 7 + seed * 3) % 5) as f64 / 5.0 - 0.4);
        let mut ledger = Ledger::new(inst.num_blocks());
        let out = fds_solve(&inst, &anchor, lambda, &alpha, &inner, &mut ledger).unwrap();
        println!(
            "anchor {seed}: check passed = {}, lhs = {:.3e}, rhs = {:.3e}, queries = {:?}",
            out.check.passed,
            out.check.lhs,
            out.check.rhs,
            ledger.queries(),
        );
    }
}
