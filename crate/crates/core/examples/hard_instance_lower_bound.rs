//! The worst-case tridiagonal construction: Krylov residuals never drop
//! below `3 L^2 D^2 / (32 (k+1)^2)`.

use decoupled_saddle::hard_instances::{krylov_min_residual, worst_case_instance};

fn main() {
    println!("{:>3} {:>14} {:>14} {:>14}", "k", "residual", "closed form", "lower bound");
    for k in 1..=8 {
        let c = worst_case_instance(1.0, 1.0, k, 2 * k + 3, 2 * k + 2).unwrap();
        println!(
            "{k:>3} {:>14.6e} {:>14.6e} {:>14.6e}",
            krylov_min_residual(&c, k),
            c.closed_form_residual(),
            c.residual_lower_bound()
        );
    }
}
