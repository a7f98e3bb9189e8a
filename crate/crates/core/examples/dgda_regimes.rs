//! Decoupled gradient descent-ascent: contraction under weak coupling,
//! divergence under strong coupling with many local steps.

use decoupled_saddle::accounting::Ledger;
use decoupled_saddle::problems::make_weakly_coupled_scsc;
use decoupled_saddle::solvers_baseline::{dgda_run, DgdaParams};

fn main() {
    for (c, tau) in [(0.1, 5), (2.0, 50)] {
        let inst = make_weakly_coupled_scsc(1.0, 1.0, c, 4).unwrap();
        let vip = inst.to_vip();
        let params = DgdaParams {
            tau,
            eta: vec![0.5, 0.5],
            max_rounds: 30,
            epsilon: 0.0,
        };
        let mut ledger = Ledger::new(2);
        let res = dgda_run(&vip, &params, &mut ledger, None).unwrap();
        let tail: Vec<String> = res.distances.iter().take(5).map(|d| format!("{d:.3e}")).collect();
        println!("c = {c}, tau = {tau}: {} after {} rounds; distances {}", res.status.as_str(), res.rounds, tail.join(" "));
    }
}
