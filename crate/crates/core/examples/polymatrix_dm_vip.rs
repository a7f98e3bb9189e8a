//! The decoupled VIP method on a three-agent polymatrix game.

use decoupled_saddle::accounting::Ledger;
use decoupled_saddle::dm::dm_vip_run;
use decoupled_saddle::problems::generators::random_polymatrix;

fn main() {
    let inst = random_polymatrix(&[3, 4, 2], 1.0, 0.5, &[1.0, 1.0, 1.0], 2).unwrap();
    for eps in [0.2, 0.1, 0.05] {
        let mut ledger = Ledger::new(inst.num_blocks());
        let res = dm_vip_run(&inst, eps, &mut ledger).unwrap();
        let b = res.vip_bounds.as_ref().unwrap();
        println!(
            "eps = {eps:<5} rounds = {:>4} (bound {:>6.1}) gap = {:.3e} queries = {:?}",
            res.rounds,
            b.dmvip_comm,
            res.gap.unwrap().value,
            res.queries
        );
    }
}
