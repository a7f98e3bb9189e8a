//! Extragradient against the decoupled method when local conditioning
//! dominates the coupling.

use decoupled_saddle::accounting::Ledger;
use decoupled_saddle::dm::dm_sp_run;
use decoupled_saddle::evaluation::SaddleGap;
use decoupled_saddle::problems::generators::random_mixed;
use decoupled_saddle::solvers_baseline::{eg_run, EgParams};

fn main() {
    let eps = 0.1;
    println!("{:>6} {:>10} {:>10}", "L_x", "eg rounds", "dm rounds");
    for l_x in [1.0, 10.0, 100.0] {
        let inst = random_mixed(6, l_x, 1.0, 1.0, 1.0, 1.0, 3).unwrap();
        let mut eg_ledger = Ledger::new(2);
        let eg = eg_run(
            &inst.to_vip(),
            &EgParams::for_saddle(&inst, eps, 1.0, 1.0),
            &mut eg_ledger,
            &SaddleGap::new(&inst),
        )
        .unwrap();
        let mut dm_ledger = Ledger::new(2);
        let dm = dm_sp_run(&inst, eps, 1.0, 1.0, &mut dm_ledger).unwrap();
        println!("{l_x:>6} {:>10} {:>10}", eg.rounds, dm.rounds);
    }
}
