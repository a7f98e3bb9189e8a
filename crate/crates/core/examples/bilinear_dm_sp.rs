//! The decoupled saddle method on random bilinear problems, compared with
//! the communication bound `2 + 4 L_xy D_x D_y / ε`.

use decoupled_saddle::accounting::Ledger;
use decoupled_saddle::dm::dm_sp_run;
use decoupled_saddle::problems::generators::random_bilinear;

fn main() {
    println!("{:>5} {:>6} {:>7} {:>8} {:>10} {:>6}", "L", "eps", "rounds", "bound", "gap", "exact");
    for l in [0.5, 1.0, 2.0] {
        for eps in [0.2, 0.1, 0.05] {
            let inst = random_bilinear(4, 6, l, 1.0, 1.0, 1).unwrap();
            let mut ledger = Ledger::new(2);
            let res = dm_sp_run(&inst, eps, 1.0, 1.0, &mut ledger).unwrap();
            let gap = res.gap.unwrap();
            println!(
                "{l:>5} {eps:>6} {:>7} {:>8.0} {:>10.3e} {:>6}",
                res.rounds,
                (2.0 + 4.0 * l / eps).floor(),
                gap.value,
                gap.exact
            );
        }
    }
}
