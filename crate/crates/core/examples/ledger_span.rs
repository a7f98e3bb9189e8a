//! Query accounting and gradient-span membership on the bilinear hard
//! instance.

use decoupled_saddle::accounting::{verify_gradient_span, Ledger, Visibility};
use decoupled_saddle::evaluation::SaddleGap;
use decoupled_saddle::hard_instances::{make_subclass_instance, SubclassKind};
use decoupled_saddle::solvers_baseline::{eg_run, EgParams};

fn main() {
    let h = make_subclass_instance(SubclassKind::Xy, 1.0, 1.0, 1.0, 6, (14, 14)).unwrap();
    let s = &h.saddle;
    let vip = s.to_vip();
    let mut params = EgParams::for_saddle(s, 0.05, 1.0, 1.0);
    params.max_rounds = 12;
    let mut ledger = Ledger::new(2);
    let res = eg_run(&vip, &params, &mut ledger, &SaddleGap::new(s)).unwrap();
    println!("rounds = {}, queries = {:?}, weighted cost = {}", ledger.round(), ledger.queries(), ledger.weighted_oracle_cost());
    for agent in 0..2 {
        let c = vip.layout.block_owned(&res.candidate, agent);
        let o = vip.layout.block_owned(&vip.z0, agent);
        let chk = verify_gradient_span(&ledger, agent, &c, &o, &vip.metrics[agent], Visibility::All);
        println!("agent {agent}: inside span = {}, residual = {:.2e}", chk.inside, chk.residual);
    }
}
