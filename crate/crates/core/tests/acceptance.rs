//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::process::ExitCode;
use std::time::Instant;

use decoupled_saddle::accounting::Ledger;
use decoupled_saddle::dm::arm::{arm_query_bound, arm_solve, DEFAULT_INNER_FACTOR};
use decoupled_saddle::dm::checks::MrnTask;
use decoupled_saddle::dm::drivers::{dm_sp_run, dm_vip_run, DmResult};
use decoupled_saddle::dm::fds::fds_solve;
use decoupled_saddle::dm::{coupled_conditioning, decoupled_weights, InnerSolver};
use decoupled_saddle::evaluation::{complexity_bounds, BoundParams, SaddleGap};
use decoupled_saddle::geometry::{ScaledMetric, Vector};
use decoupled_saddle::hard_instances::{
    krylov_basis, krylov_min_residual, make_subclass_instance, worst_case_instance, SubclassKind,
};
use decoupled_saddle::linalg::spectral_norm;
use decoupled_saddle::problems::generators::{
    gaussian_vector, random_bilinear, random_mixed, random_polymatrix, random_spd, rng,
};
use decoupled_saddle::problems::{make_weakly_coupled_scsc, CompositeTerm, SaddleInstance, VipInstance};
use decoupled_saddle::solvers_baseline::{dgda_run, eg_run, DgdaParams, EgParams};
use decoupled_saddle::accounting::RunStatus;

const L_GRID: [f64; 3] = [0.5, 1.0, 2.0];
const EPS_GRID: [f64; 3] = [0.2, 0.1, 0.05];
const SEEDS: [u64; 3] = [1, 2, 3];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Every iteration satisfied `a ≥ 1/λ` and the telescoped descent bound.
fn step_and_descent_ok(r: &DmResult) -> bool {
    r.history.iter().all(|h| {
        let step_ok = h.a.is_infinite() || h.a >= (1.0 / h.lambda) * (1.0 - 1e-9);
        let descent_ok = match (h.descent_lhs, h.descent_rhs) {
            (Some(l), Some(rhs)) => l <= rhs + 1e-8,
            _ => true,
        };
        step_ok && descent_ok
    })
}

fn bilinear(l: f64, seed: u64) -> SaddleInstance {
    random_bilinear(4, 6, l, 1.0, 1.0, seed).expect("bilinear instance")
}

fn criterion_1(all: &mut Vec<DmResult>) -> Outcome {
    let start = Instant::now();
    let mut worst = String::new();
    let mut pass = true;
    for &l in &L_GRID {
        for &eps in &EPS_GRID {
            for &s in &SEEDS {
                let inst = bilinear(l, s);
                let mut ledger = Ledger::new(2);
                let r = dm_sp_run(&inst, eps, 1.0, 1.0, &mut ledger).expect("dm-sp run");
                let bound = (2.0 + 4.0 * l / eps).floor() as usize;
                let exact = r.gap.map(|g| g.exact).unwrap_or(false);
                if !(r.status.reached_target() && exact && ledger.round() <= bound) {
                    pass = false;
                    worst = format!("L_xy={l} eps={eps} seed={s}: rounds {} > {bound} or not converged", ledger.round());
                }
                all.push(r);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 5.0;
    outcome(pass, format!("27 runs in {secs:.2}s {worst}"))
}

fn criterion_2(all: &mut Vec<DmResult>) -> Outcome {
    let mut pass = true;
    let mut detail = String::from("scaled and skewed estimates within bound");
    for &l in &L_GRID {
        for &eps in &EPS_GRID {
            for &s in &SEEDS {
                let inst = bilinear(l, s);
                for (dx, dy, theta) in [(10.0, 10.0, 2.0), (4.0, 1.0, 4.25)] {
                    let mut ledger = Ledger::new(2);
                    let r = dm_sp_run(&inst, eps, dx, dy, &mut ledger).expect("dm-sp run");
                    let b = r.bounds.expect("bounds");
                    let bound = (2.0 + 2.0 * theta * l / eps).floor() as usize;
                    if (b.theta - theta).abs() > 1e-12
                        || !r.status.reached_target()
                        || ledger.round() > bound
                    {
                        pass = false;
                        detail = format!("L_xy={l} eps={eps} seed={s} D^=({dx},{dy}): rounds {} > {bound}", ledger.round());
                    }
                    all.push(r);
                }
            }
        }
    }
    outcome(pass, detail)
}

fn criterion_3(all: &[DmResult]) -> Outcome {
    let iterations: usize = all.iter().map(|r| r.history.len()).sum();
    let with_solution = all.iter().filter(|r| r.history.iter().any(|h| h.descent_lhs.is_some())).count();
    let bad = all.iter().filter(|r| !step_and_descent_ok(r)).count();
    outcome(
        bad == 0 && with_solution > 0,
        format!("{} runs, {iterations} iterations, {with_solution} with descent check, {bad} violations", all.len()),
    )
}

fn random_anchor(inst: &VipInstance, seed: u64) -> Vector {
    let mut r = rng(seed);
    let mut z = gaussian_vector(inst.layout.total(), &mut r);
    for i in 0..inst.num_blocks() {
        let b = inst.layout.block_owned(&z, i);
        let n = b.norm();
        let scaled = if n > 0.0 { b * (inst.radii[i] / n) } else { b };
        inst.layout.set_block(&mut z, i, &scaled);
    }
    z
}

fn mss_batch(inst: &VipInstance, inner: &[InnerSolver], anchors: u64, seed: u64) -> (usize, usize) {
    let alpha = decoupled_weights(&inst.lipschitz, &inst.radii, 0.1, 2.0);
    let lc = coupled_conditioning(&inst.lipschitz, &inst.radii, &alpha);
    let lambda = 2.0 * lc;
    let mut passed = 0;
    for a in 0..anchors {
        let anchor = random_anchor(inst, seed * 1000 + a);
        let mut ledger = Ledger::new(inst.num_blocks());
        if let Ok(out) = fds_solve(inst, &anchor, lambda, &alpha, inner, &mut ledger) {
            if out.check.passed {
                passed += 1;
            }
        }
    }
    (passed, anchors as usize)
}

fn criterion_4() -> Outcome {
    let mut passed = 0;
    let mut total = 0;
    let sp = random_mixed(5, 2.0, 1.0, 3.0, 1.0, 1.0, 21).expect("mixed").to_vip();
    let (p, t) = mss_batch(&sp, &[InnerSolver::default(), InnerSolver::default()], 100, 1);
    passed += p;
    total += t;
    for (k, seed) in [(2usize, 2u64), (3, 3), (5, 5)] {
        let dims: Vec<usize> = (0..k).map(|i| 2 + i % 3).collect();
        let radii: Vec<f64> = (0..k).map(|i| 1.0 + 0.5 * i as f64).collect();
        let inst = random_polymatrix(&dims, 1.0, 0.7, &radii, seed).expect("polymatrix");
        let arm = vec![InnerSolver::default(); k];
        let mixed: Vec<InnerSolver> = (0..k)
            .map(|i| if i % 2 == 0 { InnerSolver::Feg } else { InnerSolver::default() })
            .collect();
        for inner in [arm, mixed] {
            let (p, t) = mss_batch(&inst, &inner, 100, seed);
            passed += p;
            total += t;
        }
    }
    outcome(passed == total, format!("{passed}/{total} anchors pass the MSS check"))
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut cases = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut detail = String::new();
    for (n, seed) in [(1usize, 7u64), (5, 8), (20, 9), (50, 10)] {
        let mut r = rng(seed);
        let l_true = 4.0;
        let a = random_spd(n, 1e-3, l_true, &mut r);
        let b = gaussian_vector(n, &mut r);
        let w_star = a.clone().lu().solve(&b).expect("nonsingular");
        let v = gaussian_vector(n, &mut r);
        let l = spectral_norm(&a);
        for xi in [1.0, 0.1, 0.01] {
            let task = MrnTask {
                composite: CompositeTerm::Zero,
                reference: v.clone(),
                delta: xi,
                metric: ScaledMetric::identity(n),
                mu: None,
                lipschitz: l,
            };
            let mut grad = |w: &Vector| &a * w - &b;
            let out = arm_solve(&task, xi, DEFAULT_INNER_FACTOR, &mut grad).expect("arm");
            let residual = (&a * &out.w - &b + &out.subgradient).norm();
            let target = xi * (&v - &w_star).norm();
            let cap = arm_query_bound(l, xi).floor() as u64;
            cases += 1;
            worst_ratio = worst_ratio.max(residual / target);
            if residual > target || out.queries > cap {
                pass = false;
                detail = format!("n={n} xi={xi}: residual {residual:.3e} vs {target:.3e}, queries {} vs {cap}", out.queries);
            }
        }
    }
    outcome(pass, format!("{cases} tasks, worst residual/target {worst_ratio:.3} {detail}"))
}

fn criterion_6(all: &mut Vec<DmResult>) -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    let mut runs = 0;
    for &lx in &[0.0, 1.0, 100.0] {
        for &eps in &EPS_GRID {
            let inst = random_mixed(6, lx, 1.0, 1.0, 1.0, 1.0, 31).expect("mixed");
            let mut ledger = Ledger::new(2);
            let r = dm_sp_run(&inst, eps, 1.0, 1.0, &mut ledger).expect("dm-sp run");
            let b = r.bounds.expect("bounds");
            let t = r.iteration_bound as f64;
            let per = |l: f64, a: f64| (t * (1.0 + 34.0 * (9.0 * l / (2.0 * a * r.lambda)).sqrt())).floor() as u64;
            let cap_x = per(inst.declared.l_x, r.alpha[0]);
            let cap_y = per(inst.declared.l_y, r.alpha[1]);
            let oracle = complexity_bounds(&BoundParams::from_instance(&inst, eps)).expect("bounds").dmsp_oracle;
            let q = ledger.queries();
            runs += 1;
            if !r.status.reached_target()
                || q[0] > cap_x
                || q[1] > cap_y
                || ledger.weighted_oracle_cost() > oracle
                || (b.dmsp_oracle - oracle).abs() > 1e-9 * oracle
            {
                pass = false;
                detail = format!(
                    "L_x={lx} eps={eps}: N=({},{}) caps=({cap_x},{cap_y}) cost {} vs {oracle:.1}",
                    q[0],
                    q[1],
                    ledger.weighted_oracle_cost()
                );
            }
            all.push(r);
        }
    }
    outcome(pass, format!("{runs} runs {detail}"))
}

fn criterion_7() -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    let mut cases = 0;
    for k in 1..=10usize {
        for &l in &L_GRID {
            for &d in &L_GRID {
                let p = 2 * k + 1;
                let c = worst_case_instance(l, d, k, p + 1, p).expect("construction");
                let norm_ok = spectral_norm(&c.a) <= l * (1.0 + 1e-12);
                let sol_ok = (&c.a * &c.v_star - &c.b).norm() <= 1e-10 * (1.0 + c.b.norm());
                let d_ok = (c.v_star.norm() - d).abs() <= 1e-10 * d;
                let res = krylov_min_residual(&c, k);
                let closed = l * l * c.gamma * c.gamma / (16.0 * (k as f64 + 1.0));
                let res_ok = (res - closed).abs() <= 1e-9 * closed;
                let lb_ok = res >= c.residual_lower_bound() * (1.0 - 1e-12);
                cases += 1;
                if !(norm_ok && sol_ok && d_ok && res_ok && lb_ok) {
                    pass = false;
                    detail = format!("k={k} L={l} D={d}: residual {res:.6e} closed {closed:.6e}");
                }
            }
        }
    }
    outcome(pass, format!("{cases} constructions {detail}"))
}

struct HardRuns {
    dm_first: Option<usize>,
    eg_first: Option<usize>,
    dm_span_ok: bool,
    eg_span_ok: bool,
    worst_residual: f64,
    checked: usize,
}

fn hard_runs() -> HardRuns {
    let (l, dx, dy, k) = (1.0, 1.0, 1.0, 10usize);
    let eps = l * dx * dy / 30.0;
    let h = make_subclass_instance(SubclassKind::Xy, l, dx, dy, k, (24, 24)).expect("hard instance");
    let inst = &h.saddle;
    let a = &h.construction.a;
    let b = &h.construction.b;
    let nx = inst.nx();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut confined = |xbar: &Vector, rounds: usize| -> bool {
        let dim = rounds.saturating_sub(1).div_ceil(2);
        let basis = krylov_basis(a, b, dim);
        let r = basis.residual(xbar);
        worst = worst.max(r);
        checked += 1;
        r <= 1e-8
    };

    let mut ledger = Ledger::new(2);
    let dm = dm_sp_run(inst, eps, dx, dy, &mut ledger).expect("dm-sp run");
    let mut dm_span_ok = true;
    let mut sum = Vector::zeros(inst.layout().total());
    let mut a_sum = 0.0;
    let zero = Vector::zeros(nx);
    dm_span_ok &= confined(&zero, 0) && confined(&zero, 1);
    let mut dm_first = None;
    for hrec in &dm.history {
        if hrec.a.is_infinite() {
            break;
        }
        sum += &hrec.z_plus * hrec.a;
        a_sum += hrec.a;
        let xbar = (&sum / a_sum).rows(0, nx).into_owned();
        dm_span_ok &= confined(&xbar, hrec.rounds) && confined(&xbar, hrec.rounds + 1);
        if dm_first.is_none() && hrec.gap.map(|g| g <= eps).unwrap_or(false) {
            dm_first = Some(hrec.rounds);
        }
    }

    let mut ledger = Ledger::new(2);
    let params = EgParams::for_saddle(inst, eps, dx, dy);
    let eg = eg_run(&inst.to_vip(), &params, &mut ledger, &SaddleGap::new(inst)).expect("eg run");
    let mut eg_span_ok = confined(&zero, 0) && confined(&zero, 1);
    let mut sum = Vector::zeros(nx);
    for (i, z) in eg.iterates.iter().enumerate() {
        sum += z.rows(0, nx);
        let xbar = &sum / (i as f64 + 1.0);
        let rounds = 2 * (i + 1);
        eg_span_ok &= confined(&xbar, rounds) && confined(&xbar, rounds + 1);
    }
    let eg_first = eg.history.iter().find(|(_, g)| *g <= eps).map(|(r, _)| *r);
    HardRuns {
        dm_first,
        eg_first,
        dm_span_ok,
        eg_span_ok,
        worst_residual: worst,
        checked,
    }
}

fn criterion_8(h: &HardRuns) -> Outcome {
    outcome(
        h.dm_span_ok && h.eg_span_ok,
        format!("{} candidate checks, worst residual {:.2e}", h.checked, h.worst_residual),
    )
}

fn criterion_9(h: &HardRuns) -> Outcome {
    let ok = |r: Option<usize>| r.map(|r| r >= 18).unwrap_or(true);
    outcome(
        ok(h.dm_first) && ok(h.eg_first),
        format!("first round with gap <= eps: dm-sp {:?}, eg {:?} (lower bound 18)", h.dm_first, h.eg_first),
    )
}

fn criterion_10(all: &mut Vec<DmResult>) -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    let mut runs = 0;
    for &l in &L_GRID {
        for &eps in &EPS_GRID {
            for &s in &SEEDS {
                let inst = random_polymatrix(&[3, 4, 2], l, 0.5, &[1.0, 1.0, 1.0], s).expect("polymatrix");
                let mut ledger = Ledger::new(3);
                let r = dm_vip_run(&inst, eps, &mut ledger).expect("dm-vip run");
                let mut sum = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        if i != j {
                            sum += inst.lbar(i, j) * inst.radii[i] * inst.radii[j];
                        }
                    }
                }
                let bound = (2.0 + 2.0 * sum / eps).floor() as usize;
                runs += 1;
                let exact = r.gap.map(|g| g.exact).unwrap_or(false);
                if !(r.status.reached_target() && exact && ledger.round() <= bound) {
                    pass = false;
                    detail = format!("L={l} eps={eps} seed={s}: rounds {} vs {bound}", ledger.round());
                }
                all.push(r);
            }
        }
    }
    outcome(pass, format!("{runs} runs {detail}"))
}

fn criterion_11(all: &mut Vec<DmResult>) -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    let mut compared = 0;
    for &(lx, lxy, ly) in &[(1.0, 1.0, 1.0), (10.0, 1.0, 0.0), (10.0, 1.0, 1.0), (100.0, 1.0, 1.0), (10.0, 0.5, 10.0)] {
        for &eps in &EPS_GRID {
            let inst = random_mixed(6, lx, lxy, ly, 1.0, 1.0, 41).expect("mixed");
            let d = inst.declared;
            let mut ledger = Ledger::new(2);
            let params = EgParams::for_saddle(&inst, eps, 1.0, 1.0);
            let eg = eg_run(&inst.to_vip(), &params, &mut ledger, &SaddleGap::new(&inst)).expect("eg");
            let bound = (2.0 * d.l_xy * d.d_x * d.d_y + d.l_x * d.d_x * d.d_x + d.l_y * d.d_y * d.d_y) / eps;
            let mut dm_ledger = Ledger::new(2);
            let dm = dm_sp_run(&inst, eps, 1.0, 1.0, &mut dm_ledger).expect("dm-sp");
            let eg_ok = eg.status.reached_target() && eg.rounds as f64 <= bound;
            let dominated = d.l_x * d.d_x * d.d_x + d.l_y * d.d_y * d.d_y >= 5.0 * d.l_xy * d.d_x * d.d_y;
            let beats = !dominated || (dm.status.reached_target() && dm.rounds < eg.rounds);
            if dominated {
                compared += 1;
            }
            if !(eg_ok && beats) {
                pass = false;
                detail = format!(
                    "L=({lx},{lxy},{ly}) eps={eps}: eg {} rounds (bound {bound:.1}), dm-sp {}",
                    eg.rounds, dm.rounds
                );
            }
            all.push(dm);
        }
    }
    outcome(pass, format!("{compared} diagonal-dominated comparisons {detail}"))
}

fn criterion_12() -> Outcome {
    let weak = make_weakly_coupled_scsc(1.0, 1.0, 0.1, 4).expect("weak").to_vip();
    let params = DgdaParams {
        tau: 5,
        eta: vec![0.5, 0.5],
        max_rounds: 30,
        epsilon: 0.0,
    };
    let mut ledger = Ledger::new(2);
    let r = dgda_run(&weak, &params, &mut ledger, None).expect("dgda");
    let ratios: Vec<f64> = r
        .distances
        .windows(2)
        .filter(|w| w[0] > 1e-300)
        .map(|w| w[1] / w[0])
        .collect();
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    let geometric = !ratios.is_empty() && worst < 1.0 && r.status != RunStatus::Diverged;

    let strong = make_weakly_coupled_scsc(1.0, 1.0, 2.0, 4).expect("strong").to_vip();
    let params = DgdaParams {
        tau: 50,
        eta: vec![0.5, 0.5],
        max_rounds: 200,
        epsilon: 0.0,
    };
    let mut ledger = Ledger::new(2);
    let s = dgda_run(&strong, &params, &mut ledger, None).expect("dgda");
    let diverged = s.status == RunStatus::Diverged;
    outcome(
        geometric && diverged,
        format!("worst per-round ratio {worst:.4} over {} rounds; c=2 diverged: {diverged}", ratios.len()),
    )
}

fn main() -> ExitCode {
    let mut all = Vec::new();
    let hard = hard_runs();
    let c1 = criterion_1(&mut all);
    let c2 = criterion_2(&mut all);
    let c6 = criterion_6(&mut all);
    let c10 = criterion_10(&mut all);
    let c11 = criterion_11(&mut all);
    let c3 = criterion_3(&all);
    let results = [
        ("communication bound, bilinear", c1),
        ("robustness to distance estimates", c2),
        ("step size and descent inequality", c3),
        ("decoupled subproblem correctness", criterion_4()),
        ("accelerated inner solver accuracy", criterion_5()),
        ("per-agent oracle bounds", c6),
        ("worst-case construction", criterion_7()),
        ("Krylov confinement", criterion_8(&hard)),
        ("empirical lower bound", criterion_9(&hard)),
        ("VIP communication bound", c10),
        ("extragradient comparison", c11),
        ("decoupled GDA regimes", criterion_12()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("criterion {:>2} [{tag}] {name}: {}", i + 1, o.detail);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
