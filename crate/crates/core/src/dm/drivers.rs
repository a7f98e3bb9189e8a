//! Parameter wiring for the decoupled saddle and VIP methods.

use super::fds::FdsSolver;
use super::rom::{rom_run, IterationRecord};
use super::{coupled_conditioning, decoupled_weights, outer_iteration_bound, DmParams, InnerSolver, LambdaSchedule};
use crate::accounting::{Ledger, RunStatus};
use crate::error::{Error, Result};
use crate::evaluation::{
    complexity_bounds, dmsp_weights, vip_bounds, BoundParams, BoundsReport, GapOracle, GapResult, SaddleGap,
    VipBoundsReport, VipGap,
};
use crate::geometry::Vector;
use crate::problems::{SaddleInstance, VipInstance};

/// Tuning knobs that do not change the method.
#[derive(Debug, Clone)]
pub struct DmRunOptions {
    /// Iteration cap; `None` uses `2T + 10` with `T` the iteration bound.
    pub max_iterations: Option<usize>,
    pub gap_stride: usize,
    /// Inner factor of the accelerated solver.
    pub arm_factor: f64,
    /// Solve blocks on the rayon pool.
    pub parallel: bool,
}

impl Default for DmRunOptions {
    fn default() -> Self {
        Self {
            max_iterations: None,
            gap_stride: 1,
            arm_factor: super::DEFAULT_INNER_FACTOR,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DmResult {
    pub candidate: Vector,
    pub gap: Option<GapResult>,
    pub status: RunStatus,
    pub iterations: usize,
    pub rounds: usize,
    pub queries: Vec<u64>,
    pub weighted_cost: f64,
    pub alpha: Vec<f64>,
    pub lambda: f64,
    /// Iteration bound `T`.
    pub iteration_bound: u64,
    pub history: Vec<IterationRecord>,
    pub bounds: Option<BoundsReport>,
    pub vip_bounds: Option<VipBoundsReport>,
}

/// Decoupled method on a saddle instance with distance estimates `D̂`.
pub fn dm_sp_run(
    inst: &SaddleInstance,
    epsilon: f64,
    d_hat_x: f64,
    d_hat_y: f64,
    ledger: &mut Ledger,
) -> Result<DmResult> {
    dm_sp_run_with(inst, epsilon, d_hat_x, d_hat_y, ledger, &DmRunOptions::default())
}

pub fn dm_sp_run_with(
    inst: &SaddleInstance,
    epsilon: f64,
    d_hat_x: f64,
    d_hat_y: f64,
    ledger: &mut Ledger,
    opts: &DmRunOptions,
) -> Result<DmResult> {
    inst.validate()?;
    let params = BoundParams::from_instance(inst, epsilon).with_estimates(d_hat_x, d_hat_y);
    let bounds = complexity_bounds(&params)?;
    let alpha = dmsp_weights(&params).to_vec();
    let lambda = 2.0;
    let vip = inst.to_vip();
    let gap = SaddleGap::new(inst);
    let mut res = run(&vip, epsilon, alpha, lambda, vec![d_hat_x, d_hat_y], vec![true, true], ledger, opts, &gap)?;
    res.bounds = Some(bounds);
    Ok(res)
}

/// Decoupled method on a block VIP, weights from the declared constants.
pub fn dm_vip_run(inst: &VipInstance, epsilon: f64, ledger: &mut Ledger) -> Result<DmResult> {
    dm_vip_run_with(inst, epsilon, ledger, &DmRunOptions::default())
}

pub fn dm_vip_run_with(inst: &VipInstance, epsilon: f64, ledger: &mut Ledger, opts: &DmRunOptions) -> Result<DmResult> {
    inst.validate()?;
    if inst.num_blocks() < 2 {
        return Err(Error::Parameter("the VIP method needs at least two blocks".into()));
    }
    let radii = inst.radii.clone();
    let alpha = decoupled_weights(&inst.lipschitz, &radii, epsilon, 2.0);
    let lc = coupled_conditioning(&inst.lipschitz, &radii, &alpha);
    let lambda = if lc > 0.0 { 2.0 * lc } else { 2.0 };
    if !lambda.is_finite() {
        return Err(Error::Parameter("singular λ".into()));
    }
    let gap = VipGap::new(inst);
    let mut res = run(inst, epsilon, alpha, lambda, radii, inst.gradient_blocks.clone(), ledger, opts, &gap)?;
    res.vip_bounds = Some(vip_bounds(inst, epsilon)?);
    Ok(res)
}

#[allow(clippy::too_many_arguments)]
fn run(
    vip: &VipInstance,
    epsilon: f64,
    alpha: Vec<f64>,
    lambda: f64,
    d_hat: Vec<f64>,
    gradient_blocks: Vec<bool>,
    ledger: &mut Ledger,
    opts: &DmRunOptions,
    gap: &dyn GapOracle,
) -> Result<DmResult> {
    if ledger.agents() != vip.num_blocks() {
        return Err(Error::Parameter("ledger agent count does not match the instance".into()));
    }
    let t_bound = outer_iteration_bound(&alpha, &vip.radii, lambda, epsilon);
    let inner: Vec<InnerSolver> = gradient_blocks
        .iter()
        .map(|g| {
            if *g {
                InnerSolver::Arm {
                    factor: opts.arm_factor,
                }
            } else {
                InnerSolver::Feg
            }
        })
        .collect();
    let params = DmParams {
        alpha: alpha.clone(),
        lambda: LambdaSchedule::Constant(lambda),
        epsilon,
        d_hat,
        inner: inner.clone(),
        max_iterations: opts.max_iterations.unwrap_or(2 * t_bound as usize + 10),
        gap_stride: opts.gap_stride,
    };
    let mut solver = FdsSolver {
        inner,
        parallel: opts.parallel,
    };
    let out = rom_run(vip, &params, &mut solver, ledger, gap)?;
    Ok(DmResult {
        candidate: out.candidate,
        gap: out.gap,
        status: out.status,
        iterations: out.iterations,
        rounds: ledger.round(),
        queries: ledger.queries().to_vec(),
        weighted_cost: ledger.weighted_oracle_cost(),
        alpha,
        lambda,
        iteration_bound: t_bound,
        history: out.history,
        bounds: None,
        vip_bounds: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Matrix;
    use crate::problems::make_bilinear_sp;

    #[test]
    fn scalar_bilinear_within_bound() {
        let inst = make_bilinear_sp(&Matrix::from_element(1, 1, 1.0), &Vector::zeros(1), 1.0, 1.0).unwrap();
        let mut inst = inst;
        inst.x0 = Vector::from_element(1, 1.0);
        inst.y0 = Vector::from_element(1, 1.0);
        inst.solution = Some((Vector::zeros(1), Vector::zeros(1)));
        let mut ledger = Ledger::new(2);
        let r = dm_sp_run(&inst, 0.1, 1.0, 1.0, &mut ledger).unwrap();
        assert!(r.status.reached_target());
        assert_eq!(r.iteration_bound, 20);
        assert!(r.rounds <= 42);
        for h in &r.history {
            assert!(h.a >= 0.5 * (1.0 - 1e-9));
        }
    }
}
