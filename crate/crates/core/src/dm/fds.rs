//! Fully decoupled subproblem solver: one frozen-remote MRN solve per block.

use rayon::prelude::*;

use super::arm::arm_solve;
use super::checks::{mss_check, CheckOutcome, MrnTask, MssTask};
use super::feg::feg_solve;
use super::{coupled_conditioning, InnerSolver};
use crate::accounting::Ledger;
use crate::error::{Error, Result};
use crate::geometry::{AssembledMetric, Vector};
use crate::problems::VipInstance;

/// Output of one decoupled subproblem solve.
#[derive(Debug, Clone)]
pub struct FdsOutput {
    pub z_plus: Vector,
    /// `ψ′(z⁺)`, de-regularized.
    pub subgradient: Vector,
    /// Inner queries per block.
    pub block_queries: Vec<u64>,
    /// Result of the runtime MSS check.
    pub check: CheckOutcome,
}

/// Anything that solves the proximal subproblem on a VIP instance.
pub trait MssSolver {
    fn solve(
        &mut self,
        problem: &VipInstance,
        anchor: &Vector,
        lambda: f64,
        alpha: &[f64],
        ledger: &mut Ledger,
    ) -> Result<FdsOutput>;
}

/// [`fds_solve`] with fixed per-block inner solvers.
#[derive(Debug, Clone)]
pub struct FdsSolver {
    pub inner: Vec<InnerSolver>,
    pub parallel: bool,
}

impl FdsSolver {
    pub fn new(inner: Vec<InnerSolver>) -> Self {
        Self {
            inner,
            parallel: true,
        }
    }
}

impl MssSolver for FdsSolver {
    fn solve(
        &mut self,
        problem: &VipInstance,
        anchor: &Vector,
        lambda: f64,
        alpha: &[f64],
        ledger: &mut Ledger,
    ) -> Result<FdsOutput> {
        fds_solve_with(problem, anchor, lambda, alpha, &self.inner, self.parallel, ledger)
    }
}

/// Solves the MSS at `anchor` by independent block solves and checks the
/// assembled pair. Queries are charged to `ledger` in the current round.
pub fn fds_solve(
    problem: &VipInstance,
    anchor: &Vector,
    lambda: f64,
    alpha: &[f64],
    inner: &[InnerSolver],
    ledger: &mut Ledger,
) -> Result<FdsOutput> {
    fds_solve_with(problem, anchor, lambda, alpha, inner, true, ledger)
}

/// Like [`fds_solve`], but returns an error instead of the output when the
/// MSS check fails.
pub fn fds_solve_checked(
    problem: &VipInstance,
    anchor: &Vector,
    lambda: f64,
    alpha: &[f64],
    inner: &[InnerSolver],
    ledger: &mut Ledger,
) -> Result<FdsOutput> {
    let out = fds_solve(problem, anchor, lambda, alpha, inner, ledger)?;
    if !out.check.passed {
        return Err(Error::Check(format!(
            "MSS check failed: {} > {}",
            out.check.lhs, out.check.rhs
        )));
    }
    Ok(out)
}

struct BlockResult {
    w: Vector,
    subgradient: Vector,
    queries: u64,
    records: Vec<(Vector, Vector)>,
}

fn fds_solve_with(
    problem: &VipInstance,
    anchor: &Vector,
    lambda: f64,
    alpha: &[f64],
    inner: &[InnerSolver],
    parallel: bool,
    ledger: &mut Ledger,
) -> Result<FdsOutput> {
    let k = problem.num_blocks();
    let layout = &problem.layout;
    crate::error::check_dim("fds anchor", layout.total(), anchor.len())?;
    if alpha.len() != k || inner.len() != k {
        return Err(Error::Parameter(format!("expected {k} block weights and solvers")));
    }
    let lc = coupled_conditioning(&problem.lipschitz, &problem.radii, alpha);
    if !(lambda > 0.0) || lambda < 2.0 * lc * (1.0 - 1e-12) {
        return Err(Error::Parameter(format!(
            "weak coupling violated: λ = {lambda} < 2·L̄_c = {}",
            2.0 * lc
        )));
    }

    let solve_block = |i: usize| -> Result<BlockResult> {
        let v_i = layout.block_owned(anchor, i);
        let metric = problem.metrics[i].clone();
        let mu = alpha[i] * lambda;
        let delta = mu / 2.0;
        let task = MrnTask {
            composite: problem.psis[i].add_quadratic(mu, &v_i),
            reference: v_i.clone(),
            delta,
            metric: metric.clone(),
            mu: Some(mu),
            lipschitz: problem.lipschitz[(i, i)],
        };
        let mut records = Vec::new();
        let mut joint = anchor.clone();
        let mut op = |w: &Vector| -> Vector {
            layout.set_block(&mut joint, i, w);
            let r = problem.block_operator(i, &joint);
            records.push((joint.clone(), r.clone()));
            r
        };
        let sol = match inner[i] {
            InnerSolver::Arm { factor } => arm_solve(&task, 2.0 * delta / 3.0, factor, &mut op)?,
            InnerSolver::Feg => feg_solve(&task, &mut op)?,
        };
        let subgradient = sol.subgradient - metric.apply(&(&sol.w - &v_i)) * mu;
        Ok(BlockResult {
            w: sol.w,
            subgradient,
            queries: sol.queries,
            records,
        })
    };

    let results: Vec<Result<BlockResult>> = if parallel {
        (0..k).into_par_iter().map(solve_block).collect()
    } else {
        (0..k).map(solve_block).collect()
    };
    let mut ws = Vec::with_capacity(k);
    let mut subs = Vec::with_capacity(k);
    let mut block_queries = Vec::with_capacity(k);
    for (i, r) in results.into_iter().enumerate() {
        let r = r?;
        ledger.absorb(i, r.records);
        ws.push(r.w);
        subs.push(r.subgradient);
        block_queries.push(r.queries);
    }
    let z_plus = layout.assemble(&ws)?;
    let subgradient = layout.assemble(&subs)?;

    let metric = AssembledMetric::new(problem.metrics.clone(), alpha.to_vec())?;
    let task = MssTask {
        anchor: anchor.clone(),
        lambda,
        metric,
    };
    // verification evaluation, not charged
    let v_psi = problem.operator(&z_plus) + &subgradient;
    let check = mss_check(&task, &z_plus, &v_psi);
    debug_assert!(check.passed, "MSS check failed: {check:?}");
    Ok(FdsOutput {
        z_plus,
        subgradient,
        block_queries,
        check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Matrix;
    use crate::problems::make_bilinear_sp;

    #[test]
    fn bilinear_closed_form() {
        let inst = make_bilinear_sp(&Matrix::from_element(1, 1, 1.0), &Vector::zeros(1), 10.0, 10.0)
            .unwrap()
            .to_vip();
        let anchor = Vector::from_vec(vec![1.0, 1.0]);
        let mut ledger = Ledger::new(2);
        let out = fds_solve_checked(
            &inst,
            &anchor,
            2.0,
            &[1.0, 1.0],
            &[InnerSolver::default(), InnerSolver::default()],
            &mut ledger,
        )
        .unwrap();
        assert!((out.z_plus[0] - 0.5).abs() < 1e-12);
        assert!((out.z_plus[1] - 1.5).abs() < 1e-12);
        assert!(out.check.lhs <= out.check.rhs);
        assert!((out.check.lhs - 0.5f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn weak_coupling_enforced() {
        let inst = make_bilinear_sp(&Matrix::from_element(1, 1, 1.0), &Vector::zeros(1), 1.0, 1.0)
            .unwrap()
            .to_vip();
        let mut ledger = Ledger::new(2);
        let r = fds_solve(
            &inst,
            &Vector::zeros(2),
            1.0,
            &[1.0, 1.0],
            &[InnerSolver::Feg, InnerSolver::Feg],
            &mut ledger,
        );
        assert!(matches!(r, Err(Error::Parameter(_))));
    }
}
