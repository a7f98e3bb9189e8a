//! Reduced-operator outer loop with ergodic averaging.

use super::fds::MssSolver;
use super::DmParams;
use crate::accounting::{Ledger, RunStatus};
use crate::error::{Error, Result};
use crate::evaluation::{GapOracle, GapResult};
use crate::geometry::{AssembledMetric, Vector};
use crate::problems::VipInstance;

/// Below this dual norm the residual is treated as exactly zero.
pub const ZERO_RESIDUAL: f64 = 1e-14;
/// Absolute slack for the telescoped descent inequality.
pub const DESCENT_TOL: f64 = 1e-8;
/// Relative slack for `a ≥ 1/λ`.
const STEP_REL_TOL: f64 = 1e-9;

/// Step size or exact-solution signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RomStep {
    Step(f64),
    SolutionFound,
}

/// `a = 2⟨V_ψ, v − z⟩ / ‖V_ψ‖²_{E*}`.
pub fn rom_stepsize(v_psi: &Vector, v: &Vector, z: &Vector, metric: &AssembledMetric) -> Result<RomStep> {
    let dn = metric.dual_norm_sq(v_psi)?;
    if dn.sqrt() <= ZERO_RESIDUAL {
        return Ok(RomStep::SolutionFound);
    }
    Ok(RomStep::Step(2.0 * v_psi.dot(&(v - z)) / dn))
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub t: usize,
    pub a: f64,
    pub lambda: f64,
    pub z_plus: Vector,
    pub mss_slack: f64,
    pub gap: Option<f64>,
    pub rounds: usize,
    /// Telescoped descent terms at the known solution.
    pub descent_lhs: Option<f64>,
    pub descent_rhs: Option<f64>,
}

/// Mutable loop state.
#[derive(Debug, Clone)]
pub struct RomState {
    pub v: Vector,
    pub t: usize,
    pub a_sum: f64,
    pub weighted_sum: Vector,
    pub last_a: f64,
}

impl RomState {
    pub fn new(z0: Vector) -> Self {
        let n = z0.len();
        Self {
            v: z0,
            t: 0,
            a_sum: 0.0,
            weighted_sum: Vector::zeros(n),
            last_a: 0.0,
        }
    }

    pub fn average(&self) -> Option<Vector> {
        (self.a_sum > 0.0).then(|| &self.weighted_sum / self.a_sum)
    }
}

#[derive(Debug, Clone)]
pub struct RomOutcome {
    pub candidate: Vector,
    pub gap: Option<GapResult>,
    pub iterations: usize,
    pub status: RunStatus,
    pub history: Vec<IterationRecord>,
}

/// Runs the outer loop until the gap oracle reports `≤ ε`, an exact
/// solution is found, or `max_iterations` is reached.
pub fn rom_run(
    problem: &VipInstance,
    params: &DmParams,
    solver: &mut dyn MssSolver,
    ledger: &mut Ledger,
    gap_oracle: &dyn GapOracle,
) -> Result<RomOutcome> {
    let k = problem.num_blocks();
    params.validate(k)?;
    let layout = &problem.layout;
    let metric = AssembledMetric::new(problem.metrics.clone(), params.alpha.clone())?;
    let v0 = problem.z0.clone();
    let mut state = RomState::new(v0.clone());
    let mut history = Vec::new();
    let mut descent_lhs = 0.0;

    let mut status = RunStatus::BudgetExhausted;
    let mut candidate = v0.clone();
    let mut last_gap = None;

    for t in 0..params.max_iterations {
        let lambda = params.lambda.at(t);
        let out = solver.solve(problem, &state.v, lambda, &params.alpha, ledger)?;
        if !out.check.passed {
            return Err(Error::Check(format!(
                "MSS check failed at iteration {t}: {} > {}",
                out.check.lhs, out.check.rhs
            )));
        }
        ledger.end_round();
        let z = out.z_plus;
        let responses: Vec<Vector> = (0..k).map(|i| problem.query(i, &z, ledger)).collect();
        ledger.end_round();
        let v_psi = layout.assemble(&responses)? + &out.subgradient;
        state.t = t + 1;

        let a = match rom_stepsize(&v_psi, &state.v, &z, &metric)? {
            RomStep::SolutionFound => {
                candidate = z.clone();
                let g = gap_oracle.gap(&candidate)?;
                history.push(IterationRecord {
                    t: t + 1,
                    a: f64::INFINITY,
                    lambda,
                    z_plus: z,
                    mss_slack: out.check.slack,
                    gap: Some(g.value),
                    rounds: ledger.round(),
                    descent_lhs: None,
                    descent_rhs: None,
                });
                last_gap = Some(g);
                status = RunStatus::SolutionFound;
                break;
            }
            RomStep::Step(a) => a,
        };
        if a < (1.0 / lambda) * (1.0 - STEP_REL_TOL) {
            return Err(Error::Check(format!(
                "step a = {a} below 1/λ = {} at iteration {}",
                1.0 / lambda,
                t + 1
            )));
        }
        state.last_a = a;
        state.a_sum += a;
        state.weighted_sum += &z * a;

        // anchor update: prox of the linear model over dom ψ
        let step = metric.apply_inv(&v_psi)? * a;
        let shifted = &state.v - step;
        let mut next = Vector::zeros(layout.total());
        for i in 0..k {
            let b = problem.psis[i].project_domain(&problem.metrics[i], &layout.block_owned(&shifted, i))?;
            layout.set_block(&mut next, i, &b);
        }
        state.v = next;

        let (dl, dr) = match &problem.solution {
            Some(zs) => {
                descent_lhs += a * v_psi.dot(&(&z - zs));
                let rhs = 0.5 * metric.norm_sq(&(&v0 - zs))? - 0.5 * metric.norm_sq(&(&state.v - zs))?;
                if descent_lhs > rhs + DESCENT_TOL {
                    return Err(Error::Check(format!(
                        "descent inequality violated at iteration {}: {descent_lhs} > {rhs}",
                        t + 1
                    )));
                }
                (Some(descent_lhs), Some(rhs))
            }
            None => (None, None),
        };

        candidate = state.average().expect("positive weights");
        let evaluate = (t + 1) % params.gap_stride == 0 || t + 1 == params.max_iterations;
        let gap = if evaluate {
            Some(gap_oracle.gap(&candidate)?)
        } else {
            None
        };
        history.push(IterationRecord {
            t: t + 1,
            a,
            lambda,
            z_plus: z,
            mss_slack: out.check.slack,
            gap: gap.as_ref().map(|g| g.value),
            rounds: ledger.round(),
            descent_lhs: dl,
            descent_rhs: dr,
        });
        if let Some(g) = gap {
            let done = g.value <= params.epsilon;
            last_gap = Some(g);
            if done {
                status = RunStatus::Converged;
                break;
            }
        }
    }

    Ok(RomOutcome {
        candidate,
        gap: last_gap,
        iterations: state.t,
        status,
        history,
    })
}
