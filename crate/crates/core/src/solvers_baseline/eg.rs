use crate::accounting::{Ledger, RunStatus};
use crate::error::{Error, Result};
use crate::evaluation::{GapOracle, GapResult};
use crate::geometry::Vector;
use crate::problems::{SaddleInstance, VipInstance};

#[derive(Debug, Clone)]
pub struct EgParams {
    pub alpha: Vec<f64>,
    /// Constant step `η`.
    pub eta: f64,
    pub max_rounds: usize,
    pub epsilon: f64,
    pub gap_stride: usize,
}

impl EgParams {
    /// `α_x = (L_x D̂_x + L_xy D̂_y)/D̂_x`, `α_y = (L_y D̂_y + L_xy D̂_x)/D̂_y`, `η = 1`.
    pub fn for_saddle(inst: &SaddleInstance, epsilon: f64, d_hat_x: f64, d_hat_y: f64) -> Self {
        let d = inst.declared;
        let ax = (d.l_x * d_hat_x + d.l_xy * d_hat_y) / d_hat_x;
        let ay = (d.l_y * d_hat_y + d.l_xy * d_hat_x) / d_hat_y;
        let fix = |a: f64| if a > 0.0 { a } else { 1.0 };
        let t = (d.l_x * d.d_x * d.d_x + d.l_y * d.d_y * d.d_y) / epsilon
            + 2.0 * d.l_xy * d.d_x * d.d_y * (d_hat_y / d_hat_x + d_hat_x / d_hat_y) / epsilon;
        Self {
            alpha: vec![fix(ax), fix(ay)],
            eta: 1.0,
            max_rounds: 2 * t.ceil() as usize + 20,
            epsilon,
            gap_stride: 1,
        }
    }

    /// `α_i = (L_ii D_i + Σ_{j≠i} L̄_ij D_j)/D_i`, `η = 1`.
    pub fn for_vip(inst: &VipInstance, epsilon: f64) -> Self {
        let k = inst.num_blocks();
        let r = &inst.radii;
        let alpha: Vec<f64> = (0..k)
            .map(|i| {
                let s = inst.lipschitz[(i, i)] * r[i]
                    + (0..k).filter(|j| *j != i).map(|j| inst.lbar(i, j) * r[j]).sum::<f64>();
                let a = s / r[i];
                if a > 0.0 {
                    a
                } else {
                    1.0
                }
            })
            .collect();
        let t: f64 = (0..k).map(|i| alpha[i] * r[i] * r[i]).sum::<f64>() / epsilon;
        Self {
            alpha,
            eta: 1.0,
            max_rounds: 2 * t.ceil() as usize + 20,
            epsilon,
            gap_stride: 1,
        }
    }

    pub fn validate(&self, blocks: usize) -> Result<()> {
        if self.alpha.len() != blocks {
            return Err(Error::Parameter(format!("expected {blocks} block weights")));
        }
        if self.alpha.iter().any(|a| !(a.is_finite() && *a > 0.0)) || !(self.eta > 0.0) {
            return Err(Error::Parameter("α and η must be positive".into()));
        }
        if self.gap_stride == 0 {
            return Err(Error::Parameter("gap stride must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EgResult {
    pub candidate: Vector,
    pub gap: Option<GapResult>,
    pub status: RunStatus,
    pub iterations: usize,
    pub rounds: usize,
    /// `(rounds, gap)` after each evaluated iteration.
    pub history: Vec<(usize, f64)>,
    /// Iterates `z^{k+1}`.
    pub iterates: Vec<Vector>,
}

fn prox_step(
    inst: &VipInstance,
    base: &Vector,
    g: &Vector,
    step: &[f64],
) -> Result<Vector> {
    let layout = &inst.layout;
    let mut out = Vector::zeros(layout.total());
    for i in 0..inst.num_blocks() {
        let m = &inst.metrics[i];
        let p = layout.block_owned(base, i) - m.apply_inv(&layout.block_owned(g, i)) * step[i];
        layout.set_block(&mut out, i, &inst.psis[i].prox(m, &p, step[i])?);
    }
    Ok(out)
}

/// Extragradient in prox form. Each iteration is two rounds with one query
/// per agent per round; the candidate is the `η`-weighted average of `z^{k+1}`.
pub fn eg_run(inst: &VipInstance, params: &EgParams, ledger: &mut Ledger, gap: &dyn GapOracle) -> Result<EgResult> {
    let k = inst.num_blocks();
    params.validate(k)?;
    let step: Vec<f64> = params.alpha.iter().map(|a| params.eta / a).collect();
    let mut v = inst.z0.clone();
    let mut sum = Vector::zeros(v.len());
    let mut eta_sum = 0.0;
    let mut candidate = v.clone();
    let mut last_gap = None;
    let mut status = RunStatus::BudgetExhausted;
    let mut history = Vec::new();
    let mut iterates = Vec::new();
    let mut it = 0;

    while ledger.round() + 2 <= params.max_rounds {
        let gv: Vec<Vector> = (0..k).map(|i| inst.query(i, &v, ledger)).collect();
        ledger.end_round();
        let z = prox_step(inst, &v, &inst.layout.assemble(&gv)?, &step)?;
        let gz: Vec<Vector> = (0..k).map(|i| inst.query(i, &z, ledger)).collect();
        ledger.end_round();
        v = prox_step(inst, &v, &inst.layout.assemble(&gz)?, &step)?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite extragradient iterate".into()));
        }
        it += 1;
        sum += &z * params.eta;
        eta_sum += params.eta;
        iterates.push(z);
        candidate = &sum / eta_sum;
        if it % params.gap_stride == 0 || ledger.round() + 2 > params.max_rounds {
            let g = gap.gap(&candidate)?;
            history.push((ledger.round(), g.value));
            let done = g.value <= params.epsilon;
            last_gap = Some(g);
            if done {
                status = RunStatus::Converged;
                break;
            }
        }
    }
    Ok(EgResult {
        candidate,
        gap: last_gap,
        status,
        iterations: it,
        rounds: ledger.round(),
        history,
        iterates,
    })
}
