use crate::accounting::{Ledger, RunStatus};
use crate::error::{Error, Result};
use crate::evaluation::{GapOracle, GapResult};
use crate::geometry::Vector;
use crate::problems::{SaddleInstance, VipInstance};

/// Iterate norm beyond which a run is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct DgdaParams {
    /// Local steps per round.
    pub tau: usize,
    /// Step per block.
    pub eta: Vec<f64>,
    pub max_rounds: usize,
    /// Stop once the gap is at most `ε`; `0` disables the gap check.
    pub epsilon: f64,
}

impl DgdaParams {
    /// `η_x = 1/(2(L_x + L_xy))` and the analog for `y`.
    pub fn for_saddle(inst: &SaddleInstance, tau: usize, max_rounds: usize, epsilon: f64) -> Self {
        let d = inst.declared;
        let step = |l: f64| if l > 0.0 { 1.0 / (2.0 * l) } else { 1.0 };
        Self {
            tau,
            eta: vec![step(d.l_x + d.l_xy), step(d.l_y + d.l_xy)],
            max_rounds,
            epsilon,
        }
    }

    pub fn for_vip(inst: &VipInstance, tau: usize, max_rounds: usize, epsilon: f64) -> Self {
        let k = inst.num_blocks();
        let eta = (0..k)
            .map(|i| {
                let l = inst.lipschitz[(i, i)] + (0..k).filter(|j| *j != i).map(|j| inst.lbar(i, j)).sum::<f64>();
                if l > 0.0 {
                    1.0 / (2.0 * l)
                } else {
                    1.0
                }
            })
            .collect();
        Self {
            tau,
            eta,
            max_rounds,
            epsilon,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DgdaResult {
    pub candidate: Vector,
    pub gap: Option<GapResult>,
    pub status: RunStatus,
    pub rounds: usize,
    /// Euclidean distance to the known solution after each round.
    pub distances: Vec<f64>,
}

/// Exchanges iterates at the start of each round, then runs `τ` local
/// proximal gradient steps per agent with remote blocks frozen.
pub fn dgda_run(
    inst: &VipInstance,
    params: &DgdaParams,
    ledger: &mut Ledger,
    gap: Option<&dyn GapOracle>,
) -> Result<DgdaResult> {
    let k = inst.num_blocks();
    if params.tau == 0 {
        return Err(Error::Parameter("τ must be ≥ 1".into()));
    }
    if params.eta.len() != k || params.eta.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::Parameter("η must be positive per block".into()));
    }
    let layout = &inst.layout;
    let mut z = inst.z0.clone();
    let mut distances = Vec::new();
    if let Some(s) = &inst.solution {
        distances.push((&z - s).norm());
    }
    let mut status = RunStatus::BudgetExhausted;
    let mut last_gap = None;
    for _ in 0..params.max_rounds {
        let frozen = z.clone();
        let mut blocks = Vec::with_capacity(k);
        for i in 0..k {
            let m = &inst.metrics[i];
            let mut joint = frozen.clone();
            let mut w = layout.block_owned(&frozen, i);
            for _ in 0..params.tau {
                layout.set_block(&mut joint, i, &w);
                let g = inst.query(i, &joint, ledger);
                w = inst.psis[i].prox(m, &(&w - m.apply_inv(&g) * params.eta[i]), params.eta[i])?;
                if !w.iter().all(|x| x.is_finite()) || w.norm() > DIVERGENCE_THRESHOLD {
                    break;
                }
            }
            blocks.push(w);
        }
        ledger.end_round();
        z = layout.assemble(&blocks)?;
        if !z.iter().all(|x| x.is_finite()) || z.norm() > DIVERGENCE_THRESHOLD {
            status = RunStatus::Diverged;
            break;
        }
        if let Some(s) = &inst.solution {
            distances.push((&z - s).norm());
        }
        if let Some(g) = gap {
            if params.epsilon > 0.0 {
                let r = g.gap(&z)?;
                let done = r.value <= params.epsilon;
                last_gap = Some(r);
                if done {
                    status = RunStatus::Converged;
                    break;
                }
            }
        }
    }
    Ok(DgdaResult {
        candidate: z,
        gap: last_gap,
        status,
        rounds: ledger.round(),
        distances,
    })
}
