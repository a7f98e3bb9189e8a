//! Decoupled methods: the reduced-operator outer loop, the fully decoupled
//! subproblem solver, residual checks, and the two inner solvers.

pub mod arm;
pub mod checks;
pub mod drivers;
pub mod fds;
pub mod feg;
pub mod rom;

pub use arm::{arm_query_bound, arm_solve, ArmSchedule, DEFAULT_INNER_FACTOR};
pub use checks::{mrn_check, mss_check, CheckOutcome, InnerSolution, MrnTask, MssTask};
pub use drivers::{dm_sp_run, dm_sp_run_with, dm_vip_run, dm_vip_run_with, DmResult, DmRunOptions};
pub use fds::{fds_solve, fds_solve_checked, FdsOutput, FdsSolver, MssSolver};
pub use feg::feg_solve;
pub use rom::{rom_run, rom_stepsize, IterationRecord, RomOutcome, RomStep};

use crate::error::{Error, Result};
use crate::geometry::Matrix;

/// Inner solver used for one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerSolver {
    /// Accumulative regularization with inner factor `c` in `N_k = ⌈c√(L/σ_k)⌉`.
    Arm { factor: f64 },
    /// Anchored extragradient.
    Feg,
}

impl Default for InnerSolver {
    fn default() -> Self {
        InnerSolver::Arm {
            factor: DEFAULT_INNER_FACTOR,
        }
    }
}

/// Regularization schedule `λ_t`.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSchedule {
    Constant(f64),
    /// Values for `t = 1, 2, …`; the last entry repeats.
    Sequence(Vec<f64>),
}

impl LambdaSchedule {
    pub fn at(&self, t: usize) -> f64 {
        match self {
            LambdaSchedule::Constant(l) => *l,
            LambdaSchedule::Sequence(v) => v[t.min(v.len() - 1)],
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            LambdaSchedule::Constant(l) => *l,
            LambdaSchedule::Sequence(v) => v.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }
}

/// Parameters of a decoupled-method run.
#[derive(Debug, Clone)]
pub struct DmParams {
    pub alpha: Vec<f64>,
    pub lambda: LambdaSchedule,
    pub epsilon: f64,
    pub d_hat: Vec<f64>,
    pub inner: Vec<InnerSolver>,
    pub max_iterations: usize,
    /// Evaluate the gap every `gap_stride` iterations.
    pub gap_stride: usize,
}

impl DmParams {
    pub fn validate(&self, blocks: usize) -> Result<()> {
        if self.alpha.len() != blocks || self.inner.len() != blocks || self.d_hat.len() != blocks {
            return Err(Error::Parameter(format!(
                "expected {blocks} entries in alpha, d_hat and inner"
            )));
        }
        if self.alpha.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::Parameter("alpha entries must be > 0".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Parameter("ε must be > 0".into()));
        }
        if let LambdaSchedule::Sequence(v) = &self.lambda {
            if v.is_empty() {
                return Err(Error::Parameter("empty λ schedule".into()));
            }
        }
        if !(self.lambda.min() > 0.0) {
            return Err(Error::Parameter("λ must be > 0".into()));
        }
        if self.gap_stride == 0 {
            return Err(Error::Parameter("gap stride must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Coupled conditioning
/// `L̄_c = sqrt(max_j (α_j D_j)⁻¹ Σ_{i≠j} L̄_ij (Σ_{l≠i} L̄_il D_l)/α_i)`.
pub fn coupled_conditioning(lipschitz: &Matrix, radii: &[f64], alpha: &[f64]) -> f64 {
    let k = radii.len();
    let lbar = |i: usize, j: usize| lipschitz[(i, j)].max(lipschitz[(j, i)]);
    let s: Vec<f64> = (0..k)
        .map(|i| (0..k).filter(|l| *l != i).map(|l| lbar(i, l) * radii[l]).sum())
        .collect();
    let worst = (0..k)
        .map(|j| {
            (0..k)
                .filter(|i| *i != j)
                .map(|i| lbar(i, j) * s[i] / alpha[i])
                .sum::<f64>()
                / (alpha[j] * radii[j])
        })
        .fold(0.0, f64::max);
    worst.sqrt()
}

/// Block weights `α_i = (Σ_{j≠i} L̄_ij D̂_j)/D̂_i`. Blocks with no coupling
/// get `α_i = ε/(n_dec λ D̂_i²)`, which adds at most ½ to the iteration count.
pub fn decoupled_weights(lipschitz: &Matrix, d_hat: &[f64], epsilon: f64, lambda: f64) -> Vec<f64> {
    let k = d_hat.len();
    let lbar = |i: usize, j: usize| lipschitz[(i, j)].max(lipschitz[(j, i)]);
    let raw: Vec<f64> = (0..k)
        .map(|i| {
            (0..k)
                .filter(|j| *j != i)
                .map(|j| lbar(i, j) * d_hat[j])
                .sum::<f64>()
                / d_hat[i]
        })
        .collect();
    let n_dec = raw.iter().filter(|a| **a == 0.0).count();
    raw.iter()
        .enumerate()
        .map(|(i, a)| {
            if *a > 0.0 {
                *a
            } else {
                epsilon / (n_dec as f64 * lambda * d_hat[i].powi(2))
            }
        })
        .collect()
}

/// `T = ⌈Σ α_i λ D_i² / (2ε)⌉`.
pub fn outer_iteration_bound(alpha: &[f64], radii: &[f64], lambda: f64, epsilon: f64) -> u64 {
    let s: f64 = alpha
        .iter()
        .zip(radii)
        .map(|(a, d)| a * lambda * d * d)
        .sum();
    let v = s / (2.0 * epsilon);
    // absorb rounding just above an integer
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.max(1.0) {
        r.max(1.0) as u64
    } else {
        v.ceil().max(1.0) as u64
    }
}
