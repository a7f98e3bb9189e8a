use crate::geometry::{AssembledMetric, ScaledMetric, Vector};
use crate::problems::CompositeTerm;

/// Absolute slack allowed by both acceptance criteria.
pub const CHECK_TOL: f64 = 1e-10;

/// Result of an inequality check: `slack = LHS − RHS`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOutcome {
    pub passed: bool,
    pub slack: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl CheckOutcome {
    fn new(lhs: f64, rhs: f64) -> Self {
        let slack = lhs - rhs;
        Self {
            passed: slack <= CHECK_TOL && lhs.is_finite(),
            slack,
            lhs,
            rhs,
        }
    }
}

/// Proximal subproblem `0 ∈ V(z) + ∂ψ(z) + λP(z − v)` in the assembled metric.
#[derive(Debug, Clone)]
pub struct MssTask {
    pub anchor: Vector,
    pub lambda: f64,
    pub metric: AssembledMetric,
}

/// `‖V(z⁺) + ψ′(z⁺) + λP(z⁺ − v)‖_{E*} ≤ λ‖z⁺ − v‖_E`, where
/// `v_psi = V(z⁺) + ψ′(z⁺)`.
pub fn mss_check(task: &MssTask, z_plus: &Vector, v_psi: &Vector) -> CheckOutcome {
    let diff = z_plus - &task.anchor;
    let pd = task.metric.apply(&diff).expect("joint dimension");
    let lhs = task
        .metric
        .dual_norm(&(v_psi + pd * task.lambda))
        .expect("joint dimension");
    let rhs = task.lambda * task.metric.norm(&diff).expect("joint dimension");
    CheckOutcome::new(lhs, rhs)
}

/// Block residual problem: find `w⁺` with
/// `‖V_w(w⁺) + ψ′_w(w⁺)‖_* ≤ δ‖w⁺ − v_w‖`.
#[derive(Debug, Clone)]
pub struct MrnTask {
    pub composite: CompositeTerm,
    pub reference: Vector,
    pub delta: f64,
    pub metric: ScaledMetric,
    /// Strong monotonicity modulus contributed by the composite term.
    pub mu: Option<f64>,
    /// Lipschitz constant of `V_w`.
    pub lipschitz: f64,
}

/// `residual = V_w(w⁺) + ψ′_w(w⁺)`.
pub fn mrn_check(task: &MrnTask, w_plus: &Vector, residual: &Vector) -> CheckOutcome {
    let lhs = task.metric.dual_norm(residual);
    let rhs = task.delta * task.metric.norm(&(w_plus - &task.reference));
    CheckOutcome::new(lhs, rhs)
}

/// Outcome of an inner block solve.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub w: Vector,
    /// Element of `∂ψ_w(w)` (covector).
    pub subgradient: Vector,
    pub queries: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task_1d(lambda: f64) -> MssTask {
        MssTask {
            anchor: Vector::zeros(1),
            lambda,
            metric: AssembledMetric::new(vec![ScaledMetric::identity(1)], vec![1.0]).unwrap(),
        }
    }

    fn v(x: f64) -> Vector {
        Vector::from_element(1, x)
    }

    #[test]
    fn mss_examples() {
        let t = task_1d(2.0);
        assert!(mss_check(&t, &v(0.0), &v(0.0)).passed);
        let ok = mss_check(&t, &v(1.0), &v(-2.0));
        assert!(ok.passed);
        assert_eq!(ok.lhs, 0.0);
        let bad = mss_check(&t, &v(1.0), &v(1.0));
        assert!(!bad.passed);
        assert_eq!(bad.lhs, 3.0);
        assert_eq!(bad.rhs, 2.0);
    }

    #[test]
    fn mrn_examples() {
        let task = MrnTask {
            composite: CompositeTerm::Zero,
            reference: v(1.0),
            delta: 1.0,
            metric: ScaledMetric::identity(1),
            mu: None,
            lipschitz: 1.0,
        };
        assert!(mrn_check(&task, &v(0.2), &v(0.4)).passed);
        assert!(!mrn_check(&task, &v(0.9), &v(0.5)).passed);
        assert!(mrn_check(&task, &v(0.5), &v(0.0)).passed);
    }
}
