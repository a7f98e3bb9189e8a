//! Accumulative regularization: a sequence of increasingly regularized
//! strongly convex problems, each solved by an accelerated proximal
//! gradient loop, producing a point with small composite gradient.

use crate::dm::checks::{InnerSolution, MrnTask};
use crate::error::{Error, Result};
use crate::geometry::Vector;

/// Default multiplier `c` in `N_k = ⌈c √(L/σ_k)⌉`.
pub const DEFAULT_INNER_FACTOR: f64 = 4.0;

/// Stage schedule `(τ, σ_k, N_k, L_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSchedule {
    pub tau: usize,
    pub sigma: Vec<f64>,
    pub n: Vec<usize>,
    pub l_k: Vec<f64>,
}

impl ArmSchedule {
    /// `τ = 2 + max{0, ⌈log₄(3L/(2ξ))⌉}`, `σ_k = 4^{k−3}·2ξ/3`,
    /// `N_k = max(1, ⌈factor·√(L/σ_k)⌉)`.
    pub fn new(l: f64, xi: f64, factor: f64) -> Result<Self> {
        if !(l.is_finite() && l >= 0.0) {
            return Err(Error::Parameter(format!("Lipschitz constant {l} invalid")));
        }
        if !(xi.is_finite() && xi > 0.0) {
            return Err(Error::Parameter(format!("accuracy ξ = {xi} must be > 0")));
        }
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::Parameter(format!("inner factor {factor} must be > 0")));
        }
        let ratio = 3.0 * l / (2.0 * xi);
        let extra = if ratio > 1.0 {
            // guard against log rounding just above an exact power of four
            let e = ratio.log(4.0);
            let r = e.round();
            if (e - r).abs() < 1e-12 {
                r as usize
            } else {
                e.ceil() as usize
            }
        } else {
            0
        };
        let tau = 2 + extra;
        let sigma: Vec<f64> = (1..=tau)
            .map(|k| 4f64.powi(k as i32 - 3) * 2.0 * xi / 3.0)
            .collect();
        let n = sigma
            .iter()
            .map(|s| ((factor * (l / s).sqrt()).ceil() as usize).max(1))
            .collect();
        let l_k = sigma.iter().map(|s| l + s).collect();
        Ok(Self { tau, sigma, n, l_k })
    }

    pub fn total_queries(&self) -> usize {
        self.n.iter().sum()
    }
}

/// `34 √(3L/(2ξ))`.
pub fn arm_query_bound(l: f64, xi: f64) -> f64 {
    34.0 * (3.0 * l / (2.0 * xi)).sqrt()
}

/// Runs the accumulative regularization method on `∇f_w + ∂ψ_w`.
///
/// `grad` is the block gradient oracle; each call counts as one query.
pub fn arm_solve(
    task: &MrnTask,
    xi: f64,
    factor: f64,
    grad: &mut dyn FnMut(&Vector) -> Vector,
) -> Result<InnerSolution> {
    let psi = &task.composite;
    let metric = &task.metric;
    let l = task.lipschitz;
    let v = &task.reference;
    let mut queries = 0u64;
    let mut call = |w: &Vector, q: &mut u64| -> Result<Vector> {
        *q += 1;
        let g = grad(w);
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite gradient in inner solve".into()));
        }
        Ok(g)
    };

    if l == 0.0 {
        // constant gradient: one prox step is exact
        let g = call(v, &mut queries)?;
        let (w, subgradient) = match psi.min_linear(metric, &g)? {
            Some(w) => (w, -&g),
            None => {
                return Err(Error::Parameter(
                    "zero-Lipschitz block needs a strongly convex or bounded composite".into(),
                ))
            }
        };
        return Ok(InnerSolution {
            w,
            subgradient,
            queries,
        });
    }

    let sched = ArmSchedule::new(l, xi, factor)?;
    let mut w_bar = v.clone();
    let mut w_prev = v.clone();
    let mut sigma_prev = 0.0;
    let mut subgradient = Vector::zeros(v.len());
    for k in 0..sched.tau {
        let sigma = sched.sigma[k];
        let gamma = 1.0 - sigma_prev / sigma;
        w_bar = &w_bar * (1.0 - gamma) + &w_prev * gamma;
        let lk = sched.l_k[k];
        let mut x = w_prev.clone();
        let mut y = w_prev.clone();
        let mut t = 1.0f64;
        for _ in 0..sched.n[k] {
            let g = call(&y, &mut queries)? + metric.apply(&(&y - &w_bar)) * sigma;
            let p = &y - metric.apply_inv(&g) / lk;
            let x_next = psi.prox(metric, &p, 1.0 / lk)?;
            subgradient = metric.apply(&(&p - &x_next)) * lk;
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = &x_next + (&x_next - &x) * ((t - 1.0) / t_next);
            x = x_next;
            t = t_next;
        }
        if x.iter().any(|a| !a.is_finite()) {
            return Err(Error::Numerical("non-finite iterate in inner solve".into()));
        }
        w_prev = x;
        sigma_prev = sigma;
    }
    Ok(InnerSolution {
        w: w_prev,
        subgradient,
        queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dm::checks::mrn_check;
    use crate::geometry::ScaledMetric;
    use crate::problems::CompositeTerm;

    #[test]
    fn printed_schedule_reproduced_with_factor_16() {
        let s = ArmSchedule::new(1.0, 0.5, 16.0).unwrap();
        assert_eq!(s.tau, 3);
        let expect = [1.0 / 48.0, 1.0 / 12.0, 1.0 / 3.0];
        for (a, b) in s.sigma.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(s.n, vec![111, 56, 28]);
    }

    #[test]
    fn default_schedule_within_query_bound() {
        let s = ArmSchedule::new(1.0, 0.5, DEFAULT_INNER_FACTOR).unwrap();
        assert!((s.total_queries() as f64) <= arm_query_bound(1.0, 0.5));
    }

    fn task(psi: CompositeTerm, reference: f64, l: f64) -> MrnTask {
        MrnTask {
            composite: psi,
            reference: Vector::from_element(1, reference),
            delta: 1.0,
            metric: ScaledMetric::identity(1),
            mu: None,
            lipschitz: l,
        }
    }

    #[test]
    fn scalar_quadratic() {
        let t = task(CompositeTerm::Zero, 1.0, 1.0);
        let out = arm_solve(&t, 0.5, DEFAULT_INNER_FACTOR, &mut |w| w.clone()).unwrap();
        assert!(out.w[0].abs() <= 0.5);
        let res = &out.w + &out.subgradient;
        assert!(res.norm() <= 0.5 * 1.0);
        assert!(out.queries as f64 <= arm_query_bound(1.0, 0.5));
    }

    #[test]
    fn start_at_minimizer() {
        let t = task(CompositeTerm::Zero, 0.0, 1.0);
        let out = arm_solve(&t, 0.01, DEFAULT_INNER_FACTOR, &mut |w| w.clone()).unwrap();
        assert_eq!(out.w[0], 0.0);
        assert_eq!(out.subgradient[0], 0.0);
    }

    #[test]
    fn ball_constrained() {
        let psi = CompositeTerm::ball(&Vector::zeros(1), 0.5);
        let t = task(psi.clone(), 0.0, 1.0);
        let xi = 0.1;
        let mut grad = |w: &Vector| w.add_scalar(-2.0);
        let out = arm_solve(&t, xi, DEFAULT_INNER_FACTOR, &mut grad).unwrap();
        let res = grad(&out.w) + &out.subgradient;
        assert!(res.norm() <= xi * 0.5 + 1e-12);
        assert!(psi.is_subgradient(&t.metric, &out.w, &out.subgradient, 1e-9));
        let chk = mrn_check(&MrnTask { delta: xi, ..t.clone() }, &out.w, &res);
        assert!(chk.lhs <= xi * 0.5 + 1e-12);
    }

    #[test]
    fn zero_lipschitz_exact() {
        let t = task(CompositeTerm::quadratic(2.0, &Vector::from_element(1, 1.0)), 1.0, 0.0);
        let out = arm_solve(&t, 0.1, DEFAULT_INNER_FACTOR, &mut |_| Vector::from_element(1, 3.0)).unwrap();
        // minimizer of 3w + (w − 1)²
        assert!((out.w[0] + 0.5).abs() < 1e-14);
        assert!((out.subgradient[0] + 3.0).abs() < 1e-14);
        assert_eq!(out.queries, 1);
    }
}
