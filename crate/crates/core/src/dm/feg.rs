//! Anchored extragradient for block residual problems with a monotone,
//! possibly non-gradient operator.

use crate::dm::checks::{mrn_check, InnerSolution, MrnTask};
use crate::error::{Error, Result};
use crate::geometry::Vector;

/// Query cap for a single solve.
pub const FEG_QUERY_CAP: u64 = 1_000_000;

/// Halpern-anchored extragradient with anchor weight `1/(t+2)` and step
/// `1/(2L)`, stopping as soon as the relative residual criterion holds at
/// the extrapolated point.
pub fn feg_solve(task: &MrnTask, op: &mut dyn FnMut(&Vector) -> Vector) -> Result<InnerSolution> {
    if !(task.delta > 0.0) {
        return Err(Error::Parameter("δ must be > 0".into()));
    }
    let metric = &task.metric;
    let psi = &task.composite;
    let anchor = &task.reference;
    let eta = if task.lipschitz > 0.0 {
        1.0 / (2.0 * task.lipschitz)
    } else {
        1.0 / task.mu.filter(|m| *m > 0.0).unwrap_or(1.0)
    };
    let mut queries = 0u64;
    let mut eval = |w: &Vector, q: &mut u64| -> Result<Vector> {
        *q += 1;
        let g = op(w);
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite operator value".into()));
        }
        Ok(g)
    };
    let mut w = anchor.clone();
    let mut t = 0u64;
    loop {
        if queries + 2 > FEG_QUERY_CAP {
            return Err(Error::Numerical(format!(
                "anchored extragradient hit the {FEG_QUERY_CAP}-query cap (δ = {}, L = {})",
                task.delta, task.lipschitz
            )));
        }
        let beta = 1.0 / (t as f64 + 2.0);
        let base = &w + (anchor - &w) * beta;
        let g_w = eval(&w, &mut queries)?;
        let p = &base - metric.apply_inv(&g_w) * eta;
        let u = psi.prox(metric, &p, eta)?;
        let sub_u = metric.apply(&(&p - &u)) / eta;
        let g_u = eval(&u, &mut queries)?;
        let residual = &g_u + &sub_u;
        if mrn_check(task, &u, &residual).passed {
            return Ok(InnerSolution {
                w: u,
                subgradient: sub_u,
                queries,
            });
        }
        let p2 = &base - metric.apply_inv(&g_u) * eta;
        w = psi.prox(metric, &p2, eta)?;
        t += 1;
    }
}
