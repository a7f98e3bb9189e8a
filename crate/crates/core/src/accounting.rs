//! Exact bookkeeping of communication rounds and per-agent oracle queries.

use crate::geometry::{ScaledMetric, Vector};
use crate::linalg::{orthonormal_basis, residual_to_span};

/// How a solver run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// Accuracy target reached.
    Converged,
    /// An exact solution was hit (zero residual).
    SolutionFound,
    BudgetExhausted,
    Diverged,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::SolutionFound => "solution-found",
            RunStatus::BudgetExhausted => "budget-exhausted",
            RunStatus::Diverged => "diverged",
        }
    }

    pub fn reached_target(&self) -> bool {
        matches!(self, RunStatus::Converged | RunStatus::SolutionFound)
    }
}

/// One recorded oracle call.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub round: usize,
    pub agent: usize,
    pub point: Vector,
    pub response: Vector,
}

/// Communication-round counter, per-agent query counters and an optional
/// trace of every query.
#[derive(Debug, Clone)]
pub struct Ledger {
    round: usize,
    queries: Vec<u64>,
    costs: Vec<f64>,
    per_round: Vec<Vec<u64>>,
    trace: Option<Vec<QueryRecord>>,
}

impl Ledger {
    /// Ledger for `agents` agents with unit costs and tracing enabled.
    pub fn new(agents: usize) -> Self {
        Self::with_costs(vec![1.0; agents])
    }

    pub fn with_costs(costs: Vec<f64>) -> Self {
        let k = costs.len();
        Self {
            round: 0,
            queries: vec![0; k],
            costs,
            per_round: vec![vec![0; k]],
            trace: Some(Vec::new()),
        }
    }

    /// Counters only; keeps memory flat on long runs.
    pub fn without_trace(mut self) -> Self {
        self.trace = None;
        self
    }

    pub fn agents(&self) -> usize {
        self.queries.len()
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn queries(&self) -> &[u64] {
        &self.queries
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn has_trace(&self) -> bool {
        self.trace.is_some()
    }

    pub fn trace(&self) -> &[QueryRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }

    /// Query counts per round (index = round, inner index = agent).
    pub fn per_round(&self) -> &[Vec<u64>] {
        &self.per_round
    }

    pub fn record_query(&mut self, agent: usize, point: &Vector, response: &Vector) {
        assert!(agent < self.queries.len(), "agent index {agent} out of range");
        self.queries[agent] += 1;
        self.per_round[self.round][agent] += 1;
        if let Some(t) = self.trace.as_mut() {
            t.push(QueryRecord {
                round: self.round,
                agent,
                point: point.clone(),
                response: response.clone(),
            });
        }
    }

    /// Appends records produced elsewhere (e.g. by a parallel block solve)
    /// into the current round.
    pub fn absorb(&mut self, agent: usize, records: Vec<(Vector, Vector)>) {
        for (p, r) in records {
            self.record_query(agent, &p, &r);
        }
    }

    pub fn end_round(&mut self) {
        self.round += 1;
        self.per_round.push(vec![0; self.queries.len()]);
    }

    /// `Σ_i c_i N_i`.
    pub fn weighted_oracle_cost(&self) -> f64 {
        self.costs
            .iter()
            .zip(&self.queries)
            .map(|(c, n)| c * *n as f64)
            .sum()
    }

    /// Responses of `agent` recorded in rounds `< round_limit`.
    pub fn responses(&self, agent: usize, round_limit: usize) -> impl Iterator<Item = &Vector> {
        self.trace()
            .iter()
            .filter(move |r| r.agent == agent && r.round < round_limit)
            .map(|r| &r.response)
    }

    /// Records of one agent in one round.
    pub fn round_trace(&self, round: usize, agent: usize) -> impl Iterator<Item = &QueryRecord> {
        self.trace()
            .iter()
            .filter(move |r| r.agent == agent && r.round == round)
    }
}

/// Which of an agent's recorded gradients are visible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    /// Everything recorded so far (the agent's own variable).
    All,
    /// Only rounds strictly before the given one (a remote variable).
    Before(usize),
}

/// Outcome of a gradient-span membership test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanCheck {
    pub inside: bool,
    pub residual: f64,
}

/// Tests whether `candidate − origin ∈ P⁻¹ span{recorded responses of agent}`.
pub fn verify_gradient_span(
    ledger: &Ledger,
    agent: usize,
    candidate: &Vector,
    origin: &Vector,
    metric: &ScaledMetric,
    visibility: Visibility,
) -> SpanCheck {
    let limit = match visibility {
        Visibility::All => usize::MAX,
        Visibility::Before(r) => r,
    };
    let dirs: Vec<Vector> = ledger
        .responses(agent, limit)
        .map(|g| metric.apply_inv(g))
        .collect();
    let basis = orthonormal_basis(dirs.iter(), 1e-12);
    let residual = residual_to_span(&basis, &(candidate - origin));
    SpanCheck {
        inside: residual <= 1e-8 * (1.0 + candidate.norm()),
        residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn counters_and_trace() {
        let mut l = Ledger::new(2);
        l.record_query(0, &v(&[1.0]), &v(&[2.0]));
        assert_eq!(l.queries(), &[1, 0]);
        l.record_query(0, &v(&[3.0]), &v(&[4.0]));
        l.record_query(1, &v(&[5.0]), &v(&[6.0]));
        assert_eq!(l.queries(), &[2, 1]);
        let r0: Vec<_> = l.round_trace(0, 0).map(|r| r.response[0]).collect();
        assert_eq!(r0, vec![2.0, 4.0]);
        assert_eq!(l.round(), 0);
        l.end_round();
        assert_eq!(l.round(), 1);
        assert_eq!(l.per_round()[0], vec![2, 1]);
    }

    #[test]
    fn weighted_cost() {
        let mut l = Ledger::with_costs(vec![1.0, 2.0]);
        assert_eq!(l.weighted_oracle_cost(), 0.0);
        for _ in 0..3 {
            l.record_query(0, &v(&[0.0]), &v(&[0.0]));
        }
        for _ in 0..4 {
            l.record_query(1, &v(&[0.0]), &v(&[0.0]));
        }
        assert_eq!(l.weighted_oracle_cost(), 11.0);
    }

    #[test]
    fn span_membership() {
        let m = ScaledMetric::new(vec![2.0, 1.0, 4.0]).unwrap();
        let origin = v(&[1.0, 1.0, 1.0]);
        let empty = Ledger::new(1);
        assert!(verify_gradient_span(&empty, 0, &origin, &origin, &m, Visibility::All).inside);

        let mut l = Ledger::new(1);
        let g1 = v(&[1.0, 0.0, 2.0]);
        let g2 = v(&[0.0, 3.0, 0.0]);
        l.record_query(0, &origin, &g1);
        l.record_query(0, &origin, &g2);
        let cand = &origin + m.apply_inv(&(&g1 + &g2));
        assert!(verify_gradient_span(&l, 0, &cand, &origin, &m, Visibility::All).inside);

        // P⁻¹g1 = (0.5, 0, 0.5), P⁻¹g2 = (0, 3, 0): (1, 0, -1)/√2 is orthogonal
        let off = v(&[1.0, 0.0, -1.0]) / 2f64.sqrt();
        let chk = verify_gradient_span(&l, 0, &(&origin + &off), &origin, &m, Visibility::All);
        assert!(!chk.inside);
        assert!((chk.residual - 1.0).abs() < 1e-12);

        // a round-0 gradient is invisible to "before round 0"
        let chk = verify_gradient_span(&l, 0, &cand, &origin, &m, Visibility::Before(0));
        assert!(!chk.inside);
    }
}
