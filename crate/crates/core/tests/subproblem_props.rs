use decoupled_saddle::accounting::Ledger;
use decoupled_saddle::dm::{
    arm_query_bound, arm_solve, coupled_conditioning, decoupled_weights, fds_solve, mrn_check, InnerSolver, MrnTask,
    DEFAULT_INNER_FACTOR,
};
use decoupled_saddle::geometry::{ScaledMetric, Vector};
use decoupled_saddle::problems::generators::{gaussian_vector, random_polymatrix, random_spd, rng};
use decoupled_saddle::problems::CompositeTerm;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decoupled_solve_meets_proximal_criterion(
        dims in prop::collection::vec(1usize..4, 2..5),
        l_off in 0.1f64..3.0,
        l_diag in 0.0f64..2.0,
        eps in 0.01f64..1.0,
        seed in 0u64..1000,
        feg_mask in 0u32..16,
    ) {
        let radii = vec![1.0; dims.len()];
        let inst = random_polymatrix(&dims, l_off, l_diag, &radii, seed).unwrap();
        let alpha = decoupled_weights(&inst.lipschitz, &inst.radii, eps, 2.0);
        let lambda = 2.0 * coupled_conditioning(&inst.lipschitz, &inst.radii, &alpha);
        let inner: Vec<InnerSolver> = (0..dims.len())
            .map(|i| if feg_mask & (1 << i) != 0 { InnerSolver::Feg } else { InnerSolver::default() })
            .collect();
        let mut r = rng(seed + 1);
        let anchor = gaussian_vector(inst.layout.total(), &mut r);
        let mut ledger = Ledger::new(dims.len());
        let out = fds_solve(&inst, &anchor, lambda, &alpha, &inner, &mut ledger).unwrap();
        prop_assert!(out.check.passed, "lhs {} rhs {}", out.check.lhs, out.check.rhs);
        prop_assert_eq!(ledger.round(), 0);
    }

    #[test]
    fn accelerated_solver_meets_distance_accuracy(
        n in 1usize..16,
        l in 0.1f64..10.0,
        xi in 0.01f64..1.0,
        seed in 0u64..1000,
    ) {
        let mut r = rng(seed);
        let h = random_spd(n, 1e-3 * l, l, &mut r);
        let b = gaussian_vector(n, &mut r);
        let v = gaussian_vector(n, &mut r);
        let w_star = h.clone().lu().solve(&b).unwrap();
        let task = MrnTask {
            composite: CompositeTerm::Zero,
            reference: v.clone(),
            delta: xi,
            metric: ScaledMetric::identity(n),
            mu: None,
            lipschitz: l,
        };
        let out = arm_solve(&task, xi, DEFAULT_INNER_FACTOR, &mut |w| &h * w - &b).unwrap();
        prop_assert!(out.queries as f64 <= arm_query_bound(l, xi));
        prop_assert_eq!(out.subgradient.amax(), 0.0);
        let residual = (&h * &out.w - &b).norm();
        prop_assert!(residual <= xi * (&v - &w_star).norm(), "{} > {}", residual, xi * (&v - &w_star).norm());
    }

    #[test]
    fn ball_constrained_output_is_consistent(n in 1usize..8, xi in 0.05f64..1.0, rad in 0.2f64..2.0, seed in 0u64..500) {
        let mut r = rng(seed);
        let h = random_spd(n, 0.0, 1.0, &mut r);
        let b = gaussian_vector(n, &mut r) * 3.0;
        let psi = CompositeTerm::ball(&Vector::zeros(n), rad);
        let task = MrnTask {
            composite: psi.clone(),
            reference: Vector::zeros(n),
            delta: xi,
            metric: ScaledMetric::identity(n),
            mu: None,
            lipschitz: 1.0,
        };
        let out = arm_solve(&task, xi, DEFAULT_INNER_FACTOR, &mut |w| &h * w - &b).unwrap();
        prop_assert!(out.w.norm() <= rad * (1.0 + 1e-9));
        prop_assert!(psi.is_subgradient(&task.metric, &out.w, &out.subgradient, 1e-8));
        let chk = mrn_check(&task, &out.w, &(&h * &out.w - &b + &out.subgradient));
        prop_assert!(chk.lhs.is_finite() && chk.rhs.is_finite());
    }
}
