//! Decoupled methods for distributed saddle-point problems and monotone
//! inclusions, with exact accounting of communication rounds and
//! per-agent oracle queries.
//!
//! Agents own one block of variables each and may only evaluate their own
//! block operator. A [`accounting::Ledger`] counts every query and every
//! round, so each solver's cost can be compared against closed-form
//! complexity bounds from [`evaluation`].
//!
//! * [`dm`]: the decoupled saddle and VIP methods, built from a relaxed
//!   outer loop, a decoupled subproblem solver and accelerated inner solvers.
//! * [`solvers_baseline`]: extragradient and decoupled gradient descent-ascent.
//! * [`hard_instances`]: worst-case constructions and Krylov subspace tools.
//! * [`problems`]: instances, composite terms, generators and TOML files.
//! * [`cli`]: the experiment runner behind the `dsp` binary.
//!
//! ```
//! use decoupled_saddle::accounting::Ledger;
//! use decoupled_saddle::dm::dm_sp_run;
//! use decoupled_saddle::problems::generators::random_bilinear;
//!
//! let inst = random_bilinear(3, 4, 1.0, 1.0, 1.0, 7).unwrap();
//! let mut ledger = Ledger::new(2);
//! let res = dm_sp_run(&inst, 0.1, 1.0, 1.0, &mut ledger).unwrap();
//! assert!(res.gap.unwrap().value <= 0.1);
//! assert!(res.rounds as f64 <= 2.0 + 4.0 * 1.0 / 0.1);
//! ```
//!
//! Runnable examples live in `examples/`, one per capability:
//! `geometry_norms`, `bilinear_dm_sp`, `extragradient_baseline`,
//! `dgda_regimes`, `arm_inner_solver`, `fds_decoupling`,
//! `polymatrix_dm_vip`, `hard_instance_lower_bound`, `complexity_bounds`,
//! `experiment_grid` and `ledger_span`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accounting;
pub mod cli;
pub mod dm;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod hard_instances;
pub mod linalg;
pub mod problems;
pub mod solvers_baseline;
