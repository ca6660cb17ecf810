//! Solver and simulator library for non-smooth convex decentralized
//! optimization over time-varying gossip networks.
//!
//! The crate is organized around five pieces:
//!
//! * [`problem`] — objective functions, subgradient oracles, and runtime
//!   checkers for the standing assumptions (convexity of the oracle
//!   inequality, Lipschitz bounds).
//! * [`network`] — time-varying communication graphs, gossip matrices, the
//!   rotating-star construction, and spectral certification of the network
//!   condition number.
//! * [`solver`] — the optimal primal-dual method with error feedback and an
//!   inner subgradient loop, plus its parameter schedules, budget rules, and
//!   the duality-gap certificate.
//! * [`hard_instance`] — adversarial piecewise-linear problem generators with
//!   analytic solutions, including the Huber-smoothed convex variant.
//! * [`span_oracle`] — a span automaton for the black-box model, certifying
//!   the communication lower bound on the rotating star.
//!
//! [`baselines`] provides centralized subgradient descent and the classic
//! decentralized subgradient method for comparison runs, and [`record`] holds
//! the per-iteration metric rows emitted by all methods.
//!
//! The crate is `no_std` (with `alloc`); all IO, configuration, and CSV
//! emission live in the companion CLI crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod baselines;
pub mod hard_instance;
pub mod linalg;
pub mod network;
pub mod problem;
pub mod record;
pub mod solver;
pub mod span_oracle;

pub use linalg::NodeStack;
pub use network::TimeVaryingNetwork;
pub use problem::ProblemInstance;
pub use record::RunRecord;
