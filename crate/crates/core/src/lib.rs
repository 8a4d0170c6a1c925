//! Extinction probabilities and expected times to extinction for
//! birth-and-death processes.
//!
//! A process moves from state `n` to `n+1` at rate `λ_n` and to `n−1` at rate
//! `μ_n`; state 0 is absorbing. The crate computes
//!
//! * the probability `a_i` of ever reaching 0 from state `i`
//!   ([`extinction::extinction_probabilities`]),
//! * the expected time `ω_i` to reach 0 from state `i`, as the prefix sums of
//!   the first-passage times `δ_k` from `k+1` down to `k`
//!   ([`hitting_time::omega_stable`]).
//!
//! Both are evaluated by summing positive series directly. The textbook
//! forward recursions ([`extinction::extinction_probabilities_naive`],
//! [`hitting_time::omega_naive`]) are available too, labelled as such: for
//! expected times the recursion amplifies rounding errors factorially on
//! models like `λ_n = 1, μ_n = n` and breaks down after a few dozen states
//! regardless of the working precision.
//!
//! Arithmetic runs at machine precision or at a chosen number of significant
//! decimal digits ([`arithmetic::RealContext`]). A Monte Carlo simulator
//! ([`simulate`]) provides an independent check.
//!
//! ```
//! use birthdeath::arithmetic::RealContext;
//! use birthdeath::hitting_time::omega_stable;
//! use birthdeath::rates::expr_model;
//! use birthdeath::series::SeriesPolicy;
//!
//! let ctx = RealContext::machine();
//! let model = expr_model("1", "n", &ctx).unwrap();
//! let policy = SeriesPolicy::default_for(&ctx);
//! let report = omega_stable(&model, 2, &policy, &ctx).unwrap();
//! let e = std::f64::consts::E;
//! assert!((report.omega[1].to_f64() - (e - 1.0)).abs() < 1e-15);
//! ```

use thiserror::Error;

pub mod arithmetic;
pub mod diagnostics;
pub mod extinction;
pub mod hitting_time;
pub mod rate_expr;
pub mod rates;
pub mod series;
pub mod simulate;

pub use arithmetic::{constant_e, make_context, PrecisionMode, Real, RealContext};
pub use diagnostics::{Method, Violation, ViolationKind};
pub use extinction::{ExtinctionClass, ExtinctionReport};
pub use hitting_time::{HittingClass, HittingTimeReport};
pub use rates::{ModelError, RateModel};
pub use series::{SeriesOutcome, SeriesPolicy};
pub use simulate::TrajectoryStats;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Arithmetic(#[from] arithmetic::ArithmeticError),
    #[error("series truncation inconclusive after {terms} terms")]
    Inconclusive { terms: usize },
    #[error("overflow computing {what} at index {index}")]
    Overflow { what: &'static str, index: usize },
    #[error("invalid series policy: {0}")]
    InvalidPolicy(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}
