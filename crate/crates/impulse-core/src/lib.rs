//! Dynamics of interval self-maps disturbed by randomly timed impulses.
//!
//! An ordinary map `f` drives the state; at random times (i.i.d. on
//! `{0, 1, 2, …}`) an impulse map `g` is applied instead. The crate provides
//! the full toolchain for studying the long-run distribution of such a
//! system:
//!
//! * [`maps`] — exact interval algebra for piecewise-monotone maps,
//! * [`impulse`] — the countdown Markov chain, its stationary law and time
//!   reversal,
//! * [`simulate`] — trajectory and ensemble Monte Carlo with reproducible
//!   per-stream seeding,
//! * [`operator`] — the discretized transfer operator of the pair chain with
//!   an exact path-sum oracle,
//! * [`stability`] — average-contraction and splitting certificates plus a
//!   Monte-Carlo synchronization test,
//! * [`stationary`] — the collapsed impulse-time system and the closed-form
//!   lift of its stationary law,
//! * [`config`] — JSON experiment configuration shared by the CLI and the
//!   foreign-function layer.

pub mod config;
pub mod error;
pub mod impulse;
pub mod io;
pub mod maps;
pub mod operator;
pub mod rng;
pub mod simulate;
pub mod stability;
pub mod stationary;
pub mod suite;

pub use error::{DistError, MapError, OperatorError, StabilityError, SystemError};
pub use impulse::{Cylinder, ImpulseTimeDistribution, StationaryStateDistribution};
pub use maps::{compose_image, Interval, IntervalMap};
pub use operator::{
    apply_transfer, integrate, iterate_to_convergence, n_step_direct, BinnedMeasure, GridSpec,
    ProductMeasure, TestFunction,
};
pub use simulate::{
    conditional_probability_estimate, ks_distance, ks_distance_two_sample, simulate_ensemble,
    simulate_trajectory, wasserstein1, EmpiricalCdf, ImpulseSystem,
};
pub use stability::{
    average_contraction, find_splitting, fixed_point_splitting, max_expected_gap,
    synchronization_test, validate_certificate, ContractionReport, SplittingCertificate,
};
pub use stationary::{
    collapsed_stationary, example_cdf, fixed_point_residual, lift_stationary, CollapsedIfs,
    LimitDistribution,
};
