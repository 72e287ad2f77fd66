//! Capacity bounds for M-APSK over the blockwise noncoherent AWGN channel.
//!
//! The carrier phase is unknown, uniformly distributed and constant over a
//! block of `L` symbols. The crate provides:
//!
//! - [`constellation`]: M-APSK(N,P) construction with geometric ring spacing.
//! - [`numerics`]: `ln I0`, log-sum-exp and reproducible random streams.
//! - [`capacity_mc`]: Monte Carlo estimators for the coherent capacity and
//!   the phase-information terms.
//! - [`bounds`]: upper and lower bounds on the per-symbol noncoherent
//!   capacity, normalized by `L - 1`.
//! - [`oracle`]: brute-force block mutual information for small `M^L`.
//! - [`sweep`]: ring-ratio and constellation comparisons of the coherent
//!   capacity.
//! - [`cli`]: the `apsk-capacity` command line front end.
//!
//! All estimators are deterministic functions of their inputs and the
//! [`numerics::RandomStreamSpec`] they are given, independent of the number
//! of worker threads.

pub mod bounds;
pub mod capacity_mc;
pub mod cli;
pub mod constellation;
mod error;
pub mod numerics;
pub mod oracle;
pub mod sweep;

pub use bounds::{bounds_curve, bounds_row, lower_bound, upper_bound, BlockTerm, BoundsOptions, BoundsRow};
pub use capacity_mc::{
    coherent_capacity, phase_info_continuous, phase_info_given_s, phase_info_r0,
    psk_phase_info_discrete, CapacityEstimate, ChannelParams, McConfig, ThetaModel,
};
pub use constellation::{build_apsk, build_apsk_with, ring_subconstellation, BuildOptions, Constellation};
pub use error::{Error, Result};
pub use numerics::{log_bessel_i0, log_sum_exp, sample_complex_gaussian, RandomStreamSpec};
pub use oracle::{exact_block_ami, log_likelihood_block, BlockAmi, OracleConfig, ReferenceSymbol};
pub use sweep::{capacity_comparison, ring_ratio_sweep, ApskShape, SweepSpec, SweepTable};

pub use num_complex::Complex64;
