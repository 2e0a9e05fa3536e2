//! Upper-bound estimators matching the lower bounds: a private one-bit
//! protocol, a bit-limited block protocol, and a Gaussian sign reduction.

mod binomial;
mod comm;
mod ldp;
mod pruning;
mod reduction;
mod source;

pub use binomial::{binomial_central_moment, binomial_moment_check, BinomialMomentEntry, BinomialMomentRecord, MAX_TRIALS};
pub use comm::{alg2_comm_estimate, CommParams};
pub use ldp::{alg1_ldp_estimate, LdpParams};
pub use pruning::{Estimate, RoundLog};
pub use reduction::{gaussian_reduce_estimate, invert_sign_mean, sign_mean, Backend, ReducedEstimate};
pub use source::{LiveBernoulli, LiveGaussian, ReplaySource, SampleSource, SignReduced};
