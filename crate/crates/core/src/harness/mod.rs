//! Monte Carlo risk, rate fitting, and verification suites.

mod config;
mod csv_out;
mod fit;
mod risk;
mod suites;

pub use config::{EstimatorKind, ExperimentConfig, ExperimentPlan, FamilyKind, FamilySpec, LossExponent, DEFAULT_SIGNAL};
pub use csv_out::{write_csv, CSV_COLUMNS};
pub use fit::{fit_loglog, rate_fit, RateFit};
pub use risk::{bootstrap_stderr, monte_carlo_risk, run_trial, trial_key, RiskPoint, RiskReport, SurrogateRisk, BOOTSTRAP_REPS};
pub use suites::{run_verification_suite, Suite, SuiteReport, EXACT_TOL, QUADRATURE_TOL, ROUNDTRIP_TOL};

#[cfg(test)]
mod tests;
