//! Decision-sensitivity toolkit: information value (EVPPI), value of perfect
//! information and of the perfect model, decision-change probabilities,
//! sample information value, and first-order Sobol' indices — all computed by
//! post-processing a single set of Monte Carlo samples, with no additional
//! model evaluations.
//!
//! Modules: [`prob`] (distributions, seeding, quadrature), [`model`]
//! (problems, sample tables, built-in examples), [`smooth`] (conditional-
//! expectation smoothers), [`discrete`] and [`continuous`] (the engines),
//! [`rare`] (rare-event variant), [`report`] and [`cli`] (front end).

pub mod cli;
pub mod continuous;
pub mod discrete;
pub mod model;
pub mod prob;
pub mod rare;
pub mod report;
pub mod smooth;

pub use continuous::{
    augment, conditional_optimum, evppi_continuous, prior_optimum_continuous, ContinuousMode,
    ContinuousUtility, OptimalDecisionMap,
};
pub use discrete::{DiscreteVoi, Estimate, Estimator, EvppiOutcome, VoiError};
pub use model::{
    DecisionSpace, FactorClass, FactorSpec, ModelError, Problem, SampleTable, UtilityModel,
};
pub use prob::{DistributionSpec, ProbError, RandomSource};
pub use rare::{Kde, RareEventProblem};
pub use report::VoiReport;
pub use smooth::{SmoothError, Smoother, SmootherConfig};
