//! Critical-mass analysis of research-group quality against group size.
//!
//! The crate fits the two-segment model of expected quality
//!
//! ```text
//! <s>(N) = a1 + b1 N   for N <= N_c
//!          a2 + b2 N   for N >= N_c
//! ```
//!
//! to assessment data, derives the lower critical mass `N_k = N_c / 2`,
//! compares the fit against polynomial, power-law and shifted-logarithm
//! alternatives, runs the accompanying hypothesis tests and ranks groups by
//! their deviation from the size-adjusted expectation.
//!
//! The 2008 Statistics & Operational Research submissions ship as an embedded
//! fixture, see [`data::Dataset::fixture`].

pub mod data;
pub mod error;
pub mod hypothesis;
pub mod micro;
pub mod nls;
pub mod ols;
pub mod ranking;
pub mod report;
pub mod segmented;
pub mod special;

pub use data::{Dataset, GroupRecord, QualityProfile, Selector, WeightScheme};
pub use error::{Error, Result};
pub use hypothesis::{Decision, TestResult};
pub use micro::{MicroParams, PlantedPiecewise};
pub use nls::{Ansatz, AnsatzFit};
pub use ols::LinearFit;
pub use ranking::{ResidualMode, ResidualReport};
pub use segmented::{Bootstrap, ContinuityMode, CriticalMasses, PiecewiseFit, PiecewiseParams};
