//! Nonparametric mean residual life estimation.
//!
//! The crate estimates the mean residual life (MRL) function
//! `e(x) = E[X - x | X > x]` from i.i.d. survival data, builds simultaneous
//! and pointwise confidence bands for it, and provides the machinery needed
//! to validate the underlying limit theory by Monte Carlo: closed-form
//! distribution oracles, simulation of the limiting Gaussian process, its
//! Brownian-motion transform, and coverage experiments.

pub mod bands;
pub mod empirical;
pub mod limitproc;
pub mod models;
pub mod montecarlo;
pub mod normal;
pub mod quad;

pub use bands::{BandPoint, BandResult, EllipseResult, PointwiseInterval};
pub use empirical::{ExceedanceSummary, MrlCurve, ResidualVariance, SortedSample};
pub use limitproc::{ProcessPath, TimeDomain, VarianceClock, ZSimulator};
pub use models::{AnalyticModel, ConditionReport};
pub use montecarlo::{CoverageReport, ExperimentConfig};
