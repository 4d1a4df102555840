//! End-to-end stochastic validation: coverage of the simultaneous band,
//! the distribution of the sup statistic against Q, pointwise asymptotic
//! normality, and variance-estimator consistency.

use crate::bands::{self, BandError};
use crate::empirical::{EmpiricalError, SortedSample};
use crate::models::{AnalyticModel, ModelError};
use crate::normal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum McError {
    #[error("replicates must be >= 1")]
    NoReplicates,
    #[error(transparent)]
    Band(#[from] BandError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Empirical(#[from] EmpiricalError),
}

/// Number of interior probe points per linear segment when checking band
/// containment and evaluating the sup statistic.
pub const SEGMENT_INTERIOR_PROBES: usize = 8;

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub model: AnalyticModel,
    pub n: usize,
    pub replicates: usize,
    pub beta: f64,
    /// Cutoff order; None means the default floor(sqrt(n)).
    pub m: Option<usize>,
    pub base_seed: u64,
    /// 0 means use the global thread pool.
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PointwiseCoverage {
    pub x: f64,
    pub coverage: f64,
    pub mc_se: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CoverageReport {
    pub simultaneous_coverage: f64,
    pub mc_se: f64,
    pub pointwise: Vec<PointwiseCoverage>,
    pub sup_stats: Vec<f64>,
    pub replicates: usize,
    pub band_constant: f64,
    pub runtime_secs: f64,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), McError> {
        self.model.validate()?;
        if self.replicates == 0 {
            return Err(McError::NoReplicates);
        }
        if self.n < 4 {
            return Err(McError::Band(BandError::SampleTooSmall(self.n)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(McError::Band(BandError::InvalidLevel(self.beta)));
        }
        Ok(())
    }

    fn run<T, F>(&self, per_replicate: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync,
    {
        let work = || {
            (0..self.replicates as u64)
                .into_par_iter()
                .map(|r| per_replicate(self.base_seed + r))
                .collect::<Vec<T>>()
        };
        if self.workers == 0 {
            work()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .expect("thread pool")
                .install(work)
        }
    }
}

/// Exact sup over x ≤ cutoff of √n·|ê_n(x) − e(x)|·F̄_n(x)/s_n, evaluated
/// over the piecewise-linear structure of ê_n: per linear segment, both
/// endpoints (covering the one-sided limits at breakpoints) plus
/// `interior_probes` interior points.
pub fn sup_statistic(
    sample: &SortedSample,
    e_true: &dyn Fn(f64) -> f64,
    cutoff: f64,
    s_n: f64,
    interior_probes: usize,
) -> f64 {
    let n = sample.n() as f64;
    let sqrt_n = n.sqrt();
    let curve = sample.mrl_curve();
    let mut sup = 0.0f64;
    let mut prev = 0.0f64;
    let probes = interior_probes + 1;
    for (i, &bp) in curve.breakpoints().iter().enumerate() {
        if bp > cutoff {
            break;
        }
        // On [prev, bp) the estimator is intercept − x with constant F̄_n.
        let intercept = curve.intercepts()[i];
        let k = sample.exceedances_left(bp).count as f64;
        let weight = sqrt_n * (k / n) / s_n;
        for j in 0..=probes {
            let x = prev + (bp - prev) * j as f64 / probes as f64;
            let dev = (intercept - x - e_true(x)).abs();
            sup = sup.max(weight * dev);
        }
        prev = bp;
    }
    // The point x = cutoff itself, with right-continuous statistics.
    let exc = sample.exceedances(cutoff);
    if exc.count > 0 {
        let ehat = exc.sum / exc.count as f64 - cutoff;
        let weight = sqrt_n * (exc.count as f64 / n) / s_n;
        sup = sup.max(weight * (ehat - e_true(cutoff)).abs());
    }
    sup
}

struct Replicate {
    sup: f64,
    pointwise_hits: Vec<bool>,
}

/// Band coverage experiment: per replicate, does ê_n ± d̂_n contain the true
/// e(x) for every x ≤ b̂_n?  Containment is equivalent to the sup statistic
/// staying below the band constant a.
pub fn band_coverage(
    config: &ExperimentConfig,
    probe_xs: &[f64],
) -> Result<CoverageReport, McError> {
    config.validate()?;
    let start = std::time::Instant::now();
    let a = bands::a_of_q(config.beta)?;
    let model = config.model;
    let beta = config.beta;
    let n = config.n;
    let m = config.m;
    let e_at_probes: Vec<f64> = probe_xs
        .iter()
        .map(|&x| model.mrl(x))
        .collect::<Result<_, _>>()?;

    let replicates = config.run(|seed| {
        let sample = model.sample(n, seed);
        let s_n = sample.std_dev_population();
        let cutoff = sample
            .cutoff_bhat(m.unwrap_or_else(|| sample.default_m()))
            .expect("n >= 4 implies a valid default cutoff");
        let e_true = |x: f64| model.mrl(x).expect("finite mean checked");
        let sup = if s_n > 0.0 {
            sup_statistic(&sample, &e_true, cutoff, s_n, SEGMENT_INTERIOR_PROBES)
        } else {
            f64::INFINITY
        };
        let pointwise_hits = probe_xs
            .iter()
            .zip(&e_at_probes)
            .map(|(&x, &e)| match bands::pointwise_interval(&sample, x, beta) {
                Ok(iv) => iv.lower <= e && e <= iv.upper,
                Err(_) => false,
            })
            .collect();
        Replicate { sup, pointwise_hits }
    });

    let reps = replicates.len() as f64;
    let covered = replicates.iter().filter(|r| r.sup <= a).count() as f64;
    let simultaneous_coverage = covered / reps;
    let mc_se = (simultaneous_coverage * (1.0 - simultaneous_coverage) / reps).sqrt();
    let pointwise = probe_xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let hits = replicates.iter().filter(|r| r.pointwise_hits[i]).count() as f64;
            let p = hits / reps;
            PointwiseCoverage { x, coverage: p, mc_se: (p * (1.0 - p) / reps).sqrt() }
        })
        .collect();
    let sup_stats = replicates.iter().map(|r| r.sup).collect();

    Ok(CoverageReport {
        simultaneous_coverage,
        mc_se,
        pointwise,
        sup_stats,
        replicates: config.replicates,
        band_constant: a,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// Per-replicate sup statistics sup_{x ≤ b̂_n} √n|ê_n − e|·F̄_n/S_n.
pub fn sup_statistic_distribution(config: &ExperimentConfig) -> Result<Vec<f64>, McError> {
    config.validate()?;
    let model = config.model;
    let n = config.n;
    let m = config.m;
    model.mrl(0.0)?;
    Ok(config.run(|seed| {
        let sample = model.sample(n, seed);
        let s_n = sample.std_dev_population();
        let cutoff = sample
            .cutoff_bhat(m.unwrap_or_else(|| sample.default_m()))
            .expect("valid cutoff");
        let e_true = |x: f64| model.mrl(x).expect("finite mean checked");
        if s_n > 0.0 {
            sup_statistic(&sample, &e_true, cutoff, s_n, SEGMENT_INTERIOR_PROBES)
        } else {
            f64::INFINITY
        }
    }))
}

/// KS distance between replicate values of the standardized deviation
/// d_n(x) = √n(ê_n(x) − e(x))·F̄_n^{1/2}(x)/S_n(x) and the N(0,1) CDF.
pub fn pointwise_normality(config: &ExperimentConfig, x: f64) -> Result<f64, McError> {
    config.validate()?;
    let model = config.model;
    let e = model.mrl(x)?;
    let n = config.n;
    let mut values: Vec<f64> = config
        .run(|seed| {
            let sample = model.sample(n, seed);
            let sfn = sample.empirical_sf(x);
            let local = sample.residual_variance_at(x).ok()?;
            if local.degenerate || local.value == 0.0 {
                return None;
            }
            let d = (n as f64).sqrt() * (sample.mrl_at(x) - e) * sfn.sqrt()
                / local.value.sqrt();
            Some(d)
        })
        .into_iter()
        .flatten()
        .collect();
    Ok(ks_distance_to_standard_normal(&mut values))
}

/// Median over replicates of |S_n²(x)/F̄_n(x) − σ²(x)/F̄(x)|.
pub fn variance_estimator_consistency(
    config: &ExperimentConfig,
    x: f64,
) -> Result<f64, McError> {
    config.validate()?;
    let model = config.model;
    let target = model.var_limit_process(x)?;
    let n = config.n;
    let mut errors: Vec<f64> = config
        .run(|seed| {
            let sample = model.sample(n, seed);
            let sfn = sample.empirical_sf(x);
            let local = sample.residual_variance_at(x).ok()?;
            if sfn == 0.0 {
                return None;
            }
            Some((local.value / sfn - target).abs())
        })
        .into_iter()
        .flatten()
        .collect();
    errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(errors[errors.len() / 2])
}

/// Two-sided KS distance of a sample against the standard normal CDF.
pub fn ks_distance_to_standard_normal(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len() as f64;
    let mut ks = 0.0f64;
    for (i, &v) in values.iter().enumerate() {
        let f = normal::cdf(v);
        ks = ks.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    ks
}
