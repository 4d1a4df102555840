//! Simulation of the limiting Gaussian process ℤ of the MRL estimator, the
//! survival-weighted process ℤ′ = ℤ·F̄, the variance clock τ² with inverse g,
//! and the time change that turns ℤ′ into standard Brownian motion on [0,1].

use crate::models::{AnalyticModel, ModelError};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProcessError {
    #[error("grid must contain at least 2 points, got {0}")]
    GridTooSmall(usize),
    #[error("x = {x} lies beyond the truncation quantile {limit}")]
    BeyondTruncation { x: f64, limit: f64 },
    #[error("expected a path in the {expected:?} domain, got {found:?}")]
    DomainMismatch { expected: TimeDomain, found: TimeDomain },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Time parametrization of a simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeDomain {
    /// Brownian time t ∈ [0,1].
    UnitInterval,
    /// Age x ∈ [0,∞).
    Age,
    /// Reversed exponential time s = e^{−x} ∈ (0,1].
    ReversedExp,
}

/// A discretized process realization on a strictly increasing grid.
#[derive(Debug, Clone)]
pub struct ProcessPath {
    pub domain: TimeDomain,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl ProcessPath {
    /// Linear interpolation; anchored at (0, 0) below the first grid point
    /// and clamped past the last.
    pub fn interp(&self, t: f64) -> f64 {
        let grid = &self.grid;
        let values = &self.values;
        if t <= grid[0] {
            if grid[0] <= 0.0 {
                return values[0];
            }
            return values[0] * (t.max(0.0) / grid[0]);
        }
        if t >= *grid.last().unwrap() {
            return *values.last().unwrap();
        }
        let i = grid.partition_point(|&g| g <= t);
        let (g0, g1) = (grid[i - 1], grid[i]);
        let w = (t - g0) / (g1 - g0);
        values[i - 1] * (1.0 - w) + values[i] * w
    }

    /// Reparametrize an age-domain path to reversed exponential time
    /// s = e^{−x} (grid reversed to stay increasing).
    pub fn to_reversed_exp(&self) -> Result<ProcessPath, ProcessError> {
        if self.domain != TimeDomain::Age {
            return Err(ProcessError::DomainMismatch {
                expected: TimeDomain::Age,
                found: self.domain,
            });
        }
        let mut grid: Vec<f64> = self.grid.iter().rev().map(|&x| (-x).exp()).collect();
        let values: Vec<f64> = self.values.iter().rev().copied().collect();
        // Guard against duplicate s values from very large x.
        grid.dedup();
        Ok(ProcessPath { domain: TimeDomain::ReversedExp, grid, values })
    }
}

/// A ℤ path together with its survival-weighted companion ℤ′ = ℤ·F̄, both on
/// the same age grid.
#[derive(Debug, Clone)]
pub struct ZRealization {
    pub z: ProcessPath,
    pub z_prime: ProcessPath,
}

/// Standard Brownian bridge 𝕌 on a uniform [0,1] grid: cumulative Gaussian
/// increments pinned linearly at both ends.
pub fn simulate_bridge(grid_size: usize, seed: u64) -> Result<ProcessPath, ProcessError> {
    if grid_size < 2 {
        return Err(ProcessError::GridTooSmall(grid_size));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = grid_size;
    let dt = 1.0 / (m - 1) as f64;
    let sd = dt.sqrt();
    let mut grid = Vec::with_capacity(m);
    let mut bm = Vec::with_capacity(m);
    let mut b = 0.0;
    for i in 0..m {
        grid.push(i as f64 * dt);
        if i > 0 {
            let z: f64 = rng.sample(StandardNormal);
            b += sd * z;
        }
        bm.push(b);
    }
    let b1 = *bm.last().unwrap();
    let values: Vec<f64> = grid.iter().zip(&bm).map(|(&t, &b)| b - t * b1).collect();
    Ok(ProcessPath { domain: TimeDomain::UnitInterval, grid, values })
}

/// Shared precomputation for simulating ℤ paths of one model on one grid.
///
/// ℤ(x) = (1/F̄(x))·{−∫_x^∞ 𝕌(F(t)) dt + e(x)·𝕌(F(x))}, with the improper
/// integral truncated at the 1−10⁻⁴ model quantile and evaluated by the
/// trapezoid rule on a fine grid that contains every requested x.
#[derive(Debug, Clone)]
pub struct ZSimulator {
    bridge_size: usize,
    fine_grid: Vec<f64>,
    f_fine: Vec<f64>,
    /// Index of each requested x inside `fine_grid`.
    x_positions: Vec<usize>,
    x_grid: Vec<f64>,
    e_x: Vec<f64>,
    sf_x: Vec<f64>,
    truncation_limit: f64,
    truncation_sd_bound: f64,
}

/// Quantile level at which the tail of ∫ 𝕌(F) dI is truncated.
pub const TRUNCATION_LEVEL: f64 = 1e-4;

/// Default number of bridge grid points.
pub const DEFAULT_BRIDGE_GRID: usize = 4096;

impl ZSimulator {
    pub fn new(
        model: AnalyticModel,
        x_grid: &[f64],
        bridge_size: usize,
    ) -> Result<Self, ProcessError> {
        if bridge_size < 2 {
            return Err(ProcessError::GridTooSmall(bridge_size));
        }
        let limit = model.quantile(1.0 - TRUNCATION_LEVEL);
        for &x in x_grid {
            if x > limit {
                return Err(ProcessError::BeyondTruncation { x, limit });
            }
        }
        // Fine integration grid: uniform cover of [0, limit] merged with the
        // requested points so tail integrals are read off exactly at each x.
        let n_fine = 4096usize;
        let mut fine: Vec<f64> = (0..=n_fine)
            .map(|i| limit * i as f64 / n_fine as f64)
            .chain(x_grid.iter().copied())
            .collect();
        fine.sort_by(|a, b| a.partial_cmp(b).unwrap());
        fine.dedup();

        let f_fine: Vec<f64> = fine.iter().map(|&t| model.cdf(t)).collect();
        let x_positions: Vec<usize> = x_grid
            .iter()
            .map(|&x| fine.partition_point(|&t| t < x))
            .collect();
        let e_x: Vec<f64> = x_grid
            .iter()
            .map(|&x| model.mrl(x))
            .collect::<Result<_, _>>()?;
        let sf_x: Vec<f64> = x_grid.iter().map(|&x| model.sf(x)).collect();

        // SD of the neglected tail is bounded by ∫_limit^∞ √F̄ dI.
        let truncation_sd_bound = crate::quad::tail_integral(
            |y| (0.5 * model.ln_sf(y)).exp(),
            limit,
            2.0 * model.eta(limit).max(0.01 * model.mean()),
            1e-8,
        );

        Ok(Self {
            bridge_size,
            fine_grid: fine,
            f_fine,
            x_positions,
            x_grid: x_grid.to_vec(),
            e_x,
            sf_x,
            truncation_limit: limit,
            truncation_sd_bound,
        })
    }

    pub fn truncation_limit(&self) -> f64 {
        self.truncation_limit
    }

    /// Upper bound on the standard deviation contributed by the truncated
    /// tail of the integral.
    pub fn truncation_sd_bound(&self) -> f64 {
        self.truncation_sd_bound
    }

    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    /// One ℤ realization (and its ℤ′ companion) from the bridge with the
    /// given seed.
    pub fn simulate(&self, seed: u64) -> ZRealization {
        let bridge = simulate_bridge(self.bridge_size, seed).expect("validated size");
        let u_fine: Vec<f64> = self.f_fine.iter().map(|&p| bridge_at(&bridge, p)).collect();

        // Cumulative trapezoid of 𝕌(F(t)) over the fine grid.
        let mut cum = Vec::with_capacity(self.fine_grid.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for j in 1..self.fine_grid.len() {
            acc += 0.5
                * (u_fine[j] + u_fine[j - 1])
                * (self.fine_grid[j] - self.fine_grid[j - 1]);
            cum.push(acc);
        }
        let total = *cum.last().unwrap();

        let mut z = Vec::with_capacity(self.x_grid.len());
        let mut z_prime = Vec::with_capacity(self.x_grid.len());
        for (i, &pos) in self.x_positions.iter().enumerate() {
            let tail = total - cum[pos];
            let u_at_x = u_fine[pos];
            let zp = -tail + self.e_x[i] * u_at_x;
            z_prime.push(zp);
            z.push(zp / self.sf_x[i]);
        }
        ZRealization {
            z: ProcessPath {
                domain: TimeDomain::Age,
                grid: self.x_grid.clone(),
                values: z,
            },
            z_prime: ProcessPath {
                domain: TimeDomain::Age,
                grid: self.x_grid.clone(),
                values: z_prime,
            },
        }
    }
}

#[inline]
fn bridge_at(bridge: &ProcessPath, p: f64) -> f64 {
    let m = bridge.grid.len();
    let pos = p.clamp(0.0, 1.0) * (m - 1) as f64;
    let i = (pos.floor() as usize).min(m - 2);
    let w = pos - i as f64;
    bridge.values[i] * (1.0 - w) + bridge.values[i + 1] * w
}

/// The variance clock τ²(s) = F̄(−log s)·σ²(−log s) of ℤ″(s) = ℤ′(−log s),
/// with its inverse g evaluated by monotone bisection.
pub struct VarianceClock {
    model: AnalyticModel,
    s_grid: Vec<f64>,
    tau2: Vec<f64>,
    sigma2: f64,
}

impl VarianceClock {
    /// Tabulates τ² on a log-spaced s-grid down to s = 10⁻⁶.
    pub fn new(model: AnalyticModel, grid_size: usize) -> Result<Self, ProcessError> {
        if grid_size < 2 {
            return Err(ProcessError::GridTooSmall(grid_size));
        }
        let sigma2 = model.variance()?;
        let lo: f64 = 1e-6;
        let s_grid: Vec<f64> = (0..grid_size)
            .map(|i| {
                let frac = i as f64 / (grid_size - 1) as f64;
                lo.powf(1.0 - frac)
            })
            .collect();
        let tau2 = s_grid
            .iter()
            .map(|&s| tau_squared_of(&model, s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { model, s_grid, tau2, sigma2 })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s_grid
    }

    pub fn tau2_values(&self) -> &[f64] {
        &self.tau2
    }

    pub fn tau_squared(&self, s: f64) -> f64 {
        tau_squared_of(&self.model, s).expect("variance checked at construction")
    }

    /// g(t): the s with τ²(s) = t, for t ∈ [0, σ²].
    pub fn g(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= self.sigma2 {
            return 1.0;
        }
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.tau_squared(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-10 * hi.max(1e-12) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

fn tau_squared_of(model: &AnalyticModel, s: f64) -> Result<f64, ProcessError> {
    if s <= 0.0 {
        return Ok(0.0);
    }
    if s >= 1.0 {
        return Ok(model.variance()?);
    }
    let x = -s.ln();
    Ok(model.sf(x) * model.residual_variance(x)?)
}

/// W(t) = σ⁻¹·ℤ″(g(σ²t)) on a uniform t-grid; Theorem-level claim: W is
/// standard Brownian motion on [0,1].
pub fn transform_to_w(
    z_double_prime: &ProcessPath,
    clock: &VarianceClock,
    t_points: usize,
) -> Result<ProcessPath, ProcessError> {
    if z_double_prime.domain != TimeDomain::ReversedExp {
        return Err(ProcessError::DomainMismatch {
            expected: TimeDomain::ReversedExp,
            found: z_double_prime.domain,
        });
    }
    if t_points < 2 {
        return Err(ProcessError::GridTooSmall(t_points));
    }
    let sigma = clock.sigma2().sqrt();
    let mut grid = Vec::with_capacity(t_points);
    let mut values = Vec::with_capacity(t_points);
    for i in 0..t_points {
        let t = i as f64 / (t_points - 1) as f64;
        grid.push(t);
        if i == 0 {
            values.push(0.0);
        } else {
            let s = clock.g(clock.sigma2() * t);
            values.push(z_double_prime.interp(s) / sigma);
        }
    }
    Ok(ProcessPath { domain: TimeDomain::UnitInterval, grid, values })
}
