//! Band constant Q(a) and its inverse, simultaneous confidence bands,
//! pointwise intervals, and two-point confidence ellipses.

use crate::empirical::{EmpiricalError, SortedSample};
use crate::normal;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BandError {
    #[error("confidence level must be in (0,1), got {0}")]
    InvalidLevel(f64),
    #[error("band construction requires n >= 4, got n = {0}")]
    SampleTooSmall(usize),
    #[error("degenerate sample: all observations equal")]
    DegenerateSample,
    #[error("need at least {needed} exceedances beyond x = {x}, found {found}")]
    TooFewExceedances { x: f64, needed: usize, found: usize },
    #[error("x ({x}) must be strictly less than y ({y})")]
    UnorderedPair { x: f64, y: f64 },
    #[error(transparent)]
    Empirical(#[from] EmpiricalError),
}

/// Number of exceedances below which the pointwise normal approximation is
/// flagged as unreliable.
pub const SMALL_K_THRESHOLD: usize = 30;

/// Q(a) = P(sup_{[0,1]} |W| < a) for standard Brownian motion W, by the
/// alternating series 1 − 4{Φ̄(a) − Φ̄(3a) + Φ̄(5a) − ⋯}.
pub fn q_of_a(a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    let mut k = 1.0;
    loop {
        let term = normal::sf(k * a);
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
        k += 2.0;
    }
    (1.0 - 4.0 * sum).clamp(0.0, 1.0)
}

/// Inverse of `q_of_a`: the a with Q(a) = beta, by bisection.
pub fn a_of_q(beta: f64) -> Result<f64, BandError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(BandError::InvalidLevel(beta));
    }
    let mut lo = 1e-8;
    let mut hi = 10.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let q = q_of_a(mid);
        if (q - beta).abs() < 1e-9 && hi - lo < 1e-9 {
            return Ok(mid);
        }
        if q < beta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Which one-sided limit a band grid row represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSide {
    Left,
    Right,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandPoint {
    pub x: f64,
    pub side: GridSide,
    /// ê_n(x) (one-sided value matching `side`).
    pub center: f64,
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
    /// F̄_n(x), one-sided.
    pub sf: f64,
    /// The diagonal reference line X̄ − x.
    pub reference: f64,
}

/// Simultaneous confidence band ê_n ± a·S_n/(√n·F̄_n) on [0, b̂_n].
#[derive(Debug, Clone, Serialize)]
pub struct BandResult {
    pub grid: Vec<BandPoint>,
    pub cutoff: f64,
    pub band_constant: f64,
    pub beta: f64,
    /// All-data standard deviation, divisor n.
    pub s_n: f64,
    pub m: usize,
    pub n: usize,
    pub sample_mean: f64,
}

/// ê_n(x) ± z·S_n(x)/√(n·F̄_n(x)) at a single x.
#[derive(Debug, Clone, Serialize)]
pub struct PointwiseInterval {
    pub x: f64,
    pub k: usize,
    pub center: f64,
    pub local_sd: f64,
    pub standard_error: f64,
    pub beta: f64,
    pub lower: f64,
    pub upper: f64,
    pub small_k_warning: bool,
}

/// Asymptotic confidence ellipse for (e(x), e(y)), x < y, as axis data.
#[derive(Debug, Clone, Serialize)]
pub struct EllipseResult {
    pub x: f64,
    pub y: f64,
    pub center: (f64, f64),
    pub correlation: f64,
    /// Set when the plug-in correlation ratio exceeded 1 and was clamped.
    pub correlation_clamped: bool,
    pub se_x: f64,
    pub se_y: f64,
    pub beta: f64,
    /// √(χ²₂ quantile at beta); ellipse radius in standardized coordinates.
    pub chi2_radius: f64,
    /// Semi-axis lengths in data coordinates.
    pub semi_axes: (f64, f64),
    /// Rotation angle of the major axis, radians.
    pub angle: f64,
}

pub fn simultaneous_band(
    sample: &SortedSample,
    beta: f64,
    m: Option<usize>,
) -> Result<BandResult, BandError> {
    let n = sample.n();
    if n < 4 {
        return Err(BandError::SampleTooSmall(n));
    }
    let m = m.unwrap_or_else(|| sample.default_m());
    let cutoff = sample.cutoff_bhat(m)?;
    let s_n = sample.std_dev_population();
    if s_n == 0.0 {
        return Err(BandError::DegenerateSample);
    }
    let a = a_of_q(beta)?;
    let sqrt_n = (n as f64).sqrt();
    let mean = sample.mean();

    let mut grid = Vec::new();
    let mut push = |x: f64, side: GridSide| {
        let (center, sf) = match side {
            GridSide::Right => (sample.mrl_at(x), sample.empirical_sf(x)),
            GridSide::Left => (sample.mrl_left(x), sample.empirical_sf_left(x)),
        };
        if sf == 0.0 {
            return;
        }
        let half_width = a * s_n / (sqrt_n * sf);
        grid.push(BandPoint {
            x,
            side,
            center,
            half_width,
            lower: center - half_width,
            upper: center + half_width,
            sf,
            reference: mean - x,
        });
    };

    push(0.0, GridSide::Right);
    let curve = sample.mrl_curve();
    for &bp in curve.breakpoints() {
        if bp > cutoff {
            break;
        }
        if bp > 0.0 {
            push(bp, GridSide::Left);
            push(bp, GridSide::Right);
        }
    }

    Ok(BandResult {
        grid,
        cutoff,
        band_constant: a,
        beta,
        s_n,
        m,
        n,
        sample_mean: mean,
    })
}

pub fn pointwise_interval(
    sample: &SortedSample,
    x: f64,
    beta: f64,
) -> Result<PointwiseInterval, BandError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(BandError::InvalidLevel(beta));
    }
    let summary = sample.exceedances(x);
    if summary.count < 2 {
        return Err(BandError::TooFewExceedances { x, needed: 2, found: summary.count });
    }
    let k = summary.count;
    let center = sample.mrl_at(x);
    let local_sd = sample.residual_variance_at(x)?.value.sqrt();
    // S_n(x)/√(n F̄_n(x)) = S_n(x)/√k.
    let standard_error = local_sd / (k as f64).sqrt();
    let z = normal::quantile(0.5 * (1.0 + beta));
    let half = z * standard_error;
    Ok(PointwiseInterval {
        x,
        k,
        center,
        local_sd,
        standard_error,
        beta,
        lower: center - half,
        upper: center + half,
        small_k_warning: k < SMALL_K_THRESHOLD,
    })
}

pub fn joint_ellipse(
    sample: &SortedSample,
    x: f64,
    y: f64,
    beta: f64,
) -> Result<EllipseResult, BandError> {
    if x >= y {
        return Err(BandError::UnorderedPair { x, y });
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(BandError::InvalidLevel(beta));
    }
    let ky = sample.exceedances(y).count;
    if ky < 2 {
        return Err(BandError::TooFewExceedances { x: y, needed: 2, found: ky });
    }
    let iv_x = pointwise_interval(sample, x, beta)?;
    let iv_y = pointwise_interval(sample, y, beta)?;

    let num = sample.empirical_sf(y) * sample.residual_variance_at(y)?.value;
    let den = sample.empirical_sf(x) * sample.residual_variance_at(x)?.value;
    let ratio = num / den;
    let (rho2, clamped) = if ratio > 1.0 { (1.0, true) } else { (ratio, false) };
    let rho = rho2.sqrt();

    // χ²₂ quantile has the closed form −2 ln(1−β).
    let chi2 = -2.0 * (1.0 - beta).ln();
    let chi2_radius = chi2.sqrt();

    // Eigen-decomposition of the 2x2 covariance of (ê_n(x), ê_n(y)).
    let sxx = iv_x.standard_error * iv_x.standard_error;
    let syy = iv_y.standard_error * iv_y.standard_error;
    let sxy = rho * iv_x.standard_error * iv_y.standard_error;
    let tr = sxx + syy;
    let disc = ((sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy).sqrt();
    let l1 = 0.5 * (tr + disc);
    let l2 = (0.5 * (tr - disc)).max(0.0);
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);

    Ok(EllipseResult {
        x,
        y,
        center: (iv_x.center, iv_y.center),
        correlation: rho,
        correlation_clamped: clamped,
        se_x: iv_x.standard_error,
        se_y: iv_y.standard_error,
        beta,
        chi2_radius,
        semi_axes: (chi2_radius * l1.sqrt(), chi2_radius * l2.sqrt()),
        angle,
    })
}
