//! Exact empirical quantities: survival function, MRL estimator ê_n, and
//! residual variance, all driven by strict-exceedance counts over a sorted
//! sample with precomputed suffix sums.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EmpiricalError {
    #[error("sample must contain at least one observation")]
    Empty,
    #[error("observation {value} at index {index} is negative or non-finite")]
    InvalidObservation { index: usize, value: f64 },
    #[error("no exceedances beyond x = {x}")]
    NoExceedances { x: f64 },
    #[error("cutoff order m = {m} must satisfy 1 <= m < n = {n}")]
    InvalidCutoffOrder { m: usize, n: usize },
}

/// Validated ascending survival times with O(1) suffix statistics.
///
/// Queries locate the first strict exceedance by binary search, so every
/// empirical quantity costs O(log n) after O(n) construction.
#[derive(Debug, Clone)]
pub struct SortedSample {
    values: Vec<f64>,
    // suffix_sum[i] = Σ_{j >= i} values[j]; one extra 0 entry at the end.
    suffix_sum: Vec<f64>,
    suffix_sq: Vec<f64>,
}

/// Count, sum, and sum of squares of the observations strictly above a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExceedanceSummary {
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

/// Residual variance of the exceedances, with a flag for the single
/// observation case where the divisor-k variance is identically zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualVariance {
    pub value: f64,
    pub degenerate: bool,
}

impl SortedSample {
    /// Sorts and validates raw observations: finite, nonnegative, nonempty.
    pub fn new(mut values: Vec<f64>) -> Result<Self, EmpiricalError> {
        if values.is_empty() {
            return Err(EmpiricalError::Empty);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(EmpiricalError::InvalidObservation { index, value });
            }
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = values.len();
        let mut suffix_sum = vec![0.0; n + 1];
        let mut suffix_sq = vec![0.0; n + 1];
        for i in (0..n).rev() {
            suffix_sum[i] = suffix_sum[i + 1] + values[i];
            suffix_sq[i] = suffix_sq[i + 1] + values[i] * values[i];
        }
        Ok(Self { values, suffix_sum, suffix_sq })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest observation X_nn.
    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn mean(&self) -> f64 {
        self.suffix_sum[0] / self.n() as f64
    }

    /// All-data standard deviation with divisor n (the S_n of the band
    /// construction; consistency for σ is all that is required of it).
    pub fn std_dev_population(&self) -> f64 {
        let n = self.n() as f64;
        let mean = self.mean();
        let var = (self.suffix_sq[0] / n - mean * mean).max(0.0);
        var.sqrt()
    }

    /// First index whose value strictly exceeds `x`.
    #[inline]
    fn exceed_index(&self, x: f64) -> usize {
        self.values.partition_point(|&v| v <= x)
    }

    /// First index whose value is >= `x` (left-limit queries).
    #[inline]
    fn geq_index(&self, x: f64) -> usize {
        self.values.partition_point(|&v| v < x)
    }

    fn summary_from(&self, idx: usize) -> ExceedanceSummary {
        ExceedanceSummary {
            count: self.n() - idx,
            sum: self.suffix_sum[idx],
            sum_sq: self.suffix_sq[idx],
        }
    }

    /// Exceedance statistics at `x` (strict: X_j > x).
    pub fn exceedances(&self, x: f64) -> ExceedanceSummary {
        self.summary_from(self.exceed_index(x))
    }

    /// Exceedance statistics for the left limit x−: X_j >= x.
    pub fn exceedances_left(&self, x: f64) -> ExceedanceSummary {
        self.summary_from(self.geq_index(x))
    }

    /// Empirical survival function F̄_n(x) = #{X_j > x}/n (right-continuous).
    pub fn empirical_sf(&self, x: f64) -> f64 {
        self.exceedances(x).count as f64 / self.n() as f64
    }

    /// Left limit F̄_n(x−) = #{X_j >= x}/n.
    pub fn empirical_sf_left(&self, x: f64) -> f64 {
        self.exceedances_left(x).count as f64 / self.n() as f64
    }

    /// MRL estimator ê_n(x): mean of the exceedances less x, and exactly 0
    /// for x at or beyond the sample maximum.
    pub fn mrl_at(&self, x: f64) -> f64 {
        let s = self.exceedances(x);
        if s.count == 0 {
            0.0
        } else {
            s.sum / s.count as f64 - x
        }
    }

    /// Left limit of ê_n at x.
    pub fn mrl_left(&self, x: f64) -> f64 {
        let s = self.exceedances_left(x);
        if s.count == 0 {
            0.0
        } else {
            s.sum / s.count as f64 - x
        }
    }

    /// (1/n)·Σ_{X_j > x}(X_j − x), i.e. ∫_x^∞ F̄_n dI.
    pub fn tail_integral(&self, x: f64) -> f64 {
        let s = self.exceedances(x);
        (s.sum - s.count as f64 * x) / self.n() as f64
    }

    /// Divisor-k variance S_n²(x) of the observations exceeding x.
    pub fn residual_variance_at(&self, x: f64) -> Result<ResidualVariance, EmpiricalError> {
        let s = self.exceedances(x);
        match s.count {
            0 => Err(EmpiricalError::NoExceedances { x }),
            1 => Ok(ResidualVariance { value: 0.0, degenerate: true }),
            k => {
                let k = k as f64;
                let mean = s.sum / k;
                let value = (s.sum_sq / k - mean * mean).max(0.0);
                Ok(ResidualVariance { value, degenerate: false })
            }
        }
    }

    /// The (n−m)-th order statistic b̂_n used as the right band cutoff.
    pub fn cutoff_bhat(&self, m: usize) -> Result<f64, EmpiricalError> {
        let n = self.n();
        if m == 0 || m >= n {
            return Err(EmpiricalError::InvalidCutoffOrder { m, n });
        }
        Ok(self.values[n - m - 1])
    }

    /// Default cutoff order m = floor(sqrt(n)).
    pub fn default_m(&self) -> usize {
        (self.n() as f64).sqrt().floor() as usize
    }

    /// Exact piecewise-linear representation of ê_n.
    pub fn mrl_curve(&self) -> MrlCurve {
        let mut breakpoints = Vec::new();
        let mut intercepts = Vec::new();
        let n = self.n();
        let mut idx = 0;
        // Interval starting at index `idx` has exceedance set values[idx..].
        while idx < n {
            let count = (n - idx) as f64;
            intercepts.push(self.suffix_sum[idx] / count);
            let bp = self.values[idx];
            breakpoints.push(bp);
            while idx < n && self.values[idx] == bp {
                idx += 1;
            }
        }
        MrlCurve { breakpoints, intercepts }
    }
}

/// ê_n as explicit segments: on the i-th inter-breakpoint interval the
/// estimator is `intercepts[i] − x` (slope exactly −1), and 0 past the
/// largest breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct MrlCurve {
    breakpoints: Vec<f64>,
    intercepts: Vec<f64>,
}

impl MrlCurve {
    /// Distinct order statistics where ê_n jumps.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Per-interval intercepts; interval i runs from the previous breakpoint
    /// (or 0) up to `breakpoints()[i]`.
    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    /// End of the support: the sample maximum.
    pub fn support_end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        // First interval whose right end lies beyond x.
        let i = self.breakpoints.partition_point(|&b| b <= x);
        if i == self.breakpoints.len() {
            0.0
        } else {
            self.intercepts[i] - x
        }
    }
}
