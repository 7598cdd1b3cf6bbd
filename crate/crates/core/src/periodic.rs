//! Even, π-periodic functions on a uniform grid.
//!
//! Every function in the model (pair density, detection function, the
//! autocorrelation `f`, the residual `δ`) lives on the grid
//! `x_i = -π/2 + iπ/N`, `i = 0..N`, with `N` even so that `x = 0` is the
//! sample at index `N/2` and `-x_i` is the sample at index `(N - i) mod N`.
//!
//! Integrals over one period use the rectangle rule, which for periodic
//! integrands coincides with the trapezoid rule and is exact for cosine
//! series with fewer than `N/2` harmonics.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Default number of grid points per period.
pub const DEFAULT_GRID: usize = 2048;

/// Environment variable overriding [`DEFAULT_GRID`].
pub const GRID_ENV: &str = "LHVBELL_GRID_N";

/// Smallest grid accepted anywhere.
pub const MIN_GRID: usize = 8;

/// Grid size from `LHVBELL_GRID_N`, falling back to [`DEFAULT_GRID`].
pub fn grid_size_from_env() -> Result<usize> {
    match std::env::var(GRID_ENV) {
        Ok(raw) => {
            let n: usize = raw
                .trim()
                .parse()
                .map_err(|_| Error::InvalidGrid(format!("{GRID_ENV}={raw:?} is not an integer")))?;
            check_grid(n)?;
            Ok(n)
        }
        Err(_) => Ok(DEFAULT_GRID),
    }
}

pub(crate) fn check_grid(n: usize) -> Result<()> {
    if n < MIN_GRID || !n.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "grid size must be even and at least {MIN_GRID}, got {n}"
        )));
    }
    Ok(())
}

/// Grid abscissa `x_i = -π/2 + iπ/N`.
#[inline]
pub fn grid_x(n: usize, i: usize) -> f64 {
    -PI / 2.0 + i as f64 * PI / n as f64
}

/// Reduce an angle into `[-π/2, π/2)`.
#[inline]
pub fn wrap_half_period(x: f64) -> f64 {
    let r = (x + PI / 2.0).rem_euclid(PI);
    r - PI / 2.0
}

/// A real, π-periodic function sampled on the uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicFn {
    samples: Vec<f64>,
}

impl PeriodicFn {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        check_grid(samples.len())?;
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(format!("sample {i} is not finite")));
        }
        Ok(Self { samples })
    }

    /// Point-sample `f` at the grid abscissae.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_grid(n)?;
        Self::new((0..n).map(|i| f(grid_x(n, i))).collect())
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::from_fn(n, |_| value)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Grid spacing `π/N`.
    #[inline]
    pub fn step(&self) -> f64 {
        PI / self.len() as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        grid_x(self.len(), i)
    }

    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Index of the sample at `-x_i`.
    #[inline]
    pub fn mirror(&self, i: usize) -> usize {
        (self.len() - i) % self.len()
    }

    /// Index of `x = 0`.
    #[inline]
    pub fn zero_index(&self) -> usize {
        self.len() / 2
    }

    /// Largest `|f(x_i) - f(-x_i)|` over the grid.
    pub fn evenness_defect(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.samples[i] - self.samples[self.mirror(i)]).abs())
            .fold(0.0, f64::max)
    }

    pub fn ensure_even(&self, tol: f64) -> Result<()> {
        let defect = self.evenness_defect();
        if defect > tol {
            return Err(Error::InvalidFunction(format!(
                "function is not even: max |f(x) - f(-x)| = {defect:e}"
            )));
        }
        Ok(())
    }

    /// Largest increase of `f` along `x = 0 → π/2`; zero for a function
    /// non-increasing in `|x|` (given evenness).
    pub fn monotonicity_defect(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in n / 2..n {
            let next = (i + 1) % n;
            worst = worst.max(self.samples[next] - self.samples[i]);
        }
        worst
    }

    /// Linear interpolation at an arbitrary angle.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.len();
        let t = (x + PI / 2.0).rem_euclid(PI) / self.step();
        let i = (t.floor() as usize).min(n - 1);
        let frac = t - i as f64;
        let a = self.samples[i];
        let b = self.samples[(i + 1) % n];
        a + (b - a) * frac
    }

    /// `∫ f dx` over one period.
    pub fn integrate(&self) -> f64 {
        self.step() * self.samples.iter().sum::<f64>()
    }

    /// Period average `(1/π) ∫ f dx`.
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * factor).collect(),
        }
    }

    /// Cosine moments `M_k = ∫ f(x) cos(2kx) dx` for `k = 0..=N/2`.
    pub fn cosine_moments(&self) -> Vec<f64> {
        CosineTransform::new(self.len()).moments(&self.samples)
    }

    /// The same function shifted by half a period, `x ↦ f(x + π/2)`.
    pub fn shifted_half_period(&self) -> Self {
        let n = self.len();
        Self {
            samples: (0..n).map(|i| self.samples[(i + n / 2) % n]).collect(),
        }
    }
}

/// FFT-backed cosine analysis and synthesis on the `N`-point grid.
///
/// `moments` returns `h Σ_j s_j cos(2k x_j)` for `k = 0..=N/2`;
/// `synthesize` evaluates `Σ_k c_k cos(2k x_j)` at every grid point.
pub struct CosineTransform {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl CosineTransform {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn moments(&self, samples: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n / 2 + 1];
        self.moments_into(samples, &mut out);
        out
    }

    pub fn moments_into(&self, samples: &[f64], out: &mut [f64]) {
        assert_eq!(samples.len(), self.n);
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        // cos(2k x_j) = (-1)^k cos(2π k j / N)
        let h = PI / self.n as f64;
        for (k, slot) in out.iter_mut().enumerate().take(self.n / 2 + 1) {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            *slot = h * sign * buf[k].re;
        }
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.synthesize_into(coeffs, &mut out);
        out
    }

    pub fn synthesize_into(&self, coeffs: &[f64], out: &mut [f64]) {
        let n = self.n;
        assert!(coeffs.len() <= n / 2 + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for (k, &c) in coeffs.iter().enumerate() {
            let signed = if k % 2 == 0 { c } else { -c };
            if k == 0 || k == n / 2 {
                buf[k].re += signed;
            } else {
                buf[k].re += 0.5 * signed;
                buf[n - k].re += 0.5 * signed;
            }
        }
        self.inverse.process(&mut buf);
        for (o, z) in out.iter_mut().zip(&buf) {
            *o = z.re;
        }
    }
}

/// Even cosine series `Σ_k A_k cos(2kx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineSeries {
    pub coeffs: Vec<f64>,
}

impl CosineSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn k_max(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| a * (2.0 * k as f64 * x).cos())
            .sum()
    }
}

/// Rectangle-rule integral over one period.
pub fn integrate_periodic(f: &PeriodicFn) -> f64 {
    f.integrate()
}

/// Cosine coefficients `A_0 = (1/π)∫f`, `A_k = (2/π)∫f cos 2kx`.
pub fn to_series(f: &PeriodicFn, k_max: usize) -> Result<CosineSeries> {
    if k_max > f.len() / 4 {
        return Err(Error::InsufficientResolution(format!(
            "k_max = {k_max} exceeds N/4 = {} for a {}-point grid",
            f.len() / 4,
            f.len()
        )));
    }
    let moments = f.cosine_moments();
    let coeffs = (0..=k_max)
        .map(|k| {
            let scale = if k == 0 { 1.0 / PI } else { 2.0 / PI };
            scale * moments[k]
        })
        .collect();
    Ok(CosineSeries::new(coeffs))
}

/// Sample a cosine series on an `n`-point grid.
pub fn eval_series(series: &CosineSeries, n: usize) -> Result<PeriodicFn> {
    check_grid(n)?;
    if series.k_max() > n / 2 {
        return Err(Error::InsufficientResolution(format!(
            "series with k_max = {} cannot be represented on {n} points",
            series.k_max()
        )));
    }
    PeriodicFn::new(CosineTransform::new(n).synthesize(&series.coeffs))
}

/// Autocorrelation `f(y) = ∫ P(x + y/2) P(x - y/2) dx`, evaluated on the grid.
///
/// Uses the equivalent form `f(y) = ∫ P(u) P(u - y) du`, so that every
/// argument stays on the grid. The result is symmetrized by index so that
/// `f(y) = f(-y)` holds exactly.
pub fn autocorrelate(p: &PeriodicFn) -> PeriodicFn {
    let n = p.len();
    let h = p.step();
    let s = p.samples();
    let mut out = vec![0.0; n];
    // m = N/2 is y = 0; compute y ≥ 0 and mirror.
    for m in n / 2..=n {
        let m_idx = m % n;
        let mut acc = 0.0;
        for (i, &pi) in s.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            let j = (i + n + n / 2 - m_idx) % n;
            acc += pi * s[j];
        }
        out[m_idx] = h * acc;
    }
    for m in 1..n / 2 {
        out[m] = out[n - m];
    }
    PeriodicFn { samples: out }
}
