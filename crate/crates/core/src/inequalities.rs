//! Data-side statistics: deviation of measured coincidence rates from the
//! best cosine fit, the visibility estimators, the two-channel
//! correlation, and the verdict against the model bound.

use std::f64::consts::{PI, SQRT_2};

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::optimal::{deviation_d, deviation_d_pair, epsilon_solve, v_max, v_max_pair, Branch};

/// Relative tolerance when matching an angle to the `jπ/n` grid.
const ANGLE_TOL: f64 = 1e-6;

/// Largest number of angles considered when inferring the grid from data.
const MAX_ANGLES: usize = 4096;

/// Coincidence rates at `φ_j = jπ/n`, `j = 0..n` (`φ = 0` standing in for
/// `φ = π`).
#[derive(Debug, Clone, PartialEq)]
pub struct RateSeries {
    rates: Vec<f64>,
    sigma: Option<Vec<f64>>,
    /// Index of the measured value each entry was copied from.
    source: Vec<usize>,
}

impl RateSeries {
    pub fn new(rates: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        let source = (0..rates.len()).collect();
        Self::build(rates, sigma, source)
    }

    /// Fill `R(φ_j) = R(π - φ_j)` from the `n/2 + 1` rates at
    /// `φ = 0, π/n, …` up to `π/2`.
    pub fn from_half(n: usize, half: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        let m = n / 2 + 1;
        if half.len() != m {
            return Err(Error::InvalidRates(format!(
                "{n} angles need {m} rates up to π/2, got {}",
                half.len()
            )));
        }
        if let Some(s) = &sigma {
            if s.len() != m {
                return Err(Error::ShapeMismatch(format!("{} uncertainties for {m} rates", s.len())));
            }
        }
        let source: Vec<usize> = (0..n).map(|j| j.min(n - j)).collect();
        let rates = source.iter().map(|&s| half[s]).collect();
        let sigma = sigma.map(|s| source.iter().map(|&i| s[i]).collect());
        let mut series = Self::build(rates, sigma, (0..n).collect())?;
        series.source = source;
        Ok(series)
    }

    fn build(rates: Vec<f64>, sigma: Option<Vec<f64>>, source: Vec<usize>) -> Result<Self> {
        if rates.len() < 3 {
            return Err(Error::InvalidRates(format!("need at least 3 angles, got {}", rates.len())));
        }
        if let Some(bad) = rates.iter().find(|r| !r.is_finite() || **r < 0.0) {
            return Err(Error::InvalidRates(format!("rate {bad} is negative or not finite")));
        }
        if rates.iter().all(|r| *r == 0.0) {
            return Err(Error::EmptyData);
        }
        if let Some(s) = &sigma {
            if s.len() != rates.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} uncertainties for {} rates",
                    s.len(),
                    rates.len()
                )));
            }
            if let Some(bad) = s.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::InvalidRates(format!("uncertainty {bad} is negative or not finite")));
            }
        }
        Ok(Self { rates, sigma, source })
    }

    /// Build from `(angle, rate, uncertainty)` rows at arbitrary multiples
    /// of `π/n`, inferring `n` and completing by symmetry if only the
    /// angles up to `π/2` are present.
    pub fn from_angles(points: &[(f64, f64, Option<f64>)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyData);
        }
        let wrapped: Vec<f64> = points.iter().map(|p| p.0.rem_euclid(PI)).collect();
        let on_grid = |n: usize| {
            wrapped.iter().all(|a| {
                let t = a * n as f64 / PI;
                (t - t.round()).abs() < ANGLE_TOL
            })
        };
        let n = (3..=MAX_ANGLES)
            .find(|&n| on_grid(n))
            .ok_or_else(|| Error::InvalidRates("angles are not multiples of π/n for any n".into()))?;
        let mut slots: Vec<Option<usize>> = vec![None; n];
        for (row, a) in wrapped.iter().enumerate() {
            let j = ((a * n as f64 / PI).round() as usize) % n;
            if slots[j].replace(row).is_some() {
                return Err(Error::InvalidRates(format!("angle {} appears twice", points[row].0)));
            }
        }
        let has_sigma = points.iter().all(|p| p.2.is_some());
        if !has_sigma && points.iter().any(|p| p.2.is_some()) {
            return Err(Error::ShapeMismatch("uncertainties given for some rows only".into()));
        }
        let pick = |idx: &[usize]| -> Result<(Vec<f64>, Option<Vec<f64>>)> {
            let mut r = Vec::with_capacity(idx.len());
            let mut s = Vec::with_capacity(idx.len());
            for &j in idx {
                let row = slots[j].ok_or(Error::MissingAngle(j as f64 * PI / n as f64))?;
                r.push(points[row].1);
                s.push(points[row].2.unwrap_or(0.0));
            }
            Ok((r, has_sigma.then_some(s)))
        };
        if slots.iter().all(Option::is_some) {
            let idx: Vec<usize> = (0..n).collect();
            let (r, s) = pick(&idx)?;
            return Self::new(r, s);
        }
        let idx: Vec<usize> = (0..=n / 2).collect();
        if (n / 2 + 1..n).any(|j| slots[j].is_some()) {
            let missing = idx.iter().find(|&&j| slots[j].is_none()).copied().unwrap_or(0);
            return Err(Error::MissingAngle(missing as f64 * PI / n as f64));
        }
        let (r, s) = pick(&idx)?;
        Self::from_half(n, r, s)
    }

    pub fn n(&self) -> usize {
        self.rates.len()
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn uncertainties(&self) -> Option<&[f64]> {
        self.sigma.as_deref()
    }

    pub fn angle(&self, j: usize) -> f64 {
        j as f64 * PI / self.n() as f64
    }

    /// Grid index of `angle`, if it is a multiple of `π/n`.
    pub fn index_of(&self, angle: f64) -> Result<usize> {
        let n = self.n();
        let t = angle.rem_euclid(PI) * n as f64 / PI;
        let r = t.round();
        if (t - r).abs() > ANGLE_TOL {
            return Err(Error::MissingAngle(angle));
        }
        Ok(r as usize % n)
    }

    pub fn rate_at(&self, angle: f64) -> Result<f64> {
        Ok(self.rates[self.index_of(angle)?])
    }

    pub fn with_uncertainties(mut self, sigma: Vec<f64>) -> Result<Self> {
        let source = std::mem::take(&mut self.source);
        let mut s = Self::build(self.rates, Some(sigma), source.clone())?;
        s.source = source;
        Ok(s)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rates: self.rates.iter().map(|r| r * c).collect(),
            sigma: self.sigma.as_ref().map(|s| s.iter().map(|v| v * c.abs()).collect()),
            source: self.source.clone(),
        }
    }

    /// Subtract a flat accidental-coincidence rate from every angle.
    pub fn subtract_flat(&self, accidental: f64) -> Result<Self> {
        if !(accidental >= 0.0 && accidental.is_finite()) {
            return Err(Error::InvalidRates(format!("accidental rate {accidental} must be non-negative")));
        }
        let rates: Vec<f64> = self.rates.iter().map(|r| r - accidental).collect();
        if let Some(r) = rates.iter().find(|r| **r < 0.0) {
            return Err(Error::InvalidRates(format!(
                "subtracting {accidental} leaves a negative rate ({r})"
            )));
        }
        let mut s = Self::build(rates, self.sigma.clone(), self.source.clone())?;
        s.source = self.source.clone();
        Ok(s)
    }

    fn total(&self) -> f64 {
        self.rates.iter().sum()
    }

    fn normalized(&self) -> Vec<f64> {
        let mean = self.total() / self.n() as f64;
        self.rates.iter().map(|r| r / mean).collect()
    }

    fn cos2(&self, j: usize) -> f64 {
        (2.0 * self.angle(j)).cos()
    }
}

/// Fitted visibility `2 Σ R cos 2φ_j / Σ R`.
pub fn v_fit(rates: &RateSeries) -> Result<f64> {
    let total = rates.total();
    if total == 0.0 {
        return Err(Error::EmptyData);
    }
    let s: f64 = rates.rates.iter().enumerate().map(|(j, r)| r * rates.cos2(j)).sum();
    Ok(2.0 * s / total)
}

/// RMS deviation of the normalized rates from `1 + V cos 2φ`.
pub fn delta_exp(rates: &RateSeries, v: f64) -> Result<f64> {
    Ok(residuals(rates, v)?.1)
}

fn residuals(rates: &RateSeries, v: f64) -> Result<(Vec<f64>, f64)> {
    if rates.total() == 0.0 {
        return Err(Error::EmptyData);
    }
    let e: Vec<f64> = rates
        .normalized()
        .iter()
        .enumerate()
        .map(|(j, r)| r - 1.0 - v * rates.cos2(j))
        .collect();
    let d = (e.iter().map(|x| x * x).sum::<f64>() / e.len() as f64).sqrt();
    Ok((e, d))
}

/// [`delta_exp`] at the fitted visibility, its minimum over `V`.
pub fn delta_min(rates: &RateSeries) -> Result<f64> {
    delta_exp(rates, v_fit(rates)?)
}

/// The same minimum written as a ratio of raw sums,
/// `{[n ΣR² - 2(ΣR cos 2φ)²]/(ΣR)² - 1}^{1/2}`.
pub fn delta_min_from_sums(rates: &RateSeries) -> Result<f64> {
    let total = rates.total();
    if total == 0.0 {
        return Err(Error::EmptyData);
    }
    let n = rates.n() as f64;
    let sq: f64 = rates.rates.iter().map(|r| r * r).sum();
    let c: f64 = rates.rates.iter().enumerate().map(|(j, r)| r * rates.cos2(j)).sum();
    Ok(((n * sq - 2.0 * c * c) / (total * total) - 1.0).max(0.0).sqrt())
}

/// Interpolation coefficients of `R(φ_j)/⟨R⟩ = 1 + Σ_{k=1}^{n/2} b_k cos 2kφ_j`.
/// Index `k` of the result holds `b_k`; `b_0 = 1`. The interpolation is
/// exact for symmetric series, `R(φ) = R(π - φ)`.
pub fn fourier_b(rates: &RateSeries) -> Result<Vec<f64>> {
    let n = rates.n();
    if !n.is_multiple_of(2) || n < 4 {
        return Err(Error::EvenNRequired(n));
    }
    if rates.total() == 0.0 {
        return Err(Error::EmptyData);
    }
    let r = rates.normalized();
    let nf = n as f64;
    Ok((0..=n / 2)
        .map(|k| {
            let s: f64 = r
                .iter()
                .enumerate()
                .map(|(j, v)| v * (2.0 * k as f64 * rates.angle(j)).cos())
                .sum();
            if k == 0 || k == n / 2 {
                s / nf
            } else {
                2.0 * s / nf
            }
        })
        .collect())
}

/// `{½ Σ_{k=2}^{n/2-1} b_k² + b_{n/2}²}^{1/2}`.
pub fn delta_min_from_b(b: &[f64]) -> f64 {
    let m = b.len() - 1;
    let mid: f64 = b[2.min(m)..m].iter().map(|x| x * x).sum();
    (0.5 * mid + b[m] * b[m]).sqrt()
}

/// Signed four-angle statistic
/// `[R(0) + R(π/2) - 2R(π/4)] / [R(0) + R(π/2) + 2R(π/4)]`.
pub fn four_angle_ratio(rates: &RateSeries) -> Result<f64> {
    let a = rates.rate_at(0.0)?;
    let b = rates.rate_at(PI / 2.0)?;
    let c = rates.rate_at(PI / 4.0)?;
    let den = a + b + 2.0 * c;
    if den == 0.0 {
        return Err(Error::DegenerateRates("R(0) + R(π/2) + 2R(π/4) = 0".into()));
    }
    Ok((a + b - 2.0 * c) / den)
}

/// Contrast `V_A` from `0, π/2` and the Bell-type estimator `V_B` from
/// `π/8, 3π/8`.
pub fn visibilities(rates: &RateSeries) -> Result<(f64, f64)> {
    let r0 = rates.rate_at(0.0)?;
    let r2 = rates.rate_at(PI / 2.0)?;
    let r1 = rates.rate_at(PI / 8.0)?;
    let r3 = rates.rate_at(3.0 * PI / 8.0)?;
    if r0 + r2 == 0.0 || r1 + r3 == 0.0 {
        return Err(Error::DegenerateRates("zero total rate in a visibility estimator".into()));
    }
    Ok(((r0 - r2) / (r0 + r2), SQRT_2 * (r1 - r3) / (r1 + r3)))
}

/// Four coincidence series of a two-channel experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoChannelRates {
    pp: RateSeries,
    pm: RateSeries,
    mp: RateSeries,
    mm: RateSeries,
}

impl TwoChannelRates {
    pub fn new(pp: RateSeries, pm: RateSeries, mp: RateSeries, mm: RateSeries) -> Result<Self> {
        let n = pp.n();
        if [&pm, &mp, &mm].iter().any(|s| s.n() != n) {
            return Err(Error::ShapeMismatch("two-channel series have different angle grids".into()));
        }
        Ok(Self { pp, pm, mp, mm })
    }

    pub fn n(&self) -> usize {
        self.pp.n()
    }

    pub fn pp(&self) -> &RateSeries {
        &self.pp
    }

    pub fn pm(&self) -> &RateSeries {
        &self.pm
    }

    pub fn mp(&self) -> &RateSeries {
        &self.mp
    }

    pub fn mm(&self) -> &RateSeries {
        &self.mm
    }

    /// Single-channel-equivalent series, averaging `R₊₊(φ)`, `R₋₋(φ)`,
    /// `R₊₋(φ + π/2)` and `R₋₊(φ + π/2)`.
    pub fn pooled(&self) -> Result<RateSeries> {
        let n = self.n();
        if !n.is_multiple_of(2) {
            return Err(Error::EvenNRequired(n));
        }
        let h = n / 2;
        let rates = (0..n)
            .map(|j| {
                let k = (j + h) % n;
                0.25 * (self.pp.rates[j] + self.mm.rates[j] + self.pm.rates[k] + self.mp.rates[k])
            })
            .collect();
        let sigma = match (&self.pp.sigma, &self.pm.sigma, &self.mp.sigma, &self.mm.sigma) {
            (Some(a), Some(b), Some(c), Some(d)) => Some(
                (0..n)
                    .map(|j| {
                        let k = (j + h) % n;
                        0.25 * (a[j].powi(2) + d[j].powi(2) + b[k].powi(2) + c[k].powi(2)).sqrt()
                    })
                    .collect(),
            ),
            _ => None,
        };
        RateSeries::new(rates, sigma)
    }
}

/// Correlation `E(φ) = (R₊₊ + R₋₋ - R₊₋ - R₋₊)/(R₊₊ + R₋₋ + R₊₋ + R₋₊)`.
pub fn correlation_e(tc: &TwoChannelRates, phi: f64) -> Result<f64> {
    let j = tc.pp.index_of(phi)?;
    let same = tc.pp.rates[j] + tc.mm.rates[j];
    let cross = tc.pm.rates[j] + tc.mp.rates[j];
    if same + cross == 0.0 {
        return Err(Error::DegenerateRates(format!("no coincidences at φ = {phi}")));
    }
    Ok((same - cross) / (same + cross))
}

/// `S = |3E(π/8) - E(3π/8)|`.
pub fn s_param(tc: &TwoChannelRates) -> Result<f64> {
    Ok((3.0 * correlation_e(tc, PI / 8.0)? - correlation_e(tc, 3.0 * PI / 8.0)?).abs())
}

/// Contrast from the correlation, `½[E(0) - E(π/2)]`.
pub fn contrast_from_correlation(tc: &TwoChannelRates) -> Result<f64> {
    Ok(0.5 * (correlation_e(tc, 0.0)? - correlation_e(tc, PI / 2.0)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonidealBound {
    /// Right-hand side of the two-arm bound on `V_M`.
    pub bound: f64,
    pub violated: bool,
    /// Small-efficiency form `1 - (π²/24)(η₁² + η₂²)`.
    pub small_eta_bound: f64,
}

/// Bound on the maximum visibility `V_M` for the model without rotational
/// symmetry:
/// `(1/3)(V_M + V_m)(s₁² + s₂²) + (4/π²)(s₁s₂/η₁η₂)[1 - (2/3)(s₁² + s₂²)]`.
pub fn nonideal_bound(eta1: f64, eta2: f64, v_max_obs: f64, v_min_obs: f64) -> Result<NonidealBound> {
    for eta in [eta1, eta2] {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::EfficiencyOutOfRange(eta));
        }
    }
    for v in [v_max_obs, v_min_obs] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::VisibilityOutOfRange(v));
        }
    }
    if v_min_obs > v_max_obs {
        return Err(Error::InvalidRates(format!(
            "minimum visibility {v_min_obs} exceeds maximum {v_max_obs}"
        )));
    }
    let s1 = (PI * eta1 / 2.0).sin();
    let s2 = (PI * eta2 / 2.0).sin();
    let ssq = s1 * s1 + s2 * s2;
    let bound = (v_max_obs + v_min_obs) * ssq / 3.0
        + 4.0 / (PI * PI) * s1 * s2 / (eta1 * eta2) * (1.0 - 2.0 / 3.0 * ssq);
    Ok(NonidealBound {
        bound,
        violated: v_max_obs > bound,
        small_eta_bound: 1.0 - PI * PI / 24.0 * (eta1 * eta1 + eta2 * eta2),
    })
}

/// First-order standard error of [`delta_min`] from the per-rate
/// uncertainties, or `None` if none were supplied.
pub fn sigma_delta_min(rates: &RateSeries) -> Result<Option<f64>> {
    let Some(sigma) = rates.uncertainties() else {
        return Ok(None);
    };
    let v = v_fit(rates)?;
    let (e, d) = residuals(rates, v)?;
    let total = rates.total();
    let n = rates.n();
    let mut grad = vec![0.0; n];
    if d > 0.0 {
        // V is stationary, so only the explicit dependence through R/⟨R⟩ counts.
        for (j, ej) in e.iter().enumerate() {
            grad[rates.source[j]] += (ej - d * d) / (total * d);
        }
        Ok(Some(
            grad.iter().zip(sigma).map(|(g, s)| (g * s).powi(2)).sum::<f64>().sqrt(),
        ))
    } else {
        // At an exact fit the statistic is not differentiable; use the RMS
        // relative noise as its scale.
        let mean = total / n as f64;
        Ok(Some(
            (sigma.iter().map(|s| (s / mean).powi(2)).sum::<f64>() / n as f64).sqrt(),
        ))
    }
}

/// Standard deviation of [`delta_min`] under Gaussian resampling of each
/// measured rate with its uncertainty.
pub fn bootstrap_sigma(rates: &RateSeries, replicas: usize, seed: u64) -> Result<f64> {
    let sigma = rates
        .uncertainties()
        .ok_or_else(|| Error::InvalidRates("bootstrap needs per-rate uncertainties".into()))?;
    if replicas < 2 {
        return Err(Error::InvalidConfig("bootstrap needs at least 2 replicas".into()));
    }
    let measured = rates.source.iter().copied().max().unwrap_or(0) + 1;
    let draws: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|b| {
            let mut rng = crate::rng::substream(seed, b as u32, u32::MAX);
            let fresh: Vec<f64> = (0..measured)
                .map(|i| {
                    let mu = rates.rates[i];
                    let s = sigma[i];
                    if s > 0.0 {
                        Normal::new(mu, s).expect("finite σ").sample(&mut rng).max(0.0)
                    } else {
                        mu
                    }
                })
                .collect();
            let full: Vec<f64> = rates.source.iter().map(|&i| fresh[i]).collect();
            RateSeries::new(full, None).and_then(|r| delta_min(&r)).unwrap_or(0.0)
        })
        .collect();
    let mean = draws.iter().sum::<f64>() / replicas as f64;
    Ok((draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (replicas - 1) as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    ConsistentWithLhvFamily,
    ViolatesLhvFamily,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::ConsistentWithLhvFamily => "CONSISTENT_WITH_LHV_FAMILY",
            Verdict::ViolatesLhvFamily => "VIOLATES_LHV_FAMILY",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Number of standard errors separating a verdict from the inconclusive band.
pub const VERDICT_SIGMAS: f64 = 2.0;

/// Compare the data statistic with the model bound.
pub fn verdict(delta_min: f64, sigma: f64, d: f64) -> Verdict {
    if d == 0.0 || delta_min - VERDICT_SIGMAS * sigma >= d {
        Verdict::ConsistentWithLhvFamily
    } else if delta_min + VERDICT_SIGMAS * sigma < d {
        Verdict::ViolatesLhvFamily
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Efficiency {
    Single(f64),
    Pair(f64, f64),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AnalysisOptions {
    /// Visibility used in `D`; defaults to the fitted one.
    pub v_override: Option<f64>,
    /// Flat accidental rate subtracted before analysis.
    pub accidental_rate: Option<f64>,
    /// Replicas and seed for a resampling estimate of the error on `Δ_min`.
    pub bootstrap: Option<(usize, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub n_angles: usize,
    pub delta_min: f64,
    pub v_fit: f64,
    /// Visibility entering `D`.
    pub v_used: f64,
    /// `b_k`, index `k`; empty for odd `n`.
    pub b: Vec<f64>,
    pub d_bound: f64,
    pub eps: f64,
    pub v_max: f64,
    pub branch: Branch,
    pub sigma_delta_min: Option<f64>,
    pub sigma_method: Option<String>,
    pub verdict: Verdict,
    pub four_angle_ratio: Option<f64>,
    pub v_a: Option<f64>,
    pub v_b: Option<f64>,
    pub s: Option<f64>,
    pub notes: Vec<String>,
}

/// The full single-channel test.
pub fn analyze(rates: &RateSeries, efficiency: Efficiency, options: &AnalysisOptions) -> Result<TestReport> {
    let rates = match options.accidental_rate {
        Some(a) => rates.subtract_flat(a)?,
        None => rates.clone(),
    };
    let mut notes = Vec::new();
    let dmin = delta_min(&rates)?;
    let fit = v_fit(&rates)?;
    let mut v_used = options.v_override.unwrap_or(fit);
    if !(0.0..=1.0).contains(&v_used) {
        if options.v_override.is_some() {
            return Err(Error::VisibilityOutOfRange(v_used));
        }
        notes.push(format!("fitted visibility {fit} clamped to [0, 1] for the bound"));
        v_used = v_used.clamp(0.0, 1.0);
    }
    let (d, eps, vm) = match efficiency {
        Efficiency::Single(eta) => (deviation_d(eta, v_used)?, epsilon_solve(eta, v_used)?, v_max(eta)?),
        Efficiency::Pair(e1, e2) if e1 == e2 => (deviation_d(e1, v_used)?, epsilon_solve(e1, v_used)?, v_max(e1)?),
        Efficiency::Pair(e1, e2) => {
            let vm = v_max_pair(e1, e2)?;
            let eps = ((v_used - vm).max(0.0) / 2.0).sqrt();
            (deviation_d_pair(e1, e2, v_used)?, eps, vm)
        }
    };
    let branch = if d > 0.0 { Branch::Deviate } else { Branch::Agree };
    if d == 0.0 {
        notes.push("V ≤ V_max: D = 0 and the test has no power".into());
    }
    let (sigma, method) = match options.bootstrap {
        Some((replicas, seed)) if rates.uncertainties().is_some() => {
            (Some(bootstrap_sigma(&rates, replicas, seed)?), Some("bootstrap".to_string()))
        }
        _ => {
            let s = sigma_delta_min(&rates)?;
            (s, s.map(|_| "first_order".to_string()))
        }
    };
    if sigma.is_none() {
        notes.push("no uncertainties: verdict from point values only".into());
    }
    let b = if rates.n() % 2 == 0 && rates.n() >= 4 {
        fourier_b(&rates)?
    } else {
        Vec::new()
    };
    Ok(TestReport {
        n_angles: rates.n(),
        delta_min: dmin,
        v_fit: fit,
        v_used,
        b,
        d_bound: d,
        eps,
        v_max: vm,
        branch,
        sigma_delta_min: sigma,
        sigma_method: method,
        verdict: verdict(dmin, sigma.unwrap_or(0.0), d),
        four_angle_ratio: four_angle_ratio(&rates).ok(),
        v_a: visibilities(&rates).ok().map(|v| v.0),
        v_b: visibilities(&rates).ok().map(|v| v.1),
        s: None,
        notes,
    })
}

/// The test on pooled two-channel data, with the correlation-based
/// quantities filled in.
pub fn analyze_two_channel(tc: &TwoChannelRates, efficiency: Efficiency, options: &AnalysisOptions) -> Result<TestReport> {
    let mut report = analyze(&tc.pooled()?, efficiency, options)?;
    report.s = s_param(tc).ok();
    if let Ok(v_a) = contrast_from_correlation(tc) {
        report.v_a = Some(v_a);
    }
    if let Some(s) = report.s {
        report.v_b = Some(s / (2.0 * SQRT_2));
    }
    Ok(report)
}
