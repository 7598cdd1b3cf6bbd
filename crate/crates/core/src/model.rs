//! The local hidden-variable model family: a density `ρ` for the difference
//! of the two photons' hidden polarization angles, and detection
//! probabilities `P(x)` depending on the angle between a photon's
//! polarization and its analyzer.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::periodic::{check_grid, grid_x, CosineTransform, PeriodicFn};

/// Tolerance for range, evenness and monotonicity checks on samples.
pub const SHAPE_TOL: f64 = 1e-12;

/// Relative tolerance on `∫ρ = 1/π`.
pub const NORM_TOL: f64 = 1e-9;

/// Whether `dF/d|x| ≤ 0` is enforced at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Monotonicity {
    #[default]
    Strict,
    Relaxed,
}

/// Detection probability as a function of the angle between the photon's
/// polarization and the analyzer plane.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionFn {
    p: PeriodicFn,
}

impl DetectionFn {
    pub fn new(p: PeriodicFn, monotonicity: Monotonicity) -> Result<Self> {
        let (lo, hi) = (p.min(), p.max());
        if lo < -SHAPE_TOL || hi > 1.0 + SHAPE_TOL {
            return Err(Error::InvalidFunction(format!(
                "detection probability must lie in [0, 1], found range [{lo}, {hi}]"
            )));
        }
        p.ensure_even(SHAPE_TOL)?;
        if monotonicity == Monotonicity::Strict {
            let defect = p.monotonicity_defect();
            if defect > SHAPE_TOL {
                return Err(Error::InvalidFunction(format!(
                    "detection probability increases with |x| by {defect:e}"
                )));
            }
        }
        Ok(Self { p })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64, monotonicity: Monotonicity) -> Result<Self> {
        Self::new(PeriodicFn::from_fn(n, f)?, monotonicity)
    }

    /// Perfect detector, `P = 1`.
    pub fn unity(n: usize) -> Result<Self> {
        Self::new(PeriodicFn::constant(n, 1.0)?, Monotonicity::Strict)
    }

    /// The efficiency-`η` top hat: `P = 1` for `|x| ≤ πη/4`, else 0.
    pub fn top_hat(n: usize, eta: f64) -> Result<Self> {
        check_efficiency(eta)?;
        Self::scaled_top_hat(n, PI * eta / 4.0, 1.0)
    }

    /// `height · Θ(half_width - |x|)`, sampled as exact cell averages so
    /// that `∫P dx = 2 · height · half_width` holds on the grid.
    pub fn scaled_top_hat(n: usize, half_width: f64, height: f64) -> Result<Self> {
        check_grid(n)?;
        if !(0.0..=PI / 2.0).contains(&half_width) {
            return Err(Error::InvalidFunction(format!(
                "top-hat half-width {half_width} outside [0, π/2]"
            )));
        }
        if !(0.0..=1.0).contains(&height) {
            return Err(Error::InvalidFunction(format!("top-hat height {height} outside [0, 1]")));
        }
        let h = PI / n as f64;
        let samples = (0..n)
            .map(|i| height * cell_coverage(grid_x(n, i), h, half_width))
            .collect();
        Self::new(PeriodicFn::new(samples)?, Monotonicity::Strict)
    }

    #[inline]
    pub fn function(&self) -> &PeriodicFn {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.p.eval(x)
    }

    /// `C_k` for `k = 0..=N/2`.
    pub fn moments(&self) -> Vec<f64> {
        self.p.cosine_moments()
    }

    /// The orthogonal channel of a two-channel analyzer, `P₋(x) = P₊(x + π/2)`.
    pub fn orthogonal(&self) -> Self {
        Self {
            p: self.p.shifted_half_period(),
        }
    }
}

/// Fraction of the cell `[x - h/2, x + h/2]` covered by `|x| ≤ w` and its
/// π-periodic images.
fn cell_coverage(x: f64, h: f64, w: f64) -> f64 {
    let (lo, hi) = (x - h / 2.0, x + h / 2.0);
    let covered: f64 = [-PI, 0.0, PI]
        .iter()
        .map(|shift| (hi.min(shift + w) - lo.max(shift - w)).max(0.0))
        .sum();
    (covered / h).min(1.0)
}

pub(crate) fn check_efficiency(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::EfficiencyOutOfRange(eta));
    }
    Ok(())
}

/// `C_k = ∫ P(x) cos(2kx) dx`.
pub fn ck_moment(p: &DetectionFn, k: usize) -> f64 {
    let h = p.function().step();
    p.function()
        .samples()
        .iter()
        .enumerate()
        .map(|(i, v)| v * (2.0 * k as f64 * p.function().x(i)).cos())
        .sum::<f64>()
        * h
}

/// Density of the hidden angle difference `χ₁ - χ₂`, normalized to
/// `∫ρ dx = 1/π` so that perfect detectors give `p₁₂ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDensity {
    rho: PeriodicFn,
}

impl PairDensity {
    pub fn new(rho: PeriodicFn, monotonicity: Monotonicity) -> Result<Self> {
        let scale = rho.max().abs().max(1.0 / (PI * PI));
        if rho.min() < -SHAPE_TOL * scale {
            return Err(Error::InvalidFunction(format!(
                "pair density is negative (min {})",
                rho.min()
            )));
        }
        rho.ensure_even(SHAPE_TOL * scale)?;
        let total = rho.integrate();
        if ((total - 1.0 / PI) * PI).abs() > NORM_TOL {
            return Err(Error::InvalidFunction(format!(
                "pair density integrates to {total}, expected 1/π"
            )));
        }
        if monotonicity == Monotonicity::Strict {
            let defect = rho.monotonicity_defect();
            if defect > SHAPE_TOL * scale {
                return Err(Error::InvalidFunction(format!(
                    "pair density increases with |x| by {defect:e}"
                )));
            }
        }
        Ok(Self { rho })
    }

    /// Rescale non-negative samples to unit normalization, then validate.
    pub fn normalized(samples: Vec<f64>, monotonicity: Monotonicity) -> Result<Self> {
        let f = PeriodicFn::new(samples)?;
        let total = f.integrate();
        if !(total > 0.0) {
            return Err(Error::InvalidFunction("pair density has no mass".into()));
        }
        Self::new(f.scaled(1.0 / (PI * total)), monotonicity)
    }

    /// Uncorrelated polarizations, `ρ = 1/π²`.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(PeriodicFn::constant(n, 1.0 / (PI * PI))?, Monotonicity::Strict)
    }

    pub fn function(&self) -> &PeriodicFn {
        &self.rho
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Coefficients `R_k` of `ρ = Σ R_k cos 2kx` for `k = 0..=N/2`, with the
    /// Nyquist term normalized so that the expansion is exact on the grid.
    pub fn coefficients(&self) -> Vec<f64> {
        let n = self.len();
        let mut c = self.rho.cosine_moments();
        for (k, v) in c.iter_mut().enumerate() {
            *v *= if k == 0 || k == n / 2 { 1.0 / PI } else { 2.0 / PI };
        }
        c
    }
}

/// A rotationally symmetric model: pair density plus one detection
/// function per arm.
#[derive(Debug, Clone)]
pub struct LhvModel {
    rho: PairDensity,
    p1: DetectionFn,
    p2: DetectionFn,
    /// Harmonic amplitudes of `p₁₂(φ)`: `R_k C_k⁽¹⁾ C_k⁽²⁾`.
    spectrum: Vec<f64>,
}

impl LhvModel {
    pub fn new(rho: PairDensity, p1: DetectionFn, p2: DetectionFn) -> Result<Self> {
        if rho.len() != p1.len() || rho.len() != p2.len() {
            return Err(Error::InvalidGrid(format!(
                "grid sizes differ: ρ {}, P1 {}, P2 {}",
                rho.len(),
                p1.len(),
                p2.len()
            )));
        }
        let r = rho.coefficients();
        let t = CosineTransform::new(rho.len());
        let c1 = t.moments(p1.function().samples());
        let c2 = t.moments(p2.function().samples());
        let spectrum = r
            .iter()
            .zip(c1.iter().zip(&c2))
            .map(|(rk, (a, b))| rk * a * b)
            .collect();
        Ok(Self { rho, p1, p2, spectrum })
    }

    /// Both arms share the same detection function.
    pub fn symmetric(rho: PairDensity, p: DetectionFn) -> Result<Self> {
        Self::new(rho, p.clone(), p)
    }

    pub fn rho(&self) -> &PairDensity {
        &self.rho
    }

    pub fn p1(&self) -> &DetectionFn {
        &self.p1
    }

    pub fn p2(&self) -> &DetectionFn {
        &self.p2
    }

    pub fn grid_len(&self) -> usize {
        self.rho.len()
    }

    /// Harmonic amplitudes of the coincidence curve.
    pub fn coincidence_spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// `p₁₂(φ) = ∫∫ ρ(u - v + φ) P₁(u) P₂(v) du dv` at any angle.
    pub fn coincidence_prob(&self, phi: f64) -> f64 {
        self.spectrum
            .iter()
            .enumerate()
            .map(|(k, a)| a * (2.0 * k as f64 * phi).cos())
            .sum()
    }

    /// `p₁₂` on the grid by direct convolution `∫ ρ(y + φ) f(y) dy`, with
    /// `f` the cross-correlation of the two detection functions.
    pub fn coincidence_curve(&self) -> PeriodicFn {
        let n = self.grid_len();
        let f = correlate(self.p1.function(), self.p2.function());
        let rho = self.rho.function().samples();
        let h = PI / n as f64;
        let samples = (0..n)
            .map(|m| {
                let acc: f64 = f
                    .iter()
                    .enumerate()
                    .filter(|(_, fy)| **fy != 0.0)
                    .map(|(j, fy)| rho[(j + m + n / 2) % n] * fy)
                    .sum();
                h * acc
            })
            .collect();
        PeriodicFn::new(samples).expect("grid already validated")
    }

    /// `p_j = C₀⁽ʲ⁾/π`.
    pub fn singles_prob(&self, arm: Arm) -> f64 {
        let p = match arm {
            Arm::One => &self.p1,
            Arm::Two => &self.p2,
        };
        ck_moment(p, 0) / PI
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    One,
    Two,
}

/// `g(y) = ∫ P₁(u) P₂(u - y) du` on the grid.
fn correlate(p1: &PeriodicFn, p2: &PeriodicFn) -> Vec<f64> {
    let n = p1.len();
    let h = p1.step();
    let (a, b) = (p1.samples(), p2.samples());
    (0..n)
        .map(|m| {
            let acc: f64 = a
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| v * b[(i + n + n / 2 - m) % n])
                .sum();
            h * acc
        })
        .collect()
}

/// `p₁₂(φ)` by brute-force double quadrature of the defining integral;
/// test oracle for the spectral and convolution routes.
pub fn coincidence_prob_direct(model: &LhvModel, phi: f64) -> f64 {
    let n = model.grid_len();
    let h = PI / n as f64;
    let rho = model.rho.function();
    let (p1, p2) = (model.p1.function().samples(), model.p2.function().samples());
    let mut acc = 0.0;
    for (u, a) in p1.iter().enumerate() {
        if *a == 0.0 {
            continue;
        }
        for (v, b) in p2.iter().enumerate() {
            if *b == 0.0 {
                continue;
            }
            acc += a * b * rho.eval(grid_x(n, u) - grid_x(n, v) + phi);
        }
    }
    acc * h * h
}

/// Density over the two absolute hidden angles `(χ₁, χ₂)`, sampled on an
/// `N × N` grid (row index for `χ₁`) and normalized so that perfect
/// detectors give `p₁₂ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDensity2D {
    n: usize,
    values: Vec<f64>,
}

impl PairDensity2D {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        check_grid(n)?;
        if values.len() != n * n {
            return Err(Error::InvalidGrid(format!(
                "expected {} values for a {n}x{n} grid, got {}",
                n * n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < -SHAPE_TOL) {
            return Err(Error::InvalidFunction("2-D pair density must be finite and non-negative".into()));
        }
        let h = PI / n as f64;
        let total = h * h * values.iter().sum::<f64>();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidFunction(format!(
                "2-D pair density integrates to {total}, expected 1"
            )));
        }
        Ok(Self { n, values })
    }

    /// `ρ(χ₁, χ₂) = ρ(χ₁ - χ₂)`.
    pub fn from_difference(rho: &PairDensity) -> Result<Self> {
        let n = rho.len();
        let f = rho.function().samples();
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                // x_i - x_j = (i - j)h = x_{i - j + N/2}
                values.push(f[(i + n + n / 2 - j) % n]);
            }
        }
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

/// `p₁₂(φ₁, φ₂) = ∫∫ ρ(χ₁, χ₂) P₁(χ₁ - φ₁) P₂(χ₂ - φ₂) dχ₁ dχ₂`.
pub fn coincidence_prob_2d(
    rho2: &PairDensity2D,
    p1: &DetectionFn,
    p2: &DetectionFn,
    phi1: f64,
    phi2: f64,
) -> f64 {
    let n = rho2.n;
    let h = PI / n as f64;
    let a: Vec<f64> = (0..n).map(|i| p1.eval(grid_x(n, i) - phi1)).collect();
    let b: Vec<f64> = (0..n).map(|j| p2.eval(grid_x(n, j) - phi2)).collect();
    let mut acc = 0.0;
    for (i, ai) in a.iter().enumerate() {
        if *ai == 0.0 {
            continue;
        }
        let row = &rho2.values[i * n..(i + 1) * n];
        let inner: f64 = row.iter().zip(&b).map(|(r, bj)| r * bj).sum();
        acc += ai * inner;
    }
    acc * h * h
}

/// Parameters of the model without rotational symmetry: top-hat detectors
/// of height `β_j` and width set by `η_j`, and a correlation strength that
/// varies with the absolute angle of the second photon between `w_min`
/// and `w_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisotropicParams {
    pub eta1: f64,
    pub eta2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub w_max: f64,
    pub w_min: f64,
}

#[derive(Debug, Clone)]
pub struct AnisotropicModel {
    pub params: AnisotropicParams,
    pub rho2: PairDensity2D,
    pub p1: DetectionFn,
    pub p2: DetectionFn,
}

/// Builds
/// `ρ(χ₁, χ₂) = π⁻² {1 + [W_m + (W_M - W_m) cos 4χ₂] cos 2(χ₁ - χ₂)}` and
/// `P_j(x) = β_j Θ(πη_j/(4β_j) - |x|)`.
pub fn build_anisotropic_model(params: AnisotropicParams, n: usize) -> Result<AnisotropicModel> {
    let AnisotropicParams {
        eta1,
        eta2,
        beta1,
        beta2,
        w_max,
        w_min,
    } = params;
    for (label, eta, beta) in [("1", eta1, beta1), ("2", eta2, beta2)] {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InadmissibleModel(format!("η{label} = {eta} outside (0, 1]")));
        }
        if !(beta >= eta && beta <= 1.0) {
            return Err(Error::InadmissibleModel(format!(
                "β{label} = {beta} outside [η{label}, 1] = [{eta}, 1]"
            )));
        }
    }
    if !(0.0 <= w_min && w_min <= w_max && w_max <= 1.0) {
        return Err(Error::InadmissibleModel(format!(
            "need 0 ≤ W_m ≤ W_M ≤ 1, got W_m = {w_min}, W_M = {w_max}"
        )));
    }
    check_grid(n)?;
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        let chi1 = grid_x(n, i);
        for j in 0..n {
            let chi2 = grid_x(n, j);
            let w = w_min + (w_max - w_min) * (4.0 * chi2).cos();
            values.push((1.0 + w * (2.0 * (chi1 - chi2)).cos()) / (PI * PI));
        }
    }
    let rho2 = PairDensity2D::new(n, values)?;
    let p1 = DetectionFn::scaled_top_hat(n, PI * eta1 / (4.0 * beta1), beta1)?;
    let p2 = DetectionFn::scaled_top_hat(n, PI * eta2 / (4.0 * beta2), beta2)?;
    Ok(AnisotropicModel { params, rho2, p1, p2 })
}

impl AnisotropicModel {
    pub fn coincidence_prob(&self, phi1: f64, phi2: f64) -> f64 {
        coincidence_prob_2d(&self.rho2, &self.p1, &self.p2, phi1, phi2)
    }

    /// Visibility of the curve `φ₁ ↦ p₁₂(φ₂ + φ, φ₂)` sampled at
    /// `φ = jπ/n`, from the cosine fit.
    pub fn fitted_visibility(&self, phi2: f64, n_angles: usize) -> Result<f64> {
        let rates: Vec<f64> = (0..n_angles)
            .map(|j| {
                let phi = j as f64 * PI / n_angles as f64;
                self.coincidence_prob(phi2 + phi, phi2)
            })
            .collect();
        let series = crate::inequalities::RateSeries::new(rates, None)?;
        crate::inequalities::v_fit(&series)
    }
}
