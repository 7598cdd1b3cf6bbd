//! Direct numerical minimization of the squared deviation between the
//! model coincidence curve and `(η²/4)(1 + V cos 2φ)` over all admissible
//! densities, as an independent check on the analytic optimum.
//!
//! The density is discretized on the grid and the problem becomes a convex
//! quadratic program over the simplex `{u ≥ 0, Σu = N}` with `u = π²ρ`. It
//! is solved by accelerated projected gradient with adaptive restart.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DetectionFn, Monotonicity, PairDensity};
use crate::periodic::{CosineTransform, PeriodicFn};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 400_000;

/// Harmonics of `P` whose weight falls below this fraction of the
/// constant term are treated as absent.
const DEGENERACY_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct VariationalProblem {
    p: DetectionFn,
    pub eta: f64,
    pub v: f64,
    /// Stopping threshold on the gradient-mapping norm, in units of
    /// `(η²/4)²`.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl VariationalProblem {
    /// `C₀(P)` must equal `πη/2`, which ties `P` to the efficiency.
    pub fn new(p: DetectionFn, eta: f64, v: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::EfficiencyOutOfRange(eta));
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::VisibilityOutOfRange(v));
        }
        let c0 = p.function().integrate();
        if (c0 - PI * eta / 2.0).abs() > 1e-6 {
            return Err(Error::InadmissibleModel(format!(
                "∫P = {c0} does not match πη/2 = {} for η = {eta}",
                PI * eta / 2.0
            )));
        }
        Ok(Self {
            p,
            eta,
            v,
            tolerance: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn detection(&self) -> &DetectionFn {
        &self.p
    }

    pub fn grid_len(&self) -> usize {
        self.p.len()
    }

    fn scale(&self) -> f64 {
        (self.eta * self.eta / 4.0).powi(2)
    }
}

/// Quadratic form of the scaled objective in terms of the harmonics
/// `U_k` of `u = π²ρ`: `F = Σ_k w_k (g_k U_k - t_k)²`.
struct Quadratic {
    n: usize,
    transform: CosineTransform,
    /// `C_k² / (π² η²/4)`.
    gain: Vec<f64>,
    target: Vec<f64>,
    weight: Vec<f64>,
    /// `dU_k / d(Σ_j u_j cos 2kx_j)`.
    alpha: Vec<f64>,
}

impl Quadratic {
    fn new(problem: &VariationalProblem) -> Self {
        let n = problem.grid_len();
        let transform = CosineTransform::new(n);
        let c = transform.moments(problem.p.function().samples());
        let q = problem.eta * problem.eta / 4.0;
        let gain = c.iter().map(|ck| ck * ck / (PI * PI * q)).collect();
        let mut target = vec![0.0; n / 2 + 1];
        target[0] = 1.0;
        target[1] = problem.v;
        let ends = |k: usize| k == 0 || k == n / 2;
        let weight = (0..=n / 2).map(|k| if ends(k) { PI } else { PI / 2.0 }).collect();
        let alpha = (0..=n / 2)
            .map(|k| if ends(k) { 1.0 / n as f64 } else { 2.0 / n as f64 })
            .collect();
        Self {
            n,
            transform,
            gain,
            target,
            weight,
            alpha,
        }
    }

    fn harmonics(&self, u: &[f64]) -> Vec<f64> {
        let h = PI / self.n as f64;
        self.transform
            .moments(u)
            .iter()
            .zip(&self.alpha)
            .map(|(m, a)| a * m / h)
            .collect()
    }

    fn residuals(&self, u: &[f64]) -> Vec<f64> {
        self.harmonics(u)
            .iter()
            .zip(self.gain.iter().zip(&self.target))
            .map(|(uk, (g, t))| g * uk - t)
            .collect()
    }

    fn objective(&self, u: &[f64]) -> f64 {
        self.residuals(u)
            .iter()
            .zip(&self.weight)
            .map(|(r, w)| w * r * r)
            .sum()
    }

    fn gradient(&self, u: &[f64], out: &mut [f64]) -> f64 {
        let r = self.residuals(u);
        let coeffs: Vec<f64> = (0..=self.n / 2)
            .map(|k| 2.0 * self.weight[k] * r[k] * self.gain[k] * self.alpha[k])
            .collect();
        self.transform.synthesize_into(&coeffs, out);
        r.iter().zip(&self.weight).map(|(r, w)| w * r * r).sum()
    }

    /// Largest Hessian eigenvalue. The cosine vectors are orthogonal on the
    /// grid, so the spectrum is diagonal in `k`.
    fn lipschitz(&self) -> f64 {
        (0..=self.n / 2)
            .map(|k| {
                let norm_sq = if k == 0 || k == self.n / 2 { self.n as f64 } else { self.n as f64 / 2.0 };
                2.0 * self.weight[k] * (self.gain[k] * self.alpha[k]).powi(2) * norm_sq
            })
            .fold(0.0, f64::max)
    }

    fn degenerate(&self) -> bool {
        self.gain[1..].iter().all(|g| g.abs() <= DEGENERACY_TOL * self.gain[0])
    }
}

/// `S = ∫ [p₁₂(φ) - (η²/4)(1 + V cos 2φ)]² dφ` for the given density, with
/// both arms using the problem's detection function.
pub fn objective_s(rho: &PairDensity, problem: &VariationalProblem) -> Result<f64> {
    if rho.len() != problem.grid_len() {
        return Err(Error::InvalidGrid(format!(
            "density has {} points, problem {}",
            rho.len(),
            problem.grid_len()
        )));
    }
    let q = Quadratic::new(problem);
    let u: Vec<f64> = rho.function().samples().iter().map(|r| r * PI * PI).collect();
    Ok(q.objective(&u) * problem.scale())
}

/// Average each sample with its mirror image `x ↦ -x`, removing the
/// rounding asymmetry that FFT round trips accumulate.
fn symmetrize(u: &mut [f64]) {
    let n = u.len();
    for i in 1..n / 2 {
        let m = 0.5 * (u[i] + u[n - i]);
        u[i] = m;
        u[n - i] = m;
    }
}

/// Euclidean projection onto `{u ≥ 0, Σu = total}`.
pub fn project_simplex(y: &[f64], total: f64, out: &mut [f64]) {
    let mut sorted = y.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - total) / (i + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    for (o, v) in out.iter_mut().zip(y) {
        *o = (v - theta).max(0.0);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    #[serde(skip)]
    pub rho: PairDensity,
    /// Minimum of `S`.
    pub s_min: f64,
    /// `S / (η²/4)²`.
    pub s_scaled: f64,
    pub iterations: usize,
    /// Final gradient-mapping norm in scaled units.
    pub residual: f64,
    pub degenerate: bool,
    pub warnings: Vec<String>,
}

/// Minimize `S` over admissible densities on the problem's grid.
pub fn solve(problem: &VariationalProblem) -> Result<Solution> {
    let n = problem.grid_len();
    let q = Quadratic::new(problem);
    let total = n as f64;
    let to_density = |u: &[f64]| -> Result<PairDensity> {
        PairDensity::normalized(u.iter().map(|v| v / (PI * PI)).collect(), Monotonicity::Relaxed)
    };

    if q.degenerate() {
        let u = vec![1.0; n];
        let s = q.objective(&u);
        return Ok(Solution {
            rho: to_density(&u)?,
            s_min: s * problem.scale(),
            s_scaled: s,
            iterations: 0,
            residual: 0.0,
            degenerate: true,
            warnings: vec![
                "detection function has no angular harmonics: every density gives the same p12, returning the uniform one"
                    .into(),
            ],
        });
    }

    let step = 1.0 / q.lipschitz();
    let mut x = vec![1.0; n];
    let mut x_prev = x.clone();
    let mut y = x.clone();
    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut t = 1.0_f64;
    let mut residual = f64::INFINITY;
    for iter in 1..=problem.max_iter {
        q.gradient(&y, &mut grad);
        for ((tr, yi), g) in trial.iter_mut().zip(&y).zip(&grad) {
            *tr = yi - step * g;
        }
        std::mem::swap(&mut x_prev, &mut x);
        project_simplex(&trial, total, &mut x);
        symmetrize(&mut x);

        // Gradient mapping at y, in objective units.
        residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
            / step;
        if residual < problem.tolerance {
            let s = q.objective(&x);
            return Ok(Solution {
                rho: to_density(&x)?,
                s_min: s * problem.scale(),
                s_scaled: s,
                iterations: iter,
                residual,
                degenerate: false,
                warnings: Vec::new(),
            });
        }

        // Restart momentum when it points uphill.
        let uphill: f64 = y
            .iter()
            .zip(&x)
            .zip(&x_prev)
            .map(|((yi, xi), xp)| (yi - xi) * (xi - xp))
            .sum();
        if uphill > 0.0 {
            t = 1.0;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for ((yi, xi), xp) in y.iter_mut().zip(&x).zip(&x_prev) {
            *yi = xi + beta * (xi - xp);
        }
        t = t_next;
    }
    Err(Error::NotConverged {
        iterations: problem.max_iter,
        residual,
        objective: q.objective(&x),
        last_iterate: x.iter().map(|v| v / (PI * PI)).collect(),
    })
}

/// Directional derivative of `S` at `rho` along `direction` (a change of
/// the density samples).
pub fn directional_derivative(rho: &PairDensity, problem: &VariationalProblem, direction: &[f64]) -> f64 {
    let q = Quadratic::new(problem);
    let u: Vec<f64> = rho.function().samples().iter().map(|r| r * PI * PI).collect();
    let mut g = vec![0.0; u.len()];
    q.gradient(&u, &mut g);
    g.iter().zip(direction).map(|(a, d)| a * d * PI * PI).sum::<f64>() * problem.scale()
}

/// Relative L² distance between two densities on the same grid,
/// restricted to points where `reference` exceeds `floor`.
pub fn relative_l2(candidate: &PeriodicFn, reference: &PeriodicFn, floor: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (c, r) in candidate.samples().iter().zip(reference.samples()) {
        if *r > floor {
            num += (c - r).powi(2);
            den += r * r;
        }
    }
    (num / den).sqrt()
}
