//! Photon-pair experiments simulated pair by pair, under a hidden-variable
//! model or under the quantum prediction.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inequalities::{RateSeries, TwoChannelRates};
use crate::model::{ck_moment, DetectionFn, LhvModel, PairDensity};
use crate::periodic::grid_x;
use crate::rng::substream;

/// Pairs simulated per substream.
pub const CHUNK_PAIRS: u64 = 1 << 20;

/// Slack allowed on `P₊ + P₋ ≤ 1`.
const OVERLAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum SimMode {
    Lhv(LhvModel),
    Qm { eta: f64, v: f64 },
}

/// How the counts are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMethod {
    /// Every pair is drawn and detected individually.
    #[default]
    Events,
    /// The per-angle outcome counts are drawn at once from their exact
    /// multinomial law. Same distribution, cost independent of `pairs`.
    Multinomial,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Emitted pairs per angle.
    pub pairs: u64,
    /// Relative analyzer angles `φ = φ₁ - φ₂`, with `φ₂ = 0`.
    pub angles: Vec<f64>,
    pub seed: u64,
    pub mode: SimMode,
    pub two_channel: bool,
    pub method: SimMethod,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pairs == 0 {
            return Err(Error::InvalidConfig("pairs must be at least 1".into()));
        }
        if self.angles.is_empty() {
            return Err(Error::InvalidConfig("no analyzer angles".into()));
        }
        if let Some(a) = self.angles.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidConfig(format!("angle {a} is not finite")));
        }
        match &self.mode {
            SimMode::Qm { eta, v } => {
                if !(*eta > 0.0 && *eta <= 1.0) {
                    return Err(Error::EfficiencyOutOfRange(*eta));
                }
                if !(0.0..=1.0).contains(v) {
                    return Err(Error::VisibilityOutOfRange(*v));
                }
            }
            SimMode::Lhv(model) => {
                if self.two_channel {
                    for p in [model.p1(), model.p2()] {
                        let q = p.orthogonal();
                        let worst = p
                            .function()
                            .samples()
                            .iter()
                            .zip(q.function().samples())
                            .map(|(a, b)| a + b)
                            .fold(0.0, f64::max);
                        if worst > 1.0 + OVERLAP_TOL {
                            return Err(Error::ChannelOverlap(worst));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Counts at one analyzer setting. Channel counts are present only for
/// two-channel runs; singles and coincidences then refer to the `+` ports.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AngleCounts {
    pub singles_1: u64,
    pub singles_2: u64,
    pub coincidences: u64,
    pub channels: Option<ChannelCounts>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ChannelCounts {
    pub pp: u64,
    pub pm: u64,
    pub mp: u64,
    pub mm: u64,
    pub plus_1: u64,
    pub minus_1: u64,
    pub plus_2: u64,
    pub minus_2: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountData {
    pub pairs: u64,
    pub angles: Vec<f64>,
    pub counts: Vec<AngleCounts>,
}

impl CountData {
    /// Coincidence probability per angle with Poisson errors.
    pub fn rate_series(&self) -> Result<RateSeries> {
        let pts: Vec<(f64, f64, Option<f64>)> = self
            .angles
            .iter()
            .zip(&self.counts)
            .map(|(a, c)| {
                let n = c.coincidences as f64;
                (*a, n / self.pairs as f64, Some(n.max(1.0).sqrt() / self.pairs as f64))
            })
            .collect();
        RateSeries::from_angles(&pts)
    }

    pub fn two_channel_rates(&self) -> Result<TwoChannelRates> {
        let series = |pick: fn(&ChannelCounts) -> u64| -> Result<RateSeries> {
            let pts = self
                .angles
                .iter()
                .zip(&self.counts)
                .map(|(a, c)| {
                    let ch = c
                        .channels
                        .as_ref()
                        .ok_or_else(|| Error::ShapeMismatch("single-channel counts".into()))?;
                    let n = pick(ch) as f64;
                    Ok((*a, n / self.pairs as f64, Some(n.max(1.0).sqrt() / self.pairs as f64)))
                })
                .collect::<Result<Vec<_>>>()?;
            RateSeries::from_angles(&pts)
        };
        TwoChannelRates::new(series(|c| c.pp)?, series(|c| c.pm)?, series(|c| c.mp)?, series(|c| c.mm)?)
    }
}

/// Inverse-CDF sampler for the angle difference, piecewise uniform over the
/// grid cells.
#[derive(Debug, Clone)]
pub struct PairSampler {
    /// Cumulative mass at the upper edge of each cell.
    cdf: Vec<f64>,
    mass: Vec<f64>,
    n: usize,
}

impl PairSampler {
    pub fn new(rho: &PairDensity) -> Self {
        let n = rho.len();
        let h = PI / n as f64;
        let mass: Vec<f64> = rho.function().samples().iter().map(|r| r * h * PI).collect();
        let total: f64 = mass.iter().sum();
        let mut acc = 0.0;
        let cdf = mass
            .iter()
            .map(|m| {
                acc += m / total;
                acc
            })
            .collect();
        let mass = mass.iter().map(|m| m / total).collect();
        Self { cdf, mass, n }
    }

    /// Draw `χ₁ - χ₂` in `[-π/2 - h/2, π/2 - h/2)`.
    pub fn sample_difference<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|c| *c <= u).min(self.n - 1);
        let below = if i == 0 { 0.0 } else { self.cdf[i - 1] };
        let h = PI / self.n as f64;
        let frac = if self.mass[i] > 0.0 { ((u - below) / self.mass[i]).clamp(0.0, 1.0) } else { 0.5 };
        grid_x(self.n, i) - h / 2.0 + h * frac
    }

    /// Draw `(χ₁, χ₂)` with `χ₁` uniform on the period.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let chi1 = -PI / 2.0 + PI * rng.random::<f64>();
        let d = self.sample_difference(rng);
        (chi1, crate::periodic::wrap_half_period(chi1 - d))
    }
}

/// Draw one pair from `rho`.
pub fn sample_pair<R: Rng + ?Sized>(rho: &PairDensity, rng: &mut R) -> (f64, f64) {
    PairSampler::new(rho).sample_pair(rng)
}

/// Outcome categories, per arm: `+` (or the single detector), `-`, none.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Port {
    Plus,
    Minus,
    None,
}

/// Per-pair outcome probabilities at one angle, `prob[a][b]` for ports
/// `a` of arm 1 and `b` of arm 2 in the order `+, -, none`.
fn outcome_table(mode: &SimMode, phi: f64, two_channel: bool) -> Result<[[f64; 3]; 3]> {
    let mut t = [[0.0; 3]; 3];
    match mode {
        SimMode::Qm { eta, v } => {
            let c = v * (2.0 * phi).cos();
            if two_channel {
                let same = eta * eta / 4.0 * (1.0 + c);
                let cross = eta * eta / 4.0 * (1.0 - c);
                let lone = eta / 2.0 * (1.0 - eta);
                t = [[same, cross, lone], [cross, same, lone], [lone, lone, (1.0 - eta).powi(2)]];
            } else {
                let p12 = eta * eta / 4.0 * (1.0 + c);
                let p1 = eta / 2.0;
                t[0][0] = p12;
                t[0][2] = p1 - p12;
                t[2][0] = p1 - p12;
                t[2][2] = 1.0 - 2.0 * p1 + p12;
            }
        }
        SimMode::Lhv(model) => {
            let rho = model.rho().clone();
            let ports = |p: &DetectionFn| -> Vec<DetectionFn> {
                if two_channel {
                    vec![p.clone(), p.orthogonal()]
                } else {
                    vec![p.clone()]
                }
            };
            let (a_ports, b_ports) = (ports(model.p1()), ports(model.p2()));
            let mut row = [0.0; 3];
            let mut col = [0.0; 3];
            for (i, a) in a_ports.iter().enumerate() {
                row[i] = ck_moment(a, 0) / PI;
                for (j, b) in b_ports.iter().enumerate() {
                    let m = LhvModel::new(rho.clone(), a.clone(), b.clone())?;
                    t[i][j] = m.coincidence_prob(phi).max(0.0);
                }
            }
            for (j, b) in b_ports.iter().enumerate() {
                col[j] = ck_moment(b, 0) / PI;
            }
            for i in 0..2 {
                t[i][2] = (row[i] - t[i][0] - t[i][1]).max(0.0);
                t[2][i] = (col[i] - t[0][i] - t[1][i]).max(0.0);
            }
            let used: f64 = t.iter().flatten().sum::<f64>() - t[2][2];
            t[2][2] = (1.0 - used).max(0.0);
        }
    }
    Ok(t)
}

fn tally(counts: &mut AngleCounts, a: Port, b: Port, two_channel: bool, n: u64) {
    if two_channel {
        let ch = counts.channels.get_or_insert_with(ChannelCounts::default);
        match (a, b) {
            (Port::Plus, Port::Plus) => ch.pp += n,
            (Port::Plus, Port::Minus) => ch.pm += n,
            (Port::Minus, Port::Plus) => ch.mp += n,
            (Port::Minus, Port::Minus) => ch.mm += n,
            _ => {}
        }
        match a {
            Port::Plus => ch.plus_1 += n,
            Port::Minus => ch.minus_1 += n,
            Port::None => {}
        }
        match b {
            Port::Plus => ch.plus_2 += n,
            Port::Minus => ch.minus_2 += n,
            Port::None => {}
        }
    }
    if a == Port::Plus {
        counts.singles_1 += n;
    }
    if b == Port::Plus {
        counts.singles_2 += n;
    }
    if a == Port::Plus && b == Port::Plus {
        counts.coincidences += n;
    }
}

fn merge(into: &mut AngleCounts, from: &AngleCounts) {
    into.singles_1 += from.singles_1;
    into.singles_2 += from.singles_2;
    into.coincidences += from.coincidences;
    if let Some(f) = &from.channels {
        let c = into.channels.get_or_insert_with(ChannelCounts::default);
        c.pp += f.pp;
        c.pm += f.pm;
        c.mp += f.mp;
        c.mm += f.mm;
        c.plus_1 += f.plus_1;
        c.minus_1 += f.minus_1;
        c.plus_2 += f.plus_2;
        c.minus_2 += f.minus_2;
    }
}

const PORTS: [Port; 3] = [Port::Plus, Port::Minus, Port::None];

fn empty_counts(two_channel: bool) -> AngleCounts {
    AngleCounts {
        channels: two_channel.then(ChannelCounts::default),
        ..Default::default()
    }
}

/// Detect one photon whose polarization makes angle `x` with the analyzer.
fn detect(rng: &mut ChaCha8Rng, plus: &DetectionFn, minus: Option<&DetectionFn>, x: f64) -> Port {
    let u: f64 = rng.random();
    let p = plus.eval(x);
    if u < p {
        return Port::Plus;
    }
    match minus {
        Some(m) if u < p + m.eval(x) => Port::Minus,
        _ => Port::None,
    }
}

fn simulate_chunk(config: &SimConfig, sampler: Option<&PairSampler>, table: &[[f64; 3]; 3], block: usize, chunk: u64) -> AngleCounts {
    let start = chunk * CHUNK_PAIRS;
    let len = CHUNK_PAIRS.min(config.pairs - start);
    let mut rng = substream(config.seed, block as u32, chunk as u32);
    let mut counts = empty_counts(config.two_channel);
    let phi = config.angles[block];
    match (&config.mode, sampler) {
        (SimMode::Lhv(model), Some(sampler)) => {
            let minus1 = config.two_channel.then(|| model.p1().orthogonal());
            let minus2 = config.two_channel.then(|| model.p2().orthogonal());
            let mut local = [[0u64; 3]; 3];
            for _ in 0..len {
                let (chi1, chi2) = sampler.sample_pair(&mut rng);
                let a = detect(&mut rng, model.p1(), minus1.as_ref(), chi1 - phi);
                let b = detect(&mut rng, model.p2(), minus2.as_ref(), chi2);
                local[a as usize][b as usize] += 1;
            }
            for (i, a) in PORTS.iter().enumerate() {
                for (j, b) in PORTS.iter().enumerate() {
                    tally(&mut counts, *a, *b, config.two_channel, local[i][j]);
                }
            }
        }
        _ => {
            let flat: Vec<f64> = table.iter().flatten().copied().collect();
            let mut cum = [0.0; 9];
            let mut acc = 0.0;
            for (c, p) in cum.iter_mut().zip(&flat) {
                acc += p;
                *c = acc;
            }
            let mut local = [0u64; 9];
            for _ in 0..len {
                let u: f64 = rng.random::<f64>() * acc;
                let k = cum.partition_point(|c| *c <= u).min(8);
                local[k] += 1;
            }
            for (k, n) in local.iter().enumerate() {
                tally(&mut counts, PORTS[k / 3], PORTS[k % 3], config.two_channel, *n);
            }
        }
    }
    counts
}

fn simulate_multinomial(config: &SimConfig, table: &[[f64; 3]; 3], block: usize) -> AngleCounts {
    let mut rng = substream(config.seed, block as u32, u32::MAX);
    let mut counts = empty_counts(config.two_channel);
    let mut remaining = config.pairs;
    let mut mass_left: f64 = table.iter().flatten().sum();
    for (k, p) in table.iter().flatten().enumerate() {
        if remaining == 0 {
            break;
        }
        let n = if k == 8 || mass_left <= 0.0 {
            remaining
        } else {
            let q = (p / mass_left).clamp(0.0, 1.0);
            Binomial::new(remaining, q).expect("valid probability").sample(&mut rng)
        };
        tally(&mut counts, PORTS[k / 3], PORTS[k % 3], config.two_channel, n);
        remaining -= n;
        mass_left -= p;
    }
    counts
}

/// Run the experiment: `pairs` emitted pairs at each angle. The result is a
/// function of the configuration and seed only, whatever the thread count.
pub fn simulate(config: &SimConfig) -> Result<CountData> {
    config.validate()?;
    let tables = config
        .angles
        .iter()
        .map(|phi| outcome_table(&config.mode, *phi, config.two_channel))
        .collect::<Result<Vec<_>>>()?;
    let counts = match config.method {
        SimMethod::Multinomial => (0..config.angles.len())
            .into_par_iter()
            .map(|b| simulate_multinomial(config, &tables[b], b))
            .collect(),
        SimMethod::Events => {
            let sampler = match &config.mode {
                SimMode::Lhv(model) => Some(PairSampler::new(model.rho())),
                SimMode::Qm { .. } => None,
            };
            let chunks = config.pairs.div_ceil(CHUNK_PAIRS);
            if chunks > u32::MAX as u64 {
                return Err(Error::InvalidConfig("too many pairs per angle".into()));
            }
            let jobs: Vec<(usize, u64)> = (0..config.angles.len())
                .flat_map(|b| (0..chunks).map(move |c| (b, c)))
                .collect();
            let parts: Vec<AngleCounts> = jobs
                .par_iter()
                .map(|&(b, c)| simulate_chunk(config, sampler.as_ref(), &tables[b], b, c))
                .collect();
            let mut out: Vec<AngleCounts> = (0..config.angles.len()).map(|_| empty_counts(config.two_channel)).collect();
            for ((b, _), part) in jobs.iter().zip(&parts) {
                merge(&mut out[*b], part);
            }
            out
        }
    };
    Ok(CountData {
        pairs: config.pairs,
        angles: config.angles.clone(),
        counts,
    })
}

/// `n` equally spaced angles `jπ/n`.
pub fn equally_spaced(n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64 * PI / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimal::{optimal_model, rho_optimal, OptimalModelParams};

    fn qm_config(pairs: u64, method: SimMethod, two_channel: bool) -> SimConfig {
        SimConfig {
            pairs,
            angles: equally_spaced(16),
            seed: 42,
            mode: SimMode::Qm { eta: 0.2, v: 0.98 },
            two_channel,
            method,
        }
    }

    #[test]
    fn validation() {
        let mut c = qm_config(0, SimMethod::Events, false);
        assert!(matches!(simulate(&c), Err(Error::InvalidConfig(_))));
        c.pairs = 10;
        c.angles.clear();
        assert!(matches!(simulate(&c), Err(Error::InvalidConfig(_))));
        let mut c = qm_config(10, SimMethod::Events, false);
        c.mode = SimMode::Qm { eta: 1.5, v: 0.9 };
        assert!(matches!(simulate(&c), Err(Error::EfficiencyOutOfRange(_))));
    }

    #[test]
    fn overlapping_channels_are_rejected() {
        let n = 64;
        let wide = DetectionFn::from_fn(n, |x| 0.8 * x.cos().powi(2) + 0.2, crate::model::Monotonicity::Strict).unwrap();
        let model = LhvModel::symmetric(PairDensity::uniform(n).unwrap(), wide).unwrap();
        let c = SimConfig {
            pairs: 10,
            angles: vec![0.0],
            seed: 1,
            mode: SimMode::Lhv(model),
            two_channel: true,
            method: SimMethod::Events,
        };
        assert!(matches!(simulate(&c), Err(Error::ChannelOverlap(_))));
    }

    #[test]
    fn uniform_density_gives_independent_angles() {
        let rho = PairDensity::uniform(2048).unwrap();
        let sampler = PairSampler::new(&rho);
        let mut rng = substream(9, 0, 0);
        let draws = 100_000;
        let mut a: Vec<f64> = Vec::with_capacity(draws);
        let mut b: Vec<f64> = Vec::with_capacity(draws);
        for _ in 0..draws {
            let (x, y) = sampler.sample_pair(&mut rng);
            a.push(x);
            b.push(y);
        }
        // Kolmogorov–Smirnov against the uniform law; 1.63/√n is the 1% level.
        let crit = 1.63 / (draws as f64).sqrt();
        for v in [&mut a, &mut b] {
            v.sort_by(f64::total_cmp);
            let d = v
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let f = (x + PI / 2.0) / PI;
                    (f - i as f64 / draws as f64).abs().max(((i + 1) as f64 / draws as f64 - f).abs())
                })
                .fold(0.0, f64::max);
            assert!(d < crit, "KS {d} ≥ {crit}");
        }
    }

    #[test]
    fn difference_follows_the_density() {
        let n = 2048;
        let rho = rho_optimal(&OptimalModelParams::new(0.2, 0.9).unwrap(), n).unwrap();
        let sampler = PairSampler::new(&rho);
        let mut rng = substream(10, 0, 0);
        let bins = 64;
        let per = n / bins;
        let h = PI / n as f64;
        let mut hist = vec![0u64; bins];
        let draws = 1_000_000;
        for _ in 0..draws {
            let d = sampler.sample_difference(&mut rng);
            let cell = (((d + PI / 2.0 + h / 2.0) / h).floor() as usize).min(n - 1);
            hist[cell / per] += 1;
        }
        let chi2: f64 = (0..bins)
            .map(|b| {
                let p: f64 = rho.function().samples()[b * per..(b + 1) * per].iter().sum::<f64>() * h * PI;
                let e = p * draws as f64;
                (hist[b] as f64 - e).powi(2) / e
            })
            .sum();
        // 99th percentile of χ² with 63 degrees of freedom.
        assert!(chi2 < 92.0, "χ² = {chi2}");
    }

    #[test]
    fn clipped_region_is_never_drawn() {
        let n = 2048;
        let rho = rho_optimal(&OptimalModelParams::new(0.2, 0.98).unwrap(), n).unwrap();
        let sampler = PairSampler::new(&rho);
        let h = PI / n as f64;
        let mut rng = substream(11, 0, 0);
        for _ in 0..200_000 {
            let d = sampler.sample_difference(&mut rng);
            let cell = (((d + PI / 2.0 + h / 2.0) / h).floor() as usize).min(n - 1);
            assert!(rho.function().samples()[cell] > 0.0);
        }
    }

    #[test]
    fn qm_table_is_a_distribution() {
        for tc in [false, true] {
            let t = outcome_table(&SimMode::Qm { eta: 0.3, v: 0.9 }, 0.4, tc).unwrap();
            let total: f64 = t.iter().flatten().sum();
            assert!((total - 1.0).abs() < 1e-15);
            assert!(t.iter().flatten().all(|p| *p >= 0.0));
        }
    }

    #[test]
    fn lhv_table_matches_model() {
        let p = OptimalModelParams::new(0.2, 0.98).unwrap();
        let model = optimal_model(&p, 512).unwrap();
        let t = outcome_table(&SimMode::Lhv(model.clone()), 0.3, true).unwrap();
        assert!((t.iter().flatten().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((t[0][0] - model.coincidence_prob(0.3)).abs() < 1e-15);
        // The minus port is the plus port rotated by π/2.
        assert!((t[0][1] - model.coincidence_prob(0.3 + PI / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn lhv_rates_match_quadrature() {
        let n = 2048;
        let p = OptimalModelParams::new(0.2, 0.9).unwrap();
        let model = optimal_model(&p, n).unwrap();
        let pairs = 1_000_000;
        let c = SimConfig {
            pairs,
            angles: equally_spaced(8),
            seed: 3,
            mode: SimMode::Lhv(model.clone()),
            two_channel: false,
            method: SimMethod::Events,
        };
        let data = simulate(&c).unwrap();
        for (phi, counts) in data.angles.iter().zip(&data.counts) {
            let expect = model.coincidence_prob(*phi);
            let got = counts.coincidences as f64 / pairs as f64;
            let sigma = (expect * (1.0 - expect) / pairs as f64).sqrt();
            assert!((got - expect).abs() < 5.0 * sigma, "φ={phi}: {got} vs {expect}");
            assert!(counts.coincidences <= counts.singles_1.min(counts.singles_2));
            let single = counts.singles_1 as f64 / pairs as f64;
            assert!((single - 0.1).abs() < 5.0 * (0.09 / pairs as f64).sqrt());
        }
    }

    #[test]
    fn two_channel_totals() {
        let p = OptimalModelParams::new(0.3, 0.95).unwrap();
        let model = optimal_model(&p, 512).unwrap();
        for method in [SimMethod::Events, SimMethod::Multinomial] {
            let c = SimConfig {
                pairs: 50_000,
                angles: equally_spaced(8),
                seed: 5,
                mode: SimMode::Lhv(model.clone()),
                two_channel: true,
                method,
            };
            let data = simulate(&c).unwrap();
            for counts in &data.counts {
                let ch = counts.channels.as_ref().unwrap();
                assert!(ch.pp + ch.pm <= ch.plus_1);
                assert!(ch.plus_1 + ch.minus_1 <= c.pairs);
                assert!(ch.plus_2 + ch.minus_2 <= c.pairs);
                assert_eq!(counts.coincidences, ch.pp);
                assert!(ch.pp + ch.pm + ch.mp + ch.mm <= ch.plus_1 + ch.minus_1);
            }
            let tc = data.two_channel_rates().unwrap();
            assert_eq!(tc.n(), 8);
        }
    }

    #[test]
    fn methods_agree_statistically() {
        let ev = simulate(&qm_config(200_000, SimMethod::Events, false)).unwrap();
        let mn = simulate(&qm_config(200_000, SimMethod::Multinomial, false)).unwrap();
        for (a, b) in ev.counts.iter().zip(&mn.counts) {
            let s = (a.coincidences as f64 + b.coincidences as f64).sqrt();
            assert!((a.coincidences as f64 - b.coincidences as f64).abs() < 5.0 * s.max(1.0));
        }
    }

    #[test]
    fn seed_determinism_across_thread_counts() {
        let p = OptimalModelParams::new(0.2, 0.98).unwrap();
        let model = optimal_model(&p, 512).unwrap();
        let c = SimConfig {
            pairs: 3 * CHUNK_PAIRS / 2,
            angles: equally_spaced(4),
            seed: 77,
            mode: SimMode::Lhv(model),
            two_channel: true,
            method: SimMethod::Events,
        };
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate(&c).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_ne!(one, simulate(&SimConfig { seed: 78, ..c.clone() }).unwrap());
    }

    #[test]
    fn rate_series_from_counts() {
        let data = simulate(&qm_config(10_000, SimMethod::Multinomial, false)).unwrap();
        let r = data.rate_series().unwrap();
        assert_eq!(r.n(), 16);
        assert!(r.uncertainties().is_some());
    }
}
