//! Monte Carlo disorder averaging.
//!
//! Each draw produces one [`DisorderRealization`]: per-channel magnitudes and
//! phases of the transmission and reflection coefficients plus one aggregated
//! spontaneous-emission mode. Per-realization variances are evaluated from the
//! unaveraged second-moment expressions and then averaged over draws, which
//! gives an estimate of the ensemble averages in [`crate::analytic`] that does
//! not share any of its algebra.
//!
//! # Random numbers
//!
//! Draw `k` of a run with seed `s` uses ChaCha8 keyed by `s` on stream `k`
//! (`ChaCha8Rng::seed_from_u64(s)` followed by `set_stream(k)`), consuming, in
//! order: `N` transmission phases, `N` reflection phases, one spontaneous
//! phase, and in exponential mode `N` transmission then `N` reflection
//! exponential variates. The map `(seed, k) → realization` is therefore pure
//! and independent of how draws are scheduled across threads.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::analytic::{mean_coefficients, Quantity, Shaping};
use crate::error::{Error, Result};
use crate::medium::{EnsembleCoefficients, InputState, MediumSpec};

/// Quadrature variance of the vacuum modes feeding the right-hand side and
/// the spontaneous-emission channels.
const ANCILLA_VARIANCE: f64 = 1.0;

/// Draws folded into one partial sum before the ordered reduction.
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMode {
    /// Magnitudes pinned at their ensemble means; only phases fluctuate.
    #[default]
    MeanMagnitudes,
    /// Speckle-like per-channel magnitudes: i.i.d. exponential weights
    /// normalised within the transmission and reflection groups, so each
    /// channel keeps its ensemble mean and every draw conserves flux.
    ExponentialMagnitudes,
}

impl std::str::FromStr for SamplerMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mean" | "mean-magnitudes" => Ok(Self::MeanMagnitudes),
            "exponential" | "exponential-magnitudes" => Ok(Self::ExponentialMagnitudes),
            _ => Err(format!("unknown sampler `{s}` (expected `mean` or `exponential`)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub mode: SamplerMode,
    pub realizations: u64,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(mode: SamplerMode, realizations: u64, seed: u64) -> Self {
        Self {
            mode,
            realizations,
            seed,
        }
    }
}

/// One draw of the scattering coefficients coupling into output mode `b`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DisorderRealization {
    pub trans_mags: Vec<f64>,
    pub trans_phases: Vec<f64>,
    pub refl_mags: Vec<f64>,
    pub refl_phases: Vec<f64>,
    pub spont_mag: f64,
    pub spont_phase: f64,
}

impl DisorderRealization {
    /// `ΣT + ΣR − V − 1`
    pub fn flux_residual(&self) -> f64 {
        self.trans_mags.iter().sum::<f64>() + self.refl_mags.iter().sum::<f64>()
            - self.spont_mag
            - 1.0
    }
}

/// Reusable generator of realizations for a fixed medium and configuration.
#[derive(Debug, Clone)]
pub struct Sampler {
    channels: usize,
    coef: EnsembleCoefficients,
    mode: SamplerMode,
    base: ChaCha8Rng,
}

impl Sampler {
    pub fn new(spec: &MediumSpec, mode: SamplerMode, seed: u64) -> Result<Self> {
        let coef = mean_coefficients(spec)?;
        Ok(Self {
            channels: spec.channels,
            coef,
            mode,
            base: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn coefficients(&self) -> &EnsembleCoefficients {
        &self.coef
    }

    pub fn sample(&self, draw_index: u64) -> DisorderRealization {
        let mut real = DisorderRealization::default();
        self.sample_into(draw_index, &mut real);
        real
    }

    /// Overwrites `real` with draw `draw_index`, reusing its buffers.
    pub fn sample_into(&self, draw_index: u64, real: &mut DisorderRealization) {
        let n = self.channels;
        let mut rng = self.base.clone();
        rng.set_stream(draw_index);

        fill_phases(&mut rng, n, &mut real.trans_phases);
        fill_phases(&mut rng, n, &mut real.refl_phases);
        real.spont_phase = uniform_phase(&mut rng);
        real.spont_mag = self.coef.v_bar;

        match self.mode {
            SamplerMode::MeanMagnitudes => {
                fill_const(&mut real.trans_mags, n, self.coef.t_bar / n as f64);
                fill_const(&mut real.refl_mags, n, self.coef.r_bar / n as f64);
            }
            SamplerMode::ExponentialMagnitudes => {
                fill_normalised_exp(&mut rng, n, self.coef.t_bar, &mut real.trans_mags);
                fill_normalised_exp(&mut rng, n, self.coef.r_bar, &mut real.refl_mags);
            }
        }
    }
}

fn uniform_phase(rng: &mut ChaCha8Rng) -> f64 {
    let phi = rng.random::<f64>() * TAU;
    if phi >= TAU {
        0.0
    } else {
        phi
    }
}

fn fill_phases(rng: &mut ChaCha8Rng, n: usize, out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..n).map(|_| uniform_phase(rng)));
}

fn fill_const(out: &mut Vec<f64>, n: usize, value: f64) {
    out.clear();
    out.resize(n, value);
}

fn fill_normalised_exp(rng: &mut ChaCha8Rng, n: usize, total: f64, out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..n).map(|_| rng.sample::<f64, _>(Exp1)));
    let sum: f64 = out.iter().sum();
    // Exp1 is strictly positive with probability one, but guard the division.
    if sum > 0.0 {
        out.iter_mut().for_each(|w| *w *= total / sum);
    } else {
        out.iter_mut().for_each(|w| *w = total / n as f64);
    }
}

/// Draw `draw_index` of the run described by `config`.
pub fn sample_realization(
    spec: &MediumSpec,
    config: &SamplerConfig,
    draw_index: u64,
) -> Result<DisorderRealization> {
    Ok(Sampler::new(spec, config.mode, config.seed)?.sample(draw_index))
}

/// Variance contribution `w·[cos²φ Var(x̂) + sin²φ Var(p̂) − 2 cosφ sinφ cov(x̂,p̂)]`
/// of one input mode entering through coefficient magnitude `w` and phase `φ`.
/// All inputs here have zero `x̂p̂` covariance.
fn rotated(weight: f64, phase: f64, var_x: f64, var_p: f64) -> f64 {
    // An isotropic state is invariant under phase rotation.
    if var_x == var_p {
        return weight * var_x;
    }
    let (s, c) = phase.sin_cos();
    weight * (c * c * var_x + s * s * var_p)
}

/// Reflection and spontaneous-emission contribution. These channels carry
/// vacuum and keep their random phases under shaping; the same weight enters
/// `x̂` and `p̂`.
fn ancilla(real: &DisorderRealization) -> f64 {
    let refl: f64 = real
        .refl_mags
        .iter()
        .zip(&real.refl_phases)
        .map(|(&w, &phi)| rotated(w, phi, ANCILLA_VARIANCE, ANCILLA_VARIANCE))
        .sum();
    refl + rotated(
        real.spont_mag,
        real.spont_phase,
        ANCILLA_VARIANCE,
        ANCILLA_VARIANCE,
    )
}

/// `x̂_b^w` variance for one realization: the shaped transmission channels
/// add in phase and carry only the squeezed input quadrature.
pub fn variance_x_wfs_single(real: &DisorderRealization, input: &InputState) -> f64 {
    let var_x = input.x_variance();
    let trans: f64 = real.trans_mags.iter().map(|&w| w * var_x).sum();
    trans + ancilla(real)
}

/// `x̂_b` variance for one realization without shaping.
pub fn variance_x_nowfs_single(real: &DisorderRealization, input: &InputState) -> f64 {
    let (var_x, var_p) = (input.x_variance(), input.p_variance());
    let trans: f64 = real
        .trans_mags
        .iter()
        .zip(&real.trans_phases)
        .map(|(&w, &phi)| rotated(w, phi, var_x, var_p))
        .sum();
    trans + ancilla(real)
}

/// `p̂_b` (or `p̂_b^w`) variance for one realization.
pub fn variance_p_single(real: &DisorderRealization, input: &InputState, shaping: Shaping) -> f64 {
    let (var_x, var_p) = (input.x_variance(), input.p_variance());
    let trans: f64 = match shaping {
        Shaping::Shaped => real.trans_mags.iter().map(|&w| w * var_p).sum(),
        Shaping::Unshaped => real
            .trans_mags
            .iter()
            .zip(&real.trans_phases)
            // p̂ picks up sinφ·x̂ + cosφ·p̂
            .map(|(&w, &phi)| rotated(w, phi, var_p, var_x))
            .sum(),
    };
    trans + ancilla(real)
}

pub fn variance_single(real: &DisorderRealization, input: &InputState, which: Quantity) -> f64 {
    match which {
        Quantity::XWfs => variance_x_wfs_single(real, input),
        Quantity::XNoWfs => variance_x_nowfs_single(real, input),
        Quantity::PWfs => variance_p_single(real, input, Shaping::Shaped),
        Quantity::PNoWfs => variance_p_single(real, input, Shaping::Unshaped),
    }
}

/// Mean output quadratures `(⟨x̂_b^w⟩, ⟨p̂_b^w⟩) = Σ√T_{a'} (⟨x̂_in⟩, ⟨p̂_in⟩)`
/// under shaping; reflected and spontaneous modes are vacuum and contribute
/// nothing.
pub fn mean_amplitude_check(real: &DisorderRealization, input: &InputState) -> (f64, f64) {
    let (mx, mp) = input.mean_quadratures();
    let amp: f64 = real.trans_mags.iter().map(|w| w.sqrt()).sum();
    (amp * mx, amp * mp)
}

/// Sample mean and standard error over `realizations` draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub realizations: u64,
}

/// Relative floor added to every σ comparison to absorb summation rounding
/// in integrands that are constant up to a few ulps.
pub const ROUNDING_FLOOR: f64 = 1e-12;

impl McEstimate {
    /// `|mean − target| ≤ n_sigma·std_error + ROUNDING_FLOOR·max(1, |target|)`
    pub fn agrees_with(&self, target: f64, n_sigma: f64) -> bool {
        (self.mean - target).abs() <= n_sigma * self.std_error + ROUNDING_FLOOR * target.abs().max(1.0)
    }

    /// Distance from `target` in units of the standard error. Zero spread
    /// gives `0` on an exact match and `inf` otherwise.
    pub fn sigma_distance(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

// Shifted sums: values are accumulated relative to a fixed reference so that
// a constant integrand yields exactly zero spread.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, d: f64) {
        self.count += 1;
        self.sum += d;
        self.sum_sq += d * d;
    }

    fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    fn estimate(&self, shift: f64) -> McEstimate {
        let k = self.count as f64;
        let mean_d = self.sum / k;
        let var = ((self.sum_sq - self.sum * mean_d) / (k - 1.0)).max(0.0);
        McEstimate {
            mean: shift + mean_d,
            std_error: (var / k).sqrt(),
            realizations: self.count,
        }
    }
}

/// Runs `body` over chunk indices `0..chunks`, in parallel when enabled, and
/// returns the per-chunk results in index order.
fn map_chunks<T, F>(chunks: u64, body: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(body).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..chunks).map(body).collect()
    }
}

/// Monte Carlo estimates of all four variances from one shared set of draws,
/// ordered as [`Quantity::ALL`].
///
/// The result is bit-identical for a fixed configuration regardless of the
/// number of worker threads: draws are grouped into fixed-size chunks and the
/// chunk sums are reduced in index order.
pub fn mc_average_all(
    spec: &MediumSpec,
    input: &InputState,
    config: &SamplerConfig,
) -> Result<[McEstimate; 4]> {
    if config.realizations < 2 {
        return Err(Error::TooFewRealizations {
            min: 2,
            got: config.realizations,
        });
    }
    let sampler = Sampler::new(spec, config.mode, config.seed)?;
    let k = config.realizations;

    let first = sampler.sample(0);
    let shift = Quantity::ALL.map(|q| variance_single(&first, input, q));

    let chunks = k.div_ceil(CHUNK);
    let partials = map_chunks(chunks, |c| {
        let mut acc = [Moments::default(); 4];
        let mut real = DisorderRealization::default();
        for draw in c * CHUNK..((c + 1) * CHUNK).min(k) {
            sampler.sample_into(draw, &mut real);
            for (i, q) in Quantity::ALL.into_iter().enumerate() {
                acc[i].push(variance_single(&real, input, q) - shift[i]);
            }
        }
        acc
    });

    let mut total = [Moments::default(); 4];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(std::array::from_fn(|i| total[i].estimate(shift[i])))
}

/// Monte Carlo estimate of one ensemble-averaged variance.
pub fn mc_average(
    spec: &MediumSpec,
    input: &InputState,
    config: &SamplerConfig,
    which: Quantity,
) -> Result<McEstimate> {
    let all = mc_average_all(spec, input, config)?;
    let idx = Quantity::ALL.iter().position(|&q| q == which).unwrap();
    Ok(all[idx])
}

/// Empirical phase statistics and worst flux residual over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawDiagnostics {
    pub mean_cos_sq: f64,
    pub mean_sin_sq: f64,
    pub mean_sin_cos: f64,
    pub phases: u64,
    pub max_flux_residual: f64,
}

/// Averages `cos²φ`, `sin²φ`, `sinφ cosφ` over every drawn phase
/// (transmission, reflection and spontaneous) and records the largest
/// per-realization flux residual.
pub fn draw_diagnostics(spec: &MediumSpec, config: &SamplerConfig) -> Result<DrawDiagnostics> {
    let sampler = Sampler::new(spec, config.mode, config.seed)?;
    let k = config.realizations;
    let chunks = k.div_ceil(CHUNK);
    let partials = map_chunks(chunks, |c| {
        let mut sums = [0.0f64; 3];
        let mut count = 0u64;
        let mut worst = 0.0f64;
        let mut real = DisorderRealization::default();
        for draw in c * CHUNK..((c + 1) * CHUNK).min(k) {
            sampler.sample_into(draw, &mut real);
            let phases = real
                .trans_phases
                .iter()
                .chain(&real.refl_phases)
                .chain(std::iter::once(&real.spont_phase));
            for &phi in phases {
                let (s, c) = phi.sin_cos();
                sums[0] += c * c;
                sums[1] += s * s;
                sums[2] += s * c;
                count += 1;
            }
            worst = worst.max(real.flux_residual().abs());
        }
        (sums, count, worst)
    });

    let mut sums = [0.0f64; 3];
    let mut count = 0u64;
    let mut worst = 0.0f64;
    for (s, n, w) in &partials {
        for (acc, v) in sums.iter_mut().zip(s) {
            *acc += v;
        }
        count += n;
        worst = worst.max(*w);
    }
    let n = count.max(1) as f64;
    Ok(DrawDiagnostics {
        mean_cos_sq: sums[0] / n,
        mean_sin_sq: sums[1] / n,
        mean_sin_cos: sums[2] / n,
        phases: count,
        max_flux_residual: worst,
    })
}
