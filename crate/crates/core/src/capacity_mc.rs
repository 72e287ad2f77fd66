//! Monte Carlo estimators for the information terms of the bound
//! decomposition.
//!
//! Every estimator draws its samples in fixed leaves of [`LEAF_SAMPLES`].
//! Leaf `i` uses block `i` of the configured random stream and its moments
//! are merged pairwise in leaf order, so the result depends only on
//! `(inputs, stream, samples)`: not on `chunk_size`, not on the number of
//! rayon workers.

use std::f64::consts::{LN_2, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::numerics::{complex_normal, ln_i0, lse, RandomStreamSpec};

pub const LEAF_SAMPLES: usize = 1024;

/// Operating point: `E_s/N_0` in dB with `sigma^2 = N_0 / 2` per component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub snr_db: f64,
    pub n0: f64,
    pub sigma_sq: f64,
}

impl ChannelParams {
    pub fn from_snr_db(snr_db: f64, avg_energy: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::param("snr_db", format!("must be finite, got {snr_db}")));
        }
        if !(avg_energy.is_finite() && avg_energy > 0.0) {
            return Err(Error::param("avg_energy", format!("must be finite and positive, got {avg_energy}")));
        }
        let n0 = avg_energy / 10f64.powf(snr_db / 10.0);
        Ok(Self { snr_db, n0, sigma_sq: n0 / 2.0 })
    }

    /// Unit average energy, the convention used throughout.
    pub fn new(snr_db: f64) -> Result<Self> {
        Self::from_snr_db(snr_db, 1.0)
    }

    /// Same signal, SNR multiplied by `factor` (noise variance divided by it).
    pub fn snr_scaled(&self, factor: f64) -> Self {
        Self {
            snr_db: self.snr_db + 10.0 * factor.log10(),
            n0: self.n0 / factor,
            sigma_sq: self.sigma_sq / factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub stream: RandomStreamSpec,
    /// Samples per parallel task; rounded up to whole leaves.
    pub chunk_size: usize,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self { samples, stream: RandomStreamSpec::new(seed, 0), chunk_size: 16 * LEAF_SAMPLES }
    }

    pub fn with_stream(&self, stream: RandomStreamSpec) -> Self {
        Self { stream, ..*self }
    }

    /// Same config on the child stream `tag`.
    pub fn derive(&self, tag: u64) -> Self {
        self.with_stream(self.stream.derive(tag))
    }

    pub fn with_chunk_size(&self, chunk_size: usize) -> Self {
        Self { chunk_size, ..*self }
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::param("samples", "at least one Monte Carlo sample is required"));
        }
        if self.chunk_size == 0 {
            return Err(Error::param("chunk_size", "must be positive"));
        }
        Ok(())
    }
}

/// Monte Carlo mean in bits with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub mean_bits: f64,
    pub std_error: f64,
    pub samples_used: u64,
}

impl CapacityEstimate {
    pub fn exact(mean_bits: f64) -> Self {
        Self { mean_bits, std_error: 0.0, samples_used: 0 }
    }

    /// Mean clamped to `[0, max_bits]` for display; the raw estimate is untouched.
    pub fn clamped(&self, max_bits: f64) -> f64 {
        self.mean_bits.clamp(0.0, max_bits)
    }

    pub(crate) fn scaled(&self, factor: f64) -> Self {
        Self { mean_bits: self.mean_bits * factor, std_error: self.std_error * factor.abs(), ..*self }
    }

    /// Weighted mean of independent estimates.
    pub(crate) fn weighted(parts: &[(f64, CapacityEstimate)]) -> Self {
        let mean_bits = parts.iter().map(|(w, e)| w * e.mean_bits).sum();
        let var: f64 = parts.iter().map(|(w, e)| (w * e.std_error).powi(2)).sum();
        let samples_used = parts.iter().map(|(_, e)| e.samples_used).sum();
        Self { mean_bits, std_error: var.sqrt(), samples_used }
    }
}

/// Root-sum-square of independent standard errors.
pub fn combined_se(errors: &[f64]) -> f64 {
    errors.iter().map(|e| e * e).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    const EMPTY: Moments = Moments { n: 0, mean: 0.0, m2: 0.0 };

    #[inline]
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0 {
            return b;
        }
        if b.n == 0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        let wb = b.n as f64 / n as f64;
        Moments {
            n,
            mean: a.mean + d * wb,
            m2: a.m2 + b.m2 + d * d * a.n as f64 * wb,
        }
    }
}

fn tree_merge(leaves: &[Moments]) -> Moments {
    match leaves.len() {
        0 => Moments::EMPTY,
        1 => leaves[0],
        n => Moments::merge(tree_merge(&leaves[..n / 2]), tree_merge(&leaves[n / 2..])),
    }
}

/// Runs `mc.samples` draws of a per-sample integrand.
///
/// `make` builds a fresh sampler per leaf so samplers may own scratch space.
pub(crate) fn run_mc<M, S>(mc: &McConfig, what: &'static str, make: M) -> Result<CapacityEstimate>
where
    M: Fn() -> S + Sync,
    S: FnMut(&mut ChaCha8Rng) -> f64,
{
    mc.validate()?;
    let n_leaves = mc.samples.div_ceil(LEAF_SAMPLES);
    let leaves_per_task = mc.chunk_size.div_ceil(LEAF_SAMPLES);
    let leaves: Vec<Moments> = (0..n_leaves)
        .into_par_iter()
        .with_min_len(leaves_per_task)
        .map(|leaf| {
            let count = LEAF_SAMPLES.min(mc.samples - leaf * LEAF_SAMPLES);
            let mut rng = mc.stream.rng(leaf as u64);
            let mut sample = make();
            let mut m = Moments::EMPTY;
            for _ in 0..count {
                m.push(sample(&mut rng));
            }
            m
        })
        .collect();
    let total = tree_merge(&leaves);
    if !total.mean.is_finite() {
        return Err(Error::NonFinite(what));
    }
    let std_error = if total.n > 1 {
        (total.m2 / (total.n - 1) as f64).sqrt() / (total.n as f64).sqrt()
    } else {
        0.0
    };
    Ok(CapacityEstimate { mean_bits: total.mean, std_error, samples_used: total.n })
}

/// One draw of the coherent-capacity integrand in bits:
/// `log2 M - log2 sum_j exp((|n|^2 - |s_k + n - s_j|^2) / (2 sigma^2))`.
#[inline]
fn coherent_integrand(points: &[Complex64], k: usize, noise: Complex64, inv_two_var: f64, buf: &mut [f64]) -> f64 {
    let nn = noise.norm_sqr();
    let sk = points[k] + noise;
    for (b, sj) in buf.iter_mut().zip(points) {
        *b = (nn - (sk - sj).norm_sqr()) * inv_two_var;
    }
    ((points.len() as f64).ln() - lse(buf)) / LN_2
}

/// One draw of `log2 p(r|theta) / p(r)` for `r = a e^{j theta} + n`, theta
/// continuous uniform.
#[inline]
fn phase_integrand(amplitude: f64, theta: f64, noise: Complex64, sigma_sq: f64) -> f64 {
    let r = Complex64::from_polar(amplitude, theta) + noise;
    let rr = r.norm_sqr();
    ((rr + amplitude * amplitude - noise.norm_sqr()) / (2.0 * sigma_sq) - ln_i0(amplitude * rr.sqrt() / sigma_sq)) / LN_2
}

fn check_channel(ch: &ChannelParams) -> Result<()> {
    if !(ch.sigma_sq.is_finite() && ch.sigma_sq > 0.0) {
        return Err(Error::param("sigma_sq", format!("must be finite and positive, got {}", ch.sigma_sq)));
    }
    Ok(())
}

/// Uniform-input AMI of `c` over the coherent AWGN channel, bits/symbol.
pub fn coherent_capacity(c: &Constellation, ch: &ChannelParams, mc: &McConfig) -> Result<CapacityEstimate> {
    check_channel(ch)?;
    let points = c.points();
    let m = points.len();
    let sd = ch.sigma_sq.sqrt();
    let inv_two_var = 0.5 / ch.sigma_sq;
    run_mc(mc, "coherent capacity", || {
        let mut buf = vec![0.0; m];
        move |rng: &mut ChaCha8Rng| {
            let k = rng.random_range(0..m);
            let n = complex_normal(rng, sd);
            coherent_integrand(points, k, n, inv_two_var, &mut buf)
        }
    })
}

/// Coherent capacity of `phases`-PSK at `amplitude`; equals the information
/// a received symbol of that amplitude carries about a phase uniform over
/// the same `phases` values.
pub fn psk_phase_info_discrete(amplitude: f64, phases: usize, ch: &ChannelParams, mc: &McConfig) -> Result<CapacityEstimate> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::param("amplitude", format!("must be finite and non-negative, got {amplitude}")));
    }
    if phases < 2 {
        return Err(Error::param("phases", format!("need at least 2 phases, got {phases}")));
    }
    coherent_capacity(&Constellation::psk(amplitude, phases), ch, mc)
}

/// Information a symbol of known amplitude carries about a continuous
/// uniform phase (the phase-modulated coherent channel).
pub fn phase_info_continuous(amplitude: f64, ch: &ChannelParams, mc: &McConfig) -> Result<CapacityEstimate> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::param("amplitude", format!("must be finite and non-negative, got {amplitude}")));
    }
    check_channel(ch)?;
    let sd = ch.sigma_sq.sqrt();
    let var = ch.sigma_sq;
    run_mc(mc, "continuous phase information", || {
        move |rng: &mut ChaCha8Rng| {
            let theta = rng.random::<f64>() * TAU;
            let n = complex_normal(rng, sd);
            phase_integrand(amplitude, theta, n, var)
        }
    })
}

/// How the unknown phase is distributed when evaluating a phase term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaModel {
    /// Uniform over the `P` ring phases (upper bound).
    Discrete,
    /// Uniform on `[0, 2 pi)` (lower bound).
    Continuous,
}

impl std::str::FromStr for ThetaModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discrete" => Ok(ThetaModel::Discrete),
            "continuous" => Ok(ThetaModel::Continuous),
            other => Err(Error::param("theta_model", format!("expected `discrete` or `continuous`, got `{other}`"))),
        }
    }
}

/// Evaluation of the phase information given the whole input block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockTerm {
    /// Per-ring single-symbol term at `L` times the SNR, averaged with weight `1/N`.
    #[default]
    Literal,
    /// Effective amplitude `||A||` of an i.i.d. amplitude block at the base SNR.
    ExactBlock,
}

fn per_amplitude(amplitude: f64, phases: usize, ch: &ChannelParams, model: ThetaModel, mc: &McConfig) -> Result<CapacityEstimate> {
    match model {
        ThetaModel::Discrete => psk_phase_info_discrete(amplitude, phases, ch, mc),
        ThetaModel::Continuous => phase_info_continuous(amplitude, ch, mc),
    }
}

/// `sum_k (1/N) I(theta; r | a = a_k)`; ring `k` runs on child stream `k`.
fn ring_average(c: &Constellation, ch: &ChannelParams, model: ThetaModel, mc: &McConfig) -> Result<CapacityEstimate> {
    let w = 1.0 / c.n_rings() as f64;
    let parts = c
        .ring_amplitudes()
        .into_iter()
        .enumerate()
        .map(|(k, a)| per_amplitude(a, c.phases_per_ring(), ch, model, &mc.derive(k as u64)).map(|e| (w, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CapacityEstimate::weighted(&parts))
}

/// `I(theta; r_0)`: the reference symbol's phase information averaged over
/// ring amplitudes.
pub fn phase_info_r0(c: &Constellation, ch: &ChannelParams, model: ThetaModel, mc: &McConfig) -> Result<CapacityEstimate> {
    check_channel(ch)?;
    ring_average(c, ch, model, mc)
}

/// `I(theta; R | S)` for a block of `block_len` symbols.
pub fn phase_info_given_s(
    c: &Constellation,
    block_len: usize,
    ch: &ChannelParams,
    model: ThetaModel,
    term: BlockTerm,
    mc: &McConfig,
) -> Result<CapacityEstimate> {
    if block_len < 2 {
        return Err(Error::BlockLength(block_len));
    }
    check_channel(ch)?;
    given_s_unchecked(c, block_len, ch, model, term, mc)
}

pub(crate) fn given_s_unchecked(
    c: &Constellation,
    block_len: usize,
    ch: &ChannelParams,
    model: ThetaModel,
    term: BlockTerm,
    mc: &McConfig,
) -> Result<CapacityEstimate> {
    match term {
        BlockTerm::Literal => ring_average(c, &ch.snr_scaled(block_len as f64), model, mc),
        BlockTerm::ExactBlock => exact_block_phase_info(c, block_len, ch, model, mc),
    }
}

fn exact_block_phase_info(
    c: &Constellation,
    block_len: usize,
    ch: &ChannelParams,
    model: ThetaModel,
    mc: &McConfig,
) -> Result<CapacityEstimate> {
    let energies: Vec<f64> = c.ring_amplitudes().iter().map(|a| a * a).collect();
    let n_rings = energies.len();
    let phases = c.phases_per_ring();
    let sd = ch.sigma_sq.sqrt();
    let var = ch.sigma_sq;
    let unit: Vec<Complex64> = Constellation::psk(1.0, phases).points().to_vec();
    let energies = &energies;
    let unit = &unit;
    run_mc(mc, "block phase information", || {
        let mut scaled = vec![Complex64::new(0.0, 0.0); phases];
        let mut buf = vec![0.0; phases];
        move |rng: &mut ChaCha8Rng| {
            let block_energy: f64 = (0..block_len).map(|_| energies[rng.random_range(0..n_rings)]).sum();
            let a = block_energy.sqrt();
            match model {
                ThetaModel::Discrete => {
                    for (s, u) in scaled.iter_mut().zip(unit) {
                        *s = u * a;
                    }
                    let k = rng.random_range(0..phases);
                    let n = complex_normal(rng, sd);
                    coherent_integrand(&scaled, k, n, 0.5 / var, &mut buf)
                }
                ThetaModel::Continuous => {
                    let theta = rng.random::<f64>() * TAU;
                    let n = complex_normal(rng, sd);
                    phase_integrand(a, theta, n, var)
                }
            }
        }
    })
}
