//! Brute-force block mutual information for small alphabets and blocks.
//!
//! The channel is `r_l = s_l e^{j theta} + n_l`, `l = 0..L-1`, with `theta`
//! uniform on `[0, 2 pi)`. Averaging over `theta` gives the closed form
//!
//! ```text
//! ln P(R|S) = -L ln(2 pi s2) - sum_l (|r_l|^2 + |s_l|^2) / (2 s2)
//!             + ln I0(|sum_l r_l conj(s_l)| / s2)
//! ```
//!
//! and the output density is the input average of `P(R|S)` over every
//! candidate block. [`log_likelihood_block_quadrature`] integrates `theta`
//! numerically instead and is kept as the independent check of the closed
//! form.

use std::f64::consts::{LN_2, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capacity_mc::{run_mc, CapacityEstimate, ChannelParams, McConfig};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::numerics::{complex_normal, ln_i0, lse, OnlineLse};

pub const DEFAULT_BUDGET: u64 = 65_536;

/// One channel use of a block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSample {
    pub s: Vec<Complex64>,
    pub theta: f64,
    pub noise: Vec<Complex64>,
    pub received: Vec<Complex64>,
}

impl BlockSample {
    pub fn new(s: Vec<Complex64>, theta: f64, noise: Vec<Complex64>) -> Result<Self> {
        if s.len() != noise.len() {
            return Err(Error::LengthMismatch { received: noise.len(), input: s.len() });
        }
        let rot = Complex64::from_polar(1.0, theta);
        let received = s.iter().zip(&noise).map(|(s, n)| s * rot + n).collect();
        Ok(Self { s, theta, noise, received })
    }

    /// Uniform inputs from `c`, uniform phase and Gaussian noise of variance
    /// `sigma_sq` per component. Returns the input indices alongside.
    pub fn draw<R: Rng + ?Sized>(c: &Constellation, block_len: usize, sigma_sq: f64, rng: &mut R) -> (Vec<usize>, Self) {
        let m = c.size();
        let idx: Vec<usize> = (0..block_len).map(|_| rng.random_range(0..m)).collect();
        let theta = rng.random::<f64>() * TAU;
        let sd = sigma_sq.sqrt();
        let noise: Vec<Complex64> = (0..block_len).map(|_| complex_normal(rng, sd)).collect();
        let s = idx.iter().map(|&i| c.points()[i]).collect();
        let sample = Self::new(s, theta, noise).expect("lengths match by construction");
        (idx, sample)
    }
}

fn check_block(r: &[Complex64], s: &[Complex64], sigma_sq: f64) -> Result<()> {
    if r.len() != s.len() {
        return Err(Error::LengthMismatch { received: r.len(), input: s.len() });
    }
    if r.is_empty() {
        return Err(Error::param("r", "block must contain at least one symbol"));
    }
    if !(sigma_sq.is_finite() && sigma_sq > 0.0) {
        return Err(Error::param("sigma_sq", format!("must be finite and positive, got {sigma_sq}")));
    }
    Ok(())
}

/// `ln P(R|S)` with the phase integrated out in closed form.
pub fn log_likelihood_block(r: &[Complex64], s: &[Complex64], sigma_sq: f64) -> Result<f64> {
    check_block(r, s, sigma_sq)?;
    let l = r.len() as f64;
    let energy: f64 = r.iter().zip(s).map(|(r, s)| r.norm_sqr() + s.norm_sqr()).sum();
    let corr: Complex64 = r.iter().zip(s).map(|(r, s)| r * s.conj()).sum();
    Ok(-l * (2.0 * PI * sigma_sq).ln() - energy / (2.0 * sigma_sq) + ln_i0(corr.norm() / sigma_sq))
}

/// `ln P(R|S)` by trapezoidal integration over the phase: 256 nodes, doubled
/// until successive values differ by less than 1e-8.
pub fn log_likelihood_block_quadrature(r: &[Complex64], s: &[Complex64], sigma_sq: f64) -> Result<f64> {
    check_block(r, s, sigma_sq)?;
    let l = r.len() as f64;
    let norm = -l * (2.0 * PI * sigma_sq).ln();
    let eval = |nodes: usize| -> f64 {
        let logs: Vec<f64> = (0..nodes)
            .map(|i| {
                let rot = Complex64::from_polar(1.0, TAU * i as f64 / nodes as f64);
                let d: f64 = r.iter().zip(s).map(|(r, s)| (r - s * rot).norm_sqr()).sum();
                norm - d / (2.0 * sigma_sq)
            })
            .collect();
        lse(&logs) - (nodes as f64).ln()
    };
    let mut nodes = 256;
    let mut prev = eval(nodes);
    while nodes < 1 << 20 {
        nodes *= 2;
        let next = eval(nodes);
        if (next - prev).abs() < 1e-8 {
            return Ok(next);
        }
        prev = next;
    }
    Ok(prev)
}

/// What the receiver knows about the first symbol of a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceSymbol {
    /// `s_0` is the symbol shared with the previous block and is known:
    /// `I(S; R | s_0)`, the quantity the overlap normalization counts.
    #[default]
    Known,
    /// Every symbol of the block is unknown: `I(S; R)`.
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Largest admissible `M^L`.
    pub budget: u64,
    pub reference: ReferenceSymbol,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET, reference: ReferenceSymbol::Known }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockAmi {
    /// Bits per block.
    pub block: CapacityEstimate,
    /// Bits per symbol, `block / (L - 1)`.
    pub per_symbol: CapacityEstimate,
}

/// `M^L`, or `None` on overflow.
pub fn candidate_count(m: usize, block_len: usize) -> Option<u64> {
    (m as u64).checked_pow(u32::try_from(block_len).ok()?)
}

/// Monte Carlo estimate of the block AMI with the output density
/// enumerated over every candidate input block.
pub fn exact_block_ami(
    c: &Constellation,
    block_len: usize,
    ch: &ChannelParams,
    mc: &McConfig,
    cfg: &OracleConfig,
) -> Result<BlockAmi> {
    if block_len < 2 {
        return Err(Error::BlockLength(block_len));
    }
    let m = c.size();
    match candidate_count(m, block_len) {
        Some(n) if n <= cfg.budget => {}
        Some(n) => return Err(Error::OracleBudget { candidates: n.to_string(), budget: cfg.budget }),
        None => return Err(Error::OracleBudget { candidates: format!("{m}^{block_len}"), budget: cfg.budget }),
    }
    if !(ch.sigma_sq.is_finite() && ch.sigma_sq > 0.0) {
        return Err(Error::param("sigma_sq", format!("must be finite and positive, got {}", ch.sigma_sq)));
    }

    let sigma_sq = ch.sigma_sq;
    let inv_two_var = 0.5 / sigma_sq;
    let energies: Vec<f64> = c.points().iter().map(|p| p.norm_sqr()).collect();
    let free = match cfg.reference {
        ReferenceSymbol::Known => block_len - 1,
        ReferenceSymbol::Unknown => block_len,
    };
    let ln_candidates = free as f64 * (m as f64).ln();
    let energies = &energies;

    let block = run_mc(mc, "block AMI", || {
        let mut corr = vec![Complex64::new(0.0, 0.0); block_len * m];
        let mut prefix = vec![(Complex64::new(0.0, 0.0), 0.0f64); block_len + 1];
        let mut digits = vec![0usize; block_len];
        move |rng: &mut ChaCha8Rng| {
            let (idx, sample) = BlockSample::draw(c, block_len, sigma_sq, rng);
            for (l, r) in sample.received.iter().enumerate() {
                for (j, s) in c.points().iter().enumerate() {
                    corr[l * m + j] = r * s.conj();
                }
            }
            // terms common to every candidate (received energy, normalization) cancel
            let score = |sum: Complex64, energy: f64| ln_i0(sum.norm() / sigma_sq) - energy * inv_two_var;

            let actual_corr: Complex64 = idx.iter().enumerate().map(|(l, &j)| corr[l * m + j]).sum();
            let actual_energy: f64 = idx.iter().map(|&j| energies[j]).sum();
            let numerator = score(actual_corr, actual_energy);

            // odometer over the free positions; the last position varies fastest
            let first = block_len - free;
            prefix[0] = (Complex64::new(0.0, 0.0), 0.0);
            for l in 0..first {
                let j = idx[l];
                prefix[l + 1] = (prefix[l].0 + corr[l * m + j], prefix[l].1 + energies[j]);
            }
            digits.iter_mut().for_each(|d| *d = 0);
            for l in first..block_len {
                prefix[l + 1] = (prefix[l].0 + corr[l * m], prefix[l].1 + energies[0]);
            }
            let mut acc = OnlineLse::new();
            loop {
                let (sum, energy) = prefix[block_len];
                acc.push(score(sum, energy));
                // advance
                let mut pos = block_len;
                loop {
                    if pos == first {
                        break;
                    }
                    pos -= 1;
                    digits[pos] += 1;
                    if digits[pos] < m {
                        break;
                    }
                    digits[pos] = 0;
                }
                if pos == first && digits[first..].iter().all(|&d| d == 0) {
                    break;
                }
                for l in pos..block_len {
                    let j = digits[l];
                    prefix[l + 1] = (prefix[l].0 + corr[l * m + j], prefix[l].1 + energies[j]);
                }
            }
            (numerator - (acc.value() - ln_candidates)) / LN_2
        }
    })?;
    let per_symbol = block.scaled(1.0 / (block_len - 1) as f64);
    Ok(BlockAmi { block, per_symbol })
}
