//! Special functions, log-domain accumulation and the random-stream contract.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Switch from the power series to the large-argument expansion.
pub const BESSEL_CROSSOVER: f64 = 20.0;

/// `ln I0(x)` for `x >= 0`.
///
/// Power series below [`BESSEL_CROSSOVER`], Hankel asymptotic expansion above
/// it. Relative error stays below 1e-10 from 1e-6 up to 1e8 and beyond; the
/// large-argument branch never forms `I0(x)` itself, so it cannot overflow.
pub fn log_bessel_i0(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::param("x", format!("ln I0 needs a finite non-negative argument, got {x}")));
    }
    Ok(ln_i0(x))
}

#[inline]
pub(crate) fn ln_i0(x: f64) -> f64 {
    if x < BESSEL_CROSSOVER {
        // I0(x) - 1 = sum_{k>=1} (x^2/4)^k / (k!)^2
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut tail = 0.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            tail += term;
            if term <= 1e-17 * (1.0 + tail) {
                break;
            }
            k += 1.0;
        }
        tail.ln_1p()
    } else {
        // I0(x) ~ e^x / sqrt(2 pi x) * sum_k prod_{j<=k} (2j-1)^2 / (k! (8x)^k)
        let eight_x = 8.0 * x;
        let mut term: f64 = 1.0;
        let mut tail = 0.0;
        let mut k: f64 = 1.0;
        loop {
            let next = term * (2.0 * k - 1.0).powi(2) / (eight_x * k);
            if next >= term {
                break;
            }
            tail += next;
            term = next;
            if term <= 1e-17 * (1.0 + tail) {
                break;
            }
            k += 1.0;
        }
        x - 0.5 * (2.0 * PI * x).ln() + tail.ln_1p()
    }
}

/// `ln sum_i exp(v_i)` with the max shifted out.
///
/// `-inf` entries are allowed and contribute nothing. A single element is
/// returned unchanged.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(bad) = values.iter().find(|v| v.is_nan() || **v == f64::INFINITY) {
        return Err(Error::param("values", format!("log-sum-exp input must be finite or -inf, got {bad}")));
    }
    Ok(lse(values))
}

#[inline]
pub(crate) fn lse(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Streaming log-sum-exp for enumerations too large to buffer.
#[derive(Debug, Clone, Copy)]
pub(crate) struct OnlineLse {
    max: f64,
    sum: f64,
}

impl OnlineLse {
    pub(crate) fn new() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    #[inline]
    pub(crate) fn push(&mut self, v: f64) {
        if v <= self.max {
            self.sum += (v - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    pub(crate) fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    // SplitMix64 finalizer
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A reproducible random substream: `(seed, stream_id)`.
///
/// Each stream is a ChaCha8 key; block `b` of a stream is ChaCha stream
/// number `b`, so any block can be generated independently of the others.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStreamSpec {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStreamSpec {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Child stream labelled by `tag`. Same parent and tag give the same child.
    pub fn derive(&self, tag: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: mix64(self.stream_id.rotate_left(23) ^ mix64(tag ^ 0x5851_f42d_4c95_7f2d)),
        }
    }

    /// Generator for block `block` of this stream.
    pub fn rng(&self, block: u64) -> ChaCha8Rng {
        let words = [
            mix64(self.seed),
            mix64(self.stream_id),
            mix64(self.seed ^ 0x243f_6a88_85a3_08d3),
            mix64(self.stream_id ^ 0x1319_8a2e_0370_7344),
        ];
        let mut key = [0u8; 32];
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(block);
        rng
    }
}

#[inline]
pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R, std_dev: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(std_dev * re, std_dev * im)
}

/// `count` circularly symmetric Gaussian samples with the given variance per
/// real component, drawn from block 0 of `stream`.
pub fn sample_complex_gaussian(
    stream: RandomStreamSpec,
    count: usize,
    variance_per_component: f64,
) -> Result<Vec<Complex64>> {
    if count == 0 {
        return Err(Error::param("count", "at least one sample is required"));
    }
    if !(variance_per_component.is_finite() && variance_per_component > 0.0) {
        return Err(Error::param(
            "variance_per_component",
            format!("must be finite and positive, got {variance_per_component}"),
        ));
    }
    let sd = variance_per_component.sqrt();
    let mut rng = stream.rng(0);
    Ok((0..count).map(|_| complex_normal(&mut rng, sd)).collect())
}
