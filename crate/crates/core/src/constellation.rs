//! M-APSK(N,P) signal sets: `N` rings with amplitudes `A r^k`, each carrying
//! `P` equally spaced phases, normalized to a given average energy.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    n_rings: usize,
    phases_per_ring: usize,
    ring_ratio: f64,
    base_amplitude: f64,
    ring_phase_offsets: Vec<f64>,
    /// Ring-major: point `k * P + p` sits on ring `k` at phase `2 pi p / P + offset_k`.
    points: Vec<Complex64>,
    avg_energy: f64,
}

/// Extra knobs for [`build_apsk_with`].
#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// One offset per ring, radians. `None` means phase-aligned rings.
    pub ring_phase_offsets: Option<Vec<f64>>,
    /// Accept `ring_ratio == 1` with several rings, and `P == 1`.
    pub allow_degenerate: bool,
}

pub fn build_apsk(n_rings: usize, phases_per_ring: usize, ring_ratio: f64, avg_energy: f64) -> Result<Constellation> {
    build_apsk_with(n_rings, phases_per_ring, ring_ratio, avg_energy, &BuildOptions::default())
}

pub fn build_apsk_with(
    n_rings: usize,
    phases_per_ring: usize,
    ring_ratio: f64,
    avg_energy: f64,
    opts: &BuildOptions,
) -> Result<Constellation> {
    if n_rings == 0 {
        return Err(Error::param("n_rings", "need at least one ring"));
    }
    let min_phases = if opts.allow_degenerate { 1 } else { 2 };
    if phases_per_ring < min_phases {
        return Err(Error::param("phases_per_ring", format!("need at least {min_phases} phases per ring, got {phases_per_ring}")));
    }
    if !(ring_ratio.is_finite() && ring_ratio > 0.0) {
        return Err(Error::param("ring_ratio", format!("must be finite and positive, got {ring_ratio}")));
    }
    if !(avg_energy.is_finite() && avg_energy > 0.0) {
        return Err(Error::param("avg_energy", format!("must be finite and positive, got {avg_energy}")));
    }
    if n_rings > 1 && ring_ratio == 1.0 && !opts.allow_degenerate {
        return Err(Error::DegenerateRingRatio { n_rings });
    }
    let offsets = match &opts.ring_phase_offsets {
        None => vec![0.0; n_rings],
        Some(o) => {
            if o.len() != n_rings {
                return Err(Error::param("ring_phase_offsets", format!("expected {n_rings} offsets, got {}", o.len())));
            }
            if o.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("ring_phase_offsets", "offsets must be finite"));
            }
            o.iter().map(|v| v.rem_euclid(TAU)).collect()
        }
    };

    let ring_power: f64 = (0..n_rings).map(|k| ring_ratio.powi(2 * k as i32)).sum();
    let base_amplitude = (avg_energy * n_rings as f64 / ring_power).sqrt();
    let points = ring_points(base_amplitude, ring_ratio, phases_per_ring, &offsets);

    Ok(Constellation {
        n_rings,
        phases_per_ring,
        ring_ratio,
        base_amplitude,
        ring_phase_offsets: offsets,
        points,
        avg_energy,
    })
}

fn ring_points(base: f64, ratio: f64, phases: usize, offsets: &[f64]) -> Vec<Complex64> {
    let mut points = Vec::with_capacity(offsets.len() * phases);
    for (k, off) in offsets.iter().enumerate() {
        let amp = base * ratio.powi(k as i32);
        for p in 0..phases {
            points.push(Complex64::from_polar(amp, TAU * p as f64 / phases as f64 + off));
        }
    }
    points
}

/// The PSK constellation formed by ring `ring_index` of `c`.
pub fn ring_subconstellation(c: &Constellation, ring_index: usize) -> Result<Constellation> {
    if ring_index >= c.n_rings {
        return Err(Error::RingIndex { index: ring_index, n_rings: c.n_rings });
    }
    if c.n_rings == 1 {
        return Ok(c.clone());
    }
    let amp = c.ring_amplitude(ring_index);
    let offsets = vec![c.ring_phase_offsets[ring_index]];
    let p = c.phases_per_ring;
    Ok(Constellation {
        n_rings: 1,
        phases_per_ring: p,
        ring_ratio: c.ring_ratio,
        base_amplitude: amp,
        points: c.points[ring_index * p..(ring_index + 1) * p].to_vec(),
        ring_phase_offsets: offsets,
        avg_energy: amp * amp,
    })
}

impl Constellation {
    /// Single-ring PSK at any amplitude, zero included.
    pub(crate) fn psk(amplitude: f64, phases: usize) -> Self {
        Self {
            n_rings: 1,
            phases_per_ring: phases,
            ring_ratio: 1.0,
            base_amplitude: amplitude,
            ring_phase_offsets: vec![0.0],
            points: ring_points(amplitude, 1.0, phases, &[0.0]),
            avg_energy: amplitude * amplitude,
        }
    }

    pub fn n_rings(&self) -> usize {
        self.n_rings
    }

    pub fn phases_per_ring(&self) -> usize {
        self.phases_per_ring
    }

    /// `M = N P`.
    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn ring_ratio(&self) -> f64 {
        self.ring_ratio
    }

    pub fn base_amplitude(&self) -> f64 {
        self.base_amplitude
    }

    pub fn ring_phase_offsets(&self) -> &[f64] {
        &self.ring_phase_offsets
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn avg_energy(&self) -> f64 {
        self.avg_energy
    }

    pub fn ring_amplitude(&self, k: usize) -> f64 {
        self.base_amplitude * self.ring_ratio.powi(k as i32)
    }

    pub fn ring_amplitudes(&self) -> Vec<f64> {
        (0..self.n_rings).map(|k| self.ring_amplitude(k)).collect()
    }

    /// Short label such as `8-APSK(2,4)`.
    pub fn label(&self) -> String {
        format!("{}-APSK({},{})", self.size(), self.n_rings, self.phases_per_ring)
    }
}
