//! Ring-ratio sweeps and constellation comparisons of the coherent capacity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity_mc::{coherent_capacity, combined_se, CapacityEstimate, ChannelParams, McConfig};
use crate::constellation::{build_apsk_with, BuildOptions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n_rings: usize,
    pub phases_per_ring: usize,
    /// Strictly increasing.
    pub r_grid: Vec<f64>,
    pub snr_grid_db: Vec<f64>,
    pub mc: McConfig,
    /// Reuse one stream for every ring ratio at a given SNR.
    pub common_random_numbers: bool,
    /// Permit `r = 1` in the grid.
    pub allow_degenerate: bool,
}

impl SweepSpec {
    pub fn new(n_rings: usize, phases_per_ring: usize, r_grid: Vec<f64>, snr_grid_db: Vec<f64>, mc: McConfig) -> Self {
        Self { n_rings, phases_per_ring, r_grid, snr_grid_db, mc, common_random_numbers: true, allow_degenerate: false }
    }

    fn validate(&self) -> Result<()> {
        if self.r_grid.is_empty() || self.snr_grid_db.is_empty() {
            return Err(Error::param("grid", "ring-ratio and SNR grids must be non-empty"));
        }
        if self.r_grid.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::param("r_grid", "ring ratios must be finite and positive"));
        }
        if self.r_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("r_grid", "ring ratios must be distinct and sorted ascending"));
        }
        Ok(())
    }
}

/// Evenly spaced inclusive grid `lo, lo + step, ..., hi`.
pub fn linear_grid(lo: f64, step: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && step.is_finite() && hi.is_finite()) || step <= 0.0 || hi < lo {
        return Err(Error::param("grid", format!("need finite lo <= hi and step > 0, got {lo}:{step}:{hi}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub snr_db: f64,
    pub ring_ratio: f64,
    pub capacity: CapacityEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptimum {
    pub snr_db: f64,
    pub argmax_r: f64,
    pub capacity: CapacityEstimate,
    /// Every ratio within two combined standard errors of the maximum, the
    /// argmax included.
    pub tied_r: Vec<f64>,
}

impl SweepOptimum {
    pub fn tie_interval(&self) -> (f64, f64) {
        let lo = self.tied_r.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.tied_r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    /// SNR-major, then ring ratio.
    pub cells: Vec<SweepCell>,
    /// One per SNR, in grid order.
    pub optima: Vec<SweepOptimum>,
}

impl SweepTable {
    pub fn is_tied_argmax(&self, cell: &SweepCell) -> bool {
        self.optima
            .iter()
            .find(|o| o.snr_db == cell.snr_db)
            .is_some_and(|o| o.tied_r.contains(&cell.ring_ratio))
    }
}

pub fn ring_ratio_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let opts = BuildOptions { allow_degenerate: spec.allow_degenerate, ..Default::default() };
    let jobs: Vec<(usize, usize)> = (0..spec.snr_grid_db.len())
        .flat_map(|si| (0..spec.r_grid.len()).map(move |ri| (si, ri)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(si, ri)| {
            let snr_db = spec.snr_grid_db[si];
            let ring_ratio = spec.r_grid[ri];
            let c = build_apsk_with(spec.n_rings, spec.phases_per_ring, ring_ratio, 1.0, &opts)?;
            let ch = ChannelParams::new(snr_db)?;
            let snr_stream = spec.mc.derive(si as u64);
            let mc = if spec.common_random_numbers { snr_stream } else { snr_stream.derive(ri as u64) };
            Ok(SweepCell { snr_db, ring_ratio, capacity: coherent_capacity(&c, &ch, &mc)? })
        })
        .collect::<Result<Vec<_>>>()?;

    let optima = cells
        .chunks(spec.r_grid.len())
        .map(|row| {
            let best = row
                .iter()
                .max_by(|a, b| a.capacity.mean_bits.total_cmp(&b.capacity.mean_bits))
                .expect("non-empty grid");
            let tied_r = row
                .iter()
                .filter(|c| {
                    best.capacity.mean_bits - c.capacity.mean_bits
                        <= 2.0 * combined_se(&[best.capacity.std_error, c.capacity.std_error])
                })
                .map(|c| c.ring_ratio)
                .collect();
            SweepOptimum { snr_db: best.snr_db, argmax_r: best.ring_ratio, capacity: best.capacity, tied_r }
        })
        .collect();
    Ok(SweepTable { cells, optima })
}

/// An APSK geometry, `(N, P, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApskShape {
    pub n_rings: usize,
    pub phases_per_ring: usize,
    pub ring_ratio: f64,
}

impl ApskShape {
    pub fn new(n_rings: usize, phases_per_ring: usize, ring_ratio: f64) -> Self {
        Self { n_rings, phases_per_ring, ring_ratio }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub shape: ApskShape,
    pub snr_db: f64,
    pub capacity: CapacityEstimate,
}

/// Coherent capacity per constellation per SNR, constellation-major. The
/// stream depends only on the SNR index, so repeated shapes give repeated rows.
pub fn capacity_comparison(shapes: &[ApskShape], snr_grid_db: &[f64], mc: &McConfig) -> Result<Vec<ComparisonRow>> {
    if shapes.is_empty() || snr_grid_db.is_empty() {
        return Err(Error::param("grid", "constellation list and SNR grid must be non-empty"));
    }
    let mut rows = Vec::with_capacity(shapes.len() * snr_grid_db.len());
    for shape in shapes {
        let c = build_apsk_with(shape.n_rings, shape.phases_per_ring, shape.ring_ratio, 1.0, &BuildOptions::default())?;
        for (si, &snr_db) in snr_grid_db.iter().enumerate() {
            let ch = ChannelParams::new(snr_db)?;
            let capacity = coherent_capacity(&c, &ch, &mc.derive(si as u64))?;
            rows.push(ComparisonRow { shape: *shape, snr_db, capacity });
        }
    }
    Ok(rows)
}
