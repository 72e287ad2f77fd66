//! Upper and lower bounds on the per-symbol noncoherent capacity.
//!
//! With one symbol overlapping consecutive blocks the block AMI is
//! normalized by `L - 1`:
//!
//! ```text
//! upper = C_c + [I(theta; r_0)_disc - I(theta; R | S)_disc] / (L - 1)
//! lower = C_c + [I(theta; r_0)_cont - I(theta; R | S)_cont] / (L - 1)
//! ```
//!
//! The discrete terms put the phase on the `P` ring phases, the continuous
//! terms make it uniform on `[0, 2 pi)`.

use serde::{Deserialize, Serialize};

pub use crate::capacity_mc::BlockTerm;
use crate::capacity_mc::{
    coherent_capacity, combined_se, given_s_unchecked, phase_info_r0, CapacityEstimate, ChannelParams, McConfig,
    ThetaModel,
};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::numerics::RandomStreamSpec;

const TAG_COHERENT: u64 = 1;
const TAG_R0_DISCRETE: u64 = 2;
const TAG_RS_DISCRETE: u64 = 3;
const TAG_R0_CONTINUOUS: u64 = 4;
const TAG_RS_CONTINUOUS: u64 = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsOptions {
    pub block_term: BlockTerm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub coherent: CapacityEstimate,
    pub i_theta_r: CapacityEstimate,
    pub i_theta_r_given_s: CapacityEstimate,
    pub bits: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub coherent: CapacityEstimate,
    pub i_theta_r: CapacityEstimate,
    pub i_theta_r_given_s: CapacityEstimate,
    /// Clamped below at zero.
    pub bits: f64,
    pub raw_bits: f64,
    pub std_error: f64,
}

/// Both bounds at one `(SNR, L)` point with every term kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub snr_db: f64,
    pub block_len: usize,
    pub coherent: CapacityEstimate,
    pub upper_bits: f64,
    pub upper_se: f64,
    pub lower_bits: f64,
    pub lower_raw_bits: f64,
    pub lower_se: f64,
    pub i_theta_r_discrete: CapacityEstimate,
    pub i_theta_r_continuous: CapacityEstimate,
    pub i_theta_r_given_s_discrete: CapacityEstimate,
    pub i_theta_r_given_s_continuous: CapacityEstimate,
}

impl BoundsRow {
    pub fn coherent_bits(&self) -> f64 {
        self.coherent.mean_bits
    }

    /// `upper - lower`, using the raw lower bound.
    pub fn gap(&self) -> f64 {
        self.upper_bits - self.lower_raw_bits
    }

    /// Standard error of [`gap`](Self::gap). The coherent term is shared by
    /// both bounds and cancels.
    pub fn gap_se(&self) -> f64 {
        combined_se(&[
            self.i_theta_r_discrete.std_error,
            self.i_theta_r_given_s_discrete.std_error,
            self.i_theta_r_continuous.std_error,
            self.i_theta_r_given_s_continuous.std_error,
        ]) / (self.block_len - 1) as f64
    }

    pub fn upper(&self) -> UpperBound {
        UpperBound {
            coherent: self.coherent,
            i_theta_r: self.i_theta_r_discrete,
            i_theta_r_given_s: self.i_theta_r_given_s_discrete,
            bits: self.upper_bits,
            std_error: self.upper_se,
        }
    }

    pub fn lower(&self) -> LowerBound {
        LowerBound {
            coherent: self.coherent,
            i_theta_r: self.i_theta_r_continuous,
            i_theta_r_given_s: self.i_theta_r_given_s_continuous,
            bits: self.lower_bits,
            raw_bits: self.lower_raw_bits,
            std_error: self.lower_se,
        }
    }
}

fn check_block_len(block_len: usize) -> Result<()> {
    if block_len < 2 {
        Err(Error::BlockLength(block_len))
    } else {
        Ok(())
    }
}

/// `C_c + (r0 - rs) / (L - 1)` with its standard error.
fn assemble(coherent: &CapacityEstimate, r0: &CapacityEstimate, rs: &CapacityEstimate, block_len: usize) -> (f64, f64) {
    let norm = (block_len - 1) as f64;
    let bits = coherent.mean_bits + (r0.mean_bits - rs.mean_bits) / norm;
    let se = combined_se(&[coherent.std_error, r0.std_error / norm, rs.std_error / norm]);
    (bits, se)
}

fn phase_terms(
    c: &Constellation,
    block_len: usize,
    ch: &ChannelParams,
    model: ThetaModel,
    opts: &BoundsOptions,
    mc: &McConfig,
) -> Result<(CapacityEstimate, CapacityEstimate)> {
    let (tag_r0, tag_rs) = match model {
        ThetaModel::Discrete => (TAG_R0_DISCRETE, TAG_RS_DISCRETE),
        ThetaModel::Continuous => (TAG_R0_CONTINUOUS, TAG_RS_CONTINUOUS),
    };
    let r0 = phase_info_r0(c, ch, model, &mc.derive(tag_r0))?;
    let rs = given_s_unchecked(c, block_len, ch, model, opts.block_term, &mc.derive(tag_rs))?;
    Ok((r0, rs))
}

pub fn upper_bound(c: &Constellation, block_len: usize, ch: &ChannelParams, mc: &McConfig, opts: &BoundsOptions) -> Result<UpperBound> {
    check_block_len(block_len)?;
    let coherent = coherent_capacity(c, ch, &mc.derive(TAG_COHERENT))?;
    let (r0, rs) = phase_terms(c, block_len, ch, ThetaModel::Discrete, opts, mc)?;
    let (bits, std_error) = assemble(&coherent, &r0, &rs, block_len);
    Ok(UpperBound { coherent, i_theta_r: r0, i_theta_r_given_s: rs, bits, std_error })
}

pub fn lower_bound(c: &Constellation, block_len: usize, ch: &ChannelParams, mc: &McConfig, opts: &BoundsOptions) -> Result<LowerBound> {
    check_block_len(block_len)?;
    let coherent = coherent_capacity(c, ch, &mc.derive(TAG_COHERENT))?;
    let (r0, rs) = phase_terms(c, block_len, ch, ThetaModel::Continuous, opts, mc)?;
    let (raw_bits, std_error) = assemble(&coherent, &r0, &rs, block_len);
    Ok(LowerBound { coherent, i_theta_r: r0, i_theta_r_given_s: rs, bits: raw_bits.max(0.0), raw_bits, std_error })
}

/// Both bounds at one operating point, estimating the coherent term once.
/// Term streams are identical to those of [`upper_bound`] and [`lower_bound`].
pub fn bounds_row(c: &Constellation, block_len: usize, ch: &ChannelParams, mc: &McConfig, opts: &BoundsOptions) -> Result<BoundsRow> {
    check_block_len(block_len)?;
    let coherent = coherent_capacity(c, ch, &mc.derive(TAG_COHERENT))?;
    let (d0, ds) = phase_terms(c, block_len, ch, ThetaModel::Discrete, opts, mc)?;
    let (c0, cs) = phase_terms(c, block_len, ch, ThetaModel::Continuous, opts, mc)?;
    let (upper_bits, upper_se) = assemble(&coherent, &d0, &ds, block_len);
    let (lower_raw_bits, lower_se) = assemble(&coherent, &c0, &cs, block_len);
    Ok(BoundsRow {
        snr_db: ch.snr_db,
        block_len,
        coherent,
        upper_bits,
        upper_se,
        lower_bits: lower_raw_bits.max(0.0),
        lower_raw_bits,
        lower_se,
        i_theta_r_discrete: d0,
        i_theta_r_continuous: c0,
        i_theta_r_given_s_discrete: ds,
        i_theta_r_given_s_continuous: cs,
    })
}

/// Stream of grid point `(l_index, snr_index)` under `base`.
pub fn grid_point_stream(base: RandomStreamSpec, l_index: usize, snr_index: usize) -> RandomStreamSpec {
    base.derive(0x5352_0000 + snr_index as u64).derive(l_index as u64)
}

/// One row per `(L, SNR)`, SNR-major then `L`, at unit average energy.
pub fn bounds_curve(
    c: &Constellation,
    block_lens: &[usize],
    snr_grid_db: &[f64],
    mc: &McConfig,
    opts: &BoundsOptions,
) -> Result<Vec<BoundsRow>> {
    if block_lens.is_empty() || snr_grid_db.is_empty() {
        return Err(Error::param("grid", "block-length and SNR grids must be non-empty"));
    }
    if let Some(&bad) = block_lens.iter().find(|&&l| l < 2) {
        return Err(Error::BlockLength(bad));
    }
    let mut rows = Vec::with_capacity(block_lens.len() * snr_grid_db.len());
    for (si, &snr) in snr_grid_db.iter().enumerate() {
        let ch = ChannelParams::from_snr_db(snr, c.avg_energy())?;
        for (li, &l) in block_lens.iter().enumerate() {
            let point = mc.with_stream(grid_point_stream(mc.stream, li, si));
            rows.push(bounds_row(c, l, &ch, &point, opts)?);
        }
    }
    Ok(rows)
}
