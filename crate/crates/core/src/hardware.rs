//! Delay-range feasibility for switched-capacitor TTD elements.

use std::io::Write;

use crate::config::{Architecture, SystemConfig};
use crate::error::{domain_err, Result};

/// Relative slack applied before flooring, so products such as
/// `15 ns * 2 GHz` that land a few ulps under an integer still count.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardwareSpec {
    /// Maximum delay compensation `T_c,max` in seconds.
    pub tc_max_s: f64,
    pub clock_hz: f64,
    pub sampling_hz: f64,
    pub interleaving: usize,
}

impl HardwareSpec {
    /// Derives `T_c,max` from the interleaving factor; the reference clock
    /// runs at the sampling rate.
    pub fn from_interleaving(interleaving: usize, sampling_hz: f64) -> Result<Self> {
        Ok(Self {
            tc_max_s: max_delay_compensation(interleaving, sampling_hz)?,
            clock_hz: sampling_hz,
            sampling_hz,
            interleaving,
        })
    }
}

/// `T_c,max = (N_I - 1) / f_s`.
pub fn max_delay_compensation(interleaving: usize, sampling_hz: f64) -> Result<f64> {
    if interleaving == 0 || !(sampling_hz > 0.0) {
        return Err(domain_err("need N_I >= 1 and a positive sampling rate"));
    }
    Ok((interleaving - 1) as f64 / sampling_hz)
}

/// Smallest interleaving factor covering `R` with `n` antennas:
/// `1 + 2R(n - 1)`.
pub fn min_interleaving(diversity: usize, antennas: usize) -> usize {
    1 + 2 * diversity * antennas.saturating_sub(1)
}

/// Largest diversity order supported by the delay range, or 0 when even
/// `R = 1` does not fit. A single antenna has no delay constraint and gets
/// `usize::MAX` (before the power-of-two rounding).
pub fn max_diversity(tc_max_s: f64, bandwidth_hz: f64, antennas: usize, power_of_two: bool) -> usize {
    let raw = if antennas <= 1 {
        usize::MAX
    } else {
        let bound = tc_max_s * bandwidth_hz / (antennas - 1) as f64;
        (bound * (1.0 + FLOOR_SLACK)).floor().max(0.0) as usize
    };
    if power_of_two {
        floor_pow2(raw)
    } else {
        raw
    }
}

fn floor_pow2(x: usize) -> usize {
    if x == 0 {
        0
    } else {
        1 << (usize::BITS - 1 - x.leading_zeros())
    }
}

/// Diversity order a digital array realizes in DSP: the largest power of
/// two with `D R <= M_tot - 1` (so rounded indices never collide) and at most
/// one subcarrier per sub-band per direction.
pub fn digital_diversity(cfg: &SystemConfig) -> usize {
    let per_direction = (cfg.num_subcarriers - 1) / cfg.directions;
    floor_pow2(per_direction.min(cfg.num_subbands))
}

/// Diversity order used for `arch` given the delay range `tc_max_s`. The
/// digital order is always a power of two.
pub fn diversity_for(cfg: &SystemConfig, arch: Architecture, tc_max_s: f64, power_of_two: bool) -> usize {
    match arch {
        Architecture::Analog => max_diversity(tc_max_s, cfg.bandwidth_hz, cfg.num_rx, power_of_two),
        Architecture::Hybrid => max_diversity(tc_max_s, cfg.bandwidth_hz, cfg.sub_array_size, power_of_two),
        Architecture::Digital => digital_diversity(cfg),
    }
}

/// One row of the delay/interleaving complexity table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecRow {
    pub diversity: usize,
    /// Delay spacing `R / BW` in ns.
    pub delay_step_ns: f64,
    /// Largest analog delay `(N_R - 1) R / BW` in ns.
    pub analog_delay_ns: f64,
    pub analog_interleaving: usize,
    /// Largest analog delay in a sub-array, `(N_r - 1) R / BW` in ns.
    pub hybrid_delay_ns: f64,
    pub hybrid_interleaving: usize,
}

/// Builds the table for each diversity order. Delays are evaluated as
/// `k R (1e9 / BW)` so round bandwidths give exact decimal values.
pub fn spec_table(num_rx: usize, sub_array_size: usize, bandwidth_hz: f64, orders: &[usize]) -> Vec<SpecRow> {
    let ns_per_sample = 1e9 / bandwidth_hz;
    orders
        .iter()
        .map(|&r| SpecRow {
            diversity: r,
            delay_step_ns: r as f64 * ns_per_sample,
            analog_delay_ns: ((num_rx - 1) * r) as f64 * ns_per_sample,
            analog_interleaving: min_interleaving(r, num_rx),
            hybrid_delay_ns: ((sub_array_size - 1) * r) as f64 * ns_per_sample,
            hybrid_interleaving: min_interleaving(r, sub_array_size),
        })
        .collect()
}

pub const SPEC_TABLE_HEADER: [&str; 6] =
    ["R", "delay_step_ns", "analog_max_delay_ns", "analog_NI", "hybrid_max_delay_ns", "hybrid_NI"];

pub fn write_spec_table<W: Write>(out: W, rows: &[SpecRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SPEC_TABLE_HEADER)?;
    for r in rows {
        w.write_record([
            r.diversity.to_string(),
            r.delay_step_ns.to_string(),
            r.analog_delay_ns.to_string(),
            r.analog_interleaving.to_string(),
            r.hybrid_delay_ns.to_string(),
            r.hybrid_interleaving.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
