//! Baseband power budget per architecture.
//!
//! Components: flash ADCs (FoM model), the OTA of the switched-capacitor
//! array, AGC, deserializer and the time-interleaver. The RF front end is
//! identical across architectures and left out.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::{Architecture, SystemConfig};
use crate::error::{config_err, Result};
use crate::hardware::min_interleaving;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerParams {
    /// ADC figure of merit, J per conversion step.
    pub fom_adc: f64,
    pub enob: f64,
    pub sampling_hz: f64,
    /// OTA power for one antenna at 1 Hz sampling, W/Hz. The AGC reuses it.
    pub ota_unit: f64,
    /// Deserializer power per bit and chain, W.
    pub deserializer_unit: f64,
    pub switch_cap_f: f64,
    pub interconnect_cap_f: f64,
    pub supply_v: f64,
}

impl Default for PowerParams {
    fn default() -> Self {
        Self {
            fom_adc: 96.1e-15,
            enob: 3.0,
            sampling_hz: 4e9,
            ota_unit: 9.7504e-13,
            deserializer_unit: 0.512e-3,
            switch_cap_f: 2.5e-12,
            interconnect_cap_f: 0.6e-12,
            supply_v: 1.0,
        }
    }
}

impl PowerParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("fom_adc", self.fom_adc),
            ("enob", self.enob),
            ("sampling_hz", self.sampling_hz),
            ("ota_unit", self.ota_unit),
            ("deserializer_unit", self.deserializer_unit),
            ("switch_cap_f", self.switch_cap_f),
            ("interconnect_cap_f", self.interconnect_cap_f),
            ("supply_v", self.supply_v),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(config_err(format!("power parameter {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// OTA power constant from the unity-gain-bandwidth sizing: compensation
/// capacitor times the normalized bandwidth gives the first-stage `g_m`,
/// the second stage draws ten times the first, and a 1 V supply converts
/// current to power.
pub fn ota_unit_from_design(comp_cap_f: f64, omega_u0: f64, gm_over_id: f64, supply_v: f64) -> f64 {
    let gm = comp_cap_f * omega_u0;
    let unit_current = gm / gm_over_id;
    (2.0 + 10.0) * unit_current * supply_v
}

/// `count * FoM * 2^ENOB * f_s`.
pub fn adc_power(p: &PowerParams, count: usize) -> f64 {
    count as f64 * p.fom_adc * p.enob.exp2() * p.sampling_hz
}

/// Total OTA power of the delay arrays. Hybrid sub-arrays each serve
/// `N_R / N_H` antennas, so the sum matches the analog and digital cases.
pub fn sca_power(p: &PowerParams, num_rx: usize, num_subarrays: usize, arch: Architecture) -> f64 {
    let per_unit = |antennas: f64| p.ota_unit * antennas * p.sampling_hz;
    match arch {
        Architecture::Analog | Architecture::Digital => per_unit(num_rx as f64),
        Architecture::Hybrid => num_subarrays as f64 * per_unit(num_rx as f64 / num_subarrays as f64),
    }
}

/// One AGC per digitized chain, each drawing a unit OTA's power.
pub fn agc_power(p: &PowerParams, arch: Architecture, num_rx: usize, num_subarrays: usize) -> f64 {
    let chains = match arch {
        Architecture::Analog => 1,
        Architecture::Hybrid => num_subarrays,
        Architecture::Digital => num_rx,
    };
    p.ota_unit * chains as f64 * p.sampling_hz
}

/// `P_DESo * x * chains`.
pub fn deserializer_power(p: &PowerParams, bits: f64, chains: usize) -> f64 {
    p.deserializer_unit * bits * chains as f64
}

/// `f_s (C_sw / N_I + C_int) V_DD^2`.
pub fn interleaver_power(p: &PowerParams, interleaving: usize) -> f64 {
    p.sampling_hz * (p.switch_cap_f / interleaving as f64 + p.interconnect_cap_f) * p.supply_v.powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerBreakdown {
    pub architecture: Architecture,
    pub adc: f64,
    pub sca_ota: f64,
    pub agc: f64,
    pub deserializer: f64,
    pub interleaver: f64,
    pub total: f64,
}

impl PowerBreakdown {
    pub fn components(&self) -> [(&'static str, f64); 5] {
        [
            ("adc", self.adc),
            ("sca_ota", self.sca_ota),
            ("agc", self.agc),
            ("deserializer", self.deserializer),
            ("interleaver", self.interleaver),
        ]
    }
}

/// Assembles the budget for `arch`.
///
/// The sampling rate comes from `cfg.sampling_hz`, overriding
/// `params.sampling_hz`. Interleaving depth follows `cfg.diversity`. Analog
/// and hybrid arrays count a single interleaver; the digital array has none.
pub fn total_power(cfg: &SystemConfig, params: &PowerParams, arch: Architecture) -> Result<PowerBreakdown> {
    cfg.validate_for(arch)?;
    let p = PowerParams { sampling_hz: cfg.sampling_hz, ..*params };
    p.validate()?;
    let num_h = cfg.num_subarrays();
    let chains = arch.chains(cfg);
    let interleaver = match arch {
        Architecture::Analog => interleaver_power(&p, min_interleaving(cfg.diversity, cfg.num_rx)),
        Architecture::Hybrid => interleaver_power(&p, min_interleaving(cfg.diversity, cfg.sub_array_size)),
        Architecture::Digital => 0.0,
    };
    let mut b = PowerBreakdown {
        architecture: arch,
        adc: adc_power(&p, chains),
        sca_ota: sca_power(&p, cfg.num_rx, num_h, arch),
        agc: agc_power(&p, arch, cfg.num_rx, num_h),
        deserializer: deserializer_power(&p, p.enob, chains),
        interleaver,
        total: 0.0,
    };
    b.total = b.components().iter().map(|(_, w)| w).sum();
    Ok(b)
}

/// Long-format CSV: `architecture,component,watts`, with a `total` line per
/// architecture.
pub fn write_breakdowns<W: Write>(out: W, rows: &[PowerBreakdown]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["architecture", "component", "watts"])?;
    for b in rows {
        for (name, watts) in b.components().into_iter().chain([("total", b.total)]) {
            w.write_record([b.architecture.name(), name, &format!("{watts:.6e}")])?;
        }
    }
    w.flush()?;
    Ok(())
}
