//! Scenario parameters shared by every stage of the simulator.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

/// Receive array architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    /// Single RF chain; every phase and delay tap lives in the analog domain.
    #[serde(alias = "analog_ttd")]
    Analog,
    /// Sub-arrays with shared analog delays plus per-sub-array digital delays.
    #[serde(alias = "hybrid_ttd")]
    Hybrid,
    /// One RF chain per antenna; delays and phases applied in DSP.
    Digital,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [Architecture::Analog, Architecture::Hybrid, Architecture::Digital];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Analog => "analog",
            Architecture::Hybrid => "hybrid",
            Architecture::Digital => "digital",
        }
    }

    /// Number of digitized streams (ADCs) the architecture needs.
    pub fn chains(self, cfg: &SystemConfig) -> usize {
        match self {
            Architecture::Analog => 1,
            Architecture::Hybrid => cfg.num_subarrays(),
            Architecture::Digital => cfg.num_rx,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "analog" | "analog_ttd" | "a" => Ok(Architecture::Analog),
            "hybrid" | "hybrid_ttd" | "h" => Ok(Architecture::Hybrid),
            "digital" | "d" => Ok(Architecture::Digital),
            other => Err(config_err(format!("unknown architecture `{other}`"))),
        }
    }
}

/// System-level scenario description.
///
/// Frequencies are in Hz. Array sizes, subcarrier and direction counts are
/// plain counts. `sampling_hz` defaults to Nyquist (`2 * bandwidth_hz`).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    /// Total subcarriers `M_tot` of the OFDM symbol.
    pub num_subcarriers: usize,
    pub num_tx: usize,
    pub num_rx: usize,
    /// Antennas per sub-array (hybrid architecture only).
    pub sub_array_size: usize,
    /// Number of simultaneously probed directions `D`.
    pub directions: usize,
    /// Frequency diversity order `R`: subcarriers per probed direction.
    pub diversity: usize,
    /// Estimation grid size `Q`.
    pub dictionary_size: usize,
    pub sampling_hz: f64,
    /// Pre-beamforming SNR in dB.
    pub snr_db: f64,
    /// Number of channel sub-bands `K_c`.
    pub num_subbands: usize,
    /// Digital phase step override; `None` reuses the analog step so every
    /// architecture realizes the same codebook.
    pub digital_phase_step: Option<f64>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let num_rx = 16;
        Self {
            carrier_hz: 60e9,
            bandwidth_hz: 2e9,
            num_subcarriers: 4096,
            num_tx: 128,
            num_rx,
            sub_array_size: 4,
            directions: 2 * num_rx,
            diversity: 1,
            dictionary_size: 1024,
            sampling_hz: 4e9,
            snr_db: -20.0,
            num_subbands: 64,
            digital_phase_step: None,
        }
    }
}

impl SystemConfig {
    pub fn num_subarrays(&self) -> usize {
        if self.sub_array_size == 0 {
            0
        } else {
            self.num_rx / self.sub_array_size
        }
    }

    /// Baseband offset `f_m - f_c` of 1-based subcarrier `m`.
    pub fn subcarrier_offset_hz(&self, m: usize) -> f64 {
        -self.bandwidth_hz / 2.0
            + (m as f64 - 1.0) * self.bandwidth_hz / (self.num_subcarriers as f64 - 1.0)
    }

    /// Absolute frequency `f_m` of 1-based subcarrier `m`.
    pub fn subcarrier_hz(&self, m: usize) -> f64 {
        self.carrier_hz + self.subcarrier_offset_hz(m)
    }

    /// Delay spacing between neighbouring antennas, `R / BW`.
    pub fn delay_step_s(&self) -> f64 {
        self.diversity as f64 / self.bandwidth_hz
    }

    pub fn snr_linear(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    /// Per-antenna noise variance for a channel of total power `channel_power`.
    ///
    /// The SNR is measured on a single transmit/receive antenna pair, before
    /// any beamforming. Channel matrices use unit-norm array responses, so a
    /// pair sees `channel_power / (N_R N_T)` and the noise is scaled to match.
    pub fn noise_variance(&self, channel_power: f64) -> f64 {
        channel_power / ((self.num_rx * self.num_tx) as f64 * self.snr_linear())
    }

    /// Checks the architecture-independent invariants.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_hz", self.carrier_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("sampling_hz", self.sampling_hz),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(config_err(format!("{name} must be positive and finite, got {value}")));
            }
        }
        if self.carrier_hz <= self.bandwidth_hz / 2.0 {
            return Err(config_err("carrier must exceed half the bandwidth"));
        }
        let counts = [
            ("num_subcarriers", self.num_subcarriers),
            ("num_tx", self.num_tx),
            ("num_rx", self.num_rx),
            ("directions", self.directions),
            ("diversity", self.diversity),
            ("dictionary_size", self.dictionary_size),
            ("num_subbands", self.num_subbands),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(config_err(format!("{name} must be at least 1")));
            }
        }
        if self.num_subcarriers < 2 {
            return Err(config_err("need at least two subcarriers"));
        }
        if self.directions * self.diversity > self.num_subcarriers {
            return Err(config_err(format!(
                "D*R = {} exceeds the {} available subcarriers",
                self.directions * self.diversity,
                self.num_subcarriers
            )));
        }
        if self.dictionary_size < self.directions {
            return Err(config_err("dictionary size Q must be at least D"));
        }
        if self.num_subbands > self.num_subcarriers {
            return Err(config_err("more sub-bands than subcarriers"));
        }
        // Nyquist; a relative slack absorbs decimal round-off in config files.
        if self.sampling_hz < 2.0 * self.bandwidth_hz * (1.0 - 1e-12) {
            return Err(config_err(format!(
                "sampling frequency {} Hz is below Nyquist for {} Hz bandwidth",
                self.sampling_hz, self.bandwidth_hz
            )));
        }
        if !self.snr_db.is_finite() {
            return Err(config_err("snr_db must be finite"));
        }
        Ok(())
    }

    /// Validates the invariants plus those specific to `arch`.
    pub fn validate_for(&self, arch: Architecture) -> Result<()> {
        self.validate()?;
        if arch == Architecture::Hybrid {
            if self.sub_array_size == 0 || self.num_rx % self.sub_array_size != 0 {
                return Err(config_err(format!(
                    "hybrid array needs N_R ({}) divisible by the sub-array size ({})",
                    self.num_rx, self.sub_array_size
                )));
            }
        }
        Ok(())
    }
}
