//! Array model: steering vectors, DFT probing beams, per-architecture tap
//! settings, the subcarrier-to-direction map and per-subcarrier combiners.
//!
//! Antenna, direction and subcarrier indices are 1-based throughout the
//! public API to match the usual notation; vectors are 0-based internally.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;

use crate::config::{Architecture, SystemConfig};
use crate::error::{config_err, domain_err, Result};

/// `exp(-j * phase)`.
#[inline]
pub(crate) fn cis_neg(phase: f64) -> Complex64 {
    let (s, c) = phase.sin_cos();
    Complex64::new(c, -s)
}

/// Receive/transmit spatial response of a half-wavelength ULA.
///
/// Entry `n` is `N^{-1/2} exp(-j (n-1) pi sin(theta))`, so the vector has unit
/// Euclidean norm.
pub fn steering_vector(theta: f64, n: usize) -> Result<Vec<Complex64>> {
    if !(theta.abs() < FRAC_PI_2) {
        return Err(domain_err(format!("angle {theta} rad outside (-pi/2, pi/2)")));
    }
    Ok(steering_vector_unchecked(theta, n))
}

pub(crate) fn steering_vector_unchecked(theta: f64, n: usize) -> Vec<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    let step = PI * theta.sin();
    (0..n).map(|i| cis_neg(i as f64 * step) * scale).collect()
}

/// DFT probing beam `f_d` for direction `d` of `directions`.
///
/// `[f_d]_n = exp(-j 2 pi (n-1)(d-1-D/2)/D)`; its main lobe points at
/// `sin(theta) = 2(d-1-D/2)/D`.
pub fn dft_beam(d: usize, directions: usize, n: usize) -> Result<Vec<Complex64>> {
    if d == 0 || d > directions {
        return Err(domain_err(format!("direction {d} outside 1..={directions}")));
    }
    let offset = d as f64 - 1.0 - directions as f64 / 2.0;
    let step = TAU * offset / directions as f64;
    Ok((0..n).map(|i| cis_neg(i as f64 * step)).collect())
}

/// Beam-center angle of direction `d`.
pub fn beam_center(d: usize, directions: usize) -> f64 {
    let s = 2.0 * (d as f64 - 1.0 - directions as f64 / 2.0) / directions as f64;
    s.clamp(-1.0, 1.0).asin()
}

/// Wraps an angle to `[-pi, pi)`.
pub(crate) fn wrap_phase(x: f64) -> f64 {
    (x + PI).rem_euclid(TAU) - PI
}

/// Phase reference `psi` used to anchor the first subcarrier set at `-pi/2`.
///
/// This is the accumulated inter-antenna delay phase `2 pi R f / BW` at the
/// first subcarrier, wrapped to `[-pi, pi)`. The combiners rotate by the
/// baseband offset `f_m - f_c`, so the reference frequency is `-BW/2`; this
/// coincides with the carrier-referenced value `f_c - BW/2` whenever
/// `R f_c / BW` is an integer.
pub fn codebook_psi(cfg: &SystemConfig) -> f64 {
    let first = cfg.subcarrier_offset_hz(1);
    wrap_phase(TAU * cfg.diversity as f64 * first / cfg.bandwidth_hz)
}

/// Inter-antenna phase step `sgn(psi) pi - psi`, with `sgn(0) = +1`.
pub fn analog_phase_step(cfg: &SystemConfig) -> f64 {
    let psi = codebook_psi(cfg);
    let sign = if psi >= 0.0 { 1.0 } else { -1.0 };
    sign * PI - psi
}

/// Per-antenna phase and delay taps of one architecture.
///
/// Taps an architecture does not have are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TapSet {
    pub architecture: Architecture,
    /// Analog phase taps (rad).
    pub phase_analog: Vec<f64>,
    /// Analog delay taps (s).
    pub delay_analog: Vec<f64>,
    /// Digital phase taps (rad).
    pub phase_digital: Vec<f64>,
    /// Digital delay taps (s).
    pub delay_digital: Vec<f64>,
    /// Antennas per digitized branch; branch `b` covers antennas
    /// `b*branch_size .. (b+1)*branch_size`.
    pub branch_size: usize,
}

impl TapSet {
    pub fn len(&self) -> usize {
        self.phase_analog.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase_analog.is_empty()
    }

    pub fn num_branches(&self) -> usize {
        self.len() / self.branch_size
    }

    /// All-zero taps (every combiner becomes the all-ones vector).
    pub fn zeros(architecture: Architecture, n: usize, branch_size: usize) -> Self {
        Self {
            architecture,
            phase_analog: vec![0.0; n],
            delay_analog: vec![0.0; n],
            phase_digital: vec![0.0; n],
            delay_digital: vec![0.0; n],
            branch_size,
        }
    }

    /// Checks that the taps are realizable by their architecture: unused taps
    /// are zero and hybrid digital taps are shared within each sub-array.
    pub fn check_structure(&self) -> Result<()> {
        let n = self.len();
        if [self.delay_analog.len(), self.phase_digital.len(), self.delay_digital.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(config_err("tap vectors have inconsistent lengths"));
        }
        if self.branch_size == 0 || n % self.branch_size != 0 {
            return Err(config_err("branch size does not divide the antenna count"));
        }
        let zero = |v: &[f64]| v.iter().all(|&x| x == 0.0);
        match self.architecture {
            Architecture::Analog => {
                if self.branch_size != n || !zero(&self.phase_digital) || !zero(&self.delay_digital) {
                    return Err(config_err("analog taps must not use digital phase or delay"));
                }
            }
            Architecture::Hybrid => {
                if !zero(&self.phase_digital) {
                    return Err(config_err("hybrid taps must not use digital phase"));
                }
                for chunk in self.delay_digital.chunks(self.branch_size) {
                    if chunk.iter().any(|&t| t != chunk[0]) {
                        return Err(config_err("hybrid digital delay must be constant per sub-array"));
                    }
                }
            }
            Architecture::Digital => {
                if self.branch_size != 1 || !zero(&self.phase_analog) || !zero(&self.delay_analog) {
                    return Err(config_err("digital taps must not use analog phase or delay"));
                }
            }
        }
        Ok(())
    }
}

/// Tap settings that realize the diversity-`R` DFT codebook on `arch`.
pub fn make_taps(cfg: &SystemConfig, arch: Architecture) -> Result<TapSet> {
    cfg.validate_for(arch)?;
    let n = cfg.num_rx;
    let dtau = cfg.delay_step_s();
    let dphi = analog_phase_step(cfg);
    let mut taps = TapSet::zeros(arch, n, n);
    match arch {
        Architecture::Analog => {
            for i in 0..n {
                taps.phase_analog[i] = i as f64 * dphi;
                taps.delay_analog[i] = i as f64 * dtau;
            }
        }
        Architecture::Hybrid => {
            let nr = cfg.sub_array_size;
            taps.branch_size = nr;
            for i in 0..n {
                let base = (i / nr) * nr;
                taps.phase_analog[i] = i as f64 * dphi;
                taps.delay_analog[i] = (i - base) as f64 * dtau;
                taps.delay_digital[i] = base as f64 * dtau;
            }
        }
        Architecture::Digital => {
            let step = cfg.digital_phase_step.unwrap_or(dphi);
            taps.branch_size = 1;
            for i in 0..n {
                taps.phase_digital[i] = i as f64 * step;
                taps.delay_digital[i] = i as f64 * dtau;
            }
        }
    }
    Ok(taps)
}

/// Assignment of pilot subcarriers to probed directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubcarrierMap {
    /// `sets[d-1]` holds the `R` subcarriers (1-based, increasing) of direction `d`.
    pub sets: Vec<Vec<usize>>,
    /// Union of all sets, sorted.
    pub pilots: Vec<usize>,
}

impl SubcarrierMap {
    pub fn directions(&self) -> usize {
        self.sets.len()
    }

    pub fn diversity(&self) -> usize {
        self.sets.first().map_or(0, Vec::len)
    }

    /// Direction (1-based) a pilot subcarrier belongs to.
    pub fn direction_of(&self, m: usize) -> Option<usize> {
        self.sets.iter().position(|s| s.contains(&m)).map(|d| d + 1)
    }
}

/// `m_{d,r} = 1 + round((M_tot - 1) [(d-1)/(D R) + (r-1)/R])`.
///
/// Sets interleave uniformly across the band; set 1 starts at the first
/// subcarrier and members of one set are `(M_tot - 1)/R` apart.
pub fn subcarrier_map(cfg: &SystemConfig) -> Result<SubcarrierMap> {
    let d_count = cfg.directions;
    let r_count = cfg.diversity;
    if d_count == 0 || r_count == 0 || d_count * r_count > cfg.num_subcarriers {
        return Err(config_err(format!(
            "cannot place D*R = {} pilots on {} subcarriers",
            d_count * r_count,
            cfg.num_subcarriers
        )));
    }
    let span = (cfg.num_subcarriers - 1) as f64;
    let dr = (d_count * r_count) as f64;
    let sets: Vec<Vec<usize>> = (0..d_count)
        .map(|d| {
            (0..r_count)
                .map(|r| 1 + (span * (d as f64 / dr + r as f64 / r_count as f64)).round() as usize)
                .collect()
        })
        .collect();
    let mut pilots: Vec<usize> = sets.iter().flatten().copied().collect();
    pilots.sort_unstable();
    if pilots.windows(2).any(|w| w[0] == w[1]) {
        return Err(config_err(format!(
            "subcarrier sets collide after rounding (D*R = {} too close to M_tot = {})",
            d_count * r_count,
            cfg.num_subcarriers
        )));
    }
    Ok(SubcarrierMap { sets, pilots })
}

/// Per-subcarrier combining vector `w[m]` with unit-magnitude entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Combiner {
    pub weights: Vec<Complex64>,
}

fn tap_weights(offset_hz: f64, delays: &[f64], phases: &[f64]) -> Vec<Complex64> {
    delays
        .iter()
        .zip(phases)
        .map(|(&tau, &phi)| cis_neg(TAU * offset_hz * tau + phi))
        .collect()
}

fn check_subcarrier(m: usize, cfg: &SystemConfig) -> Result<()> {
    if m == 0 || m > cfg.num_subcarriers {
        return Err(domain_err(format!("subcarrier {m} outside 1..={}", cfg.num_subcarriers)));
    }
    Ok(())
}

/// Analog part `w_A[m]`.
pub fn analog_weights(m: usize, taps: &TapSet, cfg: &SystemConfig) -> Result<Vec<Complex64>> {
    check_subcarrier(m, cfg)?;
    Ok(tap_weights(cfg.subcarrier_offset_hz(m), &taps.delay_analog, &taps.phase_analog))
}

/// Digital part `w_D[m]`.
pub fn digital_weights(m: usize, taps: &TapSet, cfg: &SystemConfig) -> Result<Vec<Complex64>> {
    check_subcarrier(m, cfg)?;
    Ok(tap_weights(cfg.subcarrier_offset_hz(m), &taps.delay_digital, &taps.phase_digital))
}

/// `w[m] = w_A[m] ⊙ w_D[m]`.
pub fn combiner_at(m: usize, taps: &TapSet, cfg: &SystemConfig) -> Result<Combiner> {
    let analog = analog_weights(m, taps, cfg)?;
    let digital = digital_weights(m, taps, cfg)?;
    let weights = analog.iter().zip(&digital).map(|(a, d)| a * d).collect();
    Ok(Combiner { weights })
}

/// `w^H x`.
pub fn inner(w: &[Complex64], x: &[Complex64]) -> Complex64 {
    w.iter().zip(x).map(|(a, b)| a.conj() * b).sum()
}

/// Beamforming gain `|w^H a_R(theta)|^2`.
pub fn beam_gain(w: &[Complex64], theta: f64) -> f64 {
    inner(w, &steering_vector_unchecked(theta, w.len())).norm_sqr()
}
