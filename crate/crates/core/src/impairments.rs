//! Hardware non-idealities and the receive front-end.
//!
//! Analog phase and delay taps suffer time-invariant Gaussian errors. Each
//! digitized stream passes through an AGC and a uniform mid-rise ADC; the
//! point where that happens depends on the architecture:
//!
//! * analog: one stream after full analog combining,
//! * hybrid: one stream per sub-array, then digital delay and combine,
//! * digital: one stream per antenna, then digital delay, phase and combine.
//!
//! Quantization acts on time-domain samples obtained with a unitary
//! `M_tot`-point inverse DFT of the loaded spectrum. The cyclic prefix is
//! assumed ideal, so digital integer delays are exact spectral phase ramps.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::{Fft, FftPlanner};

use crate::array::{analog_weights, digital_weights, SubcarrierMap, TapSet};
use crate::channel::{complex_normal, subband_of, ChannelRealization};
use crate::config::{Architecture, SystemConfig};
use crate::error::{config_err, domain_err, Error, Result};

/// ADC resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdcResolution {
    #[default]
    Infinite,
    Bits(u32),
}

impl AdcResolution {
    /// Maps a sweep/config value to a resolution: non-finite means infinite.
    pub fn from_f64(bits: f64) -> Result<Self> {
        if bits.is_infinite() && bits > 0.0 {
            return Ok(AdcResolution::Infinite);
        }
        if !(bits >= 1.0) || bits.fract() != 0.0 || bits > 30.0 {
            return Err(config_err(format!("ADC resolution must be an integer in 1..=30 or inf, got {bits}")));
        }
        Ok(AdcResolution::Bits(bits as u32))
    }

    pub fn as_f64(self) -> f64 {
        match self {
            AdcResolution::Infinite => f64::INFINITY,
            AdcResolution::Bits(b) => b as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpairmentSpec {
    /// Phase-tap error standard deviation (rad).
    pub phase_std: f64,
    /// Delay-tap error standard deviation (s).
    pub delay_std: f64,
    pub adc: AdcResolution,
    /// ADC full scale in units of the per-axis signal standard deviation.
    pub clip_scale: f64,
}

impl Default for ImpairmentSpec {
    fn default() -> Self {
        Self { phase_std: 0.0, delay_std: 0.0, adc: AdcResolution::Infinite, clip_scale: 3.0 }
    }
}

impl ImpairmentSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.phase_std >= 0.0 && self.phase_std.is_finite()) {
            return Err(config_err("phase error std must be finite and non-negative"));
        }
        if !(self.delay_std >= 0.0 && self.delay_std.is_finite()) {
            return Err(config_err("delay error std must be finite and non-negative"));
        }
        if let AdcResolution::Bits(b) = self.adc {
            if b == 0 {
                return Err(config_err("ADC needs at least one bit"));
            }
        }
        if !(self.clip_scale > 0.0 && self.clip_scale.is_finite()) {
            return Err(config_err("clip scale must be positive"));
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.phase_std == 0.0 && self.delay_std == 0.0 && self.adc == AdcResolution::Infinite
    }
}

/// Replaces the analog taps with independent Gaussian draws centered on their
/// ideal values. Digital taps are never perturbed.
pub fn perturb_taps<R: Rng + ?Sized>(taps: &TapSet, spec: &ImpairmentSpec, rng: &mut R) -> TapSet {
    let mut out = taps.clone();
    if taps.architecture == Architecture::Digital {
        return out;
    }
    if spec.phase_std > 0.0 {
        let noise = Normal::new(0.0, spec.phase_std).expect("validated std");
        for p in &mut out.phase_analog {
            *p += noise.sample(rng);
        }
    }
    if spec.delay_std > 0.0 {
        let noise = Normal::new(0.0, spec.delay_std).expect("validated std");
        for t in &mut out.delay_analog {
            *t += noise.sample(rng);
        }
    }
    out
}

fn sample_variance(samples: &[Complex64]) -> f64 {
    let n = samples.len() as f64;
    let mean: Complex64 = samples.iter().sum::<Complex64>() / n;
    samples.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / n
}

/// Scales `samples` to unit (joint I/Q) sample variance. Returns the scaled
/// sequence and the gain that was applied.
pub fn agc_normalize(samples: &[Complex64]) -> Result<(Vec<Complex64>, f64)> {
    if samples.is_empty() {
        return Err(domain_err("AGC input is empty"));
    }
    let var = sample_variance(samples);
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::ZeroVariance);
    }
    let gain = 1.0 / var.sqrt();
    Ok((samples.iter().map(|z| z * gain).collect(), gain))
}

/// Uniform mid-rise quantizer with `2^bits` levels over `[-clip, clip]`.
pub fn quantize_real(x: f64, bits: u32, clip: f64) -> f64 {
    let levels = 1i64 << bits;
    let step = 2.0 * clip / levels as f64;
    let half = levels / 2;
    let idx = ((x / step).floor() as i64).clamp(-half, half - 1);
    (idx as f64 + 0.5) * step
}

/// Quantizes I and Q independently; infinite resolution is the identity.
pub fn quantize(samples: &[Complex64], adc: AdcResolution, clip: f64) -> Vec<Complex64> {
    match adc {
        AdcResolution::Infinite => samples.to_vec(),
        AdcResolution::Bits(bits) => samples
            .iter()
            .map(|z| Complex64::new(quantize_real(z.re, bits, clip), quantize_real(z.im, bits, clip)))
            .collect(),
    }
}

/// Received pilot symbols `Y[m]`, keyed by subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedPilots {
    /// Sorted 1-based subcarrier indices.
    pub subcarriers: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl ReceivedPilots {
    pub fn get(&self, m: usize) -> Option<Complex64> {
        self.subcarriers.binary_search(&m).ok().map(|i| self.values[i])
    }
}

/// Seed of the fixed pilot sign pattern shared by transmitter and receiver.
const PILOT_SEED: u64 = 0x5eed_b175;

/// BPSK pilot symbols `s_m = +-1` for `m = 1..=m_tot` (index `m - 1`).
///
/// The signs follow a fixed pseudo-random pattern. A constant symbol would
/// make the loaded spectrum of each branch an impulse in time, whose peaks
/// the ADC clips; random signs keep the samples close to Gaussian.
pub fn pilot_symbols(m_tot: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(PILOT_SEED);
    (0..m_tot).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// Everything a front-end run needs besides the random generator.
pub struct FrontendInput<'a> {
    pub channel: &'a ChannelRealization,
    pub precoder: &'a [Complex64],
    pub taps: &'a TapSet,
    pub spec: &'a ImpairmentSpec,
    pub noise_var: f64,
}

/// Receive chain for one architecture and subcarrier map.
///
/// Holds the FFT plans so repeated trials do not re-plan.
pub struct Frontend {
    cfg: SystemConfig,
    architecture: Architecture,
    map: SubcarrierMap,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    symbols: Vec<f64>,
}

impl Frontend {
    pub fn new(cfg: &SystemConfig, architecture: Architecture, map: &SubcarrierMap) -> Result<Self> {
        cfg.validate_for(architecture)?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            cfg: cfg.clone(),
            architecture,
            map: map.clone(),
            forward: planner.plan_fft_forward(cfg.num_subcarriers),
            inverse: planner.plan_fft_inverse(cfg.num_subcarriers),
            symbols: pilot_symbols(cfg.num_subcarriers),
        })
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    /// Produces `Y[m]` for every pilot subcarrier.
    ///
    /// Pilot `m` carries the BPSK symbol of [`pilot_symbols`]. Noise `CN(0, noise_var I)` is
    /// added per antenna before combining; pilot-subcarrier noise is drawn
    /// first, in pilot order, so finite- and infinite-resolution runs with the
    /// same generator see the same noise on the pilots.
    pub fn receive<R: Rng + ?Sized>(&self, input: &FrontendInput<'_>, rng: &mut R) -> Result<ReceivedPilots> {
        let taps = input.taps;
        let cfg = &self.cfg;
        if taps.architecture != self.architecture {
            return Err(config_err(format!(
                "{} taps fed to a {} front-end",
                taps.architecture, self.architecture
            )));
        }
        if taps.len() != cfg.num_rx || input.channel.num_rx != cfg.num_rx {
            return Err(config_err("tap/channel antenna count does not match the configuration"));
        }
        if input.channel.num_subbands() != cfg.num_subbands {
            return Err(config_err("channel sub-band count does not match the configuration"));
        }
        taps.check_structure()?;
        input.spec.validate()?;

        let branch = taps.branch_size;
        let branches = taps.num_branches();
        let responses = input.channel.precoded_responses(input.precoder);
        let pilots = &self.map.pilots;

        // Branch outputs after analog combining, one spectrum per branch, at
        // the pilot subcarriers.
        let mut pilot_branch = vec![vec![Complex64::new(0.0, 0.0); pilots.len()]; branches];
        let mut digital_pilot = Vec::with_capacity(pilots.len());
        for (p, &m) in pilots.iter().enumerate() {
            let k = subband_of(m, cfg.num_subbands, cfg.num_subcarriers);
            let hv = &responses[k - 1];
            let symbol = self.symbols[m - 1];
            let wa = analog_weights(m, taps, cfg)?;
            for b in 0..branches {
                let mut acc = Complex64::new(0.0, 0.0);
                for n in b * branch..(b + 1) * branch {
                    let y = hv[n] * symbol + complex_normal(rng, input.noise_var);
                    acc += wa[n].conj() * y;
                }
                pilot_branch[b][p] = acc;
            }
            let wd = digital_weights(m, taps, cfg)?;
            digital_pilot.push((0..branches).map(|b| wd[b * branch]).collect::<Vec<_>>());
        }

        if let AdcResolution::Bits(_) = input.spec.adc {
            self.digitize(&mut pilot_branch, branch, input, rng)?;
        }

        let values = digital_pilot
            .iter()
            .enumerate()
            .map(|(p, wd)| (0..branches).map(|b| wd[b].conj() * pilot_branch[b][p]).sum())
            .collect();
        Ok(ReceivedPilots { subcarriers: pilots.clone(), values })
    }

    /// Time-domain AGC and quantization of each branch. Unloaded subcarriers
    /// carry only (combined) noise, drawn directly with the branch variance.
    fn digitize<R: Rng + ?Sized>(
        &self,
        pilot_branch: &mut [Vec<Complex64>],
        branch_size: usize,
        input: &FrontendInput<'_>,
        rng: &mut R,
    ) -> Result<()> {
        let mtot = self.cfg.num_subcarriers;
        let pilots = &self.map.pilots;
        let branch_var = input.noise_var * branch_size as f64;
        let norm = 1.0 / (mtot as f64).sqrt();
        // per-axis full scale for a unit-variance complex signal
        let clip = input.spec.clip_scale / SQRT_2;
        for spectrum_at_pilots in pilot_branch.iter_mut() {
            let mut buf = vec![Complex64::new(0.0, 0.0); mtot];
            let mut next = 0;
            for (bin, slot) in buf.iter_mut().enumerate() {
                if next < pilots.len() && pilots[next] == bin + 1 {
                    *slot = spectrum_at_pilots[next];
                    next += 1;
                } else {
                    *slot = complex_normal(rng, branch_var);
                }
            }
            self.inverse.process(&mut buf);
            buf.iter_mut().for_each(|z| *z *= norm);

            let (scaled, gain) = agc_normalize(&buf)?;
            let mut q = quantize(&scaled, input.spec.adc, clip);
            // the back-end knows the AGC gain and undoes it before combining
            q.iter_mut().for_each(|z| *z *= norm / gain);
            self.forward.process(&mut q);
            for (slot, &m) in spectrum_at_pilots.iter_mut().zip(pilots) {
                *slot = q[m - 1];
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::make_taps;
    use rand_distr::StandardNormal;

    #[test]
    fn zero_spec_leaves_taps_untouched() {
        let cfg = SystemConfig { diversity: 2, ..Default::default() };
        let taps = make_taps(&cfg, Architecture::Analog).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(perturb_taps(&taps, &ImpairmentSpec::default(), &mut rng), taps);
    }

    #[test]
    fn digital_taps_ignore_impairments() {
        let cfg = SystemConfig { diversity: 2, ..Default::default() };
        let taps = make_taps(&cfg, Architecture::Digital).unwrap();
        let spec = ImpairmentSpec { phase_std: 0.5, delay_std: 1e-10, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(perturb_taps(&taps, &spec, &mut rng), taps);
    }

    #[test]
    fn hybrid_digital_taps_survive_perturbation() {
        let cfg = SystemConfig { diversity: 8, ..Default::default() };
        let taps = make_taps(&cfg, Architecture::Hybrid).unwrap();
        let spec = ImpairmentSpec { phase_std: 0.3, delay_std: 2e-10, ..Default::default() };
        let out = perturb_taps(&taps, &spec, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(out.delay_digital, taps.delay_digital);
        assert_ne!(out.delay_analog, taps.delay_analog);
        out.check_structure().unwrap();
    }

    #[test]
    fn agc_examples() {
        let x: Vec<Complex64> = [2.0, -2.0, 2.0, -2.0].iter().map(|&r| Complex64::new(r, 0.0)).collect();
        let (y, gain) = agc_normalize(&x).unwrap();
        assert!((gain - 0.5).abs() < 1e-15);
        assert!((y[0].re - 1.0).abs() < 1e-15);

        let unit: Vec<Complex64> = [1.0, -1.0].iter().map(|&r| Complex64::new(0.0, r)).collect();
        let (y, _) = agc_normalize(&unit).unwrap();
        for (a, b) in y.iter().zip(&unit) {
            assert!((a - b).norm() < 1e-12);
        }

        assert!(matches!(agc_normalize(&[Complex64::new(0.0, 0.0); 8]), Err(Error::ZeroVariance)));
        assert!(agc_normalize(&[]).is_err());
    }

    #[test]
    fn agc_output_has_unit_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<Complex64> = (0..5000)
            .map(|_| complex_normal(&mut rng, 7.3) + Complex64::new(0.4, -1.0))
            .collect();
        let (y, _) = agc_normalize(&x).unwrap();
        assert!((sample_variance(&y) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn one_bit_outputs_two_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<Complex64> = (0..1000).map(|_| complex_normal(&mut rng, 4.0)).collect();
        let q = quantize(&x, AdcResolution::Bits(1), 3.0);
        for z in q {
            assert!(z.re.abs() == 1.5 && z.im.abs() == 1.5);
        }
        assert_eq!(quantize(&x, AdcResolution::Infinite, 3.0), x);
    }

    #[test]
    fn quantizer_levels_are_mid_rise() {
        assert_eq!(quantize_real(0.1, 2, 2.0), 0.5);
        assert_eq!(quantize_real(-0.1, 2, 2.0), -0.5);
        assert_eq!(quantize_real(1.7, 2, 2.0), 1.5);
        assert_eq!(quantize_real(99.0, 2, 2.0), 1.5);
        assert_eq!(quantize_real(-99.0, 2, 2.0), -1.5);
    }

    /// Numerical-integration oracle: quantization noise power of a clipped
    /// mid-rise quantizer driven by `N(0, s^2)`.
    fn sqnr_oracle_db(bits: u32, sigma: f64, clip: f64) -> f64 {
        let levels = 1usize << bits;
        let step = 2.0 * clip / levels as f64;
        let pdf = |x: f64| (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        // Simpson on each cell, tails integrated out to 12 sigma
        let simpson = |a: f64, b: f64, f: &dyn Fn(f64) -> f64| {
            let n = 2000;
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for i in 1..n {
                let x = a + i as f64 * h;
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
            }
            s * h / 3.0
        };
        let mut noise = 0.0;
        for i in 0..levels {
            let lo = -clip + i as f64 * step;
            let hi = lo + step;
            let level = lo + step / 2.0;
            let a = if i == 0 { -12.0 * sigma } else { lo };
            let b = if i == levels - 1 { 12.0 * sigma } else { hi };
            noise += simpson(a, b, &|x| (x - level).powi(2) * pdf(x));
        }
        10.0 * (sigma * sigma / noise).log10()
    }

    #[test]
    fn three_bit_sqnr_matches_integration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x: Vec<Complex64> = (0..200_000).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let clip = 3.0 / SQRT_2;
        let q = quantize(&x, AdcResolution::Bits(3), clip);
        let sig: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        let err: f64 = x.iter().zip(&q).map(|(a, b)| (a - b).norm_sqr()).sum();
        let measured = 10.0 * (sig / err).log10();
        let oracle = sqnr_oracle_db(3, 1.0 / SQRT_2, clip);
        assert!((measured - oracle).abs() < 0.1, "measured {measured} dB, oracle {oracle} dB");
    }

    #[test]
    fn quantizer_is_monotone_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut xs: Vec<f64> = (0..2000).map(|_| 4.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        xs.sort_by(f64::total_cmp);
        for bits in 1..6 {
            let q: Vec<f64> = xs.iter().map(|&x| quantize_real(x, bits, 2.5)).collect();
            assert!(q.windows(2).all(|w| w[0] <= w[1]));
            assert!(q.iter().all(|v| v.abs() <= 2.5));
        }
    }

    #[test]
    fn adc_resolution_parsing() {
        assert_eq!(AdcResolution::from_f64(f64::INFINITY).unwrap(), AdcResolution::Infinite);
        assert_eq!(AdcResolution::from_f64(3.0).unwrap(), AdcResolution::Bits(3));
        for bad in [0.0, 2.5, -1.0, f64::NAN, f64::NEG_INFINITY] {
            assert!(AdcResolution::from_f64(bad).is_err());
        }
    }
}
