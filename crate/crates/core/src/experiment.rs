//! Monte-Carlo experiment orchestration, configuration files and CSV output.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::array::{beam_gain, combiner_at, make_taps, subcarrier_map, SubcarrierMap, TapSet};
use crate::channel::{precoder, ChannelParams, ChannelRealization, FadingModel};
use crate::config::{Architecture, SystemConfig};
use crate::error::{config_err, Error, Result};
use crate::hardware::diversity_for;
use crate::impairments::{perturb_taps, AdcResolution, Frontend, FrontendInput, ImpairmentSpec, ReceivedPilots};
use crate::power::{total_power, PowerParams};
use crate::stats::{median_abs, rmse};
use crate::training::{build_dictionary, estimate_aoa, measure_direction_powers, Dictionary, EstimationResult};
use crate::Execution;

/// Generator streams within one trial.
pub const CHANNEL_STREAM: u64 = 0;
pub const TAP_STREAM: u64 = 1;
pub const NOISE_STREAM: u64 = 2;

/// Generator for `stream` of trial `trial`, keyed by `seed + trial`.
pub fn trial_rng(seed: u64, trial: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial));
    rng.set_stream(stream);
    rng
}

/// Quantity varied across a sweep. Values use the units of the matching
/// configuration key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "bandwidth_hz", alias = "BW")]
    Bandwidth,
    #[serde(rename = "snr_db", alias = "SNR")]
    Snr,
    #[serde(rename = "phase_std_deg", alias = "sigma_P")]
    PhaseStd,
    #[serde(rename = "delay_std_ps", alias = "sigma_T")]
    DelayStd,
    #[serde(rename = "adc_bits")]
    AdcBits,
    #[serde(rename = "num_rx", alias = "N_R")]
    NumRx,
}

impl SweepAxis {
    pub fn key(self) -> &'static str {
        match self {
            SweepAxis::Bandwidth => "bandwidth_hz",
            SweepAxis::Snr => "snr_db",
            SweepAxis::PhaseStd => "phase_std_deg",
            SweepAxis::DelayStd => "delay_std_ps",
            SweepAxis::AdcBits => "adc_bits",
            SweepAxis::NumRx => "num_rx",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(s))
            .map_err(|_| config_err(format!("unknown sweep axis `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub scenario: String,
    pub system: SystemConfig,
    /// Keep `D = 2 N_R` when `N_R` is swept.
    pub auto_directions: bool,
    /// Keep `f_s = 2 BW` when the bandwidth is swept.
    pub auto_sampling: bool,
    pub channel: ChannelParams,
    pub impairments: ImpairmentSpec,
    /// Maximum delay compensation of the analog TTD elements (s).
    pub tc_max_s: f64,
    pub power_of_two: bool,
    pub architectures: Vec<Architecture>,
    pub sweep: Option<Sweep>,
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub report_power: bool,
    pub power: PowerParams,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            scenario: "default".into(),
            system: SystemConfig::default(),
            auto_directions: true,
            auto_sampling: true,
            channel: ChannelParams::default(),
            impairments: ImpairmentSpec::default(),
            tc_max_s: 15e-9,
            power_of_two: true,
            architectures: Architecture::ALL.to_vec(),
            sweep: None,
            trials: 500,
            seed: 1,
            output: None,
            report_power: false,
            power: PowerParams::default(),
        }
    }
}

/// Configuration and impairments at one sweep point, before the per-architecture
/// diversity order is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: Option<f64>,
    pub system: SystemConfig,
    pub impairments: ImpairmentSpec,
}

impl ExperimentPlan {
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        match &self.sweep {
            None => Ok(vec![SweepPoint {
                value: None,
                system: self.system.clone(),
                impairments: self.impairments.clone(),
            }]),
            Some(s) => s.values.iter().map(|&v| self.point(s.axis, v)).collect(),
        }
    }

    fn point(&self, axis: SweepAxis, value: f64) -> Result<SweepPoint> {
        let mut system = self.system.clone();
        let mut impairments = self.impairments.clone();
        match axis {
            SweepAxis::Bandwidth => {
                system.bandwidth_hz = value;
                if self.auto_sampling {
                    system.sampling_hz = 2.0 * value;
                }
            }
            SweepAxis::Snr => system.snr_db = value,
            SweepAxis::PhaseStd => impairments.phase_std = value.to_radians(),
            SweepAxis::DelayStd => impairments.delay_std = value * 1e-12,
            SweepAxis::AdcBits => impairments.adc = AdcResolution::from_f64(value)?,
            SweepAxis::NumRx => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(config_err(format!("num_rx sweep value {value} is not a positive integer")));
                }
                system.num_rx = value as usize;
                if self.auto_directions {
                    system.directions = 2 * system.num_rx;
                }
            }
        }
        Ok(SweepPoint { value: Some(value), system, impairments })
    }

    /// Diversity order for `arch` at a sweep point; 0 means infeasible.
    pub fn diversity(&self, system: &SystemConfig, arch: Architecture) -> usize {
        diversity_for(system, arch, self.tc_max_s, self.power_of_two)
    }

    /// Checks the plan and every sweep point for every requested architecture.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(config_err("trials must be at least 1"));
        }
        if self.architectures.is_empty() {
            return Err(config_err("architectures must not be empty"));
        }
        if !(self.tc_max_s >= 0.0 && self.tc_max_s.is_finite()) {
            return Err(config_err("tc_max_ns must be finite and non-negative"));
        }
        self.channel.validate()?;
        self.power.validate()?;
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(config_err("sweep_values must not be empty"));
            }
            let up = s.values.windows(2).all(|w| w[0] < w[1]);
            let down = s.values.windows(2).all(|w| w[0] > w[1]);
            if !(up || down) {
                return Err(config_err("sweep_values must be strictly increasing or strictly decreasing"));
            }
        }
        for point in self.points()? {
            point.impairments.validate()?;
            for &arch in &self.architectures {
                if arch == Architecture::Hybrid
                    && (point.system.sub_array_size == 0 || point.system.num_rx % point.system.sub_array_size != 0)
                {
                    return Err(config_err(format!(
                        "sub_array_size {} does not divide num_rx {} (hybrid requested)",
                        point.system.sub_array_size, point.system.num_rx
                    )));
                }
                // the map must fit with R = 1 even where the architecture is infeasible
                point.system.validate_for(arch)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    scenario: Option<String>,
    carrier_hz: Option<f64>,
    bandwidth_hz: Option<f64>,
    num_subcarriers: Option<usize>,
    num_tx: Option<usize>,
    num_rx: Option<usize>,
    sub_array_size: Option<usize>,
    directions: Option<usize>,
    dictionary_size: Option<usize>,
    sampling_hz: Option<f64>,
    snr_db: Option<f64>,
    num_subbands: Option<usize>,
    digital_phase_step_rad: Option<f64>,
    tc_max_ns: Option<f64>,
    power_of_two: Option<bool>,
    num_clusters: Option<usize>,
    dominance_db: Option<f64>,
    rays_per_cluster: Option<usize>,
    max_delay_ns: Option<f64>,
    max_angle_deg: Option<f64>,
    fading: Option<FadingModel>,
    phase_std_deg: Option<f64>,
    delay_std_ps: Option<f64>,
    adc_bits: Option<f64>,
    clip_scale: Option<f64>,
    architectures: Option<Vec<Architecture>>,
    trials: Option<usize>,
    seed: Option<u64>,
    sweep_axis: Option<SweepAxis>,
    sweep_values: Option<Vec<f64>>,
    output: Option<PathBuf>,
    report_power: Option<bool>,
    power: Option<PowerParams>,
}

impl RawPlan {
    fn resolve(self) -> Result<ExperimentPlan> {
        let d = ExperimentPlan::default();
        let mut sys = d.system.clone();
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { sys.$field = v; } )* };
        }
        take!(carrier_hz, bandwidth_hz, num_subcarriers, num_tx, num_rx, sub_array_size, dictionary_size, snr_db, num_subbands);
        sys.digital_phase_step = self.digital_phase_step_rad;
        sys.directions = self.directions.unwrap_or(2 * sys.num_rx);
        sys.sampling_hz = self.sampling_hz.unwrap_or(2.0 * sys.bandwidth_hz);

        let mut channel = d.channel.clone();
        if let Some(v) = self.num_clusters {
            channel.num_clusters = v;
        }
        if let Some(v) = self.dominance_db {
            channel.dominance_db = v;
        }
        if let Some(v) = self.rays_per_cluster {
            channel.rays_per_cluster = v;
        }
        if let Some(v) = self.max_delay_ns {
            channel.max_delay_s = v * 1e-9;
        }
        if let Some(v) = self.max_angle_deg {
            channel.max_angle = v.to_radians();
        }
        if let Some(v) = self.fading {
            channel.fading = v;
        }

        let mut impairments = d.impairments.clone();
        if let Some(v) = self.phase_std_deg {
            impairments.phase_std = v.to_radians();
        }
        if let Some(v) = self.delay_std_ps {
            impairments.delay_std = v * 1e-12;
        }
        if let Some(v) = self.adc_bits {
            impairments.adc = AdcResolution::from_f64(v)?;
        }
        if let Some(v) = self.clip_scale {
            impairments.clip_scale = v;
        }

        let sweep = match (self.sweep_axis, self.sweep_values) {
            (None, None) => None,
            (Some(axis), Some(values)) => Some(Sweep { axis, values }),
            _ => return Err(config_err("sweep_axis and sweep_values must be given together")),
        };

        Ok(ExperimentPlan {
            scenario: self.scenario.unwrap_or(d.scenario),
            system: sys,
            auto_directions: self.directions.is_none(),
            auto_sampling: self.sampling_hz.is_none(),
            channel,
            impairments,
            tc_max_s: self.tc_max_ns.map_or(d.tc_max_s, |v| v * 1e-9),
            power_of_two: self.power_of_two.unwrap_or(d.power_of_two),
            architectures: self.architectures.unwrap_or(d.architectures),
            sweep,
            trials: self.trials.unwrap_or(d.trials),
            seed: self.seed.unwrap_or(d.seed),
            output: self.output,
            report_power: self.report_power.unwrap_or(d.report_power),
            power: self.power.unwrap_or_default(),
        })
    }
}

/// Keys accepted at the top level of a configuration file.
pub const CONFIG_KEYS: &[&str] = &[
    "scenario",
    "carrier_hz",
    "bandwidth_hz",
    "num_subcarriers",
    "num_tx",
    "num_rx",
    "sub_array_size",
    "directions",
    "dictionary_size",
    "sampling_hz",
    "snr_db",
    "num_subbands",
    "digital_phase_step_rad",
    "tc_max_ns",
    "power_of_two",
    "num_clusters",
    "dominance_db",
    "rays_per_cluster",
    "max_delay_ns",
    "max_angle_deg",
    "fading",
    "phase_std_deg",
    "delay_std_ps",
    "adc_bits",
    "clip_scale",
    "architectures",
    "trials",
    "seed",
    "sweep_axis",
    "sweep_values",
    "output",
    "report_power",
    "power",
];

/// Line (1-based) where `key` is assigned, if it is.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

/// Parses a plan from TOML text. `origin` labels error messages.
pub fn parse_config(text: &str, origin: &Path) -> Result<ExperimentPlan> {
    let parse_error = |message: String| Error::Parse { path: origin.to_path_buf(), message };
    let raw: RawPlan = toml::from_str(text).map_err(|e| parse_error(e.to_string().trim_end().to_string()))?;
    let plan = raw.resolve().and_then(|p| p.validate().map(|_| p));
    plan.map_err(|e| {
        let msg = e.to_string();
        // point at the first key the message names
        let located = CONFIG_KEYS
            .iter()
            .filter(|k| msg.contains(*k))
            .find_map(|k| line_of(text, k).map(|n| format!("line {n} ({k}): {msg}")));
        parse_error(located.unwrap_or(msg))
    })
}

/// Reads and validates an experiment configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentPlan> {
    let path = path.as_ref();
    let mut text = String::new();
    fs::File::open(path)?.read_to_string(&mut text)?;
    parse_config(&text, path)
}

/// Ground truth and estimate of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub true_aoa: f64,
    pub estimate: EstimationResult,
}

impl TrialOutcome {
    pub fn error_deg(&self) -> f64 {
        (self.estimate.aoa - self.true_aoa).to_degrees()
    }
}

/// Everything fixed across the trials of one (architecture, sweep point).
pub struct TrialSetup {
    pub system: SystemConfig,
    pub architecture: Architecture,
    pub channel: ChannelParams,
    pub impairments: ImpairmentSpec,
    pub taps: TapSet,
    pub map: SubcarrierMap,
    pub dictionary: Dictionary,
    frontend: Frontend,
}

impl TrialSetup {
    /// `system.diversity` must already hold the order to use.
    pub fn new(
        system: &SystemConfig,
        architecture: Architecture,
        channel: &ChannelParams,
        impairments: &ImpairmentSpec,
    ) -> Result<Self> {
        let dictionary = build_dictionary(system)?;
        Self::with_dictionary(system, architecture, channel, impairments, dictionary)
    }

    pub fn with_dictionary(
        system: &SystemConfig,
        architecture: Architecture,
        channel: &ChannelParams,
        impairments: &ImpairmentSpec,
        dictionary: Dictionary,
    ) -> Result<Self> {
        system.validate_for(architecture)?;
        channel.validate()?;
        impairments.validate()?;
        let taps = make_taps(system, architecture)?;
        let map = subcarrier_map(system)?;
        let frontend = Frontend::new(system, architecture, &map)?;
        Ok(Self {
            system: system.clone(),
            architecture,
            channel: channel.clone(),
            impairments: impairments.clone(),
            taps,
            map,
            dictionary,
            frontend,
        })
    }

    /// Channel, precoder and received pilots of trial `trial`.
    pub fn simulate_pilots(&self, seed: u64, trial: u64) -> Result<(ChannelRealization, ReceivedPilots)> {
        let channel = ChannelRealization::sample(&mut trial_rng(seed, trial, CHANNEL_STREAM), &self.system, &self.channel);
        let v = precoder(&channel)?;
        let taps = perturb_taps(&self.taps, &self.impairments, &mut trial_rng(seed, trial, TAP_STREAM));
        let total: f64 = channel.clusters.iter().map(|c| c.power).sum();
        let input = FrontendInput {
            channel: &channel,
            precoder: &v,
            taps: &taps,
            spec: &self.impairments,
            noise_var: self.system.noise_variance(total),
        };
        let y = self.frontend.receive(&input, &mut trial_rng(seed, trial, NOISE_STREAM))?;
        Ok((channel, y))
    }

    pub fn run_trial(&self, seed: u64, trial: u64) -> Result<TrialOutcome> {
        let (channel, y) = self.simulate_pilots(seed, trial)?;
        let p = measure_direction_powers(&y, &self.map)?;
        let estimate = estimate_aoa(&p, &self.dictionary)?;
        Ok(TrialOutcome { true_aoa: channel.dominant().aoa, estimate })
    }

    /// Runs trials `0..trials`; results come back in trial order whatever the
    /// execution mode.
    pub fn run_trials(&self, seed: u64, trials: usize, exec: Execution) -> Result<Vec<TrialOutcome>> {
        let run = |t: usize| self.run_trial(seed, t as u64);
        match exec.effective() {
            Execution::Sequential => (0..trials).map(run).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..trials).into_par_iter().map(run).collect()
            }
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel => unreachable!("effective() falls back to sequential"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    /// The delay range cannot support `R >= 1`.
    Infeasible,
    Failed(String),
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowStatus::Ok => f.write_str("ok"),
            RowStatus::Infeasible => f.write_str("infeasible"),
            RowStatus::Failed(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl FromStr for RowStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(RowStatus::Ok),
            "infeasible" => Ok(RowStatus::Infeasible),
            _ => s
                .strip_prefix("error: ")
                .map(|m| RowStatus::Failed(m.to_string()))
                .ok_or_else(|| config_err(format!("unknown row status `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub architecture: Architecture,
    pub sweep_axis: Option<SweepAxis>,
    pub sweep_value: Option<f64>,
    pub diversity: usize,
    pub trials: usize,
    pub rmse_deg: Option<f64>,
    pub median_abs_deg: Option<f64>,
    pub power_w: Option<f64>,
    pub status: RowStatus,
}

/// Runs every (sweep point, architecture) pair. Errors inside a row are
/// recorded in its status; only plan-level problems abort the run.
pub fn run_experiment(plan: &ExperimentPlan, exec: Execution) -> Result<Vec<ResultRow>> {
    plan.validate()?;
    let axis = plan.sweep.as_ref().map(|s| s.axis);
    let mut rows = Vec::new();
    for point in plan.points()? {
        let dictionary = build_dictionary(&point.system);
        for &arch in &plan.architectures {
            let r = plan.diversity(&point.system, arch);
            let mut row = ResultRow {
                scenario: plan.scenario.clone(),
                architecture: arch,
                sweep_axis: axis,
                sweep_value: point.value,
                diversity: r,
                trials: 0,
                rmse_deg: None,
                median_abs_deg: None,
                power_w: None,
                status: RowStatus::Infeasible,
            };
            if r > 0 {
                let system = SystemConfig { diversity: r, ..point.system.clone() };
                let outcome = dictionary.as_ref().map_err(|e| config_err(e.to_string())).and_then(|dict| {
                    let dict = dict.clone();
                    let setup = TrialSetup::with_dictionary(&system, arch, &plan.channel, &point.impairments, dict)?;
                    let outcomes = setup.run_trials(plan.seed, plan.trials, exec)?;
                    let power = if plan.report_power {
                        Some(total_power(&system, &plan.power, arch)?.total)
                    } else {
                        None
                    };
                    Ok((outcomes, power))
                });
                match outcome {
                    Ok((outcomes, power)) => {
                        let errors: Vec<f64> = outcomes.iter().map(TrialOutcome::error_deg).collect();
                        row.trials = errors.len();
                        row.rmse_deg = rmse(&errors);
                        row.median_abs_deg = median_abs(&errors);
                        row.power_w = power;
                        row.status = RowStatus::Ok;
                    }
                    Err(e) => row.status = RowStatus::Failed(e.to_string()),
                }
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 10] = [
    "scenario",
    "architecture",
    "sweep_axis",
    "sweep_value",
    "diversity",
    "trials",
    "rmse_deg",
    "median_abs_deg",
    "power_w",
    "status",
];

/// Modeling assumptions recorded in every results file.
pub const ASSUMPTIONS: &[&str] = &[
    "SNR per transmit/receive antenna pair before beamforming; cluster powers sum to one",
    "unit BPSK pilots with a fixed pseudo-random sign pattern",
    "ADC: uniform mid-rise, clip at clip_scale signal std, AGC gain undone before digital combining",
    "digital array: every ADC chain counts an SCA/OTA and an AGC; no time-interleaver",
    "analog and hybrid arrays count one time-interleaver",
];

/// Six significant digits, shortest decimal form; non-finite values as
/// `inf`, `-inf` or `nan`.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn opt_field(x: Option<f64>) -> String {
    x.map(format_sig6).unwrap_or_default()
}

/// Run-level metadata written as `#` comment lines.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub scenario: String,
    pub seed: u64,
    pub trials: usize,
    pub sweep: Option<SweepAxis>,
}

impl RunMetadata {
    pub fn from_plan(plan: &ExperimentPlan) -> Self {
        Self {
            scenario: plan.scenario.clone(),
            seed: plan.seed,
            trials: plan.trials,
            sweep: plan.sweep.as_ref().map(|s| s.axis),
        }
    }
}

/// Writes metadata comments, the header, then one line per row.
pub fn emit_csv<W: Write>(mut out: W, rows: &[ResultRow], meta: &RunMetadata) -> Result<()> {
    if rows.is_empty() {
        return Err(config_err("no result rows to write"));
    }
    writeln!(out, "# ttd-beamsim {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# scenario: {}", meta.scenario)?;
    writeln!(out, "# seed: {}", meta.seed)?;
    writeln!(out, "# trials_per_point: {}", meta.trials)?;
    writeln!(out, "# sweep: {}", meta.sweep.map_or("none", SweepAxis::key))?;
    for a in ASSUMPTIONS {
        writeln!(out, "# assumption: {a}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.architecture.name().to_string(),
            r.sweep_axis.map(|a| a.key().to_string()).unwrap_or_default(),
            opt_field(r.sweep_value),
            r.diversity.to_string(),
            r.trials.to_string(),
            opt_field(r.rmse_deg),
            opt_field(r.median_abs_deg),
            opt_field(r.power_w),
            r.status.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: impl AsRef<Path>, rows: &[ResultRow], meta: &RunMetadata) -> Result<()> {
    let mut buf = Vec::new();
    emit_csv(&mut buf, rows, meta)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Reads rows written by [`emit_csv`], skipping comment lines.
pub fn parse_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(config_err(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let num = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| config_err(format!("bad number `{s}`")))
        }
    };
    let int = |s: &str| -> Result<usize> { s.parse().map_err(|_| config_err(format!("bad integer `{s}`"))) };
    reader
        .records()
        .map(|rec| {
            let rec = rec?;
            Ok(ResultRow {
                scenario: rec[0].to_string(),
                architecture: rec[1].parse()?,
                sweep_axis: if rec[2].is_empty() { None } else { Some(rec[2].parse()?) },
                sweep_value: num(&rec[3])?,
                diversity: int(&rec[4])?,
                trials: int(&rec[5])?,
                rmse_deg: num(&rec[6])?,
                median_abs_deg: num(&rec[7])?,
                power_w: num(&rec[8])?,
                status: rec[9].parse()?,
            })
        })
        .collect()
}

/// Beam pattern of every probed subcarrier: `|w[m]^H a_R(theta)|^2` over
/// `points` angles uniformly spaced in the open interval `(-90, 90)` degrees.
pub fn write_codebook<W: Write>(out: W, system: &SystemConfig, arch: Architecture, points: usize) -> Result<()> {
    if points == 0 {
        return Err(config_err("need at least one angle point"));
    }
    let taps = make_taps(system, arch)?;
    let map = subcarrier_map(system)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["architecture", "subcarrier", "direction", "offset_hz", "angle_deg", "gain"])?;
    for &m in &map.pilots {
        let comb = combiner_at(m, &taps, system)?;
        let d = map.direction_of(m).expect("pilot belongs to a set");
        for i in 0..points {
            let deg = -90.0 + (i as f64 + 0.5) * 180.0 / points as f64;
            w.write_record([
                arch.name().to_string(),
                m.to_string(),
                d.to_string(),
                format_sig6(system.subcarrier_offset_hz(m)),
                format_sig6(deg),
                format_sig6(beam_gain(&comb.weights, deg.to_radians())),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
