use std::path::Path;

use ttd_beamsim::experiment::{
    emit_csv, format_sig6, load_config, parse_config, parse_csv, run_experiment, ExperimentPlan, ResultRow, RowStatus, RunMetadata, Sweep,
    SweepAxis, TrialSetup,
};
use ttd_beamsim::{Architecture, Execution, SystemConfig};

fn quick_plan(text: &str) -> ExperimentPlan {
    parse_config(text, Path::new("inline.toml")).unwrap()
}

fn csv_bytes(plan: &ExperimentPlan, exec: Execution) -> Vec<u8> {
    let rows = run_experiment(plan, exec).unwrap();
    let mut buf = Vec::new();
    emit_csv(&mut buf, &rows, &RunMetadata::from_plan(plan)).unwrap();
    buf
}

#[test]
fn identical_plans_write_identical_bytes() {
    let plan = quick_plan("trials = 20\nseed = 42\nadc_bits = 4\nphase_std_deg = 5\nsweep_axis = \"snr_db\"\nsweep_values = [-20, -10]\n");
    let a = csv_bytes(&plan, Execution::Parallel);
    let b = csv_bytes(&plan, Execution::Parallel);
    let c = csv_bytes(&plan, Execution::Sequential);
    assert_eq!(a, b);
    assert_eq!(a, c);
    let other = ExperimentPlan { seed: 43, ..plan };
    assert_ne!(a, csv_bytes(&other, Execution::Parallel));
}

#[test]
fn narrow_bandwidths_are_infeasible_for_the_analog_array() {
    let plan = quick_plan("trials = 5\nnum_rx = 32\nsweep_axis = \"bandwidth_hz\"\nsweep_values = [0.5e9, 2e9, 2.5e9]\n");
    let rows = run_experiment(&plan, Execution::Parallel).unwrap();
    assert_eq!(rows.len(), 9);
    for row in &rows {
        let infeasible = row.architecture == Architecture::Analog && row.sweep_value.unwrap() <= 2e9;
        if infeasible {
            assert_eq!(row.status, RowStatus::Infeasible);
            assert_eq!((row.diversity, row.trials, row.rmse_deg), (0, 0, None));
        } else {
            assert_eq!(row.status, RowStatus::Ok, "{row:?}");
            assert_eq!(row.trials, 5);
            assert!(row.rmse_deg.is_some());
        }
    }
    // infeasible rows survive the CSV round trip
    let mut buf = Vec::new();
    emit_csv(&mut buf, &rows, &RunMetadata::from_plan(&plan)).unwrap();
    let sig = |x: Option<f64>| x.map(|v| format_sig6(v).parse::<f64>().unwrap());
    let rounded: Vec<_> = rows
        .iter()
        .map(|r| ResultRow { rmse_deg: sig(r.rmse_deg), median_abs_deg: sig(r.median_abs_deg), ..r.clone() })
        .collect();
    assert_eq!(parse_csv(buf.as_slice()).unwrap(), rounded);
}

#[test]
fn reported_diversity_follows_the_delay_budget() {
    let plan = quick_plan("trials = 1\nsweep_axis = \"bandwidth_hz\"\nsweep_values = [1e9, 2e9, 4e9]\n");
    let rows = run_experiment(&plan, Execution::Parallel).unwrap();
    let r = |arch, bw: f64| {
        rows.iter().find(|x| x.architecture == arch && x.sweep_value == Some(bw)).unwrap().diversity
    };
    // 15 ns over 15 spacings at 16 antennas, 3 spacings per 4-antenna sub-array
    assert_eq!([r(Architecture::Analog, 1e9), r(Architecture::Analog, 2e9), r(Architecture::Analog, 4e9)], [1, 2, 4]);
    assert_eq!([r(Architecture::Hybrid, 1e9), r(Architecture::Hybrid, 2e9), r(Architecture::Hybrid, 4e9)], [4, 8, 16]);
    assert!(rows.iter().filter(|x| x.architecture == Architecture::Digital).all(|x| x.diversity == 64));
}

#[test]
fn digital_error_does_not_grow_with_snr() {
    let mut plan = ExperimentPlan { trials: 200, seed: 8, architectures: vec![Architecture::Digital], ..Default::default() };
    plan.sweep = Some(Sweep { axis: SweepAxis::Snr, values: vec![-30.0, -25.0, -20.0, -10.0] });
    let rows = run_experiment(&plan, Execution::Parallel).unwrap();
    let errors: Vec<f64> = rows.iter().map(|r| r.rmse_deg.unwrap()).collect();
    assert!(errors.windows(2).all(|w| w[1] <= w[0]), "{errors:?}");
    assert!(errors[0] > errors[3]);
}

#[test]
fn paired_trials_share_their_channels() {
    let plan = ExperimentPlan::default();
    let seeds_per_arch: Vec<Vec<f64>> = Architecture::ALL
        .iter()
        .map(|&arch| {
            let system = SystemConfig { diversity: plan.diversity(&plan.system, arch), ..plan.system.clone() };
            let setup = TrialSetup::new(&system, arch, &plan.channel, &plan.impairments).unwrap();
            (0..10).map(|t| setup.run_trial(plan.seed, t).unwrap().true_aoa).collect()
        })
        .collect();
    assert_eq!(seeds_per_arch[0], seeds_per_arch[1]);
    assert_eq!(seeds_per_arch[0], seeds_per_arch[2]);
}

#[test]
fn config_files_load_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.toml");
    std::fs::write(&path, "scenario = \"disk\"\ntrials = 3\narchitectures = [\"hybrid\"]\n").unwrap();
    let plan = load_config(&path).unwrap();
    assert_eq!((plan.scenario.as_str(), plan.trials), ("disk", 3));
    let rows = run_experiment(&plan, Execution::Parallel).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].status, RowStatus::Ok);

    std::fs::write(&path, "trials = 3\nnum_rx = 18\n").unwrap();
    let err = load_config(&path).unwrap_err().to_string();
    assert!(err.contains("plan.toml") && err.contains("line 2"), "{err}");
    assert!(load_config(dir.path().join("missing.toml")).is_err());
}
