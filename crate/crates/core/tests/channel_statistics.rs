use nalgebra::DMatrix;
use num_complex::Complex64;
use ttd_beamsim::array::steering_vector;
use ttd_beamsim::channel::{precoder, ChannelParams, ChannelRealization, Cluster, FadingModel, Ray};
use ttd_beamsim::experiment::trial_rng;
use ttd_beamsim::stats::mean_and_se;
use ttd_beamsim::SystemConfig;

const DRAWS: u64 = 10_000;

fn small_cfg() -> SystemConfig {
    SystemConfig { num_rx: 4, num_tx: 8, directions: 8, ..SystemConfig::default() }
}

#[test]
fn cluster_energy_is_normalized_on_every_subband() {
    let cfg = small_cfg();
    let params = ChannelParams::default();
    let mut per_band = vec![Vec::with_capacity(DRAWS as usize); cfg.num_subbands];
    for t in 0..DRAWS {
        let ch = ChannelRealization::sample(&mut trial_rng(11, t, 0), &cfg, &params);
        for (k, g) in ch.gains.iter().enumerate() {
            per_band[k].push(g.iter().map(|x| x.norm_sqr()).sum::<f64>());
        }
    }
    for k in [0, 17, 63] {
        let (m, se) = mean_and_se(&per_band[k]).unwrap();
        assert!((m - 1.0).abs() < 3.0 * se, "k={k}: mean {m}, se {se}");
    }
}

#[test]
fn frobenius_energy_matches_cluster_power() {
    let cfg = small_cfg();
    let params = ChannelParams::default();
    let energies: Vec<f64> = (0..DRAWS)
        .map(|t| {
            let ch = ChannelRealization::sample(&mut trial_rng(12, t, 0), &cfg, &params);
            ch.channel_matrix(5).unwrap().iter().map(|x| x.norm_sqr()).sum::<f64>()
        })
        .collect();
    let (m, se) = mean_and_se(&energies).unwrap();
    // unit-norm steering vectors keep ||a_R a_T^H||_F = 1, but clusters are not
    // orthogonal, so only the expectation is one
    assert!((m - 1.0).abs() < 3.0 * se, "mean {m}, se {se}");
}

#[test]
fn far_apart_subbands_are_uncorrelated() {
    let cfg = small_cfg();
    let params = ChannelParams { num_clusters: 1, ..ChannelParams::default() };
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for t in 0..DRAWS {
        let ch = ChannelRealization::sample(&mut trial_rng(13, t, 0), &cfg, &params);
        a.push(ch.gains[0][0]);
        b.push(ch.gains[40][0]);
    }
    // 40 sub-bands of 31.25 MHz is 1.25 GHz, far beyond 1 / 10 ns
    let cross: Complex64 = a.iter().zip(&b).map(|(x, y)| x * y.conj()).sum();
    let pa: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let pb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    let rho = cross.norm() / (pa * pb).sqrt();
    assert!(rho < 0.05, "rho = {rho}");
}

fn rank(h: &DMatrix<Complex64>) -> usize {
    let sv = h.clone().svd(false, false).singular_values;
    let top = sv.max();
    sv.iter().filter(|&&s| s > 1e-10 * top).count()
}

#[test]
fn rank_never_exceeds_cluster_count() {
    let cfg = small_cfg();
    for clusters in [1, 2, 3] {
        let params = ChannelParams { num_clusters: clusters, ..ChannelParams::default() };
        for t in 0..20 {
            let ch = ChannelRealization::sample(&mut trial_rng(14, t, 0), &cfg, &params);
            for k in [1, 32, 64] {
                assert!(rank(&ch.channel_matrix(k).unwrap()) <= clusters);
            }
        }
    }
}

#[test]
fn zero_delay_single_ray_is_frequency_flat() {
    let cfg = small_cfg();
    let cluster = Cluster {
        aoa: 0.3,
        aod: -0.2,
        power: 1.0,
        rays: vec![Ray { amplitude: Complex64::new(1.0, 0.0), delay_s: 0.0 }],
    };
    let ch = ChannelRealization::from_clusters(&mut trial_rng(0, 0, 0), vec![cluster], &cfg, FadingModel::Rays);
    let ar = steering_vector(0.3, 4).unwrap();
    let at = steering_vector(-0.2, 8).unwrap();
    for k in 1..=cfg.num_subbands {
        let h = ch.channel_matrix(k).unwrap();
        for i in 0..4 {
            for j in 0..8 {
                assert!((h[(i, j)] - ar[i] * at[j].conj()).norm() < 1e-14);
            }
        }
    }
}

#[test]
fn sampling_is_deterministic() {
    let cfg = small_cfg();
    let params = ChannelParams::default();
    let a = ChannelRealization::sample(&mut trial_rng(5, 9, 0), &cfg, &params);
    let b = ChannelRealization::sample(&mut trial_rng(5, 9, 0), &cfg, &params);
    assert_eq!(a, b);
}

#[test]
fn precoding_keeps_the_dominant_cluster_ten_db_ahead() {
    let cfg = SystemConfig::default();
    let params = ChannelParams { fading: FadingModel::IndependentSubbands, ..ChannelParams::default() };
    let (mut first, mut others) = (0.0, [0.0; 2]);
    for t in 0..2000 {
        let ch = ChannelRealization::sample(&mut trial_rng(15, t, 0), &cfg, &params);
        let v = precoder(&ch).unwrap();
        let tx = ch.transmit_gains(&v);
        assert!((tx[0].norm_sqr() - 1.0).abs() < 1e-12);
        first += ch.clusters[0].power * tx[0].norm_sqr();
        for l in 1..3 {
            others[l - 1] += ch.clusters[l].power * tx[l].norm_sqr();
        }
    }
    for o in others {
        assert!(10.0 * (first / o).log10() >= 10.0, "ratio {} dB", 10.0 * (first / o).log10());
    }
}

#[test]
fn boresight_precoder_is_uniform() {
    let cfg = small_cfg();
    let cluster = Cluster { aoa: 0.1, aod: 0.0, power: 1.0, rays: vec![] };
    let ch = ChannelRealization::from_clusters(&mut trial_rng(0, 0, 0), vec![cluster], &cfg, FadingModel::Rays);
    let v = precoder(&ch).unwrap();
    let expect = 1.0 / 8f64.sqrt();
    assert!(v.iter().all(|x| (x - Complex64::new(expect, 0.0)).norm() < 1e-15));
}
