//! Clustered frequency-selective channel with ray-level fading.
//!
//! Each cluster has a single receive and transmit angle (no intra-cluster
//! angular spread) and a set of rays with complex amplitudes and excess
//! delays. The gain of cluster `l` on sub-band `k` is
//! `G_l[k] = sum_i alpha_{l,i} exp(-j 2 pi f_k tau_{l,i})` and the sub-band
//! channel is `H[k] = sum_l G_l[k] a_R(theta_l^R) a_T(theta_l^T)^H`.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::array::{cis_neg, inner, steering_vector_unchecked};
use crate::config::SystemConfig;
use crate::error::{domain_err, Result};

/// Circularly-symmetric complex Gaussian draw with variance `var`.
pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// How cluster gains vary across sub-bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingModel {
    /// Gains are sums of delayed rays, hence correlated across nearby sub-bands.
    #[default]
    Rays,
    /// Gains drawn independently per sub-band from `CN(0, sigma_l^2)`.
    #[serde(alias = "independent")]
    IndependentSubbands,
}

/// Statistical description of the multipath channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub num_clusters: usize,
    /// Power ratio of the first cluster over each of the others (dB).
    pub dominance_db: f64,
    pub rays_per_cluster: usize,
    /// Ray excess delays are uniform on `[0, max_delay_s]`.
    pub max_delay_s: f64,
    /// Cluster angles are uniform on `(-max_angle, max_angle)` (rad).
    pub max_angle: f64,
    pub fading: FadingModel,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            num_clusters: 3,
            dominance_db: 10.0,
            rays_per_cluster: 20,
            max_delay_s: 10e-9,
            max_angle: 60f64.to_radians(),
            fading: FadingModel::Rays,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_clusters == 0 {
            return Err(domain_err("need at least one cluster"));
        }
        if !(self.dominance_db >= 0.0) {
            return Err(domain_err("dominance must be non-negative"));
        }
        if self.rays_per_cluster == 0 {
            return Err(domain_err("need at least one ray per cluster"));
        }
        if !(self.max_delay_s >= 0.0) {
            return Err(domain_err("delay spread must be non-negative"));
        }
        if !(self.max_angle > 0.0 && self.max_angle < FRAC_PI_2) {
            return Err(domain_err("angle limit must lie in (0, pi/2)"));
        }
        Ok(())
    }

    /// Cluster powers `sigma_l^2`, normalized to sum to one.
    pub fn cluster_powers(&self) -> Vec<f64> {
        let ratio = 10f64.powf(self.dominance_db / 10.0);
        let other = 1.0 / (ratio + self.num_clusters as f64 - 1.0);
        (0..self.num_clusters).map(|l| if l == 0 { ratio * other } else { other }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub amplitude: Complex64,
    pub delay_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub aoa: f64,
    pub aod: f64,
    /// Expected cluster power `sigma_l^2`.
    pub power: f64,
    pub rays: Vec<Ray>,
}

/// Draws `L` clusters. Cluster 1 is the dominant one.
pub fn sample_clusters<R: Rng + ?Sized>(rng: &mut R, params: &ChannelParams) -> Vec<Cluster> {
    let rays = params.rays_per_cluster;
    params
        .cluster_powers()
        .into_iter()
        .map(|power| {
            let aoa = rng.random_range(-params.max_angle..params.max_angle);
            let aod = rng.random_range(-params.max_angle..params.max_angle);
            let rays = (0..rays)
                .map(|_| Ray {
                    amplitude: complex_normal(rng, power / rays as f64),
                    delay_s: rng.random::<f64>() * params.max_delay_s,
                })
                .collect();
            Cluster { aoa, aod, power, rays }
        })
        .collect()
}

/// Sub-band `k = ceil(m K_c / M_tot)` of 1-based subcarrier `m`.
pub fn subband_of(m: usize, num_subbands: usize, num_subcarriers: usize) -> usize {
    (m * num_subbands).div_ceil(num_subcarriers)
}

/// Center frequency of 1-based sub-band `k`.
pub fn subband_center_hz(k: usize, cfg: &SystemConfig) -> f64 {
    cfg.carrier_hz - cfg.bandwidth_hz / 2.0
        + (k as f64 - 0.5) * cfg.bandwidth_hz / cfg.num_subbands as f64
}

/// One channel draw: clusters plus their per-sub-band gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub clusters: Vec<Cluster>,
    /// `gains[k-1][l]` is `G_l[k]`.
    pub gains: Vec<Vec<Complex64>>,
    pub num_rx: usize,
    pub num_tx: usize,
}

impl ChannelRealization {
    /// Draws clusters and evaluates their gains on every sub-band.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, cfg: &SystemConfig, params: &ChannelParams) -> Self {
        let clusters = sample_clusters(rng, params);
        Self::from_clusters(rng, clusters, cfg, params.fading)
    }

    /// Builds the sub-band gains for the given clusters. The generator is only
    /// consumed in [`FadingModel::IndependentSubbands`] mode.
    pub fn from_clusters<R: Rng + ?Sized>(
        rng: &mut R,
        clusters: Vec<Cluster>,
        cfg: &SystemConfig,
        fading: FadingModel,
    ) -> Self {
        let gains = (1..=cfg.num_subbands)
            .map(|k| match fading {
                FadingModel::Rays => {
                    let f = subband_center_hz(k, cfg);
                    clusters
                        .iter()
                        .map(|c| c.rays.iter().map(|r| r.amplitude * cis_neg(TAU * f * r.delay_s)).sum())
                        .collect()
                }
                FadingModel::IndependentSubbands => {
                    clusters.iter().map(|c| complex_normal(rng, c.power)).collect()
                }
            })
            .collect();
        Self { clusters, gains, num_rx: cfg.num_rx, num_tx: cfg.num_tx }
    }

    pub fn num_subbands(&self) -> usize {
        self.gains.len()
    }

    /// The dominant (first) cluster.
    pub fn dominant(&self) -> &Cluster {
        &self.clusters[0]
    }

    fn check_subband(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.gains.len() {
            return Err(domain_err(format!("sub-band {k} outside 1..={}", self.gains.len())));
        }
        Ok(())
    }

    /// Full `N_R x N_T` matrix `H[k]`.
    pub fn channel_matrix(&self, k: usize) -> Result<DMatrix<Complex64>> {
        self.check_subband(k)?;
        let mut h = DMatrix::zeros(self.num_rx, self.num_tx);
        for (cluster, &g) in self.clusters.iter().zip(&self.gains[k - 1]) {
            let ar = steering_vector_unchecked(cluster.aoa, self.num_rx);
            let at = steering_vector_unchecked(cluster.aod, self.num_tx);
            for (i, a) in ar.iter().enumerate() {
                for (j, b) in at.iter().enumerate() {
                    h[(i, j)] += g * a * b.conj();
                }
            }
        }
        Ok(h)
    }

    /// Transmit gains `a_T(theta_l^T)^H v` of every cluster for precoder `v`.
    pub fn transmit_gains(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.clusters
            .iter()
            .map(|c| inner(&steering_vector_unchecked(c.aod, self.num_tx), v))
            .collect()
    }

    /// `H[k] v` for every sub-band, computed per cluster without forming `H`.
    pub fn precoded_responses(&self, v: &[Complex64]) -> Vec<Vec<Complex64>> {
        let tx = self.transmit_gains(v);
        let rx: Vec<Vec<Complex64>> =
            self.clusters.iter().map(|c| steering_vector_unchecked(c.aoa, self.num_rx)).collect();
        self.gains
            .iter()
            .map(|gk| {
                let mut out = vec![Complex64::new(0.0, 0.0); self.num_rx];
                for ((g, t), a) in gk.iter().zip(&tx).zip(&rx) {
                    let c = g * t;
                    for (o, x) in out.iter_mut().zip(a) {
                        *o += c * x;
                    }
                }
                out
            })
            .collect()
    }
}

/// Fixed frequency-flat precoder: the unit-norm transmit response toward the
/// dominant cluster's departure angle.
pub fn precoder(realization: &ChannelRealization) -> Result<Vec<Complex64>> {
    let first = realization
        .clusters
        .first()
        .ok_or_else(|| domain_err("precoder needs at least one cluster"))?;
    Ok(steering_vector_unchecked(first.aod, realization.num_tx))
}

/// Writes one CSV record per (trial, sub-band) with every cluster's angles
/// and gain.
pub fn write_channel_dump<W: Write>(out: W, trials: &[(u64, &ChannelRealization)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let clusters = trials.first().map_or(0, |(_, r)| r.clusters.len());
    let mut header = vec!["trial".to_string(), "subband".to_string()];
    for l in 1..=clusters {
        for field in ["aoa_rad", "aod_rad", "power", "gain_re", "gain_im"] {
            header.push(format!("c{l}_{field}"));
        }
    }
    w.write_record(&header)?;
    for (trial, real) in trials {
        if real.clusters.len() != clusters {
            return Err(domain_err("all realizations in a dump need the same cluster count"));
        }
        for (k, gk) in real.gains.iter().enumerate() {
            let mut rec = vec![trial.to_string(), (k + 1).to_string()];
            for (c, g) in real.clusters.iter().zip(gk) {
                rec.extend(
                    [c.aoa, c.aod, c.power, g.re, g.im].iter().map(|x| format!("{x:e}")),
                );
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> SystemConfig {
        SystemConfig { num_rx: 8, num_tx: 16, directions: 16, ..Default::default() }
    }

    #[test]
    fn cluster_power_examples() {
        let single = ChannelParams { num_clusters: 1, dominance_db: 0.0, ..Default::default() };
        assert_eq!(single.cluster_powers(), vec![1.0]);
        let p = ChannelParams::default().cluster_powers();
        let expect = [10.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0];
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = small_cfg();
        let params = ChannelParams::default();
        let a = ChannelRealization::sample(&mut ChaCha8Rng::seed_from_u64(7), &cfg, &params);
        let b = ChannelRealization::sample(&mut ChaCha8Rng::seed_from_u64(7), &cfg, &params);
        assert_eq!(a, b);
        let c = ChannelRealization::sample(&mut ChaCha8Rng::seed_from_u64(8), &cfg, &params);
        assert_ne!(a, c);
    }

    #[test]
    fn sampled_clusters_respect_ranges() {
        let params = ChannelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            for c in sample_clusters(&mut rng, &params) {
                assert!(c.aoa.abs() < params.max_angle && c.aod.abs() < params.max_angle);
                assert_eq!(c.rays.len(), 20);
                assert!(c.rays.iter().all(|r| (0.0..=10e-9).contains(&r.delay_s)));
            }
        }
    }

    #[test]
    fn subband_examples() {
        assert_eq!(subband_of(1, 64, 4096), 1);
        assert_eq!(subband_of(4096, 64, 4096), 64);
        assert_eq!(subband_of(65, 64, 4096), 2);
        assert_eq!(subband_of(64, 64, 4096), 1);
    }

    #[test]
    fn zero_delay_ray_is_frequency_flat() {
        let cfg = small_cfg();
        let cluster = Cluster {
            aoa: 0.2,
            aod: -0.4,
            power: 1.0,
            rays: vec![Ray { amplitude: Complex64::new(1.0, 0.0), delay_s: 0.0 }],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let real = ChannelRealization::from_clusters(&mut rng, vec![cluster], &cfg, FadingModel::Rays);
        let ar = steering_vector_unchecked(0.2, cfg.num_rx);
        let at = steering_vector_unchecked(-0.4, cfg.num_tx);
        for k in [1, 17, 64] {
            let h = real.channel_matrix(k).unwrap();
            for i in 0..cfg.num_rx {
                for j in 0..cfg.num_tx {
                    assert!((h[(i, j)] - ar[i] * at[j].conj()).norm() < 1e-14);
                }
            }
        }
        assert!(real.channel_matrix(0).is_err());
        assert!(real.channel_matrix(65).is_err());
    }

    #[test]
    fn precoded_response_matches_matrix_product() {
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let real = ChannelRealization::sample(&mut rng, &cfg, &ChannelParams::default());
        let v = precoder(&real).unwrap();
        let fast = real.precoded_responses(&v);
        for k in [1, 30, 64] {
            let h = real.channel_matrix(k).unwrap();
            let hv = &h * nalgebra::DVector::from_column_slice(&v);
            for i in 0..cfg.num_rx {
                assert!((hv[i] - fast[k - 1][i]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn rank_is_bounded_by_cluster_count() {
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let real = ChannelRealization::sample(&mut rng, &cfg, &ChannelParams::default());
            for k in [1, 40] {
                assert!(real.channel_matrix(k).unwrap().rank(1e-9) <= 3);
            }
        }
    }

    #[test]
    fn precoder_examples() {
        let cfg = SystemConfig { num_tx: 4, ..small_cfg() };
        let cluster = |aod| Cluster { aoa: 0.0, aod, power: 1.0, rays: vec![] };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let real = ChannelRealization::from_clusters(&mut rng, vec![cluster(0.0)], &cfg, FadingModel::Rays);
        let v = precoder(&real).unwrap();
        assert!(v.iter().all(|z| (z - Complex64::new(0.5, 0.0)).norm() < 1e-15));
        for aod in [-1.0, 0.3, 1.2] {
            let real = ChannelRealization::from_clusters(&mut rng, vec![cluster(aod)], &cfg, FadingModel::Rays);
            let v = precoder(&real).unwrap();
            assert!((real.transmit_gains(&v)[0].norm_sqr() - 1.0).abs() < 1e-14);
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-14);
        }
        let empty = ChannelRealization { clusters: vec![], gains: vec![], num_rx: 1, num_tx: 1 };
        assert!(precoder(&empty).is_err());
    }

    #[test]
    fn channel_dump_has_one_row_per_subband() {
        let cfg = small_cfg();
        let params = ChannelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = ChannelRealization::sample(&mut rng, &cfg, &params);
        let b = ChannelRealization::sample(&mut rng, &cfg, &params);
        let mut buf = Vec::new();
        write_channel_dump(&mut buf, &[(0, &a), (1, &b)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * 64);
        assert_eq!(lines[0].split(',').count(), 2 + 3 * 5);
        assert!(lines[65].starts_with("1,1,"));
    }
}
