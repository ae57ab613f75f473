//! Power-based angle-of-arrival estimation from a single pilot.
//!
//! Direction powers are measured by averaging `|Y[m]|^2` over the `R`
//! subcarriers of each direction, then matched against a dictionary of beam
//! gains `[B]_{d,q} = |f_d^H a_R(xi_q)|^2` by normalized correlation.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::array::{dft_beam, inner, steering_vector_unchecked, SubcarrierMap};
use crate::channel::Cluster;
use crate::config::SystemConfig;
use crate::error::{config_err, domain_err, Error, Result};
use crate::impairments::ReceivedPilots;

/// Measured (`p_hat`) or expected (`p`) power per probed direction.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionPowerVector(pub Vec<f64>);

impl DirectionPowerVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|x| x * c).collect())
    }
}

/// `p_hat_d = (1/R) sum_{m in M_d} |Y[m]|^2`.
pub fn measure_direction_powers(y: &ReceivedPilots, map: &SubcarrierMap) -> Result<DirectionPowerVector> {
    map.sets
        .iter()
        .map(|set| {
            let mut acc = 0.0;
            for &m in set {
                acc += y.get(m).ok_or(Error::MissingSubcarrier(m))?.norm_sqr();
            }
            Ok(acc / set.len() as f64)
        })
        .collect::<Result<Vec<_>>>()
        .map(DirectionPowerVector)
}

/// Estimation grid: `Q` angles uniform in angle, offset by half a bin from
/// the endpoints.
pub fn estimation_grid(q: usize) -> Vec<f64> {
    (0..q).map(|i| -FRAC_PI_2 + (i as f64 + 0.5) * PI / q as f64).collect()
}

/// Index of the grid angle nearest to `theta`.
pub fn nearest_grid_index(theta: f64, q: usize) -> usize {
    let pos = (theta + FRAC_PI_2) * q as f64 / PI - 0.5;
    (pos.round().max(0.0) as usize).min(q - 1)
}

/// Beam-gain dictionary `B` (D x Q) with its grid.
#[derive(Debug, Clone)]
pub struct Dictionary {
    pub directions: usize,
    pub num_rx: usize,
    pub grid: Vec<f64>,
    /// Row-major `D x Q` entries.
    gains: Vec<f64>,
    /// Columns divided by their norm, stored column-major (`Q x D`) for the
    /// correlation search. Zero columns stay zero and are skipped.
    normalized: Vec<f64>,
    column_norms: Vec<f64>,
}

impl Dictionary {
    pub fn get(&self, d: usize, q: usize) -> f64 {
        self.gains[(d - 1) * self.grid.len() + (q - 1)]
    }

    pub fn size(&self) -> usize {
        self.grid.len()
    }

    /// Column `q` (1-based) as a direction-power vector.
    pub fn column(&self, q: usize) -> DirectionPowerVector {
        DirectionPowerVector((1..=self.directions).map(|d| self.get(d, q)).collect())
    }

    pub fn column_norm(&self, q: usize) -> f64 {
        self.column_norms[q - 1]
    }

    /// `B g`, with `g` given as sparse `(q, value)` pairs.
    pub fn apply_sparse(&self, g: &[(usize, f64)]) -> Vec<f64> {
        (1..=self.directions)
            .map(|d| g.iter().map(|&(q, v)| self.get(d, q) * v).sum())
            .collect()
    }
}

/// Builds `[B]_{d,q} = |f_d^H a_R(xi_q)|^2` for the configuration's `D`,
/// `N_R` and `Q`.
pub fn build_dictionary(cfg: &SystemConfig) -> Result<Dictionary> {
    dictionary_for(cfg.directions, cfg.num_rx, cfg.dictionary_size)
}

pub fn dictionary_for(directions: usize, num_rx: usize, q: usize) -> Result<Dictionary> {
    if q < directions {
        return Err(config_err(format!("dictionary size {q} smaller than D = {directions}")));
    }
    let grid = estimation_grid(q);
    let beams: Vec<Vec<Complex64>> =
        (1..=directions).map(|d| dft_beam(d, directions, num_rx)).collect::<Result<_>>()?;
    let responses: Vec<Vec<Complex64>> = grid.iter().map(|&xi| steering_vector_unchecked(xi, num_rx)).collect();
    let mut gains = vec![0.0; directions * q];
    for (d, f) in beams.iter().enumerate() {
        for (j, a) in responses.iter().enumerate() {
            gains[d * q + j] = inner(f, a).norm_sqr();
        }
    }
    let column_norms: Vec<f64> = (0..q)
        .map(|j| (0..directions).map(|d| gains[d * q + j].powi(2)).sum::<f64>().sqrt())
        .collect();
    let mut normalized = vec![0.0; directions * q];
    for j in 0..q {
        if column_norms[j] > 0.0 {
            for d in 0..directions {
                normalized[j * directions + d] = gains[d * q + j] / column_norms[j];
            }
        }
    }
    Ok(Dictionary { directions, num_rx, grid, gains, normalized, column_norms })
}

const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationResult {
    pub aoa: f64,
    /// 1-based grid index `q*`.
    pub grid_index: usize,
    pub score: f64,
}

/// `q* = argmax_q p_hat^T B[:,q] / ||B[:,q]||`; ties go to the lowest `q`.
pub fn estimate_aoa(p: &DirectionPowerVector, dict: &Dictionary) -> Result<EstimationResult> {
    let d = dict.directions;
    if p.len() != d {
        return Err(domain_err(format!("power vector has {} entries, dictionary {d}", p.len())));
    }
    if p.0.iter().any(|x| !x.is_finite()) {
        return Err(domain_err("power vector is not finite"));
    }
    let mut best: Option<(usize, f64)> = None;
    for (j, col) in dict.normalized.chunks(d).enumerate() {
        if dict.column_norms[j] == 0.0 {
            continue;
        }
        let score: f64 = col.iter().zip(&p.0).map(|(b, x)| b * x).sum();
        // scores within round-off of the incumbent count as ties
        if best.is_none_or(|(_, s)| score > s + TIE_TOLERANCE * s.abs()) {
            best = Some((j, score));
        }
    }
    let (j, score) = best.ok_or_else(|| domain_err("dictionary has no usable column"))?;
    Ok(EstimationResult { aoa: dict.grid[j], grid_index: j + 1, score })
}

/// Expected direction powers `p = B g + N_R sigma_N^2 1`.
///
/// `[g]_q = sigma_l^2 |a_T(theta_l^T)^H v|^2` at the grid index nearest each
/// cluster's arrival angle. Passing only the dominant cluster gives the
/// single-entry approximation.
pub fn expected_powers(
    clusters: &[Cluster],
    v: &[Complex64],
    dict: &Dictionary,
    noise_var: f64,
) -> DirectionPowerVector {
    let num_tx = v.len();
    let g: Vec<(usize, f64)> = clusters
        .iter()
        .map(|c| {
            let tx = inner(&steering_vector_unchecked(c.aod, num_tx), v).norm_sqr();
            (nearest_grid_index(c.aoa, dict.size()) + 1, c.power * tx)
        })
        .collect();
    let floor = dict.num_rx as f64 * noise_var;
    DirectionPowerVector(dict.apply_sparse(&g).into_iter().map(|x| x + floor).collect())
}
