use serde::{Deserialize, Serialize};

use super::overlap::OverlapMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UltrametricStats {
    /// One `K` per unordered triplet `a < b < c`, lexicographic.
    pub k: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of all pair distances `1 - |q|`.
    pub sigma_d: f64,
}

/// `(d_max - d_median) / sigma` for one triplet; zero when `sigma = 0`.
pub fn triplet_k(mut d: [f64; 3], sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    (d[2] - d[1]) / sigma
}

pub fn ultrametric_stats(m: &OverlapMatrix) -> Result<UltrametricStats> {
    let r = m.n_replicas();
    if r < 3 {
        return Err(Error::validation("ultrametric statistics need at least three replicas"));
    }
    let d = |a: usize, b: usize| 1.0 - m.q[(a, b)].abs();
    let pairs: Vec<f64> = m.off_diagonal().iter().map(|q| 1.0 - q.abs()).collect();
    let mean_d = pairs.iter().sum::<f64>() / pairs.len() as f64;
    let sigma_d = (pairs.iter().map(|x| (x - mean_d).powi(2)).sum::<f64>() / pairs.len() as f64).sqrt();
    let mut k = Vec::with_capacity(r * (r - 1) * (r - 2) / 6);
    for a in 0..r {
        for b in a + 1..r {
            for c in b + 1..r {
                k.push(triplet_k([d(a, b), d(a, c), d(b, c)], sigma_d));
            }
        }
    }
    let mean = k.iter().sum::<f64>() / k.len() as f64;
    Ok(UltrametricStats { k, mean, sigma_d })
}
