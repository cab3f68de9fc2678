use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::rng_from_seed;

/// `q = (1/N) sum_i a_i b_i`.
pub fn overlap(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::validation(format!("overlap of vectors with lengths {} and {}", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64)
}

/// Per-replica `<sigma^x>` time series sharing one `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSet {
    pub times: Vec<f64>,
    /// `x[replica][sample][spin]`.
    pub x: Vec<Vec<Vec<f64>>>,
}

impl ReplicaSet {
    pub fn new(times: Vec<f64>, x: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let n = x.first().and_then(|r| r.first()).map_or(0, Vec::len);
        for r in &x {
            if r.len() != times.len() || r.iter().any(|s| s.len() != n) {
                return Err(Error::validation("replica series do not share one time grid and spin count"));
            }
            if r.iter().flatten().any(|v| !(v.abs() <= 1.0 + 1e-9)) {
                return Err(Error::validation("replica expectation outside [-1, 1]"));
            }
        }
        Ok(ReplicaSet { times, x })
    }

    pub fn n_replicas(&self) -> usize {
        self.x.len()
    }

    pub fn n_spins(&self) -> usize {
        self.x.first().and_then(|r| r.first()).map_or(0, Vec::len)
    }

    /// Replica vectors at the sample nearest `t`.
    pub fn snapshot(&self, t: f64) -> Vec<Vec<f64>> {
        let k = crate::quantum::trajectory::nearest_index(&self.times, t);
        self.x.iter().map(|r| r[k].clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    pub q: DMatrix<f64>,
    pub t: f64,
}

impl OverlapMatrix {
    pub fn from_vectors(v: &[Vec<f64>], t: f64) -> Result<Self> {
        let r = v.len();
        let mut q = DMatrix::zeros(r, r);
        for a in 0..r {
            for b in a..r {
                let x = overlap(&v[a], &v[b])?;
                q[(a, b)] = x;
                q[(b, a)] = x;
            }
        }
        Ok(OverlapMatrix { q, t })
    }

    pub fn n_replicas(&self) -> usize {
        self.q.nrows()
    }

    /// Distinct off-diagonal values `q_ab`, `a < b`, row-major.
    pub fn off_diagonal(&self) -> Vec<f64> {
        let r = self.n_replicas();
        (0..r).flat_map(|a| (a + 1..r).map(move |b| (a, b))).map(|(a, b)| self.q[(a, b)]).collect()
    }
}

pub fn overlap_matrix(replicas: &ReplicaSet, t: f64) -> Result<OverlapMatrix> {
    if replicas.n_replicas() < 2 {
        return Err(Error::validation("overlap matrix needs at least two replicas"));
    }
    let k = crate::quantum::trajectory::nearest_index(&replicas.times, t);
    OverlapMatrix::from_vectors(&replicas.snapshot(t), replicas.times[k])
}

/// Histogram over the `N + 1` admissible values `-1, -1 + 2/N, ..., 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub centers: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// Bootstrap standard deviation per bin.
    pub errors: Vec<f64>,
    /// Raw continuous values that were binned.
    pub values: Vec<f64>,
}

pub fn bin_centers(n: usize) -> Vec<f64> {
    (0..=n).map(|k| -1.0 + 2.0 * k as f64 / n as f64).collect()
}

/// Nearest admissible bin for a value in `[-1, 1]`.
pub fn bin_index(v: f64, n: usize) -> usize {
    (((v + 1.0) * n as f64 / 2.0).round().max(0.0) as usize).min(n)
}

fn probabilities(values: &[f64], n: usize) -> Vec<f64> {
    let mut p = vec![0.0; n + 1];
    if values.is_empty() {
        return p;
    }
    for &v in values {
        p[bin_index(v, n)] += 1.0;
    }
    let total = values.len() as f64;
    p.iter_mut().for_each(|x| *x /= total);
    p
}

/// Bin `values` and attach errors from `samples` resamples with replacement.
pub fn bootstrap_histogram(values: Vec<f64>, n: usize, samples: usize, seed: u64) -> Histogram {
    let p = probabilities(&values, n);
    let mut sum = vec![0.0; n + 1];
    let mut sum_sq = vec![0.0; n + 1];
    let mut rng = rng_from_seed(seed);
    let mut draw = vec![0.0; values.len()];
    for _ in 0..samples {
        for d in draw.iter_mut() {
            *d = values[rng.random_range(0..values.len())];
        }
        for (k, q) in probabilities(&draw, n).into_iter().enumerate() {
            sum[k] += q;
            sum_sq[k] += q * q;
        }
    }
    let errors = if samples < 2 || values.is_empty() {
        vec![0.0; n + 1]
    } else {
        let m = samples as f64;
        sum.iter()
            .zip(&sum_sq)
            .map(|(s, s2)| ((s2 - s * s / m) / (m - 1.0)).max(0.0).sqrt())
            .collect()
    };
    Histogram { centers: bin_centers(n), probabilities: p, errors, values }
}

/// Distribution of the overlaps of an overlap matrix for `n` spins.
pub fn overlap_histogram(
    m: &OverlapMatrix,
    n: usize,
    exclude_self: bool,
    bootstrap_samples: usize,
    seed: u64,
) -> Result<Histogram> {
    if m.n_replicas() < 2 || n == 0 {
        return Err(Error::validation("overlap histogram needs at least two replicas and one spin"));
    }
    let mut values = m.off_diagonal();
    if !exclude_self {
        values.extend((0..m.n_replicas()).map(|a| m.q[(a, a)]));
    }
    Ok(bootstrap_histogram(values, n, bootstrap_samples, seed))
}

/// Per-replica magnetization `m = sum_i <sigma^x_i> / N`, binned.
pub fn magnetization_distribution(snapshot: &[Vec<f64>], bootstrap_samples: usize, seed: u64) -> Result<Histogram> {
    let n = snapshot.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::validation("magnetization needs at least one replica with one spin"));
    }
    let values = snapshot.iter().map(|x| x.iter().sum::<f64>() / n as f64).collect();
    Ok(bootstrap_histogram(values, n, bootstrap_samples, seed))
}

/// Unweighted mean of per-`J` histograms; errors added in quadrature.
pub fn parisi_distribution(histograms: &[Histogram]) -> Result<Histogram> {
    let first = histograms.first().ok_or_else(|| Error::validation("no histograms to average"))?;
    if histograms.iter().any(|h| h.centers != first.centers) {
        return Err(Error::validation("histograms use different binnings"));
    }
    let k = histograms.len() as f64;
    let bins = first.centers.len();
    let probabilities = (0..bins).map(|b| histograms.iter().map(|h| h.probabilities[b]).sum::<f64>() / k).collect();
    let errors = (0..bins)
        .map(|b| histograms.iter().map(|h| h.errors[b].powi(2)).sum::<f64>().sqrt() / k)
        .collect();
    let values = histograms.iter().flat_map(|h| h.values.iter().copied()).collect();
    Ok(Histogram { centers: first.centers.clone(), probabilities, errors, values })
}

/// Mean and population standard deviation of the values behind a histogram.
pub fn moments(values: &[f64]) -> (f64, f64) {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// `1 - <q^4> / (3 <q^2>^2)`; `None` when `<q^2> = 0`.
pub fn binder_ratio(q: &[f64]) -> Option<f64> {
    if q.is_empty() {
        return None;
    }
    let n = q.len() as f64;
    let m2 = q.iter().map(|v| v * v).sum::<f64>() / n;
    let m4 = q.iter().map(|v| v.powi(4)).sum::<f64>() / n;
    (m2 > 0.0).then(|| 1.0 - m4 / (3.0 * m2 * m2))
}
