//! Labelled Gaussian blobs.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Features;
use crate::error::{Error, Result};
use crate::rng::{seeded_rng, tags};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_clusters: usize,
    pub points_per_cluster: usize,
    pub dims: usize,
    /// Per-coordinate variance of every blob.
    pub mu: f64,
    pub center_scale: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(
        n_clusters: usize,
        points_per_cluster: usize,
        dims: usize,
        mu: f64,
        seed: u64,
    ) -> Self {
        Self {
            n_clusters,
            points_per_cluster,
            dims,
            mu,
            center_scale: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &'static str, got: String| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config {
                    field,
                    reason: format!("out of range: got {got}"),
                })
            }
        };
        check(
            self.n_clusters >= 1,
            "n_clusters",
            self.n_clusters.to_string(),
        )?;
        check(
            self.points_per_cluster >= 1,
            "points_per_cluster",
            self.points_per_cluster.to_string(),
        )?;
        check(self.dims >= 1, "dims", self.dims.to_string())?;
        check(
            self.mu >= 0.0 && self.mu.is_finite(),
            "mu",
            self.mu.to_string(),
        )?;
        check(
            self.center_scale >= 0.0 && self.center_scale.is_finite(),
            "center_scale",
            self.center_scale.to_string(),
        )
    }
}

/// Draws `n_clusters` centres from `N(0, center_scale² I)` and
/// `points_per_cluster` points around each from `N(c, mu I)`, then shuffles
/// the rows. Returns the features and the blob label of every row.
pub fn generate<T: Scalar>(spec: &SyntheticSpec) -> Result<(Features<T>, Vec<usize>)> {
    spec.validate()?;
    let (nc, ns, m) = (spec.n_clusters, spec.points_per_cluster, spec.dims);
    let mut crng = seeded_rng(spec.seed, tags::SYNTH_CENTERS);
    let centers: Vec<f64> = (0..nc * m)
        .map(|_| crng.sample::<f64, _>(StandardNormal) * spec.center_scale)
        .collect();

    let sd = spec.mu.sqrt();
    let mut prng = seeded_rng(spec.seed, tags::SYNTH_POINTS);
    let n = nc * ns;
    let mut raw = Vec::with_capacity(n * m);
    let mut labels = Vec::with_capacity(n);
    for c in 0..nc {
        let center = &centers[c * m..(c + 1) * m];
        for _ in 0..ns {
            for &x in center {
                let z: f64 = prng.sample(StandardNormal);
                raw.push(x + sd * z);
            }
            labels.push(c);
        }
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seeded_rng(spec.seed, tags::SYNTH_SHUFFLE));
    let mut data = Vec::with_capacity(n * m);
    let mut shuffled = Vec::with_capacity(n);
    for &p in &perm {
        data.extend(raw[p * m..(p + 1) * m].iter().map(|&x| T::of(x)));
        shuffled.push(labels[p]);
    }
    Ok((Features::new(data, n, m)?, shuffled))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_uniform_labels() {
        let (fs, labels) = generate::<f64>(&SyntheticSpec::new(5, 10, 3, 0.1, 1)).unwrap();
        assert_eq!((fs.n(), fs.m()), (50, 3));
        let mut hist = [0; 5];
        labels.iter().for_each(|&l| hist[l] += 1);
        assert_eq!(hist, [10; 5]);
    }

    #[test]
    fn zero_variance_hits_centres() {
        let (fs, labels) = generate::<f64>(&SyntheticSpec::new(3, 4, 2, 0.0, 9)).unwrap();
        for i in 0..fs.n() {
            for j in 0..fs.n() {
                if labels[i] == labels[j] {
                    assert_eq!(fs.row(i), fs.row(j));
                }
            }
        }
    }

    #[test]
    fn reproducible() {
        let s = SyntheticSpec::new(4, 7, 5, 0.3, 42);
        let a = generate::<f32>(&s).unwrap();
        let b = generate::<f32>(&s).unwrap();
        assert_eq!(a.0.as_slice(), b.0.as_slice());
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn sample_covariance_close_to_mu() {
        let (fs, labels) = generate::<f64>(&SyntheticSpec::new(1, 5000, 3, 0.25, 3)).unwrap();
        assert!(labels.iter().all(|&l| l == 0));
        let mean = fs.mean_of(&(0..fs.n()).collect::<Vec<_>>());
        for a in 0..3 {
            for b in 0..3 {
                let cov: f64 = fs
                    .rows()
                    .map(|r| (r[a] - mean[a]) * (r[b] - mean[b]))
                    .sum::<f64>()
                    / (fs.n() - 1) as f64;
                let want = if a == b { 0.25 } else { 0.0 };
                assert!((cov - want).abs() < 0.2 * 0.25, "cov[{a}][{b}] = {cov}");
            }
        }
    }
}
