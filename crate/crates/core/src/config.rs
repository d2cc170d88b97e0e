//! Pipeline parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every tunable of the clustering and selection pipeline.
///
/// Defaults: k-means k = 1000, entropy-clustering cap 100, 10 split/merge
/// iterations, convergence threshold 0.05, 3-D PCA for aggregation with merge
/// threshold 0.9, 8-D PCA for selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Largest group handed to a single k-means run.
    pub n_kmeans_cap: usize,
    /// Upper bound on k for one k-means group.
    pub k_init: usize,
    /// Largest subset a single entropy clustering may receive.
    pub n_entcls: usize,
    pub max_iter: usize,
    /// Convergence threshold on `1 - nIOU`.
    pub epsilon: f64,
    pub pca_agg_dims: usize,
    /// Minimum compatibility score for a final-aggregation merge.
    pub th_phi: f64,
    pub pca_sel_dims: usize,
    /// Fraction of every cluster kept by selection.
    pub tau: f64,
    pub seed: u64,
    pub workers: usize,
    /// Robust z-score (in MADs) an entropy drop must exceed to open a cluster.
    pub xi_spike: f64,
    pub kmeans_rounds: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n_kmeans_cap: 100_000,
            k_init: 1000,
            n_entcls: 100,
            max_iter: 10,
            epsilon: 0.05,
            pca_agg_dims: 3,
            th_phi: 0.9,
            pca_sel_dims: 8,
            tau: 0.10,
            seed: 0,
            workers: 1,
            xi_spike: 40.0,
            kmeans_rounds: 100,
        }
    }
}

fn bad(field: &'static str, got: impl std::fmt::Display) -> Error {
    Error::Config {
        field,
        reason: format!("out of range: got {got}"),
    }
}

impl Config {
    /// Checks every bound and returns the config unchanged. The first violated
    /// bound is reported by field name.
    pub fn validate(self) -> Result<Self> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(bad("epsilon", self.epsilon));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(bad("tau", self.tau));
        }
        if self.n_entcls < 2 {
            return Err(bad("n_entcls", self.n_entcls));
        }
        if self.max_iter < 1 {
            return Err(bad("max_iter", self.max_iter));
        }
        if !(self.th_phi > 0.0) || !self.th_phi.is_finite() {
            return Err(bad("th_phi", self.th_phi));
        }
        if self.n_kmeans_cap < 1 {
            return Err(bad("n_kmeans_cap", self.n_kmeans_cap));
        }
        if self.k_init < 1 {
            return Err(bad("k_init", self.k_init));
        }
        if self.pca_agg_dims < 1 || self.pca_agg_dims > 3 {
            return Err(bad("pca_agg_dims", self.pca_agg_dims));
        }
        if self.pca_sel_dims < 1 {
            return Err(bad("pca_sel_dims", self.pca_sel_dims));
        }
        if self.workers < 1 {
            return Err(bad("workers", self.workers));
        }
        if !(self.xi_spike > 0.0) || !self.xi_spike.is_finite() {
            return Err(bad("xi_spike", self.xi_spike));
        }
        if self.kmeans_rounds < 1 {
            return Err(bad("kmeans_rounds", self.kmeans_rounds));
        }
        Ok(self)
    }

    /// Parses a flat `key = value` file. Missing keys keep their defaults.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0),
            msg: e.message().to_string(),
        })
    }

    pub fn from_kv_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv_str(&std::fs::read_to_string(path)?)
    }

    /// Applies one `key=value` override, as given on a command line.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_err = |msg: String| Error::Parse { line: 0, msg };
        macro_rules! num {
            ($t:ty) => {
                value
                    .trim()
                    .parse::<$t>()
                    .map_err(|e| parse_err(format!("{key}: {e}")))?
            };
        }
        match key {
            "n_kmeans_cap" => self.n_kmeans_cap = num!(usize),
            "k_init" => self.k_init = num!(usize),
            "n_entcls" => self.n_entcls = num!(usize),
            "max_iter" => self.max_iter = num!(usize),
            "epsilon" => self.epsilon = num!(f64),
            "pca_agg_dims" => self.pca_agg_dims = num!(usize),
            "th_phi" => self.th_phi = num!(f64),
            "pca_sel_dims" => self.pca_sel_dims = num!(usize),
            "tau" => self.tau = num!(f64),
            "seed" => self.seed = num!(u64),
            "workers" => self.workers = num!(usize),
            "xi_spike" => self.xi_spike = num!(f64),
            "kmeans_rounds" => self.kmeans_rounds = num!(usize),
            _ => return Err(parse_err(format!("unknown key `{key}`"))),
        }
        Ok(())
    }
}
