//! Per-cluster sampling: the most central member first, then members ranked
//! by how often they are hull vertices of low-dimensional projections.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::data::{n_samp, ClusterSelection, Clustering, Features, SelectionResult};
use crate::error::Result;
use crate::numerics::hull::{hull_1d, hull_2d};
use crate::numerics::pca_fit_transform;
use crate::parallel::Workers;
use crate::scalar::{dist, Scalar};

/// Everything computed while ranking one cluster. Vectors are aligned with
/// `members`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSelectionDetail {
    pub members: Vec<usize>,
    pub key_element: usize,
    /// Mean plus population standard deviation of each member's distances to
    /// the other members.
    pub statistic: Vec<f64>,
    pub frequency: Vec<u32>,
    pub ranked: Vec<usize>,
    pub n_samp: usize,
}

impl ClusterSelectionDetail {
    pub fn selected(&self) -> &[usize] {
        &self.ranked[..self.n_samp]
    }
}

/// Centrality statistic of every member; a singleton scores 0.
pub fn centrality<T: Scalar>(members: &[usize], fs: &Features<T>) -> Vec<f64> {
    let k = members.len();
    if k < 2 {
        return vec![0.0; k];
    }
    let mut d = vec![0.0f64; k * k];
    for i in 0..k {
        for j in 0..i {
            let v = dist(fs.row(members[i]), fs.row(members[j])).as_f64();
            d[i * k + j] = v;
            d[j * k + i] = v;
        }
    }
    let others = (k - 1) as f64;
    (0..k)
        .map(|i| {
            let row = (0..k).filter(|&j| j != i).map(|j| d[i * k + j]);
            let mean = row.clone().sum::<f64>() / others;
            let var = row.map(|x| (x - mean).powi(2)).sum::<f64>() / others;
            mean + var.sqrt()
        })
        .collect()
}

/// Statistics on a grid of relative size 1e-12, so that values equal up to
/// round-off tie and fall back to index order.
fn quantized(stat: &[f64]) -> Vec<i64> {
    let top = stat.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let unit = (top * 1e-12).max(f64::MIN_POSITIVE);
    stat.iter().map(|&x| (x / unit).round() as i64).collect()
}

fn argmin(stat: &[f64]) -> usize {
    let q = quantized(stat);
    (0..q.len()).fold(0, |b, i| if q[i] < q[b] { i } else { b })
}

/// Member minimising mean plus standard deviation of its distances to the
/// rest of the cluster. Ties go to the earlier member.
pub fn key_element<T: Scalar>(members: &[usize], fs: &Features<T>) -> usize {
    assert!(!members.is_empty(), "key element of an empty cluster");
    members[argmin(&centrality(members, fs))]
}

/// How many 2-D principal-component projections of the cluster have each
/// member as a hull vertex.
///
/// The cluster is projected onto its top `min(pca_sel_dims, rank, size - 1)`
/// components and every pair of components is hulled. With a single
/// component the two extremes count once; clusters of at most two members
/// give every member a count of 1.
pub fn vertex_frequency<T: Scalar>(members: &[usize], fs: &Features<T>, cfg: &Config) -> Vec<u32> {
    let k = members.len();
    if k <= 2 {
        return vec![1; k];
    }
    let (model, scores) = pca_fit_transform(&fs.gather(members), fs.m(), cfg.pca_sel_dims);
    let r = model.d;
    let d = r.min(k - 1);
    let mut h = vec![0u32; k];
    let col = |a: usize| -> Vec<T> { (0..k).map(|i| scores[i * r + a]).collect() };
    if d == 1 {
        for v in hull_1d(&col(0)).vertex_indices {
            h[v] += 1;
        }
    }
    for a in 0..d {
        for b in a + 1..d {
            let pts: Vec<T> = (0..k)
                .flat_map(|i| [scores[i * r + a], scores[i * r + b]])
                .collect();
            for v in hull_2d(&pts).vertex_indices {
                h[v] += 1;
            }
        }
    }
    h
}

/// Ranks a cluster and keeps the first `ceil(tau · size)` members.
pub fn select_from_cluster<T: Scalar>(
    members: &[usize],
    fs: &Features<T>,
    cfg: &Config,
) -> ClusterSelectionDetail {
    let statistic = centrality(members, fs);
    let frequency = vertex_frequency(members, fs, cfg);
    let key = argmin(&statistic);
    let q = quantized(&statistic);
    let mut rest: Vec<usize> = (0..members.len()).filter(|&i| i != key).collect();
    rest.sort_by(|&a, &b| {
        frequency[b]
            .cmp(&frequency[a])
            .then(q[a].cmp(&q[b]))
            .then(members[a].cmp(&members[b]))
    });
    let ranked: Vec<usize> = std::iter::once(key)
        .chain(rest)
        .map(|i| members[i])
        .collect();
    ClusterSelectionDetail {
        members: members.to_vec(),
        key_element: members[key],
        statistic,
        frequency,
        ranked,
        n_samp: n_samp(cfg.tau, members.len()),
    }
}

/// Ranking details for every cluster, in cluster order.
pub fn select_details<T: Scalar>(
    c: &Clustering<T>,
    fs: &Features<T>,
    cfg: &Config,
    workers: &Workers,
) -> Vec<ClusterSelectionDetail> {
    workers.map(&c.clusters, |_, cl| {
        select_from_cluster(&cl.members, fs, cfg)
    })
}

/// Selection over a whole clustering.
pub fn select<T: Scalar>(
    c: &Clustering<T>,
    fs: &Features<T>,
    cfg: &Config,
) -> Result<SelectionResult> {
    let cfg = cfg.clone().validate()?;
    let workers = Workers::new(cfg.workers)?;
    let details = workers.install(|| select_details(c, fs, &cfg, &workers));
    Ok(SelectionResult::from_clusters(
        details
            .iter()
            .enumerate()
            .map(|(ci, d)| ClusterSelection {
                cluster: ci,
                selected: d.selected().to_vec(),
                n_samp: d.n_samp,
            })
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs(rows: &[&[f64]]) -> Features<f64> {
        Features::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn square_and_centre() -> Features<f64> {
        fs(&[
            &[0.0, 0.0],
            &[1.0, 0.0],
            &[0.5, 0.5],
            &[1.0, 1.0],
            &[0.0, 1.0],
        ])
    }

    #[test]
    fn key_element_midpoint() {
        let f = fs(&[&[0.0], &[2.0], &[1.0]]);
        assert_eq!(key_element(&[0, 1, 2], &f), 2);
        assert_eq!(key_element(&[1], &f), 1);
    }

    #[test]
    fn frequencies_of_square() {
        let f = square_and_centre();
        let cfg = Config::default();
        assert_eq!(vertex_frequency(&[0, 1, 3, 4], &f, &cfg), vec![1, 1, 1, 1]);
        assert_eq!(
            vertex_frequency(&[0, 1, 2, 3, 4], &f, &cfg),
            vec![1, 1, 0, 1, 1]
        );
        assert_eq!(vertex_frequency(&[2, 4], &f, &cfg), vec![1, 1]);
    }

    #[test]
    fn square_selection_ranking() {
        let f = square_and_centre();
        let cfg = Config {
            tau: 0.4,
            ..Config::default()
        };
        let d = select_from_cluster(&[0, 1, 2, 3, 4], &f, &cfg);
        assert_eq!(d.key_element, 2);
        assert_eq!(d.n_samp, 2);
        assert_eq!(d.selected(), &[2, 0]);
    }

    #[test]
    fn tiny_tau_keeps_key() {
        let f = fs(&[&[0.0], &[2.0], &[1.0]]);
        let cfg = Config {
            tau: 0.01,
            ..Config::default()
        };
        assert_eq!(select_from_cluster(&[0, 1, 2], &f, &cfg).selected(), &[2]);
    }
}
