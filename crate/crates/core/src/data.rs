//! Feature matrices, clusters and selections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `n` feature vectors of dimension `m`, stored row-major.
///
/// Rows are addressed by dense index `0..n`; external string ids, when
/// present, are metadata only.
#[derive(Clone, Debug, PartialEq)]
pub struct Features<T> {
    data: Vec<T>,
    n: usize,
    m: usize,
    external_ids: Option<Vec<String>>,
}

impl<T: Scalar> Features<T> {
    pub fn new(data: Vec<T>, n: usize, m: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        if m == 0 {
            return Err(Error::DimensionMismatch { row: 0 });
        }
        if data.len() != n * m {
            return Err(Error::DimensionMismatch {
                row: data.len() / m,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / m,
                col: pos % m,
            });
        }
        Ok(Self {
            data,
            n,
            m,
            external_ids: None,
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let m = rows.first().map(Vec::len).ok_or(Error::EmptyMatrix)?;
        let mut data = Vec::with_capacity(rows.len() * m);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch { row: r });
            }
            data.extend_from_slice(row);
        }
        Self::new(data, rows.len(), m)
    }

    pub fn with_external_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.n {
            return Err(Error::LengthMismatch {
                left: ids.len(),
                right: self.n,
            });
        }
        let mut sorted: Vec<&String> = ids.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("duplicate external id".into()));
        }
        self.external_ids = Some(ids);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> {
        self.data.chunks_exact(self.m)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn external_ids(&self) -> Option<&[String]> {
        self.external_ids.as_deref()
    }

    pub fn external_id(&self, i: usize) -> Option<&str> {
        self.external_ids.as_ref().map(|v| v[i].as_str())
    }

    /// Copies the listed rows into a fresh row-major matrix.
    pub fn gather(&self, indices: &[usize]) -> Vec<T> {
        let mut out = Vec::with_capacity(indices.len() * self.m);
        for &i in indices {
            out.extend_from_slice(self.row(i));
        }
        out
    }

    /// Restricts to the listed rows, keeping external ids.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            data: self.gather(indices),
            n: indices.len(),
            m: self.m,
            external_ids: self
                .external_ids
                .as_ref()
                .map(|ids| indices.iter().map(|&i| ids[i].clone()).collect()),
        }
    }

    /// Arithmetic mean of the listed rows, accumulated in f64.
    pub fn mean_of(&self, indices: &[usize]) -> Vec<T> {
        let mut acc = vec![0.0f64; self.m];
        for &i in indices {
            for (a, v) in acc.iter_mut().zip(self.row(i)) {
                *a += v.as_f64();
            }
        }
        let k = indices.len().max(1) as f64;
        acc.into_iter().map(|a| T::of(a / k)).collect()
    }
}

/// One cluster: sorted member indices plus their centroid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster<T> {
    pub members: Vec<usize>,
    pub centroid: Vec<T>,
}

impl<T: Scalar> Cluster<T> {
    pub fn new(mut members: Vec<usize>, fs: &Features<T>) -> Self {
        members.sort_unstable();
        let centroid = fs.mean_of(&members);
        Self { members, centroid }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// An ordered list of disjoint clusters covering `0..source_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering<T> {
    pub clusters: Vec<Cluster<T>>,
    pub source_n: usize,
}

impl<T: Scalar> Clustering<T> {
    /// Builds clusters from member groups, computing centroids. Empty groups
    /// are dropped.
    pub fn from_groups(groups: Vec<Vec<usize>>, fs: &Features<T>) -> Self {
        let clusters = groups
            .into_iter()
            .filter(|g| !g.is_empty())
            .map(|g| Cluster::new(g, fs))
            .collect();
        Self {
            clusters,
            source_n: fs.n(),
        }
    }

    /// Groups instances by label; cluster order follows first appearance.
    pub fn from_labels(labels: &[usize], fs: &Features<T>) -> Self {
        let mut slot = std::collections::BTreeMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, &l) in labels.iter().enumerate() {
            let g = *slot.entry(l).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(i);
        }
        Self::from_groups(groups, fs)
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Verifies that the clusters are non-empty, disjoint and cover every
    /// instance exactly once.
    pub fn check_partition(&self) -> Result<()> {
        let mut seen = vec![false; self.source_n];
        for (ci, c) in self.clusters.iter().enumerate() {
            if c.members.is_empty() {
                return Err(Error::NotAPartition(format!("cluster {ci} is empty")));
            }
            for &i in &c.members {
                if i >= self.source_n {
                    return Err(Error::NotAPartition(format!(
                        "index {i} out of range in cluster {ci}"
                    )));
                }
                if seen[i] {
                    return Err(Error::NotAPartition(format!(
                        "index {i} appears twice (cluster {ci})"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::NotAPartition(format!("index {missing} unassigned")));
        }
        Ok(())
    }

    /// Cluster id per instance. Assumes a partition.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.source_n];
        for (ci, c) in self.clusters.iter().enumerate() {
            for &i in &c.members {
                out[i] = ci;
            }
        }
        out
    }

    /// Centroids as a row-major `len × m` matrix.
    pub fn centroid_matrix(&self) -> Vec<T> {
        self.clusters
            .iter()
            .flat_map(|c| c.centroid.iter().copied())
            .collect()
    }

    /// Orders clusters by their smallest member.
    pub fn canonicalize(&mut self) {
        self.clusters.sort_by_key(|c| c.members[0]);
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Cluster::len).collect()
    }
}

/// Selection made inside one cluster, in rank order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSelection {
    pub cluster: usize,
    pub selected: Vec<usize>,
    pub n_samp: usize,
}

/// Per-cluster selections and their sorted union.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub per_cluster: Vec<ClusterSelection>,
    pub global: Vec<usize>,
}

impl SelectionResult {
    pub fn from_clusters(per_cluster: Vec<ClusterSelection>) -> Self {
        let mut global: Vec<usize> = per_cluster
            .iter()
            .flat_map(|c| c.selected.iter().copied())
            .collect();
        global.sort_unstable();
        Self {
            per_cluster,
            global,
        }
    }

    pub fn len(&self) -> usize {
        self.global.len()
    }

    pub fn is_empty(&self) -> bool {
        self.global.is_empty()
    }
}

/// Number of instances kept from a cluster of `size`: `ceil(tau·size)`,
/// clamped to `1..=size`.
pub fn n_samp(tau: f64, size: usize) -> usize {
    if size == 0 {
        return 0;
    }
    // Guard against 0.15*100 = 15.000000000000002 style round-up.
    let raw = tau * size as f64;
    let nearest = raw.round();
    let c = if (raw - nearest).abs() < 1e-9 {
        nearest
    } else {
        raw.ceil()
    };
    (c as usize).clamp(1, size)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs() -> Features<f64> {
        Features::from_rows(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap()
    }

    #[test]
    fn rejects_ragged_and_nonfinite() {
        let e = Features::<f64>::from_rows(&[vec![1.0, 2.0], vec![1.0]]).unwrap_err();
        assert_eq!(e.to_string(), "dimension mismatch at row 1");
        let e = Features::<f64>::from_rows(&[vec![1.0, f64::NAN]]).unwrap_err();
        assert_eq!(e.to_string(), "non-finite value at (0,1)");
        assert!(matches!(
            Features::<f64>::new(vec![], 0, 3),
            Err(Error::EmptyMatrix)
        ));
    }

    #[test]
    fn centroid_is_mean() {
        let c = Cluster::new(vec![2, 0, 1], &fs());
        assert_eq!(c.members, vec![0, 1, 2]);
        assert!((c.centroid[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((c.centroid[1] - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn partition_checks() {
        let f = fs();
        let ok = Clustering::from_groups(vec![vec![0, 2], vec![1]], &f);
        ok.check_partition().unwrap();
        assert_eq!(ok.labels(), vec![0, 1, 0]);
        let overlap = Clustering::from_groups(vec![vec![0, 1], vec![1, 2]], &f);
        assert!(overlap.check_partition().is_err());
        let missing = Clustering::from_groups(vec![vec![0, 1]], &f);
        assert!(missing.check_partition().is_err());
    }

    #[test]
    fn n_samp_ceiling() {
        assert_eq!(n_samp(0.15, 100), 15);
        assert_eq!(n_samp(0.01, 3), 1);
        assert_eq!(n_samp(0.1, 11), 2);
        assert_eq!(n_samp(1.0, 7), 7);
        assert_eq!(n_samp(0.05, 60), 3);
        assert_eq!(n_samp(0.07, 100), 7);
    }
}
