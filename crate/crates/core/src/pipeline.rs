//! Split-and-merge clustering: k-means partitioning, iterated entropy
//! splitting with nearest-centroid merging, and hull-based final aggregation.

use std::collections::HashMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::data::{Clustering, Features};
use crate::entropy::{entropy_cluster, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::numerics::{hull_measure, kmeans::kmeans_with_rng, nearest, pca_fit_transform};
use crate::parallel::Workers;
use crate::rng::{job_rng, seeded_rng, tags};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub clusters: usize,
    pub d_conv: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    /// 1-based iteration at which `d_conv` first fell below epsilon.
    pub converged_at: Option<usize>,
    pub initial_clusters: usize,
    pub final_clusters: usize,
    pub partition_seconds: f64,
    pub aggregate_seconds: f64,
}

impl IterationTrace {
    pub fn last_d_conv(&self) -> Option<f64> {
        self.records.last().map(|r| r.d_conv)
    }
}

/// Splits `members` (kept in order) into `parts` contiguous chunks whose
/// sizes differ by at most one.
pub fn even_chunks(members: &[usize], parts: usize) -> Vec<Vec<usize>> {
    let parts = parts.clamp(1, members.len().max(1));
    let base = members.len() / parts;
    let extra = members.len() % parts;
    let mut out = Vec::with_capacity(parts);
    let mut at = 0;
    for p in 0..parts {
        let len = base + usize::from(p < extra);
        out.push(members[at..at + len].to_vec());
        at += len;
    }
    out
}

/// Cuts every group above `cap` into the fewest near-equal chunks, keeping
/// each group's member order.
fn cap_groups(groups: Vec<Vec<usize>>, cap: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        if g.len() > cap {
            out.extend(even_chunks(&g, g.len().div_ceil(cap)));
        } else {
            out.push(g);
        }
    }
    out
}

/// Seeded k-means partition whose clusters hold at most `n_entcls` members.
///
/// Inputs larger than `n_kmeans_cap` are shuffled and cut into contiguous
/// groups first; each group gets `ceil(|group| / n_entcls)` means, at most
/// `k_init`.
pub fn initial_partition<T: Scalar>(
    fs: &Features<T>,
    cfg: &Config,
    workers: &Workers,
) -> Result<Clustering<T>> {
    let n = fs.n();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut order: Vec<usize> = (0..n).collect();
    let groups: Vec<Vec<usize>> = if n > cfg.n_kmeans_cap {
        order.shuffle(&mut seeded_rng(cfg.seed, tags::SHUFFLE));
        even_chunks(&order, n.div_ceil(cfg.n_kmeans_cap))
    } else {
        vec![order]
    };

    let results = workers.map(&groups, |gi, group| -> Result<Vec<Vec<usize>>> {
        let k = group.len().div_ceil(cfg.n_entcls).min(cfg.k_init).max(1);
        if k == 1 {
            return Ok(vec![group.clone()]);
        }
        let pts = fs.gather(group);
        let mut rng = job_rng(cfg.seed, tags::KMEANS, gi as u64);
        let km = kmeans_with_rng(&pts, fs.m(), k, &mut rng, cfg.kmeans_rounds)?;
        let mut out = vec![Vec::new(); k];
        for (local, &c) in km.assignment.iter().enumerate() {
            out[c].push(group[local]);
        }
        Ok(out)
    });
    let mut all = Vec::new();
    for r in results {
        all.extend(r?.into_iter().map(|mut g| {
            g.sort_unstable();
            g
        }));
    }
    Ok(Clustering::from_groups(cap_groups(all, cfg.n_entcls), fs))
}

/// Replaces every cluster by its entropy sub-partition, keeping parent order.
pub fn split_phase<T: Scalar>(
    c: &Clustering<T>,
    fs: &Features<T>,
    cfg: &Config,
    workers: &Workers,
) -> Result<Clustering<T>> {
    let parts = workers.map(&c.clusters, |_, cl| -> Result<Vec<Vec<usize>>> {
        let s = SimilarityMatrix::build(fs, &cl.members);
        let local = entropy_cluster(&s, cfg.n_entcls, cfg.xi_spike)?;
        Ok(local
            .into_iter()
            .map(|g| g.into_iter().map(|i| cl.members[i]).collect())
            .collect())
    });
    let mut groups = Vec::new();
    for p in parts {
        groups.extend(p?);
    }
    Ok(Clustering::from_groups(groups, fs))
}

fn centroid_nn<T: Scalar>(c: &Clustering<T>, workers: &Workers) -> Vec<Option<usize>> {
    let cm = c.centroid_matrix();
    let m = c.clusters.first().map_or(1, |x| x.centroid.len()).max(1);
    workers.map(&c.clusters, |i, cl| nearest(&cl.centroid, &cm, m, Some(i)))
}

/// Pairs every cluster with its nearest centroid and merges pairs whose
/// clusters are both still free, scanning in index order. Merged clusters
/// above `n_entcls` are cut back into the fewest near-equal chunks, taking
/// the first cluster's members before the second's.
pub fn merge_phase<T: Scalar>(
    c: &Clustering<T>,
    fs: &Features<T>,
    cfg: &Config,
    workers: &Workers,
) -> Clustering<T> {
    if c.len() < 2 {
        return c.clone();
    }
    let nn = centroid_nn(c, workers);
    let mut consumed = vec![false; c.len()];
    let mut groups: Vec<Option<Vec<usize>>> =
        c.clusters.iter().map(|x| Some(x.members.clone())).collect();
    for i in 0..c.len() {
        let Some(j) = nn[i] else { continue };
        if consumed[i] || consumed[j] {
            continue;
        }
        consumed[i] = true;
        consumed[j] = true;
        let other = groups[j].take().unwrap();
        groups[i].as_mut().unwrap().extend(other);
    }
    let groups = cap_groups(groups.into_iter().flatten().collect(), cfg.n_entcls);
    Clustering::from_groups(groups, fs)
}

fn iou(a: &[usize], b: &[usize]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

fn directed_overlap<T: Scalar>(from: &Clustering<T>, to: &Clustering<T>) -> f64 {
    let cm = to.centroid_matrix();
    let m = to.clusters[0].centroid.len().max(1);
    let total: f64 = from
        .clusters
        .iter()
        .map(|c| {
            let j = nearest(&c.centroid, &cm, m, None).unwrap();
            iou(&c.members, &to.clusters[j].members)
        })
        .sum();
    total / from.len() as f64
}

/// Normalised IoU similarity of two clusterings of the same instances.
///
/// Each cluster is matched to the other clustering's nearest centroid and the
/// member IoUs are averaged per direction; the mean of both directions is
/// then averaged with the count penalty `(n1 + n2) / (2 max(n1, n2))`.
pub fn niou<T: Scalar>(c1: &Clustering<T>, c2: &Clustering<T>) -> Result<f64> {
    if c1.source_n != c2.source_n {
        return Err(Error::LengthMismatch {
            left: c1.source_n,
            right: c2.source_n,
        });
    }
    if c1.is_empty() || c2.is_empty() {
        return Err(Error::InvalidArgument("nIOU of an empty clustering".into()));
    }
    let avg = 0.5 * (directed_overlap(c2, c1) + directed_overlap(c1, c2));
    let (n1, n2) = (c1.len() as f64, c2.len() as f64);
    let penalty = (n1 + n2) / (2.0 * n1.max(n2));
    Ok(((avg + penalty) / 2.0).clamp(0.0, 1.0))
}

/// Iterated split and merge until consecutive clusterings agree to within
/// `epsilon` or `max_iter` rounds have run.
///
/// Returns the split result of the final round, before that round's merge.
pub fn run_iterations<T: Scalar>(
    fs: &Features<T>,
    cfg: &Config,
    workers: &Workers,
) -> Result<(Clustering<T>, IterationTrace)> {
    let t0 = Instant::now();
    let mut c = initial_partition(fs, cfg, workers)?;
    let mut trace = IterationTrace {
        initial_clusters: c.len(),
        partition_seconds: t0.elapsed().as_secs_f64(),
        ..Default::default()
    };
    let mut split = c.clone();
    for t in 1..=cfg.max_iter {
        let started = Instant::now();
        split = split_phase(&c, fs, cfg, workers)?;
        split.canonicalize();
        let next = if t < cfg.max_iter {
            merge_phase(&split, fs, cfg, workers)
        } else {
            split.clone()
        };
        let d = (1.0 - niou(&c, &next)?).clamp(0.0, 1.0);
        trace.records.push(IterationRecord {
            iteration: t,
            clusters: split.len(),
            d_conv: d,
            seconds: started.elapsed().as_secs_f64(),
        });
        log::debug!("iteration {t}: {} clusters, d_conv {d:.4}", split.len());
        c = next;
        if d < cfg.epsilon {
            trace.converged_at = Some(t);
            break;
        }
    }
    Ok((split, trace))
}

/// Shape compatibility of two clusters: summed hull volumes over the volume
/// of their union's hull, all measured after a shared PCA projection.
pub fn compatibility<T: Scalar>(a: &[usize], b: &[usize], fs: &Features<T>, cfg: &Config) -> f64 {
    if a.len() < 3 || b.len() < 3 {
        return 1.0;
    }
    let mut rows = a.to_vec();
    rows.extend_from_slice(b);
    let (model, scores) = pca_fit_transform(&fs.gather(&rows), fs.m(), cfg.pca_agg_dims);
    let r = model.d;
    if r == 0 {
        return 1.0;
    }
    let v_union = hull_measure(&scores, r).as_f64();
    if v_union <= 0.0 {
        return 1.0;
    }
    let (sa, sb) = scores.split_at(a.len() * r);
    (hull_measure(sa, r).as_f64() + hull_measure(sb, r).as_f64()) / v_union
}

/// Merges nearest-centroid pairs in decreasing order of compatibility,
/// pass after pass, until a pass merges nothing.
pub fn final_aggregate<T: Scalar>(
    c: &Clustering<T>,
    fs: &Features<T>,
    cfg: &Config,
    workers: &Workers,
) -> Clustering<T> {
    let mut cur = c.clone();
    // A cluster only grows here, so (smallest member, size) identifies it.
    let mut phi_cache: HashMap<[usize; 4], f64> = HashMap::new();
    loop {
        if cur.len() < 2 {
            return cur;
        }
        let nn = centroid_nn(&cur, workers);
        let key = |i: usize, j: usize| {
            let (x, y) = (&cur.clusters[i], &cur.clusters[j]);
            [x.members[0], x.len(), y.members[0], y.len()]
        };
        let mut pairs: Vec<(usize, usize)> = nn
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (i, j)))
            .collect();
        let missing: Vec<(usize, usize)> = pairs
            .iter()
            .copied()
            .filter(|&(i, j)| !phi_cache.contains_key(&key(i, j)))
            .collect();
        let fresh = workers.map(&missing, |_, &(i, j)| {
            compatibility(&cur.clusters[i].members, &cur.clusters[j].members, fs, cfg)
        });
        for (&(i, j), phi) in missing.iter().zip(fresh) {
            phi_cache.insert(key(i, j), phi);
        }
        let mut scored: Vec<(f64, usize, usize)> = pairs
            .drain(..)
            .map(|(i, j)| (phi_cache[&key(i, j)], i, j))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));

        let mut consumed = vec![false; cur.len()];
        let mut groups: Vec<Option<Vec<usize>>> = cur
            .clusters
            .iter()
            .map(|x| Some(x.members.clone()))
            .collect();
        let mut merges = 0;
        for (phi, i, j) in scored {
            if phi < cfg.th_phi || consumed[i] || consumed[j] {
                continue;
            }
            consumed[i] = true;
            consumed[j] = true;
            let other = groups[j].take().unwrap();
            groups[i].as_mut().unwrap().extend(other);
            merges += 1;
        }
        if merges == 0 {
            return cur;
        }
        cur = Clustering::from_groups(groups.into_iter().flatten().collect(), fs);
        cur.canonicalize();
    }
}

/// Full clustering: split/merge iterations followed by final aggregation.
pub fn cluster<T: Scalar>(
    fs: &Features<T>,
    cfg: &Config,
) -> Result<(Clustering<T>, IterationTrace)> {
    let cfg = cfg.clone().validate()?;
    let workers = Workers::new(cfg.workers)?;
    workers.install(|| {
        let (c, mut trace) = run_iterations(fs, &cfg, &workers)?;
        let t0 = Instant::now();
        let out = final_aggregate(&c, fs, &cfg, &workers);
        trace.aggregate_seconds = t0.elapsed().as_secs_f64();
        trace.final_clusters = out.len();
        debug_assert!(out.check_partition().is_ok());
        Ok((out, trace))
    })
}
