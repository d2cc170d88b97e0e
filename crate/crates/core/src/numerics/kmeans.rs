use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{seeded_rng, tags};
use crate::scalar::{sq_dist, Scalar};

// Below this many points the assignment step stays on the calling thread.
const PAR_MIN_POINTS: usize = 4096;

#[derive(Clone, Debug)]
pub struct KMeansResult<T> {
    pub assignment: Vec<usize>,
    /// Row-major `k × dim`.
    pub centroids: Vec<T>,
    /// Sum of squared distances to the assigned centroid, one entry per round.
    pub objective: Vec<f64>,
    pub rounds: usize,
}

/// Lloyd's k-means with k-means++ seeding drawn from `(seed, KMEANS)`.
pub fn kmeans<T: Scalar>(
    points: &[T],
    dim: usize,
    k: usize,
    seed: u64,
    max_rounds: usize,
) -> Result<KMeansResult<T>> {
    let mut rng = seeded_rng(seed, tags::KMEANS);
    kmeans_with_rng(points, dim, k, &mut rng, max_rounds)
}

/// As [`kmeans`], drawing the seeding from a caller-supplied stream.
///
/// Every returned cluster id in `0..k` is non-empty: a cluster left empty by
/// an update is reseeded with the point farthest from its own centroid.
pub fn kmeans_with_rng<T: Scalar, R: Rng>(
    points: &[T],
    dim: usize,
    k: usize,
    rng: &mut R,
    max_rounds: usize,
) -> Result<KMeansResult<T>> {
    let n = points.len() / dim;
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "k-means needs 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let mut centroids = plus_plus(points, dim, k, rng);
    let mut assignment = vec![usize::MAX; n];
    let mut objective = Vec::new();
    let mut rounds = 0;

    while rounds < max_rounds.max(1) {
        rounds += 1;
        let (next, cost) = assign(points, &centroids, dim);
        objective.push(cost);
        let changed = next != assignment;
        assignment = next;
        if !changed {
            break;
        }
        update(points, dim, k, &assignment, &mut centroids);
        repair_empty(points, dim, k, &mut assignment, &mut centroids);
    }
    // The last update may have moved centroids past the recorded assignment;
    // make them consistent with it.
    update(points, dim, k, &assignment, &mut centroids);
    Ok(KMeansResult {
        assignment,
        centroids,
        objective,
        rounds,
    })
}

fn plus_plus<T: Scalar, R: Rng>(points: &[T], dim: usize, k: usize, rng: &mut R) -> Vec<T> {
    let n = points.len() / dim;
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    taken[first] = true;

    let mut d2: Vec<f64> = (0..n)
        .map(|i| {
            sq_dist(
                &points[i * dim..(i + 1) * dim],
                &points[first * dim..(first + 1) * dim],
            )
            .as_f64()
        })
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave the target past the last positive weight.
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            // Only duplicates remain; take the first unused row.
            taken.iter().position(|t| !t).unwrap()
        };
        chosen.push(next);
        taken[next] = true;
        let c = &points[next * dim..(next + 1) * dim];
        let refresh = |(i, d): (usize, &mut f64)| {
            let nd = sq_dist(&points[i * dim..(i + 1) * dim], c).as_f64();
            if nd < *d {
                *d = nd;
            }
        };
        if n >= PAR_MIN_POINTS {
            d2.par_iter_mut().enumerate().for_each(refresh);
        } else {
            d2.iter_mut().enumerate().for_each(refresh);
        }
    }
    chosen
        .iter()
        .flat_map(|&i| points[i * dim..(i + 1) * dim].iter().copied())
        .collect()
}

fn nearest_centroid<T: Scalar>(p: &[T], centroids: &[T], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (ci, c) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(p, c).as_f64();
        if d < best.1 {
            best = (ci, d);
        }
    }
    best
}

fn assign<T: Scalar>(points: &[T], centroids: &[T], dim: usize) -> (Vec<usize>, f64) {
    let n = points.len() / dim;
    let pairs: Vec<(usize, f64)> = if n >= PAR_MIN_POINTS {
        points
            .par_chunks_exact(dim)
            .map(|p| nearest_centroid(p, centroids, dim))
            .collect()
    } else {
        points
            .chunks_exact(dim)
            .map(|p| nearest_centroid(p, centroids, dim))
            .collect()
    };
    // Sequential sum keeps the objective independent of thread count.
    let cost = pairs.iter().map(|&(_, d)| d).sum();
    (pairs.into_iter().map(|(c, _)| c).collect(), cost)
}

fn update<T: Scalar>(
    points: &[T],
    dim: usize,
    k: usize,
    assignment: &[usize],
    centroids: &mut [T],
) {
    let mut sums = vec![0.0f64; k * dim];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.chunks_exact(dim).zip(assignment) {
        counts[c] += 1;
        for (s, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(p) {
            *s += v.as_f64();
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            for j in 0..dim {
                centroids[c * dim + j] = T::of(sums[c * dim + j] * inv);
            }
        }
    }
}

fn repair_empty<T: Scalar>(
    points: &[T],
    dim: usize,
    k: usize,
    assignment: &mut [usize],
    centroids: &mut [T],
) {
    loop {
        let mut counts = vec![0usize; k];
        for &c in assignment.iter() {
            counts[c] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        // Farthest point from its centroid among clusters that can spare one.
        let mut best: Option<(f64, usize)> = None;
        for (i, p) in points.chunks_exact(dim).enumerate() {
            let c = assignment[i];
            if counts[c] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[c * dim..(c + 1) * dim]).as_f64();
            if best.is_none_or(|(bd, _)| d > bd) {
                best = Some((d, i));
            }
        }
        let (_, far) = best.expect("k <= n leaves a donor cluster");
        let donor = assignment[far];
        assignment[far] = empty;
        centroids[empty * dim..(empty + 1) * dim]
            .copy_from_slice(&points[far * dim..(far + 1) * dim]);
        // Refresh the donor's centroid.
        let mut acc = vec![0.0f64; dim];
        let mut cnt = 0usize;
        for (p, &c) in points.chunks_exact(dim).zip(assignment.iter()) {
            if c == donor {
                cnt += 1;
                for (a, v) in acc.iter_mut().zip(p) {
                    *a += v.as_f64();
                }
            }
        }
        for j in 0..dim {
            centroids[donor * dim + j] = T::of(acc[j] / cnt as f64);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_one_is_one_cluster() {
        let pts = [0.0f64, 1.0, 2.0, 10.0];
        let r = kmeans(&pts, 1, 1, 3, 100).unwrap();
        assert!(r.assignment.iter().all(|&a| a == 0));
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let pts = [0.0f64, 0.0, 1.0, 0.0, 0.0, 1.0, 5.0, 5.0, -3.0, 2.0];
        let r = kmeans(&pts, 2, 5, 9, 100).unwrap();
        let mut a = r.assignment.clone();
        a.sort_unstable();
        assert_eq!(a, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn duplicates_still_fill_every_cluster() {
        let pts = [1.0f64, 1.0, 1.0, 1.0, 2.0];
        let r = kmeans(&pts, 1, 3, 0, 100).unwrap();
        let mut seen = [false; 3];
        for &a in &r.assignment {
            seen[a] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn bad_k() {
        let pts = [0.0f64, 1.0];
        assert!(kmeans(&pts, 1, 0, 0, 10).is_err());
        assert!(kmeans(&pts, 1, 3, 0, 10).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let pts: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64).collect();
        let a = kmeans(&pts, 2, 7, 11, 100).unwrap();
        let b = kmeans(&pts, 2, 7, 11, 100).unwrap();
        assert_eq!(a.assignment, b.assignment);
    }
}
