//! Library results checked against direct, unoptimised re-derivations.

use approx::assert_abs_diff_eq;
use instsel::entropy::{element_entropy, set_entropy, xi, xi_all, SimilarityMatrix};
use instsel::metrics::{ami, ContingencyTable};
use instsel::numerics::{knn, pca_fit_transform};
use instsel::selection::{centrality, key_element, vertex_frequency};
use instsel::{Config, Features};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_features(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Features<f64> {
    let data = (0..n * m).map(|_| rng.random_range(-1.0..1.0)).collect();
    Features::new(data, n, m).unwrap()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn similarity_matches_pearson() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let fs = random_features(&mut rng, 12, 9);
    let rows: Vec<usize> = (0..12).collect();
    let s = SimilarityMatrix::build(&fs, &rows);
    for i in 0..12 {
        for j in 0..12 {
            let want = if i == j {
                1.0
            } else {
                0.5 * (pearson(fs.row(i), fs.row(j)) + 1.0)
            };
            assert_abs_diff_eq!(s.get(i, j), want, epsilon = 1e-12);
        }
    }
}

fn brute_set_entropy(s: &SimilarityMatrix, active: &[usize]) -> f64 {
    let mut q = Vec::new();
    for a in 0..active.len() {
        for b in a + 1..active.len() {
            let v = s.get(active[a], active[b]);
            if v > 0.0 {
                q.push(v);
            }
        }
    }
    if q.len() <= 1 {
        return 0.0;
    }
    let total: f64 = q.iter().sum();
    let h: f64 = q.iter().map(|v| v / total).map(|p| -p * p.log2()).sum();
    h / (q.len() as f64).log2()
}

#[test]
fn xi_all_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let n = rng.random_range(2..30);
        let fs = random_features(&mut rng, n, 6);
        let s = SimilarityMatrix::build(&fs, &(0..n).collect::<Vec<_>>());
        let all: Vec<usize> = (0..n).collect();
        let h = brute_set_entropy(&s, &all);
        for (i, x) in xi_all(&s).into_iter().enumerate() {
            let rest: Vec<usize> = all.iter().copied().filter(|&j| j != i).collect();
            assert_abs_diff_eq!(x, h - brute_set_entropy(&s, &rest), epsilon = 1e-10);
            assert_abs_diff_eq!(x, xi(&s, &all, i), epsilon = 1e-10);
        }
    }
}

#[test]
fn element_entropy_matches_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let fs = random_features(&mut rng, 15, 5);
    let s = SimilarityMatrix::build(&fs, &(0..15).collect::<Vec<_>>());
    for j in 0..15 {
        let col: Vec<f64> = (0..15).map(|i| s.get(i, j)).collect();
        let total: f64 = col.iter().sum();
        let h: f64 = col
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|v| -(v / total) * (v / total).log2())
            .sum();
        assert_abs_diff_eq!(element_entropy(&s, j), h / 15f64.log2(), epsilon = 1e-12);
    }
    assert_abs_diff_eq!(
        set_entropy(&s, &[0, 3, 7, 9]),
        brute_set_entropy(&s, &[0, 3, 7, 9]),
        epsilon = 1e-12
    );
}

#[test]
fn knn_matches_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let corpus = random_features(&mut rng, 300, 4);
    let queries = random_features(&mut rng, 20, 4);
    let got = knn(queries.as_slice(), corpus.as_slice(), 4, 5, false).unwrap();
    for (q, res) in queries.rows().zip(got) {
        let mut d: Vec<(f64, usize)> = corpus
            .rows()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(res, d[..5].iter().map(|x| x.1).collect::<Vec<_>>());
    }
}

fn mi(a: &[usize], b: &[usize]) -> f64 {
    ContingencyTable::new(a, b).unwrap().mutual_information()
}

fn permutations(v: &[usize]) -> Vec<Vec<usize>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn entropy(labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    let mut counts = std::collections::BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    counts
        .values()
        .map(|&c| c as f64 / n)
        .map(|p| -p * p.ln())
        .sum()
}

/// AMI with E[MI] taken over every permutation of `b`.
fn brute_ami(a: &[usize], b: &[usize]) -> f64 {
    let perms = permutations(b);
    let emi = perms.iter().map(|p| mi(a, p)).sum::<f64>() / perms.len() as f64;
    let h = 0.5 * (entropy(a) + entropy(b));
    (mi(a, b) - emi) / (h - emi)
}

#[test]
fn ami_matches_permutation_oracle() {
    let a = [0, 0, 1, 1];
    let b = [0, 1, 1, 1];
    assert_abs_diff_eq!(ami(&a, &b).unwrap(), brute_ami(&a, &b), epsilon = 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = rng.random_range(3..8);
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let denom_ok = entropy(&a) > 0.0 || entropy(&b) > 0.0;
        if denom_ok && a != b {
            let want = brute_ami(&a, &b);
            if want.is_finite() {
                assert_abs_diff_eq!(ami(&a, &b).unwrap(), want, epsilon = 1e-9);
            }
        }
    }
}

#[test]
fn key_element_matches_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let fs = random_features(&mut rng, 20, 5);
    let members: Vec<usize> = (0..20).collect();
    let stat: Vec<f64> = (0..20)
        .map(|i| {
            let d: Vec<f64> = (0..20)
                .filter(|&j| j != i)
                .map(|j| {
                    fs.row(i)
                        .iter()
                        .zip(fs.row(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            let mean = d.iter().sum::<f64>() / 19.0;
            mean + (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 19.0).sqrt()
        })
        .collect();
    for (a, b) in centrality(&members, &fs).iter().zip(&stat) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
    let best = (0..20)
        .min_by(|&a, &b| stat[a].partial_cmp(&stat[b]).unwrap())
        .unwrap();
    assert_eq!(key_element(&members, &fs), best);
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// A point is a hull vertex unless it lies in a triangle of three others.
fn brute_vertices(pts: &[[f64; 2]]) -> Vec<bool> {
    let n = pts.len();
    (0..n)
        .map(|p| {
            for a in 0..n {
                for b in a + 1..n {
                    for c in b + 1..n {
                        if [a, b, c].contains(&p) {
                            continue;
                        }
                        let (x, y, z) = (pts[a], pts[b], pts[c]);
                        let s1 = cross(x, y, pts[p]);
                        let s2 = cross(y, z, pts[p]);
                        let s3 = cross(z, x, pts[p]);
                        if (s1 >= 0.0 && s2 >= 0.0 && s3 >= 0.0)
                            || (s1 <= 0.0 && s2 <= 0.0 && s3 <= 0.0)
                        {
                            return false;
                        }
                    }
                }
            }
            true
        })
        .collect()
}

#[test]
fn vertex_frequency_matches_subspace_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let fs = random_features(&mut rng, 30, 8);
    let members: Vec<usize> = (0..30).collect();
    let (model, scores) = pca_fit_transform(fs.as_slice(), 8, 8);
    assert_eq!(model.d, 8);
    let mut want = vec![0u32; 30];
    for a in 0..8 {
        for b in a + 1..8 {
            let pts: Vec<[f64; 2]> = (0..30)
                .map(|i| [scores[i * 8 + a], scores[i * 8 + b]])
                .collect();
            for (i, v) in brute_vertices(&pts).into_iter().enumerate() {
                want[i] += v as u32;
            }
        }
    }
    assert_eq!(vertex_frequency(&members, &fs, &Config::default()), want);
}
