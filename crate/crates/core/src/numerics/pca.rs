use super::eigen::SymmetricEigen;
use crate::scalar::Scalar;

/// A fitted principal-component projection.
#[derive(Clone, Debug)]
pub struct PcaModel<T> {
    pub mean: Vec<T>,
    /// `m × d` row-major; columns are orthonormal principal axes.
    pub components: Vec<T>,
    pub explained_variance: Vec<T>,
    pub m: usize,
    pub d: usize,
}

impl<T: Scalar> PcaModel<T> {
    pub fn axis(&self, k: usize) -> Vec<T> {
        (0..self.m)
            .map(|r| self.components[r * self.d + k])
            .collect()
    }

    /// Scores of `points` (row-major, `m` columns) on the fitted axes.
    pub fn transform(&self, points: &[T]) -> Vec<T> {
        let n = points.len() / self.m;
        let mut out = vec![T::zero(); n * self.d];
        let mut centered = vec![T::zero(); self.m];
        for (i, p) in points.chunks_exact(self.m).enumerate() {
            for j in 0..self.m {
                centered[j] = p[j] - self.mean[j];
            }
            for k in 0..self.d {
                let mut s = T::zero();
                for j in 0..self.m {
                    s = s + centered[j] * self.components[j * self.d + k];
                }
                out[i * self.d + k] = s;
            }
        }
        out
    }

    /// Maps scores back into the input space: `mean + Z·Wᵀ`.
    pub fn inverse_transform(&self, scores: &[T]) -> Vec<T> {
        let n = if self.d == 0 {
            0
        } else {
            scores.len() / self.d
        };
        let mut out = Vec::with_capacity(n * self.m);
        for i in 0..n {
            for j in 0..self.m {
                let mut s = self.mean[j];
                for k in 0..self.d {
                    s = s + scores[i * self.d + k] * self.components[j * self.d + k];
                }
                out.push(s);
            }
        }
        out
    }
}

/// Fits PCA on `points` (row-major, `m` columns) and projects them.
///
/// The output dimension is `min(d, m, rank)` where rank is the numerical rank
/// of the centered data. Axes are ordered by explained variance and each is
/// signed so that its largest-magnitude entry is positive.
pub fn pca_fit_transform<T: Scalar>(points: &[T], m: usize, d: usize) -> (PcaModel<T>, Vec<T>) {
    let n = points.len() / m;
    assert!(n >= 1, "PCA needs at least one point");
    let mut mean = vec![0.0f64; m];
    for p in points.chunks_exact(m) {
        for (a, v) in mean.iter_mut().zip(p) {
            *a += v.as_f64();
        }
    }
    let mean: Vec<T> = mean.into_iter().map(|a| T::of(a / n as f64)).collect();
    let xc: Vec<T> = points
        .chunks_exact(m)
        .flat_map(|p| p.iter().zip(&mean).map(|(&v, &mu)| v - mu))
        .collect();
    let max_abs = xc.iter().fold(T::zero(), |a, v| a.max(v.abs()));

    let gram_route = m > n;
    let order = if gram_route { n } else { m };
    let mut a = vec![T::zero(); order * order];
    if gram_route {
        for i in 0..n {
            for j in 0..=i {
                let s: T = (0..m).map(|c| xc[i * m + c] * xc[j * m + c]).sum();
                a[i * n + j] = s;
                a[j * n + i] = s;
            }
        }
    } else {
        for row in xc.chunks_exact(m) {
            for i in 0..m {
                let ri = row[i];
                if ri == T::zero() {
                    continue;
                }
                for j in 0..=i {
                    a[i * m + j] = a[i * m + j] + ri * row[j];
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                a[j * m + i] = a[i * m + j];
            }
        }
    }
    let eig = SymmetricEigen::new(&a, order);

    let eps = T::epsilon();
    let lam_max = eig
        .values
        .first()
        .copied()
        .unwrap_or(T::zero())
        .max(T::zero());
    let rel_tol = lam_max * T::of((n.max(m) as f64) * 100.0) * eps;
    let noise = T::of(100.0) * eps * max_abs;
    let abs_tol = T::of(n as f64) * noise * noise;
    let rank = eig
        .values
        .iter()
        .take_while(|&&l| l > rel_tol && l > abs_tol)
        .count();
    let d_out = d.min(m).min(rank);

    let mut axes: Vec<Vec<T>> = Vec::with_capacity(d_out);
    for k in 0..d_out {
        let u = eig.vector(k);
        let mut w = if gram_route {
            let mut w = vec![T::zero(); m];
            for (i, &ui) in u.iter().enumerate() {
                for c in 0..m {
                    w[c] = w[c] + xc[i * m + c] * ui;
                }
            }
            w
        } else {
            u
        };
        // Re-orthonormalise against earlier axes; the Gram route loses a few ulps.
        for prev in &axes {
            let dot: T = w.iter().zip(prev).map(|(&a, &b)| a * b).sum();
            for (x, &p) in w.iter_mut().zip(prev) {
                *x = *x - dot * p;
            }
        }
        let norm = w.iter().map(|&x| x * x).sum::<T>().sqrt();
        for x in w.iter_mut() {
            *x = *x / norm;
        }
        let pivot = w
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bi, bv), (i, &x)| {
                if x.abs() > bv {
                    (i, x.abs())
                } else {
                    (bi, bv)
                }
            })
            .0;
        if w[pivot] < T::zero() {
            for x in w.iter_mut() {
                *x = -*x;
            }
        }
        axes.push(w);
    }

    let denom = T::of(if n > 1 { (n - 1) as f64 } else { 1.0 });
    let explained_variance = eig.values[..d_out].iter().map(|&l| l / denom).collect();
    let mut components = vec![T::zero(); m * d_out];
    for (k, w) in axes.iter().enumerate() {
        for j in 0..m {
            components[j * d_out + k] = w[j];
        }
    }
    let model = PcaModel {
        mean,
        components,
        explained_variance,
        m,
        d: d_out,
    };
    let scores = model.transform(points);
    (model, scores)
}
