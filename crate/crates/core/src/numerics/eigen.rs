//! Dense symmetric eigendecomposition: Householder reduction to tridiagonal
//! form followed by the implicit QL algorithm (the EISPACK `tred2`/`tql2`
//! pair).

use crate::scalar::Scalar;

/// Eigenvalues in descending order and the matching unit eigenvectors,
/// stored as columns of a row-major `n × n` matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<T>,
    pub n: usize,
}

impl<T: Scalar> SymmetricEigen<T> {
    /// Decomposes the symmetric row-major matrix `a` of order `n`. Only the
    /// lower triangle is read.
    pub fn new(a: &[T], n: usize) -> Self {
        assert_eq!(a.len(), n * n, "matrix must be n × n");
        if n == 0 {
            return Self {
                values: vec![],
                vectors: vec![],
                n,
            };
        }
        let mut v: Vec<Vec<T>> = (0..n).map(|i| a[i * n..(i + 1) * n].to_vec()).collect();
        let mut d = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        tred2(&mut v, &mut d, &mut e);
        tql2(&mut v, &mut d, &mut e);

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| d[i]).collect();
        let mut vectors = vec![T::zero(); n * n];
        for (col, &src) in order.iter().enumerate() {
            for row in 0..n {
                vectors[row * n + col] = v[row][src];
            }
        }
        Self { values, vectors, n }
    }

    pub fn vector(&self, k: usize) -> Vec<T> {
        (0..self.n).map(|r| self.vectors[r * self.n + k]).collect()
    }
}

fn tred2<T: Scalar>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[n - 1][j];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale = scale + d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = T::zero();
                v[j][i] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] = d[k] / scale;
                h = h + d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g = g + v[k][j] * d[k];
                    e[k] = e[k] + v[k][j] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] = v[k][j] - (f * e[k] + g * d[k]);
                }
                d[j] = v[i - 1][j];
                v[i][j] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g = g + v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] = v[k][j] - g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k][i + 1] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = T::zero();
    }
    v[n - 1][n - 1] = T::one();
    e[0] = T::zero();
}

fn tql2<T: Scalar>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let two = T::of(2.0);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in (l + 2)..n {
                    d[i] = d[i] - h;
                }
                f = f + h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 || iter > 60 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = T::zero();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(a: &[f64], n: usize) {
        let eig = SymmetricEigen::new(a, n);
        for k in 0..n {
            let v = eig.vector(k);
            for i in 0..n {
                let av: f64 = (0..n).map(|j| a[i * n + j] * v[j]).sum();
                assert!((av - eig.values[k] * v[i]).abs() < 1e-9, "A v != λ v");
            }
            for l in 0..n {
                let dot: f64 = v.iter().zip(eig.vector(l)).map(|(x, y)| x * y).sum();
                let want = if k == l { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9);
            }
        }
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn small_matrices() {
        check(&[2.0, 1.0, 1.0, 2.0], 2);
        check(&[4.0, 1.0, 2.0, 1.0, 3.0, 0.5, 2.0, 0.5, 1.0], 3);
        check(&[5.0], 1);
        check(&[0.0; 16], 4);
    }

    #[test]
    fn diagonal_values() {
        let eig = SymmetricEigen::new(&[1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 2.0], 3);
        assert_eq!(eig.values, vec![3.0, 2.0, 1.0]);
    }
}
