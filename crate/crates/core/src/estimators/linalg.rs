//! Dense symmetric positive-definite helpers on row-major `n x n` buffers.

/// Dot product with four independent accumulators.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let b = &b[..a.len()];
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Lower Cholesky factor `L` with `L L^T = A`, stored row-major with zeros
/// above the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors `a` (only the lower triangle is read). Returns `None` when a
    /// pivot is not strictly positive.
    pub fn factor(mut a: Vec<f64>, n: usize) -> Option<Self> {
        assert_eq!(a.len(), n * n);
        for i in 0..n {
            for j in 0..=i {
                let (head, tail) = a.split_at_mut(i * n);
                let row_i = &tail[..n];
                let row_j: &[f64] = if j == i { row_i } else { &head[j * n..j * n + n] };
                let s = row_i[j] - dot(&row_i[..j], &row_j[..j]);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    tail[j] = s.sqrt();
                } else {
                    tail[j] = s / head[j * n + j];
                }
            }
            for v in &mut a[i * n + i + 1..(i + 1) * n] {
                *v = 0.0;
            }
        }
        Some(Cholesky { n, l: a })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.l[i * self.n..i * self.n + i + 1]
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.l[i * self.n + i]
    }

    /// `log |A| = 2 * sum(log L_ii)`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.diag(i).ln()).sum::<f64>()
    }

    /// Solves `L x = b` in place.
    pub fn forward(&self, b: &mut [f64]) {
        for i in 0..self.n {
            let row = self.row(i);
            b[i] = (b[i] - dot(&row[..i], &b[..i])) / row[i];
        }
    }

    /// Solves `L X = B` in place for `M` right-hand sides; `b[j][c]` is
    /// row `j` of column `c`.
    pub fn forward_multi<const M: usize>(&self, b: &mut [[f64; M]]) {
        assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let row = self.row(i);
            let (done, rest) = b.split_at_mut(i);
            let mut acc = rest[0];
            for (bj, &lij) in done.iter().zip(&row[..i]) {
                for c in 0..M {
                    acc[c] -= lij * bj[c];
                }
            }
            let d = row[i];
            rest[0] = acc.map(|a| a / d);
        }
    }

    /// Solves `L^T x = b` in place.
    pub fn backward(&self, b: &mut [f64]) {
        for i in (0..self.n).rev() {
            b[i] /= self.diag(i);
            let xi = b[i];
            // Column i of L^T above the diagonal is row i of L.
            let row = self.row(i);
            for (bj, lij) in b[..i].iter_mut().zip(&row[..i]) {
                *bj -= lij * xi;
            }
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    /// Lower triangle of `A^-1`, row-major, zeros above the diagonal.
    pub fn inverse_lower(&self) -> Vec<f64> {
        let n = self.n;
        // Rows of L^-1 by forward elimination on the identity.
        let mut linv = vec![0.0; n * n];
        for i in 0..n {
            let (done, rest) = linv.split_at_mut(i * n);
            let row_i = &mut rest[..n];
            row_i[i] = 1.0;
            let li = self.row(i);
            for k in 0..i {
                let c = -li[k];
                if c != 0.0 {
                    axpy(c, &done[k * n..k * n + k + 1], &mut row_i[..=k]);
                }
            }
            let d = li[i];
            for v in &mut row_i[..=i] {
                *v /= d;
            }
        }
        // A^-1 = L^-T L^-1: (A^-1)_ab = sum_k Linv_ka Linv_kb.
        let mut inv = vec![0.0; n * n];
        for k in 0..n {
            let row_k = &linv[k * n..k * n + k + 1];
            for a in 0..=k {
                let c = row_k[a];
                if c != 0.0 {
                    axpy(c, &row_k[..=a], &mut inv[a * n..a * n + a + 1]);
                }
            }
        }
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> Vec<f64> {
        // B B^T + n I for a fixed pseudo-random B.
        let b: Vec<f64> = (0..n * n).map(|i| ((i * 7919 % 97) as f64 / 97.0) - 0.5).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum::<f64>();
            }
            a[i * n + i] += n as f64;
        }
        a
    }

    #[test]
    fn factor_reconstructs() {
        let n = 7;
        let a = spd(n);
        let c = Cholesky::factor(a.clone(), n).unwrap();
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&c.row(i)[..=j], &c.row(j)[..=j]);
                assert!((v - a[i * n + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn solve_and_inverse() {
        let n = 9;
        let a = spd(n);
        let c = Cholesky::factor(a.clone(), n).unwrap();
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
        let x = c.solve(&b);
        for i in 0..n {
            let ax: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
            assert!((ax - b[i]).abs() < 1e-12);
        }
        let inv = c.inverse_lower();
        for i in 0..n {
            for j in 0..n {
                // inv is symmetric; read its lower triangle.
                let s: f64 = (0..n)
                    .map(|k| a[i * n + k] * if j <= k { inv[k * n + j] } else { inv[j * n + k] })
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-12, "({i},{j}) {s}");
            }
        }
    }

    #[test]
    fn forward_multi_matches_columns() {
        let n = 6;
        let c = Cholesky::factor(spd(n), n).unwrap();
        let cols: Vec<Vec<f64>> = (0..3).map(|k| (0..n).map(|i| (i * (k + 2)) as f64 - 2.5).collect()).collect();
        let mut b: Vec<[f64; 3]> = (0..n).map(|i| [cols[0][i], cols[1][i], cols[2][i]]).collect();
        c.forward_multi(&mut b);
        for (k, col) in cols.iter().enumerate() {
            let mut x = col.clone();
            c.forward(&mut x);
            for i in 0..n {
                assert!((b[i][k] - x[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_indefinite() {
        assert!(Cholesky::factor(vec![1.0, 2.0, 2.0, 1.0], 2).is_none());
        assert!(Cholesky::factor(vec![0.0], 1).is_none());
    }

    #[test]
    fn log_det_of_diagonal() {
        let c = Cholesky::factor(vec![2.0, 0.0, 0.0, 8.0], 2).unwrap();
        assert!((c.log_det() - 16f64.ln()).abs() < 1e-14);
    }
}
