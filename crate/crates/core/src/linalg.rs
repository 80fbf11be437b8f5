//! Householder QR with column-norm pivoting (Businger-Golub).
//!
//! Used for every least-squares solve in the crate. Pivoting on the largest
//! remaining column norm makes `|R_kk|` non-increasing, so the numerical rank
//! can be read off the diagonal against a relative tolerance.

use nalgebra::DMatrix;

/// Relative pivot tolerance for declaring a column dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// R on and above the diagonal, Householder vectors (implicit unit head)
    /// below it.
    packed: DMatrix<f64>,
    tau: Vec<f64>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    pub fn new(mut a: DMatrix<f64>) -> Self {
        let (n, q) = a.shape();
        assert!(n >= q, "pivoted QR needs at least as many rows as columns");
        let mut perm: Vec<usize> = (0..q).collect();
        let mut tau = vec![0.0; q];

        for k in 0..q {
            let mut best = k;
            let mut best_norm = -1.0;
            for j in k..q {
                let col = a.column(j);
                let norm: f64 = col.rows_range(k..).iter().map(|v| v * v).sum();
                if norm > best_norm {
                    best_norm = norm;
                    best = j;
                }
            }
            if best != k {
                a.swap_columns(k, best);
                perm.swap(k, best);
            }

            let alpha = best_norm.sqrt();
            if alpha == 0.0 {
                continue;
            }
            let x0 = a[(k, k)];
            let beta = if x0 >= 0.0 { -alpha } else { alpha };
            let scale = 1.0 / (x0 - beta);
            for i in k + 1..n {
                a[(i, k)] *= scale;
            }
            tau[k] = (beta - x0) / beta;
            a[(k, k)] = beta;

            for j in k + 1..q {
                let mut w = a[(k, j)];
                for i in k + 1..n {
                    w += a[(i, k)] * a[(i, j)];
                }
                w *= tau[k];
                a[(k, j)] -= w;
                for i in k + 1..n {
                    let v = a[(i, k)];
                    a[(i, j)] -= w * v;
                }
            }
        }

        let largest = if q > 0 { a[(0, 0)].abs() } else { 0.0 };
        let rank = (0..q)
            .take_while(|&k| largest > 0.0 && a[(k, k)].abs() > RANK_TOLERANCE * largest)
            .count();
        Self {
            packed: a,
            tau,
            perm,
            rank,
        }
    }

    pub fn ncols(&self) -> usize {
        self.perm.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.ncols()
    }

    /// Original column indices found dependent on the others, ascending.
    pub fn dependent_columns(&self) -> Vec<usize> {
        let mut cols = self.perm[self.rank..].to_vec();
        cols.sort_unstable();
        cols
    }

    /// Overwrites `y` with `Q^T y`.
    pub fn apply_qt(&self, y: &mut [f64]) {
        let n = self.packed.nrows();
        for k in 0..self.ncols() {
            if self.tau[k] == 0.0 {
                continue;
            }
            let v = self.packed.column(k);
            let mut w = y[k];
            for (yi, vi) in y[k + 1..n].iter().zip(v.iter().skip(k + 1)) {
                w += vi * yi;
            }
            w *= self.tau[k];
            y[k] -= w;
            for (yi, vi) in y[k + 1..n].iter_mut().zip(v.iter().skip(k + 1)) {
                *yi -= w * vi;
            }
        }
    }

    /// Thin `n x q` orthonormal factor. Its columns span the design's
    /// column space in pivoted order.
    pub fn thin_q(&self) -> DMatrix<f64> {
        let (n, q) = self.packed.shape();
        let mut out = DMatrix::zeros(n, q);
        for j in 0..q {
            out[(j, j)] = 1.0;
        }
        for k in (0..q).rev() {
            if self.tau[k] == 0.0 {
                continue;
            }
            for j in 0..q {
                let mut w = out[(k, j)];
                for i in k + 1..n {
                    w += self.packed[(i, k)] * out[(i, j)];
                }
                w *= self.tau[k];
                out[(k, j)] -= w;
                for i in k + 1..n {
                    let v = self.packed[(i, k)];
                    out[(i, j)] -= w * v;
                }
            }
        }
        out
    }

    /// Least-squares solution in original column order. Full rank required.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        debug_assert!(self.is_full_rank());
        let q = self.ncols();
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        let mut w = vec![0.0; q];
        for i in (0..q).rev() {
            let mut s = qty[i];
            for (j, wj) in w.iter().enumerate().skip(i + 1) {
                s -= self.packed[(i, j)] * wj;
            }
            w[i] = s / self.packed[(i, i)];
        }
        let mut beta = vec![0.0; q];
        for (pos, &col) in self.perm.iter().enumerate() {
            beta[col] = w[pos];
        }
        beta
    }

    /// `(A^T A)^{-1}` in original column order. Full rank required.
    pub fn unscaled_covariance(&self) -> DMatrix<f64> {
        let q = self.ncols();
        // R^{-1}, upper triangular, by back substitution per column.
        let mut rinv = DMatrix::zeros(q, q);
        for c in 0..q {
            rinv[(c, c)] = 1.0 / self.packed[(c, c)];
            for i in (0..c).rev() {
                let mut s = 0.0;
                for j in i + 1..=c {
                    s += self.packed[(i, j)] * rinv[(j, c)];
                }
                rinv[(i, c)] = -s / self.packed[(i, i)];
            }
        }
        let inner = &rinv * rinv.transpose();
        let mut out = DMatrix::zeros(q, q);
        for a in 0..q {
            for b in 0..q {
                out[(self.perm[a], self.perm[b])] = inner[(a, b)];
            }
        }
        // Symmetrize against rounding.
        for a in 0..q {
            for b in a + 1..q {
                let m = 0.5 * (out[(a, b)] + out[(b, a)]);
                out[(a, b)] = m;
                out[(b, a)] = m;
            }
        }
        out
    }
}
