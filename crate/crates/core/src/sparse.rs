//! Small sparse matrix kit: CSR storage and an envelope (skyline) Cholesky
//! factorization under reverse Cuthill-McKee ordering.
//!
//! Fairing systems are a few hundred to a few thousand unknowns with a narrow
//! band after reordering, which is the sweet spot for envelope storage.

use crate::error::{Error, Result};
use std::collections::VecDeque;

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for &(i, j, v) in triplets {
            assert!(i < rows && j < cols, "triplet ({i}, {j}) out of bounds");
            per_row[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for mut row in per_row {
            row.sort_by_key(|e| e.0);
            for (j, v) in row {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                t.push((j, i, v));
            }
        }
        CsrMatrix::from_triplets(self.cols, self.rows, &t)
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.cols, other.rows);
        let mut acc = vec![0.0; other.cols];
        let mut mark = vec![usize::MAX; other.cols];
        let mut touched = Vec::new();
        let mut t = Vec::new();
        for i in 0..self.rows {
            touched.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &touched {
                t.push((i, j, acc[j]));
            }
        }
        CsrMatrix::from_triplets(self.rows, other.cols, &t)
    }

    /// Submatrix with the given rows and columns, renumbered in list order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.cols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut t = Vec::new();
        for (ni, &i) in rows.iter().enumerate() {
            for (j, v) in self.row(i) {
                if col_map[j] != usize::MAX {
                    t.push((ni, col_map[j], v));
                }
            }
        }
        CsrMatrix::from_triplets(rows.len(), cols.len(), &t)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

/// Reverse Cuthill-McKee ordering of the symmetric pattern of `a`;
/// `order[new] = old`.
pub fn rcm_order(a: &CsrMatrix) -> Vec<usize> {
    let n = a.rows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = peripheral(&adj, seed);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Pseudo-peripheral vertex of the component containing `seed`.
fn peripheral(adj: &[Vec<usize>], seed: usize) -> usize {
    let mut start = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let (far, depth) = bfs_far(adj, start);
        if depth <= ecc {
            break;
        }
        ecc = depth;
        start = far;
    }
    start
}

fn bfs_far(adj: &[Vec<usize>], start: usize) -> (usize, usize) {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut far = (start, 0);
    while let Some(v) = queue.pop_front() {
        let d = dist[v];
        if d > far.1 || (d == far.1 && adj[v].len() < adj[far.0].len()) {
            far = (v, d);
        }
        for &w in &adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = d + 1;
                queue.push_back(w);
            }
        }
    }
    far
}

/// Cholesky factor `P A P^T = L L^T` in envelope storage.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    order: Vec<usize>,
    /// First stored column of each row.
    first: Vec<usize>,
    /// Offset of row `i`'s first stored entry in `data`.
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors a symmetric positive definite matrix.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::Solver("matrix is not square".into()));
        }
        let n = a.rows();
        let order = rcm_order(a);
        let mut inv = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inv[old];
            for (oj, _) in a.row(old) {
                let j = inv[oj];
                let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
                first[hi] = first[hi].min(lo);
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + (i - first[i] + 1));
        }
        let mut data = vec![0.0; offset[n]];
        for old in 0..n {
            let i = inv[old];
            for (oj, v) in a.row(old) {
                let j = inv[oj];
                if j <= i {
                    data[offset[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let oi = offset[i];
            for j in fi..i {
                let fj = first[j];
                let oj = offset[j];
                let k0 = fi.max(fj);
                let mut s = data[oi + j - fi];
                for k in k0..j {
                    s -= data[oi + k - fi] * data[oj + k - fj];
                }
                data[oi + j - fi] = s / data[oj + j - fj];
            }
            let mut d = data[oi + i - fi];
            for k in fi..i {
                let l = data[oi + k - fi];
                d -= l * l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Solver(format!(
                    "matrix is not positive definite (pivot {d:e} at row {})",
                    order[i]
                )));
            }
            data[oi + i - fi] = d.sqrt();
        }
        offset.pop();
        Ok(EnvelopeCholesky {
            order,
            first,
            offset,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.order.len()
    }

    /// Stored entries, a measure of fill.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.order.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let (fi, oi) = (self.first[i], self.offset[i]);
            let mut s = y[i];
            for k in fi..i {
                s -= self.data[oi + k - fi] * y[k];
            }
            y[i] = s / self.data[oi + i - fi];
        }
        for i in (0..n).rev() {
            let (fi, oi) = (self.first[i], self.offset[i]);
            y[i] /= self.data[oi + i - fi];
            let xi = y[i];
            for k in fi..i {
                y[k] -= self.data[oi + k - fi] * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.order.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
