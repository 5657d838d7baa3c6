use std::io::{self, Write};

use faer::Mat;

/// Accumulating triplet store; duplicates are summed on compression.
#[derive(Debug, Clone)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    /// Adds `v` to entry `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            i < self.nrows && j < self.ncols,
            "entry ({i}, {j}) out of range"
        );
        self.entries.push((i, j, v));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_csr(&self, symmetric: bool) -> SparseMatrix {
        SparseMatrix::from_entries(
            self.nrows,
            self.ncols,
            self.entries.iter().copied(),
            symmetric,
        )
    }
}

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    pub fn from_entries(
        nrows: usize,
        ncols: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
        symmetric: bool,
    ) -> Self {
        let mut entries: Vec<_> = entries.into_iter().collect();
        for &(i, j, _) in &entries {
            assert!(i < nrows && j < ncols, "entry ({i}, {j}) out of range");
        }
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
            symmetric,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_entries(n, n, (0..n).map(|i| (i, i, 1.0)), true)
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self::from_entries(n, n, d.iter().enumerate().map(|(i, &v)| (i, i, v)), true)
    }

    pub fn from_dense(a: &Mat<f64>, symmetric: bool) -> Self {
        let mut e = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    e.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_entries(a.nrows(), a.ncols(), e, symmetric)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Whether the matrix was assembled as symmetric.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|p| vals[p]).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> SparseMatrix {
        SparseMatrix::from_entries(
            self.ncols,
            self.nrows,
            self.iter().map(|(i, j, v)| (j, i, v)),
            self.symmetric,
        )
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    /// `A^T x` without forming the transpose.
    pub fn mul_vec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                y[j] += a * x[i];
            }
        }
        y
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut entries = Vec::new();
        let mut touched = Vec::new();
        for i in 0..self.nrows {
            let (ac, av) = self.row(i);
            for (&k, &a) in ac.iter().zip(av) {
                let (bc, bv) = other.row(k);
                for (&j, &b) in bc.iter().zip(bv) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &touched {
                entries.push((i, j, acc[j]));
            }
            touched.clear();
        }
        SparseMatrix::from_entries(self.nrows, other.ncols, entries, false)
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        SparseMatrix::from_entries(
            self.nrows,
            self.ncols,
            self.iter()
                .chain(other.iter().map(|(i, j, v)| (i, j, s * v))),
            self.symmetric && other.symmetric,
        )
    }

    /// Sub-matrix on the given rows and columns (in the given order).
    pub fn restrict(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut col_pos = vec![usize::MAX; self.ncols];
        for (p, &j) in cols.iter().enumerate() {
            col_pos[j] = p;
        }
        let mut entries = Vec::new();
        for (r, &i) in rows.iter().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if col_pos[j] != usize::MAX {
                    entries.push((r, col_pos[j], x));
                }
            }
        }
        let symmetric = self.symmetric && rows == cols;
        SparseMatrix::from_entries(rows.len(), cols.len(), entries, symmetric)
    }

    /// Symmetric permutation `P A P^T` with `new[i] = old[perm[i]]`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> SparseMatrix {
        self.restrict(perm, perm)
    }

    /// Block matrix from a grid of optional blocks; `None` blocks are zero.
    pub fn block(
        blocks: &[Vec<Option<&SparseMatrix>>],
        row_sizes: &[usize],
        col_sizes: &[usize],
    ) -> SparseMatrix {
        let row_off: Vec<usize> = offsets(row_sizes);
        let col_off: Vec<usize> = offsets(col_sizes);
        let mut entries = Vec::new();
        for (bi, brow) in blocks.iter().enumerate() {
            for (bj, b) in brow.iter().enumerate() {
                if let Some(b) = b {
                    assert_eq!((b.nrows, b.ncols), (row_sizes[bi], col_sizes[bj]));
                    entries.extend(
                        b.iter()
                            .map(|(i, j, v)| (i + row_off[bi], j + col_off[bj], v)),
                    );
                }
            }
        }
        SparseMatrix::from_entries(
            *row_off.last().unwrap(),
            *col_off.last().unwrap(),
            entries,
            false,
        )
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut a = Mat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            a[(i, j)] += v;
        }
        a
    }

    /// Coordinate text dump: one `row col value` line per stored entry
    /// (zero-based indices, 17 significant digits), preceded by a size line.
    pub fn write_coordinate(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.iter() {
            writeln!(w, "{i} {j} {v:.16e}")?;
        }
        Ok(())
    }
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut off = vec![0];
    for s in sizes {
        off.push(off.last().unwrap() + s);
    }
    off
}

pub fn restrict_vector(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
