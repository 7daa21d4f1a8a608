//! Symmetric sparse matrices stored by their lower triangle, with a sparse
//! Cholesky factorisation and a preconditioned CG fallback.

use std::io::Write;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par, Side};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetric matrix; only entries with `col <= row` are stored (CSR).
#[derive(Debug, Clone, PartialEq)]
pub struct SymSparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymSparseMatrix {
    /// Sums duplicate entries in input order; `(i, j)` and `(j, i)` address the
    /// same stored entry.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = triplets
            .into_iter()
            .map(|(i, j, v)| {
                assert!(i < n && j < n, "entry ({i}, {j}) outside a {n}x{n} matrix");
                if j <= i {
                    (i, j, v)
                } else {
                    (j, i, v)
                }
            })
            .collect();
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SymSparseMatrix { n, row_ptr, cols, vals }
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        Self::from_triplets(n, (0..n).flat_map(|i| (0..=i).filter(move |&j| a[(i, j)] != 0.0).map(move |j| (i, j, a[(i, j)]))))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored (lower-triangle) entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j <= i { (i, j) } else { (j, i) };
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.vals[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    /// Stored entries `(row, col, value)` with `col <= row`.
    pub fn lower_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.vals[k])))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let (j, v) = (self.cols[k], self.vals[k]);
                y[i] += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
        }
    }

    pub fn quad_form(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matvec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for (i, j, v) in self.lower_entries() {
            col[j] += v.abs();
            if i != j {
                col[i] += v.abs();
            }
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.lower_entries() {
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
        a
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &SymSparseMatrix) -> SymSparseMatrix {
        assert_eq!(self.n, other.n);
        SymSparseMatrix::from_triplets(
            self.n,
            self.lower_entries().chain(other.lower_entries().map(|(i, j, v)| (i, j, alpha * v))),
        )
    }

    /// `P^T A P` restricted to the given rows/columns, in order.
    pub fn scale_symmetric(&self, d: &[f64]) -> SymSparseMatrix {
        SymSparseMatrix::from_triplets(self.n, self.lower_entries().map(|(i, j, v)| (i, j, d[i] * v * d[j])))
    }

    /// MatrixMarket `coordinate real symmetric` (lower triangle, 1-based).
    pub fn write_matrix_market(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for (i, j, v) in self.lower_entries() {
            writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
        }
        Ok(())
    }

    pub fn read_matrix_market(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.starts_with('%') && !l.trim().is_empty());
        let bad = || Error::InvalidArgument("malformed MatrixMarket data".into());
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(bad)?
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        if header.len() != 3 || header[0] != header[1] {
            return Err(bad());
        }
        let mut entries = Vec::with_capacity(header[2]);
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let i: usize = parts[0].parse().map_err(|_| bad())?;
            let j: usize = parts[1].parse().map_err(|_| bad())?;
            let v: f64 = parts[2].parse().map_err(|_| bad())?;
            entries.push((i - 1, j - 1, v));
        }
        Ok(SymSparseMatrix::from_triplets(header[0], entries))
    }

    fn to_faer_lower(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> =
            self.lower_entries().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &triplets)
            .map_err(|e| Error::InvalidArgument(format!("sparse matrix construction failed: {e:?}")))
    }
}

/// Sparse `L L^T` factorisation with a fill-reducing ordering.
pub struct SparseCholesky {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
    n: usize,
}

impl SparseCholesky {
    pub fn factor(a: &SymSparseMatrix) -> Result<Self> {
        // sequential kernels keep results bit-identical between runs
        faer::set_global_parallelism(Par::Seq);
        let mat = a.to_faer_lower()?;
        let llt = mat
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::NotPositiveDefinite(format!("sparse Cholesky failed: {e:?}")))?;
        Ok(SparseCholesky { llt, n: a.dim() })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(rhs.as_mut());
        for (i, v) in b.iter_mut().enumerate() {
            *v = rhs[(i, 0)];
        }
    }

    /// Solves for every column of `b`.
    pub fn solve_columns(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(b.nrows(), self.n);
        let mut rhs = Mat::<f64>::from_fn(self.n, b.ncols(), |i, j| b[(i, j)]);
        self.llt.solve_in_place(rhs.as_mut());
        DMatrix::from_fn(self.n, b.ncols(), |i, j| rhs[(i, j)])
    }
}

/// Linear solver selection for symmetric positive definite systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolver {
    #[default]
    Cholesky,
    /// Conjugate gradients with Jacobi preconditioning.
    Cg,
}

pub fn solve_spd(a: &SymSparseMatrix, b: &[f64], solver: LinearSolver) -> Result<Vec<f64>> {
    match solver {
        LinearSolver::Cholesky => {
            let chol = SparseCholesky::factor(a)?;
            let mut x = b.to_vec();
            chol.solve_in_place(&mut x);
            Ok(x)
        }
        LinearSolver::Cg => pcg(a, b, 1e-13, 20 * a.dim() + 100),
    }
}

/// Jacobi-preconditioned conjugate gradients; stops at `||r|| <= tol ||b||`.
pub fn pcg(a: &SymSparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.dim();
    let diag = a.diagonal();
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::NotPositiveDefinite("non-positive diagonal entry".into()));
    }
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if norm_b == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        a.matvec_into(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::NotPositiveDefinite("CG found a direction of non-positive curvature".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= tol * norm_b {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence(format!("CG did not reach tolerance {tol:e} in {max_iter} iterations")))
}
