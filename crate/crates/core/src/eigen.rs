//! Generalised symmetric eigenproblems `A x = lambda M x`, cluster
//! separation and principal angles between subspaces.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Triangulation;
use crate::space::BrokenFunction;
use crate::sparse::{SparseCholesky, SymSparseMatrix};

/// Largest problem handed to the dense solver under [`EigenMethod::Auto`].
pub const DENSE_LIMIT: usize = 800;

/// Scaled residual accepted for a returned eigenpair.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    #[default]
    Auto,
    /// Cholesky reduction and a dense symmetric eigensolver.
    Dense,
    /// Shift-invert block subspace iteration on a sparse Cholesky factor.
    Subspace,
}

/// The eigenpairs with 0-based indices `first..first + len` of a pencil.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSolution {
    pub first: usize,
    pub eigenvalues: Vec<f64>,
    /// M-orthonormal coefficient vectors.
    pub vectors: Vec<Vec<f64>>,
    /// `||A x - lambda M x|| / ((||A||_1 + lambda ||M||_1) ||x||)`.
    pub residuals: Vec<f64>,
    /// `max |V^T M V - I|`.
    pub b_orthonormality: f64,
}

impl ClusterSolution {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `[A, B]`, the smallest and largest eigenvalue.
    pub fn interval(&self) -> (f64, f64) {
        (self.eigenvalues[0], *self.eigenvalues.last().unwrap())
    }

    /// The sub-cluster `first..first + len` (0-based, absolute indices).
    pub fn window(&self, first: usize, len: usize) -> Result<ClusterSolution> {
        if first < self.first || first + len > self.first + self.len() || len == 0 {
            return Err(Error::Dimension(format!(
                "window {first}..{} outside the computed range {}..{}",
                first + len,
                self.first,
                self.first + self.len()
            )));
        }
        let r = first - self.first..first - self.first + len;
        Ok(ClusterSolution {
            first,
            eigenvalues: self.eigenvalues[r.clone()].to_vec(),
            vectors: self.vectors[r.clone()].to_vec(),
            residuals: self.residuals[r].to_vec(),
            b_orthonormality: self.b_orthonormality,
        })
    }

    /// CSV with columns `index,eigenvalue,residual,lower_bound` (1-based index).
    pub fn write_spectrum_csv(&self, mut w: impl Write, h_max: f64, c: f64) -> Result<()> {
        writeln!(w, "index,eigenvalue,residual,lower_bound")?;
        for (k, (&l, &r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            writeln!(w, "{},{:?},{:?},{:?}", self.first + k + 1, l, r, lower_bound(l, h_max, c))?;
        }
        Ok(())
    }
}

fn normalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn scaled_residual(a: &SymSparseMatrix, m: &SymSparseMatrix, norms: (f64, f64), lambda: f64, x: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let mx = m.matvec(x);
    let r: f64 = ax.iter().zip(&mx).map(|(p, q)| (p - lambda * q).powi(2)).sum::<f64>().sqrt();
    let nx = dot(x, x).sqrt();
    let scale = (norms.0 + lambda.abs() * norms.1) * nx;
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

/// Eigenpairs of the dense pencil `(A, M)` in ascending order.
pub fn dense_gevp(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if a.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension("pencil matrices must be square of equal size".into()));
    }
    let chol = m.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite("dense Cholesky of M failed".into()))?;
    let l = chol.l();
    // C = L^-1 A L^-T
    let la = l.solve_lower_triangular(a).ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&la.transpose())
        .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = DMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    let x = l.transpose().solve_upper_triangular(&y).ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    Ok((values, x))
}

/// The `count` smallest eigenpairs of `A x = lambda M x`.
pub fn solve_gevp(a: &SymSparseMatrix, m: &SymSparseMatrix, count: usize, method: EigenMethod) -> Result<ClusterSolution> {
    let n = a.dim();
    if m.dim() != n {
        return Err(Error::Dimension(format!("A is {n}x{n} but M is {0}x{0}", m.dim())));
    }
    if count == 0 || count > n {
        return Err(Error::Dimension(format!("requested {count} eigenpairs of a pencil of size {n}")));
    }
    let block = (2 * count).max(count + 8);
    let dense = match method {
        EigenMethod::Dense => true,
        EigenMethod::Subspace => block >= n,
        EigenMethod::Auto => n <= DENSE_LIMIT || block >= n / 2,
    };
    let (values, mut vectors) = if dense { dense_path(a, m, count)? } else { subspace_path(a, m, count, block)? };
    vectors.iter_mut().for_each(|v| normalize_sign(v));
    let norms = (a.norm1(), m.norm1());
    let residuals: Vec<f64> = values.iter().zip(&vectors).map(|(&l, x)| scaled_residual(a, m, norms, l, x)).collect();
    if let Some((k, r)) = residuals.iter().enumerate().find(|(_, r)| !(**r <= RESIDUAL_TOL)) {
        return Err(Error::NoConvergence(format!("eigenpair {} has scaled residual {r:e}", k + 1)));
    }
    let mut ortho: f64 = 0.0;
    let mv: Vec<Vec<f64>> = vectors.iter().map(|x| m.matvec(x)).collect();
    for i in 0..count {
        for j in 0..count {
            let target = if i == j { 1.0 } else { 0.0 };
            ortho = ortho.max((dot(&vectors[i], &mv[j]) - target).abs());
        }
    }
    Ok(ClusterSolution { first: 0, eigenvalues: values, vectors, residuals, b_orthonormality: ortho })
}

fn dense_path(a: &SymSparseMatrix, m: &SymSparseMatrix, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (values, x) = dense_gevp(&a.to_dense(), &m.to_dense())?;
    Ok((values[..count].to_vec(), (0..count).map(|k| x.column(k).iter().copied().collect()).collect()))
}

fn to_columns(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..x.ncols()).map(|k| x.column(k).iter().copied().collect()).collect()
}

/// Rayleigh-Ritz on the span of `y`: M-orthonormal Ritz vectors, ascending.
fn rayleigh_ritz(a: &SymSparseMatrix, m: &SymSparseMatrix, y: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let p = y.ncols();
    let cols = to_columns(y);
    let ay: Vec<Vec<f64>> = cols.iter().map(|c| a.matvec(c)).collect();
    let my: Vec<Vec<f64>> = cols.iter().map(|c| m.matvec(c)).collect();
    let ar = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&cols[i], &ay[j]) + dot(&cols[j], &ay[i])));
    let mr = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&cols[i], &my[j]) + dot(&cols[j], &my[i])));
    let (values, q) = dense_gevp(&ar, &mr)?;
    Ok((values, y * q))
}

fn subspace_path(a: &SymSparseMatrix, m: &SymSparseMatrix, count: usize, block: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.dim();
    let chol = match SparseCholesky::factor(a) {
        Ok(c) => c,
        // singular stiffness (affine kernel): shift by a small positive multiple of M
        Err(Error::NotPositiveDefinite(_)) => {
            let tau = 1e-6 * a.norm1() / m.norm1();
            SparseCholesky::factor(&a.add_scaled(tau, m))?
        }
        Err(e) => return Err(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = DMatrix::from_fn(n, block, |_, _| rng.gen_range(-1.0..1.0));
    let norms = (a.norm1(), m.norm1());
    let mut last = (Vec::new(), Vec::new());
    let mut previous_worst = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..1000 {
        let mx = DMatrix::from_columns(
            &to_columns(&x).iter().map(|c| DVector::from_vec(m.matvec(c))).collect::<Vec<_>>(),
        );
        let y = chol.solve_columns(&mx);
        let (values, ritz) = rayleigh_ritz(a, m, &y)?;
        x = ritz;
        let vecs: Vec<Vec<f64>> = (0..count).map(|k| x.column(k).iter().copied().collect()).collect();
        let worst = (0..count).map(|k| scaled_residual(a, m, norms, values[k], &vecs[k])).fold(0.0, f64::max);
        last = (values[..count].to_vec(), vecs);
        if worst <= 1e-12 {
            break;
        }
        // stop once rounding dominates and the accepted tolerance is met
        if worst <= RESIDUAL_TOL && worst > 0.5 * previous_worst {
            stalled += 1;
            if stalled >= 3 {
                break;
            }
        }
        previous_worst = worst;
    }
    Ok(last)
}

/// Separation diagnostics for a cluster inside a computed spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// `max lambda_k / |lambda_j - lambda_k|`, `k` in the cluster and `j`
    /// over the computed eigenvalues outside it.
    pub m_j: f64,
    /// Smallest distance between the cluster and a computed exterior eigenvalue.
    pub gap: f64,
    /// No eigenvalue above the cluster was computed, so `m_j` only sees the
    /// lower part of the spectrum.
    pub truncated: bool,
}

/// Relative distance below which two eigenvalues count as one multiple eigenvalue.
pub const MULTIPLICITY_TOL: f64 = 1e-8;

/// `evals` is the computed lower spectrum; the cluster is `first..first + len` (0-based).
pub fn separation(evals: &[f64], first: usize, len: usize) -> Result<SeparationReport> {
    if len == 0 || first + len > evals.len() {
        return Err(Error::Dimension(format!("cluster {first}..{} outside {} eigenvalues", first + len, evals.len())));
    }
    let mut m_j: f64 = 0.0;
    let mut gap = f64::INFINITY;
    for (j, &lj) in evals.iter().enumerate() {
        if (first..first + len).contains(&j) {
            continue;
        }
        for k in first..first + len {
            let lk = evals[k];
            let d = (lj - lk).abs();
            if d <= MULTIPLICITY_TOL * lk.abs().max(lj.abs()) {
                return Err(Error::ClusterSplit { inside: k + 1, outside: j + 1 });
            }
            m_j = m_j.max(lk / d);
            gap = gap.min(d);
        }
    }
    Ok(SeparationReport { m_j, gap, truncated: first + len == evals.len() })
}

/// `lambda / (1 + C h^4 lambda)`, a lower eigenvalue bound valid under the configured `C`.
pub fn lower_bound(lambda: f64, h_max: f64, c: f64) -> f64 {
    lambda / (1.0 + c * h_max.powi(4) * lambda)
}

fn orthonormal_basis(vectors: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let dim = vectors.first().map_or(0, |v| v.len());
    if vectors.is_empty() || vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::Dimension("subspace bases must be non-empty with equal lengths".into()));
    }
    let x = DMatrix::from_fn(dim, vectors.len(), |i, k| vectors[k][i]);
    let gram = x.transpose() * &x;
    let ev = gram.symmetric_eigenvalues();
    let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond <= 1e12) {
        return Err(Error::RankDeficient(cond));
    }
    Ok(x.qr().q())
}

/// `sin` of the largest principal angle from `span X` to `span Y`, with
/// vectors given in coordinates of an orthonormal basis (Euclidean product).
pub fn principal_angle(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<f64> {
    let qx = orthonormal_basis(x)?;
    let qy = orthonormal_basis(y)?;
    if qx.nrows() != qy.nrows() {
        return Err(Error::Dimension("subspaces live in different spaces".into()));
    }
    let r = &qx - &qy * (qy.transpose() * &qx);
    let s = r.singular_values();
    Ok(s.iter().fold(0.0f64, |a, &b| a.max(b)))
}

/// Principal angle in the broken energy product of functions on `mesh`.
pub fn principal_angle_nc(x: &[BrokenFunction], y: &[BrokenFunction], mesh: &Triangulation) -> Result<f64> {
    let ex: Vec<Vec<f64>> = x.iter().map(|f| f.energy_embedding(mesh)).collect();
    let ey: Vec<Vec<f64>> = y.iter().map(|f| f.energy_embedding(mesh)).collect();
    principal_angle(&ex, &ey)
}
