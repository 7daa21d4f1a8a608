//! Discrete Helmholtz decomposition of piecewise constant symmetric tensor
//! fields into broken Hessians of Morley functions and symmetric Curls of
//! constrained piecewise affine vector fields.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryPart, Point, Triangulation};
use crate::poly::SymMat2;
use crate::space::MorleySpace;

/// Relative threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// One symmetric matrix per triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField(pub Vec<SymMat2>);

impl SymTensorField {
    pub fn random(mesh: &Triangulation, rng: &mut impl Rng) -> Self {
        SymTensorField(
            (0..mesh.num_triangles())
                .map(|_| SymMat2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
    }

    /// Coordinates in which the Euclidean product is the `L2` product.
    pub fn embed(&self, mesh: &Triangulation) -> DVector<f64> {
        let mut v = DVector::zeros(3 * self.0.len());
        for (t, s) in self.0.iter().enumerate() {
            let w = mesh.area(t).sqrt();
            for (k, x) in s.embed().iter().enumerate() {
                v[3 * t + k] = w * x;
            }
        }
        v
    }

    pub fn from_embedding(mesh: &Triangulation, v: &DVector<f64>) -> Self {
        SymTensorField(
            (0..mesh.num_triangles())
                .map(|t| {
                    let w = mesh.area(t).sqrt();
                    SymMat2::new(v[3 * t] / w, v[3 * t + 1] / (w * std::f64::consts::SQRT_2), v[3 * t + 2] / w)
                })
                .collect(),
        )
    }

    pub fn l2_norm(&self, mesh: &Triangulation) -> f64 {
        self.0.iter().enumerate().map(|(t, s)| mesh.area(t) * s.norm_sq()).sum::<f64>().sqrt()
    }
}

/// Gradients of the barycentric coordinates of triangle `t`.
fn barycentric_gradients(mesh: &Triangulation, t: usize) -> [[f64; 2]; 3] {
    let p = mesh.triangle_points(t);
    let two_a = 2.0 * mesh.area(t);
    std::array::from_fn(|i| {
        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        [(a[1] - b[1]) / two_a, (b[0] - a[0]) / two_a]
    })
}

/// Continuous piecewise affine vector fields `v` with nodal coefficients
/// `(v_x(z), v_y(z))` stored at `2z, 2z + 1`, restricted by the mean,
/// mean-divergence and boundary conditions that define the space.
#[derive(Debug, Clone)]
pub struct XSpace {
    /// Orthonormal basis, one column per basis field (`2 #N` rows).
    pub basis: DMatrix<f64>,
    pub constraints: DMatrix<f64>,
    /// `2 #N - 3 - #F(Gamma_S u Gamma_F) - #N(Gamma_F)`.
    pub expected_dim: usize,
    pub constraint_rank: usize,
}

impl XSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `max |C v|` over the basis fields.
    pub fn constraint_residual(&self) -> f64 {
        (&self.constraints * &self.basis).amax()
    }
}

/// The constraint rows on `2 #N` nodal coefficients.
pub fn xspace_constraints(mesh: &Triangulation) -> DMatrix<f64> {
    let nn = mesh.num_vertices();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut mean = [vec![0.0; 2 * nn], vec![0.0; 2 * nn]];
    let mut div = vec![0.0; 2 * nn];
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangle(t);
        let g = barycentric_gradients(mesh, t);
        let a = mesh.area(t);
        for (k, &z) in tri.iter().enumerate() {
            mean[0][2 * z] += a / 3.0;
            mean[1][2 * z + 1] += a / 3.0;
            div[2 * z] += a * g[k][0];
            div[2 * z + 1] += a * g[k][1];
        }
    }
    let [mx, my] = mean;
    rows.extend([mx, my, div]);
    for e in mesh.edges_on(&[BoundaryPart::SimplySupported, BoundaryPart::Free]) {
        let edge = mesh.edge(e);
        let [z1, z2] = edge.vertices;
        let mut r = vec![0.0; 2 * nn];
        for d in 0..2 {
            r[2 * z2 + d] += edge.normal[d];
            r[2 * z1 + d] -= edge.normal[d];
        }
        rows.push(r);
    }
    for (_, e1, e2) in mesh.free_vertex_pairs() {
        // difference quotients along the counterclockwise boundary tangent
        let mut r = vec![0.0; 2 * nn];
        for (e, sign) in [(e1, 1.0), (e2, -1.0)] {
            let edge = mesh.edge(e);
            let tau = edge.tangent();
            let [a, b] = edge.vertices;
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            let (s, t) = if (pb[0] - pa[0]) * tau[0] + (pb[1] - pa[1]) * tau[1] > 0.0 { (a, b) } else { (b, a) };
            for d in 0..2 {
                r[2 * t + d] += sign * tau[d] / edge.length;
                r[2 * s + d] -= sign * tau[d] / edge.length;
            }
        }
        rows.push(r);
    }
    DMatrix::from_fn(rows.len(), 2 * nn, |i, j| rows[i][j])
}

pub fn build_xspace(mesh: &Triangulation) -> Result<XSpace> {
    if mesh.num_triangles() == 0 {
        return Err(Error::InvalidMesh("empty mesh".into()));
    }
    let c = xspace_constraints(mesh);
    let n = c.ncols();
    let n_sf = mesh.edges_on(&[BoundaryPart::SimplySupported, BoundaryPart::Free]).count();
    let n_free_vertices = mesh.free_vertex_pairs().len();
    let expected_dim = (n + 0).saturating_sub(3 + n_sf + n_free_vertices);
    // square system with the same null space
    let mut padded = DMatrix::zeros(n.max(c.nrows()), n);
    padded.rows_mut(0, c.nrows()).copy_from(&c);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let smax = svd.singular_values.amax();
    let null: Vec<usize> = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] <= RANK_TOL * smax).collect();
    let mut basis = DMatrix::zeros(n, null.len());
    for (col, &k) in null.iter().enumerate() {
        basis.set_column(col, &v_t.row(k).transpose());
    }
    let constraint_rank = n - null.len();
    Ok(XSpace { basis, constraints: c, expected_dim, constraint_rank })
}

/// `sym Curl` of the nodal vector field with coefficients `c`.
pub fn sym_curl(mesh: &Triangulation, c: &[f64]) -> SymTensorField {
    SymTensorField(
        (0..mesh.num_triangles())
            .map(|t| {
                let (g1, g2) = field_gradients(mesh, t, c);
                SymMat2::new(-g1[1], 0.5 * (g1[0] - g2[1]), g2[0])
            })
            .collect(),
    )
}

/// Gradients of the two components on triangle `t`.
fn field_gradients(mesh: &Triangulation, t: usize, c: &[f64]) -> ([f64; 2], [f64; 2]) {
    let g = barycentric_gradients(mesh, t);
    let (mut g1, mut g2) = ([0.0; 2], [0.0; 2]);
    for (k, &z) in mesh.triangle(t).iter().enumerate() {
        for d in 0..2 {
            g1[d] += c[2 * z] * g[k][d];
            g2[d] += c[2 * z + 1] * g[k][d];
        }
    }
    (g1, g2)
}

/// `|| Curl psi ||_{L2}` (full, not symmetrised).
pub fn curl_norm(mesh: &Triangulation, c: &[f64]) -> f64 {
    (0..mesh.num_triangles())
        .map(|t| {
            let (g1, g2) = field_gradients(mesh, t, c);
            mesh.area(t) * (g1[0] * g1[0] + g1[1] * g1[1] + g2[0] * g2[0] + g2[1] * g2[1])
        })
        .sum::<f64>()
        .sqrt()
}

/// Value of the nodal field at a vertex.
pub fn field_at(c: &[f64], z: usize) -> Point {
    [c[2 * z], c[2 * z + 1]]
}

/// Embedded broken Hessians of the Morley basis, one column per unknown.
fn hessian_columns(space: &MorleySpace) -> DMatrix<f64> {
    let mesh = space.mesh();
    let mut b = DMatrix::zeros(3 * mesh.num_triangles(), space.ndof());
    for t in 0..mesh.num_triangles() {
        let w = mesh.area(t).sqrt();
        for (phi, g) in space.local_basis(t).iter().zip(space.element_dofs(t)) {
            if let Some(g) = g {
                for (k, x) in phi.hessian().embed().iter().enumerate() {
                    b[(3 * t + k, g)] += w * x;
                }
            }
        }
    }
    b
}

fn curl_columns(mesh: &Triangulation, x: &XSpace) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(3 * mesh.num_triangles(), x.dim());
    for k in 0..x.dim() {
        let c: Vec<f64> = x.basis.column(k).iter().copied().collect();
        b.set_column(k, &sym_curl(mesh, &c).embed(mesh));
    }
    b
}

/// Numerical rank by column-pivoted QR.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    let r = m.clone().col_piv_qr().r();
    let d: Vec<f64> = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].abs()).collect();
    let top = d.iter().fold(0.0f64, |a, &b| a.max(b));
    d.iter().filter(|&&v| v > RANK_TOL * top).count()
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Morley coefficients of `phi`.
    pub phi: Vec<f64>,
    /// Nodal coefficients of `psi`.
    pub psi: Vec<f64>,
    /// `||sigma - D^2 phi - sym Curl psi|| / ||sigma||`.
    pub residual: f64,
    /// `|(D^2 phi, sym Curl psi)| / ||sigma||^2`.
    pub cross: f64,
    /// `(||D^2 phi|| + ||Curl psi||) / ||sigma||`.
    pub stability: f64,
    pub hessian_norm: f64,
    pub sym_curl_norm: f64,
}

/// Least-squares splitting `sigma = D^2_NC phi + sym Curl psi`.
pub fn decompose(space: &MorleySpace, x: &XSpace, sigma: &SymTensorField) -> Result<Decomposition> {
    let mesh = space.mesh();
    if sigma.0.len() != mesh.num_triangles() {
        return Err(Error::Dimension("tensor field does not live on the mesh".into()));
    }
    let bh = hessian_columns(space);
    let bc = curl_columns(mesh, x);
    let (nh, nc) = (bh.ncols(), bc.ncols());
    if nh + nc != 3 * mesh.num_triangles() {
        return Err(Error::AuditFailure(format!(
            "3 #T = {} but dim V = {nh} and dim X = {nc}",
            3 * mesh.num_triangles()
        )));
    }
    let mut b = DMatrix::zeros(3 * mesh.num_triangles(), nh + nc);
    b.columns_mut(0, nh).copy_from(&bh);
    b.columns_mut(nh, nc).copy_from(&bc);
    let s = sigma.embed(mesh);
    let coef = b
        .clone()
        .svd(true, true)
        .solve(&s, RANK_TOL)
        .map_err(|e| Error::AuditFailure(format!("least-squares solve failed: {e}")))?;
    let a_h = coef.rows(0, nh).into_owned();
    let a_c = coef.rows(nh, nc).into_owned();
    let ph = &bh * &a_h;
    let pc = &bc * &a_c;
    let ns = s.norm().max(f64::MIN_POSITIVE);
    let residual = (&s - &ph - &pc).norm() / ns;
    let cross = ph.dot(&pc).abs() / (ns * ns);
    let psi = &x.basis * &a_c;
    let psi: Vec<f64> = psi.iter().copied().collect();
    let stability = (ph.norm() + curl_norm(mesh, &psi)) / ns;
    Ok(Decomposition {
        phi: a_h.iter().copied().collect(),
        psi,
        residual,
        cross,
        stability,
        hessian_norm: ph.norm(),
        sym_curl_norm: pc.norm(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditDims {
    pub vertices: usize,
    pub triangles: usize,
    pub edges: usize,
    pub interior_edges: usize,
    pub ndof: usize,
    pub dim_hessians: usize,
    pub dim_x: usize,
    pub expected_dim_x: usize,
    pub dim_sym_curl: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditResiduals {
    pub x_constraints: f64,
    pub max_decomposition: f64,
    pub max_cross: f64,
    pub max_stability: f64,
}

/// `{euler_ok, dim_identity_ok, dims, residuals}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub euler_ok: bool,
    pub dim_identity_ok: bool,
    /// The constraints defining the vector field space are independent.
    pub constraints_independent: bool,
    pub decomposition_ok: bool,
    pub dims: AuditDims,
    pub residuals: AuditResiduals,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.euler_ok && self.dim_identity_ok && self.decomposition_ok
    }
}

/// The Euler formulae and `3 #T = dim D^2 V + dim sym Curl X` as exact integer identities.
pub fn dimension_audit(space: &MorleySpace, x: &XSpace) -> AuditReport {
    let mesh = space.mesh();
    let (nv, nt, ne) = (mesh.num_vertices(), mesh.num_triangles(), mesh.num_edges());
    let ni = mesh.interior_edges().count();
    let euler_ok = nv + nt == 1 + ne && 2 * nt + 1 == nv + ni;
    let dim_hessians = numerical_rank(&hessian_columns(space));
    let dim_sym_curl = numerical_rank(&curl_columns(mesh, x));
    AuditReport {
        euler_ok,
        dim_identity_ok: 3 * nt == dim_hessians + dim_sym_curl,
        constraints_independent: x.dim() == x.expected_dim,
        decomposition_ok: true,
        dims: AuditDims {
            vertices: nv,
            triangles: nt,
            edges: ne,
            interior_edges: ni,
            ndof: space.ndof(),
            dim_hessians,
            dim_x: x.dim(),
            expected_dim_x: x.expected_dim,
            dim_sym_curl,
        },
        residuals: AuditResiduals { x_constraints: x.constraint_residual(), max_decomposition: 0.0, max_cross: 0.0, max_stability: 0.0 },
    }
}

/// Dimension audit plus decompositions of `samples` random fields.
pub fn audit(space: &MorleySpace, samples: usize, seed: u64) -> Result<AuditReport> {
    let x = build_xspace(space.mesh())?;
    let mut report = dimension_audit(space, &x);
    if !report.dim_identity_ok {
        report.decomposition_ok = false;
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let sigma = SymTensorField::random(space.mesh(), &mut rng);
        let d = decompose(space, &x, &sigma)?;
        let r = &mut report.residuals;
        r.max_decomposition = r.max_decomposition.max(d.residual);
        r.max_cross = r.max_cross.max(d.cross);
        r.max_stability = r.max_stability.max(d.stability);
    }
    report.decomposition_ok = report.residuals.max_decomposition <= 1e-9 && report.residuals.max_cross <= 1e-10;
    Ok(report)
}
