//! The Morley finite element space: degrees of freedom, local bases and
//! the Morley interpolation operator.
//!
//! Local degrees of freedom on a triangle are ordered as the three vertex
//! values followed by the three edge means of the normal derivative, where
//! local edge `k` is opposite local vertex `k` and the normal is the fixed
//! global normal of that edge.

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{refinement_map, BoundaryPart, Point, Triangulation};
use crate::poly::{Quadratic, SymMat2};
use crate::quadrature::{segment_rule, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dof {
    Vertex(usize),
    Edge(usize),
}

#[derive(Debug, Clone)]
pub struct MorleySpace {
    mesh: Triangulation,
    vertex_dof: Vec<Option<usize>>,
    edge_dof: Vec<Option<usize>>,
    dofs: Vec<Dof>,
    local: Vec<[Quadratic; 6]>,
    duality_residual: f64,
}

/// A piecewise quadratic function, one polynomial per triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct BrokenFunction {
    pub pieces: Vec<Quadratic>,
}

fn local_dof_matrix(mesh: &Triangulation, t: usize, center: Point, scale: f64) -> Matrix6<f64> {
    let pts = mesh.triangle_points(t);
    let edges = mesh.triangle_edges(t);
    let mut d = Matrix6::zeros();
    for k in 0..3 {
        let m = Quadratic::monomials(center, scale, pts[k]);
        for j in 0..6 {
            d[(k, j)] = m[j];
        }
        let edge = mesh.edge(edges[k]);
        // the normal derivative of a quadratic is affine along the edge: mean = midpoint value
        let g = Quadratic::monomial_gradients(center, scale, edge.midpoint);
        for j in 0..6 {
            d[(3 + k, j)] = g[j][0] * edge.normal[0] + g[j][1] * edge.normal[1];
        }
    }
    d
}

impl MorleySpace {
    pub fn new(mesh: Triangulation) -> Result<Self> {
        let constrained_vertex = mesh.vertices_on(&[BoundaryPart::Clamped, BoundaryPart::SimplySupported]);
        let mut dofs = Vec::new();
        let vertex_dof: Vec<Option<usize>> = constrained_vertex
            .iter()
            .enumerate()
            .map(|(v, &c)| {
                (!c).then(|| {
                    dofs.push(Dof::Vertex(v));
                    dofs.len() - 1
                })
            })
            .collect();
        let edge_dof: Vec<Option<usize>> = mesh
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                (edge.part != BoundaryPart::Clamped).then(|| {
                    dofs.push(Dof::Edge(e));
                    dofs.len() - 1
                })
            })
            .collect();

        let mut local = Vec::with_capacity(mesh.num_triangles());
        let mut duality_residual: f64 = 0.0;
        for t in 0..mesh.num_triangles() {
            let center = mesh.centroid(t);
            let scale = mesh.h(t);
            let d = local_dof_matrix(&mesh, t, center, scale);
            let c = d.lu().try_inverse().ok_or(Error::SingularLocalSystem { triangle: t, residual: f64::INFINITY })?;
            let residual = (d * c - Matrix6::identity()).amax();
            if !(residual <= 1e-8) {
                return Err(Error::SingularLocalSystem { triangle: t, residual });
            }
            duality_residual = duality_residual.max(residual);
            let basis = std::array::from_fn(|i| {
                let col: Vector6<f64> = c.column(i).into();
                Quadratic { center, scale, coeffs: col.into() }
            });
            local.push(basis);
        }

        Ok(MorleySpace { mesh, vertex_dof, edge_dof, dofs, local, duality_residual })
    }

    pub fn mesh(&self) -> &Triangulation {
        &self.mesh
    }

    pub fn into_mesh(self) -> Triangulation {
        self.mesh
    }

    pub fn ndof(&self) -> usize {
        self.dofs.len()
    }

    pub fn dof(&self, index: usize) -> Result<Dof> {
        self.dofs.get(index).copied().ok_or(Error::DofOutOfRange { index, ndof: self.ndof() })
    }

    pub fn vertex_dof(&self, v: usize) -> Option<usize> {
        self.vertex_dof[v]
    }

    pub fn edge_dof(&self, e: usize) -> Option<usize> {
        self.edge_dof[e]
    }

    /// Largest entry of `D C - I` over all local dual systems.
    pub fn duality_residual(&self) -> f64 {
        self.duality_residual
    }

    /// Local basis of triangle `t`, dual to its six local degrees of freedom.
    pub fn local_basis(&self, t: usize) -> &[Quadratic; 6] {
        &self.local[t]
    }

    /// Global indices of the local degrees of freedom (None if constrained).
    pub fn element_dofs(&self, t: usize) -> [Option<usize>; 6] {
        let tri = self.mesh.triangle(t);
        let edges = self.mesh.triangle_edges(t);
        [
            self.vertex_dof[tri[0]],
            self.vertex_dof[tri[1]],
            self.vertex_dof[tri[2]],
            self.edge_dof[edges[0]],
            self.edge_dof[edges[1]],
            self.edge_dof[edges[2]],
        ]
    }

    /// Applies the six local degrees of freedom of triangle `t` to a polynomial.
    pub fn local_functionals(&self, t: usize, q: &Quadratic) -> [f64; 6] {
        let pts = self.mesh.triangle_points(t);
        let edges = self.mesh.triangle_edges(t);
        std::array::from_fn(|i| {
            if i < 3 {
                q.value(pts[i])
            } else {
                let edge = self.mesh.edge(edges[i - 3]);
                let g = q.gradient(edge.midpoint);
                g[0] * edge.normal[0] + g[1] * edge.normal[1]
            }
        })
    }

    /// Largest `|DOF_j(phi_i) - delta_ij|` recomputed from the stored basis.
    pub fn check_duality(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for t in 0..self.mesh.num_triangles() {
            for (i, phi) in self.local[t].iter().enumerate() {
                let f = self.local_functionals(t, phi);
                for (j, v) in f.iter().enumerate() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((v - target).abs());
                }
            }
        }
        worst
    }

    /// Polynomial of a coefficient vector on triangle `t`.
    pub fn element_polynomial(&self, coeffs: &[f64], t: usize) -> Quadratic {
        let basis = &self.local[t];
        let mut q = Quadratic::zero(basis[0].center, basis[0].scale);
        for (phi, g) in basis.iter().zip(self.element_dofs(t)) {
            if let Some(g) = g {
                q.axpy(coeffs[g], phi);
            }
        }
        q
    }

    pub fn to_broken(&self, coeffs: &[f64]) -> BrokenFunction {
        assert_eq!(coeffs.len(), self.ndof(), "coefficient vector does not match the space");
        BrokenFunction { pieces: (0..self.mesh.num_triangles()).map(|t| self.element_polynomial(coeffs, t)).collect() }
    }

    /// Value, gradient and Hessian at `point`, which must lie in triangle `hint`.
    pub fn evaluate(&self, coeffs: &[f64], point: Point, hint: usize) -> Result<(f64, [f64; 2], SymMat2)> {
        if self.mesh.barycentric(hint, point).iter().any(|&l| l < -1e-12) {
            return Err(Error::PointOutside(hint));
        }
        let q = self.element_polynomial(coeffs, hint);
        Ok((q.value(point), q.gradient(point), q.hessian()))
    }

    /// Applies global degree of freedom `index` to `source`.
    pub fn dof_functional(&self, index: usize, source: &impl MorleySource) -> Result<f64> {
        Ok(match self.dof(index)? {
            Dof::Vertex(v) => source.vertex_value(&self.mesh, v),
            Dof::Edge(e) => source.edge_normal_mean(&self.mesh, e),
        })
    }

    /// Morley interpolation: the coefficient vector whose degrees of freedom
    /// agree with those of `source`.
    pub fn interpolate(&self, source: &impl MorleySource) -> Vec<f64> {
        self.dofs
            .iter()
            .map(|&d| match d {
                Dof::Vertex(v) => source.vertex_value(&self.mesh, v),
                Dof::Edge(e) => source.edge_normal_mean(&self.mesh, e),
            })
            .collect()
    }

    /// Interpolates a broken function living on a refinement of this mesh.
    pub fn interpolate_broken(&self, fine: &Triangulation, f: &BrokenFunction) -> Result<Vec<f64>> {
        let source = BrokenSource::new(&self.mesh, fine, f)?;
        Ok(self.interpolate(&source))
    }

    /// Restricts the element polynomials to the triangles of a refinement.
    pub fn prolong(&self, coeffs: &[f64], fine: &Triangulation) -> Result<BrokenFunction> {
        self.to_broken(coeffs).prolong(&self.mesh, fine)
    }

    /// Identifies coefficient vectors with the space they belong to.
    pub fn fingerprint(&self) -> String {
        format!("morley:{}", self.mesh.fingerprint())
    }

    pub fn save_coefficients(&self, coeffs: &[f64]) -> Result<String> {
        if coeffs.len() != self.ndof() {
            return Err(Error::Dimension(format!("{} coefficients for {} dofs", coeffs.len(), self.ndof())));
        }
        let file = CoefficientFile { fingerprint: self.fingerprint(), ndof: self.ndof(), coefficients: coeffs.to_vec() };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn load_coefficients(&self, text: &str) -> Result<Vec<f64>> {
        let file: CoefficientFile = serde_json::from_str(text)?;
        if file.fingerprint != self.fingerprint() || file.ndof != self.ndof() || file.coefficients.len() != self.ndof() {
            return Err(Error::Dimension("coefficient file belongs to a different space".into()));
        }
        Ok(file.coefficients)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CoefficientFile {
    fingerprint: String,
    ndof: usize,
    coefficients: Vec<f64>,
}

impl BrokenFunction {
    pub fn zero(mesh: &Triangulation) -> Self {
        BrokenFunction { pieces: (0..mesh.num_triangles()).map(|t| Quadratic::zero(mesh.centroid(t), mesh.h(t))).collect() }
    }

    /// Piecewise representation of a global quadratic given by monomial coefficients.
    pub fn from_global(mesh: &Triangulation, a: [f64; 6]) -> Self {
        BrokenFunction {
            pieces: (0..mesh.num_triangles()).map(|t| Quadratic::from_global(a, mesh.centroid(t), mesh.h(t))).collect(),
        }
    }

    pub fn hessians(&self) -> Vec<SymMat2> {
        self.pieces.iter().map(|q| q.hessian()).collect()
    }

    /// Broken energy product `(D^2_NC u, D^2_NC v)`.
    pub fn a_nc(&self, other: &BrokenFunction, mesh: &Triangulation) -> f64 {
        self.pieces
            .iter()
            .zip(&other.pieces)
            .enumerate()
            .map(|(t, (p, q))| mesh.area(t) * p.hessian().dot(&q.hessian()))
            .sum()
    }

    pub fn energy_norm(&self, mesh: &Triangulation) -> f64 {
        self.a_nc(self, mesh).sqrt()
    }

    /// Coordinates in which the Euclidean product is the broken energy product.
    pub fn energy_embedding(&self, mesh: &Triangulation) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * self.pieces.len());
        for (t, q) in self.pieces.iter().enumerate() {
            let s = mesh.area(t).sqrt();
            out.extend(q.hessian().embed().iter().map(|v| s * v));
        }
        out
    }

    /// `(u, v)_{L^2}`, exact for piecewise quadratics.
    pub fn l2_dot(&self, other: &BrokenFunction, mesh: &Triangulation) -> f64 {
        let rule = QuadratureRule::degree4();
        (0..mesh.num_triangles())
            .map(|t| {
                let (p, q) = (&self.pieces[t], &other.pieces[t]);
                rule.integrate(&mesh.triangle_points(t), mesh.area(t), |x| p.value(x) * q.value(x))
            })
            .sum()
    }

    /// Restriction to the triangles of a refinement of `mesh`.
    pub fn prolong(&self, mesh: &Triangulation, fine: &Triangulation) -> Result<BrokenFunction> {
        let map = refinement_map(mesh, fine)?;
        Ok(BrokenFunction {
            pieces: map.iter().enumerate().map(|(k, &t)| self.pieces[t].reexpand(fine.centroid(k), fine.h(k))).collect(),
        })
    }

    pub fn axpy(&mut self, alpha: f64, other: &BrokenFunction) {
        for (p, q) in self.pieces.iter_mut().zip(&other.pieces) {
            p.axpy(alpha, q);
        }
    }
}

/// Data from which Morley degrees of freedom can be taken.
pub trait MorleySource {
    fn vertex_value(&self, mesh: &Triangulation, v: usize) -> f64;
    /// `(1 / h_F) int_F dv/dnu_F ds` with the stored normal of edge `e`.
    fn edge_normal_mean(&self, mesh: &Triangulation, e: usize) -> f64;
}

/// A smooth function given by value and gradient.
pub struct SmoothFunction<F>(pub F);

impl<F: Fn(Point) -> (f64, [f64; 2])> MorleySource for SmoothFunction<F> {
    fn vertex_value(&self, mesh: &Triangulation, v: usize) -> f64 {
        (self.0)(mesh.vertex(v)).0
    }

    fn edge_normal_mean(&self, mesh: &Triangulation, e: usize) -> f64 {
        let edge = mesh.edge(e);
        let [a, b] = edge.vertices;
        segment_rule(mesh.vertex(a), mesh.vertex(b), 6)
            .into_iter()
            .map(|(x, w)| {
                let g = (self.0)(x).1;
                w * (g[0] * edge.normal[0] + g[1] * edge.normal[1])
            })
            .sum::<f64>()
            / edge.length
    }
}

/// A broken function on a refinement, viewed from a coarser mesh.
///
/// Vertex values and normal-derivative traces are averaged over the fine
/// triangles touching the vertex or sub-edge.
pub struct BrokenSource<'a> {
    f: &'a BrokenFunction,
    fine: &'a Triangulation,
    // coarse edge -> fine sub-edges
    pieces: Vec<Vec<usize>>,
}

impl<'a> BrokenSource<'a> {
    pub fn new(coarse: &Triangulation, fine: &'a Triangulation, f: &'a BrokenFunction) -> Result<Self> {
        if f.pieces.len() != fine.num_triangles() {
            return Err(Error::Dimension("broken function does not live on the fine mesh".into()));
        }
        let map = refinement_map(coarse, fine)?;
        let mut pieces = vec![Vec::new(); coarse.num_edges()];
        for (fe, edge) in fine.edges().iter().enumerate() {
            let [a, b] = edge.vertices;
            let t = map[edge.triangles()[0]];
            let found = coarse.triangle_edges(t).into_iter().find(|&ce| {
                let [c0, c1] = coarse.edge(ce).vertices;
                let (p, q) = (coarse.vertex(c0), coarse.vertex(c1));
                let len = coarse.edge(ce).length;
                [fine.vertex(a), fine.vertex(b)].iter().all(|x| {
                    let cross = (q[0] - p[0]) * (x[1] - p[1]) - (q[1] - p[1]) * (x[0] - p[0]);
                    cross.abs() <= 1e-10 * len * len
                })
            });
            if let Some(ce) = found {
                pieces[ce].push(fe);
            }
        }
        for (ce, list) in pieces.iter().enumerate() {
            let total: f64 = list.iter().map(|&fe| fine.edge(fe).length).sum();
            if (total - coarse.edge(ce).length).abs() > 1e-10 * coarse.edge(ce).length {
                return Err(Error::NotARefinement(format!("coarse edge {ce} is not a union of fine edges")));
            }
        }
        Ok(BrokenSource { f, fine, pieces })
    }
}

impl MorleySource for BrokenSource<'_> {
    fn vertex_value(&self, mesh: &Triangulation, v: usize) -> f64 {
        let z = mesh.vertex(v);
        let patch = self.fine.vertex_patch(v);
        patch.iter().map(|&k| self.f.pieces[k].value(z)).sum::<f64>() / patch.len() as f64
    }

    fn edge_normal_mean(&self, mesh: &Triangulation, e: usize) -> f64 {
        let edge = mesh.edge(e);
        let mut total = 0.0;
        for &fe in &self.pieces[e] {
            let sub = self.fine.edge(fe);
            let tris = sub.triangles();
            let mean: f64 = tris
                .iter()
                .map(|&k| {
                    let g = self.f.pieces[k].gradient(sub.midpoint);
                    g[0] * edge.normal[0] + g[1] * edge.normal[1]
                })
                .sum::<f64>()
                / tris.len() as f64;
            total += sub.length * mean;
        }
        total / edge.length
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{uniform_refine, BisectionRule, Geometry, MarkSet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(geom: Geometry, bc: &str, refinements: usize) -> MorleySpace {
        let mut m = geom.build(&geom.named_bc(bc).unwrap()).unwrap();
        for _ in 0..refinements {
            m = uniform_refine(&m);
        }
        MorleySpace::new(m).unwrap()
    }

    #[test]
    fn dof_counts() {
        assert_eq!(space(Geometry::Square, "clamped", 0).ndof(), 1);
        assert_eq!(space(Geometry::Square, "simply_supported", 0).ndof(), 5);
        let poly = crate::mesh::Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![BoundaryPart::Free; 3]).unwrap();
        let tri = crate::mesh::build_mesh(&poly, poly.points().to_vec(), &[[0, 1, 2]]).unwrap();
        assert_eq!(MorleySpace::new(tri).unwrap().ndof(), 6);
    }

    #[test]
    fn local_bases_are_dual() {
        for geom in [Geometry::Square, Geometry::LShape] {
            for r in 0..4 {
                let s = space(geom, "mixed", r);
                assert!(s.duality_residual() <= 1e-12);
                assert!(s.check_duality() <= 1e-12);
            }
        }
    }

    #[test]
    fn dof_functional_examples() {
        let poly = crate::mesh::Polygon::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![BoundaryPart::Free; 4],
        )
        .unwrap();
        let m = crate::mesh::build_mesh(&poly, poly.points().to_vec(), &[[0, 1, 2], [0, 2, 3]]).unwrap();
        let s = MorleySpace::new(m).unwrap();
        let xsq = SmoothFunction(|p: Point| (p[0] * p[0], [2.0 * p[0], 0.0]));
        let v1 = s.vertex_dof(1).unwrap();
        assert_eq!(s.dof_functional(v1, &xsq).unwrap(), 1.0);
        // left edge, outward normal (-1, 0)
        let left = s.mesh().find_edge(0, 3).unwrap();
        assert_eq!(s.mesh().edge(left).normal, [-1.0, 0.0]);
        assert!(s.dof_functional(s.edge_dof(left).unwrap(), &xsq).unwrap().abs() < 1e-15);
        // diagonal (0,0)-(1,1): normal (-1,1)/sqrt 2 points out of triangle 0 (below the diagonal)
        let diag = s.mesh().find_edge(0, 2).unwrap();
        let n = s.mesh().edge(diag).normal;
        assert!((n[0] + 0.5f64.sqrt()).abs() < 1e-15 && (n[1] - 0.5f64.sqrt()).abs() < 1e-15);
        let val = s.dof_functional(s.edge_dof(diag).unwrap(), &xsq).unwrap();
        assert!((val + 0.5f64.sqrt()).abs() < 1e-14);
        // with the opposite orientation (1,-1)/sqrt 2 the mean is sqrt 2 / 2
        let flipped = MorleySpace::new(s.mesh().with_flipped_normal(diag)).unwrap();
        let val = flipped.dof_functional(flipped.edge_dof(diag).unwrap(), &xsq).unwrap();
        assert!((val - 0.5f64.sqrt()).abs() < 1e-14);
        assert!(matches!(s.dof_functional(99, &xsq), Err(Error::DofOutOfRange { .. })));
    }

    #[test]
    fn quadratics_are_reproduced() {
        let s = space(Geometry::LShape, "free", 1);
        let a = [0.3, -1.0, 2.0, 0.7, -0.4, 1.1];
        let q = BrokenFunction::from_global(s.mesh(), a);
        let smooth = SmoothFunction(|p: Point| {
            let (x, y) = (p[0], p[1]);
            (
                a[0] + a[1] * x + a[2] * y + a[3] * x * x + a[4] * x * y + a[5] * y * y,
                [a[1] + 2.0 * a[3] * x + a[4] * y, a[2] + a[4] * x + 2.0 * a[5] * y],
            )
        });
        let c1 = s.interpolate(&smooth);
        let c2 = s.interpolate_broken(s.mesh(), &q).unwrap();
        let back = s.to_broken(&c1);
        for t in 0..s.mesh().num_triangles() {
            let p = s.mesh().centroid(t);
            assert!((back.pieces[t].value(p) - q.pieces[t].value(p)).abs() < 1e-12);
            assert!((back.pieces[t].hessian() - q.pieces[t].hessian()).max_abs() < 1e-11);
        }
        for (x, y) in c1.iter().zip(&c2) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(s.interpolate(&SmoothFunction(|_| (0.0, [0.0, 0.0]))).iter().all(|&c| c == 0.0));
    }

    #[test]
    fn evaluate_respects_hint() {
        let s = space(Geometry::Square, "clamped", 1);
        let c = vec![1.0; s.ndof()];
        let t = 0;
        let p = s.mesh().centroid(t);
        assert!(s.evaluate(&c, p, t).is_ok());
        let far = s.mesh().centroid(s.mesh().num_triangles() - 1);
        assert!(matches!(s.evaluate(&c, far, t), Err(Error::PointOutside(0))));
    }

    #[test]
    fn prolongation_preserves_hessians_and_values() {
        let s = space(Geometry::Square, "clamped", 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c: Vec<f64> = (0..s.ndof()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fine = uniform_refine(s.mesh());
        let f = s.prolong(&c, &fine).unwrap();
        let u = s.to_broken(&c);
        let (e0, e1) = (u.energy_norm(s.mesh()), f.energy_norm(&fine));
        assert!((e0 - e1).abs() <= 1e-13 * e0);
        // value of a coarse basis function at a new midpoint vertex
        let coarse_v = s.mesh().num_vertices();
        let z = fine.vertex(coarse_v);
        let k = fine.vertex_patch(coarse_v)[0];
        let t = fine.parent(k);
        assert!((f.pieces[k].value(z) - u.pieces[t].value(z)).abs() < 1e-13);
    }

    #[test]
    fn flipping_a_normal_flips_one_dof() {
        let s = space(Geometry::Square, "clamped", 2);
        let e = s.mesh().interior_edges().nth(3).unwrap();
        let flipped = MorleySpace::new(s.mesh().with_flipped_normal(e)).unwrap();
        let f = SmoothFunction(|p: Point| {
            let (x, y) = (p[0], p[1]);
            (x * x * y * (1.0 - x) * (1.0 - y), [y * (1.0 - y) * (2.0 * x - 3.0 * x * x), x * x * (1.0 - x) * (1.0 - 2.0 * y)])
        });
        let (a, b) = (s.interpolate(&f), flipped.interpolate(&f));
        let g = s.edge_dof(e).unwrap();
        for i in 0..s.ndof() {
            if i == g {
                assert!((a[i] + b[i]).abs() < 1e-15);
            } else {
                assert_eq!(a[i], b[i]);
            }
        }
    }

    fn random_fine_morley(coarse: &Triangulation, levels: usize, seed: u64) -> (MorleySpace, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = coarse.clone();
        for _ in 0..levels {
            let marked: MarkSet = (0..m.num_triangles()).filter(|_| rng.gen_bool(0.5)).collect();
            m = m.refine(&marked, BisectionRule::Newest);
        }
        let s = MorleySpace::new(m).unwrap();
        let c = (0..s.ndof()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (s, c)
    }

    #[test]
    fn hessian_projection_property() {
        for bc in ["clamped", "mixed", "free"] {
            let coarse = space(Geometry::LShape, bc, 1);
            for levels in 1..=3 {
                let (fine, c) = random_fine_morley(coarse.mesh(), levels, 17 + levels as u64);
                let v = fine.to_broken(&c);
                let iv = coarse.interpolate_broken(fine.mesh(), &v).unwrap();
                let iv = coarse.to_broken(&iv);
                let map = refinement_map(coarse.mesh(), fine.mesh()).unwrap();
                let mut mean = vec![SymMat2::ZERO; coarse.mesh().num_triangles()];
                for (k, &t) in map.iter().enumerate() {
                    mean[t] += (fine.mesh().area(k) / coarse.mesh().area(t)) * v.pieces[k].hessian();
                }
                for t in 0..coarse.mesh().num_triangles() {
                    let r = (mean[t] - iv.pieces[t].hessian()).max_abs();
                    assert!(r <= 1e-10, "{bc} level {levels}: residual {r:e}");
                }
            }
        }
    }

    #[test]
    fn coefficient_files_check_the_space() {
        let s = space(Geometry::Square, "clamped", 1);
        let other = space(Geometry::Square, "simply_supported", 1);
        let c = vec![0.25; s.ndof()];
        let text = s.save_coefficients(&c).unwrap();
        assert_eq!(s.load_coefficients(&text).unwrap(), c);
        assert!(other.load_coefficients(&text).is_err());
    }
}
