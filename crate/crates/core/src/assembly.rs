//! Global stiffness and mass matrices, load vectors, the discrete linear
//! plate problem, elementwise L2 projections and data oscillations.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{Point, Triangulation};
use crate::poly::Quadratic;
use crate::quadrature::QuadratureRule;
use crate::space::MorleySpace;
use crate::sparse::{solve_spd, LinearSolver, SymSparseMatrix};

type Local = [[f64; 6]; 6];

/// Scatters per-element matrices into the reduced global matrix. Elements are
/// computed in parallel but summed in element order.
fn assemble(space: &MorleySpace, local: impl Fn(usize) -> Local + Sync) -> SymSparseMatrix {
    let nt = space.mesh().num_triangles();
    let blocks: Vec<Local> = (0..nt).into_par_iter().map(&local).collect();
    let mut triplets = Vec::with_capacity(21 * nt);
    for (t, k) in blocks.iter().enumerate() {
        let dofs = space.element_dofs(t);
        for i in 0..6 {
            let Some(gi) = dofs[i] else { continue };
            for j in 0..=i {
                let Some(gj) = dofs[j] else { continue };
                triplets.push((gi, gj, k[i][j]));
                if i != j && gi == gj {
                    // both local dofs map to one global dof: count the mirror entry too
                    triplets.push((gi, gj, k[i][j]));
                }
            }
        }
    }
    SymSparseMatrix::from_triplets(space.ndof(), triplets)
}

/// Element matrix of `a_NC`: `area(T) D^2 phi_i : D^2 phi_j`.
pub fn element_stiffness(space: &MorleySpace, t: usize) -> Local {
    let area = space.mesh().area(t);
    let h: Vec<_> = space.local_basis(t).iter().map(|q| q.hessian()).collect();
    std::array::from_fn(|i| std::array::from_fn(|j| area * h[i].dot(&h[j])))
}

/// Element matrix of the `L2` product, exact for quadratics.
pub fn element_mass(space: &MorleySpace, t: usize, rule: &QuadratureRule) -> Local {
    let mesh = space.mesh();
    let basis = space.local_basis(t);
    let mut m = [[0.0; 6]; 6];
    for (x, w) in rule.map(&mesh.triangle_points(t)).into_iter().zip(&rule.weights) {
        let v: [f64; 6] = std::array::from_fn(|i| basis[i].value(x));
        for i in 0..6 {
            for j in 0..6 {
                m[i][j] += w * v[i] * v[j];
            }
        }
    }
    let area = mesh.area(t);
    m.iter_mut().flatten().for_each(|v| *v *= area);
    m
}

pub fn assemble_stiffness(space: &MorleySpace) -> SymSparseMatrix {
    assemble(space, |t| element_stiffness(space, t))
}

pub fn assemble_mass(space: &MorleySpace) -> SymSparseMatrix {
    let rule = QuadratureRule::degree4();
    assemble(space, |t| element_mass(space, t, &rule))
}

/// `F_j = int f phi_j dx` with the given rule.
pub fn load_vector(space: &MorleySpace, f: &(dyn Fn(Point) -> f64 + Sync), rule: &QuadratureRule) -> Vec<f64> {
    let mesh = space.mesh();
    let blocks: Vec<[f64; 6]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let basis = space.local_basis(t);
            let mut b = [0.0; 6];
            for (x, w) in rule.map(&mesh.triangle_points(t)).into_iter().zip(&rule.weights) {
                let fx = f(x) * w * mesh.area(t);
                for i in 0..6 {
                    b[i] += fx * basis[i].value(x);
                }
            }
            b
        })
        .collect();
    let mut out = vec![0.0; space.ndof()];
    for (t, b) in blocks.iter().enumerate() {
        for (g, v) in space.element_dofs(t).into_iter().zip(b) {
            if let Some(g) = g {
                out[g] += v;
            }
        }
    }
    out
}

/// Solves `A u = rhs`; failure of the factorisation means the boundary
/// conditions admit affine functions.
pub fn solve_with_rhs(a: &SymSparseMatrix, rhs: &[f64], solver: LinearSolver) -> Result<Vec<f64>> {
    if a.dim() == 0 {
        return Ok(Vec::new());
    }
    let u = match solve_spd(a, rhs, solver) {
        Ok(u) => u,
        Err(Error::NotPositiveDefinite(_)) => return Err(Error::SingularSystem),
        Err(e) => return Err(e),
    };
    let r = a.matvec(&u);
    let norm_f = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let res = r.iter().zip(rhs).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    if !res.is_finite() || res > 1e-10 * norm_f.max(f64::MIN_POSITIVE) && norm_f > 0.0 {
        return Err(Error::SingularSystem);
    }
    Ok(u)
}

/// The discrete plate problem `a_NC(u, v) = (f, v)` for all `v` in the space.
/// The rule should integrate `f` times a quadratic accurately; degree
/// `max(4, deg f + 2)` makes polynomial loads exact.
pub fn solve_linear(
    space: &MorleySpace,
    f: &(dyn Fn(Point) -> f64 + Sync),
    rule: &QuadratureRule,
    solver: LinearSolver,
) -> Result<Vec<f64>> {
    let a = assemble_stiffness(space);
    let rhs = load_vector(space, f, rule);
    solve_with_rhs(&a, &rhs, solver)
}

/// Number of scaled monomials of degree at most `k`.
fn monomial_count(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

fn scaled_monomials(k: usize, center: Point, scale: f64, x: Point) -> Vec<f64> {
    let (u, v) = ((x[0] - center[0]) / scale, (x[1] - center[1]) / scale);
    let mut out = Vec::with_capacity(monomial_count(k));
    for d in 0..=k {
        for j in 0..=d {
            out.push(u.powi((d - j) as i32) * v.powi(j as i32));
        }
    }
    out
}

/// Elementwise `L2` projection onto polynomials of degree `k`.
///
/// Row `t` holds the coefficients of the monomials `X^a Y^b`, ordered by
/// total degree and then by the power of `Y`, with `(X, Y)` the coordinates
/// relative to the centroid scaled by `h_T`.
pub fn project_pk(mesh: &Triangulation, f: &(dyn Fn(Point) -> f64 + Sync), k: usize) -> Vec<Vec<f64>> {
    assert!(k <= 2, "projections are provided for k = 0, 1, 2");
    let rule = QuadratureRule::collapsed(10);
    let n = monomial_count(k);
    (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let (c, s) = (mesh.centroid(t), mesh.h(t));
            let mut g = DMatrix::<f64>::zeros(n, n);
            let mut b = DVector::<f64>::zeros(n);
            for (x, w) in rule.map(&mesh.triangle_points(t)).into_iter().zip(&rule.weights) {
                let m = scaled_monomials(k, c, s, x);
                let fx = f(x);
                for i in 0..n {
                    b[i] += w * fx * m[i];
                    for j in 0..n {
                        g[(i, j)] += w * m[i] * m[j];
                    }
                }
            }
            let coeffs = g.cholesky().expect("monomial Gram matrix is positive definite").solve(&b);
            coeffs.iter().copied().collect()
        })
        .collect()
}

/// `osc_k(f) = || h^2 (1 - Pi^k) f ||_{L2}`.
pub fn osc_k(mesh: &Triangulation, f: &(dyn Fn(Point) -> f64 + Sync), k: usize) -> f64 {
    let proj = project_pk(mesh, f, k);
    let rule = QuadratureRule::collapsed(10);
    let total: f64 = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let (c, s) = (mesh.centroid(t), mesh.h(t));
            let err = rule.integrate(&mesh.triangle_points(t), mesh.area(t), |x| {
                let m = scaled_monomials(k, c, s, x);
                let p: f64 = m.iter().zip(&proj[t]).map(|(a, b)| a * b).sum();
                (f(x) - p).powi(2)
            });
            mesh.area(t).powi(2) * err
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    total.sqrt()
}

/// `(D^2_NC u, D^2_NC v)` for coefficient vectors of one space, computed
/// elementwise without the global matrix.
pub fn energy_product(space: &MorleySpace, u: &[f64], v: &[f64]) -> f64 {
    (0..space.mesh().num_triangles())
        .map(|t| {
            let (p, q): (Quadratic, Quadratic) = (space.element_polynomial(u, t), space.element_polynomial(v, t));
            space.mesh().area(t) * p.hessian().dot(&q.hessian())
        })
        .sum()
}
