//! Explicit residual estimator for an eigenvalue cluster and Dörfler marking.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::ClusterSolution;
use crate::error::{Error, Result};
use crate::mesh::{BoundaryPart, MarkSet, Triangulation};
use crate::poly::SymMat2;
use crate::quadrature::QuadratureRule;
use crate::space::MorleySpace;

/// Weight of the edge terms: `h_T h_F` or `h_F^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeWeight {
    #[default]
    Element,
    Edge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorField {
    pub values: Vec<f64>,
    pub total: f64,
}

impl EstimatorField {
    pub fn from_values(values: Vec<f64>) -> Self {
        let total = values.iter().sum();
        EstimatorField { values, total }
    }

    /// CSV `triangle_id,centroid_x,centroid_y,eta2`.
    pub fn write_csv(&self, mesh: &Triangulation, mut w: impl Write) -> Result<()> {
        writeln!(w, "triangle_id,centroid_x,centroid_y,eta2")?;
        for (t, v) in self.values.iter().enumerate() {
            let c = mesh.centroid(t);
            writeln!(w, "{t},{:?},{:?},{:?}", c[0], c[1], v)?;
        }
        Ok(())
    }
}

/// `eta^2(T)` summed over the cluster.
pub fn estimate(space: &MorleySpace, cluster: &ClusterSolution, weight: EdgeWeight) -> Result<EstimatorField> {
    estimate_pairs(space, &cluster.eigenvalues, &cluster.vectors, weight)
}

pub fn estimate_pairs(space: &MorleySpace, eigenvalues: &[f64], vectors: &[Vec<f64>], weight: EdgeWeight) -> Result<EstimatorField> {
    if eigenvalues.len() != vectors.len() || vectors.iter().any(|v| v.len() != space.ndof()) {
        return Err(Error::Dimension("cluster vectors do not belong to this space".into()));
    }
    let mesh = space.mesh();
    let rule = QuadratureRule::degree4();
    let pieces: Vec<_> = vectors.iter().map(|v| space.to_broken(v)).collect();
    let hessians: Vec<Vec<SymMat2>> = pieces.iter().map(|p| p.hessians()).collect();
    let values: Vec<f64> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let h_t = mesh.h(t);
            let tri = mesh.triangle_points(t);
            let mut eta = 0.0;
            for (j, &lambda) in eigenvalues.iter().enumerate() {
                let q = &pieces[j].pieces[t];
                eta += h_t.powi(4) * lambda * lambda * rule.integrate(&tri, mesh.area(t), |x| q.value(x).powi(2));
                for e in mesh.triangle_edges(t) {
                    let edge = mesh.edge(e);
                    let jump = match edge.triangles() {
                        [a, b] => hessians[j][*a] - hessians[j][*b],
                        _ => hessians[j][t],
                    };
                    let tau = edge.tangent();
                    let jt = jump.mul_vec(tau);
                    let size = match weight {
                        EdgeWeight::Element => h_t * edge.length,
                        EdgeWeight::Edge => edge.length * edge.length,
                    };
                    eta += match edge.part {
                        BoundaryPart::Interior | BoundaryPart::Clamped => size * (jt[0] * jt[0] + jt[1] * jt[1]),
                        BoundaryPart::SimplySupported => size * (jt[0] * tau[0] + jt[1] * tau[1]).powi(2),
                        BoundaryPart::Free => 0.0,
                    };
                }
            }
            eta
        })
        .collect();
    Ok(EstimatorField::from_values(values))
}

/// Relative slack in the bulk criterion so that `theta = 1` can be met
/// despite rounding in the partial sums.
const BULK_SLACK: f64 = 1e-12;

const TIE_GRID: f64 = (1u64 << 44) as f64;

/// Smallest set `M` with `sum_M eta^2 >= theta * total`; ties go to the
/// lower triangle index. Returns the empty set when the estimator vanishes.
pub fn dorfler_mark(field: &EstimatorField, theta: f64) -> Result<MarkSet> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("bulk parameter {theta} not in (0, 1]")));
    }
    let mut marks = MarkSet::new();
    if field.total <= 0.0 {
        return Ok(marks);
    }
    // Values are compared on a grid relative to the total so that rounding
    // noise between symmetric triangles does not decide ties. The grid is
    // finer than BULK_SLACK, so the set stays minimal.
    let key = |t: usize| (field.values[t] / field.total * TIE_GRID).round();
    let mut order: Vec<usize> = (0..field.values.len()).collect();
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
    let goal = theta * field.total * (1.0 - BULK_SLACK);
    let mut sum = 0.0;
    for t in order {
        if sum >= goal || field.values[t] <= 0.0 {
            break;
        }
        sum += field.values[t];
        marks.insert(t);
    }
    Ok(marks)
}

/// Whether `sum_M eta^2` satisfies the bulk criterion used by [`dorfler_mark`].
pub fn is_bulk(field: &EstimatorField, marks: impl IntoIterator<Item = usize>, theta: f64) -> bool {
    let s: f64 = marks.into_iter().map(|t| field.values[t]).sum();
    s >= theta * field.total * (1.0 - BULK_SLACK)
}
