use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{key, BoundaryMap, BoundaryPart, Triangulation};
use crate::error::{Error, Result};

/// JSON mesh exchange format.
///
/// `triangles` rows are `[i, j, k, r]` where `r` is the local index of the
/// vertex opposite the refinement edge (the newest vertex). `boundary` lists
/// every boundary edge with its part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDocument {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 4]>,
    pub boundary: Vec<BoundarySegment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySegment {
    pub segment: [usize; 2],
    pub tag: BoundaryPart,
}

impl MeshDocument {
    pub fn from_mesh(mesh: &Triangulation) -> Self {
        let triangles = mesh.triangles().iter().map(|t| [t[0], t[1], t[2], 0]).collect();
        let boundary = mesh
            .boundary_edges()
            .map(|e| {
                let edge = mesh.edge(e);
                BoundarySegment { segment: edge.vertices, tag: edge.part }
            })
            .collect();
        MeshDocument { vertices: mesh.vertices().to_vec(), triangles, boundary }
    }

    pub fn to_mesh(&self) -> Result<Triangulation> {
        let mut triangles = Vec::with_capacity(self.triangles.len());
        for (t, row) in self.triangles.iter().enumerate() {
            let r = row[3];
            if r > 2 {
                return Err(Error::InvalidMesh(format!("triangle {t}: refinement index {r} not in 0..3")));
            }
            triangles.push([row[r], row[(r + 1) % 3], row[(r + 2) % 3]]);
        }
        let mut boundary: BoundaryMap = HashMap::new();
        for seg in &self.boundary {
            if seg.tag == BoundaryPart::Interior {
                return Err(Error::InvalidMesh(format!("boundary segment {:?} tagged interior", seg.segment)));
            }
            if boundary.insert(key(seg.segment[0], seg.segment[1]), seg.tag).is_some() {
                return Err(Error::InvalidMesh(format!("boundary segment {:?} listed twice", seg.segment)));
            }
        }
        let n = triangles.len();
        if n == 0 {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        Triangulation::from_raw(self.vertices.clone(), triangles, &boundary, vec![0; n], (0..n).collect(), Vec::new())
    }
}

impl Triangulation {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&MeshDocument::from_mesh(self)).expect("mesh document serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MeshDocument = serde_json::from_str(text)?;
        doc.to_mesh()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{uniform_refine, Geometry};

    #[test]
    fn json_round_trip_is_exact() {
        let m = Geometry::LShape.build(&Geometry::LShape.named_bc("mixed").unwrap()).unwrap();
        let m = uniform_refine(&uniform_refine(&m));
        // irrational-looking coordinates survive shortest round-trip formatting
        let m = m.relabeled(|e| e.part).unwrap();
        let back = Triangulation::from_json(&m.to_json()).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.edges(), m.edges());
        assert_eq!(back.fingerprint(), m.fingerprint());
    }

    #[test]
    fn refinement_index_rotates_triangle() {
        let text = r#"{"vertices":[[0,0],[1,0],[0,1]],"triangles":[[1,2,0,2]],
            "boundary":[{"segment":[0,1],"tag":"clamped"},{"segment":[1,2],"tag":"free"},{"segment":[2,0],"tag":"simply_supported"}]}"#;
        let m = Triangulation::from_json(text).unwrap();
        assert_eq!(m.triangle(0), [0, 1, 2]);
        let e = m.refinement_edge(0);
        assert_eq!(m.edge(e).part, BoundaryPart::Free);
    }

    #[test]
    fn missing_boundary_label_is_rejected() {
        let text = r#"{"vertices":[[0,0],[1,0],[0,1]],"triangles":[[0,1,2,0]],
            "boundary":[{"segment":[0,1],"tag":"clamped"}]}"#;
        assert!(Triangulation::from_json(text).is_err());
    }
}
