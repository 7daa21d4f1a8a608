//! Conforming triangulations of polygonal domains with labelled boundary parts
//! and newest-vertex bisection.
//!
//! Triangles are stored with their newest vertex first: for `[n, a, b]` the
//! refinement edge is `(a, b)`. Local edge `k` of a triangle is the edge
//! opposite local vertex `k`, so local edge 0 is always the refinement edge.

mod io;
mod locate;
mod presets;
mod refine;

pub use io::MeshDocument;
pub use locate::refinement_map;
pub use presets::{Geometry, Polygon};
pub use refine::{uniform_refine, BisectionRule, MarkSet};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Boundary condition carried by an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPart {
    Clamped,
    SimplySupported,
    Free,
    Interior,
}

impl BoundaryPart {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryPart::Clamped => "clamped",
            BoundaryPart::SimplySupported => "simply_supported",
            BoundaryPart::Free => "free",
            BoundaryPart::Interior => "interior",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "clamped" | "C" => Ok(BoundaryPart::Clamped),
            "simply_supported" | "S" => Ok(BoundaryPart::SimplySupported),
            "free" | "F" => Ok(BoundaryPart::Free),
            other => Err(Error::Config(format!("unknown boundary part '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    tris: [usize; 2],
    ntris: u8,
    /// Fixed unit normal; outward on the boundary, outward from the
    /// lower-indexed adjacent triangle in the interior.
    pub normal: [f64; 2],
    pub length: f64,
    pub midpoint: Point,
    pub part: BoundaryPart,
}

impl Edge {
    /// Adjacent triangles, lowest index first.
    pub fn triangles(&self) -> &[usize] {
        &self.tris[..self.ntris as usize]
    }

    pub fn is_boundary(&self) -> bool {
        self.ntris == 1
    }

    /// `tau = rotate(nu, +90 degrees)`.
    pub fn tangent(&self) -> [f64; 2] {
        [-self.normal[1], self.normal[0]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    generation: Vec<u32>,
    parent: Vec<usize>,
    refined: Vec<usize>,
    edges: Vec<Edge>,
    tri_edges: Vec<[usize; 3]>,
    edge_index: HashMap<(usize, usize), usize>,
    vertex_offsets: Vec<usize>,
    vertex_tris: Vec<usize>,
    area: Vec<f64>,
}

pub(crate) type BoundaryMap = HashMap<(usize, usize), BoundaryPart>;

pub(crate) fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn signed_area(p: Point, q: Point, r: Point) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

fn dist(p: Point, q: Point) -> f64 {
    ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
}

/// Builds a triangulation of a labelled polygon from initial vertex triples.
///
/// Vertices of `triangles` index into `vertices`. Refinement edges are
/// initialised to the longest edge of every triangle, ties broken by the
/// smallest global edge index.
pub fn build_mesh(polygon: &Polygon, vertices: Vec<Point>, triangles: &[[usize; 3]]) -> Result<Triangulation> {
    polygon.validate()?;
    if triangles.is_empty() {
        return Err(Error::InvalidMesh("no triangles".into()));
    }
    for (t, tri) in triangles.iter().enumerate() {
        if tri.iter().any(|&v| v >= vertices.len()) {
            return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
        }
        let a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        let scale = dist(vertices[tri[0]], vertices[tri[1]]).max(dist(vertices[tri[0]], vertices[tri[2]]));
        if a.abs() <= 1e-14 * scale * scale {
            return Err(Error::DegenerateTriangle { triangle: t, area: a });
        }
        if a < 0.0 {
            return Err(Error::NegativeOrientation(t));
        }
    }

    // global edge numbering in order of first appearance
    let mut first_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in triangles {
        for k in 0..3 {
            let e = key(tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let n = first_index.len();
            first_index.entry(e).or_insert(n);
            *count.entry(e).or_default() += 1;
        }
    }

    let mut rotated = Vec::with_capacity(triangles.len());
    for tri in triangles {
        let mut best = 0;
        let mut best_len = -1.0;
        let mut best_idx = usize::MAX;
        for k in 0..3 {
            let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let len = dist(vertices[a], vertices[b]);
            let idx = first_index[&key(a, b)];
            let longer = len > best_len * (1.0 + 1e-12);
            let tie = (len - best_len).abs() <= 1e-12 * len && idx < best_idx;
            if longer || tie {
                best = k;
                best_len = len;
                best_idx = idx;
            }
        }
        rotated.push([tri[best], tri[(best + 1) % 3], tri[(best + 2) % 3]]);
    }

    let mut boundary = BoundaryMap::new();
    for (&e, &c) in &count {
        match c {
            1 => {
                let part = polygon.label_of(vertices[e.0], vertices[e.1]).ok_or(Error::BoundaryLabel([e.0, e.1]))?;
                boundary.insert(e, part);
            }
            2 => {}
            _ => return Err(Error::NonConforming(format!("edge {e:?} shared by {c} triangles"))),
        }
    }

    let mesh_area: f64 = rotated
        .iter()
        .map(|t| signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]))
        .sum();
    let poly_area = polygon.area();
    if (mesh_area - poly_area).abs() > 1e-10 * poly_area {
        return Err(Error::InvalidMesh(format!(
            "triangles cover area {mesh_area} but the polygon has area {poly_area}"
        )));
    }

    let n = rotated.len();
    Triangulation::from_raw(vertices, rotated, &boundary, vec![0; n], (0..n).collect(), Vec::new())
}

impl Triangulation {
    pub(crate) fn from_raw(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: &BoundaryMap,
        generation: Vec<u32>,
        parent: Vec<usize>,
        refined: Vec<usize>,
    ) -> Result<Self> {
        let mut area = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            let a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if a <= 0.0 {
                return Err(if a == 0.0 {
                    Error::DegenerateTriangle { triangle: t, area: a }
                } else {
                    Error::NegativeOrientation(t)
                });
            }
            area.push(a);
        }

        let mut edges: Vec<Edge> = Vec::with_capacity(triangles.len() * 3 / 2 + 2);
        let mut edge_index = HashMap::with_capacity(triangles.len() * 2);
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let idx = *edge_index.entry(key(a, b)).or_insert_with(|| {
                    let (pa, pb) = (vertices[a], vertices[b]);
                    let len = dist(pa, pb);
                    edges.push(Edge {
                        vertices: [a, b],
                        tris: [t, usize::MAX],
                        ntris: 0,
                        normal: [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len],
                        length: len,
                        midpoint: [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])],
                        part: BoundaryPart::Interior,
                    });
                    edges.len() - 1
                });
                let edge = &mut edges[idx];
                match edge.ntris {
                    0 => edge.ntris = 1,
                    1 => {
                        edge.tris[1] = t;
                        edge.ntris = 2;
                    }
                    _ => {
                        return Err(Error::NonConforming(format!(
                            "edge ({a}, {b}) shared by more than two triangles"
                        )))
                    }
                }
                local[k] = idx;
            }
            tri_edges.push(local);
        }

        for edge in &mut edges {
            let k = key(edge.vertices[0], edge.vertices[1]);
            match (edge.ntris, boundary.get(&k)) {
                (1, Some(&part)) if part != BoundaryPart::Interior => edge.part = part,
                (1, _) => {
                    return Err(Error::NonConforming(format!(
                        "edge {k:?} has one neighbour but no boundary label (hanging node or gap)"
                    )))
                }
                (_, Some(_)) => {
                    return Err(Error::InvalidMesh(format!("interior edge {k:?} carries a boundary label")))
                }
                _ => {}
            }
        }
        if boundary.len() != edges.iter().filter(|e| e.is_boundary()).count() {
            return Err(Error::InvalidMesh("boundary labels reference edges that are not mesh edges".into()));
        }

        let mut vertex_offsets = vec![0usize; vertices.len() + 1];
        for tri in &triangles {
            for &v in tri {
                vertex_offsets[v + 1] += 1;
            }
        }
        for i in 0..vertices.len() {
            vertex_offsets[i + 1] += vertex_offsets[i];
        }
        let mut fill = vertex_offsets.clone();
        let mut vertex_tris = vec![0usize; 3 * triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_tris[fill[v]] = t;
                fill[v] += 1;
            }
        }

        Ok(Triangulation {
            vertices,
            triangles,
            generation,
            parent,
            refined,
            edges,
            tri_edges,
            edge_index,
            vertex_offsets,
            vertex_tris,
            area,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    /// Vertex triple `[newest, a, b]`; the refinement edge is `(a, b)`.
    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]]
    }

    /// Global edge indices; local edge `k` is opposite local vertex `k`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }

    pub fn refinement_edge(&self, t: usize) -> usize {
        self.tri_edges[t][0]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&key(a, b)).copied()
    }

    /// Triangles adjacent to an edge (the edge patch).
    pub fn edge_patch(&self, e: usize) -> &[usize] {
        self.edges[e].triangles()
    }

    /// Triangles sharing vertex `v`.
    pub fn vertex_patch(&self, v: usize) -> &[usize] {
        &self.vertex_tris[self.vertex_offsets[v]..self.vertex_offsets[v + 1]]
    }

    pub fn area(&self, t: usize) -> f64 {
        self.area[t]
    }

    pub fn total_area(&self) -> f64 {
        self.area.iter().sum()
    }

    /// Mesh size `h_T = meas(T)^(1/2)`.
    pub fn h(&self, t: usize) -> f64 {
        self.area[t].sqrt()
    }

    pub fn h_max(&self) -> f64 {
        self.area.iter().fold(0.0f64, |m, &a| m.max(a.sqrt()))
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [p, q, r] = self.triangle_points(t);
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    }

    pub fn generation(&self, t: usize) -> u32 {
        self.generation[t]
    }

    /// Index of the triangle in the previous mesh this triangle descends from.
    pub fn parent(&self, t: usize) -> usize {
        self.parent[t]
    }

    /// Triangles of the previous mesh that were bisected to produce this one.
    pub fn refined_parents(&self) -> &[usize] {
        &self.refined
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| self.edges[e].is_boundary())
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| !self.edges[e].is_boundary())
    }

    /// Edges whose part is one of `parts`.
    pub fn edges_on<'a>(&'a self, parts: &'a [BoundaryPart]) -> impl Iterator<Item = usize> + 'a {
        (0..self.edges.len()).filter(move |&e| parts.contains(&self.edges[e].part))
    }

    /// Vertices in the closure of the union of the given boundary parts.
    pub fn vertices_on(&self, parts: &[BoundaryPart]) -> Vec<bool> {
        let mut on = vec![false; self.vertices.len()];
        for e in self.edges_on(parts) {
            for &v in &self.edges[e].vertices {
                on[v] = true;
            }
        }
        on
    }

    /// Vertices shared by two free boundary edges.
    pub fn free_vertex_pairs(&self) -> Vec<(usize, usize, usize)> {
        let mut by_vertex: HashMap<usize, Vec<usize>> = HashMap::new();
        for e in self.edges_on(&[BoundaryPart::Free]) {
            for &v in &self.edges[e].vertices {
                by_vertex.entry(v).or_default().push(e);
            }
        }
        let mut out: Vec<_> = by_vertex
            .into_iter()
            .filter(|(_, es)| es.len() == 2)
            .map(|(v, es)| (v, es[0], es[1]))
            .collect();
        out.sort_unstable();
        out
    }

    /// Smallest interior angle of triangle `t`, in radians.
    pub fn min_angle(&self, t: usize) -> f64 {
        let p = self.triangle_points(t);
        (0..3)
            .map(|k| {
                let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / ((u[0] * u[0] + u[1] * u[1]).sqrt() * (v[0] * v[0] + v[1] * v[1]).sqrt());
                cos.clamp(-1.0, 1.0).acos()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Barycentric coordinates of `p` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.triangle_points(t);
        let area = self.area[t];
        [
            signed_area(p, b, c) / area,
            signed_area(a, p, c) / area,
            signed_area(a, b, p) / area,
        ]
    }

    /// Checks both Euler formulae for a simply connected domain.
    pub fn euler_ok(&self) -> bool {
        let nv = self.num_vertices();
        let nt = self.num_triangles();
        let nf = self.num_edges();
        let nfi = self.interior_edges().count();
        nv + nt == 1 + nf && 2 * nt + 1 == nv + nfi
    }

    /// Every interior edge has two neighbours, every boundary edge one.
    pub fn is_conforming(&self) -> bool {
        self.edges.iter().all(|e| match e.ntris {
            1 => e.part != BoundaryPart::Interior,
            2 => e.part == BoundaryPart::Interior,
            _ => false,
        })
    }

    /// Interior edges that are the refinement edge of exactly one neighbour.
    ///
    /// An empty result means the refinement edges satisfy the matching
    /// neighbour condition.
    pub fn audit_refinement_edges(&self) -> Vec<usize> {
        self.interior_edges()
            .filter(|&e| {
                let tris = self.edge_patch(e);
                let r0 = self.refinement_edge(tris[0]) == e;
                let r1 = self.refinement_edge(tris[1]) == e;
                r0 != r1
            })
            .collect()
    }

    /// Copy of the mesh with the stored normal of edge `e` reversed.
    pub fn with_flipped_normal(&self, e: usize) -> Self {
        let mut m = self.clone();
        let n = &mut m.edges[e].normal;
        *n = [-n[0], -n[1]];
        m
    }

    /// Boundary labels keyed by sorted vertex pair.
    pub(crate) fn boundary_map(&self) -> BoundaryMap {
        self.edges
            .iter()
            .filter(|e| e.is_boundary())
            .map(|e| (key(e.vertices[0], e.vertices[1]), e.part))
            .collect()
    }

    /// Copy of the mesh with boundary parts reassigned by `relabel`.
    pub fn relabeled(&self, relabel: impl Fn(&Edge) -> BoundaryPart) -> Result<Self> {
        let boundary: BoundaryMap = self
            .edges
            .iter()
            .filter(|e| e.is_boundary())
            .map(|e| (key(e.vertices[0], e.vertices[1]), relabel(e)))
            .collect();
        Triangulation::from_raw(
            self.vertices.clone(),
            self.triangles.clone(),
            &boundary,
            self.generation.clone(),
            self.parent.clone(),
            self.refined.clone(),
        )
    }

    /// Hex SHA-256 of the canonical JSON export.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let doc = MeshDocument::from_mesh(self);
        let bytes = serde_json::to_vec(&doc).expect("mesh document serialises");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
