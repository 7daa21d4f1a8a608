use std::collections::BTreeSet;

use super::{key, BoundaryMap, Triangulation};

/// Set of triangle indices selected for refinement.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkSet {
    marked: BTreeSet<usize>,
}

impl MarkSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn all(mesh: &Triangulation) -> Self {
        (0..mesh.num_triangles()).collect()
    }

    pub fn insert(&mut self, t: usize) {
        self.marked.insert(t);
    }

    pub fn contains(&self, t: usize) -> bool {
        self.marked.contains(&t)
    }

    pub fn len(&self) -> usize {
        self.marked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marked.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.marked.iter().copied()
    }
}

impl FromIterator<usize> for MarkSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        MarkSet { marked: iter.into_iter().collect() }
    }
}

/// How often a marked triangle is bisected before the conformity closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BisectionRule {
    /// One bisection of the refinement edge.
    #[default]
    Newest,
    /// All three edges bisected (three bisections).
    Bisec3,
}

impl Triangulation {
    /// Newest-vertex bisection of the marked triangles plus conformity closure.
    ///
    /// # Panics
    /// If a marked index is not a triangle of `self`.
    pub fn refine(&self, marked: &MarkSet, rule: BisectionRule) -> Triangulation {
        let mut edge_marked = vec![false; self.num_edges()];
        for t in marked.iter() {
            assert!(t < self.num_triangles(), "marked triangle {t} out of range");
            match rule {
                BisectionRule::Newest => edge_marked[self.refinement_edge(t)] = true,
                BisectionRule::Bisec3 => {
                    for e in self.triangle_edges(t) {
                        edge_marked[e] = true;
                    }
                }
            }
        }
        self.refine_edges(edge_marked)
    }

    fn refine_edges(&self, mut edge_marked: Vec<bool>) -> Triangulation {
        // closure: a triangle with any marked edge must bisect its refinement edge
        let mut stack: Vec<usize> = (0..self.num_edges()).filter(|&e| edge_marked[e]).collect();
        while let Some(e) = stack.pop() {
            for &t in self.edge_patch(e) {
                let r = self.refinement_edge(t);
                if !edge_marked[r] {
                    edge_marked[r] = true;
                    stack.push(r);
                }
            }
        }

        if !edge_marked.iter().any(|&m| m) {
            let mut same = self.clone();
            same.parent = (0..self.num_triangles()).collect();
            same.refined.clear();
            return same;
        }

        let mut vertices = self.vertices.clone();
        let mut midpoint = vec![usize::MAX; self.num_edges()];
        let mut boundary: BoundaryMap = self.boundary_map();
        for (e, edge) in self.edges.iter().enumerate() {
            if !edge_marked[e] {
                continue;
            }
            let m = vertices.len();
            vertices.push(edge.midpoint);
            midpoint[e] = m;
            let [a, b] = edge.vertices;
            if let Some(part) = boundary.remove(&key(a, b)) {
                boundary.insert(key(a, m), part);
                boundary.insert(key(m, b), part);
            }
        }

        let mut triangles = Vec::with_capacity(self.num_triangles() * 2);
        let mut generation = Vec::with_capacity(self.num_triangles() * 2);
        let mut parent = Vec::with_capacity(self.num_triangles() * 2);
        let mut refined = Vec::new();
        let split = |a: usize, b: usize| -> Option<usize> {
            self.find_edge(a, b).filter(|&e| edge_marked[e]).map(|e| midpoint[e])
        };
        for t in 0..self.num_triangles() {
            let before = triangles.len();
            bisect(self.triangle(t), self.generation(t), &split, &mut triangles, &mut generation);
            let added = triangles.len() - before;
            parent.extend(std::iter::repeat(t).take(added));
            if added > 1 {
                refined.push(t);
            }
        }

        Triangulation::from_raw(vertices, triangles, &boundary, generation, parent, refined)
            .expect("newest-vertex bisection preserves conformity")
    }
}

// [n, a, b] -> [m, n, a], [m, b, n]; children inherit (n, a) and (b, n) as refinement edges
fn bisect(
    tri: [usize; 3],
    generation: u32,
    split: &impl Fn(usize, usize) -> Option<usize>,
    out: &mut Vec<[usize; 3]>,
    out_gen: &mut Vec<u32>,
) {
    let [n, a, b] = tri;
    match split(a, b) {
        Some(m) => {
            bisect([m, n, a], generation + 1, split, out, out_gen);
            bisect([m, b, n], generation + 1, split, out, out_gen);
        }
        None => {
            out.push(tri);
            out_gen.push(generation);
        }
    }
}

/// Bisects every edge once; each triangle is replaced by four children.
pub fn uniform_refine(mesh: &Triangulation) -> Triangulation {
    mesh.refine_edges(vec![true; mesh.num_edges()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BoundaryPart, Geometry, Polygon};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square() -> Triangulation {
        Geometry::Square.build_uniform(BoundaryPart::Clamped).unwrap()
    }

    #[test]
    fn empty_mark_returns_same_mesh() {
        let m = square();
        let r = m.refine(&MarkSet::new(), BisectionRule::Newest);
        assert_eq!(r.vertices(), m.vertices());
        assert_eq!(r.triangles(), m.triangles());
        assert_eq!(r.edges(), m.edges());
    }

    #[test]
    fn single_triangle_bisection() {
        let poly = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![BoundaryPart::Free; 3]).unwrap();
        let m = crate::mesh::build_mesh(&poly, poly.points().to_vec(), &[[0, 1, 2]]).unwrap();
        let r = m.refine(&[0].into_iter().collect(), BisectionRule::Newest);
        assert_eq!(r.num_triangles(), 2);
        assert_eq!(r.num_vertices(), 4);
        assert_eq!(r.vertex(3), [0.5, 0.5]);
        assert!(r.triangles().iter().all(|t| t[0] == 3));
        assert_eq!(r.refined_parents(), &[0]);
    }

    #[test]
    fn closure_bisects_neighbour_across_diagonal() {
        let m = square();
        let r = m.refine(&[0].into_iter().collect(), BisectionRule::Newest);
        assert_eq!(r.num_triangles(), 4);
        assert!(r.is_conforming());
        assert_eq!(r.refined_parents(), &[0, 1]);
    }

    #[test]
    fn uniform_step_gives_four_children() {
        let m = square();
        let r = uniform_refine(&m);
        assert_eq!(r.num_triangles(), 8);
        for t in 0..m.num_triangles() {
            assert_eq!((0..r.num_triangles()).filter(|&c| r.parent(c) == t).count(), 4);
        }
        let l = Geometry::LShape.build_uniform(BoundaryPart::Clamped).unwrap();
        assert_eq!(uniform_refine(&l).num_triangles(), 24);
    }

    #[test]
    fn min_angle_preserved_under_uniform_refinement() {
        for geom in [Geometry::Square, Geometry::LShape] {
            let mut m = geom.build_uniform(BoundaryPart::Clamped).unwrap();
            let initial = (0..m.num_triangles()).map(|t| m.min_angle(t)).fold(f64::INFINITY, f64::min);
            for _ in 0..5 {
                m = uniform_refine(&m);
                let min = (0..m.num_triangles()).map(|t| m.min_angle(t)).fold(f64::INFINITY, f64::min);
                assert!(min >= initial - 1e-12);
                assert!(m.euler_ok());
            }
        }
    }

    fn random_refinements(geom: Geometry, rounds: usize, seed: u64) -> Vec<Triangulation> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut meshes = vec![geom.build_uniform(BoundaryPart::Clamped).unwrap()];
        for _ in 0..rounds {
            let m = meshes.last().unwrap();
            let marked: MarkSet = (0..m.num_triangles()).filter(|_| rng.gen_bool(0.3)).collect();
            let marked = if marked.is_empty() { [0].into_iter().collect() } else { marked };
            meshes.push(m.refine(&marked, BisectionRule::Newest));
        }
        meshes
    }

    #[test]
    fn random_refinement_is_conforming_and_area_preserving() {
        for geom in [Geometry::Square, Geometry::LShape] {
            let meshes = random_refinements(geom, 8, 7);
            for pair in meshes.windows(2) {
                let (coarse, fine) = (&pair[0], &pair[1]);
                assert!(fine.is_conforming());
                assert!(fine.euler_ok());
                let mut child_area = vec![0.0; coarse.num_triangles()];
                for t in 0..fine.num_triangles() {
                    child_area[fine.parent(t)] += fine.area(t);
                }
                for t in 0..coarse.num_triangles() {
                    assert!((child_area[t] - coarse.area(t)).abs() <= 1e-14 * coarse.area(t));
                }
                // each bisection adds one triangle; new boundary vertices add one, interior ones two
                let interior = |m: &Triangulation| {
                    let on = m.vertices_on(&[BoundaryPart::Clamped]);
                    on.iter().filter(|&&b| !b).count()
                };
                let d_int = interior(fine) - interior(coarse);
                let d_bd = (fine.num_vertices() - coarse.num_vertices()) - d_int;
                assert_eq!(fine.num_triangles() - coarse.num_triangles(), 2 * d_int + d_bd);
            }
        }
    }

    #[test]
    fn marked_triangles_are_bisected() {
        let meshes = random_refinements(Geometry::LShape, 1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = &meshes[1];
        let marked: MarkSet = (0..m.num_triangles()).filter(|_| rng.gen_bool(0.2)).collect();
        let r = m.refine(&marked, BisectionRule::Newest);
        for t in marked.iter() {
            assert!(r.refined_parents().contains(&t));
        }
        let r3 = m.refine(&marked, BisectionRule::Bisec3);
        for t in marked.iter() {
            assert!((0..r3.num_triangles()).filter(|&c| r3.parent(c) == t).count() >= 4);
        }
    }

    fn shape_class(m: &Triangulation, t: usize) -> [i64; 3] {
        let p = m.triangle_points(t);
        let mut l: Vec<f64> = (0..3)
            .map(|k| {
                let (a, b) = (p[k], p[(k + 1) % 3]);
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
            })
            .collect();
        l.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let s = l[2];
        [(l[0] / s * 1e9).round() as i64, (l[1] / s * 1e9).round() as i64, 1_000_000_000]
    }

    #[test]
    fn finitely_many_similarity_classes() {
        // a non-symmetric initial triangle produces several classes
        let poly = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]], vec![BoundaryPart::Clamped; 3]).unwrap();
        let mut m = crate::mesh::build_mesh(&poly, poly.points().to_vec(), &[[0, 1, 2]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut classes = std::collections::HashSet::new();
        let mut after_two = 0;
        for round in 0..10 {
            for t in 0..m.num_triangles() {
                classes.insert(shape_class(&m, t));
            }
            if round == 2 {
                after_two = classes.len();
            }
            let marked: MarkSet = (0..m.num_triangles()).filter(|_| rng.gen_bool(0.4)).collect();
            m = m.refine(&marked, BisectionRule::Newest);
        }
        assert!(classes.len() <= 4 * after_two, "{} classes vs {after_two}", classes.len());
    }
}
