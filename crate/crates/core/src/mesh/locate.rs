use super::{Point, Triangulation};
use crate::error::{Error, Result};

/// For every triangle of `fine`, the triangle of `coarse` containing it.
///
/// Fails unless `fine` is a refinement of `coarse`: the coarse vertices must
/// be the leading vertices of the fine mesh and every fine triangle must lie
/// inside one coarse triangle.
pub fn refinement_map(coarse: &Triangulation, fine: &Triangulation) -> Result<Vec<usize>> {
    if fine.num_vertices() < coarse.num_vertices()
        || coarse.vertices().iter().zip(fine.vertices()).any(|(a, b)| a != b)
    {
        return Err(Error::NotARefinement("coarse vertices are not a prefix of the fine vertices".into()));
    }
    let grid = Grid::new(coarse);
    let mut map = Vec::with_capacity(fine.num_triangles());
    for k in 0..fine.num_triangles() {
        let pts = fine.triangle_points(k);
        let c = fine.centroid(k);
        let found = grid.candidates(c).iter().copied().find(|&t| {
            pts.iter().all(|&p| coarse.barycentric(t, p).iter().all(|&l| l >= -1e-10))
        });
        match found {
            Some(t) => map.push(t),
            None => return Err(Error::NotARefinement(format!("fine triangle {k} lies in no coarse triangle"))),
        }
    }
    Ok(map)
}

struct Grid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl Grid {
    fn new(mesh: &Triangulation) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in mesh.vertices() {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
        let n = ((mesh.num_triangles() as f64).sqrt().ceil() as usize).max(1);
        let cell = extent / n as f64;
        let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).max(1);
        let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).max(1);
        let mut grid = Grid { origin: lo, cell, nx, ny, buckets: vec![Vec::new(); nx * ny] };
        for t in 0..mesh.num_triangles() {
            let pts = mesh.triangle_points(t);
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in pts {
                for d in 0..2 {
                    a[d] = a[d].min(p[d]);
                    b[d] = b[d].max(p[d]);
                }
            }
            let (i0, j0) = grid.cell_of(a);
            let (i1, j1) = grid.cell_of(b);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    grid.buckets[j * nx + i].push(t);
                }
            }
        }
        grid
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let i = ((p[0] - self.origin[0]) / self.cell).floor().max(0.0) as usize;
        let j = ((p[1] - self.origin[1]) / self.cell).floor().max(0.0) as usize;
        (i.min(self.nx - 1), j.min(self.ny - 1))
    }

    fn candidates(&self, p: Point) -> &[usize] {
        let (i, j) = self.cell_of(p);
        &self.buckets[j * self.nx + i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{uniform_refine, BoundaryPart, Geometry};

    #[test]
    fn map_agrees_with_parent_pointers() {
        let m = Geometry::LShape.build_uniform(BoundaryPart::Clamped).unwrap();
        let f = uniform_refine(&m);
        let map = refinement_map(&m, &f).unwrap();
        for k in 0..f.num_triangles() {
            assert_eq!(map[k], f.parent(k));
        }
        let ff = uniform_refine(&f);
        let map2 = refinement_map(&m, &ff).unwrap();
        for k in 0..ff.num_triangles() {
            assert_eq!(map2[k], f.parent(ff.parent(k)));
        }
    }

    #[test]
    fn unrelated_meshes_are_rejected() {
        let a = uniform_refine(&Geometry::Square.build_uniform(BoundaryPart::Clamped).unwrap());
        let b = Geometry::Square.build_uniform(BoundaryPart::Clamped).unwrap();
        assert!(matches!(refinement_map(&a, &b), Err(Error::NotARefinement(_))));
    }
}
