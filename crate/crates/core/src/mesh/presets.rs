use serde::{Deserialize, Serialize};

use super::{build_mesh, signed_area, BoundaryPart, Point, Triangulation};
use crate::error::{Error, Result};

/// Closed polygon with one boundary part per segment; segment `k` joins
/// point `k` to point `k + 1` (cyclically).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    points: Vec<Point>,
    parts: Vec<BoundaryPart>,
}

impl Polygon {
    pub fn new(points: Vec<Point>, parts: Vec<BoundaryPart>) -> Result<Self> {
        let p = Polygon { points, parts };
        p.validate()?;
        Ok(p)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn parts(&self) -> &[BoundaryPart] {
        &self.parts
    }

    fn segment(&self, k: usize) -> (Point, Point) {
        (self.points[k], self.points[(k + 1) % self.points.len()])
    }

    fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for p in &self.points {
            for q in &self.points {
                d = d.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
            }
        }
        d
    }

    pub fn area(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|k| signed_area([0.0, 0.0], self.points[k], self.points[(k + 1) % n]))
            .sum::<f64>()
            .abs()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let n = self.points.len();
        if n < 3 {
            return Err(Error::InvalidMesh("polygon needs at least three points".into()));
        }
        if self.parts.len() != n {
            return Err(Error::InvalidMesh(format!("{} boundary labels for {n} segments", self.parts.len())));
        }
        if self.parts.contains(&BoundaryPart::Interior) {
            return Err(Error::InvalidMesh("polygon segment labelled interior".into()));
        }
        let tol = 1e-12 * self.diameter();
        for k in 0..n {
            let (a, b) = self.segment(k);
            if ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() <= tol {
                return Err(Error::InvalidMesh(format!("segment {k} has zero length")));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (a, b) = self.segment(i);
                let (c, d) = self.segment(j);
                if segments_intersect(a, b, c, d) {
                    return Err(Error::InvalidMesh(format!("polygon is not simple: segments {i} and {j} intersect")));
                }
            }
        }
        if self.area() <= tol * tol {
            return Err(Error::InvalidMesh("polygon has zero area".into()));
        }
        Ok(())
    }

    /// Part of the single segment that contains both points, if any.
    pub(crate) fn label_of(&self, p: Point, q: Point) -> Option<BoundaryPart> {
        let tol = 1e-10 * self.diameter();
        (0..self.points.len())
            .find(|&k| {
                let (a, b) = self.segment(k);
                on_segment(p, a, b, tol) && on_segment(q, a, b, tol)
            })
            .map(|k| self.parts[k])
    }
}

fn on_segment(p: Point, a: Point, b: Point, tol: f64) -> bool {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let s = ((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2;
    let len = len2.sqrt();
    if s * len < -tol || (s - 1.0) * len > tol {
        return false;
    }
    let proj = [a[0] + s * d[0], a[1] + s * d[1]];
    ((p[0] - proj[0]).powi(2) + (p[1] - proj[1]).powi(2)).sqrt() <= tol
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = signed_area(a, b, c);
    let o2 = signed_area(a, b, d);
    let o3 = signed_area(c, d, a);
    let o4 = signed_area(c, d, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let tol = 0.0;
    (o1.abs() <= tol && on_segment(c, a, b, 1e-14))
        || (o2.abs() <= tol && on_segment(d, a, b, 1e-14))
        || (o3.abs() <= tol && on_segment(a, c, d, 1e-14))
        || (o4.abs() <= tol && on_segment(b, c, d, 1e-14))
}

/// Built-in domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Unit square `(0,1)^2`, two triangles; segments bottom, right, top, left.
    Square,
    /// `(-1,1)^2` minus `[0,1] x [-1,0]`, six triangles; segments start at
    /// `(-1,-1)` and run counter-clockwise, the re-entrant corner is the
    /// junction of segments 1 and 2.
    #[serde(rename = "lshape")]
    LShape,
}

impl Geometry {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(Geometry::Square),
            "lshape" | "l_shape" => Ok(Geometry::LShape),
            other => Err(Error::Config(format!("unknown geometry '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Geometry::Square => "square",
            Geometry::LShape => "lshape",
        }
    }

    pub fn num_segments(self) -> usize {
        match self {
            Geometry::Square => 4,
            Geometry::LShape => 6,
        }
    }

    pub fn polygon(self, parts: &[BoundaryPart]) -> Result<Polygon> {
        let points = match self {
            Geometry::Square => vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            Geometry::LShape => vec![[-1.0, -1.0], [0.0, -1.0], [0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [-1.0, 1.0]],
        };
        Polygon::new(points, parts.to_vec())
    }

    /// Boundary labels of the named configurations `clamped`,
    /// `simply_supported`, `free` and `mixed`.
    pub fn named_bc(self, name: &str) -> Result<Vec<BoundaryPart>> {
        use BoundaryPart::*;
        let n = self.num_segments();
        Ok(match name {
            "mixed" => match self {
                Geometry::Square => vec![Clamped, SimplySupported, Free, SimplySupported],
                Geometry::LShape => vec![Clamped, Clamped, Clamped, SimplySupported, Free, SimplySupported],
            },
            other => vec![BoundaryPart::parse(other)?; n],
        })
    }

    pub fn build(self, parts: &[BoundaryPart]) -> Result<Triangulation> {
        let polygon = self.polygon(parts)?;
        let (vertices, triangles): (Vec<Point>, Vec<[usize; 3]>) = match self {
            Geometry::Square => (
                vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
                vec![[0, 1, 2], [0, 2, 3]],
            ),
            Geometry::LShape => (
                vec![
                    [-1.0, -1.0],
                    [0.0, -1.0],
                    [0.0, 0.0],
                    [1.0, 0.0],
                    [1.0, 1.0],
                    [0.0, 1.0],
                    [-1.0, 1.0],
                    [-1.0, 0.0],
                ],
                vec![[0, 1, 2], [0, 2, 7], [7, 2, 5], [7, 5, 6], [2, 3, 4], [2, 4, 5]],
            ),
        };
        build_mesh(&polygon, vertices, &triangles)
    }

    pub fn build_uniform(self, part: BoundaryPart) -> Result<Triangulation> {
        self.build(&vec![part; self.num_segments()])
    }
}
