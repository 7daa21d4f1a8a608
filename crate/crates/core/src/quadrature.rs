//! Quadrature on triangles in barycentric coordinates.

use crate::mesh::Point;

/// Weights are normalised to sum to one; an integral over `T` is
/// `area(T) * sum_i w_i f(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

fn orbit3(a: f64, w: f64, pts: &mut Vec<[f64; 3]>, wts: &mut Vec<f64>) {
    let b = 1.0 - 2.0 * a;
    for p in [[b, a, a], [a, b, a], [a, a, b]] {
        pts.push(p);
        wts.push(w);
    }
}

fn orbit6(a: f64, b: f64, w: f64, pts: &mut Vec<[f64; 3]>, wts: &mut Vec<f64>) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [b, a, c], [a, c, b], [c, a, b], [b, c, a], [c, b, a]] {
        pts.push(p);
        wts.push(w);
    }
}

impl QuadratureRule {
    /// Symmetric three-point rule, exact for degree 2.
    pub fn degree2() -> Self {
        let (mut p, mut w) = (Vec::new(), Vec::new());
        orbit3(1.0 / 6.0, 1.0 / 3.0, &mut p, &mut w);
        Self::checked(p, w, 2)
    }

    /// Symmetric six-point rule, exact for degree 4.
    pub fn degree4() -> Self {
        let (mut p, mut w) = (Vec::new(), Vec::new());
        orbit3(0.445_948_490_915_964_886_32, 0.223_381_589_678_011_465_70, &mut p, &mut w);
        orbit3(0.091_576_213_509_770_743_46, 0.109_951_743_655_321_867_64, &mut p, &mut w);
        Self::checked(p, w, 4)
    }

    /// Symmetric twelve-point rule, exact for degree 6.
    pub fn degree6() -> Self {
        let (mut p, mut w) = (Vec::new(), Vec::new());
        orbit3(0.249_286_745_170_910_421_29, 0.116_786_275_726_379_366_03, &mut p, &mut w);
        orbit3(0.063_089_014_491_502_228_34, 0.050_844_906_370_206_816_92, &mut p, &mut w);
        orbit6(
            0.310_352_451_033_784_405_42,
            0.636_502_499_121_398_647_23,
            0.082_851_075_618_373_575_19,
            &mut p,
            &mut w,
        );
        Self::checked(p, w, 6)
    }

    /// Collapsed (Duffy) Gauss-Legendre product rule with `n` points per
    /// direction; exact for degree `2n - 2`.
    pub fn collapsed(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut pts = Vec::with_capacity(n * n);
        let mut wts = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (u, v) = (x[i], x[j]);
                let px = u * (1.0 - v);
                let py = v;
                pts.push([1.0 - px - py, px, py]);
                wts.push(2.0 * w[i] * w[j] * (1.0 - v));
            }
        }
        Self::checked(pts, wts, 2 * n - 2)
    }

    /// Cheapest rule that integrates polynomials of the given degree exactly.
    pub fn with_degree(degree: usize) -> Self {
        match degree {
            0..=2 => Self::degree2(),
            3..=4 => Self::degree4(),
            5..=6 => Self::degree6(),
            d => Self::collapsed(d.div_ceil(2) + 1),
        }
    }

    fn checked(points: Vec<[f64; 3]>, weights: Vec<f64>, degree: usize) -> Self {
        let rule = QuadratureRule { points, weights, degree };
        let err = rule.exactness_error();
        assert!(err < 1e-13, "quadrature rule of degree {degree} fails its exactness check ({err:e})");
        rule
    }

    /// Largest relative error over the monomials `x^a y^b`, `a + b <= degree`,
    /// on the reference triangle.
    pub fn exactness_error(&self) -> f64 {
        let mut worst: f64 = (self.weights.iter().sum::<f64>() - 1.0).abs();
        for a in 0..=self.degree {
            for b in 0..=self.degree - a {
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                let approx: f64 = 0.5
                    * self
                        .points
                        .iter()
                        .zip(&self.weights)
                        .map(|(p, w)| w * p[1].powi(a as i32) * p[2].powi(b as i32))
                        .sum::<f64>();
                worst = worst.max((approx - exact).abs() / exact);
            }
        }
        worst
    }

    /// Physical quadrature points of a triangle.
    pub fn map(&self, tri: &[Point; 3]) -> Vec<Point> {
        self.points
            .iter()
            .map(|l| {
                [
                    l[0] * tri[0][0] + l[1] * tri[1][0] + l[2] * tri[2][0],
                    l[0] * tri[0][1] + l[1] * tri[1][1] + l[2] * tri[2][1],
                ]
            })
            .collect()
    }

    /// `int_T f dx`.
    pub fn integrate(&self, tri: &[Point; 3], area: f64, f: impl Fn(Point) -> f64) -> f64 {
        area * self.map(tri).into_iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum::<f64>()
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Gauss-Legendre rule on a segment `a -> b`; returns points and weights
/// that sum to the segment length.
pub fn segment_rule(a: Point, b: Point, n: usize) -> Vec<(Point, f64)> {
    let (x, w) = gauss_legendre(n);
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    x.iter()
        .zip(&w)
        .map(|(&s, &wi)| ([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])], wi * len))
        .collect()
}
