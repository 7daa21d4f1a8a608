//! Quadratic polynomials in scaled local coordinates and symmetric 2x2 tensors.

use std::ops::{Add, AddAssign, Mul, Sub};

use crate::mesh::Point;

/// Symmetric 2x2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymMat2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymMat2 {
    pub const ZERO: SymMat2 = SymMat2 { xx: 0.0, xy: 0.0, yy: 0.0 };

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        SymMat2 { xx, xy, yy }
    }

    /// Frobenius product `A : B`.
    pub fn dot(&self, other: &SymMat2) -> f64 {
        self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [self.xx * v[0] + self.xy * v[1], self.xy * v[0] + self.yy * v[1]]
    }

    /// Coordinates in an orthonormal basis of the symmetric matrices, so that
    /// the Euclidean product of two embeddings equals `A : B`.
    pub fn embed(&self) -> [f64; 3] {
        [self.xx, std::f64::consts::SQRT_2 * self.xy, self.yy]
    }

    pub fn max_abs(&self) -> f64 {
        self.xx.abs().max(self.xy.abs()).max(self.yy.abs())
    }
}

impl Add for SymMat2 {
    type Output = SymMat2;
    fn add(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }
}

impl AddAssign for SymMat2 {
    fn add_assign(&mut self, o: SymMat2) {
        *self = *self + o;
    }
}

impl Sub for SymMat2 {
    type Output = SymMat2;
    fn sub(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }
}

impl Mul<SymMat2> for f64 {
    type Output = SymMat2;
    fn mul(self, m: SymMat2) -> SymMat2 {
        SymMat2::new(self * m.xx, self * m.xy, self * m.yy)
    }
}

/// `c0 + c1 X + c2 Y + c3 X^2 + c4 X Y + c5 Y^2` with `(X, Y) = (x - center) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub center: Point,
    pub scale: f64,
    pub coeffs: [f64; 6],
}

impl Quadratic {
    pub fn zero(center: Point, scale: f64) -> Self {
        Quadratic { center, scale, coeffs: [0.0; 6] }
    }

    /// Builds the polynomial from global monomial coefficients
    /// `a0 + a1 x + a2 y + a3 x^2 + a4 x y + a5 y^2`.
    pub fn from_global(a: [f64; 6], center: Point, scale: f64) -> Self {
        Quadratic { center: [0.0, 0.0], scale: 1.0, coeffs: a }.reexpand(center, scale)
    }

    fn local(&self, p: Point) -> (f64, f64) {
        ((p[0] - self.center[0]) / self.scale, (p[1] - self.center[1]) / self.scale)
    }

    /// Values of the six monomials at `p`.
    pub fn monomials(center: Point, scale: f64, p: Point) -> [f64; 6] {
        let (x, y) = ((p[0] - center[0]) / scale, (p[1] - center[1]) / scale);
        [1.0, x, y, x * x, x * y, y * y]
    }

    /// Gradients of the six monomials at `p`.
    pub fn monomial_gradients(center: Point, scale: f64, p: Point) -> [[f64; 2]; 6] {
        let (x, y) = ((p[0] - center[0]) / scale, (p[1] - center[1]) / scale);
        let s = 1.0 / scale;
        [[0.0, 0.0], [s, 0.0], [0.0, s], [2.0 * x * s, 0.0], [y * s, x * s], [0.0, 2.0 * y * s]]
    }

    pub fn value(&self, p: Point) -> f64 {
        let (x, y) = self.local(p);
        let c = &self.coeffs;
        c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
    }

    pub fn gradient(&self, p: Point) -> [f64; 2] {
        let (x, y) = self.local(p);
        let c = &self.coeffs;
        let s = 1.0 / self.scale;
        [(c[1] + 2.0 * c[3] * x + c[4] * y) * s, (c[2] + c[4] * x + 2.0 * c[5] * y) * s]
    }

    pub fn hessian(&self) -> SymMat2 {
        let c = &self.coeffs;
        let s2 = 1.0 / (self.scale * self.scale);
        SymMat2::new(2.0 * c[3] * s2, c[4] * s2, 2.0 * c[5] * s2)
    }

    /// The same polynomial written in coordinates around `center` with `scale`.
    pub fn reexpand(&self, center: Point, scale: f64) -> Quadratic {
        let a = scale / self.scale;
        let bx = (center[0] - self.center[0]) / self.scale;
        let by = (center[1] - self.center[1]) / self.scale;
        let c = &self.coeffs;
        Quadratic {
            center,
            scale,
            coeffs: [
                c[0] + c[1] * bx + c[2] * by + c[3] * bx * bx + c[4] * bx * by + c[5] * by * by,
                a * (c[1] + 2.0 * c[3] * bx + c[4] * by),
                a * (c[2] + c[4] * bx + 2.0 * c[5] * by),
                a * a * c[3],
                a * a * c[4],
                a * a * c[5],
            ],
        }
    }

    /// `self += alpha * other`; `other` must share the local frame.
    pub fn axpy(&mut self, alpha: f64, other: &Quadratic) {
        debug_assert!(self.center == other.center && self.scale == other.scale);
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += alpha * o;
        }
    }

    pub fn scaled(&self, alpha: f64) -> Quadratic {
        let mut q = *self;
        q.coeffs.iter_mut().for_each(|c| *c *= alpha);
        q
    }
}
