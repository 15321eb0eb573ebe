use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::real::Real;

/// Point or vector in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec2<R = f64> {
    pub x: R,
    pub y: R,
}

impl<R: Real> Vec2<R> {
    pub fn new(x: R, y: R) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self {
            x: R::zero(),
            y: R::zero(),
        }
    }

    /// Counterclockwise quarter turn: `(x, y) -> (-y, x)`.
    pub fn perp(self) -> Self {
        Self {
            x: -self.y,
            y: self.x,
        }
    }

    pub fn dot(self, other: Self) -> R {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> R {
        self.dot(self)
    }

    pub fn norm(self) -> R {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, other: Self) -> R {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn scale(self, s: R) -> Self {
        Self {
            x: self.x * s,
            y: self.y * s,
        }
    }
}

impl<R: Real> Add for Vec2<R> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<R: Real> Sub for Vec2<R> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<R: Real> Neg for Vec2<R> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<R: Real> Mul<R> for Vec2<R> {
    type Output = Self;
    fn mul(self, s: R) -> Self {
        self.scale(s)
    }
}

impl<R: Real> Div<R> for Vec2<R> {
    type Output = Self;
    fn div(self, s: R) -> Self {
        Self::new(self.x / s, self.y / s)
    }
}

impl<R: Real> AddAssign for Vec2<R> {
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl<R: Real> SubAssign for Vec2<R> {
    fn sub_assign(&mut self, rhs: Self) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

/// Kahan-compensated accumulator for `Vec2` sums.
#[derive(Clone, Copy, Debug)]
pub struct KahanVec2<R> {
    sum: Vec2<R>,
    comp: Vec2<R>,
}

impl<R: Real> KahanVec2<R> {
    pub fn new() -> Self {
        Self {
            sum: Vec2::zero(),
            comp: Vec2::zero(),
        }
    }

    pub fn add(&mut self, v: Vec2<R>) {
        let yx = v.x - self.comp.x;
        let tx = self.sum.x + yx;
        self.comp.x = (tx - self.sum.x) - yx;
        self.sum.x = tx;

        let yy = v.y - self.comp.y;
        let ty = self.sum.y + yy;
        self.comp.y = (ty - self.sum.y) - yy;
        self.sum.y = ty;
    }

    pub fn value(&self) -> Vec2<R> {
        self.sum
    }
}

impl<R: Real> Default for KahanVec2<R> {
    fn default() -> Self {
        Self::new()
    }
}
