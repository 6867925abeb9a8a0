//! Points, vectors and symmetric 2×2 tensors.
//!
//! A [`SymTensor2`] stores only `xx`, `yy`, `xy`; the Frobenius product
//! weights the off-diagonal entry twice so that `A : B = tr(A Bᵀ)`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// A 2-vector, also used for points of the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

pub type Point = Vec2;

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };
    pub const E1: Vec2 = Vec2 { x: 1.0, y: 0.0 };
    pub const E2: Vec2 = Vec2 { x: 0.0, y: 1.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    /// Counter-clockwise rotation by 90°.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Vec2, s: f64) -> Vec2 {
        self + (o - self) * s
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymTensor2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2 { xx: 0.0, yy: 0.0, xy: 0.0 };
    pub const IDENTITY: SymTensor2 = SymTensor2 { xx: 1.0, yy: 1.0, xy: 0.0 };

    pub const fn new(xx: f64, yy: f64, xy: f64) -> Self {
        SymTensor2 { xx, yy, xy }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        SymTensor2 { xx: a, yy: b, xy: 0.0 }
    }

    /// Symmetrised tensor product `a ⊙ b = (a⊗b + b⊗a)/2`.
    pub fn sym_outer(a: Vec2, b: Vec2) -> Self {
        SymTensor2 {
            xx: a.x * b.x,
            yy: a.y * b.y,
            xy: 0.5 * (a.x * b.y + a.y * b.x),
        }
    }

    /// Frobenius product `A : B`.
    pub fn contract(self, o: SymTensor2) -> f64 {
        self.xx * o.xx + self.yy * o.yy + 2.0 * self.xy * o.xy
    }

    pub fn norm_sq(self) -> f64 {
        self.contract(self)
    }

    pub fn norm(self) -> f64 {
        self.xx.hypot(self.yy).hypot(std::f64::consts::SQRT_2 * self.xy)
    }

    pub fn trace(self) -> f64 {
        self.xx + self.yy
    }

    pub fn dev(self) -> SymTensor2 {
        let m = 0.5 * self.trace();
        SymTensor2::new(self.xx - m, self.yy - m, self.xy)
    }

    pub fn sph(self) -> SymTensor2 {
        SymTensor2::IDENTITY * (0.5 * self.trace())
    }

    /// Deviatoric and spherical parts; `A = dev + sph`.
    pub fn dev_sph_split(self) -> (SymTensor2, SymTensor2) {
        (self.dev(), self.sph())
    }

    /// Matrix–vector product.
    pub fn apply(self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    pub fn max_abs(self) -> f64 {
        self.xx.abs().max(self.yy.abs()).max(self.xy.abs())
    }

    pub fn is_finite(self) -> bool {
        self.xx.is_finite() && self.yy.is_finite() && self.xy.is_finite()
    }
}

impl Add for SymTensor2 {
    type Output = SymTensor2;
    fn add(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }
}

impl Sub for SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx - o.xx, self.yy - o.yy, self.xy - o.xy)
    }
}

impl Mul<f64> for SymTensor2 {
    type Output = SymTensor2;
    fn mul(self, s: f64) -> SymTensor2 {
        SymTensor2::new(self.xx * s, self.yy * s, self.xy * s)
    }
}

impl Div<f64> for SymTensor2 {
    type Output = SymTensor2;
    fn div(self, s: f64) -> SymTensor2 {
        SymTensor2::new(self.xx / s, self.yy / s, self.xy / s)
    }
}

impl Neg for SymTensor2 {
    type Output = SymTensor2;
    fn neg(self) -> SymTensor2 {
        SymTensor2::new(-self.xx, -self.yy, -self.xy)
    }
}

impl AddAssign for SymTensor2 {
    fn add_assign(&mut self, o: SymTensor2) {
        self.xx += o.xx;
        self.yy += o.yy;
        self.xy += o.xy;
    }
}

impl SubAssign for SymTensor2 {
    fn sub_assign(&mut self, o: SymTensor2) {
        self.xx -= o.xx;
        self.yy -= o.yy;
        self.xy -= o.xy;
    }
}

impl fmt::Display for SymTensor2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.xx, self.yy, self.xy)
    }
}

/// Free-function form of [`SymTensor2::sym_outer`].
pub fn sym_outer(a: Vec2, b: Vec2) -> SymTensor2 {
    SymTensor2::sym_outer(a, b)
}

/// Free-function form of [`SymTensor2::contract`].
pub fn contract(a: SymTensor2, b: SymTensor2) -> f64 {
    a.contract(b)
}

/// Free-function form of [`SymTensor2::dev_sph_split`].
pub fn dev_sph_split(a: SymTensor2) -> (SymTensor2, SymTensor2) {
    a.dev_sph_split()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const E1: Vec2 = Vec2::E1;
    const E2: Vec2 = Vec2::E2;

    #[test]
    fn sym_outer_on_basis() {
        assert_eq!(sym_outer(E1, E2), SymTensor2::new(0.0, 0.0, 0.5));
        assert_eq!(sym_outer(E1, E1), SymTensor2::new(1.0, 0.0, 0.0));
        assert!((sym_outer(E1, E2).norm() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn contract_examples() {
        let s = sym_outer(E1, E2);
        assert_eq!(contract(s, s), 0.5);
        let a = SymTensor2::new(3.0, -2.0, 0.7);
        assert_eq!(contract(SymTensor2::IDENTITY, a), a.trace());
        assert_eq!(contract(a.dev(), SymTensor2::IDENTITY), 0.0);
    }

    #[test]
    fn split_examples() {
        assert_eq!(dev_sph_split(SymTensor2::IDENTITY), (SymTensor2::ZERO, SymTensor2::IDENTITY));
        let s = sym_outer(E1, E2);
        assert_eq!(dev_sph_split(s), (s, SymTensor2::ZERO));
        assert_eq!(
            dev_sph_split(SymTensor2::diag(3.0, 1.0)),
            (SymTensor2::diag(1.0, -1.0), SymTensor2::diag(2.0, 2.0))
        );
    }

    #[test]
    fn norm_zero_iff_zero() {
        assert_eq!(SymTensor2::ZERO.norm(), 0.0);
        assert!(SymTensor2::new(0.0, 0.0, 1e-300).norm() > 0.0);
    }

    fn tensor() -> impl Strategy<Value = SymTensor2> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b, c)| SymTensor2::new(a, b, c))
    }

    fn vector() -> impl Strategy<Value = Vec2> {
        (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b)| Vec2::new(a, b))
    }

    proptest! {
        #[test]
        fn sym_outer_is_symmetric(a in vector(), b in vector()) {
            prop_assert_eq!(sym_outer(a, b), sym_outer(b, a));
        }

        #[test]
        fn dev_orthogonal_to_sph(a in tensor()) {
            let (d, s) = a.dev_sph_split();
            prop_assert!(d.contract(s).abs() <= 1e-13 * (1.0 + a.norm_sq()));
            prop_assert!(d.trace().abs() <= 1e-13 * (1.0 + a.norm()));
        }

        #[test]
        fn pythagoras(a in tensor()) {
            let (d, s) = a.dev_sph_split();
            let lhs = a.norm_sq();
            let rhs = d.norm_sq() + s.norm_sq();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1e-300));
        }

        #[test]
        fn contract_matches_matrix_trace(a in tensor(), b in tensor()) {
            // tr(A Bᵀ) with full 2×2 matrices
            let full = a.xx * b.xx + a.xy * b.xy + a.xy * b.xy + a.yy * b.yy;
            prop_assert!((a.contract(b) - full).abs() <= 1e-12 * (1.0 + full.abs()));
        }
    }
}
