//! Small dense polynomials in one and two local coordinates with values in
//! a real vector space (scalars, vectors, symmetric tensors).
//!
//! They carry the densities of segment and cell parts of a measure, and the
//! per-triangle pieces of broken displacement fields. Coefficients are in the
//! monomial basis; degrees stay tiny (≤ 3) so conditioning is not an issue.

use std::ops::{Add, Mul, Sub};

use crate::tensor::{SymTensor2, Vec2};

/// A value type that polynomials can carry.
pub trait Linear: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    /// Largest absolute component, used for negligibility tests.
    fn magnitude(&self) -> f64;
}

impl Linear for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Linear for Vec2 {
    fn magnitude(&self) -> f64 {
        self.x.abs().max(self.y.abs())
    }
}

impl Linear for SymTensor2 {
    fn magnitude(&self) -> f64 {
        self.max_abs()
    }
}

/// `Σ c_i s^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly1<T> {
    coeffs: Vec<T>,
}

impl<T: Linear> Poly1<T> {
    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        let mut p = Poly1 { coeffs };
        if p.coeffs.is_empty() {
            p.coeffs.push(T::default());
        }
        p
    }

    pub fn constant(c: T) -> Self {
        Poly1 { coeffs: vec![c] }
    }

    /// Affine interpolant with `p(0) = a`, `p(1) = b`.
    pub fn affine(a: T, b: T) -> Self {
        Poly1 { coeffs: vec![a, b - a] }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, s: f64) -> T {
        let mut acc = T::default();
        for c in self.coeffs.iter().rev() {
            acc = acc * s + *c;
        }
        acc
    }

    pub fn scale(&self, f: f64) -> Self {
        Poly1 { coeffs: self.coeffs.iter().map(|c| *c * f).collect() }
    }

    pub fn add(&self, o: &Poly1<T>) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let coeffs = (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).copied().unwrap_or_default();
                let b = o.coeffs.get(i).copied().unwrap_or_default();
                a + b
            })
            .collect();
        Poly1 { coeffs }
    }

    pub fn sub(&self, o: &Poly1<T>) -> Self {
        self.add(&o.scale(-1.0))
    }

    /// Product with a scalar polynomial.
    pub fn mul_scalar(&self, f: &Poly1<f64>) -> Self {
        let mut coeffs = vec![T::default(); self.coeffs.len() + f.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in f.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j] + *a * *b;
            }
        }
        Poly1 { coeffs }
    }

    /// `s ↦ p(a + b s)`.
    pub fn compose_affine(&self, a: f64, b: f64) -> Self {
        let line = Poly1::from_coeffs(vec![a, b]);
        let mut out = Poly1::constant(T::default());
        let mut power = Poly1::constant(1.0);
        for c in &self.coeffs {
            out = out.add(&Poly1::constant(*c).mul_scalar(&power));
            power = power.mul_scalar_f64(&line);
        }
        out.trim()
    }

    /// Drop trailing coefficients that are exactly zero.
    pub fn trim(mut self) -> Self {
        while self.coeffs.len() > 1 && self.coeffs.last().map(|c| c.magnitude() == 0.0).unwrap_or(false) {
            self.coeffs.pop();
        }
        self
    }

    /// True if every coefficient is at most `tol` in magnitude.
    pub fn is_negligible(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.magnitude() <= tol)
    }

    /// Largest coefficient magnitude.
    pub fn magnitude(&self) -> f64 {
        self.coeffs.iter().map(|c| c.magnitude()).fold(0.0, f64::max)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().skip(1).all(|c| c.magnitude() == 0.0)
    }

    pub fn map<U: Linear>(&self, f: impl Fn(T) -> U) -> Poly1<U> {
        Poly1 { coeffs: self.coeffs.iter().map(|c| f(*c)).collect() }
    }

    /// Values at `max(degree, 1) + 1` equispaced nodes of `[0, 1]`.
    pub fn nodal_values(&self) -> Vec<T> {
        let n = self.degree().max(1);
        (0..=n).map(|i| self.eval(i as f64 / n as f64)).collect()
    }
}

impl Poly1<f64> {
    fn mul_scalar_f64(&self, f: &Poly1<f64>) -> Poly1<f64> {
        self.mul_scalar(f)
    }
}

/// `Σ c_ij ξ^i η^j` with `i + j ≤ degree`, for use in the reference
/// triangle `{ξ, η ≥ 0, ξ + η ≤ 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly2<T> {
    degree: usize,
    coeffs: Vec<T>,
}

fn idx(i: usize, j: usize) -> usize {
    let n = i + j;
    n * (n + 1) / 2 + j
}

fn len_for(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

impl<T: Linear> Poly2<T> {
    pub fn zero(degree: usize) -> Self {
        Poly2 { degree, coeffs: vec![T::default(); len_for(degree)] }
    }

    pub fn constant(c: T) -> Self {
        Poly2 { degree: 0, coeffs: vec![c] }
    }

    /// Affine interpolant of three vertex values `v0, v1, v2` at
    /// `(0,0), (1,0), (0,1)`.
    pub fn affine(v0: T, v1: T, v2: T) -> Self {
        let mut p = Poly2::zero(1);
        p.coeffs[idx(0, 0)] = v0;
        p.coeffs[idx(1, 0)] = v1 - v0;
        p.coeffs[idx(0, 1)] = v2 - v0;
        p
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, i: usize, j: usize) -> T {
        if i + j > self.degree {
            T::default()
        } else {
            self.coeffs[idx(i, j)]
        }
    }

    fn set(&mut self, i: usize, j: usize, v: T) {
        self.coeffs[idx(i, j)] = v;
    }

    pub fn eval(&self, xi: f64, eta: f64) -> T {
        // Horner in ξ for each power of η
        let mut acc = T::default();
        let mut eta_pow = 1.0;
        for j in 0..=self.degree {
            let mut inner = T::default();
            for i in (0..=self.degree - j).rev() {
                inner = inner * xi + self.coeffs[idx(i, j)];
            }
            acc = acc + inner * eta_pow;
            eta_pow *= eta;
        }
        acc
    }

    pub fn scale(&self, f: f64) -> Self {
        Poly2 { degree: self.degree, coeffs: self.coeffs.iter().map(|c| *c * f).collect() }
    }

    pub fn add(&self, o: &Poly2<T>) -> Self {
        let d = self.degree.max(o.degree);
        let mut out = Poly2::zero(d);
        for n in 0..=d {
            for j in 0..=n {
                let i = n - j;
                out.set(i, j, self.coeff(i, j) + o.coeff(i, j));
            }
        }
        out
    }

    pub fn sub(&self, o: &Poly2<T>) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn mul_scalar(&self, f: &Poly2<f64>) -> Self {
        let d = self.degree + f.degree;
        let mut out = Poly2::zero(d);
        for n1 in 0..=self.degree {
            for j1 in 0..=n1 {
                let i1 = n1 - j1;
                let a = self.coeffs[idx(i1, j1)];
                for n2 in 0..=f.degree {
                    for j2 in 0..=n2 {
                        let i2 = n2 - j2;
                        let k = idx(i1 + i2, j1 + j2);
                        out.coeffs[k] = out.coeffs[k] + a * f.coeffs[idx(i2, j2)];
                    }
                }
            }
        }
        out
    }

    pub fn d_xi(&self) -> Self {
        if self.degree == 0 {
            return Poly2::zero(0);
        }
        let mut out = Poly2::zero(self.degree - 1);
        for n in 1..=self.degree {
            for j in 0..n {
                let i = n - j;
                out.set(i - 1, j, self.coeff(i, j) * i as f64);
            }
        }
        out
    }

    pub fn d_eta(&self) -> Self {
        if self.degree == 0 {
            return Poly2::zero(0);
        }
        let mut out = Poly2::zero(self.degree - 1);
        for n in 1..=self.degree {
            for j in 1..=n {
                let i = n - j;
                out.set(i, j - 1, self.coeff(i, j) * j as f64);
            }
        }
        out
    }

    /// Substitute `ξ = a[0] + a[1] s + a[2] t`, `η = b[0] + b[1] s + b[2] t`.
    pub fn compose_affine(&self, a: [f64; 3], b: [f64; 3]) -> Self {
        let lx = Poly2::<f64>::from_linear(a);
        let ly = Poly2::<f64>::from_linear(b);
        let mut xpow = vec![Poly2::constant(1.0)];
        let mut ypow = vec![Poly2::constant(1.0)];
        for _ in 0..self.degree {
            let nx = xpow.last().unwrap().mul_scalar(&lx);
            xpow.push(nx);
            let ny = ypow.last().unwrap().mul_scalar(&ly);
            ypow.push(ny);
        }
        let mut out = Poly2::zero(self.degree);
        for n in 0..=self.degree {
            for j in 0..=n {
                let i = n - j;
                let basis = xpow[i].mul_scalar(&ypow[j]);
                out = out.add(&Poly2::constant(self.coeff(i, j)).mul_scalar(&basis));
            }
        }
        out.truncate(self.degree)
    }

    fn truncate(mut self, degree: usize) -> Self {
        if self.degree > degree {
            self.coeffs.truncate(len_for(degree));
            self.degree = degree;
        }
        self
    }

    /// Restriction to the segment `s ↦ (ξ, η) = (a0 + a1 s, b0 + b1 s)`.
    pub fn restrict_to_line(&self, a: [f64; 2], b: [f64; 2]) -> Poly1<T> {
        let q = self.compose_affine([a[0], a[1], 0.0], [b[0], b[1], 0.0]);
        Poly1::from_coeffs((0..=q.degree).map(|i| q.coeff(i, 0)).collect())
    }

    /// Coefficient-wise combination of two polynomials of any degrees.
    pub fn zip_map<U: Linear, V: Linear>(&self, o: &Poly2<U>, f: impl Fn(T, U) -> V) -> Poly2<V> {
        let d = self.degree.max(o.degree);
        let mut out = Poly2::zero(d);
        for n in 0..=d {
            for j in 0..=n {
                let i = n - j;
                out.set(i, j, f(self.coeff(i, j), o.coeff(i, j)));
            }
        }
        out
    }

    /// Largest coefficient magnitude.
    pub fn magnitude(&self) -> f64 {
        self.coeffs.iter().map(|c| c.magnitude()).fold(0.0, f64::max)
    }

    pub fn is_negligible(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.magnitude() <= tol)
    }

    /// True when every non-constant coefficient is exactly zero.
    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().skip(1).all(|c| c.magnitude() == 0.0)
    }

    pub fn map<U: Linear>(&self, f: impl Fn(T) -> U) -> Poly2<U> {
        Poly2 { degree: self.degree, coeffs: self.coeffs.iter().map(|c| f(*c)).collect() }
    }

    /// Values at the degree-`d` lattice nodes `(i/d, j/d)`, ordered by `j`
    /// then `i`; a single value at the centroid when `d = 0`.
    pub fn nodal_values(&self) -> Vec<T> {
        let d = self.degree;
        if d == 0 {
            return vec![self.coeffs[0]];
        }
        let mut out = Vec::with_capacity(len_for(d));
        for j in 0..=d {
            for i in 0..=d - j {
                out.push(self.eval(i as f64 / d as f64, j as f64 / d as f64));
            }
        }
        out
    }
}

impl Poly2<f64> {
    fn from_linear(c: [f64; 3]) -> Self {
        let mut p = Poly2::zero(1);
        p.coeffs[idx(0, 0)] = c[0];
        p.coeffs[idx(1, 0)] = c[1];
        p.coeffs[idx(0, 1)] = c[2];
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Poly2<f64> {
        // 1 + 2ξ - η + 3ξη + ξ² - 0.5η²
        let mut p = Poly2::zero(2);
        p.set(0, 0, 1.0);
        p.set(1, 0, 2.0);
        p.set(0, 1, -1.0);
        p.set(1, 1, 3.0);
        p.set(2, 0, 1.0);
        p.set(0, 2, -0.5);
        p
    }

    fn sample_eval(x: f64, y: f64) -> f64 {
        1.0 + 2.0 * x - y + 3.0 * x * y + x * x - 0.5 * y * y
    }

    #[test]
    fn eval_and_derivatives() {
        let p = sample();
        for &(x, y) in &[(0.1, 0.3), (0.7, 0.2), (0.0, 1.0)] {
            assert!((p.eval(x, y) - sample_eval(x, y)).abs() < 1e-14);
            let h = 1e-6;
            let fd_x = (sample_eval(x + h, y) - sample_eval(x - h, y)) / (2.0 * h);
            let fd_y = (sample_eval(x, y + h) - sample_eval(x, y - h)) / (2.0 * h);
            assert!((p.d_xi().eval(x, y) - fd_x).abs() < 1e-8);
            assert!((p.d_eta().eval(x, y) - fd_y).abs() < 1e-8);
        }
    }

    #[test]
    fn composition_and_restriction() {
        let p = sample();
        let a = [0.2, 0.5, -0.1];
        let b = [0.1, -0.3, 0.6];
        let q = p.compose_affine(a, b);
        for &(s, t) in &[(0.3, 0.4), (1.0, 0.0), (-0.5, 2.0)] {
            let x = a[0] + a[1] * s + a[2] * t;
            let y = b[0] + b[1] * s + b[2] * t;
            assert!((q.eval(s, t) - sample_eval(x, y)).abs() < 1e-13);
        }
        let line = p.restrict_to_line([0.1, 0.8], [0.9, -0.9]);
        for &s in &[0.0, 0.25, 1.0] {
            assert!((line.eval(s) - sample_eval(0.1 + 0.8 * s, 0.9 - 0.9 * s)).abs() < 1e-13);
        }
    }

    #[test]
    fn products() {
        let p = sample();
        let f = Poly2::affine(1.0, 2.0, -1.0);
        let pf = p.mul_scalar(&f);
        assert_eq!(pf.degree(), 3);
        let (x, y) = (0.3, 0.2);
        let fv = 1.0 + x - 2.0 * y;
        assert!((pf.eval(x, y) - sample_eval(x, y) * fv).abs() < 1e-14);

        let g = Poly1::affine(SymTensor2::new(1.0, 0.0, 2.0), SymTensor2::new(3.0, 1.0, 0.0));
        let h = g.mul_scalar(&Poly1::affine(0.0, 1.0));
        let v = h.eval(0.5);
        let expect = SymTensor2::new(2.0, 0.5, 1.0) * 0.5;
        assert!((v - expect).max_abs() < 1e-15);
        let c = g.compose_affine(1.0, -1.0);
        assert!((c.eval(0.0) - g.eval(1.0)).max_abs() < 1e-15);
    }

    #[test]
    fn nodal_values_of_affine() {
        let p = Poly2::affine(1.0, 2.0, 5.0);
        assert_eq!(p.nodal_values(), vec![1.0, 2.0, 5.0]);
        assert_eq!(Poly1::affine(1.0, 3.0).nodal_values(), vec![1.0, 3.0]);
        assert_eq!(Poly1::constant(4.0).nodal_values(), vec![4.0, 4.0]);
    }
}
