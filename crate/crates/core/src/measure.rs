//! Tensor-valued Radon measures made of three mutually singular parts:
//! densities on triangles, line densities on segments, and atoms.
//!
//! Densities are polynomials in the local coordinates of their carrier
//! (barycentric-style `(ξ, η)` for triangles, `s ∈ [0, 1]` for segments), so
//! multiplication by a piecewise-affine field stays exact.

use std::cell::RefCell;
use std::io::Write;

use crate::error::{Error, Result};
use crate::fields::ScalarP1Field;
use crate::poly::{Poly1, Poly2};
use crate::quadrature::{
    integrate_reference_triangle, integrate_reference_triangle_with, integrate_unit_interval, integrate_unit_interval_with, Adaptive, Tri,
};
use crate::tensor::{Point, SymTensor2, Vec2};

/// Relative tolerance for integrals of non-constant densities.
const REL_TOL: f64 = 1e-13;
const PART_BUDGET: usize = 400_000;
const PAIR_BUDGET: usize = 4_000_000;

/// Triangle `vertices` with density `density(ξ, η)` at
/// `x = v0 + ξ (v1 - v0) + η (v2 - v0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub vertices: [Point; 3],
    pub density: Poly2<SymTensor2>,
}

impl Cell {
    pub fn new(vertices: [Point; 3], density: Poly2<SymTensor2>) -> Self {
        Cell { vertices, density }
    }

    pub fn constant(vertices: [Point; 3], density: SymTensor2) -> Self {
        Cell { vertices, density: Poly2::constant(density) }
    }

    pub fn area(&self) -> f64 {
        let [a, b, c] = self.vertices;
        0.5 * (b - a).cross(c - a).abs()
    }

    pub fn point(&self, xi: f64, eta: f64) -> Point {
        let [a, b, c] = self.vertices;
        a + (b - a) * xi + (c - a) * eta
    }

    pub fn centroid(&self) -> Point {
        self.point(1.0 / 3.0, 1.0 / 3.0)
    }

    /// The same cell with its vertices listed in the order `perm`.
    fn permuted(&self, perm: [usize; 3]) -> Cell {
        const LOCAL: [(f64, f64); 3] = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)];
        let l = perm.map(|k| LOCAL[k]);
        let a = [l[0].0, l[1].0 - l[0].0, l[2].0 - l[0].0];
        let b = [l[0].1, l[1].1 - l[0].1, l[2].1 - l[0].1];
        Cell {
            vertices: perm.map(|k| self.vertices[k]),
            density: self.density.compose_affine(a, b),
        }
    }

    fn canonical(&self) -> Cell {
        let mut perm = [0, 1, 2];
        perm.sort_by(|&i, &j| lex(self.vertices[i], self.vertices[j]));
        if perm == [0, 1, 2] {
            self.clone()
        } else {
            self.permuted(perm)
        }
    }
}

/// Segment `a → b` with line density `density(s)` at `a + s (b - a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
    pub density: Poly1<SymTensor2>,
}

impl Segment {
    pub fn new(a: Point, b: Point, density: Poly1<SymTensor2>) -> Self {
        Segment { a, b, density }
    }

    pub fn constant(a: Point, b: Point, density: SymTensor2) -> Self {
        Segment { a, b, density: Poly1::constant(density) }
    }

    pub fn affine(a: Point, b: Point, da: SymTensor2, db: SymTensor2) -> Self {
        Segment { a, b, density: Poly1::affine(da, db) }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn point(&self, s: f64) -> Point {
        self.a.lerp(self.b, s)
    }

    pub fn reversed(&self) -> Segment {
        Segment { a: self.b, b: self.a, density: self.density.compose_affine(1.0, -1.0) }
    }

    /// Piece on the parameter interval `[s0, s1]`, reparametrised to `[0, 1]`.
    pub fn piece(&self, s0: f64, s1: f64) -> Segment {
        Segment {
            a: self.point(s0),
            b: self.point(s1),
            density: self.density.compose_affine(s0, s1 - s0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub at: Point,
    pub mass: SymTensor2,
}

/// A pointwise integrand `H(x, ξ)` evaluated on unit directions `ξ`.
pub trait Integrand {
    fn value(&self, x: Point, direction: SymTensor2) -> f64;
}

impl<F: Fn(Point, SymTensor2) -> f64> Integrand for F {
    fn value(&self, x: Point, direction: SymTensor2) -> f64 {
        self(x, direction)
    }
}

/// `H(x, ξ) = |ξ|`.
pub struct NormIntegrand;

impl Integrand for NormIntegrand {
    fn value(&self, _x: Point, direction: SymTensor2) -> f64 {
        direction.norm()
    }
}

/// A continuous tensor field used to probe measures weakly.
pub trait TestField: Send + Sync {
    fn eval(&self, x: Point) -> SymTensor2;
    /// A Lipschitz constant of `eval` in the Frobenius norm.
    fn lipschitz(&self) -> f64;
    /// For a disc that meets a locus where the field is not smooth, a bound
    /// on the sup-distance between the field and a low-degree polynomial on
    /// that disc. `None` where the field is smooth.
    fn roughness(&self, _center: Point, _radius: f64) -> Option<f64> {
        None
    }
}

/// Scalar profile shapes for [`ProfileField`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    /// `(1 - |x - c|²/r²)³` inside the disc, zero outside.
    Bump { center: Point, radius: f64 },
    /// Equal to one within distance `inner` of the segment `[a, b]`,
    /// decaying like the bump to zero at distance `outer`.
    Plateau { a: Point, b: Point, inner: f64, outer: f64 },
}

/// Largest slope of `s ↦ (1 - s²)³` on `[0, 1]`, attained at `s = 1/√5`.
const BUMP_SLOPE: f64 = 1.717_300_846_117_219_5;

fn bump(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        let t = 1.0 - s * s;
        t * t * t
    }
}

impl Profile {
    pub fn value(&self, x: Point) -> f64 {
        match *self {
            Profile::Bump { center, radius } => bump(x.dist(center) / radius),
            Profile::Plateau { a, b, inner, outer } => {
                let d = dist_to_segment(x, a, b);
                if d <= inner {
                    1.0
                } else {
                    bump((d - inner) / (outer - inner))
                }
            }
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            Profile::Bump { radius, .. } => BUMP_SLOPE / radius,
            Profile::Plateau { inner, outer, .. } => BUMP_SLOPE / (outer - inner),
        }
    }

    /// Bound for [`TestField::roughness`] of `ψ`: near the outer edge of the
    /// support `ψ` deviates from its polynomial inner branch by at most
    /// `((2 + δ)δ)³` in scaled distance `δ`; near the inner plateau edge it
    /// deviates from the constant 1 by at most `3δ²`.
    pub fn roughness(&self, x: Point, rho: f64) -> Option<f64> {
        let outer_edge = |d: f64, r: f64| {
            if (d - r).abs() <= rho {
                let t = 2.0 * rho / r;
                Some(((2.0 + t) * t).powi(3))
            } else {
                None
            }
        };
        match *self {
            Profile::Bump { center, radius } => outer_edge(x.dist(center), radius),
            Profile::Plateau { a, b, inner, outer } => {
                let d = dist_to_segment(x, a, b);
                let w = outer - inner;
                let near_inner = if (d - inner).abs() <= rho { Some(3.0 * (2.0 * rho / w).powi(2)) } else { None };
                match (outer_edge(d - inner, w), near_inner) {
                    (Some(p), Some(q)) => Some(p.max(q)),
                    (p, q) => p.or(q),
                }
            }
        }
    }
}

/// `φ(x) = ψ(x) T` for a scalar profile `ψ` and constant tensor `T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileField {
    pub profile: Profile,
    pub tensor: SymTensor2,
}

impl ProfileField {
    pub fn bump(center: Point, radius: f64, tensor: SymTensor2) -> Self {
        ProfileField { profile: Profile::Bump { center, radius }, tensor }
    }

    pub fn plateau(a: Point, b: Point, inner: f64, outer: f64, tensor: SymTensor2) -> Self {
        ProfileField { profile: Profile::Plateau { a, b, inner, outer }, tensor }
    }
}

impl TestField for ProfileField {
    fn eval(&self, x: Point) -> SymTensor2 {
        self.tensor * self.profile.value(x)
    }

    fn lipschitz(&self) -> f64 {
        self.profile.lipschitz() * self.tensor.norm()
    }

    fn roughness(&self, center: Point, radius: f64) -> Option<f64> {
        self.profile.roughness(center, radius).map(|r| r * self.tensor.norm())
    }
}

/// Closure-backed test field.
pub struct FnField<F> {
    pub f: F,
    pub lipschitz: f64,
}

impl<F: Fn(Point) -> SymTensor2 + Send + Sync> TestField for FnField<F> {
    fn eval(&self, x: Point) -> SymTensor2 {
        (self.f)(x)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

pub fn dist_to_segment(x: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let l2 = d.dot(d);
    let s = if l2 == 0.0 { 0.0 } else { ((x - a).dot(d) / l2).clamp(0.0, 1.0) };
    x.dist(a + d * s)
}

/// Value of a weak pairing with its quadrature error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pairing {
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiscreteMeasure {
    cells: Vec<Cell>,
    segments: Vec<Segment>,
    atoms: Vec<Atom>,
}

fn lex(p: Point, q: Point) -> std::cmp::Ordering {
    p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y))
}

impl DiscreteMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn atom(at: Point, mass: SymTensor2) -> Self {
        DiscreteMeasure { atoms: vec![Atom { at, mass }], ..Default::default() }
    }

    pub fn from_parts(cells: Vec<Cell>, segments: Vec<Segment>, atoms: Vec<Atom>) -> Self {
        DiscreteMeasure { cells, segments, atoms }
    }

    pub fn push_cell(&mut self, c: Cell) {
        self.cells.push(c);
    }

    pub fn push_segment(&mut self, s: Segment) {
        self.segments.push(s);
    }

    pub fn push_atom(&mut self, at: Point, mass: SymTensor2) {
        self.atoms.push(Atom { at, mass });
    }

    pub fn with_cell(mut self, c: Cell) -> Self {
        self.push_cell(c);
        self
    }

    pub fn with_segment(mut self, s: Segment) -> Self {
        self.push_segment(s);
        self
    }

    pub fn with_atom(mut self, at: Point, mass: SymTensor2) -> Self {
        self.push_atom(at, mass);
        self
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty() && self.segments.is_empty() && self.atoms.is_empty()
    }

    /// Every density or mass coefficient, for structural checks.
    pub fn coefficients(&self) -> impl Iterator<Item = SymTensor2> + '_ {
        let c = self.cells.iter().flat_map(|c| c.density.nodal_values());
        let s = self.segments.iter().flat_map(|s| s.density.nodal_values());
        let a = self.atoms.iter().map(|a| a.mass);
        c.chain(s).chain(a)
    }

    pub fn scale(&self, f: f64) -> Self {
        DiscreteMeasure {
            cells: self.cells.iter().map(|c| Cell::new(c.vertices, c.density.scale(f))).collect(),
            segments: self.segments.iter().map(|s| Segment::new(s.a, s.b, s.density.scale(f))).collect(),
            atoms: self.atoms.iter().map(|a| Atom { at: a.at, mass: a.mass * f }).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Applies a linear map to every density and mass.
    pub fn map(&self, f: impl Fn(SymTensor2) -> SymTensor2 + Copy) -> Self {
        DiscreteMeasure {
            cells: self.cells.iter().map(|c| Cell::new(c.vertices, c.density.map(f))).collect(),
            segments: self.segments.iter().map(|s| Segment::new(s.a, s.b, s.density.map(f))).collect(),
            atoms: self.atoms.iter().map(|a| Atom { at: a.at, mass: f(a.mass) }).collect(),
        }
    }

    /// Diameter of the bounding box of all supports.
    pub fn extent(&self) -> f64 {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut grow = |p: Point| {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        };
        self.cells.iter().flat_map(|c| c.vertices).for_each(&mut grow);
        self.segments.iter().flat_map(|s| [s.a, s.b]).for_each(&mut grow);
        self.atoms.iter().map(|a| a.at).for_each(&mut grow);
        if lo.x > hi.x {
            0.0
        } else {
            (hi - lo).norm()
        }
    }

    /// `|μ|(Ω)`.
    pub fn total_variation(&self) -> f64 {
        let mut total: f64 = self.atoms.iter().map(|a| a.mass.norm()).sum();
        let mut rest = DiscreteMeasure::zero();
        for s in &self.segments {
            if s.density.is_constant() {
                total += s.length() * s.density.eval(0.0).norm();
            } else {
                rest.segments.push(s.clone());
            }
        }
        for c in &self.cells {
            if c.density.is_constant() {
                total += c.area() * c.density.eval(0.0, 0.0).norm();
            } else {
                rest.cells.push(c.clone());
            }
        }
        // the norm integrand is non-negative and finite, so only budget
        // exhaustion can occur and the best estimate is kept
        total + rest.integrate_parts(&NormIntegrand, true).unwrap_or(0.0)
    }

    /// `∫ H(x, dμ/d|μ|) d|μ|`.
    pub fn convex_functional<H: Integrand + ?Sized>(&self, h: &H) -> Result<f64> {
        self.integrate_parts(h, false)
    }

    fn integrate_parts<H: Integrand + ?Sized>(&self, h: &H, lenient: bool) -> Result<f64> {
        let bad: RefCell<Option<(f64, Point)>> = RefCell::new(None);
        let eval = |x: Point, d: SymTensor2| -> f64 {
            let n = d.norm();
            if n == 0.0 {
                return 0.0;
            }
            let v = h.value(x, d / n);
            if !(v >= 0.0) || !v.is_finite() {
                bad.borrow_mut().get_or_insert((v, x));
                return 0.0;
            }
            v * n
        };
        let mut total = 0.0;
        for a in &self.atoms {
            total += eval(a.at, a.mass);
        }
        for s in &self.segments {
            let len = s.length();
            if len == 0.0 {
                continue;
            }
            let scale = s.density.magnitude();
            if scale == 0.0 {
                continue;
            }
            let opts = Adaptive { tol: REL_TOL * scale, max_evals: PART_BUDGET };
            let r = integrate_unit_interval(|t| eval(s.point(t), s.density.eval(t)), opts);
            total += len * settle(r, lenient, opts.tol)?;
        }
        for c in &self.cells {
            let area = c.area();
            let scale = c.density.magnitude();
            if area == 0.0 || scale == 0.0 {
                continue;
            }
            let opts = Adaptive { tol: REL_TOL * scale, max_evals: PART_BUDGET };
            let r = integrate_reference_triangle(|x, y| eval(c.point(x, y), c.density.eval(x, y)), opts);
            total += 2.0 * area * settle(r, lenient, opts.tol)?;
        }
        if let Some((value, at)) = bad.into_inner() {
            return Err(Error::BadIntegrand { value, at });
        }
        Ok(total)
    }

    /// `∫ φ : dμ`, refined until the estimated quadrature error is below `tol`.
    pub fn pair(&self, phi: &dyn TestField, tol: f64) -> Result<Pairing> {
        let mut value = 0.0;
        let mut error = 0.0;
        let mut evals = 0;
        for a in &self.atoms {
            value += phi.eval(a.at).contract(a.mass);
        }
        let weights: Vec<f64> = self
            .segments
            .iter()
            .map(|s| s.density.magnitude() * s.length())
            .chain(self.cells.iter().map(|c| c.density.magnitude() * c.area()))
            .collect();
        let total_weight: f64 = weights.iter().sum();
        if total_weight == 0.0 {
            return Ok(Pairing { value, error });
        }
        let mut fail = false;
        for (s, w) in self.segments.iter().zip(&weights) {
            if *w == 0.0 {
                continue;
            }
            let len = s.length();
            let opts = Adaptive { tol: tol * w / total_weight / len, max_evals: PAIR_BUDGET };
            let dmax = s.density.coeffs().iter().map(|c| c.norm()).sum::<f64>();
            let floor = |a: f64, b: f64| {
                let rho = 0.5 * (b - a) * len;
                phi.roughness(s.point(0.5 * (a + b)), rho).map_or(0.0, |r| 2.0 * r * dmax * (b - a))
            };
            let r = integrate_unit_interval_with(|t| phi.eval(s.point(t)).contract(s.density.eval(t)), floor, opts);
            let est = r.unwrap_or_else(|e| {
                fail = true;
                e
            });
            value += len * est.value;
            error += len * est.error;
            evals += est.evals;
        }
        for (c, w) in self.cells.iter().zip(&weights[self.segments.len()..]) {
            if *w == 0.0 {
                continue;
            }
            let jac = 2.0 * c.area();
            let opts = Adaptive { tol: tol * w / total_weight / jac, max_evals: PAIR_BUDGET };
            let dmax = c.density.nodal_values().iter().map(|d| d.norm()).fold(0.0, f64::max) * (1 + c.density.degree()) as f64;
            let floor = |t: &Tri| {
                let pts = t.map(|(x, y)| c.point(x, y));
                let mid = (pts[0] + pts[1] + pts[2]) / 3.0;
                let rho = pts.iter().map(|p| p.dist(mid)).fold(0.0, f64::max);
                let area = 0.5 * ((t[1].0 - t[0].0) * (t[2].1 - t[0].1) - (t[2].0 - t[0].0) * (t[1].1 - t[0].1)).abs();
                phi.roughness(mid, rho).map_or(0.0, |r| 2.0 * r * dmax * area)
            };
            let r = integrate_reference_triangle_with(|x, y| phi.eval(c.point(x, y)).contract(c.density.eval(x, y)), floor, opts);
            let est = r.unwrap_or_else(|e| {
                fail = true;
                e
            });
            value += jac * est.value;
            error += jac * est.error;
            evals += est.evals;
        }
        if fail && error > tol {
            return Err(Error::Quadrature { tol, achieved: error, evals });
        }
        Ok(Pairing { value, error })
    }

    /// Sum of two measures. Coincident atoms, cells with the same vertex set,
    /// and collinear overlapping segments are merged; parts whose density
    /// cancels are dropped.
    pub fn add(&self, other: &DiscreteMeasure) -> DiscreteMeasure {
        let mut all = self.clone();
        all.cells.extend(other.cells.iter().cloned());
        all.segments.extend(other.segments.iter().cloned());
        all.atoms.extend(other.atoms.iter().cloned());
        all.merged()
    }

    /// Sum of many measures, merged once.
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a DiscreteMeasure>) -> DiscreteMeasure {
        let mut all = DiscreteMeasure::zero();
        for m in items {
            all.cells.extend(m.cells.iter().cloned());
            all.segments.extend(m.segments.iter().cloned());
            all.atoms.extend(m.atoms.iter().cloned());
        }
        all.merged()
    }

    /// Canonical form: merges coincident parts and drops vanishing ones.
    pub fn merged(&self) -> DiscreteMeasure {
        let tol = 1e-12 * self.extent().max(f64::MIN_POSITIVE);
        DiscreteMeasure {
            cells: merge_cells(&self.cells, tol),
            segments: merge_segments(&self.segments, tol),
            atoms: merge_atoms(&self.atoms, tol),
        }
    }

    /// Writes one line per part.
    pub fn write_text(&self, mut w: impl Write) -> Result<()> {
        for (i, c) in self.cells.iter().enumerate() {
            if c.density.degree() == 0 {
                writeln!(w, "cell {i} {}", c.density.eval(0.0, 0.0))?;
            } else {
                let v = c.vertices;
                write!(w, "cellp {i} {} {} {} {} {} {} {}", c.density.degree(), v[0].x, v[0].y, v[1].x, v[1].y, v[2].x, v[2].y)?;
                for t in c.density.nodal_values() {
                    write!(w, " {t}")?;
                }
                writeln!(w)?;
            }
        }
        for s in &self.segments {
            if s.density.degree() <= 1 {
                writeln!(w, "seg {} {} {} {} {} {}", s.a.x, s.a.y, s.b.x, s.b.y, s.density.eval(0.0), s.density.eval(1.0))?;
            } else {
                write!(w, "segp {} {} {} {} {}", s.density.degree(), s.a.x, s.a.y, s.b.x, s.b.y)?;
                for t in s.density.nodal_values() {
                    write!(w, " {t}")?;
                }
                writeln!(w)?;
            }
        }
        for a in &self.atoms {
            writeln!(w, "atom {} {} {}", a.at.x, a.at.y, a.mass)?;
        }
        Ok(())
    }

    /// Multiplies every part by the pointwise values of `alpha`. Segments are
    /// split where they cross mesh edges so that `alpha` is affine on each
    /// piece.
    pub fn scale_by_field(&self, alpha: &ScalarP1Field) -> Result<DiscreteMeasure> {
        let mesh = alpha.mesh();
        let mut out = DiscreteMeasure::zero();
        for (i, c) in self.cells.iter().enumerate() {
            let (t, _) = mesh.locate(c.centroid())?;
            let vals = alpha.triangle_values(t);
            let mut at = [0.0; 3];
            for (k, v) in c.vertices.iter().enumerate() {
                let b = mesh.barycentric(t, *v);
                if b.iter().any(|&l| l < -1e-9) {
                    return Err(Error::CellNotResolved(i));
                }
                at[k] = b[0] * vals[0] + b[1] * vals[1] + b[2] * vals[2];
            }
            let density = c.density.mul_scalar(&Poly2::affine(at[0], at[1], at[2]));
            if density.magnitude() != 0.0 {
                out.cells.push(Cell::new(c.vertices, density));
            }
        }
        for s in &self.segments {
            for (s0, s1, t) in mesh.segment_pieces(s.a, s.b)? {
                let vals = alpha.triangle_values(t);
                let value_at = |p: Point| {
                    let b = mesh.barycentric(t, p);
                    b[0] * vals[0] + b[1] * vals[1] + b[2] * vals[2]
                };
                let piece = s.piece(s0, s1);
                let factor = Poly1::affine(value_at(piece.a), value_at(piece.b));
                let density = piece.density.mul_scalar(&factor);
                if density.magnitude() != 0.0 {
                    out.segments.push(Segment::new(piece.a, piece.b, density));
                }
            }
        }
        for a in &self.atoms {
            let m = a.mass * alpha.eval(a.at)?;
            if m.max_abs() != 0.0 {
                out.atoms.push(Atom { at: a.at, mass: m });
            }
        }
        Ok(out)
    }
}

/// Negligibility test for a merged sum of parts.
fn cancels(sum_mag: f64, parts_mag: f64) -> bool {
    sum_mag == 0.0 || sum_mag <= 1e-13 * parts_mag
}

/// Groups items whose sort keys agree within `tol`; `same` refines the test.
fn group_sorted<T>(items: &mut [T], key: impl Fn(&T) -> f64, same: impl Fn(&T, &T) -> bool, tol: f64) -> Vec<Vec<usize>> {
    items.sort_by(|a, b| key(a).total_cmp(&key(b)));
    let mut used = vec![false; items.len()];
    let mut groups = Vec::new();
    for i in 0..items.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut g = vec![i];
        let ki = key(&items[i]);
        for j in i + 1..items.len() {
            if key(&items[j]) - ki > tol {
                break;
            }
            if !used[j] && same(&items[i], &items[j]) {
                used[j] = true;
                g.push(j);
            }
        }
        groups.push(g);
    }
    groups
}

fn close(p: Point, q: Point, tol: f64) -> bool {
    (p.x - q.x).abs() <= tol && (p.y - q.y).abs() <= tol
}

fn merge_atoms(atoms: &[Atom], tol: f64) -> Vec<Atom> {
    let mut items = atoms.to_vec();
    let groups = group_sorted(&mut items, |a| a.at.x, |a, b| close(a.at, b.at, tol), tol);
    let mut out = Vec::new();
    for g in groups {
        let mass = g.iter().fold(SymTensor2::ZERO, |m, &i| m + items[i].mass);
        let parts = g.iter().map(|&i| items[i].mass.max_abs()).fold(0.0, f64::max);
        if !cancels(mass.max_abs(), parts) {
            out.push(Atom { at: items[g[0]].at, mass });
        }
    }
    out.sort_by(|a, b| lex(a.at, b.at));
    out
}

fn merge_cells(cells: &[Cell], tol: f64) -> Vec<Cell> {
    let mut items: Vec<Cell> = cells.iter().map(Cell::canonical).collect();
    let same = |a: &Cell, b: &Cell| (0..3).all(|k| close(a.vertices[k], b.vertices[k], tol));
    let groups = group_sorted(&mut items, |c| c.vertices[0].x, same, tol);
    let mut out = Vec::new();
    for g in groups {
        let first = &items[g[0]];
        let density = g[1..].iter().fold(first.density.clone(), |d, &i| d.add(&items[i].density));
        let parts = g.iter().map(|&i| items[i].density.magnitude()).fold(0.0, f64::max);
        let mag = density.magnitude();
        if !cancels(mag, parts) {
            out.push(Cell::new(first.vertices, density));
        }
    }
    out
}

fn collinear_overlap(s: &Segment, o: &Segment, tol: f64) -> Option<(f64, f64)> {
    let d = s.b - s.a;
    let len = d.norm();
    if len == 0.0 {
        return None;
    }
    let off = |p: Point| d.cross(p - s.a).abs() / len;
    if off(o.a) > tol || off(o.b) > tol {
        return None;
    }
    let proj = |p: Point| (p - s.a).dot(d) / (len * len);
    let (u, v) = (proj(o.a), proj(o.b));
    let (lo, hi) = (u.min(v), u.max(v));
    let eps = tol / len;
    if hi <= eps || lo >= 1.0 - eps {
        return None;
    }
    Some((lo, hi))
}

fn merge_segments(segs: &[Segment], tol: f64) -> Vec<Segment> {
    // split each segment at the endpoints of collinear overlapping ones
    let mut pieces = Vec::new();
    for (i, s) in segs.iter().enumerate() {
        let len = s.length();
        if len <= tol {
            continue;
        }
        let eps = tol / len;
        let mut cuts = vec![0.0, 1.0];
        for (j, o) in segs.iter().enumerate() {
            if i == j {
                continue;
            }
            if let Some((lo, hi)) = collinear_overlap(s, o, tol) {
                for c in [lo, hi] {
                    if c > eps && c < 1.0 - eps {
                        cuts.push(c);
                    }
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|p, q| (*p - *q).abs() <= eps);
        for w in cuts.windows(2) {
            let p = if w[0] == 0.0 && w[1] == 1.0 { s.clone() } else { s.piece(w[0], w[1]) };
            // canonical orientation: lexicographically smaller endpoint first
            let p = if lex(p.a, p.b) == std::cmp::Ordering::Greater { p.reversed() } else { p };
            pieces.push(p);
        }
    }
    let same = |a: &Segment, b: &Segment| close(a.a, b.a, tol) && close(a.b, b.b, tol);
    let groups = group_sorted(&mut pieces, |s| s.a.x, same, tol);
    let mut out = Vec::new();
    for g in groups {
        let first = &pieces[g[0]];
        let density = g[1..].iter().fold(first.density.clone(), |d, &i| d.add(&pieces[i].density));
        let parts = g.iter().map(|&i| pieces[i].density.magnitude()).fold(0.0, f64::max);
        let mag = density.magnitude();
        if !cancels(mag, parts) {
            out.push(Segment::new(first.a, first.b, density.trim()));
        }
    }
    out
}

fn settle(r: std::result::Result<crate::quadrature::Estimate, crate::quadrature::Estimate>, lenient: bool, tol: f64) -> Result<f64> {
    match r {
        Ok(e) => Ok(e.value),
        Err(e) if lenient => Ok(e.value),
        Err(e) => Err(Error::Quadrature { tol, achieved: e.error, evals: e.evals }),
    }
}
