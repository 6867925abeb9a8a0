//! Continuous piecewise-affine scalar fields and piecewise-defined vector
//! fields on a [`Mesh`], with their symmetrised gradients as measures.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::{Cell, DiscreteMeasure, Segment};
use crate::mesh::Mesh;
use crate::poly::Poly2;
use crate::quadrature::{integrate_reference_triangle, Adaptive};
use crate::tensor::{sym_outer, Point, SymTensor2, Vec2};

/// One value per vertex, interpolated linearly on each triangle.
#[derive(Clone, Debug)]
pub struct ScalarP1Field {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl ScalarP1Field {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::FieldMismatch(format!("{} values for {} vertices", values.len(), mesh.num_vertices())));
        }
        Ok(ScalarP1Field { mesh, values })
    }

    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn(Point) -> f64) -> Self {
        let values = mesh.vertices().iter().map(|&p| f(p)).collect();
        ScalarP1Field { mesh, values }
    }

    pub fn constant(mesh: Arc<Mesh>, c: f64) -> Self {
        let n = mesh.num_vertices();
        ScalarP1Field { mesh, values: vec![c; n] }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn triangle_values(&self, t: usize) -> [f64; 3] {
        self.mesh.triangles()[t].map(|v| self.values[v])
    }

    pub fn centroid_value(&self, t: usize) -> f64 {
        self.triangle_values(t).iter().sum::<f64>() / 3.0
    }

    /// Restriction to triangle `t` in its local coordinates.
    pub fn local(&self, t: usize) -> Poly2<f64> {
        let [a, b, c] = self.triangle_values(t);
        Poly2::affine(a, b, c)
    }

    pub fn eval(&self, p: Point) -> Result<f64> {
        let (t, b) = self.mesh.locate(p)?;
        let v = self.triangle_values(t);
        Ok(b[0] * v[0] + b[1] * v[1] + b[2] * v[2])
    }

    pub fn gradient_on(&self, t: usize) -> Vec2 {
        let g = self.mesh.basis_gradients(t);
        let v = self.triangle_values(t);
        // differences make constants exact
        g[1] * (v[1] - v[0]) + g[2] * (v[2] - v[0])
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∫ |∇α|^q`, exact for piecewise-constant gradients.
    pub fn gradient_lq(&self, q: f64) -> f64 {
        (0..self.mesh.num_triangles()).map(|t| self.mesh.area(t) * self.gradient_on(t).norm().powf(q)).sum()
    }

    /// `∫ |∇α|²`.
    pub fn dirichlet_integral(&self) -> f64 {
        (0..self.mesh.num_triangles())
            .map(|t| {
                let g = self.gradient_on(t);
                self.mesh.area(t) * g.dot(g)
            })
            .sum()
    }

    /// `∫ α²`, exact.
    pub fn l2_norm_sq(&self) -> f64 {
        (0..self.mesh.num_triangles())
            .map(|t| {
                let [a, b, c] = self.triangle_values(t);
                self.mesh.area(t) / 6.0 * (a * a + b * b + c * c + a * b + b * c + c * a)
            })
            .sum()
    }

    /// Writes `vertex_id,x,y,value`.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["vertex_id", "x", "y", "value"])?;
        for (i, (p, v)) in self.mesh.vertices().iter().zip(&self.values).enumerate() {
            w.write_record([i.to_string(), p.x.to_string(), p.y.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-triangle gradients of `alpha`.
pub fn gradient(alpha: &ScalarP1Field) -> Vec<Vec2> {
    (0..alpha.mesh.num_triangles()).map(|t| alpha.gradient_on(t)).collect()
}

/// Affine piece `s ↦ v0 + (v1 - v0)(s - s0)/(s1 - s0)` on `[s0, s1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffinePiece {
    pub s0: f64,
    pub s1: f64,
    pub v0: f64,
    pub v1: f64,
}

/// A continuous piecewise-affine function of the segment parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseAffine {
    pub pieces: Vec<AffinePiece>,
}

impl PiecewiseAffine {
    pub fn eval(&self, s: f64) -> f64 {
        let i = self.pieces.partition_point(|p| p.s1 < s).min(self.pieces.len() - 1);
        let p = self.pieces[i];
        let w = (s - p.s0) / (p.s1 - p.s0);
        p.v0 + (p.v1 - p.v0) * w
    }
}

/// Values of `alpha` along `a → b`, split where the segment crosses mesh edges.
pub fn trace_on_segment(alpha: &ScalarP1Field, a: Point, b: Point) -> Result<PiecewiseAffine> {
    let mesh = &alpha.mesh;
    let pieces = mesh
        .segment_pieces(a, b)?
        .into_iter()
        .map(|(s0, s1, t)| {
            let v = alpha.triangle_values(t);
            let at = |s: f64| {
                let l = mesh.barycentric(t, a.lerp(b, s));
                l[0] * v[0] + l[1] * v[1] + l[2] * v[2]
            };
            AffinePiece { s0, s1, v0: at(s0), v1: at(s1) }
        })
        .collect();
    Ok(PiecewiseAffine { pieces })
}

/// A polygonal region carrying a constant vector value.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub polygon: Vec<Point>,
    pub value: Vec2,
}

/// Point-in-polygon test. Points within `|tol|` of the boundary count as
/// inside when `tol ≥ 0` and as outside when `tol < 0`.
pub fn polygon_contains(poly: &[Point], p: Point, tol: f64) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if crate::measure::dist_to_segment(p, a, b) <= tol.abs() {
            return tol >= 0.0;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Displacement-like vector fields on a mesh.
#[derive(Clone, Debug)]
pub enum VectorFieldPW {
    /// Continuous, one vector per vertex.
    P1 { mesh: Arc<Mesh>, values: Vec<Vec2> },
    /// Constant on each polygonal region and zero elsewhere; every triangle
    /// lies in at most one region.
    PiecewiseConstant { mesh: Arc<Mesh>, regions: Vec<Region>, region_of: Vec<Option<usize>> },
    /// Independent polynomial on each triangle, in local coordinates.
    Broken { mesh: Arc<Mesh>, pieces: Vec<Poly2<Vec2>> },
}

impl VectorFieldPW {
    pub fn p1(mesh: Arc<Mesh>, values: Vec<Vec2>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::FieldMismatch(format!("{} values for {} vertices", values.len(), mesh.num_vertices())));
        }
        Ok(VectorFieldPW::P1 { mesh, values })
    }

    pub fn p1_from_fn(mesh: Arc<Mesh>, f: impl Fn(Point) -> Vec2) -> Self {
        let values = mesh.vertices().iter().map(|&p| f(p)).collect();
        VectorFieldPW::P1 { mesh, values }
    }

    /// Checks that every triangle lies inside exactly one region or
    /// outside all of them.
    pub fn piecewise_constant(mesh: Arc<Mesh>, regions: Vec<Region>) -> Result<Self> {
        let tol = 1e-12 * mesh.diameter();
        let mut region_of = vec![None; mesh.num_triangles()];
        for (t, slot) in region_of.iter_mut().enumerate() {
            let pts = mesh.triangle_points(t);
            let mut probes = pts.to_vec();
            for i in 0..3 {
                probes.push((pts[i] + pts[(i + 1) % 3]) * 0.5);
                probes.push(pts[i] * (2.0 / 3.0) + pts[(i + 1) % 3] * (1.0 / 6.0) + pts[(i + 2) % 3] * (1.0 / 6.0));
            }
            probes.push(mesh.centroid(t));
            for (r, reg) in regions.iter().enumerate() {
                let inside = |p: Point| polygon_contains(&reg.polygon, p, tol);
                let strictly = |p: Point| polygon_contains(&reg.polygon, p, -tol);
                if probes.iter().all(|&p| inside(p)) {
                    if slot.is_some() {
                        return Err(Error::RegionNotResolved(t));
                    }
                    *slot = Some(r);
                    continue;
                }
                let corner_inside = reg.polygon.iter().any(|&q| {
                    let b = mesh.barycentric(t, q);
                    b.iter().all(|&l| l > 1e-12) || (b.iter().all(|&l| l > -1e-12) && b.iter().filter(|&&l| l.abs() <= 1e-12).count() == 1)
                });
                if probes.iter().any(|&p| strictly(p)) || corner_inside {
                    return Err(Error::RegionNotResolved(t));
                }
            }
        }
        Ok(VectorFieldPW::PiecewiseConstant { mesh, regions, region_of })
    }

    pub fn broken(mesh: Arc<Mesh>, pieces: Vec<Poly2<Vec2>>) -> Result<Self> {
        if pieces.len() != mesh.num_triangles() {
            return Err(Error::FieldMismatch(format!("{} pieces for {} triangles", pieces.len(), mesh.num_triangles())));
        }
        Ok(VectorFieldPW::Broken { mesh, pieces })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        match self {
            VectorFieldPW::P1 { mesh, .. } | VectorFieldPW::PiecewiseConstant { mesh, .. } | VectorFieldPW::Broken { mesh, .. } => {
                mesh
            }
        }
    }

    /// Restriction to triangle `t` in its local coordinates.
    pub fn local(&self, t: usize) -> Poly2<Vec2> {
        match self {
            VectorFieldPW::P1 { mesh, values } => {
                let [a, b, c] = mesh.triangles()[t].map(|v| values[v]);
                Poly2::affine(a, b, c)
            }
            VectorFieldPW::PiecewiseConstant { regions, region_of, .. } => {
                Poly2::constant(region_of[t].map(|r| regions[r].value).unwrap_or(Vec2::ZERO))
            }
            VectorFieldPW::Broken { pieces, .. } => pieces[t].clone(),
        }
    }

    /// Value at `p`, taken from one triangle containing it.
    pub fn eval(&self, p: Point) -> Result<Vec2> {
        let (t, b) = self.mesh().locate(p)?;
        Ok(self.local(t).eval(b[1], b[2]))
    }

    /// `∫ |u|^r` for `r ≥ 1`.
    pub fn lr_norm_pow(&self, r: f64) -> f64 {
        let mesh = self.mesh();
        let opts = Adaptive { tol: 1e-14, max_evals: 100_000 };
        (0..mesh.num_triangles())
            .map(|t| {
                let u = self.local(t);
                let area = mesh.area(t);
                if u.is_constant() {
                    return area * u.eval(0.0, 0.0).norm().powf(r);
                }
                let est = integrate_reference_triangle(|x, y| u.eval(x, y).norm().powf(r), opts).unwrap_or_else(|e| e);
                2.0 * area * est.value
            })
            .sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.lr_norm_pow(1.0)
    }

    /// Writes `vertex_id,x,y,ux,uy` for continuous fields and
    /// `triangle_id,x,y,ux,uy` at centroids otherwise.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        match self {
            VectorFieldPW::P1 { mesh, values } => {
                w.write_record(["vertex_id", "x", "y", "ux", "uy"])?;
                for (i, (p, v)) in mesh.vertices().iter().zip(values).enumerate() {
                    w.write_record([i.to_string(), p.x.to_string(), p.y.to_string(), v.x.to_string(), v.y.to_string()])?;
                }
            }
            _ => {
                let mesh = self.mesh();
                w.write_record(["triangle_id", "x", "y", "ux", "uy"])?;
                for t in 0..mesh.num_triangles() {
                    let c = mesh.centroid(t);
                    let v = self.local(t).eval(1.0 / 3.0, 1.0 / 3.0);
                    w.write_record([t.to_string(), c.x.to_string(), c.y.to_string(), v.x.to_string(), v.y.to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Symmetrised gradient of a polynomial piece on triangle `t`.
fn sym_grad_local(mesh: &Mesh, t: usize, u: &Poly2<Vec2>) -> Poly2<SymTensor2> {
    let g = mesh.basis_gradients(t);
    let (u_xi, u_eta) = (u.d_xi(), u.d_eta());
    // ∂u/∂x = u_ξ ∂ξ/∂x + u_η ∂η/∂x with ∇ξ = ∇λ1, ∇η = ∇λ2
    let dx = u_xi.scale(g[1].x).add(&u_eta.scale(g[2].x));
    let dy = u_xi.scale(g[1].y).add(&u_eta.scale(g[2].y));
    dx.zip_map(&dy, |a: Vec2, b: Vec2| SymTensor2::new(a.x, b.y, 0.5 * (b.x + a.y)))
}

/// Local coordinates of mesh vertex `v` in triangle `t`.
fn local_coords(mesh: &Mesh, t: usize, v: usize) -> (f64, f64) {
    match mesh.triangles()[t].iter().position(|&w| w == v) {
        Some(0) => (0.0, 0.0),
        Some(1) => (1.0, 0.0),
        Some(2) => (0.0, 1.0),
        _ => unreachable!("vertex {v} not in triangle {t}"),
    }
}

/// `Eu`: the absolutely continuous part `sym ∇u` on every triangle plus
/// jump line densities `[u] ⊙ ν` on interior edges, where `ν` is the unit
/// normal pointing out of the edge's first triangle and `[u]` is the value
/// on the side `ν` points into minus the value on the first triangle.
/// Numerically vanishing parts are dropped.
pub fn symmetrized_gradient(u: &VectorFieldPW) -> DiscreteMeasure {
    let mesh = u.mesh();
    let locals: Vec<Poly2<Vec2>> = (0..mesh.num_triangles()).map(|t| u.local(t)).collect();
    let scale = locals.iter().map(|p| p.magnitude()).fold(0.0, f64::max);
    let mut out = DiscreteMeasure::zero();
    for (t, p) in locals.iter().enumerate() {
        let d = sym_grad_local(mesh, t, p);
        let h = mesh.diameter();
        if d.magnitude() * h > 1e-13 * scale {
            out.push_cell(Cell::new(mesh.triangle_points(t), d));
        }
    }
    if matches!(u, VectorFieldPW::P1 { .. }) {
        return out;
    }
    for (e, edge) in mesh.edges().iter().enumerate() {
        if edge.is_boundary() {
            continue;
        }
        let [t1, t2] = edge.tris;
        let trace = |t: usize| {
            let (xa, ya) = local_coords(mesh, t, edge.v[0]);
            let (xb, yb) = local_coords(mesh, t, edge.v[1]);
            locals[t].restrict_to_line([xa, xb - xa], [ya, yb - ya])
        };
        let jump = trace(t2).sub(&trace(t1));
        if jump.magnitude() <= 1e-13 * scale {
            continue;
        }
        let nu = mesh.edge_normal(e);
        let vs = mesh.vertices();
        out.push_segment(Segment::new(vs[edge.v[0]], vs[edge.v[1]], jump.map(|c| sym_outer(c, nu))));
    }
    out
}

/// The product field `α u`, exact on every triangle.
pub fn product_field(alpha: &ScalarP1Field, u: &VectorFieldPW) -> Result<VectorFieldPW> {
    if !Arc::ptr_eq(alpha.mesh(), u.mesh()) && alpha.mesh().vertices() != u.mesh().vertices() {
        return Err(Error::FieldMismatch("scalar and vector fields live on different meshes".into()));
    }
    let mesh = u.mesh().clone();
    let pieces = (0..mesh.num_triangles()).map(|t| u.local(t).mul_scalar(&alpha.local(t))).collect();
    VectorFieldPW::broken(mesh, pieces)
}

/// Both sides of `E(α u) = α Eu + ∇α ⊙ u`.
pub fn leibniz_product(alpha: &ScalarP1Field, u: &VectorFieldPW) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    let lhs = symmetrized_gradient(&product_field(alpha, u)?);
    let mesh = u.mesh();
    let mut rhs = symmetrized_gradient(u).scale_by_field(alpha)?;
    for t in 0..mesh.num_triangles() {
        let g = alpha.gradient_on(t);
        let d = u.local(t).map(|c| sym_outer(g, c));
        if d.magnitude() != 0.0 {
            rhs.push_cell(Cell::new(mesh.triangle_points(t), d));
        }
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{ProfileField, TestField};
    use crate::mesh::Split;
    use proptest::prelude::*;

    fn square(n: usize, split: Split) -> Arc<Mesh> {
        Arc::new(Mesh::rectangle(-1.0, 1.0, -1.0, 1.0, n, n, split).unwrap())
    }

    #[test]
    fn gradient_examples() {
        let mesh = square(4, Split::Diagonal);
        let a = ScalarP1Field::from_fn(mesh.clone(), |p| p.x);
        for g in gradient(&a) {
            assert!((g - Vec2::E1).norm() < 1e-14);
        }
        let c = ScalarP1Field::constant(mesh, 3.0);
        assert!(gradient(&c).iter().all(|g| g.norm() < 1e-14));
    }

    #[test]
    fn l2_norm_of_linear_field() {
        // ∫_{[-1,1]²} x² = 4/3
        let mesh = square(3, Split::Crossed);
        let a = ScalarP1Field::from_fn(mesh, |p| p.x);
        assert!((a.l2_norm_sq() - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn affine_field_has_constant_strain() {
        let mesh = square(3, Split::AntiDiagonal);
        let u = VectorFieldPW::p1_from_fn(mesh.clone(), |p| Vec2::new(p.y, p.x) * 0.5);
        let eu = symmetrized_gradient(&u);
        assert_eq!(eu.cells().len(), mesh.num_triangles());
        assert!(eu.segments().is_empty());
        for c in eu.cells() {
            assert!((c.density.eval(0.2, 0.2) - sym_outer(Vec2::E1, Vec2::E2)).max_abs() < 1e-14);
        }
    }

    #[test]
    fn rigid_motion_has_no_strain() {
        let mesh = square(4, Split::Crossed);
        let u = VectorFieldPW::p1_from_fn(mesh, |p| Vec2::new(0.3, -0.1) + p.perp() * 0.7);
        assert!(symmetrized_gradient(&u).is_empty());
    }

    #[test]
    fn indicator_jump_sign() {
        // u = e1 on [0, 0.5] x [-0.5, 0]; on the top side the density is -(e1 ⊙ e2)
        let mesh = square(4, Split::Diagonal);
        let square_poly = vec![Vec2::new(0.0, -0.5), Vec2::new(0.5, -0.5), Vec2::new(0.5, 0.0), Vec2::new(0.0, 0.0)];
        let u = VectorFieldPW::piecewise_constant(mesh, vec![Region { polygon: square_poly, value: Vec2::E1 }]).unwrap();
        let eu = symmetrized_gradient(&u);
        assert!(eu.cells().is_empty());
        let s12 = sym_outer(Vec2::E1, Vec2::E2);
        let top = eu.merged();
        let mut found = 0;
        for s in top.segments() {
            if s.a.y == 0.0 && s.b.y == 0.0 {
                assert!((s.density.eval(0.5) + s12).max_abs() < 1e-15);
                found += 1;
            }
        }
        assert_eq!(found, 1);
        // |Eu| = perimeter pieces: 2 · 0.5 · |e1⊙e2| + 2 · 0.5 · |e1⊙e1|
        let tv = eu.total_variation();
        assert!((tv - (0.5f64.sqrt() + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn unresolved_region_is_rejected() {
        let mesh = square(4, Split::Diagonal);
        let poly = vec![Vec2::new(0.0, 0.0), Vec2::new(0.3, 0.0), Vec2::new(0.3, 0.3), Vec2::new(0.0, 0.3)];
        let r = VectorFieldPW::piecewise_constant(mesh, vec![Region { polygon: poly, value: Vec2::E1 }]);
        assert!(matches!(r, Err(Error::RegionNotResolved(_))));
    }

    #[test]
    fn divergence_theorem_fixes_jump_sign() {
        // ∫ φ : dEu = -∫ u · div φ for φ vanishing on the boundary
        let mesh = square(8, Split::Crossed);
        let poly = vec![Vec2::new(-0.5, -0.25), Vec2::new(0.25, -0.25), Vec2::new(0.25, 0.5), Vec2::new(-0.5, 0.5)];
        let c = Vec2::new(0.7, -0.4);
        let u = VectorFieldPW::piecewise_constant(mesh, vec![Region { polygon: poly, value: c }]).unwrap();
        let t = SymTensor2::new(0.4, -0.2, 0.9);
        let phi = ProfileField::bump(Vec2::new(0.1, 0.05), 0.9, t);
        let lhs = symmetrized_gradient(&u).pair(&phi, 1e-12).unwrap().value;
        // div φ = T ∇ψ; integrate -c · T∇ψ over the rectangle by tensor Gauss
        let g = crate::quadrature::gauss_legendre(12);
        let mut rhs = 0.0;
        let (x0, x1, y0, y1) = (-0.5, 0.25, -0.25, 0.5);
        let panels = 30;
        for i in 0..panels {
            for j in 0..panels {
                let (ax, bx) = (x0 + (x1 - x0) * i as f64 / panels as f64, x0 + (x1 - x0) * (i + 1) as f64 / panels as f64);
                let (ay, by) = (y0 + (y1 - y0) * j as f64 / panels as f64, y0 + (y1 - y0) * (j + 1) as f64 / panels as f64);
                for (&s, &ws) in g.nodes.iter().zip(&g.weights) {
                    for (&r, &wr) in g.nodes.iter().zip(&g.weights) {
                        let x = Vec2::new(ax + (bx - ax) * s, ay + (by - ay) * r);
                        let h = 1e-6;
                        let grad = Vec2::new(
                            (phi.profile.value(x + Vec2::E1 * h) - phi.profile.value(x - Vec2::E1 * h)) / (2.0 * h),
                            (phi.profile.value(x + Vec2::E2 * h) - phi.profile.value(x - Vec2::E2 * h)) / (2.0 * h),
                        );
                        rhs -= ws * wr * (bx - ax) * (by - ay) * c.dot(t.apply(grad));
                    }
                }
            }
        }
        assert!((lhs - rhs).abs() < 1e-7, "{lhs} vs {rhs}");
        assert!(phi.lipschitz() > 0.0);
    }

    #[test]
    fn trace_examples() {
        let mesh = Arc::new(Mesh::rectangle(0.0, 1.0, 0.0, 1.0, 4, 4, Split::Crossed).unwrap());
        let a = ScalarP1Field::from_fn(mesh.clone(), |p| p.y);
        let tr = trace_on_segment(&a, Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0)).unwrap();
        for s in [0.0, 0.3, 0.77, 1.0] {
            assert!((tr.eval(s) - s).abs() < 1e-14);
        }
        let c = ScalarP1Field::constant(mesh.clone(), 2.5);
        let tr = trace_on_segment(&c, Vec2::new(0.1, 0.2), Vec2::new(0.9, 0.6)).unwrap();
        assert!(tr.pieces.iter().all(|p| (p.v0 - 2.5).abs() < 1e-14 && (p.v1 - 2.5).abs() < 1e-14));
        assert!(trace_on_segment(&c, Vec2::new(0.1, 0.2), Vec2::new(1.5, 0.6)).is_err());
    }

    #[test]
    fn leibniz_trivial_cases() {
        let mesh = square(4, Split::Crossed);
        let u = VectorFieldPW::p1_from_fn(mesh.clone(), |p| Vec2::new(p.x * p.y, p.y - p.x));
        let one = ScalarP1Field::constant(mesh.clone(), 1.0);
        let (l, r) = leibniz_product(&one, &u).unwrap();
        let eu = symmetrized_gradient(&u);
        let phi = ProfileField::bump(Vec2::new(0.2, 0.1), 0.7, SymTensor2::new(1.0, -0.5, 0.25));
        let pe = eu.pair(&phi, 1e-13).unwrap().value;
        assert!((l.pair(&phi, 1e-13).unwrap().value - pe).abs() < 1e-12);
        assert!((r.pair(&phi, 1e-13).unwrap().value - pe).abs() < 1e-12);

        let c = VectorFieldPW::p1_from_fn(mesh.clone(), |_| Vec2::new(0.5, 2.0));
        let alpha = ScalarP1Field::from_fn(mesh, |p| 1.0 - p.x * p.x);
        let (l, r) = leibniz_product(&alpha, &c).unwrap();
        assert!(r.segments().is_empty());
        assert!((l.pair(&phi, 1e-13).unwrap().value - r.pair(&phi, 1e-13).unwrap().value).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn trace_matches_barycentric(ax in -1.0..1.0f64, ay in -1.0..1.0f64, bx in -1.0..1.0f64, by in -1.0..1.0f64, seed in 0u64..1000) {
            let mesh = square(5, Split::Crossed);
            let alpha = ScalarP1Field::from_fn(mesh, |p| (p.x * 3.1 + seed as f64).sin() + p.y * p.y);
            let (a, b) = (Vec2::new(ax, ay), Vec2::new(bx, by));
            let tr = trace_on_segment(&alpha, a, b).unwrap();
            for i in 0..100 {
                let s = i as f64 / 99.0;
                prop_assert!((tr.eval(s) - alpha.eval(a.lerp(b, s)).unwrap()).abs() < 1e-12);
            }
        }

        #[test]
        fn piecewise_constant_variation_is_jump_sum(vx in -2.0..2.0f64, vy in -2.0..2.0f64) {
            let mesh = square(4, Split::AntiDiagonal);
            let poly = vec![Vec2::new(-0.5, -0.5), Vec2::new(0.5, -0.5), Vec2::new(0.5, 0.5), Vec2::new(-0.5, 0.5)];
            let v = Vec2::new(vx, vy);
            let u = VectorFieldPW::piecewise_constant(mesh, vec![Region { polygon: poly, value: v }]).unwrap();
            let exact: f64 = [Vec2::E1, -Vec2::E1, Vec2::E2, -Vec2::E2].iter().map(|n| sym_outer(v, *n).norm()).sum();
            prop_assert!((symmetrized_gradient(&u).total_variation() - exact).abs() < 1e-13);
        }
    }
}
