//! Constitutive model for small-strain plasticity with damage: elastic,
//! plastic, damage and gradient energies, dissipation along a time
//! partition, and admissibility and stress-constraint checks.

use crate::error::{Error, Result};
use crate::fields::{symmetrized_gradient, ScalarP1Field, VectorFieldPW};
use crate::measure::{Cell, DiscreteMeasure, Segment};
use crate::mesh::Mesh;
use crate::tensor::{sym_outer, Point, SymTensor2, Vec2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialLaw {
    /// Shear modulus of the undamaged material.
    pub mu0: f64,
    /// Bulk-type modulus multiplying `tr(e) I`.
    pub kappa0: f64,
    /// Residual stiffness fraction at `α = 0`.
    pub eps0: f64,
    pub sigma_y: f64,
    pub c1: f64,
    pub c2: f64,
    /// Damage toughness: `d(α) = κ_d (1 - α)`.
    pub kappa_d: f64,
    /// Weight of `∫ |∇α|²`.
    pub w_g: f64,
}

impl Default for MaterialLaw {
    fn default() -> Self {
        MaterialLaw { mu0: 100.0, kappa0: 150.0, eps0: 0.05, sigma_y: 1.0, c1: 0.5, c2: 1.0, kappa_d: 1.0, w_g: 1.0 }
    }
}

impl MaterialLaw {
    pub fn validate(&self) -> Result<()> {
        let positive = [("mu0", self.mu0), ("kappa0", self.kappa0), ("sigma_y", self.sigma_y), ("c1", self.c1), ("kappa_d", self.kappa_d), ("w_g", self.w_g)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Material(format!("{name} = {v} must be positive and finite")));
            }
        }
        if !(self.eps0 > 0.0 && self.eps0 < 1.0) {
            return Err(Error::Material(format!("eps0 = {} must lie in (0, 1)", self.eps0)));
        }
        if !(self.c2 >= self.c1) || !self.c2.is_finite() {
            return Err(Error::Material(format!("c2 = {} must be at least c1 = {}", self.c2, self.c1)));
        }
        Ok(())
    }

    /// Stiffness degradation `g(α) = ε_0 + (1 - ε_0) α`.
    pub fn degradation(&self, alpha: f64) -> f64 {
        self.eps0 + (1.0 - self.eps0) * alpha
    }

    pub fn degradation_slope(&self) -> f64 {
        1.0 - self.eps0
    }

    /// `V(α) = c_1 + (c_2 - c_1) α`.
    pub fn v(&self, alpha: f64) -> f64 {
        self.c1 + (self.c2 - self.c1) * alpha
    }

    pub fn v_slope(&self) -> f64 {
        self.c2 - self.c1
    }

    pub fn d(&self, alpha: f64) -> f64 {
        self.kappa_d * (1.0 - alpha)
    }

    /// Radius of the admissible deviatoric stress disc.
    pub fn yield_radius(&self, alpha: f64) -> f64 {
        self.v(alpha) * self.sigma_y
    }

    /// `H(ξ) = σ_y |ξ|`.
    pub fn h(&self, xi: SymTensor2) -> f64 {
        self.sigma_y * xi.norm()
    }

    /// `C(α) e`.
    pub fn stress(&self, alpha: f64, e: SymTensor2) -> SymTensor2 {
        self.undamaged_stress(e) * self.degradation(alpha)
    }

    /// `C_0 e`.
    pub fn undamaged_stress(&self, e: SymTensor2) -> SymTensor2 {
        e.dev() * (2.0 * self.mu0) + SymTensor2::IDENTITY * (self.kappa0 * e.trace())
    }

    /// `½ C(α) e : e`.
    pub fn energy_density(&self, alpha: f64, e: SymTensor2) -> f64 {
        0.5 * self.stress(alpha, e).contract(e)
    }

    /// Elastic energy density at first yield, `V(1)²σ_y² / (4 μ_0)`; a
    /// natural unit for tolerances.
    pub fn energy_density_scale(&self) -> f64 {
        let y = self.yield_radius(1.0);
        y * y / (4.0 * self.mu0)
    }
}

/// `C(α)` for a fixed `α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElasticityTensor {
    pub g: f64,
    pub mu0: f64,
    pub kappa0: f64,
}

impl ElasticityTensor {
    pub fn apply(&self, e: SymTensor2) -> SymTensor2 {
        (e.dev() * (2.0 * self.mu0) + SymTensor2::IDENTITY * (self.kappa0 * e.trace())) * self.g
    }

    /// Smallest eigenvalue of the quadratic form `e ↦ C e : e`.
    pub fn coercivity(&self) -> f64 {
        self.g * (2.0 * self.mu0).min(2.0 * self.kappa0)
    }
}

pub fn elasticity_tensor(law: &MaterialLaw, alpha: f64) -> Result<ElasticityTensor> {
    check_alpha(alpha)?;
    Ok(ElasticityTensor { g: law.degradation(alpha), mu0: law.mu0, kappa0: law.kappa0 })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

fn check_len(what: &str, n: usize, mesh: &Mesh) -> Result<()> {
    if n != mesh.num_triangles() {
        return Err(Error::FieldMismatch(format!("{n} {what} values for {} triangles", mesh.num_triangles())));
    }
    Ok(())
}

/// `Q(α, e) = ½ ∫ C(α) e : e` with `α` at triangle centroids.
pub fn elastic_energy(law: &MaterialLaw, alpha: &ScalarP1Field, e: &[SymTensor2]) -> Result<f64> {
    let mesh = alpha.mesh();
    check_len("strain", e.len(), mesh)?;
    Ok(e.iter().enumerate().map(|(t, &et)| mesh.area(t) * law.energy_density(alpha.centroid_value(t), et)).sum())
}

/// `∫ V(α̃) σ_y |dp/d|p|| d|p|`. Fails on parts with a trace, where the
/// potential is infinite.
pub fn plastic_potential(law: &MaterialLaw, alpha: &ScalarP1Field, p: &DiscreteMeasure) -> Result<f64> {
    let check = |m: SymTensor2| {
        let tr = m.trace().abs();
        if tr > 1e-10 * m.norm().max(1.0) {
            Err(Error::NotDeviatoric { trace: tr })
        } else {
            Ok(())
        }
    };
    for c in p.cells() {
        c.density.nodal_values().into_iter().try_for_each(check)?;
    }
    for s in p.segments() {
        s.density.nodal_values().into_iter().try_for_each(check)?;
    }
    for a in p.atoms() {
        check(a.mass)?;
    }
    let mesh = alpha.mesh();
    let integrand = |x: Point, dir: SymTensor2| {
        let a = match mesh.locate(x) {
            Ok((t, b)) => {
                let v = alpha.triangle_values(t);
                b[0] * v[0] + b[1] * v[1] + b[2] * v[2]
            }
            Err(_) => f64::NAN,
        };
        law.v(a) * law.h(dir)
    };
    p.convex_functional(&integrand)
}

/// `D(α) = ∫ d(α)`.
pub fn damage_dissipation(law: &MaterialLaw, alpha: &ScalarP1Field) -> f64 {
    let mesh = alpha.mesh();
    (0..mesh.num_triangles()).map(|t| mesh.area(t) * law.d(alpha.centroid_value(t))).sum()
}

/// `w_g ∫ |∇α|²`.
pub fn gradient_term(law: &MaterialLaw, alpha: &ScalarP1Field) -> f64 {
    law.w_g * alpha.dirichlet_integral()
}

/// `Σ_j H(α(t_j), p(t_j) - p(t_{j-1}))` over the nodes `partition` (indices
/// into the trajectory).
pub fn dissipation_over_partition(law: &MaterialLaw, alphas: &[ScalarP1Field], ps: &[DiscreteMeasure], partition: &[usize]) -> Result<f64> {
    if alphas.len() != ps.len() {
        return Err(Error::Invalid(format!("{} damage fields for {} plastic strains", alphas.len(), ps.len())));
    }
    if partition.iter().any(|&j| j >= ps.len()) || partition.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid("partition must be strictly increasing and inside the trajectory".into()));
    }
    let mut total = 0.0;
    for w in partition.windows(2) {
        let dp = ps[w[1]].add(&ps[w[0]].neg()).merged();
        total += plastic_potential(law, &alphas[w[1]], &dp)?;
    }
    Ok(total)
}

/// Partition dissipation on dyadic sub-grids of a trajectory with `n + 1`
/// nodes: strides `2^m, ..., 2, 1`, coarsest first. Always includes the
/// first and last node.
pub fn dyadic_partitions(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![0]];
    }
    let mut stride = 1usize;
    while stride * 2 <= n {
        stride *= 2;
    }
    let mut out = Vec::new();
    loop {
        let mut p: Vec<usize> = (0..=n).step_by(stride).collect();
        if *p.last().unwrap() != n {
            p.push(n);
        }
        out.push(p);
        if stride == 1 {
            break;
        }
        stride /= 2;
    }
    out
}

/// Boundary plastic density on one Dirichlet edge, affine between its two
/// vertices (in the edge's stored orientation).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPart {
    pub edge: usize,
    pub density: [SymTensor2; 2],
}

/// `(u, e, p)` with `e`, `p` constant per triangle and the boundary part of
/// `p` on Dirichlet edges.
#[derive(Clone, Debug)]
pub struct AdmissibleTriple {
    pub u: VectorFieldPW,
    pub e: Vec<SymTensor2>,
    pub p: Vec<SymTensor2>,
    pub boundary: Vec<BoundaryPart>,
}

impl AdmissibleTriple {
    pub fn zero(mesh: &std::sync::Arc<Mesh>) -> Self {
        let n = mesh.num_triangles();
        AdmissibleTriple {
            u: VectorFieldPW::p1_from_fn(mesh.clone(), |_| Vec2::ZERO),
            e: vec![SymTensor2::ZERO; n],
            p: vec![SymTensor2::ZERO; n],
            boundary: Vec::new(),
        }
    }

    /// Builds the triple for `u` and bulk plastic strains `p`, with
    /// `e = sym ∇u - p` and boundary part `(w - u) ⊙ ν`.
    pub fn from_displacement(u: VectorFieldPW, p: Vec<SymTensor2>, w: &dyn Fn(Point) -> Vec2) -> Result<Self> {
        let mesh = u.mesh().clone();
        check_len("plastic", p.len(), &mesh)?;
        let e = (0..mesh.num_triangles()).map(|t| p1_strain(&u, t) - p[t]).collect();
        let boundary = boundary_parts(&u, w)?;
        Ok(AdmissibleTriple { u, e, p, boundary })
    }

    pub fn mesh(&self) -> &std::sync::Arc<Mesh> {
        self.u.mesh()
    }

    /// `p` as a measure: constant cells plus affine boundary segments.
    pub fn plastic_measure(&self) -> DiscreteMeasure {
        let mesh = self.mesh();
        let mut m = DiscreteMeasure::zero();
        for (t, &pt) in self.p.iter().enumerate() {
            if pt.max_abs() != 0.0 {
                m.push_cell(Cell::constant(mesh.triangle_points(t), pt));
            }
        }
        for b in &self.boundary {
            if b.density[0].max_abs() != 0.0 || b.density[1].max_abs() != 0.0 {
                let ed = mesh.edges()[b.edge];
                let (a, c) = (mesh.vertices()[ed.v[0]], mesh.vertices()[ed.v[1]]);
                m.push_segment(Segment::affine(a, c, b.density[0], b.density[1]));
            }
        }
        m
    }

    /// `|p|(Ω)` including the boundary part.
    pub fn plastic_mass(&self) -> f64 {
        self.plastic_measure().total_variation()
    }
}

/// `sym ∇u` on triangle `t` for the affine restriction of `u`.
pub fn p1_strain(u: &VectorFieldPW, t: usize) -> SymTensor2 {
    let mesh = u.mesh();
    let g = mesh.basis_gradients(t);
    let local = u.local(t);
    let vals = [local.eval(0.0, 0.0), local.eval(1.0, 0.0), local.eval(0.0, 1.0)];
    (0..3).fold(SymTensor2::ZERO, |acc, i| acc + sym_outer(vals[i], g[i]))
}

/// `(w - u) ⊙ ν` on every Dirichlet edge.
pub fn boundary_parts(u: &VectorFieldPW, w: &dyn Fn(Point) -> Vec2) -> Result<Vec<BoundaryPart>> {
    let mesh = u.mesh();
    let mut out = Vec::new();
    for e in mesh.dirichlet_edges() {
        let ed = mesh.edges()[e];
        let nu = mesh.edge_normal(e);
        let t = ed.tris[0];
        let local = u.local(t);
        let density = ed.v.map(|v| {
            let x = mesh.vertices()[v];
            let b = mesh.barycentric(t, x);
            sym_outer(w(x) - local.eval(b[1], b[2]), nu)
        });
        out.push(BoundaryPart { edge: e, density });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissibilityReport {
    /// Largest `|Eu - e - p|` over triangles, including jump parts of `Eu`
    /// inside `Ω`.
    pub bulk: f64,
    /// Largest `|p_∂ - (w - u) ⊙ ν|` over Dirichlet edges.
    pub boundary: f64,
    /// Largest `|tr p|` over triangles and boundary parts.
    pub trace: f64,
    pub pass: bool,
}

pub fn admissible_check(triple: &AdmissibleTriple, w: &dyn Fn(Point) -> Vec2, tol: f64) -> Result<AdmissibilityReport> {
    let mesh = triple.mesh();
    check_len("strain", triple.e.len(), mesh)?;
    check_len("plastic", triple.p.len(), mesh)?;
    let eu = symmetrized_gradient(&triple.u);
    let mut bulk: f64 = 0.0;
    for c in eu.cells() {
        let (t, _) = mesh.locate(c.centroid())?;
        let target = triple.e[t] + triple.p[t];
        for v in c.density.nodal_values() {
            bulk = bulk.max((v - target).norm());
        }
    }
    // triangles absent from the cell list carry zero strain
    let mut seen = vec![false; mesh.num_triangles()];
    for c in eu.cells() {
        seen[mesh.locate(c.centroid())?.0] = true;
    }
    for t in (0..mesh.num_triangles()).filter(|&t| !seen[t]) {
        bulk = bulk.max((triple.e[t] + triple.p[t]).norm());
    }
    for s in eu.segments() {
        let on_boundary = mesh.edges().iter().any(|ed| {
            ed.is_boundary() && {
                let (a, b) = (mesh.vertices()[ed.v[0]], mesh.vertices()[ed.v[1]]);
                let tol = 1e-12 * mesh.diameter();
                (a.dist(s.a) < tol && b.dist(s.b) < tol) || (a.dist(s.b) < tol && b.dist(s.a) < tol)
            }
        });
        if !on_boundary {
            for v in s.density.nodal_values() {
                bulk = bulk.max(v.norm());
            }
        }
    }
    let expected = boundary_parts(&triple.u, w)?;
    let mut boundary: f64 = 0.0;
    for ex in &expected {
        let got = triple.boundary.iter().find(|b| b.edge == ex.edge).map(|b| b.density).unwrap_or([SymTensor2::ZERO; 2]);
        for i in 0..2 {
            boundary = boundary.max((got[i] - ex.density[i]).norm());
        }
    }
    for b in &triple.boundary {
        if !expected.iter().any(|ex| ex.edge == b.edge) {
            boundary = boundary.max(b.density[0].norm().max(b.density[1].norm()));
        }
    }
    let trace = triple
        .p
        .iter()
        .map(|p| p.trace().abs())
        .chain(triple.boundary.iter().flat_map(|b| b.density.map(|d| d.trace().abs())))
        .fold(0.0, f64::max);
    Ok(AdmissibilityReport { bulk, boundary, trace, pass: bulk <= tol && boundary <= tol && trace <= tol })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StressCheck {
    /// `max_T (|dev σ_T| - V(ᾱ_T) σ_y)`; negative when strictly inside.
    pub max_violation: f64,
    pub pass: bool,
}

pub fn stress_constraint_check(law: &MaterialLaw, alpha: &ScalarP1Field, e: &[SymTensor2], tol: f64) -> Result<StressCheck> {
    let mesh = alpha.mesh();
    check_len("strain", e.len(), mesh)?;
    let max_violation = e
        .iter()
        .enumerate()
        .map(|(t, &et)| {
            let a = alpha.centroid_value(t);
            law.stress(a, et).dev().norm() - law.yield_radius(a)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(StressCheck { max_violation, pass: max_violation <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Split;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn unit_mesh(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::rectangle(0.0, 1.0, 0.0, 1.0, n, n, Split::Crossed).unwrap())
    }

    fn e12() -> SymTensor2 {
        sym_outer(Vec2::E1, Vec2::E2)
    }

    #[test]
    fn elasticity_examples() {
        let law = MaterialLaw::default();
        let c1 = elasticity_tensor(&law, 1.0).unwrap();
        assert_eq!(c1.apply(e12()), e12() * (2.0 * law.mu0));
        let e = SymTensor2::new(0.3, -0.1, 0.2);
        let c0 = elasticity_tensor(&law, 0.0).unwrap();
        let undamaged = law.undamaged_stress(e) * law.eps0;
        assert!((c0.apply(e) - undamaged).norm() < 1e-14);
        assert!(matches!(elasticity_tensor(&law, 1.5), Err(Error::AlphaOutOfRange(_))));
    }

    #[test]
    fn energy_examples() {
        let law = MaterialLaw::default();
        let mesh = unit_mesh(3);
        let n = mesh.num_triangles();
        let one = ScalarP1Field::constant(mesh.clone(), 1.0);
        assert_eq!(elastic_energy(&law, &one, &vec![SymTensor2::ZERO; n]).unwrap(), 0.0);
        // |e1 ⊙ e2|² = 1/2, so ½ · 2μ0 · 1/2
        let q = elastic_energy(&law, &one, &vec![e12(); n]).unwrap();
        assert!((q - 0.5 * law.mu0).abs() < 1e-12);
        let q2 = elastic_energy(&law, &one, &vec![e12() * 2.0; n]).unwrap();
        assert!((q2 - 4.0 * q).abs() < 1e-12);
        assert!(damage_dissipation(&law, &one).abs() < 1e-15);
        let zero = ScalarP1Field::constant(mesh.clone(), 0.0);
        assert!((damage_dissipation(&law, &zero) - law.kappa_d).abs() < 1e-14);
        assert_eq!(gradient_term(&law, &one), 0.0);
        let ramp = ScalarP1Field::from_fn(mesh, |x| x.x);
        assert!((gradient_term(&law, &ramp) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn potential_examples() {
        let law = MaterialLaw::default();
        let mesh = unit_mesh(2);
        let one = ScalarP1Field::constant(mesh.clone(), 1.0);
        assert_eq!(plastic_potential(&law, &one, &DiscreteMeasure::zero()).unwrap(), 0.0);
        let m = SymTensor2::new(0.4, -0.4, 0.1);
        let at = Vec2::new(0.3, 0.6);
        let v = plastic_potential(&law, &one, &DiscreteMeasure::atom(at, m)).unwrap();
        assert!((v - law.c2 * law.sigma_y * m.norm()).abs() < 1e-14);
        assert!(matches!(
            plastic_potential(&law, &one, &DiscreteMeasure::atom(at, SymTensor2::IDENTITY)),
            Err(Error::NotDeviatoric { .. })
        ));
    }

    #[test]
    fn potential_at_tent_centre() {
        let law = MaterialLaw::default();
        let (alpha, _) = crate::lab::build_example31(4).unwrap();
        let v = plastic_potential(&law, &alpha, &DiscreteMeasure::atom(Vec2::ZERO, e12())).unwrap();
        assert!((v - law.c2 * law.sigma_y / 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn partition_examples() {
        let law = MaterialLaw::default();
        let mesh = unit_mesh(2);
        let one = ScalarP1Field::constant(mesh, 1.0);
        let m = SymTensor2::new(0.2, -0.2, 0.3);
        let at = Vec2::new(0.5, 0.5);
        let ps: Vec<DiscreteMeasure> = (0..3).map(|i| DiscreteMeasure::atom(at, m * i as f64)).collect();
        let alphas = vec![one; 3];
        let fine = dissipation_over_partition(&law, &alphas, &ps, &[0, 1, 2]).unwrap();
        let coarse = dissipation_over_partition(&law, &alphas, &ps, &[0, 2]).unwrap();
        assert!((fine - coarse).abs() < 1e-12);
        assert!((coarse - 2.0 * law.c2 * law.sigma_y * m.norm()).abs() < 1e-12);
        let constant = vec![DiscreteMeasure::atom(at, m); 3];
        assert_eq!(dissipation_over_partition(&law, &alphas, &constant, &[0, 1, 2]).unwrap(), 0.0);
        assert_eq!(dyadic_partitions(5), vec![vec![0, 4, 5], vec![0, 2, 4, 5], vec![0, 1, 2, 3, 4, 5]]);
    }

    #[test]
    fn admissibility_examples() {
        let mesh = Arc::new(
            Mesh::rectangle(0.0, 1.0, 0.0, 1.0, 3, 3, Split::Diagonal)
                .unwrap()
                .with_boundary(crate::mesh::Side::Left, crate::mesh::BoundaryKind::Dirichlet)
                .with_boundary(crate::mesh::Side::Bottom, crate::mesh::BoundaryKind::Dirichlet),
        );
        let s = SymTensor2::new(0.2, -0.2, 0.1);
        let w = move |x: Point| s.apply(x);
        let u = VectorFieldPW::p1_from_fn(mesh.clone(), w);
        let n = mesh.num_triangles();
        let t = AdmissibleTriple::from_displacement(u.clone(), vec![SymTensor2::ZERO; n], &w).unwrap();
        let r = admissible_check(&t, &w, 1e-12).unwrap();
        assert!(r.pass && r.bulk < 1e-14 && r.boundary == 0.0);
        let plastic = AdmissibleTriple { u: u.clone(), e: vec![SymTensor2::ZERO; n], p: vec![s; n], boundary: t.boundary.clone() };
        assert!(admissible_check(&plastic, &w, 1e-12).unwrap().pass);
        let bad = AdmissibleTriple { u, e: vec![SymTensor2::ZERO; n], p: vec![SymTensor2::ZERO; n], boundary: t.boundary };
        let r = admissible_check(&bad, &w, 1e-12).unwrap();
        assert!(!r.pass && (r.bulk - s.norm()).abs() < 1e-14);
    }

    #[test]
    fn stress_constraint_examples() {
        let law = MaterialLaw::default();
        let mesh = unit_mesh(2);
        let n = mesh.num_triangles();
        let one = ScalarP1Field::constant(mesh, 1.0);
        assert!(stress_constraint_check(&law, &one, &vec![SymTensor2::ZERO; n], 0.0).unwrap().pass);
        let e = e12() * (law.sigma_y * law.c2 / (2.0 * law.mu0) / e12().norm());
        let r = stress_constraint_check(&law, &one, &vec![e; n], 1e-12).unwrap();
        assert!(r.pass && r.max_violation.abs() < 1e-12);
        let r = stress_constraint_check(&law, &one, &vec![e * 1.1; n], 0.0).unwrap();
        assert!(!r.pass && (r.max_violation - 0.1 * law.c2 * law.sigma_y).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn deviatoric_preserved(a in 0.0..1.0f64, xx in -1.0..1.0f64, yy in -1.0..1.0f64, xy in -1.0..1.0f64) {
            let law = MaterialLaw::default();
            let c = elasticity_tensor(&law, a).unwrap();
            let e = SymTensor2::new(xx, yy, xy).dev();
            prop_assert!(c.apply(e).trace().abs() < 1e-12);
            let full = SymTensor2::new(xx, yy, xy);
            prop_assert!(c.apply(full).contract(full) >= c.coercivity() * full.norm_sq() - 1e-12);
        }

        #[test]
        fn stiffness_monotone(a in 0.0..1.0f64, b in 0.0..1.0f64, xx in -1.0..1.0f64, yy in -1.0..1.0f64, xy in -1.0..1.0f64) {
            let law = MaterialLaw::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let e = SymTensor2::new(xx, yy, xy);
            prop_assert!(law.stress(hi, e).contract(e) >= law.stress(lo, e).contract(e) - 1e-12);
        }

        #[test]
        fn potential_bounds_and_homogeneity(xx in -1.0..1.0f64, xy in -1.0..1.0f64, c in 0.1..5.0f64, a0 in 0.0..1.0f64, a1 in 0.0..1.0f64) {
            let law = MaterialLaw::default();
            let mesh = unit_mesh(2);
            let alpha = ScalarP1Field::from_fn(mesh.clone(), |x| a0 + (a1 - a0) * x.x);
            let m = SymTensor2::new(xx, -xx, xy);
            let p = DiscreteMeasure::atom(Vec2::new(0.3, 0.4), m)
                .with_cell(Cell::constant(mesh.triangle_points(1), m * 0.5))
                .with_segment(Segment::affine(Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), m, m * -0.3));
            let h = plastic_potential(&law, &alpha, &p).unwrap();
            let hc = plastic_potential(&law, &alpha, &p.scale(c)).unwrap();
            prop_assert!((hc - c * h).abs() <= 1e-10 * hc.abs().max(1.0));
            let tv = p.total_variation();
            prop_assert!(h >= law.c1 * law.sigma_y * tv * (1.0 - 1e-10));
            prop_assert!(h <= law.c2 * law.sigma_y * tv * (1.0 + 1e-10));
            let atom_only = DiscreteMeasure::atom(Vec2::new(0.3, 0.4), m);
            let ha = plastic_potential(&law, &alpha, &atom_only).unwrap();
            let hac = plastic_potential(&law, &alpha, &atom_only.scale(c)).unwrap();
            prop_assert!((hac - c * ha).abs() <= 4.0 * f64::EPSILON * hac);
        }
    }
}
