//! Minimisation of the incremental energy over damage fields
//! `0 ≤ α ≤ α_prev` for a fixed mechanical triple.
//!
//! With centroid quadrature every term except `w_g ∫ |∇α|²` is affine in
//! the vertex values, so the objective is a convex quadratic on a box.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::fields::ScalarP1Field;
use crate::model::{AdmissibleTriple, MaterialLaw};
use crate::tensor::SymTensor2;

use super::linalg::Csr;
use super::mechanical::BoundaryLayout;
use super::Tolerances;

/// The quadratic `½ αᵀ A α + bᵀ α` minimised by [`minimize_damage`].
pub struct DamageObjective {
    a: Csr,
    b: Vec<f64>,
}

impl DamageObjective {
    /// `p_prev` and `slip_prev` define the plastic increment whose cost
    /// depends on `α` through `V`.
    pub fn new(
        law: &MaterialLaw,
        triple: &AdmissibleTriple,
        p_prev: &[SymTensor2],
        slip: &[f64],
        slip_prev: &[f64],
        layout: &BoundaryLayout,
    ) -> Self {
        let mesh = triple.mesh();
        let n = mesh.num_vertices();
        let mut a = Csr::from_triangles(n, mesh.triangles(), 1);
        let mut b = vec![0.0; n];
        for t in 0..mesh.num_triangles() {
            let area = mesh.area(t);
            let w0 = 0.5 * law.undamaged_stress(triple.e[t]).contract(triple.e[t]);
            let dp = (triple.p[t] - p_prev[t]).norm();
            let slope = law.degradation_slope() * w0 + law.v_slope() * law.sigma_y * dp - law.kappa_d;
            let tri = mesh.triangles()[t];
            let g = mesh.basis_gradients(t);
            for i in 0..3 {
                b[tri[i]] += area * slope / 3.0;
                for j in 0..3 {
                    a.add(tri[i], tri[j], 2.0 * law.w_g * area * g[i].dot(g[j]));
                }
            }
        }
        for (v, s) in layout.slip.iter().enumerate() {
            if let Some(s) = s {
                b[v] += s.weight * law.v_slope() * law.sigma_y * (slip[v] - slip_prev[v]).abs() / SQRT_2;
            }
        }
        DamageObjective { a, b }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; x.len()];
        self.a.matvec(x, &mut ax);
        x.iter().zip(&ax).zip(&self.b).map(|((x, ax), b)| x * (0.5 * ax + b)).sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.a.matvec(x, &mut g);
        g.iter_mut().zip(&self.b).for_each(|(g, b)| *g += b);
        g
    }
}

#[derive(Clone, Debug)]
pub struct DamageSolution {
    pub alpha: ScalarP1Field,
    pub iterations: usize,
    /// Diagonally scaled projected-gradient residual.
    pub kkt: f64,
}

/// Projected gradient with Barzilai–Borwein steps and Armijo backtracking,
/// started from `start` clipped to the box.
pub fn minimize_damage(obj: &DamageObjective, alpha_prev: &ScalarP1Field, start: &ScalarP1Field, tol: &Tolerances) -> Result<DamageSolution> {
    let upper = alpha_prev.values();
    let n = upper.len();
    if start.values().len() != n || obj.b.len() != n {
        return Err(Error::FieldMismatch("damage input sizes do not match the mesh".into()));
    }
    let project = |x: f64, i: usize| x.clamp(0.0, upper[i].max(0.0));
    let diag: Vec<f64> = obj.a.diagonal().iter().map(|&d| if d > 0.0 { d } else { 1.0 }).collect();
    let hmax = diag.iter().cloned().fold(0.0, f64::max);
    let kkt_of = |x: &[f64], g: &[f64]| (0..n).map(|i| (x[i] - project(x[i] - g[i] / diag[i], i)).abs()).fold(0.0, f64::max);
    let mut x: Vec<f64> = start.values().iter().enumerate().map(|(i, &v)| project(v, i)).collect();
    let mut g = obj.gradient(&x);
    let mut step = 1.0 / hmax;
    for it in 0..tol.max_pg {
        let kkt = kkt_of(&x, &g);
        if kkt <= tol.tol_pg {
            return Ok(DamageSolution { alpha: ScalarP1Field::new(alpha_prev.mesh().clone(), x)?, iterations: it, kkt });
        }
        let target: Vec<f64> = (0..n).map(|i| project(x[i] - step * g[i], i)).collect();
        let d: Vec<f64> = (0..n).map(|i| target[i] - x[i]).collect();
        let slope: f64 = d.iter().zip(&g).map(|(d, g)| d * g).sum();
        // the objective is quadratic, so f(x + s) - f(x) = gᵀs + ½ sᵀAs
        // without cancellation
        let change = |s: &[f64], as_: &mut Vec<f64>| {
            obj.a.matvec(s, as_);
            s.iter().zip(&g).zip(as_.iter()).map(|((s, g), a)| s * (g + 0.5 * a)).sum::<f64>()
        };
        let mut lambda = 1.0;
        let mut s_vec = d.clone();
        let mut as_ = vec![0.0; n];
        let mut df = change(&s_vec, &mut as_);
        while df > 1e-4 * lambda * slope && lambda > 1e-12 {
            lambda *= 0.5;
            s_vec = (0..n).map(|i| project(x[i] + lambda * d[i], i) - x[i]).collect();
            df = change(&s_vec, &mut as_);
        }
        if df > 0.0 {
            step = 1.0 / hmax;
            continue;
        }
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..n {
            ss += s_vec[i] * s_vec[i];
            sy += s_vec[i] * as_[i];
        }
        step = if sy > 0.0 { ss / sy } else { 1.0 / hmax };
        for i in 0..n {
            x[i] = project(x[i] + s_vec[i], i);
        }
        g = obj.gradient(&x);
    }
    let kkt = kkt_of(&x, &g);
    if kkt <= tol.tol_pg {
        return Ok(DamageSolution { alpha: ScalarP1Field::new(alpha_prev.mesh().clone(), x)?, iterations: tol.max_pg, kkt });
    }
    Err(Error::IterationCap { solver: "projected gradient", iterations: tol.max_pg, residual: kkt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Mesh, Split};
    use crate::tensor::{Point, Vec2};
    use std::sync::Arc;

    fn mesh() -> Arc<Mesh> {
        Arc::new(Mesh::rectangle(0.0, 1.0, 0.0, 1.0, 4, 4, Split::Crossed).unwrap())
    }

    fn triple_with(mesh: &Arc<Mesh>, e: SymTensor2) -> AdmissibleTriple {
        let n = mesh.num_triangles();
        AdmissibleTriple::from_displacement(crate::fields::VectorFieldPW::p1_from_fn(mesh.clone(), move |x: Point| e.apply(x)), vec![SymTensor2::ZERO; n], &move |x: Point| e.apply(x))
            .unwrap()
    }

    fn solve(law: &MaterialLaw, e: SymTensor2, prev: &ScalarP1Field) -> ScalarP1Field {
        let mesh = prev.mesh().clone();
        let layout = BoundaryLayout::new(&mesh);
        let t = triple_with(&mesh, e);
        let nv = mesh.num_vertices();
        let obj = DamageObjective::new(law, &t, &vec![SymTensor2::ZERO; mesh.num_triangles()], &vec![0.0; nv], &vec![0.0; nv], &layout);
        minimize_damage(&obj, prev, prev, &Tolerances::default()).unwrap().alpha
    }

    #[test]
    fn no_driving_force_keeps_previous() {
        let law = MaterialLaw::default();
        let m = mesh();
        let prev = ScalarP1Field::constant(m, 0.7);
        let a = solve(&law, SymTensor2::ZERO, &prev);
        assert_eq!(a.values(), prev.values());
    }

    #[test]
    fn collapsed_box() {
        let law = MaterialLaw::default();
        let prev = ScalarP1Field::constant(mesh(), 0.0);
        let a = solve(&law, SymTensor2::diag(0.1, -0.1), &prev);
        assert!(a.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_drive_is_bang_bang() {
        // the uniform objective is affine in α: above the threshold the
        // minimiser is α = 0, below it α = α_prev
        let law = MaterialLaw::default();
        let m = mesh();
        let prev = ScalarP1Field::constant(m, 1.0);
        let threshold = (2.0 * law.kappa_d / (law.degradation_slope() * 2.0 * law.mu0)).sqrt();
        let unit = SymTensor2::new(0.0, 0.0, 1.0 / SQRT_2);
        let below = solve(&law, unit * (0.9 * threshold), &prev);
        assert!(below.values().iter().all(|&v| v == 1.0));
        let above = solve(&law, unit * (1.1 * threshold), &prev);
        assert!(above.values().iter().all(|&v| v.abs() < 1e-9), "{:?}", &above.values()[..4]);
    }

    #[test]
    fn localized_drive_gives_interior_values() {
        let law = MaterialLaw::default();
        let m = mesh();
        let prev = ScalarP1Field::constant(m.clone(), 1.0);
        let layout = BoundaryLayout::new(&m);
        let nt = m.num_triangles();
        let nv = m.num_vertices();
        let mut t = triple_with(&m, SymTensor2::ZERO);
        // strong strain in a single triangle
        t.e[5] = SymTensor2::new(0.0, 0.0, 0.5);
        let obj = DamageObjective::new(&law, &t, &vec![SymTensor2::ZERO; nt], &vec![0.0; nv], &vec![0.0; nv], &layout);
        let sol = minimize_damage(&obj, &prev, &prev, &Tolerances::default()).unwrap();
        let a = sol.alpha.values();
        assert!(a.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(a.iter().any(|&v| v < 1.0 && v > 0.0));
        // first-order optimality against coordinate perturbations
        let f0 = obj.value(a);
        for i in 0..nv {
            for h in [-1e-6, 1e-6] {
                let mut x = a.to_vec();
                x[i] = (x[i] + h).clamp(0.0, 1.0);
                assert!(obj.value(&x) >= f0 - 1e-12);
            }
        }
        let _ = Vec2::ZERO;
    }
}
