//! Minimisation of the incremental mechanical energy over P1 displacements
//! for fixed damage, with the plastic strain eliminated by the return map.
//!
//! On Dirichlet sides the normal displacement is prescribed (the boundary
//! plastic strain `(w - u) ⊙ ν` must be deviatoric) and the tangential slip
//! `s = (w - u)·τ` costs `V(α) σ_y |s - s_prev| / √2` per unit length,
//! integrated with the vertex (trapezoidal) rule.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::fields::{ScalarP1Field, VectorFieldPW};
use crate::mesh::Mesh;
use crate::model::{admissible_check, boundary_parts, AdmissibleTriple, MaterialLaw};
use crate::tensor::{sym_outer, Point, SymTensor2, Vec2};

use super::linalg::{pcg, Csr};
use super::local::{local_response, LocalResponse};
use super::Tolerances;

pub(crate) fn comp(v: Vec2, c: usize) -> f64 {
    if c == 0 {
        v.x
    } else {
        v.y
    }
}

fn set_comp(v: &mut Vec2, c: usize, x: f64) {
    if c == 0 {
        v.x = x
    } else {
        v.y = x
    }
}

/// A tangential displacement component that may slip along a Dirichlet side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlipDof {
    pub comp: usize,
    /// Half the total length of incident Dirichlet edges.
    pub weight: f64,
}

/// Which displacement components are prescribed on the Dirichlet boundary.
#[derive(Clone, Debug)]
pub struct BoundaryLayout {
    pub fixed: Vec<[bool; 2]>,
    pub slip: Vec<Option<SlipDof>>,
}

impl BoundaryLayout {
    pub fn new(mesh: &Mesh) -> Self {
        let n = mesh.num_vertices();
        let mut normal = vec![[false; 2]; n];
        let mut weight = vec![0.0; n];
        for e in mesh.dirichlet_edges() {
            let nu = mesh.edge_normal(e);
            let c = if nu.x.abs() > nu.y.abs() { 0 } else { 1 };
            let half = 0.5 * mesh.edge_length(e);
            for v in mesh.edges()[e].v {
                normal[v][c] = true;
                weight[v] += half;
            }
        }
        let mut fixed = vec![[false; 2]; n];
        let mut slip = vec![None; n];
        for v in 0..n {
            match normal[v] {
                [true, true] => fixed[v] = [true, true],
                [true, false] => {
                    fixed[v] = [true, false];
                    slip[v] = Some(SlipDof { comp: 1, weight: weight[v] });
                }
                [false, true] => {
                    fixed[v] = [false, true];
                    slip[v] = Some(SlipDof { comp: 0, weight: weight[v] });
                }
                [false, false] => {}
            }
        }
        BoundaryLayout { fixed, slip }
    }

    /// Tangential slip `(w - u)·τ` at every vertex (zero off the slip set).
    pub fn slips(&self, u: &[Vec2], w: &[Vec2]) -> Vec<f64> {
        self.slip.iter().enumerate().map(|(v, s)| s.map_or(0.0, |s| comp(w[v], s.comp) - comp(u[v], s.comp))).collect()
    }

    /// `Σ_v m_v V(α_v) σ_y |s_v - s_prev_v| / √2`.
    pub fn boundary_dissipation(&self, law: &MaterialLaw, alpha: &[f64], slip: &[f64], slip_prev: &[f64]) -> f64 {
        self.slip
            .iter()
            .enumerate()
            .filter_map(|(v, s)| s.map(|s| s.weight * law.yield_radius(alpha[v]) * (slip[v] - slip_prev[v]).abs() / SQRT_2))
            .sum()
    }
}

/// Data of one mechanical subproblem.
pub struct Mechanics<'a> {
    pub law: &'a MaterialLaw,
    pub alpha: &'a ScalarP1Field,
    pub p_prev: &'a [SymTensor2],
    pub slip_prev: &'a [f64],
    pub datum: &'a dyn Fn(Point) -> Vec2,
    pub layout: &'a BoundaryLayout,
}

#[derive(Clone, Debug)]
pub struct MechanicalSolution {
    pub triple: AdmissibleTriple,
    pub slip: Vec<f64>,
    /// `Q + H(p - p_prev)` including the boundary slip term.
    pub energy: f64,
    pub newton_iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Status {
    Stuck,
    Slide(f64),
}

struct Setup<'a> {
    m: &'a Mechanics<'a>,
    mesh: &'a Mesh,
    abar: Vec<f64>,
    w: Vec<Vec2>,
    /// `m_v V(α_v) σ_y / √2` on slip vertices.
    cost: Vec<f64>,
}

impl<'a> Setup<'a> {
    fn new(m: &'a Mechanics<'a>) -> Self {
        let mesh = m.alpha.mesh().as_ref();
        let abar = (0..mesh.num_triangles()).map(|t| m.alpha.centroid_value(t)).collect();
        let w = mesh.vertices().iter().map(|&x| (m.datum)(x)).collect();
        let cost = m
            .layout
            .slip
            .iter()
            .enumerate()
            .map(|(v, s)| s.map_or(0.0, |s| s.weight * m.law.yield_radius(m.alpha.values()[v]) / SQRT_2))
            .collect();
        Setup { m, mesh, abar, w, cost }
    }

    fn strain(&self, u: &[Vec2], t: usize) -> SymTensor2 {
        let [a, b, c] = self.mesh.triangles()[t];
        let g = self.mesh.basis_gradients(t);
        sym_outer(u[b] - u[a], g[1]) + sym_outer(u[c] - u[a], g[2])
    }

    fn responses(&self, u: &[Vec2]) -> Vec<LocalResponse> {
        (0..self.mesh.num_triangles()).map(|t| local_response(self.m.law, self.abar[t], self.strain(u, t), self.m.p_prev[t])).collect()
    }

    fn slip_term(&self, u: &[Vec2]) -> f64 {
        let s = self.m.layout.slips(u, &self.w);
        (0..s.len()).map(|v| self.cost[v] * (s[v] - self.m.slip_prev[v]).abs()).sum()
    }

    fn energy_of(&self, resp: &[LocalResponse], u: &[Vec2]) -> f64 {
        let bulk: f64 = resp.iter().enumerate().map(|(t, r)| self.mesh.area(t) * r.energy).sum();
        bulk + self.slip_term(u)
    }

    fn energy(&self, u: &[Vec2]) -> f64 {
        self.energy_of(&self.responses(u), u)
    }

    fn bulk_gradient(&self, resp: &[LocalResponse]) -> Vec<f64> {
        let mut g = vec![0.0; 2 * self.mesh.num_vertices()];
        for (t, r) in resp.iter().enumerate() {
            let area = self.mesh.area(t);
            let grads = self.mesh.basis_gradients(t);
            for (i, &v) in self.mesh.triangles()[t].iter().enumerate() {
                let f = r.stress.apply(grads[i]) * area;
                g[2 * v] += f.x;
                g[2 * v + 1] += f.y;
            }
        }
        g
    }

    fn assemble(&self, resp: &[LocalResponse], k: &mut Csr) {
        k.clear();
        let units = [Vec2::E1, Vec2::E2];
        for (t, r) in resp.iter().enumerate() {
            let area = self.mesh.area(t);
            let grads = self.mesh.basis_gradients(t);
            let tri = self.mesh.triangles()[t];
            for j in 0..3 {
                for b in 0..2 {
                    let ds = r.tangent.apply(sym_outer(units[b], grads[j]));
                    for i in 0..3 {
                        let f = ds.apply(grads[i]) * area;
                        k.add(2 * tri[i], 2 * tri[j] + b, f.x);
                        k.add(2 * tri[i] + 1, 2 * tri[j] + b, f.y);
                    }
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const MAX_ACTIVE_SET: usize = 50;

/// Builds the triple for a given displacement without optimising.
pub fn evaluate_mechanical(m: &Mechanics, u: &[Vec2]) -> Result<MechanicalSolution> {
    let s = Setup::new(m);
    finish(&s, u.to_vec(), 0, None)
}

fn finish(s: &Setup, u: Vec<Vec2>, iters: usize, tol_adm: Option<f64>) -> Result<MechanicalSolution> {
    let resp = s.responses(&u);
    let energy = s.energy_of(&resp, &u);
    let slip = s.m.layout.slips(&u, &s.w);
    let field = VectorFieldPW::p1(s.m.alpha.mesh().clone(), u)?;
    let boundary = boundary_parts(&field, s.m.datum)?;
    let triple = AdmissibleTriple { u: field, e: resp.iter().map(|r| r.e).collect(), p: resp.iter().map(|r| r.p).collect(), boundary };
    if let Some(tol) = tol_adm {
        let rep = admissible_check(&triple, s.m.datum, tol)?;
        if !rep.pass {
            return Err(Error::Inadmissible(format!(
                "mechanical solution residuals bulk {:.3e}, boundary {:.3e}, trace {:.3e}",
                rep.bulk, rep.boundary, rep.trace
            )));
        }
    }
    Ok(MechanicalSolution { triple, slip, energy, newton_iterations: iters })
}

/// Newton's method with Jacobi-preconditioned CG and Armijo backtracking
/// inside an active-set loop over boundary slip.
pub fn minimize_mechanical(m: &Mechanics, guess: &[Vec2], tol: &Tolerances) -> Result<MechanicalSolution> {
    let s = Setup::new(m);
    let mesh = s.mesh;
    let n = mesh.num_vertices();
    if guess.len() != n || m.p_prev.len() != mesh.num_triangles() || m.slip_prev.len() != n {
        return Err(Error::FieldMismatch("mechanical input sizes do not match the mesh".into()));
    }
    let layout = m.layout;
    let mut u = guess.to_vec();
    let mut status = vec![Status::Stuck; n];
    for v in 0..n {
        for c in 0..2 {
            if layout.fixed[v][c] {
                set_comp(&mut u[v], c, comp(s.w[v], c));
            }
        }
        if let Some(sd) = layout.slip[v] {
            set_comp(&mut u[v], sd.comp, comp(s.w[v], sd.comp) - m.slip_prev[v]);
        }
    }
    let total_area: f64 = mesh.areas().iter().sum();
    let mut k = Csr::from_triangles(n, mesh.triangles(), 2);
    let mut iters = 0;
    let mut dir = vec![0.0; 2 * n];
    for _ in 0..MAX_ACTIVE_SET {
        let mut mask = vec![false; 2 * n];
        for v in 0..n {
            for c in 0..2 {
                mask[2 * v + c] = layout.fixed[v][c];
            }
            if let (Some(sd), Status::Stuck) = (layout.slip[v], status[v]) {
                mask[2 * v + sd.comp] = true;
            }
        }
        let mut converged = false;
        let mut last = f64::INFINITY;
        for _ in 0..tol.max_newton {
            iters += 1;
            let resp = s.responses(&u);
            let e0 = s.energy_of(&resp, &u);
            let mut g = s.bulk_gradient(&resp);
            for v in 0..n {
                if let (Some(sd), Status::Slide(sign)) = (layout.slip[v], status[v]) {
                    g[2 * v + sd.comp] -= s.cost[v] * sign;
                }
            }
            for (gi, &mi) in g.iter_mut().zip(&mask) {
                if mi {
                    *gi = 0.0;
                }
            }
            let scale = total_area * m.law.energy_density_scale() + e0.abs();
            s.assemble(&resp, &mut k);
            k.apply_mask(&mask);
            let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
            pcg(&k, &rhs, &mut dir, 1e-12, tol.max_cg);
            if dot(&g, &dir) >= 0.0 {
                dir.clone_from(&rhs);
            }
            let dec = -dot(&g, &dir);
            last = dec / scale;
            if dec <= tol.tol_cg * scale {
                converged = true;
                break;
            }
            let mut step = 1.0;
            let mut accepted = false;
            while step > 1e-14 {
                let trial: Vec<Vec2> = (0..n).map(|v| u[v] + Vec2::new(dir[2 * v], dir[2 * v + 1]) * step).collect();
                if s.energy(&trial) <= e0 - 1e-4 * step * dec {
                    u = trial;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                // no representable decrease left
                converged = dec <= 1e-8 * scale;
                break;
            }
        }
        if !converged {
            return Err(Error::IterationCap { solver: "newton", iterations: iters, residual: last });
        }
        let resp = s.responses(&u);
        let gb = s.bulk_gradient(&resp);
        let slips = layout.slips(&u, &s.w);
        let mut changed = false;
        for v in 0..n {
            let Some(sd) = layout.slip[v] else { continue };
            let gv = gb[2 * v + sd.comp];
            match status[v] {
                Status::Stuck => {
                    if gv.abs() > s.cost[v] * (1.0 + 1e-9) + 1e-14 * total_area * m.law.sigma_y {
                        status[v] = Status::Slide(gv.signum());
                        changed = true;
                    }
                }
                Status::Slide(sign) => {
                    if sign * (slips[v] - m.slip_prev[v]) <= 0.0 {
                        status[v] = Status::Stuck;
                        set_comp(&mut u[v], sd.comp, comp(s.w[v], sd.comp) - m.slip_prev[v]);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return finish(&s, u, iters, Some(tol.tol_adm));
        }
    }
    Err(Error::IterationCap { solver: "slip active set", iterations: MAX_ACTIVE_SET, residual: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BoundaryKind, Side, Split};
    use std::sync::Arc;

    fn setup(n: usize) -> (Arc<Mesh>, BoundaryLayout) {
        let mesh = Arc::new(Mesh::rectangle(0.0, 1.0, 0.0, 1.0, n, n, Split::Crossed).unwrap());
        let layout = BoundaryLayout::new(&mesh);
        (mesh, layout)
    }

    #[test]
    fn layout_fixes_normals_and_corners() {
        let (mesh, layout) = setup(2);
        for (v, x) in mesh.vertices().iter().enumerate() {
            let on_x = x.x == 0.0 || x.x == 1.0;
            let on_y = x.y == 0.0 || x.y == 1.0;
            assert_eq!(layout.fixed[v], [on_x, on_y]);
            assert_eq!(layout.slip[v].is_some(), on_x != on_y);
        }
    }

    #[test]
    fn zero_datum_gives_zero_triple() {
        let (mesh, layout) = setup(3);
        let law = MaterialLaw::default();
        let alpha = ScalarP1Field::constant(mesh.clone(), 1.0);
        let nt = mesh.num_triangles();
        let nv = mesh.num_vertices();
        let datum = |_: Point| Vec2::ZERO;
        let m = Mechanics { law: &law, alpha: &alpha, p_prev: &vec![SymTensor2::ZERO; nt], slip_prev: &vec![0.0; nv], datum: &datum, layout: &layout };
        let sol = minimize_mechanical(&m, &vec![Vec2::ZERO; nv], &Tolerances::default()).unwrap();
        assert_eq!(sol.energy, 0.0);
        assert!(sol.triple.e.iter().all(|e| e.max_abs() == 0.0));
    }

    /// Uniform strain `e = G` energy: `μ0 |dev G|² + ½ κ0 tr(G)²`.
    #[test]
    fn homogeneous_shear_below_and_above_yield() {
        let (mesh, layout) = setup(4);
        let law = MaterialLaw::default();
        let alpha = ScalarP1Field::constant(mesh.clone(), 1.0);
        let nt = mesh.num_triangles();
        let nv = mesh.num_vertices();
        for (amp, plastic) in [(0.002, false), (0.01, true)] {
            let g = SymTensor2::diag(amp, -amp);
            let datum = move |x: Point| g.apply(x);
            let m = Mechanics { law: &law, alpha: &alpha, p_prev: &vec![SymTensor2::ZERO; nt], slip_prev: &vec![0.0; nv], datum: &datum, layout: &layout };
            // start away from the solution so Newton has work to do
            let guess: Vec<Vec2> = mesh.vertices().iter().map(|x| Vec2::new(0.3 * amp * x.y * x.x, 0.0)).collect();
            let sol = minimize_mechanical(&m, &guess, &Tolerances::default()).unwrap();
            let y = law.yield_radius(1.0);
            let s_tr = 2.0 * law.mu0 * g.norm();
            let dp = if plastic { (s_tr - y) / (2.0 * law.mu0) } else { 0.0 };
            let n = g / g.norm();
            // on the plastic branch the reduced energy grows only linearly
            // along the flow direction, which limits how sharply the
            // minimiser is resolved
            let tol = if plastic { 1e-6 } else { 1e-10 } * amp;
            for t in 0..nt {
                assert!((sol.triple.p[t] - n * dp).norm() < tol, "{:?}", sol.triple.p[t]);
                assert!((sol.triple.e[t] - (g - n * dp)).norm() < tol);
                let sigma = law.stress(1.0, sol.triple.e[t]).dev();
                let expected_sigma = if plastic { n * y } else { g * (2.0 * law.mu0) };
                assert!((sigma - expected_sigma).norm() < 1e-6 * y);
            }
            let e = g - n * dp;
            let expected = law.energy_density(1.0, e) + y * dp;
            assert!((sol.energy - expected).abs() < 1e-9 * expected);
            assert!(sol.slip.iter().all(|s| s.abs() < 1e-12));
        }
    }

    #[test]
    fn free_side_relaxes_from_stretched_start() {
        let mesh = Arc::new(Mesh::rectangle(0.0, 1.0, 0.0, 1.0, 3, 3, Split::Crossed).unwrap().with_boundary(Side::Top, BoundaryKind::Neumann));
        let layout = BoundaryLayout::new(&mesh);
        let law = MaterialLaw::default();
        let alpha = ScalarP1Field::constant(mesh.clone(), 1.0);
        let nt = mesh.num_triangles();
        let nv = mesh.num_vertices();
        let datum = |_: Point| Vec2::ZERO;
        let m = Mechanics { law: &law, alpha: &alpha, p_prev: &vec![SymTensor2::ZERO; nt], slip_prev: &vec![0.0; nv], datum: &datum, layout: &layout };
        let guess: Vec<Vec2> = mesh.vertices().iter().map(|x| Vec2::new(0.0, 1e-3 * x.y)).collect();
        let sol = minimize_mechanical(&m, &guess, &Tolerances::default()).unwrap();
        assert!(sol.energy.abs() < 1e-14);
    }

    #[test]
    fn severe_tangential_datum_slips() {
        // a tangential translation of the top side must be absorbed either
        // by a plastic layer or by slip; with the boundary fully damaged,
        // slip costs V(0) against at least V(1/3) in the layer
        let (mesh, layout) = setup(4);
        let law = MaterialLaw::default();
        let alpha = ScalarP1Field::from_fn(mesh.clone(), |x| if x.y == 1.0 { 0.0 } else { 1.0 });
        let nt = mesh.num_triangles();
        let nv = mesh.num_vertices();
        let datum = |x: Point| if x.y == 1.0 { Vec2::new(0.05, 0.0) } else { Vec2::ZERO };
        let m = Mechanics { law: &law, alpha: &alpha, p_prev: &vec![SymTensor2::ZERO; nt], slip_prev: &vec![0.0; nv], datum: &datum, layout: &layout };
        let sol = minimize_mechanical(&m, &vec![Vec2::ZERO; nv], &Tolerances::default()).unwrap();
        assert!(sol.slip.iter().any(|s| s.abs() > 1e-3), "{:?}", sol.slip);
        let stuck = evaluate_mechanical(&m, &mesh.vertices().iter().map(|&x| datum(x)).collect::<Vec<_>>()).unwrap();
        assert!(sol.energy < stuck.energy);
        // no admissible slip direction lowers the energy further
        let u: Vec<Vec2> = match &sol.triple.u {
            VectorFieldPW::P1 { values, .. } => values.clone(),
            _ => unreachable!(),
        };
        for (v, sd) in layout.slip.iter().enumerate() {
            let Some(sd) = sd else { continue };
            for h in [-1e-6, 1e-6] {
                let mut w = u.clone();
                let c = comp(w[v], sd.comp) + h;
                set_comp(&mut w[v], sd.comp, c);
                assert!(evaluate_mechanical(&m, &w).unwrap().energy >= sol.energy - 1e-12);
            }
        }
    }
}
