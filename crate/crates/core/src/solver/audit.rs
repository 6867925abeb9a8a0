//! Sampled global-stability check: random admissible competitors with
//! `α̂ ≤ α` must not undercut the stored energy plus the dissipation needed
//! to reach them.

use rand::Rng;

use crate::error::{Error, Result};
use crate::fields::{ScalarP1Field, VectorFieldPW};
use crate::model::{admissible_check, p1_strain, AdmissibleTriple};
use crate::tensor::{Point, SymTensor2, Vec2};

use super::evolution::{state_energy_scale, RunConfig};
use super::local::return_map;
use super::mechanical::BoundaryLayout;
use super::{increment_energy, EvolutionState};

/// Audit passes when every slack is at least `-QS1_TOL` times the energy scale.
pub const QS1_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditResult {
    pub t: f64,
    pub competitors: usize,
    pub min_slack: f64,
    pub energy_scale: f64,
    pub pass: bool,
}

/// A candidate `(α̂, û, ê, p̂)` together with its boundary slip.
#[derive(Clone, Debug)]
pub struct Competitor {
    pub alpha: ScalarP1Field,
    pub triple: AdmissibleTriple,
    pub slip: Vec<f64>,
}

impl Competitor {
    /// Validates `α̂ ≤ α` vertex-wise and the admissibility of the triple
    /// for the datum `w`.
    pub fn new(
        state: &EvolutionState,
        alpha: ScalarP1Field,
        triple: AdmissibleTriple,
        layout: &BoundaryLayout,
        w: &dyn Fn(Point) -> Vec2,
        tol_adm: f64,
    ) -> Result<Self> {
        if alpha.values().iter().zip(state.alpha.values()).any(|(a, b)| !(*a >= 0.0 && a <= b)) {
            return Err(Error::Inadmissible("competitor damage must satisfy 0 ≤ α̂ ≤ α".into()));
        }
        let rep = admissible_check(&triple, w, tol_adm)?;
        if !rep.pass {
            return Err(Error::Inadmissible(format!(
                "competitor residuals bulk {:.3e}, boundary {:.3e}, trace {:.3e}",
                rep.bulk, rep.boundary, rep.trace
            )));
        }
        let u = vertex_values(&triple.u)?;
        let wv: Vec<Vec2> = triple.mesh().vertices().iter().map(|&x| w(x)).collect();
        let slip = layout.slips(&u, &wv);
        Ok(Competitor { alpha, triple, slip })
    }
}

fn vertex_values(u: &VectorFieldPW) -> Result<Vec<Vec2>> {
    match u {
        VectorFieldPW::P1 { values, .. } => Ok(values.clone()),
        _ => Err(Error::FieldMismatch("competitor displacement must be continuous P1".into())),
    }
}

/// `Q(α̂,ê) + D(α̂) + ∫|∇α̂|² + H(α̂, p̂ - p) - [Q + D + ∫|∇α|²]`, where
/// `H` includes the boundary slip part.
pub fn qs1_slack(config: &RunConfig, layout: &BoundaryLayout, state: &EvolutionState, c: &Competitor) -> Result<f64> {
    let law = &config.law;
    let hat = increment_energy(law, layout, &c.alpha, &c.triple, &c.slip, &state.triple.p, &state.slip)?;
    let cur = increment_energy(law, layout, &state.alpha, &state.triple, &state.slip, &state.triple.p, &state.slip)?;
    Ok(hat.total() - (cur.q + cur.d + cur.grad))
}

fn random_alpha(state: &EvolutionState, rng: &mut impl Rng) -> ScalarP1Field {
    let a = state.alpha.values();
    let s = 10f64.powf(rng.gen_range(-3.0..0.0));
    let values = match rng.gen_range(0..3) {
        0 => a.to_vec(),
        1 => a.iter().map(|&v| v * (1.0 - s)).collect(),
        _ => a.iter().map(|&v| v * (1.0 - s * rng.gen_range(0.0..1.0))).collect(),
    };
    ScalarP1Field::new(state.alpha.mesh().clone(), values).expect("same mesh")
}

fn random_displacement(state: &EvolutionState, layout: &BoundaryLayout, scale: f64, rng: &mut impl Rng) -> Result<Vec<Vec2>> {
    let mesh = state.alpha.mesh();
    let mut u = vertex_values(&state.triple.u)?;
    let delta = scale * 10f64.powf(rng.gen_range(-4.0..-1.0));
    let smooth = rng.gen_bool(0.5);
    let (a, b) = (rng.gen_range(1..4) as f64, rng.gen_range(1..4) as f64);
    let dir = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let (lo, hi) = mesh.bounds();
    for (v, x) in mesh.vertices().iter().enumerate() {
        let d = if smooth {
            let sx = (x.x - lo.x) / (hi.x - lo.x);
            let sy = (x.y - lo.y) / (hi.y - lo.y);
            dir * ((std::f64::consts::PI * a * sx).cos() * (std::f64::consts::PI * b * sy).cos())
        } else {
            Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        };
        // normal components stay on the datum
        let d = Vec2::new(if layout.fixed[v][0] { 0.0 } else { d.x }, if layout.fixed[v][1] { 0.0 } else { d.y });
        u[v] = u[v] + d * delta;
    }
    Ok(u)
}

fn random_deviatoric(rng: &mut impl Rng) -> SymTensor2 {
    let a = rng.gen_range(-1.0..1.0);
    SymTensor2::new(a, -a, rng.gen_range(-1.0..1.0))
}

/// Draws one admissible competitor. The plastic strain comes either from
/// the return map at `α̂` or from a random deviatoric transfer between `e`
/// and `p`.
pub fn random_competitor(config: &RunConfig, layout: &BoundaryLayout, state: &EvolutionState, rng: &mut impl Rng) -> Result<Competitor> {
    let law = &config.law;
    let mesh = state.alpha.mesh().clone();
    let w = |x: Point| config.datum.eval(state.t, x);
    let alpha = random_alpha(state, rng);
    let u_now = vertex_values(&state.triple.u)?;
    let u_scale = u_now.iter().map(|v| v.norm()).fold(config.datum.amplitude.abs() * mesh.diameter(), f64::max).max(1e-12);
    let u = if rng.gen_bool(0.2) { u_now } else { random_displacement(state, layout, u_scale, rng)? };
    let field = VectorFieldPW::p1(mesh.clone(), u)?;
    let return_mapped = rng.gen_bool(0.5);
    let p_scale = state.triple.p.iter().map(|p| p.norm()).fold(law.yield_radius(1.0) / (2.0 * law.mu0), f64::max);
    let p: Vec<SymTensor2> = (0..mesh.num_triangles())
        .map(|t| {
            if return_mapped {
                return_map(law, alpha.centroid_value(t), p1_strain(&field, t), state.triple.p[t]).1
            } else if rng.gen_bool(0.5) {
                state.triple.p[t] + random_deviatoric(rng) * (p_scale * 10f64.powf(rng.gen_range(-4.0..-1.0)))
            } else {
                state.triple.p[t]
            }
        })
        .collect();
    let triple = AdmissibleTriple::from_displacement(field, p, &w)?;
    Competitor::new(state, alpha, triple, layout, &w, config.tol.tol_adm)
}

/// Smallest QS1 slack over `n` random competitors.
pub fn stability_audit(state: &EvolutionState, config: &RunConfig, layout: &BoundaryLayout, n: usize, rng: &mut impl Rng) -> Result<AuditResult> {
    let mut min_slack = f64::INFINITY;
    for _ in 0..n {
        let c = random_competitor(config, layout, state, rng)?;
        min_slack = min_slack.min(qs1_slack(config, layout, state, &c)?);
    }
    let energy_scale = state_energy_scale(&config.law, state);
    Ok(AuditResult { t: state.t, competitors: n, min_slack, energy_scale, pass: n == 0 || min_slack >= -QS1_TOL * energy_scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::evolution::evolve;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> RunConfig {
        let mut c = RunConfig::benchmark_plastic();
        c.nx = 4;
        c.ny = 4;
        c.steps = 8;
        c.competitors = 0;
        c
    }

    #[test]
    fn self_competitor_has_zero_slack() {
        let c = small();
        let traj = evolve(&c, None).unwrap();
        let s = traj.final_state();
        let layout = BoundaryLayout::new(s.alpha.mesh());
        let w = |x: Point| c.datum.eval(s.t, x);
        let comp = Competitor::new(s, s.alpha.clone(), s.triple.clone(), &layout, &w, 1e-9).unwrap();
        assert_eq!(qs1_slack(&c, &layout, s, &comp).unwrap(), 0.0);
    }

    #[test]
    fn broken_decomposition_is_rejected() {
        let c = small();
        let traj = evolve(&c, None).unwrap();
        let s = traj.final_state();
        let layout = BoundaryLayout::new(s.alpha.mesh());
        let w = |x: Point| c.datum.eval(s.t, x);
        let mut t = s.triple.clone();
        t.e[3] = t.e[3] + SymTensor2::new(1e-3, 0.0, 0.0);
        let err = Competitor::new(s, s.alpha.clone(), t, &layout, &w, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Inadmissible(_)));
        let mut raised = s.alpha.clone().into_values();
        raised[0] = 1.5;
        let raised = ScalarP1Field::new(s.alpha.mesh().clone(), raised).unwrap();
        assert!(Competitor::new(s, raised, s.triple.clone(), &layout, &w, 1e-9).is_err());
    }

    #[test]
    fn random_competitors_respect_stability() {
        let c = small();
        let traj = evolve(&c, None).unwrap();
        let s = traj.final_state();
        let layout = BoundaryLayout::new(s.alpha.mesh());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = stability_audit(s, &c, &layout, 60, &mut rng).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
