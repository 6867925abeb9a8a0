//! Driver for the time-discrete evolution: run configuration, the time loop
//! with external work and energy balance, and CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryKind, Mesh, Side, Split};
use crate::model::{stress_constraint_check, MaterialLaw};
use crate::tensor::{Point, SymTensor2, Vec2};

use super::audit::{stability_audit, AuditResult};
use super::mechanical::BoundaryLayout;
use super::{energy_scale, incremental_step, EvolutionState, Order, StepContext, Tolerances};

/// Time profile `f` of the datum, with `f(0) = 0` and `f(T) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Load {
    /// `t / T`.
    Ramp,
    /// `sin(π t / 2T)`.
    Sine,
}

impl Load {
    pub fn parse(s: &str) -> Option<Load> {
        match s.trim() {
            "ramp" => Some(Load::Ramp),
            "sine" => Some(Load::Sine),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Load::Ramp => "ramp",
            Load::Sine => "sine",
        }
    }
}

/// Affine boundary datum `u_D(t, x) = f(t) · amplitude · A x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Datum {
    /// Rows of `A`.
    pub matrix: [[f64; 2]; 2],
    pub amplitude: f64,
    pub load: Load,
    pub t_final: f64,
}

impl Datum {
    pub fn factor(&self, t: f64) -> f64 {
        match self.load {
            Load::Ramp => t / self.t_final,
            Load::Sine => (std::f64::consts::FRAC_PI_2 * t / self.t_final).sin(),
        }
    }

    /// `f'(t)`.
    pub fn rate(&self, t: f64) -> f64 {
        match self.load {
            Load::Ramp => 1.0 / self.t_final,
            Load::Sine => {
                let c = std::f64::consts::FRAC_PI_2 / self.t_final;
                c * (c * t).cos()
            }
        }
    }

    pub fn eval(&self, t: f64, x: Point) -> Vec2 {
        let s = self.factor(t) * self.amplitude;
        let a = self.matrix;
        Vec2::new(a[0][0] * x.x + a[0][1] * x.y, a[1][0] * x.x + a[1][1] * x.y) * s
    }

    /// Symmetric part of `A`.
    pub fn strain_direction(&self) -> SymTensor2 {
        let a = self.matrix;
        SymTensor2::new(a[0][0], a[1][1], 0.5 * (a[0][1] + a[1][0]))
    }

    /// `E u̇_D(t)`, uniform in space.
    pub fn strain_rate(&self, t: f64) -> SymTensor2 {
        self.strain_direction() * (self.rate(t) * self.amplitude)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub nx: usize,
    pub ny: usize,
    pub split: Split,
    pub steps: usize,
    pub datum: Datum,
    pub law: MaterialLaw,
    pub tol: Tolerances,
    pub order: Order,
    pub alpha0: f64,
    pub neumann: Vec<Side>,
    pub seed: u64,
    /// Competitors per stability audit; 0 disables the audit.
    pub competitors: usize,
    /// Audit every this many steps (and at the first and last step).
    pub audit_every: usize,
    /// Field snapshot every this many steps; 0 disables snapshots.
    pub snapshot_every: usize,
}

impl RunConfig {
    /// Pure shear `diag(1, -1)` ramped past yield on the unit square.
    pub fn benchmark_plastic() -> Self {
        RunConfig {
            nx: 8,
            ny: 8,
            split: Split::Crossed,
            steps: 100,
            datum: Datum { matrix: [[1.0, 0.0], [0.0, -1.0]], amplitude: 0.01, load: Load::Ramp, t_final: 1.0 },
            law: MaterialLaw::default(),
            tol: Tolerances::default(),
            order: Order::MechanicalFirst,
            alpha0: 1.0,
            neumann: Vec::new(),
            seed: 42,
            competitors: 200,
            audit_every: 25,
            snapshot_every: 0,
        }
    }

    /// The same shear kept below yield with a sine profile.
    pub fn benchmark_elastic() -> Self {
        RunConfig {
            steps: 10,
            datum: Datum { matrix: [[1.0, 0.0], [0.0, -1.0]], amplitude: 0.002, load: Load::Sine, t_final: 1.0 },
            competitors: 0,
            ..Self::benchmark_plastic()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Invalid(format!("mesh resolution {}x{} must be positive", self.nx, self.ny)));
        }
        if self.steps == 0 {
            return Err(Error::Invalid("steps must be positive".into()));
        }
        if !(self.datum.t_final > 0.0) || !self.datum.t_final.is_finite() {
            return Err(Error::Invalid(format!("t_final = {} must be positive", self.datum.t_final)));
        }
        if !self.datum.amplitude.is_finite() || self.datum.matrix.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("datum must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha0) {
            return Err(Error::AlphaOutOfRange(self.alpha0));
        }
        if Side::ALL.iter().all(|s| self.neumann.contains(s)) {
            return Err(Error::Invalid("at least one side must carry the Dirichlet datum".into()));
        }
        let t = &self.tol;
        for (name, v) in [("tol_am", t.tol_am), ("tol_cg", t.tol_cg), ("tol_pg", t.tol_pg), ("tol_adm", t.tol_adm)] {
            if !(v > 0.0) {
                return Err(Error::Invalid(format!("{name} = {v} must be positive")));
            }
        }
        if t.max_am == 0 || t.max_newton == 0 || t.max_cg == 0 || t.max_pg == 0 {
            return Err(Error::Invalid("iteration caps must be positive".into()));
        }
        Ok(())
    }

    /// Unit square with the configured resolution and boundary kinds.
    pub fn mesh(&self) -> Result<Arc<Mesh>> {
        let mut mesh = Mesh::rectangle(0.0, 1.0, 0.0, 1.0, self.nx, self.ny, self.split)?;
        for &side in &self.neumann {
            mesh = mesh.with_boundary(side, BoundaryKind::Neumann);
        }
        Ok(Arc::new(mesh))
    }

    pub fn dt(&self) -> f64 {
        self.datum.t_final / self.steps as f64
    }
}

/// One line of `evolution.csv`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionRow {
    pub t: f64,
    pub q: f64,
    pub d: f64,
    pub grad: f64,
    pub diss_step: f64,
    pub diss_cum: f64,
    pub work: f64,
    pub balance_residual: f64,
    pub min_alpha: f64,
    pub p_mass: f64,
    pub stress_violation: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<EvolutionState>,
    pub rows: Vec<EvolutionRow>,
    pub audits: Vec<AuditResult>,
}

impl Trajectory {
    pub fn final_state(&self) -> &EvolutionState {
        self.states.last().expect("a trajectory has at least the initial state")
    }

    pub fn final_row(&self) -> &EvolutionRow {
        self.rows.last().expect("a trajectory has at least the initial row")
    }
}

/// `∫ C(α) e : E u̇_D dx` at time `t`.
fn power(law: &MaterialLaw, state: &EvolutionState, rate: SymTensor2) -> f64 {
    let mesh = state.alpha.mesh();
    (0..mesh.num_triangles()).map(|t| mesh.area(t) * law.stress(state.alpha.centroid_value(t), state.triple.e[t]).contract(rate)).sum()
}

fn row_of(law: &MaterialLaw, state: &EvolutionState, stored0: f64) -> Result<EvolutionRow> {
    let stress = stress_constraint_check(law, &state.alpha, &state.triple.e, 0.0)?;
    Ok(EvolutionRow {
        t: state.t,
        q: state.q,
        d: state.d,
        grad: state.grad,
        diss_step: state.diss_step,
        diss_cum: state.diss_cum,
        work: state.work,
        balance_residual: state.stored_energy() + state.diss_cum - stored0 - state.work,
        min_alpha: state.alpha.min(),
        p_mass: state.triple.plastic_mass(),
        stress_violation: stress.max_violation,
    })
}

fn audit_seed(seed: u64, step: usize) -> u64 {
    seed ^ (step as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs the incremental scheme on the configured time grid. When `out` is
/// given, writes `evolution.csv`, `audit.csv` and field snapshots there.
pub fn evolve(config: &RunConfig, out: Option<&Path>) -> Result<Trajectory> {
    config.validate()?;
    let mesh = config.mesh()?;
    let layout = BoundaryLayout::new(&mesh);
    let law = &config.law;
    let ctx = StepContext { law, layout: &layout, tol: &config.tol, order: config.order };
    let datum = config.datum;
    let dt = config.dt();
    let zero = |_: Point| Vec2::ZERO;
    let w0 = move |x: Point| datum.eval(0.0, x);

    // the initial state is the minimiser at t = 0; its dissipation is not
    // part of the evolution
    let virgin = EvolutionState::virgin(law, &mesh, config.alpha0);
    let mut state = incremental_step(&virgin, 0.0, &zero, &w0, &ctx)?;
    state.diss_step = 0.0;
    state.diss_cum = 0.0;
    state.work = 0.0;
    let stored0 = state.stored_energy();

    let mut audits = Vec::new();
    let audit_due = |i: usize| config.competitors > 0 && (i == 0 || i == config.steps || (config.audit_every > 0 && i % config.audit_every == 0));
    let run_audit = |i: usize, s: &EvolutionState, audits: &mut Vec<AuditResult>| -> Result<()> {
        if audit_due(i) {
            let mut rng = ChaCha8Rng::seed_from_u64(audit_seed(config.seed, i));
            audits.push(stability_audit(s, config, &layout, config.competitors, &mut rng)?);
        }
        Ok(())
    };
    run_audit(0, &state, &mut audits)?;

    let mut rows = vec![row_of(law, &state, stored0)?];
    let mut states = vec![state];
    for i in 1..=config.steps {
        let prev = states.last().unwrap();
        let (t0, t1) = ((i - 1) as f64 * dt, if i == config.steps { datum.t_final } else { i as f64 * dt });
        let w_prev = move |x: Point| datum.eval(t0, x);
        let w = move |x: Point| datum.eval(t1, x);
        let mut next = incremental_step(prev, t1, &w_prev, &w, &ctx)?;
        let p0 = power(law, prev, datum.strain_rate(t0));
        let p1 = power(law, &next, datum.strain_rate(t1));
        next.work = prev.work + 0.5 * (t1 - t0) * (p0 + p1);
        run_audit(i, &next, &mut audits)?;
        rows.push(row_of(law, &next, stored0)?);
        states.push(next);
    }
    let traj = Trajectory { states, rows, audits };
    if let Some(dir) = out {
        write_outputs(&traj, config, dir)?;
    }
    Ok(traj)
}

/// Energy unit of a state, used by the audit and by relative checks.
pub fn state_energy_scale(law: &MaterialLaw, state: &EvolutionState) -> f64 {
    energy_scale(law, state.alpha.mesh(), state.stored_energy())
}

pub fn write_outputs(traj: &Trajectory, config: &RunConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("evolution.csv"))?;
    w.write_record(["t", "Q", "D", "grad", "diss_step", "diss_cum", "work", "balance_residual", "min_alpha", "p_mass", "stress_violation"])?;
    for r in &traj.rows {
        let vals = [r.t, r.q, r.d, r.grad, r.diss_step, r.diss_cum, r.work, r.balance_residual, r.min_alpha, r.p_mass, r.stress_violation];
        w.write_record(vals.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    if !traj.audits.is_empty() {
        let mut w = csv::Writer::from_path(dir.join("audit.csv"))?;
        w.write_record(["t", "competitors", "min_slack", "energy_scale", "pass"])?;
        for a in &traj.audits {
            w.write_record([a.t.to_string(), a.competitors.to_string(), a.min_slack.to_string(), a.energy_scale.to_string(), a.pass.to_string()])?;
        }
        w.flush()?;
    }
    if config.snapshot_every > 0 {
        let mesh = traj.final_state().alpha.mesh();
        mesh.write_csv(BufWriter::new(File::create(dir.join("mesh_vertices.csv"))?), BufWriter::new(File::create(dir.join("mesh_triangles.csv"))?))?;
        for (i, s) in traj.states.iter().enumerate() {
            if i % config.snapshot_every != 0 && i != traj.states.len() - 1 {
                continue;
            }
            let mut a = BufWriter::new(File::create(dir.join(format!("snapshot_{i:04}_alpha.csv")))?);
            s.alpha.write_csv(&mut a)?;
            a.flush()?;
            let mut u = BufWriter::new(File::create(dir.join(format!("snapshot_{i:04}_u.csv")))?);
            s.triple.u.write_csv(&mut u)?;
            u.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn datum_profiles() {
        for load in [Load::Ramp, Load::Sine] {
            let d = Datum { matrix: [[0.0, 1.0], [0.0, 0.0]], amplitude: 2.0, load, t_final: 3.0 };
            assert_eq!(d.factor(0.0), 0.0);
            assert!((d.factor(3.0) - 1.0).abs() < 1e-15);
            let h = 1e-6;
            let fd = (d.factor(1.0 + h) - d.factor(1.0 - h)) / (2.0 * h);
            assert!((fd - d.rate(1.0)).abs() < 1e-8);
            assert_eq!(d.strain_direction(), SymTensor2::new(0.0, 0.0, 0.5));
            assert_eq!(d.eval(3.0, Point::new(0.0, 1.0)), Vec2::new(2.0, 0.0));
        }
    }

    #[test]
    fn zero_datum_is_constant() {
        let mut c = RunConfig::benchmark_elastic();
        c.datum.amplitude = 0.0;
        c.nx = 3;
        c.ny = 3;
        c.steps = 4;
        let traj = evolve(&c, None).unwrap();
        for r in &traj.rows {
            assert_eq!(r.q, 0.0);
            assert_eq!(r.balance_residual, 0.0);
            assert_eq!(r.min_alpha, 1.0);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = RunConfig::benchmark_elastic();
        c.steps = 0;
        assert!(evolve(&c, None).unwrap_err().is_input_error());
        let mut c = RunConfig::benchmark_elastic();
        c.neumann = Side::ALL.to_vec();
        assert!(c.validate().is_err());
        let mut c = RunConfig::benchmark_elastic();
        c.law.eps0 = 0.0;
        assert!(c.validate().unwrap_err().is_input_error());
    }

    #[test]
    fn elastic_run_balance_is_second_order() {
        let mut residuals = Vec::new();
        for steps in [4, 8] {
            let mut c = RunConfig::benchmark_elastic();
            c.nx = 4;
            c.ny = 4;
            c.steps = steps;
            let traj = evolve(&c, None).unwrap();
            assert!(traj.rows.iter().all(|r| r.diss_step == 0.0 && r.min_alpha == 1.0));
            residuals.push(traj.final_row().balance_residual.abs());
        }
        let order = (residuals[0] / residuals[1]).log2();
        assert!(order > 1.8, "{residuals:?}");
    }
}
