//! The full invariant suite behind `reshlab verify`. Every check records a
//! pass flag and a one-line detail; artifacts go to `verify.csv` plus one
//! subdirectory per experiment.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fields::{leibniz_product, ScalarP1Field, VectorFieldPW};
use crate::lab::{excess_report_from, lab_norms, test_family, write_lab_csv, Example, LabConstruction, SupportModel, PAIR_TOL};
use crate::lsc::{constant_case, example31_case, lsc_check, write_lsc_csv};
use crate::measure::{Cell, DiscreteMeasure, FnField, Segment, TestField};
use crate::mesh::{Mesh, Split};
use crate::model::{stress_constraint_check, MaterialLaw};
use crate::solver::{brute_force_return_map, evolve, return_map, RunConfig, Trajectory};
use crate::tensor::{Point, SymTensor2, Vec2};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

pub const CHECKS: [&str; 10] = [
    "example31-golden",
    "example31-atom",
    "example37-segment",
    "lsc-harness",
    "leibniz",
    "convex-functional",
    "return-map",
    "shear-benchmark",
    "energy-balance",
    "stability-audit",
];

type Check = Result<(bool, String)>;

fn sub(out: Option<&Path>, name: &str) -> Option<std::path::PathBuf> {
    out.map(|d| d.join(name))
}

fn family_refs(family: &[crate::measure::ProfileField]) -> Vec<&dyn TestField> {
    family.iter().map(|f| f as &dyn TestField).collect()
}

fn lab_run(example: Example, ks: &[usize], out: Option<&Path>) -> Result<(crate::lab::ExcessReport, Vec<crate::lab::LabNorms>, Vec<LabConstruction>)> {
    let built = ks.iter().map(|&k| LabConstruction::build(example, k)).collect::<Result<Vec<_>>>()?;
    let mus = built.iter().map(|c| c.concentrating_measure()).collect::<Result<Vec<_>>>()?;
    let norms = built.iter().map(lab_norms).collect::<Result<Vec<_>>>()?;
    let family = test_family();
    let report = excess_report_from(example, &family_refs(&family), ks, &mus)?;
    if let Some(dir) = out {
        write_lab_csv(&report, &norms, dir)?;
    }
    Ok((report, norms, built))
}

fn example31_golden(norms: &[crate::lab::LabNorms]) -> Check {
    let mut worst = 0.0f64;
    let mut pass = true;
    for n in norms {
        let k = n.k as f64;
        let errs = [(n.gradient_sq - 6.0).abs(), (n.strain_variation - (2.0 + SQRT_2)).abs(), (n.product_variation - (1.0 + FRAC_1_SQRT_2)).abs()];
        pass &= errs.iter().all(|&e| e <= 1e-9) && (n.l1_u - 1.0 / k).abs() <= 1e-12;
        worst = errs.iter().copied().fold(worst, f64::max);
    }
    Ok((pass, format!("ks {:?}, worst golden error {worst:.3e}", norms.iter().map(|n| n.k).collect::<Vec<_>>())))
}

fn predicted_errors(report: &crate::lab::ExcessReport) -> Result<Vec<Vec<f64>>> {
    let family = test_family();
    family
        .iter()
        .zip(&report.table)
        .map(|(phi, row)| {
            let pred = report.example.predicted_limit(phi)?;
            Ok(row.iter().map(|p| (p.value - pred).abs()).collect())
        })
        .collect()
}

fn example31_atom(report: &crate::lab::ExcessReport) -> Check {
    let errs = predicted_errors(report)?;
    // |error| ≤ C/k with C = 1
    let c = errs.iter().flat_map(|row| row.iter().zip(&report.ks).map(|(e, &k)| e * k as f64)).fold(0.0, f64::max);
    let ratio = report.segment_fit.residual / report.atom_fit.residual.max(f64::MIN_POSITIVE);
    let pass = report.selected == Some(SupportModel::Atom) && c <= 1.0 && ratio >= 10.0;
    Ok((pass, format!("max k·|error| {c:.3e}, segment/atom residual ratio {ratio:.3e}")))
}

fn example37_segment(report: &crate::lab::ExcessReport) -> Check {
    let errs = predicted_errors(report)?;
    let last = errs.iter().map(|row| *row.last().unwrap()).fold(0.0, f64::max);
    let pass = report.selected == Some(SupportModel::Segment) && last <= 5e-2;
    Ok((pass, format!("max |error| at k = {} is {last:.3e}, selected {:?}", report.ks.last().unwrap(), report.selected)))
}

fn lsc_harness(seed: u64, out: Option<&Path>) -> Check {
    let target = 1.0 + FRAC_1_SQRT_2;
    let r = lsc_check(&example31_case(&[4, 16, 64])?, 1e-10)?;
    let mut pass = r.pass && r.lhs == 0.0 && r.rows.iter().all(|row| (row.rhs - target).abs() <= 1e-9) && (r.gap - target).abs() <= 1e-6;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        write_lsc_csv(&r.rows, &dir.join("lsc_example31.csv"))?;
    }
    let mut min_gap = f64::INFINITY;
    for i in 0..10u64 {
        let c = lsc_check(&constant_case(seed.wrapping_add(i), &[1, 2, 3])?, 1e-10)?;
        min_gap = min_gap.min(c.gap);
        if let Some(dir) = out {
            write_lsc_csv(&c.rows, &dir.join(format!("lsc_constant_{i}.csv")))?;
        }
    }
    pass &= min_gap >= -1e-10;
    Ok((pass, format!("example31 gap {:.12e}, smallest constant-case gap {min_gap:.3e}", r.gap)))
}

fn pairing_mismatch(alpha: &ScalarP1Field, u: &VectorFieldPW, family: &[&dyn TestField]) -> Result<f64> {
    let (lhs, rhs) = leibniz_product(alpha, u)?;
    let mut worst = 0.0f64;
    for phi in family {
        worst = worst.max((lhs.pair(*phi, PAIR_TOL)?.value - rhs.pair(*phi, PAIR_TOL)?.value).abs());
    }
    Ok(worst)
}

fn leibniz(labs: &[&LabConstruction], rng: &mut ChaCha8Rng) -> Check {
    let family = test_family();
    let refs = family_refs(&family);
    let mut worst_lab = 0.0f64;
    for c in labs {
        worst_lab = worst_lab.max(pairing_mismatch(&c.alpha, &c.u, &refs)?);
    }
    // smooth global probes for the random cases
    let smooth: Vec<Box<dyn TestField>> = vec![
        Box::new(FnField { f: |x: Point| SymTensor2::new((x.x + 2.0 * x.y).cos(), x.x * x.y, 1.0), lipschitz: 3.0 }),
        Box::new(FnField { f: |x: Point| SymTensor2::new(x.y * x.y, (2.0 * x.x).sin(), x.x - x.y), lipschitz: 4.0 }),
        Box::new(FnField { f: |x: Point| SymTensor2::new(0.0, 1.0, 0.0) * (x.x * x.x + x.y).exp(), lipschitz: 3.0 * std::f64::consts::E * std::f64::consts::E }),
    ];
    let smooth_refs: Vec<&dyn TestField> = smooth.iter().map(|f| f.as_ref()).collect();
    let mut worst_random = 0.0f64;
    for i in 0..20 {
        let split = [Split::Diagonal, Split::AntiDiagonal, Split::Crossed][i % 3];
        let n = rng.gen_range(2..6);
        let mesh = Arc::new(Mesh::rectangle(-1.0, 1.0, -1.0, 1.0, n, n, split)?);
        let alpha = ScalarP1Field::new(mesh.clone(), (0..mesh.num_vertices()).map(|_| rng.gen_range(0.0..1.0)).collect())?;
        let u = VectorFieldPW::p1(mesh.clone(), (0..mesh.num_vertices()).map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())?;
        worst_random = worst_random.max(pairing_mismatch(&alpha, &u, &smooth_refs)?);
    }
    Ok((worst_lab <= 1e-8 && worst_random <= 1e-8, format!("lab mismatch {worst_lab:.3e}, random P1 mismatch {worst_random:.3e}")))
}

/// Anisotropic, position-dependent integrand used by the functional check.
fn aniso(x: Point, xi: SymTensor2) -> f64 {
    (1.0 + 0.5 * x.x.sin() * x.y.cos()) * (xi.xx * xi.xx + 2.0 * xi.yy * xi.yy + 3.0 * xi.xy * xi.xy).sqrt() + 0.25 * xi.trace().abs()
}

fn random_tensor(rng: &mut ChaCha8Rng) -> SymTensor2 {
    SymTensor2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn random_point(rng: &mut ChaCha8Rng) -> Point {
    Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn convex_functional(rng: &mut ChaCha8Rng) -> Check {
    let h = |x: Point, xi: SymTensor2| aniso(x, xi);
    let mut atom_err = 0.0f64;
    let mut other_err = 0.0f64;
    for _ in 0..100 {
        let atoms_a = DiscreteMeasure::from_parts(vec![], vec![], vec![]);
        let atoms_a = (0..rng.gen_range(1..5)).fold(atoms_a, |m, _| m.with_atom(random_point(rng), random_tensor(rng)));
        let atoms_b = (0..rng.gen_range(1..5)).fold(DiscreteMeasure::zero(), |m, _| m.with_atom(random_point(rng), random_tensor(rng)));
        // a single dyadic scale keeps atom products exact
        let c = 2f64.powi(rng.gen_range(-3..4));
        let ha = atoms_a.convex_functional(&h)?;
        atom_err = atom_err.max(relative(atoms_a.add(&atoms_b).convex_functional(&h)?, ha + atoms_b.convex_functional(&h)?));
        atom_err = atom_err.max(relative(atoms_a.scale(c).convex_functional(&h)?, c * ha));

        // cells against segments and atoms: mutually singular parts
        let mut cells = DiscreteMeasure::zero();
        for _ in 0..rng.gen_range(1..4) {
            let p = random_point(rng);
            let tri = [p, p + Vec2::new(rng.gen_range(0.1..0.5), 0.0), p + Vec2::new(0.0, rng.gen_range(0.1..0.5))];
            cells.push_cell(Cell::constant(tri, random_tensor(rng)));
        }
        let mut thin = atoms_b.clone();
        for _ in 0..rng.gen_range(1..4) {
            thin.push_segment(Segment::affine(random_point(rng), random_point(rng), random_tensor(rng), random_tensor(rng)));
        }
        let s = rng.gen_range(0.1..10.0);
        let hc = cells.convex_functional(&h)?;
        let ht = thin.convex_functional(&h)?;
        other_err = other_err.max(relative(cells.add(&thin).convex_functional(&h)?, hc + ht));
        other_err = other_err.max(relative(cells.scale(s).convex_functional(&h)?, s * hc));
        other_err = other_err.max(relative(thin.scale(s).convex_functional(&h)?, s * ht));
    }
    Ok((atom_err <= 4.0 * f64::EPSILON && other_err <= 1e-10, format!("atom relative error {atom_err:.3e}, other relative error {other_err:.3e}")))
}

fn return_map_check(rng: &mut ChaCha8Rng) -> Check {
    let law = MaterialLaw::default();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let alpha = rng.gen_range(0.0..1.0);
        let trial = SymTensor2::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05));
        let a = rng.gen_range(-0.02..0.02);
        let p_prev = SymTensor2::new(a, -a, rng.gen_range(-0.02..0.02));
        let (_, p) = return_map(&law, alpha, trial, p_prev);
        worst = worst.max((p - brute_force_return_map(&law, alpha, trial, p_prev)).norm());
    }
    Ok((worst <= 1e-9, format!("max discrepancy {worst:.3e}")))
}

/// Homogeneous incremental problem in `(α, s)` with `p = s n` along the
/// deviatoric loading direction `n`. Returns the first step index with
/// plastic flow or damage.
fn homogeneous_onset(config: &RunConfig) -> Option<usize> {
    let law = &config.law;
    let g = config.datum.strain_direction();
    let n = g.dev() * (1.0 / g.dev().norm());
    let (mut alpha, mut s) = (config.alpha0, 0.0);
    let dt = config.dt();
    for i in 0..=config.steps {
        let t = if i == config.steps { config.datum.t_final } else { i as f64 * dt };
        let strain = g * (config.datum.factor(t) * config.datum.amplitude);
        let energy = |a: f64, x: f64| law.energy_density(a, strain - n * x) + law.d(a) + law.yield_radius(a) * (x - s).abs();
        let hi = 2.0 * strain.norm() + s.abs() + 1.0;
        let mut best = (energy(alpha, s), alpha, s);
        for j in 0..=200 {
            let a = alpha * j as f64 / 200.0;
            let x = golden(|x| energy(a, x), -hi, hi);
            let e = energy(a, x);
            if e < best.0 - 1e-14 * best.0.abs().max(1.0) {
                best = (e, a, x);
            }
        }
        if best.1 < alpha || (best.2 - s).abs() > 1e-10 {
            return Some(i);
        }
        alpha = best.1;
        s = best.2;
    }
    None
}

fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn shear_benchmark(config: &RunConfig, traj: &Trajectory) -> Check {
    let law = &config.law;
    let sim = traj.rows.iter().position(|r| r.p_mass > 0.0 || r.min_alpha < config.alpha0);
    let oracle = homogeneous_onset(config);
    let onset_ok = matches!((sim, oracle), (Some(a), Some(b)) if a.abs_diff(b) <= 1);
    let mut stress_ok = true;
    for s in &traj.states {
        stress_ok &= stress_constraint_check(law, &s.alpha, &s.triple.e, 1e-6 * law.sigma_y)?.pass;
    }
    let qs0 = traj.states.windows(2).all(|w| w[1].alpha.values().iter().zip(w[0].alpha.values()).all(|(a, b)| a <= b))
        && traj.rows.windows(2).all(|w| w[1].min_alpha <= w[0].min_alpha);
    let diss = traj.rows.windows(2).all(|w| w[1].diss_cum >= w[0].diss_cum);
    Ok((
        onset_ok && stress_ok && qs0 && diss,
        format!("onset step {sim:?} vs oracle {oracle:?}, stress {stress_ok}, irreversibility {qs0}, dissipation monotone {diss}"),
    ))
}

fn energy_balance(plastic: &Trajectory, out: Option<&Path>) -> Check {
    let mut residuals = Vec::new();
    for steps in [10, 20, 40] {
        let mut c = RunConfig::benchmark_elastic();
        c.steps = steps;
        let dir = sub(out, &format!("elastic_{steps}"));
        let traj = evolve(&c, dir.as_deref())?;
        residuals.push(traj.final_row().balance_residual.abs());
    }
    let order = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    let last = plastic.final_row();
    let ratio = last.balance_residual.abs() / last.work.abs();
    Ok((order >= 1.0 && ratio <= 1e-3, format!("elastic |R(T)| {}, order {order:.3}, plastic |R|/work {ratio:.3e}", residuals.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>().join(" "))))
}

fn stability(traj: &Trajectory) -> Check {
    let worst = traj.audits.iter().map(|a| a.min_slack / a.energy_scale).fold(f64::INFINITY, f64::min);
    let pass = !traj.audits.is_empty() && traj.audits.iter().all(|a| a.pass && a.competitors >= 200);
    Ok((pass, format!("{} checkpoints, smallest relative slack {worst:.3e}", traj.audits.len())))
}

fn outcome(id: usize, check: Check) -> Result<CheckOutcome> {
    let (pass, detail) = match check {
        Ok(v) => v,
        Err(e @ (Error::InconclusiveFit(_) | Error::InconsistentLimit(_))) => (false, e.to_string()),
        Err(e) => return Err(e),
    };
    Ok(CheckOutcome { id: id + 1, name: CHECKS[id], pass, detail })
}

/// Runs every check with randomness derived from `seed`. With `out`,
/// writes `verify.csv` and the artifacts of each experiment.
pub fn run_verify(seed: u64, out: Option<&Path>) -> Result<Vec<CheckOutcome>> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::with_capacity(CHECKS.len());

    let (_, norms31, labs31) = lab_run(Example::Ex31, &[4, 16, 64], sub(out, "lab").as_deref())?;
    results.push(outcome(0, example31_golden(&norms31))?);
    let (r31_fine, _, _) = lab_run(Example::Ex31, &[16, 64, 256], None)?;
    results.push(outcome(1, example31_atom(&r31_fine))?);
    let ex37 = Example::Ex37 { q: 1.5 };
    let (r37, _, labs37) = lab_run(ex37, &[16, 64, 256], sub(out, "lab").as_deref())?;
    results.push(outcome(2, example37_segment(&r37))?);
    results.push(outcome(3, lsc_harness(seed, sub(out, "lsc").as_deref()))?);
    let labs: Vec<&LabConstruction> = labs31.iter().chain(labs37.iter().filter(|c| c.k <= 64)).collect();
    results.push(outcome(4, leibniz(&labs, &mut rng))?);
    results.push(outcome(5, convex_functional(&mut rng))?);
    results.push(outcome(6, return_map_check(&mut rng))?);

    let mut plastic = RunConfig::benchmark_plastic();
    plastic.seed = seed;
    let traj = evolve(&plastic, sub(out, "shear").as_deref())?;
    results.push(outcome(7, shear_benchmark(&plastic, &traj))?);
    results.push(outcome(8, energy_balance(&traj, out))?);
    results.push(outcome(9, stability(&traj))?);

    if let Some(dir) = out {
        let mut w = csv::Writer::from_path(dir.join("verify.csv"))?;
        w.write_record(["id", "check", "pass", "detail"])?;
        for r in &results {
            w.write_record([r.id.to_string(), r.name.to_string(), r.pass.to_string(), r.detail.clone()])?;
        }
        w.flush()?;
    }
    Ok(results)
}
