//! Exact constructions of damage/displacement sequences whose products
//! `α̃_k Eu_k` concentrate, and the machinery to identify their limits by
//! pairing with a finite family of test fields.
//!
//! `α_k` is the tent supported on the polygon `P_k`, equal to one on
//! `(-1/2k, 1/2k) × {0}`; `u_k = k 1_{A_k} e1` with
//! `A_k = (-1/2k, 1/2k) × (-1/k, 0)`. The second construction places
//! `N_k = ⌊k^{2-q}⌋` translated copies along `[0, 1] × {0}` with `u`
//! rescaled by `k^{q-1}`.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{symmetrized_gradient, Region, ScalarP1Field, VectorFieldPW};
use crate::measure::{DiscreteMeasure, Pairing, ProfileField, TestField};
use crate::mesh::{graded_lines, Mesh, Split};
use crate::quadrature::{integrate_unit_interval_with, Adaptive};
use crate::tensor::{sym_outer, Point, SymTensor2, Vec2};

/// Tolerance for every lab pairing.
pub const PAIR_TOL: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Example {
    /// Single tent at the origin on `(-1, 1)²`.
    Ex31,
    /// `⌊k^{2-q}⌋` tents along the unit segment on `(-2, 2)²`.
    Ex37 { q: f64 },
}

/// Candidate supports for the concentrated part of the limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportModel {
    /// `δ_0 M`.
    Atom,
    /// `M H¹⌊([0, 1] × {0})`.
    Segment,
}

impl SupportModel {
    pub fn name(self) -> &'static str {
        match self {
            SupportModel::Atom => "atom",
            SupportModel::Segment => "segment",
        }
    }
}

impl Example {
    pub fn name(self) -> &'static str {
        match self {
            Example::Ex31 => "example31",
            Example::Ex37 { .. } => "example37",
        }
    }

    pub fn q(self) -> f64 {
        match self {
            Example::Ex31 => 2.0,
            Example::Ex37 { q } => q,
        }
    }

    /// Half-width of the square domain.
    pub fn half_width(self) -> f64 {
        match self {
            Example::Ex31 => 1.0,
            Example::Ex37 { .. } => 2.0,
        }
    }

    /// Number of translated copies.
    pub fn copies(self, k: usize) -> usize {
        match self {
            Example::Ex31 => 1,
            Example::Ex37 { q } => ((k as f64).powf(2.0 - q) + 1e-9).floor() as usize,
        }
    }

    /// Exponent `r` of the leading error term `k^{-r}` of the pairings.
    pub fn rate(self) -> f64 {
        match self {
            Example::Ex31 => 1.0,
            Example::Ex37 { q } => 2.0 - q,
        }
    }

    /// The support model the construction is expected to select.
    pub fn expected_model(self) -> SupportModel {
        match self {
            Example::Ex31 => SupportModel::Atom,
            Example::Ex37 { .. } => SupportModel::Segment,
        }
    }

    /// Validates `k` (and `q`) for an exactly representable construction.
    pub fn check(self, k: usize) -> Result<()> {
        if k < 4 || !k.is_power_of_two() {
            return Err(Error::NotGridCompatible { k, reason: "k must be a power of two, at least 4".into() });
        }
        if let Example::Ex37 { q } = self {
            if !(q > 1.0 && q < 2.0) {
                return Err(Error::Invalid(format!("exponent q = {q} must lie in (1, 2)")));
            }
            let n = self.copies(k);
            if n == 0 || (2 * k) % n != 0 {
                return Err(Error::NotGridCompatible { k, reason: format!("copy spacing 1/{n} is not a multiple of 1/(2k)") });
            }
            // each copy of P_k has width 3/k
            if 3 * n > k {
                return Err(Error::Overlap(format!("{n} copies of width 3/{k} do not fit in a unit period")));
            }
        }
        Ok(())
    }

    /// Offsets `x_k^j` of the copies.
    pub fn offsets(self, k: usize) -> Vec<Point> {
        let n = self.copies(k);
        (0..n).map(|j| Vec2::new(j as f64 / n as f64, 0.0)).collect()
    }

    /// Amplitude of `u_k` on each `A_k^j`.
    pub fn amplitude(self, k: usize) -> f64 {
        (k as f64).powf(self.q() - 1.0)
    }

    /// Predicted limit of `∫ φ : d(α̃_k Eu_k)`.
    pub fn predicted_limit(self, phi: &dyn TestField) -> Result<f64> {
        match self {
            Example::Ex31 => Ok(-phi.eval(Vec2::ZERO).contract(e12())),
            Example::Ex37 { .. } => Ok(-segment_integral(phi, e12())?),
        }
    }
}

fn e12() -> SymTensor2 {
    sym_outer(Vec2::E1, Vec2::E2)
}

/// `∫_{[0,1]×{0}} φ : M dH¹`.
pub fn segment_integral(phi: &dyn TestField, m: SymTensor2) -> Result<f64> {
    let opts = Adaptive { tol: 1e-13, max_evals: 4_000_000 };
    let floor = |a: f64, b: f64| phi.roughness(Vec2::new(0.5 * (a + b), 0.0), 0.5 * (b - a)).map_or(0.0, |r| 2.0 * r * m.norm() * (b - a));
    integrate_unit_interval_with(|s| phi.eval(Vec2::new(s, 0.0)).contract(m), floor, opts)
        .map(|e| e.value)
        .map_err(|e| Error::Quadrature { tol: opts.tol, achieved: e.error, evals: e.evals })
}

/// The tent `α_k` centred at the origin.
pub fn alpha_k(k: usize, x: Point) -> f64 {
    let k = k as f64;
    let over = (x.x.abs() - 0.5 / k).max(0.0);
    (1.0 - k * x.y.abs() - k * over).max(0.0)
}

/// Graded crossed mesh whose fine band (spacing `1/(2k)`) covers every
/// copy of `P_k`.
pub fn lab_mesh(example: Example, k: usize) -> Result<Arc<Mesh>> {
    example.check(k)?;
    let h = 0.5 / k as f64;
    let w = example.half_width();
    let last = example.offsets(k).last().map(|p| p.x).unwrap_or(0.0);
    let xs = graded_lines(-w, w, -4.0 * h, last + 4.0 * h, h);
    let ys = graded_lines(-w, w, -4.0 * h, 4.0 * h, h);
    Ok(Arc::new(Mesh::rectilinear(xs, ys, Split::Crossed)?))
}

/// Damage and displacement of one member of a sequence.
#[derive(Clone, Debug)]
pub struct LabConstruction {
    pub example: Example,
    pub k: usize,
    pub alpha: ScalarP1Field,
    pub u: VectorFieldPW,
}

impl LabConstruction {
    pub fn build(example: Example, k: usize) -> Result<Self> {
        let mesh = lab_mesh(example, k)?;
        let offsets = example.offsets(k);
        let alpha = ScalarP1Field::from_fn(mesh.clone(), |x| offsets.iter().map(|&c| alpha_k(k, x - c)).sum());
        let kf = k as f64;
        let amp = example.amplitude(k);
        let regions = offsets
            .iter()
            .map(|&c| Region {
                polygon: vec![
                    c + Vec2::new(-0.5 / kf, -1.0 / kf),
                    c + Vec2::new(0.5 / kf, -1.0 / kf),
                    c + Vec2::new(0.5 / kf, 0.0),
                    c + Vec2::new(-0.5 / kf, 0.0),
                ],
                value: Vec2::E1 * amp,
            })
            .collect();
        let u = VectorFieldPW::piecewise_constant(mesh, regions)?;
        Ok(LabConstruction { example, k, alpha, u })
    }

    pub fn strain(&self) -> DiscreteMeasure {
        symmetrized_gradient(&self.u)
    }

    /// `α̃_k Eu_k`.
    pub fn concentrating_measure(&self) -> Result<DiscreteMeasure> {
        self.strain().scale_by_field(&self.alpha)
    }
}

/// `(α_k, u_k)` for the single-tent sequence.
pub fn build_example31(k: usize) -> Result<(ScalarP1Field, VectorFieldPW)> {
    let c = LabConstruction::build(Example::Ex31, k)?;
    Ok((c.alpha, c.u))
}

/// `(β_k, u_k)` for the many-tent sequence with exponent `q`.
pub fn build_example37(k: usize, q: f64) -> Result<(ScalarP1Field, VectorFieldPW)> {
    let c = LabConstruction::build(Example::Ex37 { q }, k)?;
    Ok((c.alpha, c.u))
}

/// The five-field bump family used to probe limits.
pub fn test_family() -> Vec<ProfileField> {
    let e11 = sym_outer(Vec2::E1, Vec2::E1);
    let e22 = sym_outer(Vec2::E2, Vec2::E2);
    vec![
        ProfileField::bump(Vec2::ZERO, 0.5, e12()),
        ProfileField::bump(Vec2::new(0.5, 0.0), 0.5, e12()),
        ProfileField::bump(Vec2::ZERO, 0.5, e11),
        ProfileField::bump(Vec2::ZERO, 0.5, e22),
        ProfileField::bump(Vec2::new(0.25, 0.25), 0.5, e12()),
    ]
}

/// `ψ ≡ 1` near `[0, 1] × {0}` times `e1 ⊙ e2`.
pub fn plateau_field() -> ProfileField {
    ProfileField::plateau(Vec2::ZERO, Vec2::E1, 0.1, 0.6, e12())
}

/// Least-squares fit of `P_k ≈ L + a k^{-r} + b k^{-2r}`; returns `L`.
/// Uses as many terms as there are data points (at most three).
pub fn extrapolate(ks: &[usize], values: &[f64], r: f64) -> f64 {
    let terms = ks.len().min(3);
    if terms == 0 {
        return f64::NAN;
    }
    let rows: Vec<Vec<f64>> = ks.iter().map(|&k| (0..terms).map(|j| (k as f64).powf(-r * j as f64)).collect()).collect();
    let sol = least_squares(&rows, values);
    sol[0]
}

/// Empirical convergence exponent from the last three values, in units of
/// `log k`. Infinite when the values agree to round-off.
pub fn empirical_rate(ks: &[usize], values: &[f64]) -> f64 {
    let n = values.len();
    if n < 3 {
        return f64::NAN;
    }
    let d1 = (values[n - 2] - values[n - 3]).abs();
    let d2 = (values[n - 1] - values[n - 2]).abs();
    let scale = values.iter().map(|v| v.abs()).fold(1e-300, f64::max);
    if d2 <= 1e-13 * scale {
        return f64::INFINITY;
    }
    (d1 / d2).ln() / (ks[n - 1] as f64 / ks[n - 2] as f64).ln()
}

/// Normal equations solved by Gaussian elimination with partial pivoting.
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let m = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut a = vec![vec![0.0; m + 1]; m];
    for (row, &b) in rows.iter().zip(rhs) {
        for i in 0..m {
            for j in 0..m {
                a[i][j] += row[i] * row[j];
            }
            a[i][m] += row[i] * b;
        }
    }
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        let p = a[col][col];
        if p.abs() < 1e-300 {
            continue;
        }
        for i in 0..m {
            if i != col {
                let f = a[i][col] / p;
                for j in col..=m {
                    a[i][j] -= f * a[col][j];
                }
            }
        }
    }
    (0..m).map(|i| if a[i][i].abs() < 1e-300 { 0.0 } else { a[i][m] / a[i][i] }).collect()
}

/// Pairings of `α̃_k Eu_k` with one test field along a `k` sweep.
#[derive(Clone, Debug)]
pub struct SequenceResult {
    pub ks: Vec<usize>,
    pub values: Vec<Pairing>,
    pub limit: f64,
    pub rate: f64,
    pub predicted: f64,
}

fn measures(example: Example, ks: &[usize]) -> Result<Vec<DiscreteMeasure>> {
    for &k in ks {
        example.check(k)?;
    }
    ks.par_iter().map(|&k| LabConstruction::build(example, k)?.concentrating_measure()).collect()
}

pub fn pairing_sequence(example: Example, phi: &dyn TestField, ks: &[usize]) -> Result<SequenceResult> {
    let mus = measures(example, ks)?;
    let values = mus.iter().map(|m| m.pair(phi, PAIR_TOL)).collect::<Result<Vec<_>>>()?;
    let raw: Vec<f64> = values.iter().map(|p| p.value).collect();
    Ok(SequenceResult {
        ks: ks.to_vec(),
        limit: extrapolate(ks, &raw, example.rate()),
        rate: empirical_rate(ks, &raw),
        predicted: example.predicted_limit(phi)?,
        values,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub model: SupportModel,
    pub mass: SymTensor2,
    /// `‖L - A m‖ / ‖L‖`.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct ExcessReport {
    pub example: Example,
    pub ks: Vec<usize>,
    /// `table[field][k]`.
    pub table: Vec<Vec<Pairing>>,
    pub limits: Vec<f64>,
    pub rates: Vec<f64>,
    pub atom_fit: FitResult,
    pub segment_fit: FitResult,
    /// `None` when all limits vanish (no concentration).
    pub selected: Option<SupportModel>,
    /// `|α̃_k Eu_k|(Ω)` per `k`.
    pub total_variation: Vec<f64>,
}

/// Residual threshold for the winning model, and the required ratio to the
/// losing one.
pub const FIT_THRESHOLD: f64 = 1e-2;
pub const FIT_RATIO: f64 = 10.0;

fn fit(model: SupportModel, family: &[&dyn TestField], limits: &[f64]) -> Result<FitResult> {
    let basis = [SymTensor2::new(1.0, 0.0, 0.0), SymTensor2::new(0.0, 1.0, 0.0), SymTensor2::new(0.0, 0.0, 1.0)];
    let mut rows = Vec::with_capacity(family.len());
    for phi in family {
        let row = basis
            .iter()
            .map(|&b| match model {
                SupportModel::Atom => Ok(phi.eval(Vec2::ZERO).contract(b)),
                SupportModel::Segment => segment_integral(*phi, b),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let m = least_squares(&rows, limits);
    let mass = SymTensor2::new(m[0], m[1], m[2]);
    let norm = limits.iter().map(|v| v * v).sum::<f64>().sqrt();
    let res = rows.iter().zip(limits).map(|(r, l)| (r[0] * m[0] + r[1] * m[1] + r[2] * m[2] - l).powi(2)).sum::<f64>().sqrt();
    let residual = if norm == 0.0 { 0.0 } else { res / norm };
    Ok(FitResult { model, mass, residual })
}

/// Pairs the sequence with `family`, extrapolates each limit, and fits the
/// atom and segment models to the limits.
pub fn excess_report(example: Example, family: &[&dyn TestField], ks: &[usize]) -> Result<ExcessReport> {
    let mus = measures(example, ks)?;
    excess_report_from(example, family, ks, &mus)
}

/// As [`excess_report`] for precomputed measures `mus[i]` at `ks[i]`.
pub fn excess_report_from(example: Example, family: &[&dyn TestField], ks: &[usize], mus: &[DiscreteMeasure]) -> Result<ExcessReport> {
    let mut table = Vec::with_capacity(family.len());
    for phi in family {
        table.push(mus.iter().map(|m| m.pair(*phi, PAIR_TOL)).collect::<Result<Vec<_>>>()?);
    }
    let raw: Vec<Vec<f64>> = table.iter().map(|row| row.iter().map(|p| p.value).collect()).collect();
    let limits: Vec<f64> = raw.iter().map(|v| extrapolate(ks, v, example.rate())).collect();
    let rates = raw.iter().map(|v| empirical_rate(ks, v)).collect();
    let scale = raw.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    let atom_fit = fit(SupportModel::Atom, family, &limits)?;
    let segment_fit = fit(SupportModel::Segment, family, &limits)?;
    let selected = if scale == 0.0 {
        None
    } else {
        let (best, other) = if atom_fit.residual <= segment_fit.residual { (atom_fit, segment_fit) } else { (segment_fit, atom_fit) };
        if best.residual > FIT_THRESHOLD || other.residual < FIT_RATIO * best.residual {
            return Err(Error::InconclusiveFit(format!(
                "atom residual {:.3e}, segment residual {:.3e}",
                atom_fit.residual, segment_fit.residual
            )));
        }
        Some(best.model)
    };
    Ok(ExcessReport {
        example,
        ks: ks.to_vec(),
        table,
        limits,
        rates,
        atom_fit,
        segment_fit,
        selected,
        total_variation: mus.iter().map(|m| m.total_variation()).collect(),
    })
}

/// Norms of one construction that are checked against closed forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabNorms {
    pub k: usize,
    /// `∫ |∇α_k|^q`.
    pub gradient_q: f64,
    /// `∫ |∇α_k|²`.
    pub gradient_sq: f64,
    pub l2_alpha: f64,
    pub strain_variation: f64,
    pub product_variation: f64,
    pub l1_u: f64,
    /// `‖u_k‖_{L²} / |Eu_k|(Ω)`; `L²` is the critical Lebesgue space in 2D.
    pub embedding_ratio: f64,
}

pub fn lab_norms(c: &LabConstruction) -> Result<LabNorms> {
    let strain = c.strain();
    let ev = strain.total_variation();
    Ok(LabNorms {
        k: c.k,
        gradient_q: c.alpha.gradient_lq(c.example.q()),
        gradient_sq: c.alpha.dirichlet_integral(),
        l2_alpha: c.alpha.l2_norm_sq().sqrt(),
        strain_variation: ev,
        product_variation: strain.scale_by_field(&c.alpha)?.total_variation(),
        l1_u: c.u.l1_norm(),
        embedding_ratio: c.u.lr_norm_pow(2.0).sqrt() / ev,
    })
}

/// Writes `lab_<example>_k<k>.csv` per `k` and `lab_<example>_report.csv`.
pub fn write_lab_csv(report: &ExcessReport, norms: &[LabNorms], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let name = report.example.name();
    for (j, &k) in report.ks.iter().enumerate() {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join(format!("lab_{name}_k{k}.csv")))?));
        w.write_record(["testfield_id", "k", "pairing", "quadrature_error"])?;
        for (i, row) in report.table.iter().enumerate() {
            w.write_record([(i + 1).to_string(), k.to_string(), format!("{:.15e}", row[j].value), format!("{:.3e}", row[j].error)])?;
        }
        w.flush()?;
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join(format!("lab_{name}_report.csv")))?));
    w.write_record(["quantity", "value"])?;
    let mut row = |key: String, value: String| w.write_record([key, value]);
    row("q".into(), report.example.q().to_string())?;
    for (i, (l, r)) in report.limits.iter().zip(&report.rates).enumerate() {
        row(format!("limit_f{}", i + 1), format!("{l:.12e}"))?;
        row(format!("rate_f{}", i + 1), format!("{r:.4}"))?;
    }
    for f in [report.atom_fit, report.segment_fit] {
        let m = f.model.name();
        row(format!("{m}_fit_residual"), format!("{:.6e}", f.residual))?;
        row(format!("{m}_mass_xx"), format!("{:.12e}", f.mass.xx))?;
        row(format!("{m}_mass_yy"), format!("{:.12e}", f.mass.yy))?;
        row(format!("{m}_mass_xy"), format!("{:.12e}", f.mass.xy))?;
    }
    row("selected_model".into(), report.selected.map_or("none", |m| m.name()).into())?;
    for (k, tv) in report.ks.iter().zip(&report.total_variation) {
        row(format!("product_variation_k{k}"), format!("{tv:.15e}"))?;
    }
    for n in norms {
        let k = n.k;
        row(format!("gradient_q_k{k}"), format!("{:.15e}", n.gradient_q))?;
        row(format!("gradient_sq_k{k}"), format!("{:.15e}", n.gradient_sq))?;
        row(format!("l2_alpha_k{k}"), format!("{:.15e}", n.l2_alpha))?;
        row(format!("strain_variation_k{k}"), format!("{:.15e}", n.strain_variation))?;
        row(format!("l1_u_k{k}"), format!("{:.15e}", n.l1_u))?;
        row(format!("embedding_ratio_k{k}"), format!("{:.15e}", n.embedding_ratio))?;
    }
    w.flush()?;
    Ok(())
}

/// Builds every construction in `ks`, writes the CSV files, and returns the
/// report together with the per-`k` norms.
pub fn run_lab(example: Example, ks: &[usize], dir: &Path) -> Result<(ExcessReport, Vec<LabNorms>)> {
    for &k in ks {
        example.check(k)?;
    }
    let built: Vec<(DiscreteMeasure, LabNorms)> = ks
        .par_iter()
        .map(|&k| {
            let c = LabConstruction::build(example, k)?;
            Ok((c.concentrating_measure()?, lab_norms(&c)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mus, norms): (Vec<_>, Vec<_>) = built.into_iter().unzip();
    let family = test_family();
    let refs: Vec<&dyn TestField> = family.iter().map(|f| f as &dyn TestField).collect();
    let report = excess_report_from(example, &refs, ks, &mus)?;
    write_lab_csv(&report, &norms, dir)?;
    Ok((report, norms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tent_gradient_table() {
        let k = 8;
        let (alpha, _) = build_example31(k).unwrap();
        let mesh = alpha.mesh().clone();
        let kf = k as f64;
        let probe = |x: f64, y: f64| {
            let (t, _) = mesh.locate(Vec2::new(x / kf, y / kf)).unwrap();
            alpha.gradient_on(t) / kf
        };
        let close = |a: Vec2, b: Vec2| (a - b).norm() < 1e-12;
        assert!(close(probe(0.1, -0.5), Vec2::new(0.0, 1.0)));
        assert!(close(probe(0.1, 0.5), Vec2::new(0.0, -1.0)));
        assert!(close(probe(0.7, 0.2), Vec2::new(-1.0, -1.0)));
        assert!(close(probe(0.7, -0.2), Vec2::new(-1.0, 1.0)));
        assert!(close(probe(-0.7, 0.2), Vec2::new(1.0, -1.0)));
        assert!(close(probe(-0.7, -0.2), Vec2::new(1.0, 1.0)));
        assert!(alpha.min() >= 0.0 && alpha.max() <= 1.0);
    }

    #[test]
    fn grid_compatibility() {
        assert!(matches!(Example::Ex31.check(3), Err(Error::NotGridCompatible { .. })));
        assert!(Example::Ex31.check(4).is_ok());
        let ex = Example::Ex37 { q: 1.5 };
        assert_eq!(ex.copies(16), 4);
        assert!(ex.check(16).is_ok());
        assert!(matches!(ex.check(4), Err(Error::Overlap(_))));
        assert!(matches!(ex.check(32), Err(Error::NotGridCompatible { .. })));
    }

    #[test]
    fn trace_along_side_of_a() {
        let k = 16;
        let (alpha, _) = build_example31(k).unwrap();
        let kf = k as f64;
        let x = 0.5 / kf;
        let tr = crate::fields::trace_on_segment(&alpha, Vec2::new(x, -1.0 / kf), Vec2::new(x, 0.0)).unwrap();
        for s in [0.0, 0.25, 0.5, 1.0] {
            // 1 + k x2 with x2 = -1/k + s/k
            assert!((tr.eval(s) - s).abs() < 1e-12);
        }
    }

    #[test]
    fn extrapolation_recovers_polynomial_tail() {
        let ks = [4, 16, 64];
        let vals: Vec<f64> = ks.iter().map(|&k| -0.5 + 0.3 / k as f64 - 2.0 / (k * k) as f64).collect();
        assert!((extrapolate(&ks, &vals, 1.0) + 0.5).abs() < 1e-12);
        let rate = empirical_rate(&[4, 16, 64, 256], &[1.0, 1.25, 1.3125, 1.328125]);
        assert!((rate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn away_from_origin_limit_vanishes() {
        let phi = ProfileField::bump(Vec2::new(0.5, 0.5), 0.3, e12());
        let r = pairing_sequence(Example::Ex31, &phi, &[4, 8, 16]).unwrap();
        assert!(r.values.iter().all(|p| p.value.abs() < 1e-14));
        assert_eq!(r.predicted, 0.0);
    }

    #[test]
    fn zero_displacement_has_no_excess() {
        let c = LabConstruction::build(Example::Ex31, 8).unwrap();
        let zero = VectorFieldPW::piecewise_constant(c.alpha.mesh().clone(), vec![]).unwrap();
        let mu = symmetrized_gradient(&zero).scale_by_field(&c.alpha).unwrap();
        let family = test_family();
        let refs: Vec<&dyn TestField> = family.iter().map(|f| f as &dyn TestField).collect();
        let r = excess_report_from(Example::Ex31, &refs, &[8, 16, 32], &[mu.clone(), mu.clone(), mu]).unwrap();
        assert_eq!(r.selected, None);
        assert!(r.limits.iter().all(|&l| l == 0.0));
    }
}
