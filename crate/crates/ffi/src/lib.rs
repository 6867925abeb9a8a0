//! C ABI for reshlab. Every entry point returns a [`ReshlabStatus`]; on
//! failure `reshlab_last_error` describes the cause. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use reshlab::config::parse_config;
use reshlab::lab::{run_lab, Example, ExcessReport, LabNorms, SupportModel};
use reshlab::model::MaterialLaw;
use reshlab::solver::{evolve, local_response, Trajectory};
use reshlab::{Error, SymTensor2};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReshlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Numerical = 3,
    Io = 4,
    OutOfRange = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: ReshlabStatus, msg: &str) -> ReshlabStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> ReshlabStatus {
    let status = if e.is_input_error() {
        ReshlabStatus::InvalidInput
    } else if matches!(e, Error::Io(_) | Error::Csv(_)) {
        ReshlabStatus::Io
    } else {
        ReshlabStatus::Numerical
    };
    fail(status, &e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), ReshlabStatus>) -> ReshlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ReshlabStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(ReshlabStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: reshlab::Result<T>) -> Result<T, ReshlabStatus> {
    r.map_err(from_error)
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, ReshlabStatus> {
    if p.is_null() {
        return Err(fail(ReshlabStatus::NullPointer, &format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(ReshlabStatus::InvalidInput, &format!("{name} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, ReshlabStatus> {
    p.as_mut().ok_or_else(|| fail(ReshlabStatus::NullPointer, &format!("{name} is null")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, ReshlabStatus> {
    p.as_ref().ok_or_else(|| fail(ReshlabStatus::NullPointer, &format!("{name} is null")))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next reshlab call on the same thread.
#[no_mangle]
pub extern "C" fn reshlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn reshlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Symmetric 2×2 tensor `[[xx, xy], [xy, yy]]`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReshlabSym {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl From<ReshlabSym> for SymTensor2 {
    fn from(s: ReshlabSym) -> Self {
        SymTensor2::new(s.xx, s.yy, s.xy)
    }
}

impl From<SymTensor2> for ReshlabSym {
    fn from(s: SymTensor2) -> Self {
        ReshlabSym { xx: s.xx, yy: s.yy, xy: s.xy }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReshlabLaw {
    pub mu0: f64,
    pub kappa0: f64,
    pub eps0: f64,
    pub sigma_y: f64,
    pub c1: f64,
    pub c2: f64,
    pub kappa_d: f64,
    pub w_g: f64,
}

impl From<ReshlabLaw> for MaterialLaw {
    fn from(l: ReshlabLaw) -> Self {
        MaterialLaw { mu0: l.mu0, kappa0: l.kappa0, eps0: l.eps0, sigma_y: l.sigma_y, c1: l.c1, c2: l.c2, kappa_d: l.kappa_d, w_g: l.w_g }
    }
}

#[no_mangle]
pub unsafe extern "C" fn reshlab_law_default(out: *mut ReshlabLaw) -> ReshlabStatus {
    guard(|| {
        let l = MaterialLaw::default();
        *out_arg(out, "out")? = ReshlabLaw { mu0: l.mu0, kappa0: l.kappa0, eps0: l.eps0, sigma_y: l.sigma_y, c1: l.c1, c2: l.c2, kappa_d: l.kappa_d, w_g: l.w_g };
        Ok(())
    })
}

/// Splits `trial` into elastic and plastic parts at damage `alpha`, given
/// the previous plastic strain.
#[no_mangle]
pub unsafe extern "C" fn reshlab_return_map(
    law: *const ReshlabLaw,
    alpha: f64,
    trial: ReshlabSym,
    p_prev: ReshlabSym,
    e_out: *mut ReshlabSym,
    p_out: *mut ReshlabSym,
) -> ReshlabStatus {
    guard(|| {
        let law: MaterialLaw = (*ref_arg(law, "law")?).into();
        lift(law.validate())?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(fail(ReshlabStatus::InvalidInput, &format!("damage value {alpha} outside [0, 1]")));
        }
        let p_prev: SymTensor2 = p_prev.into();
        if p_prev.trace().abs() > 1e-12 {
            return Err(fail(ReshlabStatus::InvalidInput, "previous plastic strain is not deviatoric"));
        }
        let r = local_response(&law, alpha, trial.into(), p_prev);
        let e = out_arg(e_out, "e_out")?;
        let p = out_arg(p_out, "p_out")?;
        *e = r.e.into();
        *p = r.p.into();
        Ok(())
    })
}

/// One row of `evolution.csv`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReshlabRow {
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

/// A finished evolution.
pub struct ReshlabEvolution {
    traj: Trajectory,
}

/// Runs an evolution from configuration text (the `key = value` format of
/// the command-line tool). `out_dir` may be null; otherwise the CSV files
/// are written there.
#[no_mangle]
pub unsafe extern "C" fn reshlab_evolution_run(config: *const c_char, out_dir: *const c_char, out: *mut *mut ReshlabEvolution) -> ReshlabStatus {
    guard(|| {
        let text = str_arg(config, "config")?;
        let dir = if out_dir.is_null() { None } else { Some(str_arg(out_dir, "out_dir")?) };
        let slot = out_arg(out, "out")?;
        *slot = std::ptr::null_mut();
        let c = lift(parse_config(text))?;
        let traj = lift(evolve(&c, dir.map(Path::new)))?;
        *slot = Box::into_raw(Box::new(ReshlabEvolution { traj }));
        Ok(())
    })
}

/// Number of rows, including the initial state.
#[no_mangle]
pub unsafe extern "C" fn reshlab_evolution_len(h: *const ReshlabEvolution, len: *mut usize) -> ReshlabStatus {
    guard(|| {
        *out_arg(len, "len")? = ref_arg(h, "handle")?.traj.rows.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn reshlab_evolution_row(h: *const ReshlabEvolution, index: usize, row: *mut ReshlabRow) -> ReshlabStatus {
    guard(|| {
        let rows = &ref_arg(h, "handle")?.traj.rows;
        let r = rows.get(index).ok_or_else(|| fail(ReshlabStatus::OutOfRange, &format!("row {index} of {}", rows.len())))?;
        *out_arg(row, "row")? = ReshlabRow {
            t: r.t,
            q: r.q,
            d: r.d,
            grad: r.grad,
            diss_step: r.diss_step,
            diss_cum: r.diss_cum,
            work: r.work,
            balance_residual: r.balance_residual,
            min_alpha: r.min_alpha,
            p_mass: r.p_mass,
            stress_violation: r.stress_violation,
        };
        Ok(())
    })
}

/// Number of stability audits and how many of them passed.
#[no_mangle]
pub unsafe extern "C" fn reshlab_evolution_audits(h: *const ReshlabEvolution, total: *mut usize, passed: *mut usize) -> ReshlabStatus {
    guard(|| {
        let audits = &ref_arg(h, "handle")?.traj.audits;
        *out_arg(total, "total")? = audits.len();
        *out_arg(passed, "passed")? = audits.iter().filter(|a| a.pass).count();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn reshlab_evolution_free(h: *mut ReshlabEvolution) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReshlabExample {
    Example31 = 0,
    Example37 = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReshlabModel {
    None = -1,
    Atom = 0,
    Segment = 1,
}

/// A concentration experiment over a list of `k`.
pub struct ReshlabLab {
    report: ExcessReport,
    norms: Vec<LabNorms>,
}

/// Runs the concentration lab; `q` is ignored for the single-tent sequence. CSV files
/// are written to `out_dir`, which must not be null.
#[no_mangle]
pub unsafe extern "C" fn reshlab_lab_run(
    example: ReshlabExample,
    q: f64,
    ks: *const usize,
    nks: usize,
    out_dir: *const c_char,
    out: *mut *mut ReshlabLab,
) -> ReshlabStatus {
    guard(|| {
        let slot = out_arg(out, "out")?;
        *slot = std::ptr::null_mut();
        if ks.is_null() || nks == 0 {
            return Err(fail(ReshlabStatus::InvalidInput, "ks must be a non-empty array"));
        }
        let ks = std::slice::from_raw_parts(ks, nks);
        let dir = str_arg(out_dir, "out_dir")?;
        let example = match example {
            ReshlabExample::Example31 => Example::Ex31,
            ReshlabExample::Example37 => Example::Ex37 { q },
        };
        let (report, norms) = lift(run_lab(example, ks, Path::new(dir)))?;
        *slot = Box::into_raw(Box::new(ReshlabLab { report, norms }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn reshlab_lab_selected(h: *const ReshlabLab, model: *mut ReshlabModel) -> ReshlabStatus {
    guard(|| {
        *out_arg(model, "model")? = match ref_arg(h, "handle")?.report.selected {
            None => ReshlabModel::None,
            Some(SupportModel::Atom) => ReshlabModel::Atom,
            Some(SupportModel::Segment) => ReshlabModel::Segment,
        };
        Ok(())
    })
}

/// Pairing of test field `field` (0-based) with the `k_index`-th sequence member.
#[no_mangle]
pub unsafe extern "C" fn reshlab_lab_pairing(h: *const ReshlabLab, field: usize, k_index: usize, value: *mut f64) -> ReshlabStatus {
    guard(|| {
        let table = &ref_arg(h, "handle")?.report.table;
        let v = table
            .get(field)
            .and_then(|row| row.get(k_index))
            .ok_or_else(|| fail(ReshlabStatus::OutOfRange, &format!("pairing ({field}, {k_index}) out of range")))?;
        *out_arg(value, "value")? = v.value;
        Ok(())
    })
}

/// `|α̃_k Eu_k|(Ω)` and `∫|∇α_k|^q` of the `k_index`-th member.
#[no_mangle]
pub unsafe extern "C" fn reshlab_lab_norms(h: *const ReshlabLab, k_index: usize, product_variation: *mut f64, gradient_q: *mut f64) -> ReshlabStatus {
    guard(|| {
        let lab = ref_arg(h, "handle")?;
        let n = lab.norms.get(k_index).ok_or_else(|| fail(ReshlabStatus::OutOfRange, &format!("k index {k_index} out of range")))?;
        *out_arg(product_variation, "product_variation")? = n.product_variation;
        *out_arg(gradient_q, "gradient_q")? = n.gradient_q;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn reshlab_lab_free(h: *mut ReshlabLab) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Runs a named lower-semicontinuity case and reports whether it passed.
/// `out_dir` may be null.
#[no_mangle]
pub unsafe extern "C" fn reshlab_lsc_run(case_name: *const c_char, seed: u64, out_dir: *const c_char, pass: *mut bool) -> ReshlabStatus {
    guard(|| {
        let name = str_arg(case_name, "case_name")?;
        let dir = if out_dir.is_null() { None } else { Some(str_arg(out_dir, "out_dir")?) };
        if let Some(d) = dir {
            std::fs::create_dir_all(d).map_err(|e| from_error(e.into()))?;
        }
        let r = lift(reshlab::lsc::run_case(name, seed, dir.map(Path::new)))?;
        *out_arg(pass, "pass")? = r.pass;
        Ok(())
    })
}

/// Runs the full check suite. `out_dir` may be null.
#[no_mangle]
pub unsafe extern "C" fn reshlab_verify(seed: u64, out_dir: *const c_char, passed: *mut usize, total: *mut usize) -> ReshlabStatus {
    guard(|| {
        let dir = if out_dir.is_null() { None } else { Some(str_arg(out_dir, "out_dir")?) };
        let results = lift(reshlab::verify::run_verify(seed, dir.map(Path::new)))?;
        *out_arg(passed, "passed")? = results.iter().filter(|r| r.pass).count();
        *out_arg(total, "total")? = results.len();
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes() {
        assert_eq!(from_error(Error::Config { line: 3, msg: "x".into() }), ReshlabStatus::InvalidInput);
        assert_eq!(from_error(Error::EnergyIncrease { before: 0.0, after: 1.0 }), ReshlabStatus::Numerical);
        assert_eq!(from_error(std::io::Error::other("disk").into()), ReshlabStatus::Io);
        let msg = unsafe { CStr::from_ptr(reshlab_last_error()) }.to_str().unwrap().to_string();
        assert_eq!(msg, "disk");
    }

    #[test]
    fn panics_are_contained() {
        assert_eq!(guard(|| panic!("boom")), ReshlabStatus::Panic);
        assert_eq!(guard(|| Ok(())), ReshlabStatus::Ok);
    }
}
