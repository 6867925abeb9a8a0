//! Flat `key = value` run configurations with `#` comments. Keys not given
//! keep the values of [`RunConfig::benchmark_plastic`].

use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::{Side, Split};
use crate::solver::{Load, Order, RunConfig};

pub const KEYS: &[&str] = &[
    "nx", "ny", "split", "steps", "t_final", "load", "amplitude", "a11", "a12", "a21", "a22", "mu0", "kappa0", "eps0", "sigma_y", "c1", "c2",
    "kappa_d", "w_g", "tol_am", "tol_cg", "tol_pg", "tol_adm", "max_am", "max_newton", "max_cg", "max_pg", "seed", "competitors",
    "audit_every", "snapshot_every", "order", "alpha0", "neumann",
];

fn number<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config { line, msg: format!("{key}: cannot parse {value:?}") })
}

fn split_name(s: Split) -> &'static str {
    match s {
        Split::Diagonal => "diagonal",
        Split::AntiDiagonal => "antidiagonal",
        Split::Crossed => "crossed",
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Left => "left",
        Side::Right => "right",
        Side::Bottom => "bottom",
        Side::Top => "top",
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut c = RunConfig::benchmark_plastic();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| Error::Config { line, msg: format!("expected `key = value`, found {body:?}") })?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(Error::Config { line, msg: format!("duplicate key {key}") });
        }
        let f = |v: &str| number::<f64>(line, key, v);
        let u = |v: &str| number::<usize>(line, key, v);
        match key {
            "nx" => c.nx = u(value)?,
            "ny" => c.ny = u(value)?,
            "split" => {
                c.split = match value {
                    "diagonal" => Split::Diagonal,
                    "antidiagonal" => Split::AntiDiagonal,
                    "crossed" => Split::Crossed,
                    _ => return Err(Error::Config { line, msg: format!("split: unknown pattern {value:?}") }),
                }
            }
            "steps" => c.steps = u(value)?,
            "t_final" => c.datum.t_final = f(value)?,
            "load" => c.datum.load = Load::parse(value).ok_or_else(|| Error::Config { line, msg: format!("load: expected ramp or sine, found {value:?}") })?,
            "amplitude" => c.datum.amplitude = f(value)?,
            "a11" => c.datum.matrix[0][0] = f(value)?,
            "a12" => c.datum.matrix[0][1] = f(value)?,
            "a21" => c.datum.matrix[1][0] = f(value)?,
            "a22" => c.datum.matrix[1][1] = f(value)?,
            "mu0" => c.law.mu0 = f(value)?,
            "kappa0" => c.law.kappa0 = f(value)?,
            "eps0" => c.law.eps0 = f(value)?,
            "sigma_y" => c.law.sigma_y = f(value)?,
            "c1" => c.law.c1 = f(value)?,
            "c2" => c.law.c2 = f(value)?,
            "kappa_d" => c.law.kappa_d = f(value)?,
            "w_g" => c.law.w_g = f(value)?,
            "tol_am" => c.tol.tol_am = f(value)?,
            "tol_cg" => c.tol.tol_cg = f(value)?,
            "tol_pg" => c.tol.tol_pg = f(value)?,
            "tol_adm" => c.tol.tol_adm = f(value)?,
            "max_am" => c.tol.max_am = u(value)?,
            "max_newton" => c.tol.max_newton = u(value)?,
            "max_cg" => c.tol.max_cg = u(value)?,
            "max_pg" => c.tol.max_pg = u(value)?,
            "seed" => c.seed = number(line, key, value)?,
            "competitors" => c.competitors = u(value)?,
            "audit_every" => c.audit_every = u(value)?,
            "snapshot_every" => c.snapshot_every = u(value)?,
            "order" => {
                c.order = match value {
                    "mechanical-first" => Order::MechanicalFirst,
                    "damage-first" => Order::DamageFirst,
                    _ => return Err(Error::Config { line, msg: format!("order: expected mechanical-first or damage-first, found {value:?}") }),
                }
            }
            "alpha0" => c.alpha0 = f(value)?,
            "neumann" => {
                c.neumann = if value == "none" {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|s| Side::parse(s).ok_or_else(|| Error::Config { line, msg: format!("neumann: unknown side {:?}", s.trim()) }))
                        .collect::<Result<_>>()?
                }
            }
            _ => return Err(Error::Config { line, msg: format!("unknown key {key}") }),
        }
    }
    c.validate().map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::Config { line: 0, msg: other.to_string() },
    })?;
    Ok(c)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Text form accepted by [`parse_config`].
pub fn to_text(c: &RunConfig) -> String {
    let a = c.datum.matrix;
    let order = match c.order {
        Order::MechanicalFirst => "mechanical-first",
        Order::DamageFirst => "damage-first",
    };
    let neumann = if c.neumann.is_empty() { "none".to_string() } else { c.neumann.iter().map(|&s| side_name(s)).collect::<Vec<_>>().join(",") };
    let l = &c.law;
    let t = &c.tol;
    format!(
        "nx = {}\nny = {}\nsplit = {}\nneumann = {neumann}\nsteps = {}\nt_final = {}\nload = {}\namplitude = {}\n\
         a11 = {}\na12 = {}\na21 = {}\na22 = {}\n\
         mu0 = {}\nkappa0 = {}\neps0 = {}\nsigma_y = {}\nc1 = {}\nc2 = {}\nkappa_d = {}\nw_g = {}\n\
         tol_am = {:e}\ntol_cg = {:e}\ntol_pg = {:e}\ntol_adm = {:e}\nmax_am = {}\nmax_newton = {}\nmax_cg = {}\nmax_pg = {}\n\
         order = {order}\nalpha0 = {}\nseed = {}\ncompetitors = {}\naudit_every = {}\nsnapshot_every = {}\n",
        c.nx,
        c.ny,
        split_name(c.split),
        c.steps,
        c.datum.t_final,
        c.datum.load.name(),
        c.datum.amplitude,
        a[0][0],
        a[0][1],
        a[1][0],
        a[1][1],
        l.mu0,
        l.kappa0,
        l.eps0,
        l.sigma_y,
        l.c1,
        l.c2,
        l.kappa_d,
        l.w_g,
        t.tol_am,
        t.tol_cg,
        t.tol_pg,
        t.tol_adm,
        t.max_am,
        t.max_newton,
        t.max_cg,
        t.max_pg,
        c.alpha0,
        c.seed,
        c.competitors,
        c.audit_every,
        c.snapshot_every,
    )
}
