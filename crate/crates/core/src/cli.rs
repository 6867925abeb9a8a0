//! Command-line front end. Exit codes: 0 when every declared check passes,
//! 1 when a check fails, 2 for invalid input or configuration, 3 for a
//! numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::load_config;
use crate::error::{Error, Result};
use crate::lab::{run_lab, Example};
use crate::lsc::{run_case, CASES};
use crate::solver::evolve;
use crate::verify::run_verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Output directory used when neither `--out` nor `RESHLAB_OUT` is given.
pub const DEFAULT_OUT: &str = "reshlab-out";

#[derive(Parser, Debug)]
#[command(name = "reshlab", version, about = "Damaged-strain concentration labs, lower-semicontinuity checks and damage-plasticity evolutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LabExample {
    Example31,
    Example37,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Concentration experiment for one of the shipped sequences.
    Lab {
        #[arg(value_enum)]
        example: LabExample,
        /// Comma-separated list of k values (powers of two, at least 4).
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        /// Sobolev exponent of the line-concentrating sequence.
        #[arg(long, default_value_t = 1.5)]
        q: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lower-semicontinuity check for a named case.
    Lsc {
        #[arg(long)]
        case: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time-incremental evolution from a config file.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the seed of the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Runs the full check suite.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| std::env::var_os("RESHLAB_OUT").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn lab(example: Example, ks: &[usize], out: &Path) -> Result<bool> {
    let (report, norms) = run_lab(example, ks, out)?;
    for (j, k) in report.ks.iter().enumerate() {
        let n = &norms[j];
        println!(
            "k = {k:>4}  grad_q {:.9e}  |Eu| {:.9e}  |aEu| {:.9e}  |u|_1 {:.3e}",
            n.gradient_q, n.strain_variation, report.total_variation[j], n.l1_u
        );
    }
    println!("atom fit residual {:.3e}, segment fit residual {:.3e}", report.atom_fit.residual, report.segment_fit.residual);
    let pass = report.selected == Some(example.expected_model());
    println!("{} selected model {}", status(pass), report.selected.map_or("none", |m| m.name()));
    Ok(pass)
}

fn lsc(case: &str, seed: u64, out: &Path) -> Result<bool> {
    if !CASES.contains(&case) {
        return Err(Error::Invalid(format!("unknown case {case:?}; expected one of {}", CASES.join(", "))));
    }
    std::fs::create_dir_all(out)?;
    let r = run_case(case, seed, Some(out))?;
    for row in &r.rows {
        println!("k = {:>4}  lhs {:.12e}  rhs {:.12e}  gap {:.3e}", row.k, row.lhs, row.rhs, row.gap);
    }
    println!("{} {}: {}", status(r.pass), r.name, r.detail);
    Ok(r.pass)
}

fn run_evolve(config: &Path, seed: Option<u64>, out: &Path) -> Result<bool> {
    let mut c = load_config(config)?;
    if let Some(s) = seed {
        c.seed = s;
    }
    let traj = evolve(&c, Some(out))?;
    let last = traj.final_row();
    println!(
        "t = {}  Q {:.6e}  diss {:.6e}  work {:.6e}  balance residual {:.3e}  min alpha {:.6}",
        last.t, last.q, last.diss_cum, last.work, last.balance_residual, last.min_alpha
    );
    let stress = traj.rows.iter().map(|r| r.stress_violation).fold(f64::NEG_INFINITY, f64::max);
    let stress_ok = stress <= 1e-6 * c.law.sigma_y;
    let irreversible = traj.rows.windows(2).all(|w| w[1].min_alpha <= w[0].min_alpha);
    let audits_ok = traj.audits.iter().all(|a| a.pass);
    println!("{} stress constraint (max violation {stress:.3e})", status(stress_ok));
    println!("{} irreversibility", status(irreversible));
    if !traj.audits.is_empty() {
        let worst = traj.audits.iter().map(|a| a.min_slack / a.energy_scale).fold(f64::INFINITY, f64::min);
        println!("{} stability audit ({} checkpoints, smallest relative slack {worst:.3e})", status(audits_ok), traj.audits.len());
    }
    Ok(stress_ok && irreversible && audits_ok)
}

fn verify(seed: u64, out: &Path) -> Result<bool> {
    let results = run_verify(seed, Some(out))?;
    for r in &results {
        println!("{} {:>2} {}: {}", status(r.pass), r.id, r.name, r.detail);
    }
    Ok(results.iter().all(|r| r.pass))
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Lab { example, k, q, out } => {
            let example = match example {
                LabExample::Example31 => Example::Ex31,
                LabExample::Example37 => Example::Ex37 { q },
            };
            lab(example, &k, &out_dir(out))
        }
        Command::Lsc { case, seed, out } => lsc(&case, seed, &out_dir(out)),
        Command::Evolve { config, out, seed } => run_evolve(&config, seed, &out_dir(out)),
        Command::Verify { seed, out } => verify(seed, &out_dir(out)),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() || matches!(e, Error::Io(_)) {
                EXIT_INPUT
            } else {
                EXIT_NUMERIC
            }
        }
    }
}
