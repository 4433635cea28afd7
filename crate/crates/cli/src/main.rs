//! `rtk`: compute recurrence statistics of fidelity signals from the shell.
//!
//! Data goes to stdout or `--out`; diagnostics go to stderr. Exit status is 0
//! on success, 1 for bad input and 2 when a numerical routine fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use rtk_core::classical::{torus_flow_simulate, torus_recurrence_time, TorusSpec};
use rtk_core::format::{fmt_f64, to_json_string};
use rtk_core::models::{
    critical_sweep, linear_grid, quench_spectrum, sweep_csv, tfim_modes, QuenchSpec, SweepConfig, SweepModel,
};
use rtk_core::quasifree::{quasifree_stats, recurrence_time_integrable};
use rtk_core::recurrence::{recurrence_time_generic, universal_function};
use rtk_core::spectrum::{read_spectrum, SpectrumDocument, DEFAULT_DEGENERACY_TOL};
use rtk_core::synthetic::{random_spectrum, Profile};
use rtk_core::{scan_crossings, spectral_stats, Error, ErrorKind, RecurrenceTime, ScanConfig};

#[derive(Parser)]
#[command(name = "rtk", version, about = "Recurrence times of quantum fidelity signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Moments of a spectrum file and the predicted recurrence time per level.
    #[command(allow_negative_numbers = true)]
    Stats {
        #[arg(long)]
        spectrum: PathBuf,
        /// Comma-separated levels; defaults to the mean fidelity.
        #[arg(long, value_delimiter = ',')]
        u: Vec<f64>,
    },
    /// Count solutions of F(t) = u on [burn-in, T].
    #[command(allow_negative_numbers = true)]
    Scan {
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long)]
        u: f64,
        #[arg(long = "T")]
        horizon: f64,
        #[command(flatten)]
        scan: ScanArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Ground-state quench of the Ising chain with next-nearest couplings.
    #[command(allow_negative_numbers = true)]
    Tam {
        #[arg(long = "L")]
        length: usize,
        #[arg(long, default_value_t = 0.0)]
        k1: f64,
        #[arg(long)]
        h1: f64,
        #[arg(long, default_value_t = 0.0)]
        k2: f64,
        #[arg(long)]
        h2: f64,
        #[arg(long, default_value_t = DEFAULT_DEGENERACY_TOL)]
        deg_tol: f64,
        /// Also write the bare spectrum document here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Free-fermion mode set of a transverse-field Ising quench.
    #[command(allow_negative_numbers = true)]
    Tfim {
        #[arg(long = "L")]
        length: usize,
        #[arg(long)]
        h1: f64,
        #[arg(long)]
        h2: f64,
        /// Comma-separated levels; defaults to exp(mean ln F).
        #[arg(long, value_delimiter = ',')]
        u: Vec<f64>,
        /// Scan ln F(t) = ln u up to this horizon for every level.
        #[arg(long)]
        scan: Option<f64>,
        #[command(flatten)]
        scan_args: ScanArgs,
        /// Also write the bare mode-set document here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recurrence time across a grid of pre-quench fields.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[arg(long)]
        model: ModelArg,
        #[arg(long)]
        h1_min: f64,
        #[arg(long)]
        h1_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        dh: f64,
        #[arg(long)]
        u: f64,
        #[arg(long = "L")]
        length: usize,
        #[arg(long, default_value_t = 0.0)]
        kappa: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate U(x) = (sqrt(pi)/2) e^x / sqrt(x) on a linear grid.
    #[command(allow_negative_numbers = true)]
    Universal {
        #[arg(long)]
        xmin: f64,
        #[arg(long)]
        xmax: f64,
        #[arg(long)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean return time of a linear flow on a torus into a box at the origin.
    #[command(allow_negative_numbers = true)]
    Torus {
        #[arg(long, value_delimiter = ',', required = true)]
        omegas: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        windows: Vec<f64>,
        #[arg(long)]
        simulate: bool,
        /// Simulation length; defaults to 1e4 mean return times.
        #[arg(long)]
        horizon: Option<f64>,
        /// Simulation step; defaults to the largest admissible step.
        #[arg(long)]
        step: Option<f64>,
    },
    /// Random spectrum with a reproducible seed.
    #[command(allow_negative_numbers = true)]
    Synth {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "flat")]
        profile: Profile,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, default_value_t = 16)]
    oversample: usize,
    #[arg(long, default_value_t = 16)]
    blocks: usize,
    #[arg(long, default_value_t = 0.0)]
    burn_in: f64,
}

impl ScanArgs {
    fn config(&self, horizon: f64) -> ScanConfig {
        ScanConfig::new(horizon).with_oversample(self.oversample).with_blocks(self.blocks).with_burn_in(self.burn_in)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Tam,
    Tfim,
}

impl From<ModelArg> for SweepModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Tam => SweepModel::Tam,
            ModelArg::Tfim => SweepModel::Tfim,
        }
    }
}

fn recurrence_json(tr: RecurrenceTime) -> Value {
    match tr {
        RecurrenceTime::Finite(v) => json!({ "T_R": v, "ln_T_R": v.ln() }),
        RecurrenceTime::Log(l) => json!({ "T_R": Value::Null, "ln_T_R": l }),
        RecurrenceTime::Diverges => json!({ "T_R": Value::Null, "ln_T_R": Value::Null }),
    }
}

fn emit(text: &str, out: Option<&Path>) -> rtk_core::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn terminated(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn json_text(v: &Value) -> rtk_core::Result<String> {
    Ok(terminated(to_json_string(v)?))
}

fn run(cmd: Command) -> rtk_core::Result<()> {
    match cmd {
        Command::Stats { spectrum, u } => {
            let s = read_spectrum(&spectrum)?;
            let st = spectral_stats(&s);
            let levels = if u.is_empty() { vec![st.mean_fidelity] } else { u };
            let mut table = Vec::with_capacity(levels.len());
            for level in levels {
                let mut row = recurrence_json(recurrence_time_generic(level, &st)?);
                row["u"] = json!(level);
                table.push(row);
            }
            emit(&json_text(&json!({ "stats": st, "recurrence": table }))?, None)
        }
        Command::Scan { spectrum, u, horizon, scan, out, format } => {
            let s = read_spectrum(&spectrum)?;
            let report = scan_crossings(&s.evaluator(), u, &scan.config(horizon))?;
            let text = match format {
                Format::Json => terminated(report.to_json()?),
                Format::Csv => report.to_csv(),
            };
            emit(&text, out.as_deref())
        }
        Command::Tam { length, k1, h1, k2, h2, deg_tol, out } => {
            let s = quench_spectrum(&QuenchSpec::new(length, k1, h1, k2, h2), deg_tol)?;
            let doc = SpectrumDocument::from(&s);
            if let Some(p) = &out {
                std::fs::write(p, doc.to_json()?)?;
            }
            emit(&json_text(&json!({ "spectrum": doc, "stats": spectral_stats(&s) }))?, None)
        }
        Command::Tfim { length, h1, h2, u, scan, scan_args, out } => {
            let m = tfim_modes(length, h1, h2)?;
            let st = quasifree_stats(&m)?;
            if let Some(p) = &out {
                std::fs::write(p, m.to_json()?)?;
            }
            let levels = if u.is_empty() { vec![st.mean_log_f.exp()] } else { u };
            let mut table = Vec::with_capacity(levels.len());
            for level in levels {
                let mut row = recurrence_json(recurrence_time_integrable(level, &st)?);
                row["u"] = json!(level);
                if let Some(horizon) = scan {
                    let r = scan_crossings(&m.log_signal(), level.ln(), &scan_args.config(horizon))?;
                    row["scan"] = json!({
                        "count": r.count,
                        "density_estimate": r.density_estimate,
                        "density_stderr": r.density_stderr,
                        "suspected_tangencies": r.suspected_tangencies,
                    });
                }
                table.push(row);
            }
            emit(&json_text(&json!({ "modes": m, "stats": st, "recurrence": table }))?, None)
        }
        Command::Sweep { model, h1_min, h1_max, steps, dh, u, length, kappa, out } => {
            let grid = linear_grid(h1_min, h1_max, steps)?;
            let rows = critical_sweep(&SweepConfig::new(model.into(), length, kappa, dh, u), &grid)?;
            emit(&sweep_csv(&rows), out.as_deref())
        }
        Command::Universal { xmin, xmax, points, out } => {
            if !(xmin > 0.0) {
                return Err(Error::Domain { value: xmin, reason: "U(x) needs x > 0" });
            }
            let mut text = String::from("x,U\n");
            for x in linear_grid(xmin, xmax, points)? {
                let _ = writeln!(text, "{},{}", fmt_f64(x), fmt_f64(universal_function(x)?));
            }
            emit(&text, out.as_deref())
        }
        Command::Torus { omegas, windows, simulate, horizon, step } => {
            let spec = TorusSpec::new(omegas, windows)?;
            let tr = torus_recurrence_time(&spec);
            let mut doc = json!({ "T_R": tr });
            if simulate {
                let sim = torus_flow_simulate(&spec, horizon.unwrap_or(1e4 * tr), step.unwrap_or(spec.max_step()))?;
                doc["simulation"] = json!(sim);
            }
            emit(&json_text(&doc)?, None)
        }
        Command::Synth { d, seed, profile, scale, out } => {
            let s = random_spectrum(d, seed, profile, scale)?;
            emit(&terminated(SpectrumDocument::from(&s).to_json()?), out.as_deref())
        }
    }
}

fn configure_threads() {
    let Ok(raw) = std::env::var("RTK_THREADS") else { return };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("RTK_THREADS={n} not applied: {e}");
            }
        }
        _ => log::warn!("ignoring RTK_THREADS={raw:?}: expected a positive integer"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    configure_threads();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.kind() {
                ErrorKind::Validation => ExitCode::from(1),
                ErrorKind::Numerical => ExitCode::from(2),
            }
        }
    }
}
