//! `qres`: rates, trajectories, concurrence and figure data for two qubits
//! coupled to a common bosonic reservoir.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use qres_core::entanglement::{concurrence_report, disentanglement_bounds, initial_state, DisentanglementInputs};
use qres_core::experiments::{
    emit, figure_config, read_series_csv, run_figure, simulate_all, summarize, sweep, write_summary_csv,
    ExperimentConfig, OutputFormat, SweepRanges,
};
use qres_core::rates::{lowest_order_rates, spin_boson_rates, RateSet};
use qres_core::solvable::{deviation_grid, deviation_scaling, MemoryFunctions, MemoryTable};
use qres_core::spectral::SpectralData;
use serde_json::json;

#[derive(Parser)]
#[command(name = "qres", version, about)]
struct Cli {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Plot,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Plot => OutputFormat::Plot,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Lowest-order thermalization and decoherence rates as JSON.
    Rates,
    /// Trajectories for every sweep point, written as CSV.
    Evolve,
    /// Recompute concurrence for each row of a series CSV.
    Concurrence {
        #[arg(long)]
        input: PathBuf,
        /// `ϰ` for the artifact flag; defaults to the config couplings.
        #[arg(long)]
        kappa_max: Option<f64>,
    },
    /// Disentanglement-time bounds as JSON.
    Bounds,
    /// Check a config, then compare the resonance form of the
    /// energy-conserving model against its exact solution for several `κ`.
    Validate {
        /// End of the time range scanned for the deviation.
        #[arg(long, default_value_t = 1000.0)]
        t_end: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0.02, 0.04, 0.08])]
        kappa: Vec<f64>,
    },
    /// Data for figure 1 to 6.
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=6))]
        n: u8,
    },
    /// Summary table over the sweep.
    Sweep,
}

fn load(path: Option<&Path>) -> anyhow::Result<ExperimentConfig> {
    Ok(match path {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    })
}

fn out_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone())
}

fn print_json(v: &serde_json::Value) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.cmd {
        Cmd::Rates => {
            let cfg = load(cli.config.as_deref())?;
            let sd = cfg.spectral.data(&cfg.system)?;
            let mut rows = Vec::new();
            for cp in cfg.points() {
                let r = lowest_order_rates(&cp, &sd, &cfg.system);
                let labels = RateSet::labels();
                let horizons: serde_json::Map<_, _> = labels
                    .iter()
                    .zip(r.validity_horizons())
                    .map(|(l, h)| (l.to_string(), json!(h)))
                    .collect();
                let (sb_th, sb_dec) = spin_boson_rates(cp.lambda1, &sd);
                rows.push(json!({
                    "couplings": cp,
                    "rates": r,
                    "validity_horizons": horizons,
                    "spin_boson": { "gamma_th": sb_th, "gamma_dec": sb_dec },
                }));
            }
            print_json(&json!({ "spectral": sd, "points": rows }))
        }
        Cmd::Evolve => {
            let cfg = load(cli.config.as_deref())?;
            let series = simulate_all(&cfg)?;
            let sd = cfg.spectral.data(&cfg.system)?;
            let summaries: Vec<_> = series.iter().map(|s| summarize(s, &sd, &cfg.system)).collect();
            let paths = emit(
                &out_dir(cli, &cfg),
                &cfg.output.prefix,
                &series,
                &summaries,
                cli.format.into(),
            )?;
            print_paths(&paths);
            Ok(())
        }
        Cmd::Concurrence { input, kappa_max } => {
            let cfg = load(cli.config.as_deref())?;
            let rows = read_series_csv(input)?;
            let kmax = kappa_max.unwrap_or_else(|| cfg.couplings.kappa_max());
            let mut w = std::io::stdout().lock();
            writeln!(w, "t,concurrence,min_xi,max_imag,artifact")?;
            for r in rows {
                let rep = concurrence_report(&r.density_matrix()?, kmax)?;
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{}",
                    r.t, rep.value, rep.min_xi, rep.max_imag, rep.artifact
                )?;
            }
            Ok(())
        }
        Cmd::Bounds => {
            let cfg = load(cli.config.as_deref())?;
            let sd = cfg.spectral.data(&cfg.system)?;
            let mut rows = Vec::new();
            for cp in cfg.points() {
                let d = DisentanglementInputs::from_couplings(cfg.bounds.p, &cp, &sd)
                    .with_constants(cfg.bounds.c_a, cfg.bounds.c_b);
                let b = disentanglement_bounds(&d)?;
                rows.push(json!({ "couplings": cp, "inputs": d, "bounds": b }));
            }
            print_json(&json!(rows))
        }
        Cmd::Validate { t_end, kappa } => {
            let cfg = load(cli.config.as_deref())?;
            cfg.validate()?;
            if !(*t_end > 0.0 && t_end.is_finite()) {
                bail!(qres_core::Error::InvalidParameter {
                    name: "t_end",
                    reason: format!("must be positive, got {t_end}"),
                });
            }
            // the comparison needs r_f and σ_f(0) of the actual form factor
            let f = cfg.spectral.f;
            let sd = SpectralData::from_form_factors(&cfg.system, &f, &cfg.spectral.g, cfg.spectral.u_c)?;
            let mf = MemoryFunctions::new(f, cfg.system.beta())?;
            let grid = deviation_grid(*t_end);
            let table = MemoryTable::fill(&mf, &grid)?;
            let rho0 = initial_state(&cfg.initial_state)?;
            let nu = cfg.couplings.nu1;
            let d = deviation_scaling(&rho0, &grid, kappa, nu, &cfg.system, &table, &sd)?;
            print_json(&json!({ "ok": true, "points": cfg.points().len(), "deviation": d }))
        }
        Cmd::Figure { n } => {
            let mut cfg = match &cli.config {
                Some(p) => ExperimentConfig::from_path(p)?,
                None => figure_config(*n)?,
            };
            if cfg.sweep == SweepRanges::default() {
                let d = figure_config(*n)?;
                cfg.sweep = d.sweep;
                cfg.time.rescaling = d.time.rescaling;
            }
            if cli.config.is_some() && cfg.output.prefix == ExperimentConfig::default().output.prefix {
                cfg.output.prefix = format!("fig{n}");
            }
            let out = run_figure(*n, &cfg)?;
            let paths = emit(
                &out_dir(cli, &cfg),
                &cfg.output.prefix,
                &out.series,
                &out.summaries,
                cli.format.into(),
            )?;
            print_paths(&paths);
            Ok(())
        }
        Cmd::Sweep => {
            let cfg = load(cli.config.as_deref())?;
            if cfg.sweep == SweepRanges::default() {
                bail!(qres_core::Error::Config("sweep needs at least one [sweep] list".into()));
            }
            let rows = sweep(&cfg)?;
            let dir = out_dir(cli, &cfg);
            std::fs::create_dir_all(&dir).with_context(|| format!("{}", dir.display()))?;
            let path = dir.join(format!("{}_sweep.csv", cfg.output.prefix));
            write_summary_csv(&path, &rows)?;
            print_paths(&[path]);
            Ok(())
        }
    }
}

fn fail(kind: &str, message: String) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => return fail("usage", e.to_string().trim_end().to_string()),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.downcast_ref::<qres_core::Error>().map_or("cli", |e| e.kind());
            fail(kind, format!("{e:#}"))
        }
    }
}
