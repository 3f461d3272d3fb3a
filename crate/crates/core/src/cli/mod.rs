//! Command-line front end: `simulate`, `verify` and `scan`.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::{failure_times_monotone, run_observed, stability_scan, DiagnosticsError};
use config::{parse_list, read_config_file, ConfigError, Preset, RunConfig};
use output::{snapshot_name, write_scan, write_series, write_snapshot, OutputError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "spinsplit", version, about = "Splitting integrators for 2D Heisenberg spin lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one simulation, writing series.csv and optional PGM snapshots.
    Simulate(RunArgs),
    /// Run the invariant suite; non-zero exit on any failure.
    Verify,
    /// Blow-up scan over step sizes and seeds, writing scan.csv.
    Scan(ScanArgs),
}

/// Values are kept as strings and parsed by the configuration layer so that
/// flags and config files share one set of rules and error messages.
#[derive(Args, Debug, Default)]
struct RunArgs {
    /// conservative | dissipative | thermostat | rk4 | rk4-dissipative | rk4-conservative
    #[arg(long)]
    scheme: Option<String>,
    /// example1 | example2 | example3
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// periodic | zero | fixed (border of +z spins)
    #[arg(long)]
    bc: Option<String>,
    /// Exchange integral.
    #[arg(long)]
    jk: Option<String>,
    /// Shorthand for D = (1, 1, lambda).
    #[arg(long, conflicts_with = "d")]
    lambda: Option<String>,
    /// Anisotropy diagonal, `dx,dy,dz`.
    #[arg(long = "D", id = "d")]
    d: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha0: Option<String>,
    #[arg(long)]
    temperature: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    record_every: Option<String>,
    /// 0 disables snapshots.
    #[arg(long)]
    snapshot_every: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// `key = value` file applied after the preset and before flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated step sizes.
    #[arg(long, default_value = "0.02,0.015,0.0102,0.01")]
    dts: String,
    #[arg(long, default_value = "5")]
    horizon: String,
    /// Comma-separated seeds.
    #[arg(long, default_value = "1,2,3")]
    seeds: String,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let preset = self.preset.as_deref().map(Preset::parse).transpose()?;
        let file = self.config.as_deref().map(read_config_file).transpose()?;
        let mut flags = Vec::new();
        let mut push = |k: &str, v: &Option<String>| {
            if let Some(v) = v {
                flags.push((k.to_string(), v.clone()));
            }
        };
        push("scheme", &self.scheme);
        push("n", &self.n);
        push("bc", &self.bc);
        push("jk", &self.jk);
        push("lambda", &self.lambda);
        push("D", &self.d);
        push("alpha0", &self.alpha0);
        push("temperature", &self.temperature);
        push("dt", &self.dt);
        push("steps", &self.steps);
        push("seed", &self.seed);
        push("record_every", &self.record_every);
        push("snapshot_every", &self.snapshot_every);
        push("out", &self.out);
        RunConfig::resolve(preset, file, &flags)
    }
}

fn create_dir(path: &std::path::Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn simulate(args: &RunArgs) -> Result<i32, CliError> {
    let cfg = args.resolve()?;
    create_dir(&cfg.out)?;
    let p = cfg.params();
    let state = cfg.initial_state().map_err(DiagnosticsError::from)?;
    let every = cfg.snapshot_every;
    let out_dir = cfg.out.clone();
    let outcome = run_observed(state, &p, cfg.scheme, cfg.dt, cfg.steps, cfg.record_every, |step, s| {
        if every > 0 && step % every == 0 {
            write_snapshot(&s.lattice, &out_dir.join(snapshot_name(step)))?;
        }
        Ok::<(), CliError>(())
    })?;
    write_series(&outcome.records, &cfg.out.join("series.csv"))?;
    let last = outcome.records.last().expect("step 0 is always recorded");
    match outcome.halted_at {
        Some(step) => {
            eprintln!("blow-up detected at step {step} (t = {})", last.time);
            Ok(EXIT_BLOWUP)
        }
        None => {
            println!(
                "{} steps of {}: energy {:.6} alpha {:.6} max |lap z| {:.6}",
                last.step,
                cfg.scheme.name(),
                last.energy,
                last.alpha,
                last.max_laplacian
            );
            Ok(EXIT_OK)
        }
    }
}

fn verify() -> Result<i32, CliError> {
    let checks = crate::verify::verification_suite();
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(CliError::Verification(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(EXIT_OK)
}

fn scan(args: &ScanArgs) -> Result<i32, CliError> {
    let cfg = args.run.resolve()?;
    let dts: Vec<f64> = parse_list("dts", &args.dts)?;
    let seeds: Vec<u64> = parse_list("seeds", &args.seeds)?;
    let horizon: f64 = args
        .horizon
        .trim()
        .parse()
        .map_err(|e| ConfigError::Invalid {
            field: "horizon".into(),
            msg: format!("`{}`: {e}", args.horizon),
        })?;
    if dts.iter().any(|dt| !dt.is_finite() || *dt == 0.0) {
        return Err(ConfigError::Invalid {
            field: "dts".into(),
            msg: "step sizes must be finite and non-zero".into(),
        }
        .into());
    }
    create_dir(&cfg.out)?;
    let results = stability_scan(&cfg.params(), cfg.scheme, cfg.n, &cfg.boundary(), &dts, horizon, &seeds)?;
    write_scan(&results, &cfg.out.join("scan.csv"))?;
    print!("{}", output::format_scan(&results));
    if !failure_times_monotone(&results) {
        eprintln!("note: failure times are not monotone in dt for every seed");
    }
    Ok(EXIT_OK)
}

/// Parses `argv` and runs the chosen subcommand, returning the exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Verify => verify(),
        Command::Scan(a) => scan(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
