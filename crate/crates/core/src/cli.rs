//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::duality::{evaluate_duality, DualityReport, QuantonDetectorState};
use crate::error::{Error, Result};
use crate::experiment::Experiment;
use crate::fringes::{measure_visibility, FringeMetrics};
use crate::model::{Case, ExperimentConfig, PathAmplitudes};
use crate::montecarlo::{group_statistics, sample_run, GroupStats};
use crate::optics::{intensity, Conditioning, Mode, PropagationParams, ScreenGrid};
use crate::output::{self, PatternSidecar, RunManifest};
use crate::sweep::{run_sweep, write_sweep_csv, GridAxis};

pub const THREADS_ENV: &str = "ASYMDUALITY_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Parser)]
#[command(name = "asymduality", version, about = "Asymmetric double-slit duality toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Flat `key = value` config file; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Prior weight of slit 1.
    #[arg(long, global = true)]
    p1: Option<f64>,
    /// Prior weight of slit 2.
    #[arg(long, global = true)]
    p2: Option<f64>,
    /// Half the slit separation.
    #[arg(long, global = true)]
    x0: Option<f64>,
    /// Width of slit 1.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Width ratio of slit 2 to slit 1.
    #[arg(long, global = true)]
    xi: Option<f64>,
    /// Wavelength.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Slit-to-screen distance.
    #[arg(long = "D", global = true, value_name = "D")]
    big_d: Option<f64>,
    /// Modulus of the detector-state overlap.
    #[arg(long, global = true)]
    overlap: Option<f64>,
    /// Phase of the detector-state overlap.
    #[arg(long, global = true, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Path coherence retained after dephasing, in [0, 1].
    #[arg(long, global = true)]
    kappa: Option<f64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Screen intensity as CSV plus a JSON sidecar.
    Pattern {
        #[arg(long, default_value = "exact")]
        mode: Mode,
        #[arg(long, default_value = "all")]
        conditioning: Conditioning,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long, default_value = "pattern.csv")]
        out: PathBuf,
    },
    /// Distinguishability, visibility and both duality relations.
    Duality {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discriminating measurement: basis coefficients and outcome probabilities.
    Uqsd {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sampled detections with group statistics.
    Montecarlo {
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long, default_value = "records.csv")]
        out: PathBuf,
    },
    /// Closed-form duality quantities over a parameter grid.
    Sweep {
        /// `key=start:stop:step` (inclusive) or `key=value`; repeatable.
        #[arg(long)]
        grid: Vec<GridAxis>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Pattern { .. } => "pattern",
            Command::Duality { .. } => "duality",
            Command::Uqsd { .. } => "uqsd",
            Command::Montecarlo { .. } => "montecarlo",
            Command::Sweep { .. } => "sweep",
        }
    }
}

impl GlobalArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let overrides = [
            ("p1", self.p1),
            ("p2", self.p2),
            ("x0", self.x0),
            ("epsilon", self.epsilon),
            ("xi", self.xi),
            ("lambda", self.lambda),
            ("D", self.big_d),
            ("overlap", self.overlap),
            ("theta", self.theta),
            ("kappa", self.kappa),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        match (self.p1, self.p2) {
            (Some(p1), None) => cfg.p2 = 1.0 - p1,
            (None, Some(p2)) => cfg.p1 = 1.0 - p2,
            _ => {}
        }
        Ok(cfg)
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let pool = match thread_pool() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    match pool.install(|| dispatch(&cli, argv)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            Error::InvalidArgument(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

struct Session {
    subcommand: &'static str,
    argv: Vec<String>,
    started: Instant,
}

impl Session {
    fn manifest(
        &self,
        config: ExperimentConfig,
        amplitudes: Option<PathAmplitudes>,
        seed: Option<u64>,
        outputs: Vec<PathBuf>,
    ) -> RunManifest {
        RunManifest {
            subcommand: self.subcommand.to_string(),
            argv: self.argv.clone(),
            config,
            amplitudes,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        }
    }
}

fn dispatch(cli: &Cli, argv: Vec<String>) -> Result<i32> {
    let session = Session {
        subcommand: cli.command.name(),
        argv,
        started: Instant::now(),
    };
    let cfg = cli.global.resolve()?;
    let format = cli.global.format;
    match &cli.command {
        Command::Pattern {
            mode,
            conditioning,
            points,
            half_width,
            out,
        } => cmd_pattern(&session, &cfg, *mode, *conditioning, *points, *half_width, out),
        Command::Duality { out } => cmd_duality(&session, &cfg, format, out.as_deref()),
        Command::Uqsd { out } => cmd_uqsd(&session, &cfg, format, out.as_deref()),
        Command::Montecarlo { n, seed, bins, out } => cmd_montecarlo(&session, &cfg, *n, *seed, *bins, out),
        Command::Sweep { grid, out } => cmd_sweep(&session, &cfg, format, grid, out.as_deref()),
    }
}

fn require_format(format: Option<Format>, allowed: &[Format], default: Format) -> Result<Format> {
    let f = format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(Error::InvalidArgument(format!(
            "--format {} is not supported here",
            f.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
        )))
    }
}

/// Key/value lines with aligned values; nested values are printed as compact JSON.
fn render_table(value: &Value) -> String {
    let Value::Object(map) = value else {
        return value.to_string();
    };
    let width = map.keys().map(String::len).max().unwrap_or(0);
    let mut s = String::new();
    for (k, v) in map {
        let shown = match v {
            Value::String(t) => t.clone(),
            other => other.to_string(),
        };
        s.push_str(&format!("{k:<width$}  {shown}\n"));
    }
    s
}

fn emit_text(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn render(value: &impl Serialize, format: Format) -> Result<String> {
    let json = serde_json::to_value(value)?;
    Ok(match format {
        Format::Table => render_table(&json),
        _ => format!("{}\n", serde_json::to_string_pretty(&json)?),
    })
}

fn cmd_pattern(
    session: &Session,
    cfg: &ExperimentConfig,
    mode: Mode,
    conditioning: Conditioning,
    points: Option<usize>,
    half_width: Option<f64>,
    out: &Path,
) -> Result<i32> {
    let exp = Experiment::new(cfg)?;
    let mut params = PropagationParams::new(&exp.config, mode);
    if points.is_some() || half_width.is_some() {
        let default = params.grid.xs();
        let half = half_width.unwrap_or(default[default.len() - 1]);
        params.grid = ScreenGrid::uniform(half, points.unwrap_or(default.len()))?;
    }
    let pattern = intensity(&exp, &params, conditioning)?;
    let fringes = measure_visibility(&pattern);
    output::write_pattern_csv(out, &pattern)?;
    let sidecar_path = output::sibling(out, "json");
    output::write_json(&sidecar_path, &PatternSidecar::new(&pattern, fringes))?;
    session
        .manifest(exp.config, Some(exp.amplitudes), None, vec![out.to_path_buf(), sidecar_path])
        .write_next_to(out)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct DualityOutput {
    swapped: bool,
    c1: f64,
    c2: f64,
    #[serde(flatten)]
    report: DualityReport,
    fringes: FringeMetrics,
}

fn cmd_duality(session: &Session, cfg: &ExperimentConfig, format: Option<Format>, out: Option<&Path>) -> Result<i32> {
    let format = require_format(format, &[Format::Json, Format::Table], Format::Json)?;
    let exp = Experiment::new(cfg)?;
    let state = QuantonDetectorState::from_experiment(&exp);
    let mut report = evaluate_duality(&state, &exp.basis)?;
    let pattern = intensity(&exp, &PropagationParams::new(&exp.config, Mode::Exact), Conditioning::All)?;
    let fringes = measure_visibility(&pattern);
    report.v_measured = Some(fringes.v_envelope_comp);
    let failed: Vec<String> = report.violations().map(|c| c.relation.clone()).collect();
    let doc = DualityOutput {
        swapped: exp.amplitudes.swapped,
        c1: exp.amplitudes.c1,
        c2: exp.amplitudes.c2,
        report,
        fringes,
    };
    emit_text(&render(&doc, format)?, out)?;
    if let Some(path) = out {
        session
            .manifest(exp.config, Some(exp.amplitudes), None, vec![path.to_path_buf()])
            .write_next_to(path)?;
    }
    if !failed.is_empty() {
        eprintln!("error: duality relation violated: {}", failed.join(", "));
        return Ok(2);
    }
    Ok(0)
}

#[derive(Debug, Serialize)]
struct UqsdOutput {
    case: Case,
    swapped: bool,
    c1: f64,
    c2: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta_re: f64,
    delta_im: f64,
    p1: f64,
    p2: f64,
    p3: f64,
    d_q: f64,
}

fn cmd_uqsd(session: &Session, cfg: &ExperimentConfig, format: Option<Format>, out: Option<&Path>) -> Result<i32> {
    let format = require_format(format, &[Format::Json, Format::Table], Format::Json)?;
    let exp = Experiment::new(cfg)?;
    let b = &exp.basis;
    let doc = UqsdOutput {
        case: b.case_label,
        swapped: exp.amplitudes.swapped,
        c1: exp.amplitudes.c1,
        c2: exp.amplitudes.c2,
        alpha: b.alpha,
        beta: b.beta,
        gamma: b.gamma,
        delta_re: b.delta.re,
        delta_im: b.delta.im,
        p1: b.p_outcome1,
        p2: b.p_outcome2,
        p3: b.p_outcome3,
        d_q: exp.distinguishability()?,
    };
    emit_text(&render(&doc, format)?, out)?;
    if let Some(path) = out {
        session
            .manifest(exp.config, Some(exp.amplitudes), None, vec![path.to_path_buf()])
            .write_next_to(path)?;
    }
    Ok(0)
}

#[derive(Debug, Serialize)]
struct MonteCarloSummary {
    n: u64,
    seed: u64,
    swapped: bool,
    counts: [u64; 3],
    expected: [f64; 3],
    outcome3_acceptance_rate: Option<f64>,
    stats: GroupStats,
}

fn cmd_montecarlo(
    session: &Session,
    cfg: &ExperimentConfig,
    n: u64,
    seed: u64,
    bins: Option<usize>,
    out: &Path,
) -> Result<i32> {
    if n == 0 {
        return Err(Error::InvalidArgument("--n must be positive".into()));
    }
    let exp = Experiment::new(cfg)?;
    let run = sample_run(&exp, n, seed);
    let stats = group_statistics(&run.records, &exp, bins)?;
    output::write_records_csv(out, &run.records)?;
    let summary = MonteCarloSummary {
        n,
        seed,
        swapped: exp.amplitudes.swapped,
        counts: run.counts(),
        expected: exp.outcome_probabilities(),
        outcome3_acceptance_rate: run.acceptance_rate(),
        stats,
    };
    let summary_path = output::sibling(out, "summary.json");
    output::write_json(&summary_path, &summary)?;
    emit_text(&render(&summary, Format::Json)?, None)?;
    session
        .manifest(exp.config, Some(exp.amplitudes), Some(seed), vec![out.to_path_buf(), summary_path])
        .write_next_to(out)?;
    Ok(0)
}

fn cmd_sweep(
    session: &Session,
    cfg: &ExperimentConfig,
    format: Option<Format>,
    grid: &[GridAxis],
    out: Option<&Path>,
) -> Result<i32> {
    let format = require_format(format, &[Format::Csv, Format::Json], Format::Csv)?;
    let rows = run_sweep(cfg, grid)?;
    let text = match format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&rows)?),
        _ => {
            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, &rows)?;
            String::from_utf8(buf).expect("csv output is utf-8")
        }
    };
    emit_text(&text, out)?;
    if let Some(path) = out {
        session
            .manifest(*cfg, None, None, vec![path.to_path_buf()])
            .write_next_to(path)?;
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("asymduality").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn overrides_and_complement() {
        let cli = parse(&["duality", "--p1", "0.8", "--overlap", "0.5", "--theta", "-1.5"]);
        let cfg = cli.global.resolve().unwrap();
        assert_eq!(cfg.p1, 0.8);
        assert!((cfg.p2 - 0.2).abs() < 1e-15);
        assert_eq!(cfg.overlap, 0.5);
        assert_eq!(cfg.theta, -1.5);
    }

    #[test]
    fn big_d_flag() {
        let cfg = parse(&["uqsd", "--D", "2e4"]).global.resolve().unwrap();
        assert_eq!(cfg.big_d, 2e4);
    }

    #[test]
    fn unknown_flag_is_exit_one() {
        assert_eq!(run(["asymduality", "duality", "--bogus", "1"]), 1);
        assert_eq!(run(["asymduality", "frobnicate"]), 1);
        assert_eq!(run(["asymduality", "--help"]), 0);
    }

    #[test]
    fn table_alignment() {
        let t = render_table(&serde_json::json!({"a": 1.5, "long_key": "CaseA"}));
        assert_eq!(t, "a         1.5\nlong_key  CaseA\n");
    }
}
