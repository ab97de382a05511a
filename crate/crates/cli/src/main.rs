//! `clockwork`: command-line front-end for the clock model.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 oracle
//! check failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clockwork_core::model::TopLevelProfile;
use clockwork_core::sampler::write_sample_csv;
use clockwork_core::sweep::{default_oracle_grid, fmt_f64, parse_values, OutputFormat, RawConfig};
use clockwork_core::{
    baseline_metrics, build_oracle, clock_metrics, effective_coupling, empirical_metrics, energy_account,
    run_figure, run_oracle_check, run_sweep, sample_ticks, ClockError, ClockParams, FigurePreset,
};
use serde_json::{json, Value};

/// Directory used for relative `--out` paths and for default file names.
const OUT_DIR_ENV: &str = "CLOCKWORK_OUT_DIR";

#[derive(Parser)]
#[command(name = "clockwork", version, about = "Autonomous thermal clock model: profiles, tick statistics, sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Top-level population at the given times.
    Ptop(PtopArgs),
    /// Exact tick statistics of one clock.
    Metrics(MetricsArgs),
    /// One-parameter sweep.
    Sweep(SweepArgs),
    /// Curve family of a figure preset as long-format CSV.
    Figure(FigureArgs),
    /// Random tick stream.
    Sample(SampleArgs),
    /// Compare the closed forms against exact evolution.
    OracleCheck(OracleArgs),
}

/// Clock parameters; each flag overrides the same key of `--config`.
#[derive(Args, Default)]
struct ParamArgs {
    /// Flat JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<u64>,
    /// Machines per transition: integer or `inf`.
    #[arg(long = "M")]
    m: Option<String>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Cold inverse temperature: number or `inf`.
    #[arg(long = "beta-c")]
    beta_c: Option<String>,
    #[arg(long = "beta-h")]
    beta_h: Option<f64>,
    #[arg(long = "e-c")]
    e_c: Option<f64>,
    #[arg(long = "e-h")]
    e_h: Option<f64>,
}

impl ParamArgs {
    fn any_set(&self) -> bool {
        self.config.is_some()
            || self.d.is_some()
            || self.m.is_some()
            || self.g.is_some()
            || self.c.is_some()
            || self.beta_c.is_some()
            || self.beta_h.is_some()
            || self.e_c.is_some()
            || self.e_h.is_some()
    }

    fn raw(&self) -> Result<RawConfig, ClockError> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ClockError::Config(format!("cannot read {}: {e}", path.display())))?;
                RawConfig::from_json(&text)?
            }
            None => RawConfig::default(),
        };
        let flags = RawConfig {
            d: self.d,
            m: self.m.clone().map(Value::String),
            g: self.g,
            c: self.c,
            beta_c: self.beta_c.clone().map(Value::String),
            beta_h: self.beta_h,
            e_c: self.e_c,
            e_h: self.e_h,
            ..Default::default()
        };
        Ok(file.overridden_by(flags))
    }

    fn params(&self) -> Result<ClockParams, ClockError> {
        self.raw()?.params()
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output file; relative paths resolve against $CLOCKWORK_OUT_DIR.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PtopArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Times in seconds: `a,b,c` or `start:stop:step`.
    #[arg(long, default_value = "0:3.141592653589793:0.1")]
    times: String,
    /// general, two-qubit, horizontal or oracle.
    #[arg(long, default_value = "general")]
    variant: String,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Clock without clockwork: ladder in equilibrium with the hot bath.
    #[arg(long)]
    baseline: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// d, M, c or g.
    #[arg(long)]
    axis: Option<String>,
    /// `a,b,c` or `start:stop:step`.
    #[arg(long)]
    values: Option<String>,
    /// Comma-separated subset of N,R,epsilon,t_bar,delta_t,C_M.
    #[arg(long)]
    outputs: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct FigureArgs {
    /// fig4, fig5, fig6, fig8a, fig8b or fig9.
    preset: String,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 10_000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct OracleArgs {
    /// Check only the clock given by the parameter flags instead of the
    /// default grid.
    #[command(flatten)]
    params: ParamArgs,
    /// Sample times per instance, spread over two periods.
    #[arg(long, default_value_t = 100)]
    times: usize,
    #[command(flatten)]
    out: OutArgs,
}

enum Failure {
    Clock(ClockError),
    OracleMismatch,
}

impl From<ClockError> for Failure {
    fn from(e: ClockError) -> Self {
        Failure::Clock(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Clock(e.into())
    }
}

fn output(out: &OutArgs, default_name: &str) -> Result<Box<dyn Write>, ClockError> {
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    let path = match (&out.out, dir) {
        (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => Some(dir.join(default_name)),
        (None, None) => None,
    };
    match path {
        Some(p) => {
            let f = File::create(&p).map_err(|e| ClockError::Io(format!("cannot write {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn write_params_header(w: &mut dyn Write, p: &ClockParams) -> io::Result<()> {
    writeln!(w, "# d={}", p.d)?;
    writeln!(w, "# M={}", p.machines)?;
    for (k, v) in [
        ("g", p.g),
        ("c", p.c),
        ("beta_c", p.beta_c),
        ("beta_h", p.beta_h),
        ("e_c", p.e_c),
        ("e_h", p.e_h),
    ] {
        writeln!(w, "# {k}={}", fmt_f64(v))?;
    }
    writeln!(w, "# tool_version={}", env!("CARGO_PKG_VERSION"))
}

fn params_json(p: &ClockParams) -> Value {
    json!({
        "d": p.d,
        "M": p.machines.to_string(),
        "g": p.g,
        "c": p.c,
        "beta_c": fmt_f64(p.beta_c),
        "beta_h": p.beta_h,
        "e_c": p.e_c,
        "e_h": p.e_h,
    })
}

fn ptop(args: &PtopArgs) -> Result<(), Failure> {
    let p = args.params.params()?;
    let times = parse_values(&args.times)?;
    let values: Vec<f64> = match args.variant.as_str() {
        "oracle" => build_oracle(&p)?.evolve(&times).p_top,
        name => {
            let profile = match name {
                "general" => TopLevelProfile::general(&p)?,
                "two-qubit" => TopLevelProfile::two_qubit(&p)?,
                "horizontal" => TopLevelProfile::horizontal_finite_t(&p)?,
                other => return Err(ClockError::Config(format!("unknown variant `{other}`")).into()),
            };
            times.iter().map(|&t| profile.evaluate(t)).collect()
        }
    };
    let mut w = output(&args.out, "ptop.csv")?;
    write_params_header(&mut *w, &p)?;
    writeln!(w, "# variant={}", args.variant)?;
    writeln!(w, "t,p_top")?;
    for (t, v) in times.iter().zip(values) {
        writeln!(w, "{},{}", fmt_f64(*t), fmt_f64(v))?;
    }
    w.flush()?;
    Ok(())
}

fn metrics(args: &MetricsArgs) -> Result<(), Failure> {
    let p = args.params.params()?;
    let m = if args.baseline { baseline_metrics(&p)? } else { clock_metrics(&p)? };
    let mut report = json!({
        "params": params_json(&p),
        "baseline": args.baseline,
        "metrics": m,
        "energy": energy_account(&p),
    });
    if !args.baseline {
        report["C_M"] = json!(effective_coupling(&p)?);
    }
    let mut w = output(&args.out, "metrics.json")?;
    writeln!(w, "{}", serde_json::to_string_pretty(&report).expect("serializable"))?;
    w.flush()?;
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let flags = RawConfig {
        axis: args.axis.clone(),
        values: args.values.clone().map(Value::String),
        outputs: args
            .outputs
            .as_ref()
            .map(|s| s.split(',').map(|x| x.trim().to_string()).collect()),
        format: args.format.clone(),
        out: args.out.out.as_ref().map(|p| p.display().to_string()),
        seed: args.seed,
        ..Default::default()
    };
    let config = args.params.raw()?.overridden_by(flags).into_sweep()?;
    let table = run_sweep(&config)?;
    let out = OutArgs { out: config.out_path.clone() };
    let default_name = match config.format {
        OutputFormat::Csv => "sweep.csv",
        OutputFormat::Json => "sweep.json",
    };
    let mut w = output(&out, default_name)?;
    table.write(&mut w)?;
    w.flush()?;
    Ok(())
}

fn figure(args: &FigureArgs) -> Result<(), Failure> {
    let preset: FigurePreset = args.preset.parse()?;
    let table = run_figure(preset);
    let mut w = output(&args.out, &format!("{preset}.csv"))?;
    table.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn sample(args: &SampleArgs) -> Result<(), Failure> {
    let p = args.params.params()?;
    let s = sample_ticks(&p, args.count, args.seed)?;
    let mut w = output(&args.out, "sample.csv")?;
    write_sample_csv(&mut w, &p, &s)?;
    w.flush()?;
    if let Ok(e) = empirical_metrics(&s) {
        eprintln!(
            "t_bar_hat={} +- {}  N_hat={} +- {}",
            fmt_f64(e.t_bar_hat),
            fmt_f64(e.t_bar_se),
            fmt_f64(e.n_hat),
            fmt_f64(e.n_se)
        );
    }
    Ok(())
}

fn oracle_check(args: &OracleArgs) -> Result<(), Failure> {
    let grid = if args.params.any_set() {
        vec![args.params.params()?]
    } else {
        default_oracle_grid()
    };
    if args.times == 0 {
        return Err(ClockError::Config("--times must be >= 1".into()).into());
    }
    let report = run_oracle_check(&grid, args.times);
    let mut w = output(&args.out, "oracle_check.csv")?;
    report.write_csv(&mut w)?;
    w.flush()?;
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::OracleMismatch)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Ptop(a) => ptop(a),
        Command::Metrics(a) => metrics(a),
        Command::Sweep(a) => sweep(a),
        Command::Figure(a) => figure(a),
        Command::Sample(a) => sample(a),
        Command::OracleCheck(a) => oracle_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::OracleMismatch) => {
            eprintln!("error: oracle check failed");
            ExitCode::from(3)
        }
        Err(Failure::Clock(e)) => {
            eprintln!("error: {e}");
            let code = if e.is_validation() || matches!(e, ClockError::Io(_)) { 1 } else { 2 };
            ExitCode::from(code)
        }
    }
}
