//! The `lro` command-line front end.

mod input;

use std::fs;
use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{LroError, Result};
use crate::estimators::{fit_lro, EmpiricalOdc, LroFit, TwoSample};
use crate::inference::quantiles::{ChernoffOracle, LrtOracle};
use crate::inference::{
    format_f64, interval, serialize_f64, split_ci, split_fits, Bandwidth, CiMethod,
    InferenceConfig, IntervalEstimate, QuantileTable,
};
use crate::simulation::{run_study_with, MonteCarloReport, Scenario, ScenarioKind, StudyConfig};

pub use input::{read_two_sample, GroupLabels};

/// Version of the JSON output layout.
pub const OUTPUT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "lro", version, about = "Estimation and inference under a likelihood ratio order")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the maximum likelihood estimator to a value,group CSV.
    Fit(FitArgs),
    /// Pointwise confidence intervals for the density ratio.
    Ci(CiArgs),
    /// Run a Monte Carlo study.
    Simulate(SimulateArgs),
    /// Regenerate the table of Chernoff and likelihood ratio quantiles.
    QuantileTable(QuantileArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file with columns value,group.
    #[arg(long)]
    pub input: PathBuf,
    /// Group label of the first sample.
    #[arg(long, default_value = "x")]
    pub x_label: String,
    /// Group label of the second sample.
    #[arg(long, default_value = "y")]
    pub y_label: String,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Re-read the CSV output and check that the ratio levels round-trip.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct CiArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Interval methods, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "lrt")]
    pub method: Vec<CiMethod>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Evaluation points, comma separated; defaults to the distinct y values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub points: Vec<f64>,
    /// Seed for the random partition of the split method.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Number of subsamples for the split method.
    #[arg(long, default_value_t = 5)]
    pub split_m: usize,
    /// Window constant for the derivative estimates.
    #[arg(long, default_value_t = 0.5)]
    pub derivative_c: f64,
    /// Multiplier of the rule-of-thumb kernel bandwidth.
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth_factor: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario config file (key = value lines) or a scenario name:
    /// discrete-poisson, continuous-exponential, mixed.
    #[arg(long)]
    pub scenario: String,
    /// Replications per sample size.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Total sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Interval methods, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub method: Vec<CiMethod>,
    /// Evaluation points, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub points: Vec<f64>,
    #[arg(long)]
    pub level: Option<f64>,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the JSON summary to this file.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QuantileArgs {
    #[arg(long, default_value_t = 20240601)]
    pub seed: u64,
    /// Replications of the Chernoff oracle.
    #[arg(long)]
    pub chernoff_reps: Option<usize>,
    /// Replications of the likelihood ratio oracle.
    #[arg(long)]
    pub lrt_reps: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load(input: &InputArgs) -> Result<TwoSample> {
    let file = fs::File::open(&input.input)?;
    let labels = GroupLabels {
        x: input.x_label.clone(),
        y: input.y_label.clone(),
    };
    read_two_sample(io::BufReader::new(file), &labels)
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| LroError::Config(format!("cannot configure {t} threads: {e}")))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct DistributionOut<'a> {
    knots: &'a [f64],
    cdf: &'a [f64],
    mass: Vec<f64>,
}

#[derive(Serialize)]
struct InfVec<'a>(#[serde(serialize_with = "serialize_f64_slice")] &'a [f64]);

fn serialize_f64_slice<S: serde::Serializer>(
    v: &&[f64],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct F(f64);
    impl Serialize for F {
        fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            serialize_f64(&self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v.iter() {
        seq.serialize_element(&F(*x))?;
    }
    seq.end()
}

#[derive(Serialize)]
struct ThetaOut<'a> {
    breakpoints: &'a [f64],
    levels: InfVec<'a>,
}

#[derive(Serialize)]
struct FitOut<'a> {
    n: usize,
    n1: usize,
    n2: usize,
    pi_n: f64,
    f_star: DistributionOut<'a>,
    g_star: DistributionOut<'a>,
    theta: ThetaOut<'a>,
    odc: &'a EmpiricalOdc,
}

#[derive(Serialize)]
struct Versioned<T: Serialize> {
    version: u32,
    #[serde(flatten)]
    body: T,
}

fn fit_out(fit: &LroFit) -> FitOut<'_> {
    let p = fit.pooled();
    FitOut {
        n: p.n(),
        n1: p.n1(),
        n2: p.n2(),
        pi_n: fit.pi_n(),
        f_star: DistributionOut {
            knots: fit.f_star().knots(),
            cdf: fit.f_star().cdf_values(),
            mass: fit.f_star().masses(),
        },
        g_star: DistributionOut {
            knots: fit.g_star().knots(),
            cdf: fit.g_star().cdf_values(),
            mass: fit.g_star().masses(),
        },
        theta: ThetaOut {
            breakpoints: fit.theta_star().breakpoints(),
            levels: InfVec(fit.theta_star().levels()),
        },
        odc: fit.odc(),
    }
}

fn to_json<T: Serialize>(body: T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Versioned {
        version: OUTPUT_VERSION,
        body,
    })?;
    s.push('\n');
    Ok(s)
}

/// JSON rendering of a fit: `{"version": 1, "fit": {...}}`.
pub fn fit_json(fit: &LroFit) -> Result<String> {
    #[derive(Serialize)]
    struct Body<'a> {
        fit: FitOut<'a>,
    }
    to_json(Body { fit: fit_out(fit) })
}

/// CSV rendering of a fit with columns `section,z,value,mass`.
///
/// `theta` rows give each level with the right end of its interval
/// (`inf` for the last one); `odc` rows give `(G_n, F_n)` points.
pub fn fit_csv(fit: &LroFit) -> String {
    let mut s = String::from("section,z,value,mass\n");
    let mut row = |section: &str, z: Option<f64>, value: f64, mass: Option<f64>| {
        s.push_str(&format!(
            "{section},{},{},{}\n",
            z.map(format_f64).unwrap_or_default(),
            format_f64(value),
            mass.map(format_f64).unwrap_or_default()
        ));
    };
    row("pi_n", None, fit.pi_n(), None);
    for (name, d) in [("f_star", fit.f_star()), ("g_star", fit.g_star())] {
        for ((&k, &c), m) in d.knots().iter().zip(d.cdf_values()).zip(d.masses()) {
            row(name, Some(k), c, Some(m));
        }
    }
    let t = fit.theta_star();
    for (i, &level) in t.levels().iter().enumerate() {
        let end = t.breakpoints().get(i).copied().unwrap_or(f64::INFINITY);
        row("theta", Some(end), level, None);
    }
    for &(g, f) in &fit.odc().points {
        row("odc", Some(g), f, None);
    }
    for &(g, f) in &fit.odc().gcm_vertices {
        row("odc_gcm", Some(g), f, None);
    }
    s
}

fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

/// Reads the `theta` rows of [`fit_csv`] output back as `(breakpoints, levels)`.
pub fn read_theta_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let (mut breakpoints, mut levels) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        if rec.get(0) != Some("theta") {
            continue;
        }
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| {
            rec.get(i).and_then(parse_f64).ok_or_else(|| LroError::Parse {
                line,
                message: "bad theta row".into(),
            })
        };
        let end = field(1)?;
        levels.push(field(2)?);
        if end.is_finite() {
            breakpoints.push(end);
        }
    }
    Ok((breakpoints, levels))
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let ts = load(&args.input)?;
    let fit = fit_lro(&ts)?;
    let text = match args.output.format {
        Format::Json => fit_json(&fit)?,
        Format::Csv => fit_csv(&fit),
    };
    write_output(args.output.output.as_deref(), &text)?;
    if args.verify {
        let csv_text = match (args.output.format, &args.output.output) {
            (Format::Csv, Some(p)) => fs::read_to_string(p)?,
            _ => fit_csv(&fit),
        };
        let (b, l) = read_theta_csv(&csv_text)?;
        let t = fit.theta_star();
        if b != t.breakpoints() || l != t.levels() {
            return Err(LroError::InvalidInput(
                "verification failed: ratio levels do not round-trip through CSV".into(),
            ));
        }
        eprintln!("verified: {} ratio levels round-trip", l.len());
    }
    Ok(())
}

/// One row of `ci` output: an interval, or the reason none was produced.
#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum CiRow {
    Interval(IntervalEstimate),
    Unsupported {
        z: f64,
        method: CiMethod,
        level: f64,
        error: String,
    },
}

pub fn compute_intervals(ts: &TwoSample, args: &CiArgs) -> Result<Vec<CiRow>> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(LroError::Config(format!("level {} is not in (0, 1)", args.level)));
    }
    if let Some(p) = args.points.iter().find(|p| !p.is_finite()) {
        return Err(LroError::Config(format!("evaluation point {p} is not finite")));
    }
    let fit = fit_lro(ts)?;
    let points = if args.points.is_empty() {
        fit.g_star().knots().to_vec()
    } else {
        args.points.clone()
    };
    let cfg = InferenceConfig {
        derivative_c: args.derivative_c,
        bandwidth: Bandwidth::Silverman(args.bandwidth_factor),
        ..InferenceConfig::default()
    };
    let splits = if args.method.contains(&CiMethod::Split) {
        Some(split_fits(ts, args.split_m, args.seed)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for &z in &points {
        for &method in &args.method {
            let r = match (method, &splits) {
                (CiMethod::Split, Some(s)) => split_ci(&s.estimate(z), args.level),
                _ => interval(&fit, z, args.level, method, &cfg),
            };
            rows.push(match r {
                Ok(ci) => CiRow::Interval(ci),
                Err(e) => CiRow::Unsupported {
                    z,
                    method,
                    level: args.level,
                    error: e.to_string(),
                },
            });
        }
    }
    Ok(rows)
}

fn intervals_csv(rows: &[CiRow]) -> String {
    let mut s = String::from("z,method,level,estimate,lower,upper,status,nuisances\n");
    for r in rows {
        match r {
            CiRow::Interval(ci) => {
                let nuisances: Vec<String> = ci
                    .nuisances
                    .iter()
                    .map(|(k, v)| format!("{k}={}", format_f64(*v)))
                    .collect();
                s.push_str(&format!(
                    "{},{},{},{},{},{},ok,{}\n",
                    format_f64(ci.z),
                    ci.method,
                    ci.level,
                    format_f64(ci.estimate),
                    format_f64(ci.lower),
                    format_f64(ci.upper),
                    nuisances.join(";")
                ));
            }
            CiRow::Unsupported { z, method, level, error } => {
                s.push_str(&format!(
                    "{},{method},{level},,,,\"unsupported: {}\",\n",
                    format_f64(*z),
                    error.replace('"', "'")
                ));
            }
        }
    }
    s
}

pub fn cmd_ci(args: &CiArgs) -> Result<()> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(LroError::Config(format!("level {} is not in (0, 1)", args.level)));
    }
    let ts = load(&args.input)?;
    let rows = compute_intervals(&ts, args)?;
    let text = match args.output.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                intervals: &'a [CiRow],
            }
            to_json(Body { intervals: &rows })?
        }
        Format::Csv => intervals_csv(&rows),
    };
    write_output(args.output.output.as_deref(), &text)
}

/// JSON summary of a study: `{"version": 1, "report": {...}}`.
pub fn report_json(report: &MonteCarloReport) -> Result<String> {
    #[derive(Serialize)]
    struct Body<'a> {
        report: &'a MonteCarloReport,
    }
    to_json(Body { report })
}

fn study_config(args: &SimulateArgs) -> Result<StudyConfig> {
    let mut cfg = if Path::new(&args.scenario).is_file() {
        StudyConfig::parse(&fs::read_to_string(&args.scenario)?)?
    } else {
        let kind: ScenarioKind = args.scenario.parse()?;
        StudyConfig::new(Scenario::from_kind(kind))
    };
    if let Some(r) = args.reps {
        cfg.replications = r;
    }
    if !args.n.is_empty() {
        cfg.n_list = args.n.clone();
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if !args.method.is_empty() {
        cfg.methods = args.method.clone();
    }
    if !args.points.is_empty() {
        cfg.scenario.eval_grid = args.points.clone();
    }
    if let Some(l) = args.level {
        cfg.level = l;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn progress_printer() -> impl Fn(usize, usize) {
    let color = std::env::var_os("NO_COLOR").is_none() && io::stderr().is_terminal();
    move |done, total| {
        if color {
            eprintln!("\x1b[2msimulate: {done}/{total} sample sizes done\x1b[0m");
        } else {
            eprintln!("simulate: {done}/{total} sample sizes done");
        }
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = study_config(args)?;
    set_threads(args.threads)?;
    let report = run_study_with(&cfg, progress_printer())?;
    let text = match args.format {
        Format::Csv => report.to_csv(),
        Format::Json => report_json(&report)?,
    };
    write_output(args.output.as_deref(), &text)?;
    if let Some(p) = &args.summary {
        fs::write(p, report_json(&report)?)?;
    }
    Ok(())
}

pub fn cmd_quantile_table(args: &QuantileArgs) -> Result<()> {
    set_threads(args.threads)?;
    let mut c = ChernoffOracle::default();
    let mut l = LrtOracle::default();
    if let Some(r) = args.chernoff_reps {
        c.replications = r;
    }
    if let Some(r) = args.lrt_reps {
        l.replications = r;
    }
    if c.replications < 2 || l.replications < 2 {
        return Err(LroError::Config("oracles need at least 2 replications".into()));
    }
    let table = QuantileTable::generate(args.seed, c, l);
    write_output(args.output.as_deref(), &table.to_text())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Ci(a) => cmd_ci(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::QuantileTable(a) => cmd_quantile_table(a),
    }
}

/// Parses arguments, runs the command and maps errors to exit status 1.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> LroFit {
        let ts = TwoSample::new(vec![-1.0, 2.0, 3.0, 3.0], vec![0.0, 0.0, 1.0, 3.0, 3.0, 6.0]).unwrap();
        fit_lro(&ts).unwrap()
    }

    #[test]
    fn fit_csv_round_trips_theta() {
        let fit = golden();
        let (b, l) = read_theta_csv(&fit_csv(&fit)).unwrap();
        assert_eq!(b, fit.theta_star().breakpoints());
        assert_eq!(l, fit.theta_star().levels());
        assert_eq!(b, vec![1.0]);
        assert!((l[0] - 0.5).abs() < 1e-12 && (l[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn fit_json_has_version_and_levels() {
        let v: serde_json::Value = serde_json::from_str(&fit_json(&golden()).unwrap()).unwrap();
        assert_eq!(v["version"], 1);
        let levels: Vec<f64> = serde_json::from_value(v["fit"]["theta"]["levels"].clone()).unwrap();
        assert_eq!(levels.len(), 2);
        assert!((levels[0] - 0.5).abs() < 1e-12 && (levels[1] - 1.5).abs() < 1e-12);
        assert_eq!(v["fit"]["theta"]["breakpoints"], serde_json::json!([1.0]));
    }

    #[test]
    fn infinite_levels_are_strings() {
        let ts = TwoSample::new(vec![0.5, 3.0, 4.0], vec![1.0, 2.0]).unwrap();
        let fit = fit_lro(&ts).unwrap();
        assert!(fit_json(&fit).unwrap().contains("\"inf\""));
        let (_, l) = read_theta_csv(&fit_csv(&fit)).unwrap();
        assert_eq!(l.last(), Some(&f64::INFINITY));
    }

    #[test]
    fn cli_parses_flags() {
        let cli = Cli::try_parse_from([
            "lro", "ci", "--input", "d.csv", "--method", "lrt,split", "--points", "0.25,-1",
            "--level", "0.9", "--format", "csv",
        ])
        .unwrap();
        match cli.command {
            Command::Ci(a) => {
                assert_eq!(a.method, vec![CiMethod::Lrt, CiMethod::Split]);
                assert_eq!(a.points, vec![0.25, -1.0]);
                assert_eq!(a.output.format, Format::Csv);
            }
            _ => panic!(),
        }
        assert!(Cli::try_parse_from(["lro", "ci", "--input", "d", "--method", "bogus"]).is_err());
    }
}
