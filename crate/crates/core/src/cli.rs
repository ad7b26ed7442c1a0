//! Command-line front end shared by the `seplogit` binary.
//!
//! `detect` exits with 0 (no separation), 2 (quasi-complete) or 3 (complete);
//! every command exits with 1 on errors. Payloads go to stdout or `--output`,
//! diagnostics to stderr.

use std::fs::File;
use std::io::{self, IsTerminal, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::baselines::fit_baseline;
use crate::bench::run::baseline_cutoff;
use crate::bench::scenario::{self, builtin_scenario, Scenario, ScenarioName};
use crate::bench::{emit_report, run_bench, BenchConfig, Method, ReportFormat};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::inference::{mean_value_intervals, wilson_interval, Side};
use crate::predict::{predict_with_training, PredictConfig};
use crate::separation::{fit_completion, DetectConfig, SeparationKind};

#[derive(Debug, Parser)]
#[command(
    name = "seplogit",
    version,
    about = "Separation-robust logistic regression"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and print coefficients and fitted probabilities.
    Fit(FitArgs),
    /// Diagnose separation (exit 0 none, 2 quasi-complete, 3 complete).
    Detect(DataArgs),
    /// Confidence intervals for every observation's success probability.
    Infer(DataArgs),
    /// Predict new rows read from --new.
    Predict(PredictArgs),
    /// Reproduce the in-sample and leave-one-out benchmark tables.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
    #[value(name = "markdown-table")]
    MarkdownTable,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::MarkdownTable => ReportFormat::Markdown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Robust,
    Firth,
    Cauchy,
    Ols,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Robust => Method::Robust,
            MethodArg::Firth => Method::Firth,
            MethodArg::Cauchy => Method::Cauchy,
            MethodArg::Ols => Method::Ols,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format; markdown-table on a terminal, json otherwise.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Write the payload here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = default_jobs(), value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: u32,
}

fn default_jobs() -> u32 {
    std::thread::available_parallelism()
        .map(|n| n.get() as u32)
        .unwrap_or(1)
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    pub input: PathBuf,
    /// Name of the 0/1 response column.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Omit the intercept column.
    #[arg(long = "no-intercept", action = clap::ArgAction::SetFalse)]
    pub intercept: bool,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "robust")]
    pub method: MethodArg,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// CSV with the training predictor columns.
    #[arg(long)]
    pub new: PathBuf,
    #[arg(long, value_enum, default_value = "robust")]
    pub method: MethodArg,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Scenarios to run; defaults to the three built-in datasets.
    #[arg(long, value_delimiter = ',')]
    pub scenario: Vec<String>,
    /// Methods to compare; defaults to all four.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub method: Vec<MethodArg>,
    /// Endometrial CSV (columns HG, NV, PI, EH).
    #[arg(long)]
    pub endometrial: Option<PathBuf>,
    /// Maize CSV (response, subpop and 24 marker columns).
    #[arg(long)]
    pub maize: Option<PathBuf>,
    /// Response column for the maize file.
    #[arg(long, default_value = "color")]
    pub maize_response: String,
    /// CSV for the custom scenario.
    #[arg(long)]
    pub custom: Option<PathBuf>,
    #[arg(long, default_value = "y")]
    pub response: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip leave-one-out evaluation.
    #[arg(long)]
    pub no_loocv: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// A rendered payload: JSON for machines, a flat table for csv/markdown.
struct Payload {
    json: Value,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Payload {
    fn render(&self, format: ReportFormat, out: &mut dyn Write) -> Result<()> {
        match format {
            ReportFormat::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.json)?;
                writeln!(out)?;
            }
            ReportFormat::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.headers)?;
                for r in &self.rows {
                    w.write_record(r)?;
                }
                w.flush()?;
            }
            ReportFormat::Markdown => {
                writeln!(out, "| {} |", self.headers.join(" | "))?;
                writeln!(out, "|{}", "---|".repeat(self.headers.len()))?;
                for r in &self.rows {
                    writeln!(out, "| {} |", r.join(" | "))?;
                }
            }
        }
        Ok(())
    }
}

fn format_of(args: &OutputArgs) -> ReportFormat {
    match args.format {
        Some(f) => f.into(),
        None if io::stdout().is_terminal() => ReportFormat::Markdown,
        None => ReportFormat::Json,
    }
}

fn sink(args: &OutputArgs) -> Result<Box<dyn Write>> {
    Ok(match &args.output {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "--alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

fn load(args: &DataArgs) -> Result<Dataset> {
    check_alpha(args.alpha)?;
    scenario::load_csv(&args.input, &args.response, args.intercept)
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn kind_code(kind: SeparationKind) -> i32 {
    match kind {
        SeparationKind::None => 0,
        SeparationKind::QuasiComplete => 2,
        SeparationKind::Complete => 3,
    }
}

fn cmd_detect(args: &DataArgs) -> Result<(Payload, i32)> {
    let d = load(args)?;
    let c = fit_completion(&d, &DetectConfig::default())?;
    let r = &c.report;
    let json = json!({
        "kind": r.kind.as_str(),
        "direction": r.direction,
        "names": d.names(),
        "problematic": r.problematic,
        "loglik_sup": c.loglik_sup,
        "lp_objective": r.lp.as_ref().map(|l| l.objective),
    });
    let dir = r
        .direction
        .as_ref()
        .map(|v| {
            v.iter()
                .map(|x| format!("{x:.6e}"))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .unwrap_or_default();
    let probs = r
        .problematic
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    let payload = Payload {
        json,
        headers: vec!["kind".into(), "direction".into(), "problematic".into()],
        rows: vec![vec![r.kind.as_str().into(), dir, probs]],
    };
    Ok((payload, kind_code(r.kind)))
}

fn cmd_fit(args: &FitArgs) -> Result<(Payload, i32)> {
    let d = load(&args.data)?;
    let headers = vec!["index".into(), "y".into(), "fitted".into()];
    let table = |fitted: &[f64]| -> Vec<Vec<String>> {
        fitted
            .iter()
            .enumerate()
            .map(|(i, p)| vec![i.to_string(), d.y()[i].to_string(), num(*p)])
            .collect()
    };
    let method: Method = args.method.into();
    let payload = if method == Method::Robust {
        let c = fit_completion(&d, &DetectConfig::default())?;
        let beta = c
            .mle
            .as_ref()
            .or(c.report.lcm.as_ref().map(|l| &l.fit))
            .map(|f| f.beta.0.clone());
        Payload {
            json: json!({
                "method": "robust",
                "kind": c.kind().as_str(),
                "names": d.names(),
                "coefficients": beta,
                "direction": c.report.direction,
                "problematic": c.report.problematic,
                "loglik_sup": c.loglik_sup,
                "fitted": c.mean_values,
            }),
            headers,
            rows: table(&c.mean_values),
        }
    } else {
        let b = fit_baseline(method_baseline(method), &d)?;
        Payload {
            json: json!({
                "method": method.as_str(),
                "names": d.names(),
                "coefficients": b.beta.0,
                "fitted": b.pihat,
                "iterations": b.iterations,
            }),
            headers,
            rows: table(&b.pihat),
        }
    };
    Ok((payload, 0))
}

fn method_baseline(m: Method) -> crate::baselines::BaselineMethod {
    use crate::baselines::BaselineMethod;
    match m {
        Method::Firth => BaselineMethod::Firth,
        Method::Cauchy => BaselineMethod::CauchyMap,
        _ => BaselineMethod::Ols,
    }
}

fn side_str(s: Side) -> &'static str {
    match s {
        Side::LowerOneSided => "lower-one-sided",
        Side::UpperOneSided => "upper-one-sided",
        Side::TwoSided => "two-sided",
    }
}

fn cmd_infer(args: &DataArgs) -> Result<(Payload, i32)> {
    let d = load(args)?;
    let c = fit_completion(&d, &DetectConfig::default())?;
    let set = mean_value_intervals(&d, &c, args.alpha)?;
    for f in &set.failures {
        eprintln!("interval at row {} failed: {}", f.index, f.message);
    }
    let rows = set
        .records
        .iter()
        .map(|r| {
            vec![
                r.index.to_string(),
                r.y.to_string(),
                num(r.estimate),
                num(r.lower),
                num(r.upper),
                side_str(r.side).into(),
                num(r.length()),
            ]
        })
        .collect();
    let code = if set.failures.is_empty() { 0 } else { 1 };
    Ok((
        Payload {
            json: json!({ "kind": c.kind().as_str(), "intervals": set }),
            headers: ["index", "y", "estimate", "lower", "upper", "side", "length"]
                .map(String::from)
                .to_vec(),
            rows,
        },
        code,
    ))
}

fn cmd_predict(args: &PredictArgs) -> Result<(Payload, i32)> {
    let d = load(&args.data)?;
    let rows_new = scenario::load_new_rows(&args.new, d.names())?;
    let method: Method = args.method.into();
    let alpha = args.data.alpha;
    let mut records = Vec::new();
    let mut table = Vec::new();
    if method == Method::Robust {
        let config = PredictConfig {
            detect: DetectConfig::default(),
            alpha,
        };
        let training = fit_completion(&d, &config.detect)?;
        for (k, x) in rows_new.iter().enumerate() {
            let r = predict_with_training(&d, &training, x, &config)?;
            table.push(vec![
                k.to_string(),
                num(r.pi0),
                num(r.pi1),
                num(r.w0),
                num(r.w1),
                num(r.pi_star),
                num(r.interval.0),
                num(r.interval.1),
                r.label.to_string(),
                num(r.cutoff),
                r.fallback.to_string(),
            ]);
            records.push(serde_json::to_value(&r)?);
        }
    } else {
        let fit = fit_baseline(method_baseline(method), &d)?;
        let y: Vec<f64> = d.y().iter().copied().collect();
        let cutoff = baseline_cutoff(&fit, &y);
        for (k, x) in rows_new.iter().enumerate() {
            let p = fit.predict(x)?;
            let (lo, hi) = wilson_interval(p, d.n() as f64, alpha)?;
            let label = u8::from(p >= cutoff);
            table.push(vec![
                k.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                num(p),
                num(lo),
                num(hi),
                label.to_string(),
                num(cutoff),
                "false".into(),
            ]);
            records.push(json!({
                "x_new": x.as_slice(), "pi_star": p, "interval": [lo, hi], "label": label, "cutoff": cutoff,
            }));
        }
    }
    Ok((
        Payload {
            json: json!({ "method": method.as_str(), "predictions": records }),
            headers: [
                "row", "pi0", "pi1", "w0", "w1", "pi_star", "lower", "upper", "label", "cutoff",
                "fallback",
            ]
            .map(String::from)
            .to_vec(),
            rows: table,
        },
        0,
    ))
}

fn bench_scenarios(args: &BenchArgs) -> Result<Vec<Scenario>> {
    let names: Vec<ScenarioName> = if args.scenario.is_empty() {
        ScenarioName::BUILTIN.to_vec()
    } else {
        args.scenario
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_>>()?
    };
    let mut out = Vec::new();
    for name in names {
        let loaded = match name {
            ScenarioName::Endometrial => match &args.endometrial {
                Some(p) => scenario::load_endometrial(p).map(Some),
                None => Ok(None),
            },
            ScenarioName::Maize => match &args.maize {
                Some(p) => scenario::load_maize(p, &args.maize_response).map(Some),
                None => Ok(None),
            },
            ScenarioName::Custom => match &args.custom {
                Some(p) => scenario::load_custom(p, &args.response, true).map(Some),
                None => Ok(None),
            },
            builtin => builtin_scenario(builtin).map(Some),
        };
        match loaded {
            Ok(Some(s)) => out.push(s),
            Ok(None) => eprintln!("warning: skipping scenario '{name}': no data file given"),
            Err(e) => eprintln!("warning: skipping scenario '{name}': {e}"),
        }
    }
    if out.is_empty() {
        return Err(Error::Precondition("no scenario could be run".into()));
    }
    Ok(out)
}

fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    check_alpha(args.alpha)?;
    let scenarios = bench_scenarios(args)?;
    let methods: Vec<Method> = if args.method.is_empty() {
        Method::ALL.to_vec()
    } else {
        args.method.iter().map(|&m| m.into()).collect()
    };
    let config = BenchConfig {
        alpha: args.alpha,
        seed: args.seed,
        loocv: !args.no_loocv,
        ..BenchConfig::default()
    };
    let report = run_bench(&scenarios, &methods, &config);
    for row in report.rows.iter().filter(|r| !r.errors.is_empty()) {
        eprintln!(
            "{} / {}: {}",
            row.scenario,
            row.method,
            row.errors.join("; ")
        );
    }
    let mut out = sink(&args.out)?;
    emit_report(&report, format_of(&args.out), &mut out)?;
    out.flush()?;
    Ok(0)
}

fn with_pool<T: Send>(jobs: u32, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs as usize)
        .build()
        .map_err(|e| Error::Precondition(e.to_string()))?;
    Ok(pool.install(f))
}

fn emit(out_args: &OutputArgs, result: Result<(Payload, i32)>) -> Result<i32> {
    let (payload, code) = result?;
    let mut out = sink(out_args)?;
    payload.render(format_of(out_args), &mut out)?;
    out.flush()?;
    Ok(code)
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Fit(a) => with_pool(a.data.out.jobs, || emit(&a.data.out, cmd_fit(a))),
        Command::Detect(a) => with_pool(a.out.jobs, || emit(&a.out, cmd_detect(a))),
        Command::Infer(a) => with_pool(a.out.jobs, || emit(&a.out, cmd_infer(a))),
        Command::Predict(a) => with_pool(a.data.out.jobs, || emit(&a.data.out, cmd_predict(a))),
        Command::Bench(a) => with_pool(a.out.jobs, || cmd_bench(a)),
    };
    match result.and_then(|r| r) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Parses `args` and runs; usage errors exit with 1, `--help` with 0.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
