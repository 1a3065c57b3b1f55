//! Command-line driver: argument parsing, subcommand dispatch and the JSON
//! analysis report.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pairfiber::enumerate::Count;
use pairfiber::io::{self, InputFormat};
use pairfiber::table::pairs;
use pairfiber::*;
use serde::Serialize;
use serde_json::{json, Value};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "pairfiber", version, about = "Log-linear fits, fiber sampling and pair scans for pair-count tables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Significant digits in TSV renderings.
    #[arg(long, global = true, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=17))]
    pub digits: u32,
    /// Worker threads for pair scans and multiple chains; 1 runs sequentially.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Tsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetArg {
    Uniform,
    Hypergeometric,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Uniform => Target::Uniform,
            TargetArg::Hypergeometric => Target::Hypergeometric,
        }
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Table file: long CSV `chr_a,chr_b,count`, or the matrix layout with --matrix.
    pub input: PathBuf,
    /// Read the upper-triangular whitespace matrix layout.
    #[arg(long)]
    pub matrix: bool,
    /// Number of categories; inferred from the file when omitted.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Largest allowed absolute margin violation.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = 100_000)]
    pub max_iter: usize,
}

impl FitArgs {
    fn config(&self) -> FitConfig {
        FitConfig { tolerance: self.tol, max_iterations: self.max_iter }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model by iterative proportional scaling.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        fit: FitArgs,
        /// `no-proximity` or `pair:r,s`.
        #[arg(long, default_value = "no-proximity")]
        model: String,
    },
    /// Markov chain goodness-of-fit test of the no-proximity model.
    Gof {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Steps before the first retained sample; defaults to one thinning interval.
        #[arg(long = "burn-in")]
        burn_in: Option<u64>,
        /// Steps between retained samples.
        #[arg(long = "thin", default_value_t = 30_000, value_parser = clap::value_parser!(u64).range(1..))]
        thin: u64,
        /// Retained samples per chain.
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        #[arg(long, value_enum, default_value_t = TargetArg::Uniform)]
        target: TargetArg,
        /// Independent chains, seeded seed, seed+1, ...
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        chains: u64,
        /// Include every retained statistic in the report.
        #[arg(long = "keep-stream")]
        keep_stream: bool,
        /// Also enumerate the fiber and report the exact p-value.
        #[arg(long)]
        exact: bool,
        /// Largest fiber the exact computation may enumerate.
        #[arg(long, default_value_t = 1_000_000)]
        cap: usize,
    },
    /// Test every single-pair proximity model against the no-proximity model.
    Scan {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        fit: FitArgs,
        /// Bonferroni multiplier; defaults to the number of pairs.
        #[arg(long)]
        tests: Option<usize>,
        /// Report only this pair, given as `r,s`.
        #[arg(long)]
        pair: Option<String>,
    },
    /// Order-of-magnitude estimates of fiber sizes.
    Estimate {
        /// Table whose no-proximity fit defines the ellipsoid.
        input: Option<PathBuf>,
        #[arg(long)]
        matrix: bool,
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        fit: FitArgs,
        /// Subtable counts, comma separated (decimal integers).
        #[arg(long, value_delimiter = ',')]
        counts: Vec<String>,
        /// Expected counts in matrix layout, used instead of the fit.
        #[arg(long)]
        expected: Option<PathBuf>,
        /// Squared radius; defaults to the observed chi-square.
        #[arg(long)]
        r2: Option<f64>,
        /// Dimension for the lattice-point term; defaults to the number of cells.
        #[arg(long)]
        dim: Option<usize>,
        /// Number of boundary-crossing moves.
        #[arg(long)]
        moves: Option<u64>,
        /// Number of those moves applied.
        #[arg(long)]
        applied: Option<u64>,
        /// log10 of a conservative fiber size used in place of the lower bound.
        #[arg(long)]
        floor: Option<f64>,
        /// log10 of the count inside the ellipsoid; defaults to the computed volume.
        #[arg(long)]
        upper: Option<f64>,
    },
    /// Reduce a table to the unique normal form of its fiber.
    NormalForm {
        #[command(flatten)]
        input: InputArgs,
    },
}

/// A failed invocation: exit code plus a machine-readable message.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub exit_code: i32,
    pub kind: String,
    pub message: String,
}

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MODEL: i32 = 3;
pub const EXIT_CAP: i32 = 4;

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { exit_code: EXIT_USAGE, kind: "usage".into(), message: message.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&json!({ "error": self })).expect("error block serializes")
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (exit_code, kind) = match &e {
            Error::Parse { .. } => (EXIT_USAGE, "parse"),
            Error::Io(_) => (EXIT_USAGE, "io"),
            Error::InvalidPair { .. }
            | Error::TooSmall { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvalidConfig(_) => (EXIT_USAGE, "usage"),
            Error::FiberTooLarge { .. } => (EXIT_CAP, "cap_exceeded"),
            Error::NegativeCell { .. }
            | Error::ZeroMargin { .. }
            | Error::DidNotConverge { .. }
            | Error::ZeroExpected { .. }
            | Error::ZeroNull { .. } => (EXIT_MODEL, "model_boundary"),
        };
        CliError { exit_code, kind: kind.into(), message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell<T> {
    pub a: usize,
    pub b: usize,
    pub value: T,
}

fn cells<T: Copy + Default>(t: &TriangularTable<T>) -> Vec<Cell<T>> {
    t.iter().map(|(p, value)| Cell { a: p.j(), b: p.k(), value }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub format: &'static str,
    pub n: usize,
    pub total: u64,
    pub margins: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitBlock {
    pub model: String,
    pub converged: bool,
    pub iterations: usize,
    pub max_violation: f64,
    pub loglik: f64,
    /// Pearson chi-square of the data against the fit.
    pub chi_square: f64,
    pub theta: Vec<f64>,
    pub mu: Option<f64>,
    pub fitted_margins: Vec<f64>,
    pub fitted: Vec<Cell<f64>>,
    /// Observed minus fitted.
    pub deviations: Vec<Cell<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSummary {
    pub seed: u64,
    pub p_value: f64,
    pub exceed_count: usize,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofBlock {
    pub observed_chi_square: f64,
    pub target: Target,
    pub p_value: f64,
    pub exceed_count: usize,
    pub samples: usize,
    pub sampled_min: f64,
    pub sampled_mean: f64,
    pub sampled_max: f64,
    pub steps_total: u64,
    pub acceptance_rate: f64,
    pub chains: Vec<ChainSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stream: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanBlock {
    pub tests: usize,
    pub null_chi_square: f64,
    pub rows: Vec<PairScanRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedEstimate {
    pub name: &'static str,
    pub log10_value: f64,
    pub kind: MagnitudeKind,
    pub mantissa: f64,
    pub exponent: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalFormBlock {
    pub steps: u64,
    pub already_normal: bool,
    pub table: Vec<Cell<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gof: Option<GofBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<Vec<NamedEstimate>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal_form: Option<NormalFormBlock>,
    /// Human-readable rendering, present only with `--format tsv`.
    #[serde(skip)]
    pub tsv: Option<String>,
}

impl AnalysisReport {
    fn new(command: &'static str, config: Value) -> Self {
        AnalysisReport {
            tool: TOOL,
            version: VERSION,
            command,
            seed: None,
            config,
            input: None,
            fit: None,
            gof: None,
            scan: None,
            estimate: None,
            normal_form: None,
            tsv: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// The outcome of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name) and runs the command.
/// Nothing is written to the process streams; `--out` is honoured.
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Output { code: 0, stdout: e.render().to_string(), stderr: String::new() }
                }
                _ => failure(CliError::usage(e.render().to_string())),
            };
        }
    };
    match execute(&cli) {
        Ok(text) => match &cli.out {
            Some(path) => match std::fs::write(path, &text) {
                Ok(()) => Output { code: 0, stdout: String::new(), stderr: String::new() },
                Err(e) => failure(Error::from(e).into()),
            },
            None => Output { code: 0, stdout: text, stderr: String::new() },
        },
        Err(e) => failure(e),
    }
}

fn failure(e: CliError) -> Output {
    Output { code: e.exit_code, stdout: String::new(), stderr: e.to_json() + "\n" }
}

/// Runs the parsed command and renders the report in the requested format.
pub fn execute(cli: &Cli) -> CliResult<String> {
    let exec = match cli.threads {
        Some(1) => Execution::Sequential,
        Some(t) => {
            pairfiber::parallel::set_threads(t as usize)?;
            Execution::Auto
        }
        None => Execution::Auto,
    };
    let report = match &cli.command {
        Command::Fit { input, fit, model } => cmd_fit(cli, input, fit, model)?,
        Command::Gof { input, fit, seed, burn_in, thin, samples, target, chains, keep_stream, exact, cap } => {
            let cfg = ChainConfig {
                seed: *seed,
                burn_in: burn_in.unwrap_or(*thin),
                thinning: *thin,
                samples: *samples as usize,
                target: (*target).into(),
                keep_stream: *keep_stream,
            };
            cmd_gof(cli, input, fit, cfg, *chains as usize, exact.then_some(*cap), exec)?
        }
        Command::Scan { input, fit, tests, pair } => cmd_scan(cli, input, fit, *tests, pair.as_deref(), exec)?,
        Command::Estimate { .. } => cmd_estimate(cli)?,
        Command::NormalForm { input } => cmd_normal_form(input)?,
    };
    Ok(match cli.format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Tsv => report.tsv.clone().unwrap_or_default(),
    })
}

fn load(input: &InputArgs) -> CliResult<(PairTable, InputDigest)> {
    let format = if input.matrix { InputFormat::Matrix } else { InputFormat::LongCsv };
    let table = io::read_table(&input.input, format, input.n)?;
    let margins = table.margins();
    let digest = InputDigest {
        path: input.input.display().to_string(),
        format: if input.matrix { "matrix" } else { "long_csv" },
        n: table.n(),
        total: margins.total(),
        margins: margins.as_slice().to_vec(),
    };
    Ok((table, digest))
}

fn input_config(input: &InputArgs) -> Value {
    json!({ "input": input.input.display().to_string(), "matrix": input.matrix, "n": input.n })
}

fn fit_config(fit: &FitArgs) -> Value {
    json!({ "tol": fit.tol, "max_iter": fit.max_iter })
}

fn fit_block(data: &PairTable, model: &FittedModel) -> CliResult<FitBlock> {
    let mut margins = vec![0.0; data.n()];
    for (p, v) in model.fitted.iter() {
        margins[p.j() - 1] += v;
        margins[p.k() - 1] += v;
    }
    Ok(FitBlock {
        model: model.spec.to_string(),
        converged: model.converged,
        iterations: model.iterations,
        max_violation: model.max_violation,
        loglik: model.loglik,
        chi_square: chi_square_stat(data, &model.fitted)?,
        theta: model.theta.clone(),
        mu: model.mu,
        fitted_margins: margins,
        fitted: cells(&model.fitted),
        deviations: cells(&deviation_table(data, &model.fitted)?),
    })
}

fn null_fit(data: &PairTable, fit: &FitArgs) -> CliResult<FittedModel> {
    let spec = ModelSpec::no_proximity(data.n())?;
    Ok(pairfiber::fit(&spec, data, &fit.config())?.ensure_converged()?)
}

fn cmd_fit(cli: &Cli, input: &InputArgs, fit: &FitArgs, model: &str) -> CliResult<AnalysisReport> {
    let (data, digest) = load(input)?;
    let spec = parse_model(model, data.n())?;
    let fitted = pairfiber::fit(&spec, &data, &fit.config())?.ensure_converged()?;
    let mut report = AnalysisReport::new(
        "fit",
        json!({ "data": input_config(input), "fit": fit_config(fit), "model": spec.to_string(), "digits": cli.digits }),
    );
    if cli.format == OutputFormat::Tsv {
        let dev = deviation_table(&data, &fitted.fitted)?;
        report.tsv = Some(format!(
            "{}\n{}",
            io::render_tsv(&fitted.fitted, cli.digits as usize),
            io::render_tsv(&dev, cli.digits as usize)
        ));
    }
    report.fit = Some(fit_block(&data, &fitted)?);
    report.input = Some(digest);
    Ok(report)
}

fn cmd_gof(
    cli: &Cli,
    input: &InputArgs,
    fit: &FitArgs,
    cfg: ChainConfig,
    chains: usize,
    exact_cap: Option<usize>,
    exec: Execution,
) -> CliResult<AnalysisReport> {
    cfg.validate()?;
    let (data, digest) = load(input)?;
    let null = null_fit(&data, fit)?;
    let basis = generate_basis(data.n())?;
    let fhat = &null.fitted;
    let stat = |t: &PairTable| chi_square_stat(t, fhat).expect("fitted cells are positive");
    let pooled = run_chains(&data, &basis, &cfg, chains, exec, stat)?;
    let exact_p_value = match exact_cap {
        Some(cap) => Some(enumerate::exact_p_value_for(&data.margins(), &data, fhat, cap, cfg.target)?),
        None => None,
    };
    let p = &pooled.pooled;
    let block = GofBlock {
        observed_chi_square: p.observed_stat,
        target: cfg.target,
        p_value: p.p_value,
        exceed_count: p.exceed_count,
        samples: p.samples,
        sampled_min: p.min,
        sampled_mean: p.mean,
        sampled_max: p.max,
        steps_total: p.steps_total,
        acceptance_rate: p.acceptance_rate(),
        chains: pooled
            .chains
            .iter()
            .enumerate()
            .map(|(i, c)| ChainSummary {
                seed: cfg.seed.wrapping_add(i as u64),
                p_value: c.p_value,
                exceed_count: c.exceed_count,
                acceptance_rate: c.acceptance_rate(),
            })
            .collect(),
        exact_p_value,
        stream: p.stream.clone(),
    };
    let mut report = AnalysisReport::new(
        "gof",
        json!({
            "data": input_config(input),
            "fit": fit_config(fit),
            "chain": cfg,
            "chains": chains,
            "exact_cap": exact_cap,
        }),
    );
    report.seed = Some(cfg.seed);
    if cli.format == OutputFormat::Tsv {
        let d = cli.digits.max(6) as usize;
        let mut s = String::from("key\tvalue\n");
        for (k, v) in [
            ("observed_chi_square", io::format_significant(block.observed_chi_square, d)),
            ("p_value", io::format_significant(block.p_value, d)),
            ("exceed_count", block.exceed_count.to_string()),
            ("samples", block.samples.to_string()),
            ("sampled_mean", io::format_significant(block.sampled_mean, d)),
            ("acceptance_rate", io::format_significant(block.acceptance_rate, d)),
        ] {
            s.push_str(&format!("{k}\t{v}\n"));
        }
        report.tsv = Some(s);
    }
    report.fit = Some(fit_block(&data, &null)?);
    report.gof = Some(block);
    report.input = Some(digest);
    Ok(report)
}

fn cmd_scan(
    cli: &Cli,
    input: &InputArgs,
    fit: &FitArgs,
    tests: Option<usize>,
    pair: Option<&str>,
    exec: Execution,
) -> CliResult<AnalysisReport> {
    let (data, digest) = load(input)?;
    let only = match pair {
        Some(text) => {
            let (r, s) = model::parse_pair_text(text)?;
            Some(PairIndex::new(r, s, data.n())?)
        }
        None => None,
    };
    let null = null_fit(&data, fit)?;
    let cfg = ScanConfig { fit: fit.config(), tests, execution: exec };
    let mut rows = pair_scan(&data, &cfg)?;
    if let Some(p) = only {
        rows.retain(|r| r.pair == p);
    }
    let tests = tests.unwrap_or(pairs(data.n()).count());
    let mut report = AnalysisReport::new(
        "scan",
        json!({ "data": input_config(input), "fit": fit_config(fit), "tests": tests, "pair": only.map(|p| p.to_string()) }),
    );
    if cli.format == OutputFormat::Tsv {
        let d = cli.digits.max(3) as usize;
        let opt = |x: Option<f64>| x.map_or("NA".to_string(), |v| io::format_significant(v, d));
        let mut s = String::from("pair\tobserved\texpected\tstatistic\tdeviance\tpearson_cell\tp_raw\tp_adjusted\n");
        for r in &rows {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.pair,
                r.observed,
                io::format_significant(r.expected_null, d),
                opt(r.statistic),
                opt(r.deviance),
                io::format_significant(r.pearson_cell, d),
                opt(r.p_raw),
                opt(r.p_adjusted)
            ));
        }
        report.tsv = Some(s);
    }
    report.scan = Some(ScanBlock { tests, null_chi_square: chi_square_stat(&data, &null.fitted)?, rows });
    report.input = Some(digest);
    Ok(report)
}

fn named(name: &'static str, m: MagnitudeEstimate) -> NamedEstimate {
    let (mantissa, exponent) = m.scientific();
    NamedEstimate { name, log10_value: m.log10_value, kind: m.kind, mantissa, exponent }
}

fn cmd_estimate(cli: &Cli) -> CliResult<AnalysisReport> {
    let Command::Estimate { input, matrix, n, fit, counts, expected, r2, dim, moves, applied, floor, upper } =
        &cli.command
    else {
        unreachable!("dispatched on the estimate command")
    };
    let mut out = Vec::new();
    let mut digest = None;

    let mut lower = None;
    if !counts.is_empty() {
        let counts: Vec<Count> = counts.iter().map(|c| Count::Decimal(c.clone())).collect();
        let sub = subtable_lower_bound(&counts)?;
        lower = Some(sub.log10_value);
        out.push(named("subtable_lower_bound", sub));
    }
    match (moves, applied) {
        (Some(m), Some(k)) => {
            out.push(named("move_choices", log_binomial(*m, *k)?));
            if let Some(sub) = lower {
                let composed = composed_lower_bound(sub, *m, *k)?;
                lower = Some(composed.log10_value);
                out.push(named("composed_lower_bound", composed));
            }
        }
        (None, None) => {}
        _ => return Err(CliError::usage("--moves and --applied must be given together")),
    }

    let mut ellipsoid = None;
    let mut radius = *r2;
    let mut expected_cells: Option<RealPairTable> = match expected {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(Error::from)?;
            Some(io::parse_matrix::<f64>(&text)?.table)
        }
        None => None,
    };
    if let Some(path) = input {
        let args = InputArgs { input: path.clone(), matrix: *matrix, n: *n };
        let (data, d) = load(&args)?;
        let null = null_fit(&data, fit)?;
        if radius.is_none() {
            radius = Some(chi_square_stat(&data, &null.fitted)?);
        }
        expected_cells.get_or_insert(null.fitted);
        digest = Some(d);
    }
    if let Some(e) = &expected_cells {
        let r2 = radius.ok_or_else(|| CliError::usage("--r2 is required without an input table"))?;
        let v = ellipsoid_log_volume(e.cells(), r2)?;
        ellipsoid = Some(v.log10_value);
        out.push(named("ellipsoid_volume", v));
        out.push(named("lattice_correction", lattice_correction_magnitude(r2, dim.unwrap_or(e.cells().len()))?));
    } else if let (Some(r2), Some(d)) = (radius, dim) {
        out.push(named("lattice_correction", lattice_correction_magnitude(r2, *d)?));
    }

    if let Some(up) = upper.or(ellipsoid) {
        if let Some(lo) = floor.or(lower) {
            out.push(named("ratio", fiber_ratio_report(lo, up, None)?));
        }
    }
    if out.is_empty() {
        return Err(CliError::usage("nothing to estimate: give --counts, --moves/--applied, a table or --expected"));
    }
    let mut report = AnalysisReport::new(
        "estimate",
        json!({
            "input": input.as_ref().map(|p| p.display().to_string()),
            "matrix": matrix,
            "n": n,
            "fit": fit_config(fit),
            "counts": counts,
            "expected": expected.as_ref().map(|p| p.display().to_string()),
            "r2": radius,
            "dim": dim,
            "moves": moves,
            "applied": applied,
            "floor": floor,
            "upper": upper,
        }),
    );
    if cli.format == OutputFormat::Tsv {
        let mut s = String::from("name\tlog10\tscientific\n");
        for e in &out {
            s.push_str(&format!(
                "{}\t{:.4}\t{}e{}\n",
                e.name,
                e.log10_value,
                io::format_significant(e.mantissa, cli.digits as usize),
                e.exponent
            ));
        }
        report.tsv = Some(s);
    }
    report.estimate = Some(out);
    report.input = digest;
    Ok(report)
}

fn cmd_normal_form(input: &InputArgs) -> CliResult<AnalysisReport> {
    let (data, digest) = load(input)?;
    let nf = normal_form(&data);
    let mut report = AnalysisReport::new("normal-form", json!({ "data": input_config(input) }));
    report.tsv = Some(io::render_count_tsv(&nf.table));
    report.normal_form = Some(NormalFormBlock {
        steps: nf.steps,
        already_normal: nf.steps == 0,
        table: cells(&nf.table),
    });
    report.input = Some(digest);
    Ok(report)
}
