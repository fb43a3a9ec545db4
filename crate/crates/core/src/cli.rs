//! The `phardy` command-line front end.
//!
//! Every subcommand writes one table (CSV) or one JSON object to stdout or
//! `--out`. JSON output echoes the full configuration under `config`.
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage
//! errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Error;
use crate::numerics::ExponentPair;
use crate::proof_machinery::{run_lemma_suite, Grid, LemmaId, LemmaSuite, DEFAULT_BITS};
use crate::series::{correction_conjecture_probe, expand_correction, expand_w_integer_p, write_coefficient_csv};
use crate::verify::{
    check_supersolution, minimize_rayleigh, run_hardy_batch, Distribution, HardyBatch, RayleighOptions,
    RAYLEIGH_TOLERANCE,
};
use crate::weights::{compare_weights, WeightKind};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug, Serialize)]
#[command(name = "phardy", version, about = "Improved discrete p-Hardy weights")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Decimal digits for high-precision values.
    #[arg(long, global = true, default_value_t = 30)]
    pub digits: u64,
    /// Master seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Tabulate the improved and classical weights over a range of n.
    Weight(WeightArgs),
    /// Exact series coefficients of the weight (integer p) or of the correction a_p.
    Series(SeriesArgs),
    /// The inequality on seeded random test functions, or the supersolution identity.
    Verify(VerifyArgs),
    /// Grid checks of the lemmas behind the domination argument.
    Lemmas(LemmasArgs),
    /// Minimize the Rayleigh quotient over functions supported in {1, ..., N}.
    Rayleigh(RayleighArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct WeightArgs {
    /// Exponent p > 1, as "a/b" or a decimal.
    #[arg(long)]
    pub p: String,
    /// Range "a..b" (inclusive).
    #[arg(long, default_value = "1..10")]
    pub n: String,
}

#[derive(Args, Debug, Serialize)]
pub struct SeriesArgs {
    #[arg(long)]
    pub p: String,
    /// Highest coefficient index.
    #[arg(long, default_value_t = 10)]
    pub order: usize,
    /// Expand a_p(n) = w_p(n)/w_p^H(n) - 1 instead (any p > 1).
    #[arg(long)]
    pub correction: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    /// Exponents, comma separated.
    #[arg(long, default_value = "2")]
    pub p: String,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Support bound N.
    #[arg(long, default_value_t = 50)]
    pub support: usize,
    /// Draw N uniformly from 1..=support in each trial.
    #[arg(long)]
    pub random_support: bool,
    /// Distributions, comma separated: uniform, gaussian, sparse.
    #[arg(long, default_value = "uniform,gaussian,sparse")]
    pub distribution: String,
    /// Density of the sparse distribution.
    #[arg(long, default_value_t = 0.1)]
    pub density: f64,
    /// Check the ground-state identity instead of random trials.
    #[arg(long)]
    pub supersolution: bool,
    /// Range "a..b" for the identity check.
    #[arg(long, default_value = "1..1000")]
    pub n: String,
}

#[derive(Args, Debug, Serialize)]
pub struct LemmasArgs {
    /// Run only these checks (repeatable).
    #[arg(long, value_enum)]
    pub only: Vec<LemmaId>,
    /// A single exponent; overrides --p-grid.
    #[arg(long)]
    pub p: Option<String>,
    /// p-grid as "start:stop:step", a comma list, or a single value.
    #[arg(long)]
    pub p_grid: Option<String>,
    /// x-grid in (0, 1/2].
    #[arg(long)]
    pub x_grid: Option<String>,
    /// Working precision in bits.
    #[arg(long, default_value_t = DEFAULT_BITS)]
    pub bits: u32,
    /// Truncation order of the g series.
    #[arg(long, default_value_t = crate::series::DEFAULT_ORDER)]
    pub order: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct RayleighArgs {
    #[arg(long, default_value = "2")]
    pub p: String,
    #[arg(long, value_enum, default_value_t = WeightKind::Improved)]
    pub weight: WeightKind,
    /// Support bound N >= 2.
    #[arg(long = "N", default_value_t = 100)]
    #[serde(rename = "N")]
    pub support: usize,
    /// Write the minimizer as CSV `n,phi_n`.
    #[arg(long)]
    pub phi_out: Option<PathBuf>,
    #[arg(long, default_value_t = 20_000)]
    pub max_iters: usize,
    /// Relative tolerance; the run passes when the value is at least 1 - tol.
    #[arg(long, default_value_t = RAYLEIGH_TOLERANCE)]
    pub tol: f64,
    /// Extra seeded starts besides the ground state.
    #[arg(long, default_value_t = 2)]
    pub restarts: usize,
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvariantViolation(_) => Failure::Check(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("i/o error: {e}"))
    }
}

/// Rendered output and whether every check passed.
struct Outcome {
    body: Vec<u8>,
    pass: bool,
}

/// Runs the CLI on `args` (including the program name) against the process streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// As [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(rendered.as_bytes()) } else { stdout.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(outcome) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &outcome.body),
                None => stdout.write_all(&outcome.body).and_then(|_| stdout.flush()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: cannot write output: {e}");
                return EXIT_USAGE;
            }
            if outcome.pass {
                EXIT_PASS
            } else {
                let _ = writeln!(stderr, "check failed");
                EXIT_CHECK_FAILED
            }
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Check(msg)) => {
            let _ = writeln!(stderr, "check failed: {msg}");
            EXIT_CHECK_FAILED
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Weight(a) => cmd_weight(cli, a),
        Command::Series(a) => cmd_series(cli, a),
        Command::Verify(a) => cmd_verify(cli, a),
        Command::Lemmas(a) => cmd_lemmas(cli, a),
        Command::Rayleigh(a) => cmd_rayleigh(cli, a),
    }
}

fn config(cli: &Cli) -> Value {
    serde_json::to_value(cli).expect("configuration serializes")
}

fn json_body(cli: &Cli, pass: bool, mut fields: Value) -> Vec<u8> {
    let obj = fields.as_object_mut().expect("object");
    obj.insert("pass".into(), json!(pass));
    obj.insert("config".into(), config(cli));
    let mut body = serde_json::to_vec_pretty(&fields).expect("report serializes");
    body.push(b'\n');
    body
}

fn parse_pair(s: &str) -> Result<ExponentPair, Failure> {
    ExponentPair::parse(s.trim()).map_err(|e| Failure::Usage(format!("--p {s:?}: {e}")))
}

fn parse_range(s: &str) -> Result<(u64, u64), Failure> {
    let bad = || Failure::Usage(format!("range {s:?} must look like a..b with 1 <= a <= b"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if a < 1 || a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn cmd_weight(cli: &Cli, a: &WeightArgs) -> Result<Outcome, Failure> {
    let pair = parse_pair(&a.p)?;
    let (lo, hi) = parse_range(&a.n)?;
    let table = compare_weights(&pair, lo, hi, cli.digits)?;
    let pass = table.all_verified();
    let body = match cli.format {
        Format::Csv => csv_bytes(|b| table.write_csv(b))?,
        Format::Json => json_body(
            cli,
            pass,
            json!({ "p": pair.to_string(), "precision_bits": table.precision_bits, "rows": table.to_json() }),
        ),
    };
    Ok(Outcome { body, pass })
}

fn cmd_series(cli: &Cli, a: &SeriesArgs) -> Result<Outcome, Failure> {
    let pair = parse_pair(&a.p)?;
    if a.correction {
        let s = expand_correction(&pair, a.order, DEFAULT_BITS)?;
        let probe = correction_conjecture_probe(&pair, a.order, DEFAULT_BITS)?;
        // Parity is checked inside the expansion; positivity beyond integer p is only reported.
        let pass = true;
        let coeffs = s.to_strings();
        let body = match cli.format {
            Format::Csv => csv_bytes(|b| write_coefficient_csv(b, "a_k", coeffs.iter().cloned()))?,
            Format::Json => json_body(cli, pass, json!({ "p": pair.to_string(), "coefficients": coeffs, "probe": probe })),
        };
        return Ok(Outcome { body, pass });
    }
    let p = pair
        .as_integer()
        .ok_or_else(|| Failure::Usage(format!("the c_k table needs an integer p (got {}); try --correction", pair)))?;
    let e = expand_w_integer_p(p, a.order)?;
    let pass = e.c.iter().enumerate().all(|(k, c)| if k % 2 == 1 { *c == 0 } else { *c > 0 });
    let body = match cli.format {
        Format::Csv => csv_bytes(|b| e.write_csv(b))?,
        Format::Json => {
            let mut v = e.to_json();
            v["p"] = json!(p);
            json_body(cli, pass, v)
        }
    };
    Ok(Outcome { body, pass })
}

fn parse_distributions(s: &str, density: f64) -> Result<Vec<Distribution>, Failure> {
    s.split(',')
        .map(|d| match d.trim() {
            "uniform" => Ok(Distribution::Uniform),
            "gaussian" => Ok(Distribution::Gaussian),
            "sparse" => Ok(Distribution::Sparse { density }),
            other => Err(Failure::Usage(format!("unknown distribution {other:?}"))),
        })
        .collect()
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs) -> Result<Outcome, Failure> {
    let pairs = a.p.split(',').map(parse_pair).collect::<Result<Vec<_>, _>>()?;
    if a.supersolution {
        let (lo, hi) = parse_range(&a.n)?;
        let reports = pairs
            .iter()
            .map(|pair| check_supersolution(pair, lo, hi, cli.digits))
            .collect::<crate::Result<Vec<_>>>()?;
        let pass = reports.iter().all(|r| r.pass);
        let body = match cli.format {
            Format::Csv => csv_bytes(|b| {
                let mut wtr = csv::Writer::from_writer(b);
                wtr.write_record(["p", "n", "residual"])?;
                for r in &reports {
                    for (n, res) in &r.residuals {
                        wtr.write_record([r.p.clone(), n.to_string(), format!("{res:e}")])?;
                    }
                }
                wtr.flush()
            })?,
            Format::Json => json_body(cli, pass, json!({ "supersolution": reports })),
        };
        return Ok(Outcome { body, pass });
    }
    if !(0.0..=1.0).contains(&a.density) {
        return Err(Failure::Usage(format!("--density must lie in [0, 1] (got {})", a.density)));
    }
    let batch = HardyBatch {
        pairs,
        distributions: parse_distributions(&a.distribution, a.density)?,
        trials: a.trials,
        support: a.support,
        random_support: a.random_support,
        seed: cli.seed,
    };
    let report = run_hardy_batch(&batch)?;
    let pass = report.summary.pass;
    let body = match cli.format {
        Format::Csv => csv_bytes(|b| report.write_csv(b))?,
        Format::Json => json_body(cli, pass, json!({ "summary": report.summary, "records": report.records })),
    };
    Ok(Outcome { body, pass })
}

fn cmd_lemmas(cli: &Cli, a: &LemmasArgs) -> Result<Outcome, Failure> {
    let mut suite = LemmaSuite { bits: a.bits, order: a.order, only: a.only.clone(), ..LemmaSuite::default() };
    if let Some(p) = &a.p {
        let pair = parse_pair(p)?;
        let grid = Grid::single(pair.p_rational().expect("parsed exponents are rational").clone());
        suite.p_grid = grid.clone();
        suite.n1_grid = grid;
    } else if let Some(spec) = &a.p_grid {
        let grid = Grid::parse(spec)?;
        suite.p_grid = grid.clone();
        suite.n1_grid = grid;
    }
    if let Some(spec) = &a.x_grid {
        suite.x_grid = Grid::parse(spec)?;
    }
    let reports = run_lemma_suite(&suite)?;
    let pass = reports.iter().all(|r| r.pass);
    let body = match cli.format {
        Format::Csv => csv_bytes(|b| {
            let mut wtr = csv::Writer::from_writer(b);
            wtr.write_record(["name", "pass", "worst_margin", "tolerance", "failure_count", "points", "p_grid"])?;
            for r in &reports {
                wtr.write_record([
                    r.name.clone(),
                    r.pass.to_string(),
                    format!("{:e}", r.worst_margin),
                    format!("{:e}", r.tolerance),
                    r.failure_count.to_string(),
                    r.grid.points.to_string(),
                    r.grid.p.clone(),
                ])?;
            }
            wtr.flush()
        })?,
        Format::Json => json_body(cli, pass, json!({ "reports": reports })),
    };
    Ok(Outcome { body, pass })
}

fn cmd_rayleigh(cli: &Cli, a: &RayleighArgs) -> Result<Outcome, Failure> {
    let pair = parse_pair(&a.p)?;
    if a.support < 2 {
        return Err(Failure::Usage(format!("--N must be at least 2 (got {})", a.support)));
    }
    if !(a.tol > 0.0 && a.tol < 1.0) {
        return Err(Failure::Usage(format!("--tol must lie in (0, 1) (got {})", a.tol)));
    }
    let opts = RayleighOptions { max_iters: a.max_iters, tol: a.tol, seed: cli.seed, restarts: a.restarts };
    let r = minimize_rayleigh(&pair, a.weight, a.support, &opts)?;
    if let Some(path) = &a.phi_out {
        let file = std::fs::File::create(path)?;
        r.minimizer.write_csv(std::io::BufWriter::new(file))?;
    }
    let pass = r.value >= 1.0 - a.tol;
    let body = match cli.format {
        Format::Csv => csv_bytes(|b| {
            let mut wtr = csv::Writer::from_writer(b);
            wtr.write_record(["p", "weight", "N", "value", "iterations", "converged", "gradient_norm"])?;
            wtr.write_record([
                pair.to_string(),
                format!("{:?}", a.weight).to_lowercase(),
                a.support.to_string(),
                format!("{:.12}", r.value),
                r.iterations.to_string(),
                r.converged.to_string(),
                format!("{:e}", r.gradient_norm),
            ])?;
            wtr.flush()
        })?,
        Format::Json => json_body(cli, pass, json!({ "p": pair.to_string(), "result": r })),
    };
    Ok(Outcome { body, pass })
}
