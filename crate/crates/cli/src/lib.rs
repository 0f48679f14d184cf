//! Command-line front end: reads weight files and parameters, runs the
//! computations, and emits JSON reports or CSV grids.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Parser, ValueEnum};
use dyadic_bellman::verifier::{measured_params, midpoint_concavity, VerificationReport};
use dyadic_bellman::{
    b_max, corollary_threshold, hessian_scan, induction_chain, local_search, make_params, profile,
    r_minus, segment_containment, verify_corollary, verify_theorem, weight_io, BellmanParams,
    CorollaryVariant, DomainPoint, DyadicWeight, Error,
};
use serde::Serialize;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const CSV_HEADER: &str = "x1,x2,r_minus,b_max";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subcommand {
    /// RH, A_q and doubling characteristics of a weight
    Analyze,
    /// Bound value and derived constants at one point
    Bound,
    /// Bound, corollary and induction chain on a weight
    Verify,
    /// Bound over a grid of the enlarged domain
    Scan,
    /// Hessian, midpoint and segment checks
    Concavity,
    /// Hill climb for weights close to the bound
    Search,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Analyze => "analyze",
            Subcommand::Bound => "bound",
            Subcommand::Verify => "verify",
            Subcommand::Scan => "scan",
            Subcommand::Concavity => "concavity",
            Subcommand::Search => "search",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "dyadic-bellman",
    version,
    about = "Dyadic Reverse Hölder weights and an explicit Bellman bound"
)]
#[command(allow_negative_numbers = true)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub subcommand: Subcommand,

    /// Weight file: one positive number per line, or {"depth", "leaves"} JSON
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Write the result here as well (written atomically)
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// json everywhere; csv for scan (its default)
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    #[arg(long)]
    pub p: Option<f64>,

    /// Negative exponent in (1/s-, 0)
    #[arg(long)]
    pub q: Option<f64>,

    /// Muckenhoupt index
    #[arg(long = "q-muck")]
    pub q_muck: Option<f64>,

    #[arg(long)]
    pub delta: Option<f64>,

    /// Doubling constant
    #[arg(long = "bigQ")]
    pub big_q: Option<f64>,

    #[arg(long)]
    pub x1: Option<f64>,

    #[arg(long)]
    pub x2: Option<f64>,

    #[arg(long)]
    pub nx: Option<usize>,

    #[arg(long)]
    pub ny: Option<usize>,

    #[arg(long)]
    pub trials: Option<usize>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long)]
    pub depth: Option<u32>,

    #[arg(long)]
    pub iterations: Option<usize>,

    /// Fraction of the strip trimmed at each boundary in the Hessian scan
    #[arg(long = "region-margin")]
    pub region_margin: Option<f64>,

    #[arg(long = "step-scale")]
    pub step_scale: Option<f64>,

    /// Where search writes its best weight
    #[arg(long = "weight-output")]
    pub weight_output: Option<PathBuf>,
}

/// Result of one subcommand: the document to emit and whether every check passed.
struct Outcome {
    body: String,
    passed: bool,
}

impl Outcome {
    fn json(value: &impl Serialize, passed: bool) -> anyhow::Result<Self> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        Ok(Self { body, passed })
    }
}

/// Runs one subcommand; the primary output goes to `out` and a one-line
/// diagnostic to `err`. Returns the process exit code.
pub fn run(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = execute(config).and_then(|outcome| {
        if let Some(path) = &config.output {
            write_atomic(path, &outcome.body)
                .with_context(|| format!("--output: cannot write {}", path.display()))?;
        }
        let shown = match (&config.output, config.subcommand) {
            (Some(path), Subcommand::Scan) => {
                let rows = outcome.body.lines().count().saturating_sub(1);
                format!("{}\n", json!({ "output": path, "rows": rows }))
            }
            _ => outcome.body.clone(),
        };
        out.write_all(shown.as_bytes())?;
        Ok(outcome.passed)
    });
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILED,
        Err(e) => {
            let _ = writeln!(err, "error: {}", one_line(&e));
            EXIT_USAGE
        }
    }
}

fn one_line(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for (i, cause) in e.chain().enumerate() {
        if i > 0 {
            msg.push_str(": ");
        }
        let _ = write!(msg, "{cause}");
    }
    msg.replace('\n', " ")
}

fn execute(config: &RunConfig) -> anyhow::Result<Outcome> {
    let format = config.format.unwrap_or(match config.subcommand {
        Subcommand::Scan => Format::Csv,
        _ => Format::Json,
    });
    if format == Format::Csv && config.subcommand != Subcommand::Scan {
        bail!("--format: csv output is only available for scan");
    }
    match config.subcommand {
        Subcommand::Analyze => analyze(config),
        Subcommand::Bound => bound(config),
        Subcommand::Verify => verify(config),
        Subcommand::Scan => scan(config, format),
        Subcommand::Concavity => concavity(config),
        Subcommand::Search => search(config),
    }
}

fn require<T: Copy>(value: Option<T>, flag: &str, config: &RunConfig) -> anyhow::Result<T> {
    value.ok_or_else(|| anyhow!("{flag}: required for {}", config.subcommand.name()))
}

/// Tags a library error with the flag it comes from.
fn flagged(e: Error) -> anyhow::Error {
    let flag = match &e {
        Error::Parameter { name, .. } => match *name {
            "q_muck" => "--q-muck".to_string(),
            "step_scale" => "--step-scale".to_string(),
            other => format!("--{other}"),
        },
        Error::QOutOfRange { .. } => "--q".into(),
        Error::BelowCorollaryThreshold { .. } => "--q-muck".into(),
        Error::OutsideDomain { .. } => "--x1/--x2".into(),
        Error::DegenerateGrid(_) => "--nx/--ny/--region-margin".into(),
        Error::EmptyWeight
        | Error::NotPowerOfTwo(_)
        | Error::NonFiniteLeaf { .. }
        | Error::NonPositiveLeaf { .. }
        | Error::DepthMismatch { .. }
        | Error::MalformedWeightFile(_) => "--input".into(),
        Error::NodeOutsideDomain { .. } => "--delta/--bigQ".into(),
        _ => "computation".into(),
    };
    anyhow!("{flag}: {e}")
}

fn load_weight(config: &RunConfig) -> anyhow::Result<DyadicWeight> {
    let path = config
        .input
        .as_deref()
        .ok_or_else(|| anyhow!("--input: required for {}", config.subcommand.name()))?;
    let text =
        std::fs::read_to_string(path).map_err(|e| anyhow!("--input: {}: {e}", path.display()))?;
    weight_io::parse(&text).map_err(flagged)
}

fn params(config: &RunConfig) -> anyhow::Result<BellmanParams> {
    let p = require(config.p, "--p", config)?;
    let delta = require(config.delta, "--delta", config)?;
    let big_q = require(config.big_q, "--bigQ", config)?;
    make_params(p, delta, big_q).map_err(flagged)
}

fn analyze(config: &RunConfig) -> anyhow::Result<Outcome> {
    let w = load_weight(config)?;
    let p = require(config.p, "--p", config)?;
    let pr = profile(&w, p, config.q_muck.unwrap_or(2.0)).map_err(flagged)?;
    Outcome::json(&pr, true)
}

#[derive(Serialize)]
struct BoundOutput {
    p: f64,
    q: f64,
    delta: f64,
    #[serde(rename = "bigQ")]
    big_q: f64,
    x1: f64,
    x2: f64,
    #[serde(rename = "H")]
    h: f64,
    eps: f64,
    s_minus: f64,
    s_plus: f64,
    r_minus: f64,
    b_max_form1: f64,
    b_max_form2: f64,
}

fn bound(config: &RunConfig) -> anyhow::Result<Outcome> {
    let params = params(config)?;
    let q = require(config.q, "--q", config)?;
    let x1 = require(config.x1, "--x1", config)?;
    let x2 = require(config.x2, "--x2", config)?;
    let point = DomainPoint::new(x1, x2).map_err(flagged)?;
    let value = b_max(&point, q, &params).map_err(flagged)?;
    Outcome::json(
        &BoundOutput {
            p: params.p,
            q,
            delta: params.delta,
            big_q: params.big_q,
            x1,
            x2,
            h: params.h,
            eps: params.eps,
            s_minus: params.s_minus,
            s_plus: params.s_plus,
            r_minus: value.r_minus,
            b_max_form1: value.value,
            b_max_form2: value.form2,
        },
        true,
    )
}

#[derive(Serialize)]
struct Reports {
    passed: bool,
    reports: Vec<VerificationReport>,
    notes: Vec<String>,
}

impl Reports {
    fn new(reports: Vec<VerificationReport>, notes: Vec<String>) -> Self {
        Self {
            passed: reports.iter().all(|r| r.passed),
            reports,
            notes,
        }
    }
}

fn verify(config: &RunConfig) -> anyhow::Result<Outcome> {
    let w = load_weight(config)?;
    let p = require(config.p, "--p", config)?;
    let q = require(config.q, "--q", config)?;
    let mut reports = vec![verify_theorem(&w, p, q, config.delta, config.big_q).map_err(flagged)?];
    let mut notes = Vec::new();
    let measured = measured_params(&w, p, None, None).map_err(flagged)?;
    for variant in [CorollaryVariant::W, CorollaryVariant::WPowP] {
        let threshold = corollary_threshold(&measured, variant);
        let q_muck = match config.q_muck {
            Some(v) if v <= threshold => {
                notes.push(format!("{variant:?} corollary skipped: --q-muck {v} is not above its threshold {threshold}"));
                continue;
            }
            Some(v) => v,
            None => threshold + 1.0,
        };
        reports.push(verify_corollary(&w, p, q_muck, variant).map_err(flagged)?);
    }
    if reports[0].params.contains_key("nodes_outside_domain") {
        notes.push(
            "induction chain skipped: the weight leaves the enlarged domain for these parameters"
                .into(),
        );
    } else {
        let chain_params = measured_params(&w, p, config.delta, config.big_q).map_err(flagged)?;
        reports.push(induction_chain(&w, p, q, &chain_params).map_err(flagged)?);
    }
    let doc = Reports::new(reports, notes);
    let passed = doc.passed;
    Outcome::json(&doc, passed)
}

/// Grid over the enlarged domain: `x1` in `[0.5, 2]` and
/// `x2 = x1^p (1 + tau (eps^p - 1))` for `tau` in `[0, 1]`.
pub fn scan_points(params: &BellmanParams, nx: usize, ny: usize) -> Vec<DomainPoint> {
    let at = |k: usize, n: usize| {
        if n == 1 {
            0.0
        } else {
            k as f64 / (n - 1) as f64
        }
    };
    let mut points = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        let x1 = 0.5 + 1.5 * at(i, nx);
        for j in 0..ny {
            let tau = at(j, ny);
            let x2 = x1.powf(params.p) * (1.0 + tau * (params.eps.powf(params.p) - 1.0));
            points.push(DomainPoint { x1, x2 });
        }
    }
    points
}

fn scan(config: &RunConfig, format: Format) -> anyhow::Result<Outcome> {
    let params = params(config)?;
    let q = require(config.q, "--q", config)?;
    params.check_q(q).map_err(flagged)?;
    let nx = config.nx.unwrap_or(64);
    let ny = config.ny.unwrap_or(64);
    if nx == 0 || ny == 0 {
        bail!("--nx/--ny: grid dimensions must be positive");
    }
    let rows = scan_points(&params, nx, ny)
        .into_iter()
        .map(|pt| {
            let r = r_minus(&pt, &params).map_err(flagged)?;
            let b = b_max(&pt, q, &params).map_err(flagged)?.value;
            Ok([pt.x1, pt.x2, r, b])
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let body = match format {
        Format::Csv => {
            let mut s = String::from(CSV_HEADER);
            s.push('\n');
            for row in &rows {
                let _ = writeln!(
                    s,
                    "{:.16e},{:.16e},{:.16e},{:.16e}",
                    row[0], row[1], row[2], row[3]
                );
            }
            s
        }
        Format::Json => {
            let objects: Vec<Value> = rows
                .iter()
                .map(|r| json!({ "x1": r[0], "x2": r[1], "r_minus": r[2], "b_max": r[3] }))
                .collect();
            return Outcome::json(&objects, true);
        }
    };
    Ok(Outcome { body, passed: true })
}

fn concavity(config: &RunConfig) -> anyhow::Result<Outcome> {
    let params = params(config)?;
    let q = config.q.unwrap_or_else(|| params.midpoint_q());
    params.check_q(q).map_err(flagged)?;
    let grid = (config.nx.unwrap_or(64), config.ny.unwrap_or(64));
    let trials = config.trials.unwrap_or(10_000);
    if trials == 0 {
        bail!("--trials: must be at least 1");
    }
    let reports = vec![
        hessian_scan(&params, q, grid, config.region_margin.unwrap_or(0.02)).map_err(flagged)?,
        midpoint_concavity(&params, q, trials, config.seed).map_err(flagged)?,
        segment_containment(&params, trials, config.seed).map_err(flagged)?,
    ];
    let doc = Reports::new(reports, Vec::new());
    let passed = doc.passed;
    Outcome::json(&doc, passed)
}

fn search(config: &RunConfig) -> anyhow::Result<Outcome> {
    let search = dyadic_bellman::SearchConfig {
        depth: config.depth.unwrap_or(4),
        p: require(config.p, "--p", config)?,
        q: require(config.q, "--q", config)?,
        delta_cap: require(config.delta, "--delta", config)?,
        q_cap: require(config.big_q, "--bigQ", config)?,
        iterations: config.iterations.unwrap_or(1000),
        step_scale: config.step_scale.unwrap_or(0.5),
        seed: config.seed,
        q_muck: config.q_muck.unwrap_or(2.0),
    };
    let result = match local_search(&search) {
        Ok(r) => r,
        Err(Error::BoundExceeded { ratio }) => {
            return Outcome::json(
                &json!({ "passed": false, "best_ratio": ratio, "config": search }),
                false,
            )
        }
        Err(e) => return Err(flagged(e)),
    };
    if let Some(path) = &config.weight_output {
        write_atomic(path, &weight_io::to_json(&result.best_weight))
            .with_context(|| format!("--weight-output: cannot write {}", path.display()))?;
    }
    Outcome::json(&result, true)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)?;
    Ok(())
}
