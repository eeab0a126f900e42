//! Command-line front end for the `synthnull` toolkit.
//!
//! Every command reads its inputs, dispatches to the library, writes a JSON
//! report (`<command>_report.json`) plus a human-readable summary into the
//! output directory, and maps the verdict to an exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | pass (or vacuous: nothing to test) |
//! | 1 | fail |
//! | 2 | inapplicable: a hypothesis gate rejected the input |
//! | 3 | malformed configuration or input |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use synthnull::corpus::{hawking_instance, localization_instance, penrose_instance};
use synthnull::geometry::{
    hawking_check, minkowski_content, penrose_check, theta_estimate, CrossSection, CONTENT_TOL,
    DEFAULT_EPS_GRID, PENROSE_TOL,
};
use synthnull::io::{
    entropy_csv, hypersurface_to_string, plan_csv, read_hypersurface, read_hypersurface_unchecked,
    read_measure, read_sequence, trace_csv, write_measure, write_sequence, write_text,
};
use synthnull::measures::{disintegration_check, entropy_power};
use synthnull::nec::{
    localization_crosscheck, nce_search_with, nce_test, SearchConfig, CONCAVITY_TOL, DEFAULT_GRID,
};
use synthnull::smooth::{
    cone_hypersurface_with, integrate_geodesic, sphere_boundary_hypersurface_with, Congruence,
    PowerWarp, WarpedProductSpec,
};
use synthnull::stability::{
    adversarial_sigma_sequence, kink_sequence, limit_nce, perturbed_cone_sequence,
    ApproximationSequence,
};
use synthnull::transport::monotone_plan;
use synthnull::{Error, GaugeInterval, Ray, RayDensity, RayId, SyntheticNullHypersurface, Verdict};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INAPPLICABLE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

/// Largest conserved-quantity drift accepted by `warped`.
pub const WARPED_DRIFT_TOL: f64 = 1e-8;
/// Largest relative change of the parameter bound under step halving.
pub const WARPED_STEP_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    StructuredText,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "synthnull",
    version,
    about = "Checks for synthetic null hypersurfaces"
)]
pub struct RunConfig {
    /// Directory receiving reports and plot data.
    #[arg(long, global = true, env = "SYNTHNULL_OUT", default_value = ".")]
    pub out: PathBuf,
    /// Omit the wall-clock timestamp so reports are byte-reproducible.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Layout of the human-readable summary file.
    #[arg(long, global = true, value_enum, default_value_t = Format::StructuredText)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an instance and run the disintegration check.
    Validate(InputArgs),
    /// Entropy-power concavity: a given pair, or a randomised search.
    Nce(NceArgs),
    /// Cross-check per-ray CD(0, N-1) against the concavity search.
    Localize(SearchArgs),
    /// Area monotonicity between two ordered sections.
    Hawking(HawkingArgs),
    /// Ray-length bound for a future converging section at the ray starts.
    Penrose(PenroseArgs),
    /// Null geodesic in the warped product (-inf, 0) x_f S^1.
    Warped(WarpedArgs),
    /// Limit checks on an approximating sequence.
    Stability(StabilityArgs),
    /// Write generated instances.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Dimension parameter; defaults to the instance's dimension hint.
    #[arg(long = "N", visible_alias = "n")]
    pub n: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of intervals of the time grid.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct NceArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    /// Source measure; with `--mu1` the pair is tested instead of searched.
    #[arg(long, requires = "mu1")]
    pub mu0: Option<PathBuf>,
    #[arg(long, requires = "mu0")]
    pub mu1: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HawkingArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "N", visible_alias = "n")]
    pub n: Option<f64>,
    /// Earlier section: a gauge shared by all rays or a JSON map file.
    #[arg(long)]
    pub first: String,
    /// Later section, same syntax as `--first`.
    #[arg(long)]
    pub second: String,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EPS_GRID)]
    pub eps: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct PenroseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "N", visible_alias = "n")]
    pub n: Option<f64>,
    /// Convergence constant; estimated from the section when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EPS_GRID)]
    pub eps: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct WarpedArgs {
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub t0: f64,
    /// Warp `f(t) = scale (-t)^exponent`.
    #[arg(long, default_value_t = 0.5)]
    pub exponent: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub step: f64,
    #[arg(long, default_value_t = 5_000_000)]
    pub max_steps: usize,
    /// Full fiber turns the trace must exceed.
    #[arg(long, default_value_t = 20.0)]
    pub min_turns: f64,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long = "N", visible_alias = "n")]
    pub n: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Destination file (directory for `sequence`); defaults to the output
    /// directory.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub kind: GenerateKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CongruenceArg {
    Ingoing,
    Outgoing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFamily {
    Localization,
    Hawking,
    Penrose,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceKind {
    PerturbedCone,
    Adversarial,
    Kink,
}

#[derive(Debug, Subcommand)]
pub enum GenerateKind {
    /// Future light cone of the origin in n-dimensional Minkowski space.
    Cone {
        #[arg(long = "n", visible_alias = "N", default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        #[arg(long, default_value_t = 64)]
        rays: usize,
    },
    /// Null congruence orthogonal to a round sphere in 4-d Minkowski space.
    Sphere {
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        #[arg(long, value_enum, default_value_t = CongruenceArg::Ingoing)]
        congruence: CongruenceArg,
        #[arg(long, default_value_t = 64)]
        rays: usize,
    },
    /// One seeded random instance; `hawking` also writes its two sections.
    Corpus {
        #[arg(long, value_enum)]
        family: CorpusFamily,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// A flat ray plus a light ray carrying a convex bump.
    Bump {
        #[arg(long = "N", visible_alias = "n", default_value_t = 3.0)]
        n: f64,
        #[arg(long, default_value_t = 1e-3)]
        weight: f64,
    },
    /// Approximating sequence: manifest, limit and step files.
    Sequence {
        #[arg(long, value_enum)]
        kind: SequenceKind,
        #[arg(long, default_value_t = 6)]
        steps: usize,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        #[arg(long, default_value_t = 16)]
        rays: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Nce(_) => "nce",
            Command::Localize(_) => "localize",
            Command::Hawking(_) => "hawking",
            Command::Penrose(_) => "penrose",
            Command::Warped(_) => "warped",
            Command::Stability(_) => "stability",
            Command::Generate(_) => "generate",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Rejected configuration value.
    Config(String),
    Core(Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Result of one command before it is written out.
struct Outcome {
    verdict: Verdict,
    config: Value,
    details: Value,
    summary: Vec<(String, String)>,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a Value,
    verdict: Option<Verdict>,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    details: &'a Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp_unix: Option<u64>,
}

pub fn exit_code(verdict: Verdict) -> i32 {
    match verdict {
        Verdict::Pass | Verdict::Vacuous => EXIT_PASS,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inapplicable => EXIT_INAPPLICABLE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_PASS
            }
        }
    }
}

/// Runs one command, writes its report and summary and returns the exit
/// code.
pub fn run(config: &RunConfig) -> i32 {
    let name = config.command.name();
    match dispatch(config) {
        Ok(outcome) => {
            let code = exit_code(outcome.verdict);
            let written = write_outputs(config, name, &outcome, code, None);
            if let Err(e) = written {
                eprintln!("synthnull {name}: {e}");
                return EXIT_INPUT;
            }
            println!("synthnull {name}: {} (exit {code})", outcome.verdict);
            for (k, v) in &outcome.summary {
                println!("  {k}: {v}");
            }
            code
        }
        Err(CliError::Core(Error::Precondition(msg))) => {
            let outcome = Outcome {
                verdict: Verdict::Inapplicable,
                config: Value::Null,
                details: json!({ "reason": msg }),
                summary: vec![("reason".into(), msg.clone())],
            };
            let _ = write_outputs(config, name, &outcome, EXIT_INAPPLICABLE, None);
            println!("synthnull {name}: inapplicable (exit {EXIT_INAPPLICABLE})");
            println!("  reason: {msg}");
            EXIT_INAPPLICABLE
        }
        Err(e) => {
            eprintln!("synthnull {name}: error: {e}");
            let outcome = Outcome {
                verdict: Verdict::Fail,
                config: Value::Null,
                details: Value::Null,
                summary: vec![],
            };
            let _ = write_outputs(config, name, &outcome, EXIT_INPUT, Some(e.to_string()));
            EXIT_INPUT
        }
    }
}

fn write_outputs(
    config: &RunConfig,
    name: &str,
    outcome: &Outcome,
    code: i32,
    error: Option<String>,
) -> CliResult<()> {
    let timestamp_unix = (!config.no_timestamp).then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    let report = Report {
        command: name,
        version: env!("CARGO_PKG_VERSION"),
        config: &outcome.config,
        verdict: error.is_none().then_some(outcome.verdict),
        exit_code: code,
        error,
        details: &outcome.details,
        timestamp_unix,
    };
    let text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    write_text(
        &config.out.join(format!("{name}_report.json")),
        &(text + "\n"),
    )?;
    let mut rows = vec![("verdict".to_string(), outcome.verdict.to_string())];
    rows.extend(outcome.summary.iter().cloned());
    let (file, body) = match config.format {
        Format::StructuredText => {
            let mut s = format!("[{name}]\n");
            for (k, v) in &rows {
                let _ = writeln!(s, "{k} = {v}");
            }
            (format!("{name}_summary.txt"), s)
        }
        Format::Csv => {
            let mut s = String::from("key,value\n");
            for (k, v) in &rows {
                let _ = writeln!(s, "{},{}", csv_field(k), csv_field(v));
            }
            (format!("{name}_summary.csv"), s)
        }
    };
    write_text(&config.out.join(file), &body)?;
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn dispatch(config: &RunConfig) -> CliResult<Outcome> {
    match &config.command {
        Command::Validate(a) => validate(a),
        Command::Nce(a) => nce(a, &config.out),
        Command::Localize(a) => localize(a),
        Command::Hawking(a) => hawking(a),
        Command::Penrose(a) => penrose(a),
        Command::Warped(a) => warped(a, &config.out),
        Command::Stability(a) => stability(a),
        Command::Generate(a) => generate(a, &config.out),
    }
}

fn check_trials(trials: usize) -> CliResult<()> {
    if trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    Ok(())
}

fn check_eps_grid(eps: &[f64]) -> CliResult<()> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(CliError::Config(
            "eps grid entries must be positive and finite".into(),
        ));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::Config(
            "eps grid must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// `N` from the flag or the instance's dimension hint; must be positive.
fn resolve_n(flag: Option<f64>, h: &SyntheticNullHypersurface) -> CliResult<f64> {
    let n = flag.or(h.dimension_hint()).ok_or_else(|| {
        CliError::Config("--N is required when the instance carries no dimension hint".into())
    })?;
    if !(n > 0.0 && n.is_finite()) {
        return Err(CliError::Config(format!("N must be positive, got {n}")));
    }
    Ok(n)
}

fn path_value(p: &Path) -> Value {
    Value::String(p.display().to_string())
}

fn validate(a: &InputArgs) -> CliResult<Outcome> {
    let h = read_hypersurface_unchecked(&a.input)?;
    let rep = disintegration_check(&h);
    let mut summary = vec![
        ("rays".into(), h.rays().len().to_string()),
        ("total_weight".into(), rep.total_weight.to_string()),
    ];
    if !rep.pass {
        summary.push(("issues".into(), rep.summary()));
    }
    Ok(Outcome {
        verdict: Verdict::from_pass(rep.pass),
        config: json!({ "input": path_value(&a.input) }),
        details: serde_json::to_value(&rep).map_err(Error::from)?,
        summary,
    })
}

fn search_config(a: &SearchArgs, n: f64) -> Value {
    json!({
        "input": path_value(&a.input),
        "N": n,
        "trials": a.trials,
        "seed": a.seed,
        "t_grid_size": a.grid,
        "concavity_tolerance": CONCAVITY_TOL,
    })
}

fn nce(a: &NceArgs, out: &Path) -> CliResult<Outcome> {
    let s = &a.search;
    check_trials(s.trials)?;
    if s.grid == 0 {
        return Err(CliError::Config(
            "the time grid needs at least one interval".into(),
        ));
    }
    let h = read_hypersurface(&s.input)?;
    let n = resolve_n(s.n, &h)?;
    let mut config = search_config(s, n);
    if let (Some(p0), Some(p1)) = (&a.mu0, &a.mu1) {
        config["mu0"] = path_value(p0);
        config["mu1"] = path_value(p1);
        let mu0 = read_measure(p0)?;
        let mu1 = read_measure(p1)?;
        let rep = nce_test(&h, n, &mu0, &mu1, s.grid)?;
        if rep.verdict != Verdict::Vacuous {
            write_text(
                &out.join("nce_plan.csv"),
                &plan_csv(&monotone_plan(&mu0, &mu1, &h)?),
            )?;
        }
        write_text(&out.join("nce_entropy_mu0.csv"), &entropy_csv(&mu0, &h)?)?;
        write_text(&out.join("nce_entropy_mu1.csv"), &entropy_csv(&mu1, &h)?)?;
        return Ok(Outcome {
            verdict: rep.verdict,
            summary: vec![
                ("max_violation".into(), rep.max_violation.to_string()),
                (
                    "U(mu0)".into(),
                    entropy_power(&mu0, &h, n - 1.0)?.to_string(),
                ),
                (
                    "U(mu1)".into(),
                    entropy_power(&mu1, &h, n - 1.0)?.to_string(),
                ),
            ],
            details: serde_json::to_value(&rep).map_err(Error::from)?,
            config,
        });
    }
    let cfg = SearchConfig {
        grid: s.grid,
        ..SearchConfig::new(s.trials, s.seed)
    };
    let rep = nce_search_with(&h, n, &cfg)?;
    let mut details = json!({
        "trials_requested": rep.trials_requested,
        "trials_run": rep.trials_run,
        "failures": rep.failures,
        "first_failure": rep.first_failure,
        "worst_trial": rep.worst_trial,
        "worst": rep.worst,
    });
    let mut summary = vec![
        ("trials_run".into(), rep.trials_run.to_string()),
        ("failures".into(), rep.failures.to_string()),
    ];
    if let (Verdict::Fail, Some((mu0, mu1))) = (rep.verdict, &rep.worst_pair) {
        let p0 = out.join("nce_witness_mu0.json");
        let p1 = out.join("nce_witness_mu1.json");
        write_measure(&p0, mu0)?;
        write_measure(&p1, mu1)?;
        write_text(
            &out.join("nce_plan.csv"),
            &plan_csv(&monotone_plan(mu0, mu1, &h)?),
        )?;
        details["witness"] =
            json!({ "mu0": "nce_witness_mu0.json", "mu1": "nce_witness_mu1.json" });
        summary.push((
            "witness".into(),
            format!("{} {}", p0.display(), p1.display()),
        ));
    }
    Ok(Outcome {
        verdict: rep.verdict,
        config,
        details,
        summary,
    })
}

fn localize(a: &SearchArgs) -> CliResult<Outcome> {
    check_trials(a.trials)?;
    let h = read_hypersurface(&a.input)?;
    let n = resolve_n(a.n, &h)?;
    let rep = localization_crosscheck(&h, n, a.trials, a.seed)?;
    let mut config = search_config(a, n);
    config["t_grid_size"] = json!(DEFAULT_GRID);
    Ok(Outcome {
        verdict: Verdict::from_pass(rep.agree),
        summary: vec![
            ("cd_verdict".into(), rep.cd_verdict.to_string()),
            ("search_verdict".into(), rep.search.verdict.to_string()),
            ("agree".into(), rep.agree.to_string()),
        ],
        details: json!({
            "per_ray": rep.per_ray,
            "cd_verdict": rep.cd_verdict,
            "search_verdict": rep.search.verdict,
            "search_trials_run": rep.search.trials_run,
            "search_first_failure": rep.search.first_failure,
            "agree": rep.agree,
        }),
        config,
    })
}

/// A gauge shared by every ray, or a JSON object mapping ray ids to gauges.
fn read_section(spec: &str, h: &SyntheticNullHypersurface) -> CliResult<CrossSection> {
    if let Ok(g) = spec.parse::<f64>() {
        return Ok(CrossSection::at_gauge(h, g)?);
    }
    let path = Path::new(spec);
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!(
            "section `{spec}` is neither a number nor a readable file: {e}"
        ))
    })?;
    let points: BTreeMap<RayId, f64> = serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!(
            "{}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    Ok(CrossSection::new(points, h)?)
}

fn hawking(a: &HawkingArgs) -> CliResult<Outcome> {
    check_eps_grid(&a.eps)?;
    let h = read_hypersurface(&a.input)?;
    let n = resolve_n(a.n, &h)?;
    let s1 = read_section(&a.first, &h)?;
    let s2 = read_section(&a.second, &h)?;
    let rep = hawking_check(&s1, &s2, &h, n)?;
    let c1 = minkowski_content(&s1, &h, &a.eps, None)?;
    let c2 = minkowski_content(&s2, &h, &a.eps, None)?;
    Ok(Outcome {
        verdict: rep.verdict,
        config: json!({
            "input": path_value(&a.input),
            "N": n,
            "first": a.first,
            "second": a.second,
            "eps_grid": a.eps,
            "content_tolerance": CONTENT_TOL,
        }),
        summary: vec![
            ("content_first".into(), rep.content_first.to_string()),
            ("content_second".into(), rep.content_second.to_string()),
            ("numeric_first".into(), c1.numeric.to_string()),
            ("numeric_second".into(), c2.numeric.to_string()),
        ],
        details: json!({ "check": rep, "content_first": c1, "content_second": c2 }),
    })
}

fn penrose(a: &PenroseArgs) -> CliResult<Outcome> {
    check_eps_grid(&a.eps)?;
    let h = read_hypersurface(&a.input)?;
    let n = resolve_n(a.n, &h)?;
    let s = CrossSection::at_start(&h)?;
    let estimate = theta_estimate(&s, &h, &a.eps)?;
    let theta = a.theta.unwrap_or(estimate.closed_form);
    let rep = penrose_check(&h, n, &s, theta)?;
    Ok(Outcome {
        verdict: rep.verdict,
        config: json!({
            "input": path_value(&a.input),
            "N": n,
            "theta": a.theta,
            "eps_grid": a.eps,
            "penrose_tolerance": PENROSE_TOL,
        }),
        summary: vec![
            ("theta".into(), theta.to_string()),
            ("theta_numeric".into(), estimate.numeric.to_string()),
            ("bound".into(), rep.bound.to_string()),
            ("max_b".into(), rep.max_b.to_string()),
            ("min_slack".into(), rep.min_slack.to_string()),
        ],
        details: json!({ "check": rep, "theta_estimate": estimate }),
    })
}

fn warped(a: &WarpedArgs, out: &Path) -> CliResult<Outcome> {
    if !(a.step > 0.0 && a.step.is_finite()) || a.max_steps == 0 {
        return Err(CliError::Config(
            "step must be positive and max-steps at least 1".into(),
        ));
    }
    let warp = PowerWarp {
        scale: a.scale,
        exponent: a.exponent,
    };
    let spec = WarpedProductSpec::null(warp, a.t0, 1.0, true)?;
    let trace = integrate_geodesic(&spec, a.step, a.max_steps)?;
    let half = integrate_geodesic(&spec, 0.5 * a.step, a.max_steps)?;
    let step_change = (half.b_estimate - trace.b_estimate).abs() / trace.b_estimate.abs();
    let turns = trace.winding() / std::f64::consts::TAU;
    let checks = json!({
        "norm_conserved": trace.max_norm_drift <= WARPED_DRIFT_TOL,
        "step_stable": step_change <= WARPED_STEP_TOL,
        "winding": turns > a.min_turns,
    });
    let pass = checks
        .as_object()
        .expect("object")
        .values()
        .all(|v| v == &Value::Bool(true));
    write_text(&out.join("warped_trace.csv"), &trace_csv(&trace))?;
    Ok(Outcome {
        verdict: Verdict::from_pass(pass),
        config: json!({
            "t0": a.t0,
            "exponent": a.exponent,
            "scale": a.scale,
            "step": a.step,
            "max_steps": a.max_steps,
            "min_turns": a.min_turns,
            "drift_tolerance": WARPED_DRIFT_TOL,
            "step_tolerance": WARPED_STEP_TOL,
        }),
        summary: vec![
            ("b_estimate".into(), trace.b_estimate.to_string()),
            ("step_change".into(), step_change.to_string()),
            ("max_norm_drift".into(), trace.max_norm_drift.to_string()),
            ("turns".into(), turns.to_string()),
        ],
        details: json!({
            "checks": checks,
            "b_estimate": trace.b_estimate,
            "b_coarse": trace.b_coarse,
            "b_estimate_half_step": half.b_estimate,
            "step_change": step_change,
            "max_norm_drift": trace.max_norm_drift,
            "max_scaled_drift": trace.max_scaled_drift,
            "winding_rad": trace.winding(),
            "turns": turns,
            "terminated": trace.terminated,
            "samples": trace.samples.len(),
        }),
    })
}

fn stability(a: &StabilityArgs) -> CliResult<Outcome> {
    check_trials(a.trials)?;
    let seq = read_sequence(&a.manifest)?;
    let n = resolve_n(a.n, &seq.limit)?;
    let rep = limit_nce(&seq, n, a.trials, a.seed)?;
    let distances: Vec<Value> = rep
        .distances
        .iter()
        .map(|(d, r)| json!({ "distance": d, "over_eps": r }))
        .collect();
    Ok(Outcome {
        verdict: rep.verdict,
        config: json!({
            "manifest": path_value(&a.manifest),
            "N": n,
            "trials": a.trials,
            "seed": a.seed,
            "t_grid_size": DEFAULT_GRID,
            "concavity_tolerance": CONCAVITY_TOL,
        }),
        summary: vec![
            ("hypotheses".into(), rep.hypotheses.pass.to_string()),
            ("reason".into(), rep.reason.clone().unwrap_or_default()),
        ],
        details: json!({
            "reason": rep.reason,
            "hypotheses": rep.hypotheses,
            "step_verdicts": rep.step_verdicts,
            "limit_cd": rep.limit_cd,
            "limit_search_verdict": rep.limit_search.as_ref().map(|s| s.verdict),
            "distances": distances,
        }),
    })
}

fn bump_instance(n: f64, weight: f64) -> synthnull::Result<SyntheticNullHypersurface> {
    if !(weight > 0.0 && weight < 1.0) {
        return Err(Error::Parameter(format!(
            "bump weight must lie in (0, 1), got {weight}"
        )));
    }
    if n.is_nan() || n <= 2.0 {
        return Err(Error::Parameter(format!(
            "the bump profile needs N > 2, got {n}"
        )));
    }
    let unit = GaugeInterval::new(0.0, 1.0, true, true)?;
    let knots: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
    let flat = Ray::new(
        "flat",
        1.0 - weight,
        unit,
        RayDensity::constant(0.0, 1.0, 1.0)?,
        None,
    )?;
    let density =
        RayDensity::sample_with_exponent(knots, n - 2.0, |t| (1.0 + t * t).powf(n - 2.0))?;
    let bump = Ray::new("bump", weight, unit, density, None)?;
    SyntheticNullHypersurface::new(vec![flat, bump], None, Some(n))
}

fn generate(a: &GenerateArgs, out: &Path) -> CliResult<Outcome> {
    let target = |name: &str| a.output.clone().unwrap_or_else(|| out.join(name));
    let mut written = Vec::new();
    let mut write = |path: PathBuf, h: &SyntheticNullHypersurface| -> CliResult<()> {
        write_text(&path, &hypersurface_to_string(h)?)?;
        written.push(path);
        Ok(())
    };
    let config = match &a.kind {
        GenerateKind::Cone { n, horizon, rays } => {
            write(
                target("cone.json"),
                &cone_hypersurface_with(*n, *horizon, *rays)?,
            )?;
            json!({ "kind": "cone", "n": n, "horizon": horizon, "rays": rays })
        }
        GenerateKind::Sphere {
            radius,
            horizon,
            congruence,
            rays,
        } => {
            let c = match congruence {
                CongruenceArg::Ingoing => Congruence::Ingoing,
                CongruenceArg::Outgoing => Congruence::Outgoing,
            };
            write(
                target("sphere.json"),
                &sphere_boundary_hypersurface_with(*radius, *horizon, c, *rays)?,
            )?;
            json!({ "kind": "sphere", "radius": radius, "horizon": horizon, "congruence": congruence, "rays": rays })
        }
        GenerateKind::Corpus {
            family,
            seed,
            index,
        } => {
            let path = target("corpus.json");
            match family {
                CorpusFamily::Localization => {
                    write(path, &localization_instance(*seed, *index)?.surface)?
                }
                CorpusFamily::Hawking => {
                    let inst = hawking_instance(*seed, *index)?;
                    write(path.clone(), &inst.surface)?;
                    for (suffix, s) in [("first", &inst.first), ("second", &inst.second)] {
                        let p = path.with_extension(format!("{suffix}.json"));
                        write_text(
                            &p,
                            &serde_json::to_string_pretty(s.points()).map_err(Error::from)?,
                        )?;
                        written.push(p);
                    }
                }
                CorpusFamily::Penrose => write(path, &penrose_instance(*seed, *index)?.surface)?,
            }
            json!({ "kind": "corpus", "family": family, "seed": seed, "index": index })
        }
        GenerateKind::Bump { n, weight } => {
            write(target("bump.json"), &bump_instance(*n, *weight)?)?;
            json!({ "kind": "bump", "N": n, "weight": weight })
        }
        GenerateKind::Sequence {
            kind,
            steps,
            horizon,
            rays,
        } => {
            if *steps == 0 {
                return Err(CliError::Config(
                    "a sequence needs at least one step".into(),
                ));
            }
            let seq: ApproximationSequence = match kind {
                SequenceKind::PerturbedCone => perturbed_cone_sequence(*steps, *horizon, *rays)?,
                SequenceKind::Adversarial => adversarial_sigma_sequence(
                    &cone_hypersurface_with(4, *horizon, *rays)?,
                    *steps,
                )?,
                SequenceKind::Kink => kink_sequence(*steps, 4.0)?,
            };
            let dir = target("sequence");
            written.push(write_sequence(&dir, &seq)?);
            json!({ "kind": "sequence", "sequence": kind, "steps": steps, "horizon": horizon, "rays": rays })
        }
    };
    let files: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
    Ok(Outcome {
        verdict: Verdict::Pass,
        config,
        summary: vec![("written".into(), files.join(" "))],
        details: json!({ "written": files }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_map_to_exit_codes() {
        assert_eq!(exit_code(Verdict::Pass), 0);
        assert_eq!(exit_code(Verdict::Vacuous), 0);
        assert_eq!(exit_code(Verdict::Fail), 1);
        assert_eq!(exit_code(Verdict::Inapplicable), 2);
    }

    #[test]
    fn eps_grid_must_decrease_strictly() {
        assert!(check_eps_grid(&[1e-2, 1e-3]).is_ok());
        assert!(check_eps_grid(&[1e-3, 1e-3]).is_err());
        assert!(check_eps_grid(&[1e-3, 1e-2]).is_err());
        assert!(check_eps_grid(&[1e-2, -1e-3]).is_err());
        assert!(check_eps_grid(&[]).is_err());
    }

    #[test]
    fn csv_fields_are_quoted_when_needed() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\", ok"), "\"say \"\"hi\"\", ok\"");
    }

    #[test]
    fn nonpositive_dimension_is_rejected() {
        let h = bump_instance(3.0, 1e-3).unwrap();
        assert_eq!(resolve_n(None, &h).unwrap(), 3.0);
        assert!(resolve_n(Some(0.0), &h).is_err());
        assert!(resolve_n(Some(-2.0), &h).is_err());
    }

    #[test]
    fn bump_instance_has_a_light_convex_ray() {
        let h = bump_instance(3.0, 1e-3).unwrap();
        let bump = h.ray(&RayId::from("bump")).unwrap();
        assert_eq!(bump.weight, 1e-3);
        assert!(!synthnull::nec::cd_check(bump, 3.0).unwrap().pass);
        assert!(bump_instance(3.0, 1.0).is_err());
    }
}
