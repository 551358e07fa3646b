//! Command implementations behind the `winloop` binary. [`run`] takes the
//! argument list and output sinks so tests can drive it in-process.

pub mod demo;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use winloop::comparison::{classify_strength, wr_from_auc, PairwiseComparison};
use winloop::distributions::{
    auc_deterministic, auc_monte_carlo, transitivity_certificate, DistributionError,
    DistributionSpec,
};
use winloop::loop_space::{
    alpha, classify_membership, construct_sigma, export_surface, feasible_s3, AucTriplet,
    LoopSpaceError, Membership, SurfaceView,
};
use winloop::tournament::{komisarski_bound, komisarski_wr_bound, sufficiency_flags, AUDIT_TOL};
use winloop::trial_io::{
    analyze_dataset, build_report, fmt_auc, fmt_sig6, load_dataset, parse_dataset, render_report,
    sha256_hex, AnalysisReport, ArmInfo, CrossCheck, DatasetInfo, PairInput, ReportFormat,
    ReportOptions, TrialIoError,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;

pub const DEFAULT_SEED: u64 = 20_240_101;
pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
/// Realized construction AUCs must match the target to this tolerance.
pub const CONSTRUCT_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(
    name = "winloop",
    version,
    about = "Win ratios, AUCs and non-transitive loop audits"
)]
struct Cli {
    /// AUCs within this distance of 1/2 are treated as undecided.
    #[arg(long, global = true, default_value_t = 0.0)]
    tie_epsilon: f64,
    /// Longest loop to enumerate (defaults to the number of arms).
    #[arg(long, global = true)]
    max_loop: Option<usize>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Monte Carlo draws per pair.
    #[arg(long, global = true, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ReportFormat::Text,
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Mc,
    Quadrature,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DemoName {
    Table1,
    Example2,
    Efron,
    Figure1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum View {
    Auc,
    Wr,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Censored pairwise comparisons, loops and audits for a long CSV (arm,time,event).
    Analyze { input: PathBuf },
    /// Build the extremal three-variable loop with Pr[Y<Z] = b and Pr[Z<X] = c.
    #[command(allow_negative_numbers = true)]
    Construct {
        b: f64,
        c: f64,
        /// Five increasing support points x1,y1,z,x2,y2.
        #[arg(long, value_delimiter = ',', num_args = 5)]
        support: Option<Vec<f64>>,
    },
    /// Check whether (Pr[X<Y], Pr[Y<Z], Pr[Z<X]) can come from independent variables.
    #[command(allow_negative_numbers = true)]
    Membership { a: f64, b: f64, c: f64 },
    /// Loop-length bounds on the smallest AUC and win ratio.
    Bounds {
        #[arg(default_value_t = 10)]
        n_max: usize,
    },
    /// Pairwise AUCs of parametric distributions, e.g. `x=chisq(1)` `normal(0,1)+2`.
    Simulate {
        #[arg(required = true, num_args = 1..)]
        specs: Vec<String>,
        #[arg(long, value_enum, default_value_t = Method::Quadrature)]
        method: Method,
        #[arg(long, default_value_t = DEFAULT_QUAD_TOL)]
        quad_tol: f64,
    },
    /// Run a built-in scenario.
    Demo {
        #[arg(value_enum)]
        name: DemoName,
    },
    /// Boundaries of the non-transitive region over an (a, b) grid, for plotting.
    Surface {
        #[arg(long, default_value_t = 51)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = View::Auc)]
        view: View,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    fn invariant(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVARIANT,
            message: message.into(),
        }
    }
}

/// Command output plus an optional invariant breach found after it was produced.
struct Outcome {
    body: String,
    breach: Option<String>,
}

impl From<String> for Outcome {
    fn from(body: String) -> Self {
        Self { body, breach: None }
    }
}

struct Ctx {
    tie_epsilon: f64,
    max_loop: Option<usize>,
    seed: u64,
    samples: usize,
    format: Format,
    styled: bool,
    log: Vec<String>,
}

/// Parses `args` (including the program name), runs the command, and returns the exit code.
/// Text output is styled only when `styled` is set and no `--output` file is given.
pub fn run<I, T>(args: I, styled: bool, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let mut ctx = Ctx {
        tie_epsilon: cli.tie_epsilon,
        max_loop: cli.max_loop,
        seed: cli.seed,
        samples: cli.samples,
        format: cli.format,
        styled: styled && cli.output.is_none(),
        log: Vec::new(),
    };
    let result = dispatch(&cli.command, &mut ctx);
    for line in &ctx.log {
        let _ = writeln!(stderr, "winloop: {line}");
    }
    let outcome = match result {
        Ok(o) => o,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            return f.code;
        }
    };
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, outcome.body.as_bytes()) {
                let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
                return EXIT_DATA;
            }
        }
        None => {
            let _ = stdout.write_all(outcome.body.as_bytes());
        }
    }
    match outcome.breach {
        Some(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_INVARIANT
        }
        None => EXIT_OK,
    }
}

fn dispatch(command: &Command, ctx: &mut Ctx) -> Result<Outcome, Failure> {
    if !(ctx.tie_epsilon.is_finite() && (0.0..0.5).contains(&ctx.tie_epsilon)) {
        return Err(Failure::usage(format!(
            "--tie-epsilon {} must be in [0, 0.5)",
            ctx.tie_epsilon
        )));
    }
    if let Some(m) = ctx.max_loop {
        if m < 3 {
            return Err(Failure::usage(format!("--max-loop {m} must be at least 3")));
        }
    }
    match command {
        Command::Analyze { input } => cmd_analyze(input, ctx),
        Command::Construct { b, c, support } => {
            cmd_construct(*b, *c, support.as_deref(), ctx).map(Outcome::from)
        }
        Command::Membership { a, b, c } => cmd_membership(*a, *b, *c, ctx).map(Outcome::from),
        Command::Bounds { n_max } => cmd_bounds(*n_max, ctx).map(Outcome::from),
        Command::Simulate {
            specs,
            method,
            quad_tol,
        } => cmd_simulate(specs, *method, *quad_tol, ctx),
        Command::Demo { name } => cmd_demo(*name, ctx),
        Command::Surface { steps, view } => cmd_surface(*steps, *view, ctx).map(Outcome::from),
    }
}

fn data_error(e: TrialIoError) -> Failure {
    match e {
        TrialIoError::Graph(g) => Failure::invariant(g.to_string()),
        other => Failure::data(other.to_string()),
    }
}

/// Renders a report and flags audit or cross-check breaches.
fn finish_report(report: &AnalysisReport, ctx: &Ctx, preface: &str) -> Outcome {
    let mut body = String::new();
    if ctx.format == Format::Text {
        body.push_str(preface);
    }
    body.push_str(&render_report(report, ctx.format.into(), ctx.styled));
    let mut problems: Vec<String> = report
        .audit_breaches()
        .iter()
        .map(|a| {
            format!(
                "loop {} breaks the realizability bounds (min AUC {}, bound {}, product {})",
                a.path,
                fmt_auc(a.min_auc),
                fmt_auc(a.bound),
                fmt_auc(a.auc_product)
            )
        })
        .collect();
    problems.extend(report.failed_cross_checks().iter().map(|r| {
        let c = r.check.expect("failed check present");
        format!(
            "Monte Carlo {} vs {}: {} is {:.2} standard errors from {}",
            r.winner,
            r.loser,
            fmt_auc(c.monte_carlo),
            c.z,
            fmt_auc(r.auc)
        )
    }));
    Outcome {
        body,
        breach: (!problems.is_empty()).then(|| problems.join("; ")),
    }
}

fn log_common(ctx: &mut Ctx) {
    ctx.log.push(format!(
        "tie_epsilon={} audit_tol={:e} seed={} samples={}",
        ctx.tie_epsilon, AUDIT_TOL, ctx.seed, ctx.samples
    ));
}

fn cmd_analyze(input: &std::path::Path, ctx: &mut Ctx) -> Result<Outcome, Failure> {
    log_common(ctx);
    let loaded = load_dataset(input).map_err(data_error)?;
    ctx.log.push(format!(
        "input={} sha256={}",
        input.display(),
        loaded.sha256
    ));
    let report = analyze_dataset(
        &loaded.dataset,
        Some(loaded.sha256),
        ctx.tie_epsilon,
        ctx.max_loop,
    )
    .map_err(data_error)?;
    Ok(finish_report(&report, ctx, ""))
}

fn analyze_bundled(name: &str, csv: &str, ctx: &mut Ctx) -> Result<AnalysisReport, Failure> {
    let sha = sha256_hex(csv.as_bytes());
    ctx.log.push(format!("input={name} (bundled) sha256={sha}"));
    let dataset = parse_dataset(name, csv.as_bytes()).map_err(data_error)?;
    analyze_dataset(&dataset, Some(sha), ctx.tie_epsilon, ctx.max_loop).map_err(data_error)
}

/// `label=expr` or a bare expression (labelled `D1`, `D2`, ...).
fn parse_labelled(specs: &[String]) -> Result<Vec<(String, DistributionSpec)>, Failure> {
    let mut out = Vec::new();
    for (k, s) in specs.iter().enumerate() {
        let (label, expr) = match s.split_once('=') {
            Some((l, e)) => (l.trim().to_string(), e),
            None => (format!("D{}", k + 1), s.as_str()),
        };
        if label.is_empty() {
            return Err(Failure::data(format!("empty label in `{s}`")));
        }
        let spec: DistributionSpec = expr
            .parse()
            .map_err(|e: DistributionError| Failure::data(e.to_string()))?;
        out.push((label, spec));
    }
    Ok(out)
}

fn distribution_report(
    name: &str,
    specs: &[(String, DistributionSpec)],
    method: Method,
    quad_tol: f64,
    ctx: &mut Ctx,
) -> Result<AnalysisReport, Failure> {
    if specs.len() < 3 {
        return Err(Failure::usage(format!(
            "simulate needs at least 3 distributions, got {}",
            specs.len()
        )));
    }
    let mut seen = std::collections::BTreeSet::new();
    for (l, _) in specs {
        if !seen.insert(l.as_str()) {
            return Err(Failure::usage(format!("duplicate label `{l}`")));
        }
    }
    let dist_failure = |e: DistributionError| match e {
        DistributionError::QuadratureDidNotConverge { .. } => Failure::invariant(e.to_string()),
        DistributionError::TooFewSamples { .. } | DistributionError::BadTolerance(_) => {
            Failure::usage(e.to_string())
        }
        other => Failure::data(other.to_string()),
    };
    let mut pairs = BTreeMap::new();
    let mut pair_no = 0u64;
    for i in 0..specs.len() {
        for j in i + 1..specs.len() {
            let (first, second) = (&specs[i].1, &specs[j].1);
            let pair_seed = ctx.seed.wrapping_add(pair_no);
            pair_no += 1;
            let input = match method {
                Method::Quadrature | Method::Both => {
                    let est = auc_deterministic(first, second, quad_tol).map_err(dist_failure)?;
                    let check = if method == Method::Both {
                        let mc = auc_monte_carlo(first, second, ctx.samples, pair_seed)
                            .map_err(dist_failure)?;
                        Some(CrossCheck::new(est.value, &mc))
                    } else {
                        None
                    };
                    PairInput {
                        comparison: PairwiseComparison::from_auc(est.value)
                            .map_err(|e| Failure::invariant(e.to_string()))?,
                        estimate: Some(est),
                        check,
                    }
                }
                Method::Mc => {
                    let est = auc_monte_carlo(first, second, ctx.samples, pair_seed)
                        .map_err(dist_failure)?;
                    PairInput {
                        comparison: PairwiseComparison::from_auc(est.value)
                            .map_err(|e| Failure::invariant(e.to_string()))?,
                        estimate: Some(est),
                        check: None,
                    }
                }
            };
            pairs.insert((i, j), input);
        }
    }
    let only_specs: Vec<DistributionSpec> = specs.iter().map(|s| s.1.clone()).collect();
    let certificate = transitivity_certificate(&only_specs).map_err(dist_failure)?;
    let mut options =
        ReportOptions::new(ctx.tie_epsilon, ctx.max_loop.unwrap_or(specs.len()).max(3));
    options.method = Some(
        match method {
            Method::Mc => "mc",
            Method::Quadrature => "quadrature",
            Method::Both => "both",
        }
        .into(),
    );
    if method != Method::Quadrature {
        options.seed = Some(ctx.seed);
        options.samples = Some(ctx.samples);
    }
    if method != Method::Mc {
        options.quadrature_tolerance = Some(quad_tol);
    }
    let info = DatasetInfo {
        name: name.into(),
        kind: "distributions".into(),
        sha256: None,
        arms: specs
            .iter()
            .map(|(l, s)| ArmInfo {
                label: l.clone(),
                records: None,
                events: None,
                spec: Some(s.to_string()),
                mean: Some(s.mean()),
            })
            .collect(),
    };
    build_report(info, options, pairs, Some(&certificate)).map_err(data_error)
}

fn cmd_simulate(
    specs: &[String],
    method: Method,
    quad_tol: f64,
    ctx: &mut Ctx,
) -> Result<Outcome, Failure> {
    log_common(ctx);
    ctx.log.push(format!("quad_tol={quad_tol:e}"));
    let specs = parse_labelled(specs)?;
    let report = distribution_report("simulate", &specs, method, quad_tol, ctx)?;
    Ok(finish_report(&report, ctx, ""))
}

fn unit(name: &str, v: f64) -> Result<f64, Failure> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Failure::usage(format!("{name} = {v} must be in [0, 1]")))
    }
}

fn pmf_string(d: &winloop::comparison::DiscreteDistribution) -> String {
    let short = |x: f64| {
        let s = format!("{x:.12}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    };
    let atoms: Vec<String> = d
        .atoms()
        .iter()
        .map(|&(v, p)| format!("{}:{}", short(v), short(p)))
        .collect();
    atoms.join(", ")
}

fn cmd_construct(
    b: f64,
    c: f64,
    support: Option<&[f64]>,
    ctx: &mut Ctx,
) -> Result<String, Failure> {
    ctx.log.push(format!("construct_tol={CONSTRUCT_TOL:e}"));
    let support = support.map(|s| <[f64; 5]>::try_from(s).expect("clap enforces five values"));
    let sigma = construct_sigma(b, c, support).map_err(|e| match e {
        LoopSpaceError::OutsideSigmaRegion { .. } | LoopSpaceError::BadSupport => {
            Failure::usage(e.to_string())
        }
        other => Failure::invariant(other.to_string()),
    })?;
    let realized = sigma.realized();
    let target = [1.0 - b * c, b, c];
    let got = realized.as_array();
    let max_error = got
        .iter()
        .zip(target)
        .map(|(g, t)| (g - t).abs())
        .fold(0.0, f64::max);
    if max_error > CONSTRUCT_TOL {
        return Err(Failure::invariant(format!(
            "realized AUCs {got:?} differ from (1-bc, b, c) = {target:?} by {max_error:e}"
        )));
    }
    let wrs: Vec<f64> = got
        .iter()
        .map(|&a| wr_from_auc(a).expect("auc in range"))
        .collect();
    Ok(match ctx.format {
        Format::Json => {
            let atoms = |d: &winloop::comparison::DiscreteDistribution| json!(d.atoms());
            let fmt_wr = |w: f64| {
                if w.is_finite() {
                    json!(w)
                } else {
                    json!("inf")
                }
            };
            let v = json!({
                "b": b,
                "c": c,
                "support": sigma.support,
                "x": atoms(&sigma.x),
                "y": atoms(&sigma.y),
                "z": atoms(&sigma.z),
                "aucs": got,
                "wrs": wrs.iter().map(|&w| fmt_wr(w)).collect::<Vec<_>>(),
                "target": target,
                "max_error": max_error,
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
        }
        Format::Csv => {
            let mut out = String::from("pair,auc,wr,strength\n");
            for (name, (a, w)) in ["X<Y", "Y<Z", "Z<X"].iter().zip(got.iter().zip(&wrs)) {
                let _ = writeln!(
                    out,
                    "{name},{a},{},{}",
                    fmt_wr_text(*w),
                    classify_strength(*a)
                );
            }
            out
        }
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "Extremal loop for b = {b}, c = {c}");
            let _ = writeln!(out, "  X: {}", pmf_string(&sigma.x));
            let _ = writeln!(out, "  Y: {}", pmf_string(&sigma.y));
            let _ = writeln!(out, "  Z: {}", pmf_string(&sigma.z));
            for (name, (a, w)) in ["X < Y", "Y < Z", "Z < X"].iter().zip(got.iter().zip(&wrs)) {
                let _ = writeln!(
                    out,
                    "  Pr[{name}] = {}  WR = {}  {}",
                    fmt_auc(*a),
                    fmt_sig6(*w),
                    classify_strength(*a)
                );
            }
            let _ = writeln!(out, "  matches (1 - bc, b, c) within {max_error:.1e}");
            out
        }
    })
}

fn fmt_wr_text(w: f64) -> String {
    if w.is_finite() {
        format!("{w}")
    } else {
        "inf".into()
    }
}

fn cmd_membership(a: f64, b: f64, c: f64, ctx: &mut Ctx) -> Result<String, Failure> {
    let t = AucTriplet::new(unit("a", a)?, unit("b", b)?, unit("c", c)?)
        .map_err(|e| Failure::usage(e.to_string()))?;
    ctx.log.push(format!(
        "region_tol={:e} audit_tol={AUDIT_TOL:e}",
        winloop::loop_space::REGION_TOL
    ));
    let feasible = feasible_s3(&t);
    let membership = classify_membership(&t);
    let c_hi = alpha(a, b).expect("checked range");
    let c_lo = 1.0 - alpha(1.0 - a, 1.0 - b).expect("checked range");
    let bound = komisarski_bound(3).expect("n = 3");
    let is_loop = membership != Membership::Outside;
    let min_ok = t.min() <= bound + AUDIT_TOL;
    let flags = [("a, b", a, b), ("b, c", b, c), ("c, a", c, a)]
        .map(|(n, x, y)| (n, sufficiency_flags(x, y)));
    let strengths = [a, b, c].map(classify_strength);
    let membership_name = match membership {
        Membership::Outside => "outside",
        Membership::Boundary => "boundary",
        Membership::Strict => "strict",
    };
    Ok(match ctx.format {
        Format::Json => {
            let v = json!({
                "triplet": [a, b, c],
                "feasible": feasible,
                "non_transitive_member": is_loop,
                "membership": membership_name,
                "c_range": [c_lo, c_hi],
                "sufficiency": flags.iter().map(|(n, f)| json!({
                    "pair": n,
                    "product": f.product,
                    "transitive_guaranteed": f.transitive_guaranteed,
                    "both_above_inv_sqrt2": f.both_above_inv_sqrt2,
                })).collect::<Vec<_>>(),
                "loop_bound": bound,
                "min_auc": t.min(),
                "min_auc_within_bound": min_ok,
                "strength": strengths.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
        }
        Format::Text | Format::Csv => {
            let yes = |v: bool| if v { "yes" } else { "no" };
            let mut out = String::new();
            let _ = writeln!(out, "Triplet Pr[X<Y] = {a}, Pr[Y<Z] = {b}, Pr[Z<X] = {c}");
            let _ = writeln!(out, "  feasible for independent X, Y, Z: {}", yes(feasible));
            let _ = writeln!(out, "  non-transitive region: {}", yes(is_loop));
            let _ = writeln!(out, "  membership: {membership_name}");
            let _ = writeln!(
                out,
                "  feasible c range at (a, b): [{}, {}]",
                fmt_sig6(c_lo),
                fmt_sig6(c_hi)
            );
            for (n, f) in &flags {
                let _ = writeln!(
                    out,
                    "  sufficiency ({n}): product {} {}",
                    fmt_sig6(f.product),
                    if f.transitive_guaranteed {
                        ">= 1/2, no loop possible"
                    } else {
                        "< 1/2, no guarantee"
                    }
                );
            }
            let verdict = match (is_loop, min_ok) {
                (false, _) => "not applicable",
                (true, true) => "ok",
                (true, false) => "VIOLATED",
            };
            let _ = writeln!(
                out,
                "  smallest AUC {} vs loop bound {}: {verdict}",
                fmt_sig6(t.min()),
                fmt_sig6(bound)
            );
            let s: Vec<String> = strengths.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(out, "  strength: {}", s.join(", "));
            out
        }
    })
}

fn cmd_bounds(n_max: usize, ctx: &mut Ctx) -> Result<String, Failure> {
    if n_max < 3 {
        return Err(Failure::usage(format!(
            "n_max = {n_max} must be at least 3"
        )));
    }
    let _ = ctx;
    let rows: Vec<(usize, f64, f64)> = (3..=n_max)
        .map(|n| {
            (
                n,
                komisarski_bound(n).expect("n >= 3"),
                komisarski_wr_bound(n).expect("n >= 3"),
            )
        })
        .collect();
    Ok(match ctx.format {
        Format::Json => {
            let v = json!({
                "rows": rows.iter().map(|(n, a, w)| json!({"n": n, "auc_bound": a, "wr_bound": w})).collect::<Vec<_>>(),
                "limit": {"auc_bound": 0.75, "wr_bound": 3.0},
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
        }
        Format::Csv => {
            let mut out = String::from("n,auc_bound,wr_bound\n");
            for (n, a, w) in &rows {
                let _ = writeln!(out, "{n},{a},{w}");
            }
            out.push_str("inf,0.75,3\n");
            out
        }
        Format::Text => {
            let mut out = String::from("    n  AUC bound   WR bound\n");
            for (n, a, w) in &rows {
                let _ = writeln!(out, "{n:>5}  {a:.6}  {w:>9.6}");
            }
            let _ = writeln!(out, "{:>5}  {:.6}  {:>9.6}", "limit", 0.75, 3.0);
            out
        }
    })
}

fn cmd_surface(steps: usize, view: View, ctx: &mut Ctx) -> Result<String, Failure> {
    let view = match view {
        View::Auc => SurfaceView::Auc,
        View::Wr => SurfaceView::Wr,
    };
    let grid = export_surface(steps, view).map_err(|e| Failure::usage(e.to_string()))?;
    Ok(match ctx.format {
        Format::Json => {
            let cell = |v: f64| {
                if v.is_finite() {
                    json!(v)
                } else {
                    json!("inf")
                }
            };
            let v = json!({
                "header": grid.header().split(',').collect::<Vec<_>>(),
                "grid_steps": grid.grid_steps,
                "rows": grid.rows.iter().map(|r| r.iter().map(|&x| cell(x)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            });
            format!("{}\n", serde_json::to_string(&v).expect("json"))
        }
        Format::Text | Format::Csv => grid.to_csv(),
    })
}

fn cmd_demo(name: DemoName, ctx: &mut Ctx) -> Result<Outcome, Failure> {
    log_common(ctx);
    match name {
        DemoName::Table1 => {
            let specs = demo::table1_specs();
            let report =
                distribution_report("table1", &specs, Method::Quadrature, DEFAULT_QUAD_TOL, ctx)?;
            let preface = "Three discrete variables with exact AUCs computed by enumeration.\n\
                           Each one is more likely to be smaller than the next, and the last\n\
                           is more likely to be smaller than the first.\n\n";
            Ok(finish_report(&report, ctx, preface))
        }
        DemoName::Example2 => {
            let specs = demo::example2_specs();
            let report =
                distribution_report("example2", &specs, Method::Both, DEFAULT_QUAD_TOL, ctx)?;
            let means: Vec<String> = specs
                .iter()
                .map(|(l, s)| format!("{l} = {}", fmt_sig6(s.mean())))
                .collect();
            let preface = format!(
                "Continuous loop: chi-square(1), a narrow normal and a reflected, shifted chi-square(1).\n\
                 Means: {}. AUCs by quadrature, cross-checked by Monte Carlo.\n\n",
                means.join(", ")
            );
            Ok(finish_report(&report, ctx, &preface))
        }
        DemoName::Efron => {
            let comparisons = demo::efron_comparisons().map_err(Failure::invariant)?;
            let pairs = comparisons
                .into_iter()
                .map(|(k, c)| (k, PairInput::from(c)))
                .collect();
            let info = DatasetInfo {
                name: "efron".into(),
                kind: "dice".into(),
                sha256: None,
                arms: demo::EFRON_DICE
                    .iter()
                    .map(|(l, f)| ArmInfo {
                        label: l.to_string(),
                        records: None,
                        events: None,
                        spec: Some(demo::die_label(f)),
                        mean: Some(f.iter().sum::<u32>() as f64 / 6.0),
                    })
                    .collect(),
            };
            let options = ReportOptions::new(ctx.tie_epsilon, ctx.max_loop.unwrap_or(4));
            let report = build_report(info, options, pairs, None).map_err(data_error)?;
            let preface =
                "Efron dice, all 36 face pairs enumerated per pair of dice (higher face wins).\n\
                           Each die beats the next on 24 of 36 rolls.\n\n";
            Ok(finish_report(&report, ctx, preface))
        }
        DemoName::Figure1 => {
            let report = analyze_bundled("figure1_synthetic", demo::FIGURE1_CSV, ctx)?;
            let preface = "SYNTHETIC four-arm trial (not real patient data). Each arm shares one\n\
                           survival component and adds its own early deaths, giving weak\n\
                           win ratios that form a four-arm loop and two three-arm loops.\n\n";
            Ok(finish_report(&report, ctx, preface))
        }
    }
}

/// Runs `analyze` on the bundled censoring fixture (for tests and docs).
pub fn censoring_fixture() -> &'static str {
    demo::CENSORING_FIXTURE_CSV
}
