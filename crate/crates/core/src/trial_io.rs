//! Trial dataset ingest (long CSV) and analysis report rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::comparison::{
    censored_comparison, Arm, ComparisonError, EventRecord, PairwiseComparison,
};
use crate::distributions::{AucEstimate, TransitivityCertificate};
use crate::serde_util::fmt_inf;
use crate::tournament::{
    audit_cycle, build_tournament, enumerate_cycles, path_sufficiency, Cycle, CycleAudit,
    GraphError, AUDIT_TOL, COMPLEMENT_TOL,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const REQUIRED_COLUMNS: [&str; 3] = ["arm", "time", "event"];

#[derive(Debug, Error)]
pub enum TrialIoError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("missing required column `{0}` (expected header arm,time,event)")]
    MissingColumn(&'static str),
    #[error("duplicate header {0}")]
    DuplicateHeader(String),
    #[error("line {line}, field `{field}`: {message}")]
    Row {
        line: u64,
        field: &'static str,
        message: String,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("arm `{0}` has no records")]
    EmptyArm(String),
    #[error("duplicate arm label `{0}`")]
    DuplicateArm(String),
    #[error("a dataset needs at least 2 arms, found {0}")]
    TooFewArms(usize),
    #[error("comparison {first} vs {second}: {source}")]
    Comparison {
        first: String,
        second: String,
        source: ComparisonError,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialDataset {
    name: String,
    arms: Vec<Arm>,
}

impl TrialDataset {
    pub fn new(name: impl Into<String>, arms: Vec<Arm>) -> Result<Self, TrialIoError> {
        if arms.len() < 2 {
            return Err(TrialIoError::TooFewArms(arms.len()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for arm in &arms {
            if arm.is_empty() {
                return Err(TrialIoError::EmptyArm(arm.label().to_string()));
            }
            if !seen.insert(arm.label()) {
                return Err(TrialIoError::DuplicateArm(arm.label().to_string()));
            }
        }
        Ok(Self {
            name: name.into(),
            arms,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A loaded dataset together with the SHA-256 of the file it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub dataset: TrialDataset,
    pub sha256: String,
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<LoadedDataset, TrialIoError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| TrialIoError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(LoadedDataset {
        dataset: parse_dataset(name, &bytes)?,
        sha256: sha256_hex(&bytes),
    })
}

/// Parses long-format `arm,time,event` CSV. Arms keep first-appearance order
/// and records keep row order. Extra columns are ignored.
pub fn parse_dataset(name: impl Into<String>, bytes: &[u8]) -> Result<TrialDataset, TrialIoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| TrialIoError::Csv(e.to_string()))?
        .clone();
    if header.is_empty() {
        return Err(TrialIoError::MissingColumn("arm"));
    }
    let mut columns = [0usize; 3];
    for (slot, required) in columns.iter_mut().zip(REQUIRED_COLUMNS) {
        let hits: Vec<usize> = header
            .iter()
            .enumerate()
            .filter(|(_, h)| h.eq_ignore_ascii_case(required))
            .map(|(k, _)| k)
            .collect();
        match hits.as_slice() {
            [] => return Err(TrialIoError::MissingColumn(required)),
            [k] => *slot = *k,
            _ => {
                return Err(TrialIoError::DuplicateHeader(format!(
                    "column `{required}` appears twice"
                )))
            }
        }
    }
    let [arm_col, time_col, event_col] = columns;

    let mut arms: Vec<Arm> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| match e.position() {
            Some(p) => TrialIoError::Row {
                line: p.line(),
                field: "row",
                message: e.to_string(),
            },
            None => TrialIoError::Csv(e.to_string()),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let row_error = |field, message: String| TrialIoError::Row {
            line,
            field,
            message,
        };
        let label = &row[arm_col];
        if row
            .iter()
            .zip(header.iter())
            .all(|(a, b)| a.eq_ignore_ascii_case(b))
        {
            return Err(TrialIoError::DuplicateHeader(format!("row at line {line}")));
        }
        if label.is_empty() {
            return Err(row_error("arm", "empty arm label".into()));
        }
        let time_text = &row[time_col];
        let time: f64 = time_text
            .parse()
            .map_err(|_| row_error("time", format!("`{time_text}` is not a number")))?;
        if !time.is_finite() || time < 0.0 {
            return Err(row_error(
                "time",
                format!("`{time_text}` must be finite and non-negative"),
            ));
        }
        let event = match &row[event_col] {
            "0" => false,
            "1" => true,
            other => return Err(row_error("event", format!("`{other}` must be 0 or 1"))),
        };
        let record = EventRecord::new(time, event).map_err(|e| row_error("time", e.to_string()))?;
        let k = *index.entry(label.to_string()).or_insert_with(|| {
            arms.push(Arm::new(label, Vec::new()).expect("label checked non-empty"));
            arms.len() - 1
        });
        arms[k].push(record);
    }
    TrialDataset::new(name, arms)
}

/// One input arm or distribution, as echoed in the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmInfo {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetInfo {
    pub name: String,
    /// `trial` for CSV input, `distributions` for parametric specs.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
    pub arms: Vec<ArmInfo>,
}

impl DatasetInfo {
    pub fn from_trial(dataset: &TrialDataset, sha256: Option<String>) -> Self {
        Self {
            name: dataset.name().to_string(),
            kind: "trial".into(),
            sha256,
            arms: dataset
                .arms()
                .iter()
                .map(|a| ArmInfo {
                    label: a.label().to_string(),
                    records: Some(a.len()),
                    events: Some(a.records().iter().filter(|r| r.is_event()).count()),
                    spec: None,
                    mean: None,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportOptions {
    pub tie_epsilon: f64,
    pub max_loop: usize,
    pub audit_tolerance: f64,
    pub complement_tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_tolerance: Option<f64>,
    pub tool_version: String,
}

impl ReportOptions {
    pub fn new(tie_epsilon: f64, max_loop: usize) -> Self {
        Self {
            tie_epsilon,
            max_loop,
            audit_tolerance: AUDIT_TOL,
            complement_tolerance: COMPLEMENT_TOL,
            method: None,
            seed: None,
            samples: None,
            quadrature_tolerance: None,
            tool_version: TOOL_VERSION.to_string(),
        }
    }
}

/// Monte Carlo estimate checked against the deterministic value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossCheck {
    pub monte_carlo: f64,
    pub std_error: f64,
    /// `|monte_carlo - auc| / std_error`; zero when both agree exactly.
    pub z: f64,
    pub passed: bool,
}

/// Maximum |z| accepted by [`CrossCheck`].
pub const CROSS_CHECK_Z: f64 = 4.0;

impl CrossCheck {
    /// The same check for the opposite orientation of the pair.
    pub fn reversed(&self) -> Self {
        Self {
            monte_carlo: 1.0 - self.monte_carlo,
            ..*self
        }
    }
}

impl CrossCheck {
    pub fn new(reference: f64, mc: &AucEstimate) -> Self {
        let diff = (mc.value - reference).abs();
        let z = if diff == 0.0 {
            0.0
        } else if mc.std_error == 0.0 {
            f64::INFINITY
        } else {
            diff / mc.std_error
        };
        Self {
            monte_carlo: mc.value,
            std_error: mc.std_error,
            z,
            passed: z <= CROSS_CHECK_Z,
        }
    }
}

/// A pairwise comparison input to [`build_report`], with optional estimation details.
#[derive(Debug, Clone, PartialEq)]
pub struct PairInput {
    pub comparison: PairwiseComparison,
    pub estimate: Option<AucEstimate>,
    pub check: Option<CrossCheck>,
}

impl From<PairwiseComparison> for PairInput {
    fn from(comparison: PairwiseComparison) -> Self {
        Self {
            comparison,
            estimate: None,
            check: None,
        }
    }
}

/// One unordered pair, oriented winner first (`winner > loser`, `auc = Pr[loser < winner]`).
/// Undecided pairs keep input order and `decided == false`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseRow {
    pub winner: String,
    pub loser: String,
    pub decided: bool,
    pub wins_winner: u64,
    pub wins_loser: u64,
    pub indeterminate: u64,
    pub auc: f64,
    #[serde(serialize_with = "ser_extended")]
    pub wr: f64,
    pub strength: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<CrossCheck>,
}

fn ser_extended<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    crate::serde_util::extended_real::serialize(v, s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CertificateNote {
    /// Family-level guarantee over all inputs.
    Family {
        certificate: String,
        guarantees_transitivity: bool,
        key: String,
        keys: Vec<f64>,
    },
    /// Two-edge path whose AUCs alone rule out closing a loop.
    PathSufficiency {
        path: String,
        a: f64,
        b: f64,
        product: f64,
        transitive_guaranteed: bool,
        both_above_inv_sqrt2: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub dataset: DatasetInfo,
    pub options: ReportOptions,
    pub pairwise: Vec<PairwiseRow>,
    pub cycles: Vec<Cycle>,
    pub audits: Vec<CycleAudit>,
    pub certificates: Vec<CertificateNote>,
}

impl AnalysisReport {
    pub fn is_transitive(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Audits that break the loop-length bound or the cyclic product bound.
    pub fn audit_breaches(&self) -> Vec<&CycleAudit> {
        self.audits
            .iter()
            .filter(|a| !(a.bound_satisfied && a.product_satisfied))
            .collect()
    }

    pub fn failed_cross_checks(&self) -> Vec<&PairwiseRow> {
        self.pairwise
            .iter()
            .filter(|r| r.check.is_some_and(|c| !c.passed))
            .collect()
    }
}

/// Shared pipeline: tournament, loops, audits and sufficiency notes from
/// pairwise comparisons keyed `(i, j)`, `i < j`, with `auc = Pr[arm_i < arm_j]`.
pub fn build_report(
    dataset: DatasetInfo,
    options: ReportOptions,
    pairs: BTreeMap<(usize, usize), PairInput>,
    certificate: Option<&TransitivityCertificate>,
) -> Result<AnalysisReport, TrialIoError> {
    let labels: Vec<String> = dataset.arms.iter().map(|a| a.label.clone()).collect();
    let comparisons = pairs.iter().map(|(&k, p)| (k, p.comparison)).collect();
    let graph = build_tournament(labels.clone(), &comparisons, options.tie_epsilon)?;
    let loops = enumerate_cycles(&graph, options.max_loop)?;
    let audits = loops.cycles.iter().map(audit_cycle).collect();

    let pairwise = pairs
        .iter()
        .map(|(&(i, j), p)| {
            let (w, l, c, decided) = if graph.edge(i, j).is_some() {
                (j, i, p.comparison, true)
            } else if graph.edge(j, i).is_some() {
                (i, j, p.comparison.reversed(), true)
            } else {
                (i, j, p.comparison.reversed(), false)
            };
            PairwiseRow {
                winner: labels[w].clone(),
                loser: labels[l].clone(),
                decided,
                wins_winner: c.wins_second,
                wins_loser: c.wins_first,
                indeterminate: c.indeterminate,
                auc: c.auc,
                wr: c.wr,
                strength: c.strength.to_string(),
                method: p.estimate.map(|e| e.method.to_string()),
                std_error: p.estimate.map(|e| e.std_error),
                check: p.check.map(|k| if w == j { k } else { k.reversed() }),
            }
        })
        .collect();

    let mut certificates = Vec::new();
    if let Some(cert) = certificate {
        certificates.push(CertificateNote::Family {
            certificate: cert.kind.as_str().to_string(),
            guarantees_transitivity: cert.guarantees_transitivity(),
            key: cert.kind.key_name().to_string(),
            keys: cert.keys.clone(),
        });
    }
    certificates.extend(
        path_sufficiency(&graph)
            .into_iter()
            .filter(|p| p.flags.transitive_guaranteed)
            .map(|p| CertificateNote::PathSufficiency {
                path: p.path,
                a: p.flags.a,
                b: p.flags.b,
                product: p.flags.product,
                transitive_guaranteed: p.flags.transitive_guaranteed,
                both_above_inv_sqrt2: p.flags.both_above_inv_sqrt2,
            }),
    );

    Ok(AnalysisReport {
        dataset,
        options,
        pairwise,
        cycles: loops.cycles,
        audits,
        certificates,
    })
}

/// Censored comparisons for every pair of arms, then [`build_report`].
/// `max_loop` defaults to the arm count.
pub fn analyze_dataset(
    dataset: &TrialDataset,
    sha256: Option<String>,
    tie_epsilon: f64,
    max_loop: Option<usize>,
) -> Result<AnalysisReport, TrialIoError> {
    let arms = dataset.arms();
    let mut pairs = BTreeMap::new();
    for i in 0..arms.len() {
        for j in i + 1..arms.len() {
            let c = censored_comparison(&arms[i], &arms[j]).map_err(|source| {
                TrialIoError::Comparison {
                    first: arms[i].label().to_string(),
                    second: arms[j].label().to_string(),
                    source,
                }
            })?;
            pairs.insert((i, j), PairInput::from(c));
        }
    }
    let options = ReportOptions::new(tie_epsilon, max_loop.unwrap_or(arms.len()).max(3));
    build_report(
        DatasetInfo::from_trial(dataset, sha256),
        options,
        pairs,
        None,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Self::Text),
            "csv" => Ok(Self::Csv),
            "json" | "json_tree" => Ok(Self::Json),
            other => Err(format!(
                "unknown format `{other}` (expected text, csv or json)"
            )),
        }
    }
}

/// `v` to 6 significant digits; `inf` for infinite values.
pub fn fmt_sig6(v: f64) -> String {
    if let Some(t) = fmt_inf(v) {
        return t.to_string();
    }
    if v == 0.0 {
        return "0.00000".to_string();
    }
    let decimals = |mag: i32| (5 - mag).max(0) as usize;
    let mag = v.abs().log10().floor() as i32;
    let s = format!("{:.*}", decimals(mag), v);
    // Rounding can carry into the next decade (9.999999 -> 10.00000).
    let rounded: f64 = s.parse().expect("formatted float parses");
    let new_mag = rounded.abs().log10().floor() as i32;
    if new_mag > mag {
        format!("{:.*}", decimals(new_mag), v)
    } else {
        s
    }
}

pub fn fmt_auc(v: f64) -> String {
    format!("{v:.8}")
}

/// Shortest round-trip text for CSV and other machine-read output.
fn fmt_exact(v: f64) -> String {
    match fmt_inf(v) {
        Some(t) => t.to_string(),
        None => format!("{v}"),
    }
}

pub const CSV_HEADER: &str =
    "winner,loser,relation,wins_winner,wins_loser,indeterminate,auc,wr,strength,method,std_error,in_cycles";

pub fn render_report(report: &AnalysisReport, format: ReportFormat, styled: bool) -> String {
    match format {
        ReportFormat::Text => render_text(report, styled),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => render_json(report),
    }
}

pub fn render_json(report: &AnalysisReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn render_csv(report: &AnalysisReport) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(','))
        .expect("in-memory write");
    for row in &report.pairwise {
        let in_cycles = report
            .cycles
            .iter()
            .filter(|c| cycle_uses(c, &row.loser, &row.winner))
            .count();
        w.write_record([
            row.winner.clone(),
            row.loser.clone(),
            if row.decided { ">" } else { "=" }.to_string(),
            row.wins_winner.to_string(),
            row.wins_loser.to_string(),
            row.indeterminate.to_string(),
            fmt_exact(row.auc),
            fmt_exact(row.wr),
            row.strength.clone(),
            row.method.clone().unwrap_or_default(),
            row.std_error.map(fmt_exact).unwrap_or_default(),
            in_cycles.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 fields")
}

fn cycle_uses(cycle: &Cycle, from: &str, to: &str) -> bool {
    let n = cycle.nodes.len();
    (0..n).any(|k| cycle.nodes[k] == from && cycle.nodes[(k + 1) % n] == to)
}

fn table(rows: &[Vec<String>], right_align_from: usize) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::from(" ");
        for (c, cell) in row.iter().enumerate() {
            line.push(' ');
            if c >= right_align_from {
                let _ = write!(line, "{cell:>w$}", w = widths[c]);
            } else {
                let _ = write!(line, "{cell:<w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

pub fn render_text(report: &AnalysisReport, styled: bool) -> String {
    let heading = |s: &str| {
        if styled {
            format!("\x1b[1m{s}\x1b[0m\n")
        } else {
            format!("{s}\n")
        }
    };
    let mut out = String::new();
    let d = &report.dataset;
    out += &heading(&format!("Dataset: {} ({})", d.name, d.kind));
    if let Some(sha) = &d.sha256 {
        let _ = writeln!(out, "  sha256: {sha}");
    }
    let o = &report.options;
    let _ = write!(
        out,
        "  tie_epsilon: {}  max_loop: {}",
        o.tie_epsilon, o.max_loop
    );
    if let Some(m) = &o.method {
        let _ = write!(out, "  method: {m}");
    }
    if let Some(s) = o.seed {
        let _ = write!(out, "  seed: {s}");
    }
    if let Some(n) = o.samples {
        let _ = write!(out, "  samples: {n}");
    }
    let _ = writeln!(out, "  version: {}", o.tool_version);

    let mut arm_rows = vec![];
    for a in &d.arms {
        let mut row = vec![a.label.clone()];
        if let (Some(n), Some(e)) = (a.records, a.events) {
            row.push(format!("n={n}"));
            row.push(format!("events={e}"));
        }
        if let Some(s) = &a.spec {
            row.push(s.clone());
        }
        if let Some(m) = a.mean {
            row.push(format!("mean={}", fmt_sig6(m)));
        }
        arm_rows.push(row);
    }
    out += &table(&arm_rows, usize::MAX);

    out.push('\n');
    out += &heading("Pairwise comparisons");
    let with_counts = report
        .pairwise
        .iter()
        .any(|r| r.wins_winner + r.wins_loser > 0);
    let with_se = report
        .pairwise
        .iter()
        .any(|r| r.std_error.is_some_and(|s| s > 0.0));
    let with_check = report.pairwise.iter().any(|r| r.check.is_some());
    let mut head: Vec<String> = vec!["pair".into()];
    if with_counts {
        head.extend(["wins".into(), "losses".into(), "indet.".into()]);
    }
    head.extend(["WR".into(), "AUC".into()]);
    if with_se {
        head.push("std.err".into());
    }
    if with_check {
        head.push("MC".into());
        head.push("z".into());
    }
    head.push("strength".into());
    let mut rows = vec![head];
    for r in &report.pairwise {
        let rel = if r.decided { ">" } else { "=" };
        let mut row = vec![format!("{} {rel} {}", r.winner, r.loser)];
        if with_counts {
            row.extend([
                r.wins_winner.to_string(),
                r.wins_loser.to_string(),
                r.indeterminate.to_string(),
            ]);
        }
        row.extend([fmt_sig6(r.wr), fmt_auc(r.auc)]);
        if with_se {
            row.push(r.std_error.map(fmt_sig6).unwrap_or_default());
        }
        if with_check {
            match r.check {
                Some(c) => {
                    row.push(fmt_auc(c.monte_carlo));
                    row.push(format!("{:.2}{}", c.z, if c.passed { "" } else { " FAIL" }));
                }
                None => row.extend([String::new(), String::new()]),
            }
        }
        row.push(r.strength.clone());
        rows.push(row);
    }
    out += &table(&rows, 1);

    out.push('\n');
    if report.cycles.is_empty() {
        out += &heading("No non-transitive loops detected.");
    } else {
        out += &heading(&format!(
            "Non-transitive loops (length 3..={}): {}",
            o.max_loop,
            report.cycles.len()
        ));
        let mut rows = vec![vec![
            "loop".to_string(),
            "length".into(),
            "min AUC".into(),
            "bound".into(),
            "AUC product".into(),
            "audit".into(),
        ]];
        for a in &report.audits {
            let verdict = match (a.bound_satisfied, a.product_satisfied) {
                (true, true) => "ok".to_string(),
                (false, _) => "FAIL: min AUC above bound".to_string(),
                (true, false) => "FAIL: product above 1/4".to_string(),
            };
            rows.push(vec![
                a.path.clone(),
                a.length.to_string(),
                fmt_auc(a.min_auc),
                fmt_auc(a.bound),
                fmt_auc(a.auc_product),
                verdict,
            ]);
        }
        out += &table(&rows, 1);
    }

    if !report.certificates.is_empty() {
        out.push('\n');
        out += &heading("Certificates");
        for note in &report.certificates {
            match note {
                CertificateNote::Family {
                    certificate,
                    guarantees_transitivity,
                    key,
                    keys,
                } => {
                    if *guarantees_transitivity {
                        let keys: Vec<String> = keys.iter().map(|k| fmt_sig6(*k)).collect();
                        let _ = writeln!(
                            out,
                            "  {certificate}: ordered by {key} [{}]",
                            keys.join(", ")
                        );
                    } else {
                        let _ = writeln!(
                            out,
                            "  {certificate}: no family-level transitivity guarantee"
                        );
                    }
                }
                CertificateNote::PathSufficiency { path, product, .. } => {
                    let _ = writeln!(
                        out,
                        "  {path}: AUC product {} >= 1/2, no loop through this path",
                        fmt_auc(*product)
                    );
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparison::exact_auc_discrete;
    use crate::comparison::DiscreteDistribution;

    const FOUR_ROWS: &str = "arm,time,event\nA,1.5,1\nB,2,0\nA,3,0\nB,0.5,1\n";

    #[test]
    fn loads_small_file() {
        let d = parse_dataset("t", FOUR_ROWS.as_bytes()).unwrap();
        assert_eq!(d.arms().len(), 2);
        assert_eq!(d.arms()[0].label(), "A");
        assert_eq!(d.arms()[0].len(), 2);
        assert_eq!(d.arms()[0].records()[1].time(), 3.0);
        assert!(!d.arms()[1].records()[0].is_event());
    }

    #[test]
    fn row_errors_name_line_and_field() {
        let err = parse_dataset("t", b"arm,time,event\nB,1,1\nA,-1,1\n").unwrap_err();
        assert!(
            matches!(
                err,
                TrialIoError::Row {
                    line: 3,
                    field: "time",
                    ..
                }
            ),
            "{err}"
        );
        assert!(err.to_string().contains("line 3"));
        let err = parse_dataset("t", b"arm,time,event\nA,x,1\nB,1,1\n").unwrap_err();
        assert!(matches!(
            err,
            TrialIoError::Row {
                line: 2,
                field: "time",
                ..
            }
        ));
        let err = parse_dataset("t", b"arm,time,event\nA,1,2\nB,1,1\n").unwrap_err();
        assert!(matches!(err, TrialIoError::Row { field: "event", .. }));
        let err = parse_dataset("t", b"arm,time,event\n,1,1\nB,1,1\n").unwrap_err();
        assert!(matches!(err, TrialIoError::Row { field: "arm", .. }));
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            parse_dataset("t", b"arm,time\nA,1\n").unwrap_err(),
            TrialIoError::MissingColumn("event")
        ));
        assert!(matches!(
            parse_dataset("t", b"arm,time,event,time\nA,1,1,1\n").unwrap_err(),
            TrialIoError::DuplicateHeader(_)
        ));
        assert!(matches!(
            parse_dataset("t", b"arm,time,event\nA,1,1\narm,time,event\nB,1,1\n").unwrap_err(),
            TrialIoError::DuplicateHeader(_)
        ));
        assert!(matches!(
            parse_dataset("t", b"arm,time,event\nA,1,1\nA,2,1\n").unwrap_err(),
            TrialIoError::TooFewArms(1)
        ));
        assert!(matches!(
            parse_dataset("t", b"").unwrap_err(),
            TrialIoError::MissingColumn(_)
        ));
        let arms = vec![
            Arm::new("A", vec![]).unwrap(),
            Arm::new("B", vec![]).unwrap(),
        ];
        assert!(matches!(
            TrialDataset::new("t", arms).unwrap_err(),
            TrialIoError::EmptyArm(_)
        ));
        assert!(matches!(
            load_dataset("/nonexistent/file.csv").unwrap_err(),
            TrialIoError::Io { .. }
        ));
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(fmt_sig6(0.58 / 0.42), "1.38095");
        assert_eq!(fmt_sig6(1.5), "1.50000");
        assert_eq!(fmt_sig6(7.0 / 3.0), "2.33333");
        assert_eq!(fmt_sig6(12.345678), "12.3457");
        assert_eq!(fmt_sig6(9.9999996), "10.0000");
        assert_eq!(fmt_sig6(0.0123456789), "0.0123457");
        assert_eq!(fmt_sig6(f64::INFINITY), "inf");
        assert_eq!(fmt_auc(0.58), "0.58000000");
    }

    fn example_one_report() -> AnalysisReport {
        let x = DiscreteDistribution::new([(1.0, 0.4), (4.0, 0.6)]).unwrap();
        let y = DiscreteDistribution::new([(2.0, 0.7), (5.0, 0.3)]).unwrap();
        let z = DiscreteDistribution::point_mass(3.0).unwrap();
        let auc = |a: &DiscreteDistribution, b: &DiscreteDistribution| {
            PairInput::from(PairwiseComparison::from_auc(exact_auc_discrete(a, b)).unwrap())
        };
        let pairs = BTreeMap::from([
            ((0, 1), auc(&x, &y)),
            ((0, 2), auc(&x, &z)),
            ((1, 2), auc(&y, &z)),
        ]);
        let arm = |l: &str| ArmInfo {
            label: l.into(),
            records: None,
            events: None,
            spec: None,
            mean: None,
        };
        let info = DatasetInfo {
            name: "ex".into(),
            kind: "distributions".into(),
            sha256: None,
            arms: vec![arm("x"), arm("y"), arm("z")],
        };
        build_report(info, ReportOptions::new(0.0, 3), pairs, None).unwrap()
    }

    #[test]
    fn renders_example_one() {
        let r = example_one_report();
        // Orientation check: x < y with AUC .58 renders as the row `y > x`.
        let xy = r
            .pairwise
            .iter()
            .find(|p| (p.auc - 0.58).abs() < 1e-12)
            .expect("x-y row");
        assert_eq!((xy.winner.as_str(), xy.loser.as_str()), ("y", "x"));
        let text = render_text(&r, false);
        assert!(text.contains("0.58000000"), "{text}");
        assert!(text.contains("1.38095"));
        assert!(text.contains("y > x"));
        assert!(text.contains("x < y < z < x"));
        assert_eq!(r.cycles.len(), 1);
        assert!(r.audit_breaches().is_empty());
        assert_eq!(render_text(&r, false), text);
        assert!(!text.contains('\x1b'));
        assert!(render_text(&r, true).contains('\x1b'));
    }

    #[test]
    fn csv_round_trips_values() {
        let r = example_one_report();
        let csv_text = render_csv(&r);
        let mut rd = csv::Reader::from_reader(csv_text.as_bytes());
        assert_eq!(
            rd.headers().unwrap().iter().collect::<Vec<_>>().join(","),
            CSV_HEADER
        );
        let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 3);
        for (rec, row) in rows.iter().zip(&r.pairwise) {
            let auc: f64 = rec[6].parse().unwrap();
            let wr: f64 = rec[7].parse().unwrap();
            assert_eq!(auc, row.auc);
            assert_eq!(wr, row.wr);
            assert!((wr - auc / (1.0 - auc)).abs() < 1e-12);
            assert_eq!(&rec[11], "1");
        }
    }

    #[test]
    fn json_has_stable_top_level_keys() {
        let j = render_json(&example_one_report());
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        let mut expected = vec![
            "audits",
            "certificates",
            "cycles",
            "dataset",
            "options",
            "pairwise",
        ];
        expected.sort();
        assert_eq!(keys, expected);
        let order: Vec<usize> = [
            "\"dataset\"",
            "\"options\"",
            "\"pairwise\"",
            "\"cycles\"",
            "\"audits\"",
            "\"certificates\"",
        ]
        .iter()
        .map(|k| j.find(k).unwrap())
        .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn transitive_and_single_pair_reports() {
        let d = parse_dataset("t", FOUR_ROWS.as_bytes()).unwrap();
        let r = analyze_dataset(&d, None, 0.0, None).unwrap();
        assert_eq!(r.pairwise.len(), 1);
        assert_eq!(r.options.max_loop, 3);
        let text = render_text(&r, false);
        assert!(text.contains("No non-transitive loops detected."));
        // A(1.5 event) vs B(2 censored): B wins. A(1.5 event) vs B(0.5 event): A wins.
        // A(3 censored) vs B(0.5 event): A wins. A(3 censored) vs B(2 censored): indeterminate.
        let row = &r.pairwise[0];
        assert_eq!(
            (
                row.winner.as_str(),
                row.wins_winner,
                row.wins_loser,
                row.indeterminate
            ),
            ("A", 2, 1, 1)
        );
    }
}
