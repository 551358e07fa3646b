//! Pairwise comparison primitives: observations, finite distributions, and the
//! AUC / win-ratio statistics computed between two groups.
//!
//! Orientation convention used throughout the crate: a comparison of `first`
//! against `second` reports `auc = Pr[first < second]`, so an AUC above 1/2
//! means the second group tends to produce larger values (lives longer, rolls
//! higher). `wr = auc / (1 - auc)` is the matching win ratio of second over
//! first, equal to `wins_second / wins_first` when built from counts.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Golden-ratio conjugate `(sqrt(5) - 1) / 2`, the upper edge of the weak band.
pub const GOLDEN_AUC: f64 = 0.618_033_988_749_894_8;
/// `1 / sqrt(2)`, the upper edge of the moderate band.
pub const INV_SQRT2_AUC: f64 = std::f64::consts::FRAC_1_SQRT_2;
/// Upper edge of the medium band.
pub const THREE_QUARTERS_AUC: f64 = 0.75;

/// Tolerance on the total mass of a [`DiscreteDistribution`].
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Arms above this many cross pairs are counted in parallel.
const PARALLEL_PAIR_THRESHOLD: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComparisonError {
    #[error("AUC {0} outside [0, 1]")]
    AucOutOfRange(f64),
    #[error("win ratio {0} is negative or NaN")]
    InvalidWinRatio(f64),
    #[error("event time {0} must be finite and non-negative")]
    InvalidTime(f64),
    #[error("arm label must be non-empty")]
    EmptyLabel,
    #[error("sample `{0}` is empty")]
    EmptySample(&'static str),
    #[error("all {pairs} cross pairs are tied; AUC is undefined")]
    AllTied { pairs: u64 },
    #[error("none of the {pairs} cross pairs is determinate under censoring")]
    NoDeterminatePairs { pairs: u64 },
    #[error("invalid discrete distribution: {0}")]
    InvalidDistribution(String),
}

/// One time-to-event observation. `event == false` means censored at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    time: f64,
    event: bool,
}

impl EventRecord {
    pub fn new(time: f64, event: bool) -> Result<Self, ComparisonError> {
        if !time.is_finite() || time < 0.0 {
            return Err(ComparisonError::InvalidTime(time));
        }
        Ok(Self { time, event })
    }

    pub fn event(time: f64) -> Result<Self, ComparisonError> {
        Self::new(time, true)
    }

    pub fn censored(time: f64) -> Result<Self, ComparisonError> {
        Self::new(time, false)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn is_event(&self) -> bool {
        self.event
    }
}

/// A labelled treatment arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    label: String,
    records: Vec<EventRecord>,
}

impl Arm {
    pub fn new(
        label: impl Into<String>,
        records: Vec<EventRecord>,
    ) -> Result<Self, ComparisonError> {
        let label = label.into();
        if label.is_empty() {
            return Err(ComparisonError::EmptyLabel);
        }
        Ok(Self { label, records })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub(crate) fn push(&mut self, record: EventRecord) {
        self.records.push(record);
    }
}

/// Finite-support probability mass function with strictly increasing atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteDistribution {
    /// Builds a pmf from `(value, prob)` pairs. Zero-mass atoms are dropped,
    /// repeated values are merged, and the total mass must be 1 within 1e-12.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, ComparisonError> {
        let mut raw: Vec<(f64, f64)> = Vec::new();
        for (value, prob) in atoms {
            if !value.is_finite() {
                return Err(ComparisonError::InvalidDistribution(format!(
                    "atom value {value} is not finite"
                )));
            }
            if !prob.is_finite() || prob < 0.0 {
                return Err(ComparisonError::InvalidDistribution(format!(
                    "probability {prob} at {value} is negative or not finite"
                )));
            }
            if prob > 0.0 {
                raw.push((value, prob));
            }
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (value, prob) in raw {
            match merged.last_mut() {
                Some(last) if last.0 == value => last.1 += prob,
                _ => merged.push((value, prob)),
            }
        }
        if merged.is_empty() {
            return Err(ComparisonError::InvalidDistribution(
                "no atom with positive mass".into(),
            ));
        }
        let total: f64 = merged.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(ComparisonError::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { atoms: merged })
    }

    pub fn point_mass(value: f64) -> Result<Self, ComparisonError> {
        Self::new([(value, 1.0)])
    }

    /// Uniform distribution over the given faces (repeats allowed), as for a die.
    pub fn from_faces(faces: &[f64]) -> Result<Self, ComparisonError> {
        if faces.is_empty() {
            return Err(ComparisonError::EmptySample("faces"));
        }
        let w = 1.0 / faces.len() as f64;
        let mut counts: Vec<(f64, usize)> = Vec::new();
        let mut sorted = faces.to_vec();
        sorted.sort_by(f64::total_cmp);
        for v in sorted {
            match counts.last_mut() {
                Some(last) if last.0 == v => last.1 += 1,
                _ => counts.push((v, 1)),
            }
        }
        Self::new(counts.into_iter().map(|(v, c)| (v, c as f64 * w)))
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(v, p)| v * p).sum()
    }

    /// `Pr[X < x]`.
    pub fn cdf_below(&self, x: f64) -> f64 {
        self.atoms.iter().take_while(|a| a.0 < x).map(|a| a.1).sum()
    }

    /// Maps every atom through `f`, which must be strictly monotone.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self, ComparisonError> {
        Self::new(self.atoms.iter().map(|&(v, p)| (f(v), p)))
    }
}

/// Strength bands of a pairwise comparison, keyed by AUC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrengthBand {
    Weak,
    Moderate,
    Medium,
    Strong,
}

impl StrengthBand {
    /// `(lower, upper)` AUC edges. Weak is closed on both ends; the others are
    /// open below and closed above.
    pub fn auc_bounds(self) -> (f64, f64) {
        match self {
            StrengthBand::Weak => (0.5, GOLDEN_AUC),
            StrengthBand::Moderate => (GOLDEN_AUC, INV_SQRT2_AUC),
            StrengthBand::Medium => (INV_SQRT2_AUC, THREE_QUARTERS_AUC),
            StrengthBand::Strong => (THREE_QUARTERS_AUC, 1.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StrengthBand::Weak => "Weak",
            StrengthBand::Moderate => "Moderate",
            StrengthBand::Medium => "Medium",
            StrengthBand::Strong => "Strong",
        }
    }
}

impl fmt::Display for StrengthBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Strength classification of one AUC, with the band edges it fell between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrengthClass {
    pub band: StrengthBand,
    pub auc_lower: f64,
    pub auc_upper: f64,
    /// The input AUC was below 1/2 and was classified through `1 - auc`.
    pub reversed: bool,
}

impl fmt::Display for StrengthClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.reversed {
            write!(f, "{} (reversed)", self.band)
        } else {
            write!(f, "{}", self.band)
        }
    }
}

/// Summary of one ordered comparison `first` vs `second`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub wins_first: u64,
    pub wins_second: u64,
    pub indeterminate: u64,
    /// `Pr[first < second]`.
    pub auc: f64,
    /// `auc / (1 - auc)`; `+inf` when `auc == 1`.
    #[serde(with = "crate::serde_util::extended_real")]
    pub wr: f64,
    pub strength: StrengthClass,
}

impl PairwiseComparison {
    /// Builds a comparison from exact win counts. Fails when no pair is decided.
    pub fn from_counts(wins_first: u64, wins_second: u64, indeterminate: u64) -> Option<Self> {
        let decided = wins_first + wins_second;
        if decided == 0 {
            return None;
        }
        let auc = wins_second as f64 / decided as f64;
        let wr = if wins_first == 0 {
            f64::INFINITY
        } else {
            wins_second as f64 / wins_first as f64
        };
        Some(Self {
            wins_first,
            wins_second,
            indeterminate,
            auc,
            wr,
            strength: classify_strength(auc),
        })
    }

    /// Builds a count-free comparison from an AUC (distribution-level analyses).
    pub fn from_auc(auc: f64) -> Result<Self, ComparisonError> {
        Ok(Self {
            wins_first: 0,
            wins_second: 0,
            indeterminate: 0,
            auc,
            wr: wr_from_auc(auc)?,
            strength: classify_strength(auc),
        })
    }

    /// The same comparison viewed from the other side.
    pub fn reversed(&self) -> Self {
        let auc = 1.0 - self.auc;
        let wr = if self.wins_first + self.wins_second > 0 {
            if self.wins_second == 0 {
                f64::INFINITY
            } else {
                self.wins_first as f64 / self.wins_second as f64
            }
        } else {
            wr_from_auc(auc).unwrap_or(f64::NAN)
        };
        Self {
            wins_first: self.wins_second,
            wins_second: self.wins_first,
            indeterminate: self.indeterminate,
            auc,
            wr,
            strength: classify_strength(auc),
        }
    }

    pub fn total_pairs(&self) -> u64 {
        self.wins_first + self.wins_second + self.indeterminate
    }
}

/// `auc / (1 - auc)`, with `auc == 1` mapping to `+inf`.
pub fn wr_from_auc(auc: f64) -> Result<f64, ComparisonError> {
    if !(0.0..=1.0).contains(&auc) {
        return Err(ComparisonError::AucOutOfRange(auc));
    }
    if auc == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(auc / (1.0 - auc))
}

/// `wr / (1 + wr)`, with `+inf` mapping to 1.
pub fn auc_from_wr(wr: f64) -> Result<f64, ComparisonError> {
    if wr.is_nan() || wr < 0.0 {
        return Err(ComparisonError::InvalidWinRatio(wr));
    }
    if wr.is_infinite() {
        return Ok(1.0);
    }
    Ok(wr / (1.0 + wr))
}

/// `Pr[first < second] + Pr[first == second] / 2` by enumerating atom pairs.
pub fn exact_auc_discrete(first: &DiscreteDistribution, second: &DiscreteDistribution) -> f64 {
    let mut below = 0.0;
    let mut tied = 0.0;
    for &(u, p) in first.atoms() {
        for &(v, q) in second.atoms() {
            match u.total_cmp(&v) {
                Ordering::Less => below += p * q,
                Ordering::Equal => tied += p * q,
                Ordering::Greater => {}
            }
        }
    }
    (below + 0.5 * tied).clamp(0.0, 1.0)
}

/// Empirical comparison of two uncensored samples. Exact ties are
/// indeterminate and excluded from the AUC.
pub fn empirical_comparison_uncensored(
    first: &[f64],
    second: &[f64],
) -> Result<PairwiseComparison, ComparisonError> {
    if first.is_empty() {
        return Err(ComparisonError::EmptySample("first"));
    }
    if second.is_empty() {
        return Err(ComparisonError::EmptySample("second"));
    }
    let mut sorted = second.to_vec();
    sorted.sort_by(f64::total_cmp);
    let count = |&a: &f64| -> (u64, u64) {
        let below = sorted.partition_point(|&b| b < a) as u64;
        let not_above = sorted.partition_point(|&b| b <= a) as u64;
        (below, sorted.len() as u64 - not_above)
    };
    let (wins_first, wins_second) = sum_pairs(first, count);
    let pairs = first.len() as u64 * second.len() as u64;
    let indeterminate = pairs - wins_first - wins_second;
    PairwiseComparison::from_counts(wins_first, wins_second, indeterminate)
        .ok_or(ComparisonError::AllTied { pairs })
}

/// Censoring-aware comparison of two arms.
///
/// A pair `(a, b)` is a win for `first` when `a.time > b.time` and `b` had an
/// event, a win for `second` when `b.time > a.time` and `a` had an event, and
/// indeterminate otherwise (including equal times).
pub fn censored_comparison(
    first: &Arm,
    second: &Arm,
) -> Result<PairwiseComparison, ComparisonError> {
    if first.is_empty() {
        return Err(ComparisonError::EmptySample("first"));
    }
    if second.is_empty() {
        return Err(ComparisonError::EmptySample("second"));
    }
    let mut all_times: Vec<f64> = second.records().iter().map(|r| r.time).collect();
    all_times.sort_by(f64::total_cmp);
    let mut event_times: Vec<f64> = second
        .records()
        .iter()
        .filter(|r| r.event)
        .map(|r| r.time)
        .collect();
    event_times.sort_by(f64::total_cmp);
    let count = |a: &EventRecord| -> (u64, u64) {
        let first_wins = event_times.partition_point(|&t| t < a.time) as u64;
        let second_wins = if a.event {
            (all_times.len() - all_times.partition_point(|&t| t <= a.time)) as u64
        } else {
            0
        };
        (first_wins, second_wins)
    };
    let (wins_first, wins_second) = sum_pairs(first.records(), count);
    let pairs = first.len() as u64 * second.len() as u64;
    let indeterminate = pairs - wins_first - wins_second;
    PairwiseComparison::from_counts(wins_first, wins_second, indeterminate)
        .ok_or(ComparisonError::NoDeterminatePairs { pairs })
}

fn sum_pairs<T: Sync>(items: &[T], count: impl Fn(&T) -> (u64, u64) + Sync) -> (u64, u64) {
    let add = |x: (u64, u64), y: (u64, u64)| (x.0 + y.0, x.1 + y.1);
    if items.len() * 64 >= PARALLEL_PAIR_THRESHOLD {
        items.par_iter().map(&count).reduce(|| (0, 0), add)
    } else {
        items.iter().map(&count).fold((0, 0), add)
    }
}

/// Places an AUC in its strength band. AUCs below 1/2 are classified through
/// their mirror `1 - auc` and flagged as reversed.
pub fn classify_strength(auc: f64) -> StrengthClass {
    let reversed = auc < 0.5;
    let a = if reversed { 1.0 - auc } else { auc };
    let band = if a <= GOLDEN_AUC {
        StrengthBand::Weak
    } else if a <= INV_SQRT2_AUC {
        StrengthBand::Moderate
    } else if a <= THREE_QUARTERS_AUC {
        StrengthBand::Medium
    } else {
        StrengthBand::Strong
    };
    let (auc_lower, auc_upper) = band.auc_bounds();
    StrengthClass {
        band,
        auc_lower,
        auc_upper,
        reversed,
    }
}
