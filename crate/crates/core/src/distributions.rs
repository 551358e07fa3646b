//! Parametric distributions with affine transform stacks, their AUCs by
//! quadrature or Monte Carlo, and family-level transitivity certificates.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{self as sd, Continuous, ContinuousCDF};
use thiserror::Error;

use crate::comparison::{exact_auc_discrete, ComparisonError, DiscreteDistribution};
use crate::quadrature;

/// Subinterval budget for [`auc_quadrature`].
pub const QUADRATURE_MAX_INTERVALS: usize = 4000;
/// Monte Carlo pairs are drawn in blocks of this size, one RNG stream per block.
const MC_BLOCK: usize = 1 << 16;
/// Smallest sample size accepted by [`auc_monte_carlo`].
pub const MC_MIN_SAMPLES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("invalid parameter for {family}: {detail}")]
    InvalidParameter {
        family: &'static str,
        detail: String,
    },
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("cannot parse distribution `{input}` at byte {pos}: {message}")]
    Parse {
        input: String,
        pos: usize,
        message: String,
    },
    #[error("{0} has atoms; quadrature needs two continuous distributions")]
    NotContinuous(String),
    #[error("quadrature did not reach {requested:e} (achieved error bound {achieved:e})")]
    QuadratureDidNotConverge { requested: f64, achieved: f64 },
    #[error("absolute tolerance {0} must be positive")]
    BadTolerance(f64),
    #[error("sample size {n} below the minimum {min}")]
    TooFewSamples { n: usize, min: usize },
    #[error("at least {min} distributions required, got {got}")]
    TooFewSpecs { min: usize, got: usize },
    #[error(transparent)]
    Discrete(#[from] ComparisonError),
}

fn invalid(family: &'static str, detail: impl Into<String>) -> DistributionError {
    DistributionError::InvalidParameter {
        family,
        detail: detail.into(),
    }
}

/// Base distribution families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Normal { mu: f64, sigma: f64 },
    LogNormal { mu: f64, sigma: f64 },
    ChiSquared { df: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Bernoulli { p: f64 },
    Discrete { dist: DiscreteDistribution },
}

impl Family {
    fn validate(&self) -> Result<(), DistributionError> {
        let finite = |family, name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(family, format!("{name} = {v} is not finite")))
            }
        };
        match *self {
            Family::Normal { mu, sigma } | Family::LogNormal { mu, sigma } => {
                let family = self.name();
                finite(family, "mu", mu)?;
                finite(family, "sigma", sigma)?;
                if sigma <= 0.0 {
                    return Err(invalid(family, format!("sigma = {sigma} must be > 0")));
                }
            }
            Family::ChiSquared { df } => {
                finite("chisq", "df", df)?;
                if df < 1.0 {
                    return Err(invalid("chisq", format!("df = {df} must be >= 1")));
                }
            }
            Family::Uniform { lo, hi } => {
                finite("uniform", "lo", lo)?;
                finite("uniform", "hi", hi)?;
                if lo >= hi {
                    return Err(invalid("uniform", format!("lo = {lo} must be < hi = {hi}")));
                }
            }
            Family::Exponential { rate } => {
                finite("exp", "rate", rate)?;
                if rate <= 0.0 {
                    return Err(invalid("exp", format!("rate = {rate} must be > 0")));
                }
            }
            Family::Bernoulli { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(invalid("bernoulli", format!("p = {p} outside [0, 1]")));
                }
            }
            Family::Discrete { .. } => {}
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Normal { .. } => "normal",
            Family::LogNormal { .. } => "lognormal",
            Family::ChiSquared { .. } => "chisq",
            Family::Uniform { .. } => "uniform",
            Family::Exponential { .. } => "exp",
            Family::Bernoulli { .. } => "bernoulli",
            Family::Discrete { .. } => "discrete",
        }
    }

    fn is_continuous(&self) -> bool {
        !matches!(self, Family::Bernoulli { .. } | Family::Discrete { .. })
    }

    fn symmetry_point(&self) -> Option<f64> {
        match *self {
            Family::Normal { mu, .. } => Some(mu),
            Family::Uniform { lo, hi } => Some(0.5 * (lo + hi)),
            _ => None,
        }
    }

    fn mean(&self) -> f64 {
        match self {
            Family::Normal { mu, .. } => *mu,
            Family::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Family::ChiSquared { df } => *df,
            Family::Uniform { lo, hi } => 0.5 * (lo + hi),
            Family::Exponential { rate } => 1.0 / rate,
            Family::Bernoulli { p } => *p,
            Family::Discrete { dist } => dist.mean(),
        }
    }

    fn as_discrete(&self) -> Option<DiscreteDistribution> {
        match self {
            Family::Bernoulli { p } => Some(
                DiscreteDistribution::new([(0.0, 1.0 - p), (1.0, *p)])
                    .expect("validated bernoulli"),
            ),
            Family::Discrete { dist } => Some(dist.clone()),
            _ => None,
        }
    }
}

/// Continuous base families backed by `statrs`.
enum Base {
    Normal(sd::Normal),
    LogNormal(sd::LogNormal),
    ChiSquared(sd::ChiSquared),
    Uniform(sd::Uniform),
    Exponential(sd::Exp),
}

impl Base {
    fn of(family: &Family) -> Option<Self> {
        Some(match *family {
            Family::Normal { mu, sigma } => Base::Normal(sd::Normal::new(mu, sigma).ok()?),
            Family::LogNormal { mu, sigma } => Base::LogNormal(sd::LogNormal::new(mu, sigma).ok()?),
            Family::ChiSquared { df } => Base::ChiSquared(sd::ChiSquared::new(df).ok()?),
            Family::Uniform { lo, hi } => Base::Uniform(sd::Uniform::new(lo, hi).ok()?),
            Family::Exponential { rate } => Base::Exponential(sd::Exp::new(rate).ok()?),
            _ => return None,
        })
    }

    fn cdf(&self, x: f64) -> f64 {
        match self {
            Base::Normal(d) => d.cdf(x),
            Base::LogNormal(d) => d.cdf(x),
            Base::ChiSquared(d) => d.cdf(x),
            Base::Uniform(d) => d.cdf(x),
            Base::Exponential(d) => d.cdf(x),
        }
    }

    fn sf(&self, x: f64) -> f64 {
        match self {
            Base::Normal(d) => d.sf(x),
            Base::LogNormal(d) => d.sf(x),
            Base::ChiSquared(d) => d.sf(x),
            Base::Uniform(d) => d.sf(x),
            Base::Exponential(d) => d.sf(x),
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        match self {
            Base::Normal(d) => d.pdf(x),
            Base::LogNormal(d) => d.pdf(x),
            Base::ChiSquared(d) => d.pdf(x),
            Base::Uniform(d) => d.pdf(x),
            Base::Exponential(d) => d.pdf(x),
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        match self {
            Base::Normal(d) => d.inverse_cdf(u),
            Base::LogNormal(d) => d.inverse_cdf(u),
            Base::ChiSquared(d) => d.inverse_cdf(u),
            Base::Uniform(d) => d.inverse_cdf(u),
            Base::Exponential(d) => d.inverse_cdf(u),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "value", rename_all = "snake_case")]
pub enum Transform {
    Shift(f64),
    Scale(f64),
    Reflect,
}

/// A base family followed by transforms applied in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    family: Family,
    transforms: Vec<Transform>,
}

impl DistributionSpec {
    pub fn new(family: Family) -> Result<Self, DistributionError> {
        family.validate()?;
        Ok(Self {
            family,
            transforms: Vec::new(),
        })
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self, DistributionError> {
        Self::new(Family::Normal { mu, sigma })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self, DistributionError> {
        Self::new(Family::LogNormal { mu, sigma })
    }

    pub fn chi_squared(df: f64) -> Result<Self, DistributionError> {
        Self::new(Family::ChiSquared { df })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self, DistributionError> {
        Self::new(Family::Uniform { lo, hi })
    }

    pub fn exponential(rate: f64) -> Result<Self, DistributionError> {
        Self::new(Family::Exponential { rate })
    }

    pub fn bernoulli(p: f64) -> Result<Self, DistributionError> {
        Self::new(Family::Bernoulli { p })
    }

    pub fn discrete(dist: DiscreteDistribution) -> Self {
        Self {
            family: Family::Discrete { dist },
            transforms: Vec::new(),
        }
    }

    pub fn with_transform(mut self, t: Transform) -> Result<Self, DistributionError> {
        match t {
            Transform::Shift(d) if !d.is_finite() => {
                return Err(DistributionError::InvalidTransform(format!(
                    "shift {d} is not finite"
                )))
            }
            Transform::Scale(k) if !(k.is_finite() && k > 0.0) => {
                return Err(DistributionError::InvalidTransform(format!(
                    "scale {k} must be finite and > 0"
                )))
            }
            _ => {}
        }
        self.transforms.push(t);
        Ok(self)
    }

    pub fn shift(self, d: f64) -> Result<Self, DistributionError> {
        self.with_transform(Transform::Shift(d))
    }

    pub fn scale(self, k: f64) -> Result<Self, DistributionError> {
        self.with_transform(Transform::Scale(k))
    }

    pub fn reflect(self) -> Self {
        self.with_transform(Transform::Reflect)
            .expect("reflect is always valid")
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn transforms(&self) -> &[Transform] {
        &self.transforms
    }

    /// The transform stack collapsed to `x -> slope * x + offset`.
    pub fn affine(&self) -> (f64, f64) {
        self.transforms
            .iter()
            .fold((1.0, 0.0), |(m, c), t| match *t {
                Transform::Shift(d) => (m, c + d),
                Transform::Scale(k) => (m * k, c * k),
                Transform::Reflect => (-m, -c),
            })
    }

    fn apply(&self, x: f64) -> f64 {
        let (m, c) = self.affine();
        m * x + c
    }

    pub fn is_continuous(&self) -> bool {
        self.family.is_continuous()
    }

    /// Point of symmetry of the transformed density, when the base family is symmetric.
    pub fn symmetry_point(&self) -> Option<f64> {
        self.family.symmetry_point().map(|m| self.apply(m))
    }

    pub fn mean(&self) -> f64 {
        self.apply(self.family.mean())
    }

    /// The transformed pmf, for Bernoulli and discrete families.
    pub fn as_discrete(&self) -> Option<DiscreteDistribution> {
        let base = self.family.as_discrete()?;
        Some(
            base.map_values(|v| self.apply(v))
                .expect("affine maps keep a valid pmf"),
        )
    }

    fn continuous(&self) -> Option<ContinuousView> {
        let base = Base::of(&self.family)?;
        let (slope, offset) = self.affine();
        Some(ContinuousView {
            base,
            slope,
            offset,
        })
    }

    /// `Pr[X <= x]` of the transformed distribution.
    pub fn cdf(&self, x: f64) -> f64 {
        if let Some(view) = self.continuous() {
            return view.cdf(x);
        }
        let d = self
            .as_discrete()
            .expect("non-continuous families are discrete");
        d.atoms().iter().take_while(|a| a.0 <= x).map(|a| a.1).sum()
    }

    /// Density of the transformed distribution; `None` for discrete families.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        self.continuous().map(|v| v.pdf(x))
    }

    fn sample_base<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.family {
            Family::Normal { mu, sigma } => rand_distr::Normal::new(*mu, *sigma)
                .expect("validated")
                .sample(rng),
            Family::LogNormal { mu, sigma } => rand_distr::LogNormal::new(*mu, *sigma)
                .expect("validated")
                .sample(rng),
            Family::ChiSquared { df } => rand_distr::ChiSquared::new(*df)
                .expect("validated")
                .sample(rng),
            Family::Uniform { lo, hi } => rng.random_range(*lo..*hi),
            Family::Exponential { rate } => {
                rand_distr::Exp::new(*rate).expect("validated").sample(rng)
            }
            Family::Bernoulli { p } => {
                if rng.random_bool(*p) {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Discrete { dist } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(v, p) in dist.atoms() {
                    acc += p;
                    if u < acc {
                        return v;
                    }
                }
                dist.atoms().last().expect("non-empty pmf").0
            }
        }
    }

    fn draw<R: Rng + ?Sized>(&self, slope: f64, offset: f64, rng: &mut R) -> f64 {
        slope * self.sample_base(rng) + offset
    }
}

struct ContinuousView {
    base: Base,
    slope: f64,
    offset: f64,
}

impl ContinuousView {
    fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.offset) / self.slope;
        if self.slope > 0.0 {
            self.base.cdf(z)
        } else {
            self.base.sf(z)
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        self.base.pdf((x - self.offset) / self.slope) / self.slope.abs()
    }

    fn quantile(&self, u: f64) -> f64 {
        let q = if self.slope > 0.0 {
            self.base.quantile(u)
        } else {
            self.base.quantile(1.0 - u)
        };
        self.slope * q + self.offset
    }
}

/// `n` i.i.d. draws, reproducible for a given seed.
pub fn sample(spec: &DistributionSpec, n: usize, seed: u64) -> Vec<f64> {
    let (slope, offset) = spec.affine();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| spec.draw(slope, offset, &mut rng)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AucMethod {
    ExactDiscrete,
    Quadrature,
    MonteCarlo { n: usize, seed: u64 },
}

impl fmt::Display for AucMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AucMethod::ExactDiscrete => f.write_str("exact_discrete"),
            AucMethod::Quadrature => f.write_str("quadrature"),
            AucMethod::MonteCarlo { n, seed } => write!(f, "monte_carlo(n={n}, seed={seed})"),
        }
    }
}

/// `Pr[first < second]` with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: AucMethod,
}

/// `Pr[first < second] = integral of F_first(t) dG_second(t)`, integrated in
/// probability space as `integral_0^1 F_first(G_second^{-1}(u)) du` so that
/// unbounded supports and integrable density spikes need no truncation.
pub fn auc_quadrature(
    first: &DistributionSpec,
    second: &DistributionSpec,
    abs_tol: f64,
) -> Result<AucEstimate, DistributionError> {
    if !(abs_tol.is_finite() && abs_tol > 0.0) {
        return Err(DistributionError::BadTolerance(abs_tol));
    }
    let f = first
        .continuous()
        .ok_or_else(|| DistributionError::NotContinuous(first.to_string()))?;
    let g = second
        .continuous()
        .ok_or_else(|| DistributionError::NotContinuous(second.to_string()))?;
    let integrand = |u: f64| f.cdf(g.quantile(u));
    match quadrature::integrate(integrand, 0.0, 1.0, abs_tol, QUADRATURE_MAX_INTERVALS) {
        Ok(r) => Ok(AucEstimate {
            value: r.value.clamp(0.0, 1.0),
            std_error: 0.0,
            method: AucMethod::Quadrature,
        }),
        Err(r) => Err(DistributionError::QuadratureDidNotConverge {
            requested: abs_tol,
            achieved: r.error,
        }),
    }
}

/// Deterministic AUC for any pair: exact enumeration when both are discrete,
/// a finite sum when one is, quadrature otherwise. Ties get half credit.
pub fn auc_deterministic(
    first: &DistributionSpec,
    second: &DistributionSpec,
    abs_tol: f64,
) -> Result<AucEstimate, DistributionError> {
    let exact = |value: f64| AucEstimate {
        value: value.clamp(0.0, 1.0),
        std_error: 0.0,
        method: AucMethod::ExactDiscrete,
    };
    match (first.as_discrete(), second.as_discrete()) {
        (Some(x), Some(y)) => Ok(exact(exact_auc_discrete(&x, &y))),
        (Some(x), None) => {
            let g = second.continuous().expect("non-discrete is continuous");
            Ok(exact(
                x.atoms().iter().map(|&(v, p)| p * (1.0 - g.cdf(v))).sum(),
            ))
        }
        (None, Some(y)) => {
            let f = first.continuous().expect("non-discrete is continuous");
            Ok(exact(y.atoms().iter().map(|&(v, q)| q * f.cdf(v)).sum()))
        }
        (None, None) => auc_quadrature(first, second, abs_tol),
    }
}

/// Fraction of `n` independent draws with `first < second` (ties count 1/2).
/// Draws are blocked with one seeded stream per block, so the result does not
/// depend on the thread count.
pub fn auc_monte_carlo(
    first: &DistributionSpec,
    second: &DistributionSpec,
    n: usize,
    seed: u64,
) -> Result<AucEstimate, DistributionError> {
    if n < MC_MIN_SAMPLES {
        return Err(DistributionError::TooFewSamples {
            n,
            min: MC_MIN_SAMPLES,
        });
    }
    let (m1, c1) = first.affine();
    let (m2, c2) = second.affine();
    let blocks = n.div_ceil(MC_BLOCK);
    // Half-wins, kept as integers so block sums are exact.
    let half_wins: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let len = MC_BLOCK.min(n - b * MC_BLOCK);
            let mut acc = 0u64;
            for _ in 0..len {
                let x = first.draw(m1, c1, &mut rng);
                let y = second.draw(m2, c2, &mut rng);
                acc += match x.total_cmp(&y) {
                    std::cmp::Ordering::Less => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Greater => 0,
                };
            }
            acc
        })
        .sum();
    let value = half_wins as f64 / (2.0 * n as f64);
    Ok(AucEstimate {
        value,
        std_error: (value * (1.0 - value) / n as f64).sqrt(),
        method: AucMethod::MonteCarlo { n, seed },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CertificateKind {
    AllBernoulli,
    AllSymmetricPdf,
    CommonMonotoneTransformSymmetric,
    ShiftFamily,
    None,
}

impl CertificateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CertificateKind::AllBernoulli => "ALL_BERNOULLI",
            CertificateKind::AllSymmetricPdf => "ALL_SYMMETRIC_PDF",
            CertificateKind::CommonMonotoneTransformSymmetric => {
                "COMMON_MONOTONE_TRANSFORM_SYMMETRIC"
            }
            CertificateKind::ShiftFamily => "SHIFT_FAMILY",
            CertificateKind::None => "NONE",
        }
    }

    /// Name of the quantity recorded in `keys`.
    pub fn key_name(self) -> &'static str {
        match self {
            CertificateKind::AllBernoulli => "p",
            CertificateKind::AllSymmetricPdf => "symmetry point",
            CertificateKind::CommonMonotoneTransformSymmetric => {
                "location before the common transform"
            }
            CertificateKind::ShiftFamily => "shift",
            CertificateKind::None => "",
        }
    }
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A family-level guarantee that no loop can form. When `kind` is not `None`,
/// `Pr[spec_i < spec_j] > 1/2` exactly when `keys[i] < keys[j]`.
/// `None` means "no guarantee", not "non-transitive".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitivityCertificate {
    pub kind: CertificateKind,
    pub keys: Vec<f64>,
}

impl TransitivityCertificate {
    pub fn guarantees_transitivity(&self) -> bool {
        self.kind != CertificateKind::None
    }
}

type CertificateCheck = fn(&[DistributionSpec]) -> Option<(CertificateKind, Vec<f64>)>;

/// Strongest certificate derivable from the declared families and transforms.
pub fn transitivity_certificate(
    specs: &[DistributionSpec],
) -> Result<TransitivityCertificate, DistributionError> {
    if specs.len() < 3 {
        return Err(DistributionError::TooFewSpecs {
            min: 3,
            got: specs.len(),
        });
    }
    let checks: [CertificateCheck; 4] = [
        all_bernoulli,
        all_symmetric,
        common_monotone_symmetric,
        shift_family,
    ];
    for check in checks {
        if let Some((kind, keys)) = check(specs) {
            return Ok(TransitivityCertificate { kind, keys });
        }
    }
    Ok(TransitivityCertificate {
        kind: CertificateKind::None,
        keys: Vec::new(),
    })
}

fn same_affine(specs: &[DistributionSpec]) -> Option<(f64, f64)> {
    let first = specs[0].affine();
    specs.iter().all(|s| s.affine() == first).then_some(first)
}

fn all_bernoulli(specs: &[DistributionSpec]) -> Option<(CertificateKind, Vec<f64>)> {
    let (m, _) = same_affine(specs)?;
    let keys = specs
        .iter()
        .map(|s| match s.family {
            Family::Bernoulli { p } => Some(m.signum() * p),
            _ => None,
        })
        .collect::<Option<Vec<_>>>()?;
    Some((CertificateKind::AllBernoulli, keys))
}

fn all_symmetric(specs: &[DistributionSpec]) -> Option<(CertificateKind, Vec<f64>)> {
    let keys = specs
        .iter()
        .map(DistributionSpec::symmetry_point)
        .collect::<Option<Vec<_>>>()?;
    Some((CertificateKind::AllSymmetricPdf, keys))
}

/// Log-normals are exp of normals; a positive rescaling folds into `mu`.
/// Everything else in the stack must be shared by all specs.
fn common_monotone_symmetric(specs: &[DistributionSpec]) -> Option<(CertificateKind, Vec<f64>)> {
    let canon = |s: &DistributionSpec| -> Option<(f64, (f64, f64))> {
        let Family::LogNormal { mu, .. } = s.family else {
            return None;
        };
        let (m, c) = s.affine();
        if c == 0.0 {
            Some((mu + m.abs().ln(), (m.signum(), 0.0)))
        } else {
            Some((mu, (m, c)))
        }
    };
    let parts = specs.iter().map(canon).collect::<Option<Vec<_>>>()?;
    let shared = parts[0].1;
    if parts.iter().any(|p| p.1 != shared) {
        return None;
    }
    let sign = shared.0.signum();
    Some((
        CertificateKind::CommonMonotoneTransformSymmetric,
        parts.iter().map(|p| sign * p.0).collect(),
    ))
}

fn shift_family(specs: &[DistributionSpec]) -> Option<(CertificateKind, Vec<f64>)> {
    let base = &specs[0].family;
    if !base.is_continuous() {
        return None;
    }
    let slope = specs[0].affine().0;
    if specs
        .iter()
        .any(|s| &s.family != base || s.affine().0 != slope)
    {
        return None;
    }
    Some((
        CertificateKind::ShiftFamily,
        specs.iter().map(|s| s.affine().1).collect(),
    ))
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Normal { mu, sigma } => {
                write!(f, "normal({},{})", fmt_num(*mu), fmt_num(*sigma))
            }
            Family::LogNormal { mu, sigma } => {
                write!(f, "lognormal({},{})", fmt_num(*mu), fmt_num(*sigma))
            }
            Family::ChiSquared { df } => write!(f, "chisq({})", fmt_num(*df)),
            Family::Uniform { lo, hi } => write!(f, "uniform({},{})", fmt_num(*lo), fmt_num(*hi)),
            Family::Exponential { rate } => write!(f, "exp({})", fmt_num(*rate)),
            Family::Bernoulli { p } => write!(f, "bernoulli({})", fmt_num(*p)),
            Family::Discrete { dist } => {
                let atoms: Vec<String> = dist
                    .atoms()
                    .iter()
                    .map(|(v, p)| format!("{}:{}", fmt_num(*v), fmt_num(*p)))
                    .collect();
                write!(f, "discrete({})", atoms.join(","))
            }
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = self.family.to_string();
        for t in &self.transforms {
            out = match *t {
                Transform::Shift(d) if d < 0.0 || (d == 0.0 && d.is_sign_negative()) => {
                    format!("{out}-{}", fmt_num(-d))
                }
                Transform::Shift(d) => format!("{out}+{}", fmt_num(d)),
                Transform::Scale(k) => format!("{out}*{}", fmt_num(k)),
                Transform::Reflect => format!("reflect({out})"),
            };
        }
        f.write_str(&out)
    }
}

impl FromStr for DistributionSpec {
    type Err = DistributionError;

    /// Grammar:
    ///
    /// ```text
    /// expr    := atom { ('+' | '-') number | '*' number }
    /// atom    := 'reflect' '(' expr ')' | family '(' args ')' | '(' expr ')'
    /// family  := normal | lognormal | chisq | uniform | exp | bernoulli | discrete
    /// ```
    ///
    /// `discrete` takes `value:prob` pairs; whitespace is ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser { src: s, pos: 0 };
        let spec = p.expr()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(spec)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> DistributionError {
        DistributionError::Parse {
            input: self.src.to_string(),
            pos: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(char::is_whitespace) {
            self.pos += self.rest().chars().next().map_or(0, char::len_utf8);
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn expect(&mut self, c: char) -> Result<(), DistributionError> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn number(&mut self) -> Result<f64, DistributionError> {
        self.skip_ws();
        let bytes = self.rest().as_bytes();
        let mut end = 0;
        if end < bytes.len() && (bytes[end] == b'+' || bytes[end] == b'-') {
            end += 1;
        }
        while end < bytes.len() {
            let b = bytes[end];
            let exp_sign =
                (b == b'+' || b == b'-') && end > 0 && matches!(bytes[end - 1], b'e' | b'E');
            if b.is_ascii_digit() || b == b'.' || b == b'e' || b == b'E' || exp_sign {
                end += 1;
            } else {
                break;
            }
        }
        let text = &self.rest()[..end];
        let value: f64 = text
            .parse()
            .map_err(|_| self.error(format!("expected a number, found `{text}`")))?;
        if !value.is_finite() {
            return Err(self.error("number is not finite"));
        }
        self.pos += end;
        Ok(value)
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.rest().len());
        let id = self.rest()[..len].to_ascii_lowercase();
        self.pos += len;
        id
    }

    fn expr(&mut self) -> Result<DistributionSpec, DistributionError> {
        let mut spec = self.atom()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    let d = self.number()?;
                    spec = spec.shift(d)?;
                }
                Some('-') => {
                    self.pos += 1;
                    let d = self.number()?;
                    spec = spec.shift(-d)?;
                }
                Some('*') => {
                    self.pos += 1;
                    let at = self.pos;
                    let k = self.number()?;
                    spec = spec.scale(k).map_err(|e| {
                        self.pos = at;
                        self.error(e.to_string())
                    })?;
                }
                _ => return Ok(spec),
            }
        }
    }

    fn args(&mut self) -> Result<Vec<f64>, DistributionError> {
        self.expect('(')?;
        let mut out = vec![self.number()?];
        while self.peek() == Some(',') {
            self.pos += 1;
            out.push(self.number()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn atom(&mut self) -> Result<DistributionSpec, DistributionError> {
        if self.peek() == Some('(') {
            self.pos += 1;
            let inner = self.expr()?;
            self.expect(')')?;
            return Ok(inner);
        }
        let start = self.pos;
        let name = self.ident();
        let arity = |p: &Self, args: &[f64], n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(p.error(format!(
                    "`{name}` takes {n} argument(s), got {}",
                    args.len()
                )))
            }
        };
        let family = match name.as_str() {
            "reflect" => {
                self.expect('(')?;
                let inner = self.expr()?;
                self.expect(')')?;
                return Ok(inner.reflect());
            }
            "discrete" => {
                self.expect('(')?;
                let mut atoms = Vec::new();
                loop {
                    let v = self.number()?;
                    self.expect(':')?;
                    let p = self.number()?;
                    atoms.push((v, p));
                    if self.peek() == Some(',') {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                self.expect(')')?;
                let dist =
                    DiscreteDistribution::new(atoms).map_err(|e| self.error(e.to_string()))?;
                return Ok(DistributionSpec::discrete(dist));
            }
            "normal" | "lognormal" | "uniform" => {
                let a = self.args()?;
                arity(self, &a, 2)?;
                match name.as_str() {
                    "normal" => Family::Normal {
                        mu: a[0],
                        sigma: a[1],
                    },
                    "lognormal" => Family::LogNormal {
                        mu: a[0],
                        sigma: a[1],
                    },
                    _ => Family::Uniform { lo: a[0], hi: a[1] },
                }
            }
            "chisq" | "chi_squared" | "exp" | "exponential" | "bernoulli" => {
                let a = self.args()?;
                arity(self, &a, 1)?;
                match name.as_str() {
                    "chisq" | "chi_squared" => Family::ChiSquared { df: a[0] },
                    "exp" | "exponential" => Family::Exponential { rate: a[0] },
                    _ => Family::Bernoulli { p: a[0] },
                }
            }
            "" => return Err(self.error("expected a distribution")),
            other => {
                self.pos = start;
                return Err(self.error(format!("unknown family `{other}`")));
            }
        };
        DistributionSpec::new(family).map_err(|e| {
            self.pos = start;
            self.error(e.to_string())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(s: &str) -> DistributionSpec {
        s.parse().unwrap()
    }

    fn example_two() -> [DistributionSpec; 3] {
        [
            spec("chisq(1)"),
            spec("normal(0.5875,0.1)"),
            spec("reflect(chisq(1))+1.175"),
        ]
    }

    #[test]
    fn parse_and_display() {
        let s = spec("reflect(chisq(1))+1.175");
        assert_eq!(
            s.transforms(),
            &[Transform::Reflect, Transform::Shift(1.175)]
        );
        assert_eq!(s.to_string(), "reflect(chisq(1))+1.175");
        assert_eq!(
            spec(" normal( 0.5875 , 0.1 ) ").to_string(),
            "normal(0.5875,0.1)"
        );
        assert_eq!(spec("exp(1)-2*3").affine(), (3.0, -6.0));
        assert_eq!(spec("(uniform(0,1)+1)*2").affine(), (2.0, 2.0));
        assert_eq!(
            spec("discrete(4:0.6, 1:0.4)").to_string(),
            "discrete(1:0.4,4:0.6)"
        );
        assert_eq!(
            spec("bernoulli(1e-1)").family(),
            &Family::Bernoulli { p: 0.1 }
        );
        for bad in [
            "",
            "normal(0)",
            "normal(0,-1)",
            "gamma(1,2)",
            "chisq(1) junk",
            "exp(1)*0",
            "chisq(0.5)",
            "discrete(1:0.5)",
        ] {
            assert!(bad.parse::<DistributionSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(DistributionSpec::normal(0.0, 0.0).is_err());
        assert!(DistributionSpec::uniform(1.0, 1.0).is_err());
        assert!(DistributionSpec::exponential(-1.0).is_err());
        assert!(DistributionSpec::bernoulli(1.5).is_err());
        assert!(DistributionSpec::normal(0.0, 1.0)
            .unwrap()
            .scale(-2.0)
            .is_err());
        assert!(DistributionSpec::normal(0.0, 1.0)
            .unwrap()
            .shift(f64::NAN)
            .is_err());
    }

    #[test]
    fn symmetry_metadata_follows_transforms() {
        assert_eq!(spec("normal(1,2)").symmetry_point(), Some(1.0));
        assert_eq!(
            spec("reflect(normal(1,2)+1)*3").symmetry_point(),
            Some(-6.0)
        );
        assert_eq!(spec("uniform(0,4)+1").symmetry_point(), Some(3.0));
        assert_eq!(spec("chisq(1)").symmetry_point(), None);
        assert_eq!(spec("exp(2)").symmetry_point(), None);
        assert_eq!(spec("lognormal(0,1)").symmetry_point(), None);
    }

    #[test]
    fn sampling_examples() {
        assert_eq!(sample(&spec("bernoulli(1.0)"), 5, 9), vec![1.0; 5]);
        let xs = sample(&spec("normal(0,1)+2"), 1_000_000, 11);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 2.0).abs() < 0.01);
        let zs = sample(&spec("reflect(chisq(1))+1.175"), 1_000_000, 12);
        let mean = zs.iter().sum::<f64>() / zs.len() as f64;
        assert!((mean - 0.175).abs() < 0.01);
        assert_eq!(
            sample(&spec("exp(1)"), 10, 3),
            sample(&spec("exp(1)"), 10, 3)
        );
        assert_ne!(
            sample(&spec("exp(1)"), 10, 3),
            sample(&spec("exp(1)"), 10, 4)
        );
    }

    #[test]
    fn quadrature_examples() {
        let n01 = spec("normal(0,1)");
        let same = auc_quadrature(&n01, &n01, 1e-10).unwrap();
        assert!((same.value - 0.5).abs() < 1e-9);
        assert_eq!(same.std_error, 0.0);
        // Closed form Phi((mu_y - mu_x) / sqrt(sigma^2 + tau^2)).
        let closed = sd::Normal::standard().cdf(1.0 / 2f64.sqrt());
        let q = auc_quadrature(&n01, &spec("normal(1,1)"), 1e-10).unwrap();
        assert!((q.value - closed).abs() < 1e-9);
        assert!((q.value - 0.760250).abs() < 1e-6);

        let [t1, t2, t3] = example_two();
        for (a, b) in [(&t1, &t2), (&t2, &t3), (&t3, &t1)] {
            assert!(auc_quadrature(a, b, 1e-9).unwrap().value > 0.5);
        }
        assert!(matches!(
            auc_quadrature(&spec("bernoulli(0.5)"), &n01, 1e-9),
            Err(DistributionError::NotContinuous(_))
        ));
        assert!(auc_quadrature(&n01, &n01, 0.0).is_err());
    }

    #[test]
    fn quadrature_matches_independent_density_integral() {
        // Cross-check against a plain trapezoid rule on F_first * g_second over t.
        let first = spec("exp(1)");
        let second = spec("normal(1.5,0.7)");
        let (lo, hi, n) = (-6.0, 9.0, 200_000);
        let h = (hi - lo) / n as f64;
        let mut acc = 0.0;
        for k in 0..=n {
            let t = lo + k as f64 * h;
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            acc += w * first.cdf(t) * second.pdf(t).unwrap();
        }
        let q = auc_quadrature(&first, &second, 1e-10).unwrap();
        assert!((q.value - acc * h).abs() < 1e-7);
    }

    #[test]
    fn deterministic_dispatch_mixed_pairs() {
        let b = spec("bernoulli(0.3)");
        let u = spec("uniform(0,1)+0.5");
        // Pr[B < U]: B = 0 always below; B = 1 below when U > 1, i.e. half the time.
        let v = auc_deterministic(&b, &u, 1e-10).unwrap().value;
        assert!((v - (0.7 + 0.3 * 0.5)).abs() < 1e-12);
        let w = auc_deterministic(&u, &b, 1e-10).unwrap().value;
        assert!((v + w - 1.0).abs() < 1e-12);
        let x = auc_deterministic(&spec("bernoulli(0.2)"), &spec("bernoulli(0.7)"), 1e-10).unwrap();
        assert!((x.value - (1.0 + 0.7 - 0.2) / 2.0).abs() < 1e-12);
        assert_eq!(x.method, AucMethod::ExactDiscrete);
    }

    #[test]
    fn monte_carlo_examples() {
        let n01 = spec("normal(0,1)");
        let e = auc_monte_carlo(&n01, &n01, 100_000, 5).unwrap();
        assert!((e.value - 0.5).abs() <= 4.0 * e.std_error);
        assert!((e.std_error - (e.value * (1.0 - e.value) / 1e5).sqrt()).abs() < 1e-15);
        let d = auc_monte_carlo(&spec("uniform(0,1)"), &spec("uniform(0,1)+1"), 1000, 1).unwrap();
        assert_eq!(d.value, 1.0);
        assert_eq!(d.std_error, 0.0);
        assert!(auc_monte_carlo(&n01, &n01, 99, 1).is_err());
        assert_eq!(
            auc_monte_carlo(&n01, &spec("exp(1)"), 200_000, 42).unwrap(),
            auc_monte_carlo(&n01, &spec("exp(1)"), 200_000, 42).unwrap()
        );
    }

    #[test]
    fn certificate_examples() {
        let normals = [
            spec("normal(0,1)"),
            spec("normal(2,0.5)"),
            spec("normal(1,3)"),
        ];
        let c = transitivity_certificate(&normals).unwrap();
        assert_eq!(c.kind, CertificateKind::AllSymmetricPdf);
        assert_eq!(c.keys, vec![0.0, 2.0, 1.0]);

        let exps = [spec("exp(1)"), spec("exp(1)+1"), spec("exp(1)+2")];
        let c = transitivity_certificate(&exps).unwrap();
        assert_eq!(c.kind, CertificateKind::ShiftFamily);
        assert_eq!(c.keys, vec![0.0, 1.0, 2.0]);

        let c = transitivity_certificate(&example_two()).unwrap();
        assert_eq!(c.kind, CertificateKind::None);
        assert!(!c.guarantees_transitivity());

        let bern = [
            spec("bernoulli(0.1)"),
            spec("bernoulli(0.5)"),
            spec("bernoulli(0.3)"),
        ];
        assert_eq!(
            transitivity_certificate(&bern).unwrap().kind,
            CertificateKind::AllBernoulli
        );
        let bern_mixed = [
            spec("bernoulli(0.1)"),
            spec("bernoulli(0.5)+1"),
            spec("bernoulli(0.3)"),
        ];
        assert_eq!(
            transitivity_certificate(&bern_mixed).unwrap().kind,
            CertificateKind::None
        );

        let logs = [
            spec("lognormal(0,1)"),
            spec("lognormal(1,0.2)*2"),
            spec("lognormal(-1,2)"),
        ];
        let c = transitivity_certificate(&logs).unwrap();
        assert_eq!(c.kind, CertificateKind::CommonMonotoneTransformSymmetric);
        assert!((c.keys[1] - (1.0 + 2f64.ln())).abs() < 1e-15);

        assert!(transitivity_certificate(&normals[..2]).is_err());
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(
            mu in -5.0f64..5.0, sigma in 0.01f64..4.0,
            shifts in prop::collection::vec((0u8..3, -3.0f64..3.0), 0..4),
        ) {
            let mut s = DistributionSpec::normal(mu, sigma).unwrap();
            for (kind, v) in shifts {
                s = match kind {
                    0 => s.shift(v).unwrap(),
                    1 => s.scale(v.abs() + 0.1).unwrap(),
                    _ => s.reflect(),
                };
            }
            let back: DistributionSpec = s.to_string().parse().unwrap();
            let (m1, c1) = s.affine();
            let (m2, c2) = back.affine();
            prop_assert!((m1 - m2).abs() < 1e-12 && (c1 - c2).abs() < 1e-12);
            prop_assert_eq!(back.family(), s.family());
        }
    }
}
