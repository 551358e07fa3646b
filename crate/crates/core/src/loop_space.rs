//! Geometry of achievable AUC triplets for three independent variables.
//!
//! A triplet `(a, b, c)` stands for `a = Pr[x<y]`, `b = Pr[y<z]`, `c = Pr[z<x]`.
//! It is achievable iff `1 - alpha(1-a, 1-b) <= c <= alpha(a, b)`, and it lies
//! in the (closed) non-transitive region when in addition all three are >= 1/2.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comparison::{exact_auc_discrete, wr_from_auc, ComparisonError, DiscreteDistribution};
use crate::serde_util::fmt_inf;

/// Slack allowed on either side of the feasibility inequalities.
pub const REGION_TOL: f64 = 1e-12;
/// Required per-component accuracy of [`realize_triplet`].
pub const REALIZE_TOL: f64 = 1e-6;
/// Default interleaved support size for [`realize_triplet`].
pub const DEFAULT_REALIZE_SUPPORT: usize = 9;
/// Support `(x1, y1, z, x2, y2)` used when no other is given.
pub const DEFAULT_SIGMA_SUPPORT: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoopSpaceError {
    #[error("{name} = {value} outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("{constraint} violated ({detail})")]
    OutsideSigmaRegion {
        constraint: &'static str,
        detail: String,
    },
    #[error("support must be five strictly increasing finite values x1 < y1 < z < x2 < y2")]
    BadSupport,
    #[error("support size {0} is too small; need at least 5")]
    SupportTooSmall(usize),
    #[error("triplet {0} is outside the achievable region")]
    Infeasible(AucTriplet),
    #[error(
        "triplet {triplet} not realized at support size {support_size} (max error {max_error:.3e})"
    )]
    NotRealized {
        triplet: AucTriplet,
        support_size: usize,
        max_error: f64,
    },
    #[error("grid needs at least 2 steps, got {0}")]
    GridTooCoarse(usize),
    #[error(transparent)]
    Distribution(#[from] ComparisonError),
}

fn check_unit(name: &'static str, value: f64) -> Result<f64, LoopSpaceError> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(LoopSpaceError::OutOfRange { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucTriplet {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl AucTriplet {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, LoopSpaceError> {
        Ok(Self {
            a: check_unit("a", a)?,
            b: check_unit("b", b)?,
            c: check_unit("c", c)?,
        })
    }

    pub fn min(&self) -> f64 {
        self.a.min(self.b).min(self.c)
    }

    pub fn product(&self) -> f64 {
        self.a * self.b * self.c
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    /// AUCs realized by three discrete variables, in `(x<y, y<z, z<x)` order.
    pub fn realized_by(
        x: &DiscreteDistribution,
        y: &DiscreteDistribution,
        z: &DiscreteDistribution,
    ) -> Self {
        Self {
            a: exact_auc_discrete(x, y),
            b: exact_auc_discrete(y, z),
            c: exact_auc_discrete(z, x),
        }
    }
}

impl fmt::Display for AucTriplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

/// Upper bound on `Pr[z<x]` given `Pr[x<y] = a` and `Pr[y<z] = b`.
pub fn alpha(a: f64, b: f64) -> Result<f64, LoopSpaceError> {
    let a = check_unit("a", a)?;
    let b = check_unit("b", b)?;
    Ok(alpha_unchecked(a, b))
}

fn alpha_unchecked(a: f64, b: f64) -> f64 {
    if a + b > 1.0 {
        ((1.0 - a) / b).max((1.0 - b) / a).max(1.0 - a * b)
    } else {
        1.0
    }
}

/// Whether three independent variables can produce the triplet.
pub fn feasible_s3(t: &AucTriplet) -> bool {
    let lower = 1.0 - alpha_unchecked(1.0 - t.a, 1.0 - t.b);
    let upper = alpha_unchecked(t.a, t.b);
    t.c >= lower - REGION_TOL && t.c <= upper + REGION_TOL
}

/// Membership in the closed non-transitive region.
pub fn member_s3nt(t: &AucTriplet) -> bool {
    let half = 0.5 - REGION_TOL;
    t.a >= half && t.b >= half && t.c >= half && t.c <= alpha_unchecked(t.a, t.b) + REGION_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    /// Outside the closed non-transitive region.
    Outside,
    /// In the closed region with at least one component equal to 1/2.
    Boundary,
    /// All three components strictly above 1/2: a genuine loop.
    Strict,
}

pub fn classify_membership(t: &AucTriplet) -> Membership {
    if !member_s3nt(t) {
        Membership::Outside
    } else if t.a > 0.5 && t.b > 0.5 && t.c > 0.5 {
        Membership::Strict
    } else {
        Membership::Boundary
    }
}

/// Extremal three-variable family: `x` on `{x1, x2}`, `y` on `{y1, y2}`, `z`
/// fixed, with `x1 < y1 < z < x2 < y2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaTriplet {
    pub x: DiscreteDistribution,
    pub y: DiscreteDistribution,
    pub z: DiscreteDistribution,
    /// `Pr[x = x1]`.
    pub p_x: f64,
    /// `Pr[y = y1]`.
    pub p_y: f64,
    pub support: [f64; 5],
}

impl SigmaTriplet {
    pub fn realized(&self) -> AucTriplet {
        AucTriplet::realized_by(&self.x, &self.y, &self.z)
    }
}

/// Builds the extremal family member with `Pr[y<z] = b` and `Pr[z<x] = c`,
/// which then has `Pr[x<y] = 1 - b c`.
pub fn construct_sigma(
    b: f64,
    c: f64,
    support: Option<[f64; 5]>,
) -> Result<SigmaTriplet, LoopSpaceError> {
    let outside = |constraint: &'static str, detail: String| LoopSpaceError::OutsideSigmaRegion {
        constraint,
        detail,
    };
    if !b.is_finite() || b < 0.5 {
        return Err(outside("b >= 1/2", format!("{b} < 0.5")));
    }
    if b > 1.0 {
        return Err(outside("b <= 1", format!("{b} > 1")));
    }
    if !c.is_finite() || c < 0.5 {
        return Err(outside("c >= 1/2", format!("{c} < 0.5")));
    }
    let c_max = 1.0 / (2.0 * b);
    if c > c_max {
        return Err(outside(
            "c <= 1/(2b)",
            format!("{} > {}", fmt_decimal(c, 6), fmt_decimal(c_max, 6)),
        ));
    }
    let support = support.unwrap_or(DEFAULT_SIGMA_SUPPORT);
    if support.iter().any(|v| !v.is_finite()) || support.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LoopSpaceError::BadSupport);
    }
    let [x1, y1, z, x2, y2] = support;
    let p_x = 1.0 - c;
    let p_y = b;
    Ok(SigmaTriplet {
        x: DiscreteDistribution::new([(x1, p_x), (x2, c)])?,
        y: DiscreteDistribution::new([(y1, p_y), (y2, 1.0 - b)])?,
        z: DiscreteDistribution::point_mass(z)?,
        p_x,
        p_y,
        support,
    })
}

/// Trims a fixed-point rendering to at most `digits` decimals, dropping
/// trailing zeros.
fn fmt_decimal(v: f64, digits: usize) -> String {
    let s = format!("{v:.digits$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Searches for three discrete distributions on an interleaved support
/// (`x, y, z, x, y, z, ...` at positions `1..=support_size`) whose exact AUCs
/// match `t` within [`REALIZE_TOL`].
///
/// Starts from the extremal family member closest to `t`, then runs
/// coordinate descent on pairwise mass transfers within each variable,
/// restarting from seeded random weights if it stalls.
pub fn realize_triplet(
    t: &AucTriplet,
    support_size: usize,
) -> Result<[DiscreteDistribution; 3], LoopSpaceError> {
    if !feasible_s3(t) {
        return Err(LoopSpaceError::Infeasible(*t));
    }
    if support_size < 5 {
        return Err(LoopSpaceError::SupportTooSmall(support_size));
    }
    let target = t.as_array();
    let owners: Vec<usize> = (0..support_size).map(|k| k % 3).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5157_u64);
    const RESTARTS: usize = 24;
    for attempt in 0..RESTARTS {
        let init = if attempt == 0 {
            sigma_initial_weights(t, &owners)
        } else {
            random_weights(&owners, &mut rng)
        };
        let (weights, err) = descend(init, &owners, target);
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, weights));
        }
        if err <= REALIZE_TOL / 4.0 {
            break;
        }
    }
    let (max_error, weights) = best.expect("at least one attempt");
    if max_error > REALIZE_TOL {
        return Err(LoopSpaceError::NotRealized {
            triplet: *t,
            support_size,
            max_error,
        });
    }
    let dist = |var: usize| -> Result<DiscreteDistribution, LoopSpaceError> {
        let atoms: Vec<(f64, f64)> = (0..support_size)
            .filter(|&k| owners[k] == var)
            .map(|k| ((k + 1) as f64, weights[k]))
            .collect();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        Ok(DiscreteDistribution::new(
            atoms.into_iter().map(|(v, p)| (v, p / total)),
        )?)
    };
    Ok([dist(0)?, dist(1)?, dist(2)?])
}

/// Extremal-family weights: x on positions 0 and 3, y on 1 and 4, z on 2.
fn sigma_initial_weights(t: &AucTriplet, owners: &[usize]) -> Vec<f64> {
    let b = t.b;
    let c = t.c;
    let mut w = vec![0.0; owners.len()];
    w[0] = 1.0 - c;
    w[3] = c;
    w[1] = b;
    w[4] = 1.0 - b;
    w[2] = 1.0;
    w
}

fn random_weights(owners: &[usize], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut w: Vec<f64> = owners.iter().map(|_| rng.random::<f64>() + 1e-3).collect();
    for var in 0..3 {
        let total: f64 = owners
            .iter()
            .zip(&w)
            .filter(|(&o, _)| o == var)
            .map(|(_, &x)| x)
            .sum();
        for (k, &o) in owners.iter().enumerate() {
            if o == var {
                w[k] /= total;
            }
        }
    }
    w
}

/// `(Pr[x<y], Pr[y<z], Pr[z<x])` for weights on distinct ordered positions.
fn triplet_of(weights: &[f64], owners: &[usize]) -> [f64; 3] {
    // below[v] = mass of variable v at positions strictly before the cursor.
    let mut below = [0.0f64; 3];
    let mut out = [0.0f64; 3];
    for (k, &o) in owners.iter().enumerate() {
        let w = weights[k];
        match o {
            0 => out[2] += w * below[2], // z < x
            1 => out[0] += w * below[0], // x < y
            _ => out[1] += w * below[1], // y < z
        }
        below[o] += w;
    }
    out
}

fn max_abs_error(got: [f64; 3], target: [f64; 3]) -> f64 {
    (0..3)
        .map(|i| (got[i] - target[i]).abs())
        .fold(0.0, f64::max)
}

fn descend(mut weights: Vec<f64>, owners: &[usize], target: [f64; 3]) -> (Vec<f64>, f64) {
    let n = owners.len();
    const SWEEPS: usize = 4000;
    let mut err = max_abs_error(triplet_of(&weights, owners), target);
    for _ in 0..SWEEPS {
        if err <= REALIZE_TOL / 4.0 {
            break;
        }
        for i in 0..n {
            for j in 0..n {
                if i == j || owners[i] != owners[j] || weights[i] <= 0.0 {
                    continue;
                }
                // The triplet is linear in a transfer of mass from i to j.
                let base = triplet_of(&weights, owners);
                let mut moved = weights.clone();
                moved[i] -= 1.0;
                moved[j] += 1.0;
                let grad: Vec<f64> = {
                    let probe = triplet_of(&moved, owners);
                    (0..3).map(|k| probe[k] - base[k]).collect()
                };
                let resid: Vec<f64> = (0..3).map(|k| base[k] - target[k]).collect();
                let gg: f64 = grad.iter().map(|g| g * g).sum();
                if gg < 1e-300 {
                    continue;
                }
                let step = -(0..3).map(|k| resid[k] * grad[k]).sum::<f64>() / gg;
                let step = step.clamp(-weights[j], weights[i]);
                weights[i] -= step;
                weights[j] += step;
            }
        }
        err = max_abs_error(triplet_of(&weights, owners), target);
    }
    (weights, err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SurfaceView {
    Auc,
    Wr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub view: SurfaceView,
    pub grid_steps: usize,
    /// `[a, b, c_lo, c_hi]` rows, row-major in `(a, b)`, in the chosen view.
    pub rows: Vec<[f64; 4]>,
}

impl SurfaceGrid {
    pub fn header(&self) -> &'static str {
        match self.view {
            SurfaceView::Auc => "a,b,c_lo,c_hi",
            SurfaceView::Wr => "wr_a,wr_b,wr_c_lo,wr_c_hi",
        }
    }

    /// Comma-separated rendering with a fixed header, ten decimals per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 56);
        out.push_str(self.header());
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|&v| {
                    fmt_inf(v)
                        .map(str::to_string)
                        .unwrap_or_else(|| format!("{v:.10}"))
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Boundaries of the non-transitive region over a `grid_steps x grid_steps`
/// grid of `(a, b)` in `[1/2, 1]^2`. `c_hi = alpha(a, b)` and
/// `c_lo = max(1/2, 1 - alpha(1-a, 1-b))`; rows with `c_hi < c_lo` mark
/// `(a, b)` pairs that admit no loop.
pub fn export_surface(grid_steps: usize, view: SurfaceView) -> Result<SurfaceGrid, LoopSpaceError> {
    if grid_steps < 2 {
        return Err(LoopSpaceError::GridTooCoarse(grid_steps));
    }
    let coord = |i: usize| 0.5 + 0.5 * i as f64 / (grid_steps - 1) as f64;
    let rows: Vec<[f64; 4]> = (0..grid_steps)
        .into_par_iter()
        .flat_map_iter(|i| {
            let a = coord(i);
            (0..grid_steps).map(move |j| {
                let b = coord(j);
                let c_hi = alpha_unchecked(a, b);
                let c_lo = 0.5f64.max(1.0 - alpha_unchecked(1.0 - a, 1.0 - b));
                [a, b, c_lo, c_hi]
            })
        })
        .collect();
    let rows = match view {
        SurfaceView::Auc => rows,
        SurfaceView::Wr => rows
            .into_iter()
            .map(|r| r.map(|v| wr_from_auc(v).expect("grid values lie in [0, 1]")))
            .collect(),
    };
    Ok(SurfaceGrid {
        view,
        grid_steps,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(a: f64, b: f64, c: f64) -> AucTriplet {
        AucTriplet::new(a, b, c).unwrap()
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha(0.4, 0.5).unwrap(), 1.0);
        assert!((alpha(0.7, 0.7).unwrap() - 0.51).abs() < 1e-12);
        assert_eq!(alpha(1.0, 1.0).unwrap(), 0.0);
        assert!(alpha(1.2, 0.5).is_err());
        assert!(alpha(0.5, f64::NAN).is_err());
        // Continuous across a + b = 1.
        assert!((alpha(0.3, 0.7 + 1e-12).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn feasibility_and_membership_examples() {
        assert!(feasible_s3(&t(0.58, 0.70, 0.60)));
        assert!(!feasible_s3(&t(0.9, 0.9, 0.9)));
        assert!(feasible_s3(&t(0.5, 1.0, 0.5)));
        assert!(member_s3nt(&t(0.58, 0.70, 0.60)));
        assert!(!member_s3nt(&t(0.75, 0.70, 0.55)));
        assert!(member_s3nt(&t(0.5, 1.0, 0.5)));
        assert_eq!(
            classify_membership(&t(0.58, 0.70, 0.60)),
            Membership::Strict
        );
        assert_eq!(classify_membership(&t(0.5, 1.0, 0.5)), Membership::Boundary);
        assert_eq!(classify_membership(&t(0.9, 0.9, 0.9)), Membership::Outside);
        assert!(AucTriplet::new(0.5, 1.1, 0.5).is_err());
    }

    #[test]
    fn sigma_examples() {
        let s = construct_sigma(0.7, 0.6, None).unwrap();
        assert_eq!(s.x.atoms(), &[(1.0, 0.4), (4.0, 0.6)]);
        assert_eq!(s.y.atoms(), &[(2.0, 0.7), (5.0, 0.30000000000000004)]);
        assert_eq!(s.z.atoms(), &[(3.0, 1.0)]);
        let r = s.realized();
        assert!(
            (r.a - 0.58).abs() < 1e-12 && (r.b - 0.7).abs() < 1e-12 && (r.c - 0.6).abs() < 1e-12
        );

        let r = construct_sigma(1.0, 0.5, None).unwrap().realized();
        assert_eq!(r.as_array(), [0.5, 1.0, 0.5]);

        let r = construct_sigma(0.5, 0.5, None).unwrap().realized();
        assert!((r.a - 0.75).abs() < 1e-12 && r.b == 0.5 && r.c == 0.5);

        let err = construct_sigma(0.7, 0.8, None).unwrap_err();
        assert_eq!(err.to_string(), "c <= 1/(2b) violated (0.8 > 0.714286)");
        assert!(matches!(
            construct_sigma(0.4, 0.6, None),
            Err(LoopSpaceError::OutsideSigmaRegion {
                constraint: "b >= 1/2",
                ..
            })
        ));
        assert!(matches!(
            construct_sigma(1.1, 0.5, None),
            Err(LoopSpaceError::OutsideSigmaRegion {
                constraint: "b <= 1",
                ..
            })
        ));
        assert!(matches!(
            construct_sigma(0.6, 0.4, None),
            Err(LoopSpaceError::OutsideSigmaRegion {
                constraint: "c >= 1/2",
                ..
            })
        ));
        assert!(matches!(
            construct_sigma(0.7, 0.6, Some([1.0, 3.0, 2.0, 4.0, 5.0])),
            Err(LoopSpaceError::BadSupport)
        ));
        let r = construct_sigma(0.7, 0.6, Some([-3.0, 0.0, 0.5, 8.0, 100.0]))
            .unwrap()
            .realized();
        assert!((r.a - 0.58).abs() < 1e-12);
    }

    #[test]
    fn realize_examples() {
        for target in [
            t(0.58, 0.70, 0.60),
            t(0.5, 0.5, 0.5),
            t(0.618, 0.618, 0.618),
            t(0.3, 0.8, 0.4),
        ] {
            let [x, y, z] = realize_triplet(&target, DEFAULT_REALIZE_SUPPORT).unwrap();
            let got = AucTriplet::realized_by(&x, &y, &z);
            assert!(
                max_abs_error(got.as_array(), target.as_array()) <= REALIZE_TOL,
                "{target} -> {got}"
            );
        }
        assert!(matches!(
            realize_triplet(&t(0.9, 0.9, 0.9), 9),
            Err(LoopSpaceError::Infeasible(_))
        ));
    }

    #[test]
    fn direct_triplet_matches_exact_enumeration() {
        let owners: Vec<usize> = (0..9).map(|k| k % 3).collect();
        let w = [0.2, 0.1, 0.5, 0.3, 0.6, 0.25, 0.5, 0.3, 0.25];
        let got = triplet_of(&w, &owners);
        let dist = |v: usize| {
            DiscreteDistribution::new(
                (0..9)
                    .filter(|&k| owners[k] == v)
                    .map(|k| ((k + 1) as f64, w[k])),
            )
            .unwrap()
        };
        let exact = AucTriplet::realized_by(&dist(0), &dist(1), &dist(2));
        assert!(max_abs_error(got, exact.as_array()) < 1e-12);
    }

    #[test]
    fn surface_corners() {
        let g = export_surface(3, SurfaceView::Auc).unwrap();
        assert_eq!(g.rows.len(), 9);
        assert_eq!(g.rows[0], [0.5, 0.5, 0.5, 1.0]);
        assert_eq!(g.rows[8], [1.0, 1.0, 0.5, 0.0]);
        let fine = export_surface(51, SurfaceView::Auc).unwrap();
        let r = fine.rows[51 + 1];
        assert!((r[0] - 0.51).abs() < 1e-12);
        assert!((r[3] - 0.49 / 0.51).abs() < 1e-12);
        let csv = g.to_csv();
        assert!(
            csv.starts_with("a,b,c_lo,c_hi\n0.5000000000,0.5000000000,0.5000000000,1.0000000000\n")
        );

        let wr = export_surface(3, SurfaceView::Wr).unwrap();
        assert_eq!(wr.header(), "wr_a,wr_b,wr_c_lo,wr_c_hi");
        assert_eq!(wr.rows[0], [1.0, 1.0, 1.0, f64::INFINITY]);
        assert!(wr.to_csv().lines().nth(1).unwrap().ends_with(",inf"));
        assert!(export_surface(1, SurfaceView::Auc).is_err());
    }
}
