use std::collections::BTreeMap;

use proptest::prelude::*;

use winloop::comparison::{
    auc_from_wr, empirical_comparison_uncensored, exact_auc_discrete, wr_from_auc,
    DiscreteDistribution, PairwiseComparison,
};
use winloop::distributions::{auc_deterministic, sample, DistributionSpec};
use winloop::loop_space::{alpha, construct_sigma, member_s3nt, AucTriplet};
use winloop::tournament::{build_tournament, enumerate_cycles, komisarski_bound};

fn brute_auc(x: &[f64], y: &[f64]) -> (u64, u64) {
    let (mut lo, mut hi) = (0, 0);
    for a in x {
        for b in y {
            if a < b {
                hi += 1;
            } else if a > b {
                lo += 1;
            }
        }
    }
    (lo, hi)
}

fn small_pmf() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0u8..8, 1u32..20), 1..5).prop_map(|raw| {
        let total: u32 = raw.iter().map(|r| r.1).sum();
        raw.into_iter()
            .map(|(v, w)| (v as f64, w as f64 / total as f64))
            .collect()
    })
}

fn pair_auc(x: &[(f64, f64)], y: &[(f64, f64)]) -> f64 {
    let mut s = 0.0;
    for &(u, p) in x {
        for &(v, q) in y {
            s += p
                * q
                * if u < v {
                    1.0
                } else if u == v {
                    0.5
                } else {
                    0.0
                };
        }
    }
    s
}

proptest! {
    #[test]
    fn wr_round_trip(auc in 0.0f64..1.0) {
        let back = auc_from_wr(wr_from_auc(auc).unwrap()).unwrap();
        prop_assert!((back - auc).abs() <= 1e-12);
    }

    #[test]
    fn reversal_mirrors_auc(w1 in 0u64..500, w2 in 0u64..500, ind in 0u64..50) {
        prop_assume!(w1 + w2 > 0);
        let c = PairwiseComparison::from_counts(w1, w2, ind).unwrap();
        let r = c.reversed();
        prop_assert!((c.auc + r.auc - 1.0).abs() <= 1e-12);
        prop_assert_eq!(r.reversed().wins_first, w1);
        prop_assert_eq!(c.total_pairs(), w1 + w2 + ind);
    }

    #[test]
    fn empirical_counts_match_brute_force(
        x in prop::collection::vec(0i32..30, 1..40),
        y in prop::collection::vec(0i32..30, 1..40),
    ) {
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        let (lo, hi) = brute_auc(&x, &y);
        match empirical_comparison_uncensored(&x, &y) {
            Ok(c) => {
                prop_assert_eq!((c.wins_first, c.wins_second), (lo, hi));
                prop_assert_eq!(c.indeterminate, (x.len() * y.len()) as u64 - lo - hi);
            }
            Err(_) => prop_assert_eq!(lo + hi, 0),
        }
    }

    #[test]
    fn exact_discrete_matches_enumeration(x in small_pmf(), y in small_pmf()) {
        let (dx, dy) = (DiscreteDistribution::new(x.clone()).unwrap(), DiscreteDistribution::new(y.clone()).unwrap());
        prop_assert!((exact_auc_discrete(&dx, &dy) - pair_auc(&x, &y)).abs() <= 1e-12);
        prop_assert!((exact_auc_discrete(&dx, &dy) + exact_auc_discrete(&dy, &dx) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn random_triples_respect_bounds(x in small_pmf(), y in small_pmf(), z in small_pmf()) {
        let t = [pair_auc(&x, &y), pair_auc(&y, &z), pair_auc(&z, &x)];
        // Both bounds hold for any triple, loop or not.
        let min = t.iter().copied().fold(1.0, f64::min);
        prop_assert!(min <= komisarski_bound(3).unwrap() + 1e-9);
        prop_assert!(t[0] * t[1] * t[2] <= 0.25 + 1e-9);
        if t.iter().all(|&a| a > 0.5) {
            prop_assert!(member_s3nt(&AucTriplet::new(t[0], t[1], t[2]).unwrap()));
        }
    }

    #[test]
    fn constructor_realizes_target(b in 0.5f64..=1.0, frac in 0.0f64..=1.0) {
        let c = 0.5 + frac * (1.0 / (2.0 * b) - 0.5);
        let s = construct_sigma(b, c, None).unwrap();
        let got = [
            pair_auc(s.x.atoms(), s.y.atoms()),
            pair_auc(s.y.atoms(), s.z.atoms()),
            pair_auc(s.z.atoms(), s.x.atoms()),
        ];
        for (g, want) in got.iter().zip([1.0 - b * c, b, c]) {
            prop_assert!((g - want).abs() <= 1e-12);
        }
        prop_assert!(member_s3nt(&s.realized()));
    }

    #[test]
    fn alpha_matches_formula(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let want = if a + b > 1.0 {
            ((1.0 - a) / b).max((1.0 - b) / a).max(1.0 - a * b)
        } else {
            1.0
        };
        prop_assert!((alpha(a, b).unwrap() - want).abs() <= 1e-12);
    }

    #[test]
    fn transitive_orders_have_no_loops(values in prop::collection::vec(-5.0f64..5.0, 3..7)) {
        let n = values.len();
        let mut comps = BTreeMap::new();
        for i in 0..n {
            for j in i + 1..n {
                // Orientation from a single score is transitive by construction.
                let auc = if values[i] < values[j] { 0.7 } else if values[i] > values[j] { 0.3 } else { 0.5 };
                comps.insert((i, j), PairwiseComparison::from_auc(auc).unwrap());
            }
        }
        let labels = (0..n).map(|k| format!("n{k}")).collect();
        let g = build_tournament(labels, &comps, 0.0).unwrap();
        prop_assert!(enumerate_cycles(&g, n).unwrap().cycles.is_empty());
    }
}

#[test]
fn loop_bound_closed_form() {
    for n in 3..50 {
        let c = (std::f64::consts::PI / (n as f64 + 2.0)).cos();
        assert!((komisarski_bound(n).unwrap() - (1.0 - 1.0 / (4.0 * c * c))).abs() < 1e-15);
    }
}

#[test]
fn empirical_converges_to_exact_discrete() {
    let specs: Vec<DistributionSpec> = [
        "discrete(1:0.4,4:0.6)",
        "discrete(2:0.7,5:0.3)",
        "discrete(3:1)",
    ]
    .iter()
    .map(|s| s.parse().unwrap())
    .collect();
    let draws: Vec<Vec<f64>> = specs
        .iter()
        .enumerate()
        .map(|(k, s)| sample(s, 100_000, 40 + k as u64))
        .collect();
    for (i, j, want) in [(0, 1, 0.58), (1, 2, 0.70), (2, 0, 0.60)] {
        let c = empirical_comparison_uncensored(&draws[i], &draws[j]).unwrap();
        assert!((c.auc - want).abs() < 0.005, "{i} vs {j}: {}", c.auc);
    }
}

#[test]
fn empirical_converges_to_quadrature() {
    let pairs = [
        ("normal(0,1)", "normal(0.5,1.5)"),
        ("chisq(1)", "normal(0.5875,0.1)"),
        ("exp(2)", "lognormal(-1,0.5)"),
    ];
    for (k, (a, b)) in pairs.iter().enumerate() {
        let (a, b): (DistributionSpec, DistributionSpec) = (a.parse().unwrap(), b.parse().unwrap());
        let exact = auc_deterministic(&a, &b, 1e-10).unwrap().value;
        let x = sample(&a, 100_000, 100 + k as u64);
        let y = sample(&b, 100_000, 200 + k as u64);
        let emp = empirical_comparison_uncensored(&x, &y).unwrap().auc;
        assert!((emp - exact).abs() < 0.005, "pair {k}: {emp} vs {exact}");
    }
}
