//! Built-in scenarios: a discrete three-variable loop, the continuous chi-square loop,
//! the four Efron dice and a synthetic four-arm trial.

use std::collections::BTreeMap;

use winloop::comparison::PairwiseComparison;
use winloop::distributions::{sample, DistributionSpec};

/// Standard Efron dice: each beats the next (and D beats A) on 24 of 36 rolls.
pub const EFRON_DICE: [(&str, [u32; 6]); 4] = [
    ("A", [4, 4, 4, 4, 0, 0]),
    ("B", [3, 3, 3, 3, 3, 3]),
    ("C", [6, 6, 2, 2, 2, 2]),
    ("D", [5, 5, 5, 1, 1, 1]),
];

/// `(first higher, second higher, equal)` over all 36 face pairs.
pub fn dice_counts(first: &[u32; 6], second: &[u32; 6]) -> (u64, u64, u64) {
    let mut out = (0, 0, 0);
    for a in first {
        for b in second {
            match a.cmp(b) {
                std::cmp::Ordering::Greater => out.0 += 1,
                std::cmp::Ordering::Less => out.1 += 1,
                std::cmp::Ordering::Equal => out.2 += 1,
            }
        }
    }
    out
}

/// Pairwise comparisons of the dice (higher face wins), after checking that
/// every adjacent die wins exactly 24 of 36 rolls.
#[allow(clippy::needless_range_loop)]
pub fn efron_comparisons() -> Result<BTreeMap<(usize, usize), PairwiseComparison>, String> {
    let n = EFRON_DICE.len();
    for k in 0..n {
        let (l1, d1) = EFRON_DICE[k];
        let (l2, d2) = EFRON_DICE[(k + 1) % n];
        let (wins, losses, ties) = dice_counts(&d1, &d2);
        if (wins, losses, ties) != (24, 12, 0) {
            return Err(format!(
                "die {l1} vs {l2}: {wins}/{losses}/{ties}, expected 24/12/0"
            ));
        }
    }
    let mut out = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let (wi, wj, ties) = dice_counts(&EFRON_DICE[i].1, &EFRON_DICE[j].1);
            let c = PairwiseComparison::from_counts(wi, wj, ties).ok_or("dice always tie")?;
            out.insert((i, j), c);
        }
    }
    Ok(out)
}

pub fn die_label(faces: &[u32; 6]) -> String {
    let f: Vec<String> = faces.iter().map(u32::to_string).collect();
    format!("die({})", f.join(","))
}

/// Arm-specific early-death dice for the synthetic trial. Longer survival
/// wins, and the faces give A > B > C > D > A plus A > C and B > D.
pub const FIGURE1_DICE: [(&str, [u32; 3]); 4] = [
    ("A", [5, 7, 9]),
    ("B", [2, 6, 12]),
    ("C", [3, 4, 11]),
    ("D", [1, 8, 10]),
];
/// Records per face in each arm.
pub const FIGURE1_COPIES: usize = 20;
/// Records of the shared component in each arm.
pub const FIGURE1_COMMON: usize = 240;
pub const FIGURE1_SEED: u64 = 5;
/// Administrative censoring time in months.
pub const FIGURE1_FOLLOW_UP: f64 = 48.0;
/// Months per die face.
const FACE_MONTHS: f64 = 0.5;
/// Shared deaths start after every die-driven death.
const COMMON_START: f64 = 6.5;

pub const FIGURE1_CSV: &str = include_str!("../data/figure1_synthetic.csv");
pub const CENSORING_FIXTURE_CSV: &str = include_str!("../data/censoring_fixture.csv");

/// Regenerates the bundled synthetic trial. Every arm is the same shared
/// component (seeded exponential survival with administrative censoring)
/// diluted with its own die-driven early deaths. Shared-versus-shared and
/// shared-versus-early pairs cancel between arms, so the loop structure
/// comes from the dice alone and every AUC stays close to 1/2.
pub fn figure1_csv() -> String {
    let common = sample(
        &DistributionSpec::exponential(1.0 / 18.0).expect("valid rate"),
        FIGURE1_COMMON,
        FIGURE1_SEED,
    );
    let mut out = String::from("arm,time,event\n");
    for (label, faces) in FIGURE1_DICE {
        let mut rows: Vec<(f64, u8)> = Vec::new();
        for f in faces {
            for _ in 0..FIGURE1_COPIES {
                rows.push((f as f64 * FACE_MONTHS, 1));
            }
        }
        for &x in &common {
            let t = ((COMMON_START + x) * 100.0).round() / 100.0;
            if t < FIGURE1_FOLLOW_UP {
                rows.push((t, 1));
            } else {
                rows.push((FIGURE1_FOLLOW_UP, 0));
            }
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        for (t, e) in rows {
            out.push_str(&format!("{label},{t:.2},{e}\n"));
        }
    }
    out
}

/// The extremal discrete loop for b = 0.7, c = 0.6 as exact pmfs.
pub fn table1_specs() -> [(String, DistributionSpec); 3] {
    let spec = |s: &str| s.parse::<DistributionSpec>().expect("built-in spec");
    [
        ("X".into(), spec("discrete(1:0.4,4:0.6)")),
        ("Y".into(), spec("discrete(2:0.7,5:0.3)")),
        ("Z".into(), spec("discrete(3:1)")),
    ]
}

/// Chi-square, a narrow normal, and a reflected shifted chi-square.
pub fn example2_specs() -> [(String, DistributionSpec); 3] {
    let spec = |s: &str| s.parse::<DistributionSpec>().expect("built-in spec");
    [
        ("X".into(), spec("chisq(1)")),
        ("Y".into(), spec("normal(0.5875,0.1)")),
        ("Z".into(), spec("reflect(chisq(1))+1.175")),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `cargo test -p winloop-cli -- --ignored regenerate_figure1` rewrites the bundled file.
    #[test]
    #[ignore]
    fn regenerate_figure1() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/figure1_synthetic.csv");
        std::fs::write(path, figure1_csv()).unwrap();
    }

    #[test]
    fn bundled_figure1_matches_generator() {
        assert_eq!(FIGURE1_CSV, figure1_csv());
    }

    #[test]
    fn efron_counts() {
        let c = efron_comparisons().unwrap();
        // C beats A with 20 of 36; B and D split evenly.
        assert_eq!(dice_counts(&EFRON_DICE[2].1, &EFRON_DICE[0].1), (20, 16, 0));
        assert_eq!(c[&(1, 3)].auc, 0.5);
        assert_eq!(c[&(0, 1)].wins_first, 24);
    }

    #[test]
    fn figure1_dice_orientation() {
        let beats = |i: usize, j: usize| {
            let (a, b) = (FIGURE1_DICE[i].1, FIGURE1_DICE[j].1);
            let w = a
                .iter()
                .flat_map(|x| b.iter().map(move |y| (x > y) as i32 - (x < y) as i32))
                .sum::<i32>();
            w > 0
        };
        for (i, j) in [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)] {
            assert!(beats(i, j), "{i} vs {j}");
        }
    }
}
