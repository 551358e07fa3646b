"""Smoke test for the `winloop` Python extension.

Build and run from the repository root:

    cargo build -p winloop-py --release --features extension-module
    cp target/release/libwinloop_py.so python/winloop.so
    python3 python/smoke_test.py
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import winloop  # noqa: E402

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def main():
    assert close(winloop.wr_from_auc(0.58), 0.58 / 0.42)
    assert close(winloop.auc_from_wr(1.5), 0.6)
    assert winloop.wr_from_auc(1.0) == math.inf
    assert winloop.classify_strength(0.3) == ("Moderate", True)

    x = [(1.0, 0.4), (4.0, 0.6)]
    y = [(2.0, 0.7), (5.0, 0.3)]
    z = [(3.0, 1.0)]
    aucs = (
        winloop.exact_auc_discrete(x, y),
        winloop.exact_auc_discrete(y, z),
        winloop.exact_auc_discrete(z, x),
    )
    assert all(close(a, e) for a, e in zip(aucs, (0.58, 0.70, 0.60))), aucs
    loops = winloop.find_loops(
        ["X", "Y", "Z"], {(0, 1): aucs[0], (1, 2): aucs[1], (0, 2): 1 - aucs[2]}
    )
    assert [l[0] for l in loops] == [["X", "Y", "Z"]], loops

    pmfs, realized = winloop.construct_sigma(0.7, 0.6)
    assert pmfs[0] == x and pmfs[2] == z
    assert all(close(a, e) for a, e in zip(realized, (0.58, 0.70, 0.60)))
    try:
        winloop.construct_sigma(0.7, 0.8)
    except ValueError as e:
        assert "1/(2b)" in str(e)
    else:
        raise AssertionError("expected ValueError")

    assert close(winloop.komisarski_bound(3), (math.sqrt(5) - 1) / 2)
    assert winloop.member_s3nt(0.5, 1.0, 0.5)
    assert not winloop.feasible_s3(0.9, 0.9, 0.9)

    c = winloop.censored_comparison([(2, True), (4, False)], [(3, True), (1, False)])
    assert (c.wins_first, c.wins_second, c.indeterminate) == (1, 1, 2), c

    specs = [winloop.Distribution(s) for s in ("chisq(1)", "normal(0.5875,0.1)", "reflect(chisq(1))+1.175")]
    ring = [winloop.auc(specs[i], specs[(i + 1) % 3]) for i in range(3)]
    assert all(a > 0.5 for a in ring), ring
    est, se = winloop.auc_monte_carlo(specs[0], specs[1], 200_000, 7)
    assert abs(est - ring[0]) <= 4 * se
    assert winloop.transitivity_certificate(specs)[0] == "NONE"
    normals = [winloop.Distribution(f"normal({m},1)") for m in (0, 2, 1)]
    assert winloop.transitivity_certificate(normals) == ("ALL_SYMMETRIC_PDF", [0.0, 2.0, 1.0])

    report = json.loads(winloop.analyze_csv(os.path.join(ROOT, "crates/cli/data/figure1_synthetic.csv")))
    assert len(report["cycles"]) == 3
    print("winloop", winloop.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
