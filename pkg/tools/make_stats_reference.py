"""Regenerate tests/fixtures/stats_reference.py.

Reference values for the statistics routines come from two independent
oracles, frozen into the repo so the test suite never depends on scipy:

* Shapiro-Wilk W (and p) from scipy.stats.shapiro on 20 fixed vectors.
* AUC standard error from a direct O(n_pos * n_neg) implementation of the
  structural-components estimator (pairwise win/tie matrix, per-sample
  component means, ddof=1 variances) on 20 fixed score/label instances.

Run from the repo root:  python3 tools/make_stats_reference.py
"""

from __future__ import annotations

import pathlib

import numpy as np
import scipy.stats

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "stats_reference.py"


def shapiro_vectors() -> list[np.ndarray]:
    rng = np.random.default_rng(20240817)
    vecs = []
    # varied sizes and shapes: symmetric, skewed, heavy-tailed, discretized
    for n in (10, 25, 50, 120, 300):
        vecs.append(rng.normal(0.0, 1.0, n))
    for n in (12, 40, 200):
        vecs.append(rng.uniform(-2.0, 5.0, n))
    for n in (15, 60, 250):
        vecs.append(rng.exponential(3.0, n))
    for n in (20, 80):
        vecs.append(rng.lognormal(1.0, 0.8, n))
    for n in (30, 150):
        vecs.append(rng.standard_t(3, n) if hasattr(rng, "standard_t") else rng.normal(size=n))
    vecs.append(np.round(rng.normal(10.0, 2.0, 100), 0))          # ties from rounding
    vecs.append(np.concatenate([rng.normal(-2, 0.5, 40), rng.normal(2, 0.5, 40)]))  # bimodal
    vecs.append(rng.normal(50.0, 0.01, 35))                        # tiny spread
    vecs.append(rng.gamma(2.0, 2.0, 500))
    vecs.append(rng.normal(0.0, 1.0, 4))                           # minimum-ish n
    assert len(vecs) == 20
    return vecs


def delong_instances() -> list[tuple[np.ndarray, np.ndarray]]:
    rng = np.random.default_rng(77413)
    cases = []
    sizes = [(3, 5), (5, 5), (8, 12), (10, 30), (20, 20), (25, 75), (40, 40),
             (50, 120), (60, 60), (120, 150)]
    for npos, nneg in sizes:
        pos = rng.normal(1.0, 1.0, npos)
        neg = rng.normal(0.0, 1.2, nneg)
        cases.append((np.concatenate([pos, neg]),
                      np.concatenate([np.ones(npos, int), np.zeros(nneg, int)])))
    for npos, nneg in sizes:
        # heavy ties: integer scores on a small support
        pos = rng.integers(1, 7, npos).astype(float)
        neg = rng.integers(0, 6, nneg).astype(float)
        cases.append((np.concatenate([pos, neg]),
                      np.concatenate([np.ones(npos, int), np.zeros(nneg, int)])))
    assert len(cases) == 20
    return cases


def brute_delong(scores: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    x = scores[labels == 1]
    y = scores[labels == 0]
    m, n = len(x), len(y)
    psi = np.where(x[:, None] > y[None, :], 1.0,
                   np.where(x[:, None] == y[None, :], 0.5, 0.0))
    auc = float(psi.mean())
    v10 = psi.mean(axis=1)
    v01 = psi.mean(axis=0)
    s10 = float(np.var(v10, ddof=1))
    s01 = float(np.var(v01, ddof=1))
    se = float(np.sqrt(s10 / m + s01 / n))
    return auc, se


def fmt_vec(v: np.ndarray) -> str:
    items = ", ".join(repr(float(x)) for x in v)
    return f"({items})"


def main() -> None:
    lines = [
        '"""Frozen reference values for the statistics routines.',
        "",
        "Generated by tools/make_stats_reference.py (which uses scipy and a",
        "brute-force pairwise oracle); regenerate with that script, never by",
        "copying outputs of the code under test.",
        '"""',
        "",
        "# (data, W, p) triples",
        "SHAPIRO_CASES = (",
    ]
    for v in shapiro_vectors():
        w, p = scipy.stats.shapiro(v)
        lines.append(f"    ({fmt_vec(v)},")
        lines.append(f"     {float(w)!r}, {float(p)!r}),")
    lines.append(")")
    lines.append("")
    lines.append("# (scores, labels, auc, se) tuples")
    lines.append("DELONG_CASES = (")
    for scores, labels in delong_instances():
        auc, se = brute_delong(scores, labels)
        lab = ", ".join(str(int(b)) for b in labels)
        lines.append(f"    ({fmt_vec(scores)},")
        lines.append(f"     ({lab}),")
        lines.append(f"     {auc!r}, {se!r}),")
    lines.append(")")
    lines.append("")
    OUT.write_text("\n".join(lines))
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
