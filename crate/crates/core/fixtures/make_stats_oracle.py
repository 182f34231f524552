"""Regenerates the `stats` fixtures from scipy.

The decision tree (Shapiro-Wilk on both samples, then Kruskal-Wallis, or
Levene followed by Welch or one-way ANOVA) is reimplemented here on top of
scipy so the expected outputs do not depend on the Rust code.
"""

import pathlib

import numpy as np
from scipy import stats

ALPHA = 0.05
ROOT = pathlib.Path(__file__).parent


def decide(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    if np.all(np.concatenate([a, b]) == a[0]):
        return "kruskal-wallis", 1.0, "=", True
    normal = all(np.ptp(s) > 0 and stats.shapiro(s).pvalue >= ALPHA for s in (a, b))
    if not normal:
        test, p = "kruskal-wallis", stats.kruskal(a, b).pvalue
    elif stats.levene(a, b, center="mean").pvalue < ALPHA:
        test, p = "welch", stats.ttest_ind(a, b, equal_var=False).pvalue
    else:
        test, p = "anova", stats.f_oneway(a, b).pvalue
    if p >= ALPHA:
        direction = "="
    else:
        ma, mb = np.median(a), np.median(b)
        if ma == mb:
            ma, mb = a.mean(), b.mean()
        direction = "<" if ma < mb else ">" if ma > mb else "="
    return test, float(p), direction, False


def sci(p):
    """Six-digit scientific notation with a bare exponent (`1.5e-4`, `1e0` style)."""
    mantissa, exp = f"{p:.6e}".split("e")
    return f"{mantissa}e{int(exp)}"


def write(name, description, a, b):
    d = ROOT / name
    d.mkdir(exist_ok=True)
    (d / "fixture.txt").write_text(
        f"kind = stats\nprovenance = oracle (scipy decision tree, make_stats_oracle.py)\n"
        f"description = {description}\n"
    )
    (d / "a.txt").write_text("".join(f"{v}\n" for v in a))
    (d / "b.txt").write_text("".join(f"{v}\n" for v in b))
    test, p, direction, degenerate = decide(a, b)
    (d / "expected.txt").write_text(
        f"test = {test}\ndirection = {direction}\np_value = {sci(p)}\n"
        f"degenerate = {str(degenerate).lower()}\n"
    )
    print(name, test, direction, p)


rng = np.random.default_rng(20240611)
r3 = lambda x: [round(float(v), 3) for v in x]

write("stats_rank_branch", "skewed samples force the Kruskal-Wallis branch",
      r3(rng.exponential(1.0, 30) ** 3), r3(rng.exponential(1.0, 30) ** 3 + 1.5))
write("stats_welch_branch", "normal samples with unequal spread force the Welch branch",
      r3(rng.normal(10.0, 1.0, 30)), r3(rng.normal(11.5, 5.0, 30)))
write("stats_anova_branch", "normal samples with equal spread use one-way ANOVA",
      r3(rng.normal(10.0, 2.0, 30)), r3(rng.normal(11.0, 2.0, 30)))
write("stats_degenerate", "identical constant samples compare equal with p = 1",
      [4.0] * 10, [4.0] * 10)
