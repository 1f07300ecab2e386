"""Figure rendering for experiment outputs.

Everything draws through the Agg backend and writes straight to files (SVG
by default), so the CLI can run headless next to its CSV emission.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_ratio_bench(aggregates: dict, path: str | Path) -> None:
    per_algo = aggregates.get("per_algo", {})
    algos = sorted(per_algo)
    fig, ax = plt.subplots(figsize=(6, 4))
    for offset, key, color in ((0.0, "ratio_opt", "tab:blue"), (0.35, "ratio_lp", "tab:orange")):
        xs, ys, errs = [], [], []
        for k, algo in enumerate(algos):
            stats = per_algo[algo].get(key)
            if stats is None:
                continue
            xs.append(k + offset)
            ys.append(stats["mean"])
            errs.append(1.96 * stats["stddev"] / max(1.0, stats["count"] ** 0.5))
        if xs:
            ax.bar(xs, ys, width=0.3, yerr=errs, capsize=3, color=color, label=key)
    ax.set_xticks([k + 0.175 for k in range(len(algos))])
    ax.set_xticklabels(algos)
    ax.set_ylabel("mean profit ratio")
    ax.set_ylim(0, 1.05)
    ax.legend(loc="lower right")
    ax.set_title("profit ratios by algorithm (95% CI)")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_marginal_curve(curve: Sequence[dict], path: str | Path) -> None:
    js = [row["j"] for row in curve]
    q = [row["q_hat"] for row in curve]
    err = [3.0 * row.get("stderr", 0.0) for row in curve]
    overlay = [row["overlay"] for row in curve]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(js, q, yerr=err, fmt="o", ms=3, lw=0.8, label="sampled increment (3 s.e.)")
    ax.plot(js, overlay, "-", color="tab:red", label="(x*/m) exp(-j/m)")
    ax.set_xlabel("draw index j")
    ax.set_ylabel("marginal profit")
    ax.set_title("marginal profit of successive draws")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_concentration(reports: Sequence, path: str | Path) -> None:
    ts = [r.t for r in reports]
    fig, ax = plt.subplots(figsize=(6, 4))
    width = min(0.35 * min(abs(b - a) for a, b in zip(ts, ts[1:])) if len(ts) > 1 else 0.2, 0.4)
    ax.bar([t - width / 2 for t in ts], [r.empirical for r in reports], width=width, label="empirical tail")
    ax.bar([t + width / 2 for t in ts], [r.bound for r in reports], width=width, label="analytic bound")
    ax.set_xlabel("deviation t (in units of the max configuration profit)")
    ax.set_ylabel("lower-tail probability")
    ax.set_title("lower-tail frequency vs. self-bounding bound")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
