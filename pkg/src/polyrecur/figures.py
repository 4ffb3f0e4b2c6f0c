"""Matplotlib rendering of the report-path figures (KM, ROC, forest plot,
importance ranking).  Figures are written next to their CSV counterparts;
SVG output is made reproducible by pinning the hash salt and dropping the
date metadata.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "polyrecur"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def _save(fig, path) -> None:
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def render_km(curves, path, title="") -> None:
    """Step plot of per-group KM curves, anchored at S(0) = 1."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for group, curve in curves.items():
        t = np.concatenate(([0.0], curve.times))
        s = np.concatenate(([1.0], curve.survival))
        ax.step(t, s, where="post", label=str(group))
    ax.set_xlabel("days since baseline colonoscopy")
    ax.set_ylabel("recurrence-free fraction")
    ax.set_ylim(0.0, 1.02)
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def render_roc(points, auc, path, horizon_days=None) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    fpr = [p[0] for p in points]
    tpr = [p[1] for p in points]
    ax.plot(fpr, tpr, drawstyle="steps-post")
    ax.plot([0, 1], [0, 1], linestyle="--", linewidth=0.8, color="gray")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    label = f"AUC = {auc:.3f}"
    if horizon_days is not None:
        label += f" at {horizon_days:g} days"
    ax.set_title(label)
    fig.tight_layout()
    _save(fig, path)


def render_forest_plot(fit, path) -> None:
    """Risk ratios with 95% CIs on a log axis, reference line at 1."""
    fig, ax = plt.subplots(figsize=(6, 0.5 + 0.4 * len(fit.covariates)))
    names = list(reversed(fit.covariates))
    y = np.arange(len(names))
    rrs = np.array([fit.risk_ratios[n][0] for n in names])
    lows = np.array([fit.risk_ratios[n][1] for n in names])
    highs = np.array([fit.risk_ratios[n][2] for n in names])
    ax.errorbar(rrs, y, xerr=[rrs - lows, highs - rrs], fmt="o",
                capsize=3, markersize=4)
    ax.axvline(1.0, linestyle="--", linewidth=0.8, color="gray")
    ax.set_yticks(y)
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xscale("log")
    ax.set_xlabel("risk ratio (95% CI)")
    fig.tight_layout()
    _save(fig, path)


def render_vimp(importance, path) -> None:
    """Ranked log10(|importance|) bars, most important on top."""
    ranked = sorted(importance.items(), key=lambda kv: -abs(kv[1]))
    ranked = [(name, value) for name, value in ranked if value != 0.0]
    if not ranked:
        ranked = [("(all zero)", 0.0)]
    names = [name for name, _ in reversed(ranked)]
    logs = [np.log10(abs(value)) if value != 0.0 else 0.0
            for _, value in reversed(ranked)]
    fig, ax = plt.subplots(figsize=(6, 0.4 + 0.3 * len(names)))
    ax.barh(np.arange(len(names)), logs)
    ax.set_yticks(np.arange(len(names)))
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xlabel("log10 |permutation importance|")
    fig.tight_layout()
    _save(fig, path)
