"""Render the experiment figures from the loggrowth CSV artifacts.

The plotting layer is deliberately dumb: it validates the CSV schemas,
applies axis transforms, and draws.  Slopes are read from the *_slopes
files and never refitted, so a figure can not disagree with the numbers
the experiment suite accepted.  Rendering is pure: a pinned style and
date-free SVG output make identical CSVs produce identical bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["FigureSpec", "SchemaError", "render", "FIGURE_IDS"]

SCHEMA_VERSION = "1"
FIGURE_IDS = ("fig1", "fig2", "fig3", "sm5")

_SCHEMAS = {
    "exp1.csv": ["experiment", "schema_version", "density", "estimator",
                 "eps", "M", "seeds", "mean_var", "se"],
    "exp1_slopes.csv": ["experiment", "schema_version", "density", "estimator",
                        "slope", "fit_lo", "fit_hi"],
    "exp2.csv": ["experiment", "schema_version", "density", "n",
                 "gap_median", "gap_q25", "gap_q75"],
    "exp2_complexity.csv": ["experiment", "schema_version", "density", "eta",
                            "n_samples"],
    "exp2_slopes.csv": ["experiment", "schema_version", "density", "kind",
                        "slope", "fit_lo", "fit_hi"],
    "exp3.csv": ["experiment", "schema_version", "method", "total_samples",
                 "eta", "gap_mean", "gap_se"],
    "exp3_slopes.csv": ["experiment", "schema_version", "method", "slope",
                        "fit_lo", "fit_hi"],
    "exp4a.csv": ["experiment", "schema_version", "scheme", "K", "b_sing",
                  "abs_err"],
    "exp4b.csv": ["experiment", "schema_version", "scheme", "iter",
                  "residual"],
}

_INPUTS = {
    "fig1": ("exp1.csv", "exp1_slopes.csv"),
    "fig2": ("exp2.csv", "exp2_complexity.csv", "exp2_slopes.csv"),
    "fig3": ("exp3.csv", "exp3_slopes.csv"),
    "sm5": ("exp4a.csv", "exp4b.csv"),
}

_STYLE = {
    "figure.dpi": 100,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "svg.hashsalt": "loggrowth-plots",   # deterministic element ids
    "svg.fonttype": "none",              # keep annotations as text nodes
}

_DENSITY_COLORS = {"D1": "C0", "D2": "C1", "D3": "C2", "D4": "C3"}


class SchemaError(ValueError):
    """Input CSV missing, malformed, or empty."""


@dataclass
class FigureSpec:
    figure_id: str
    in_dir: Path
    out_path: Path
    inputs: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise SchemaError(
                f"unknown figure id {self.figure_id!r}; expected one of {FIGURE_IDS}")
        self.in_dir = Path(self.in_dir)
        self.out_path = Path(self.out_path)
        self.inputs = _INPUTS[self.figure_id]


def slope_label(value: float) -> str:
    """Annotation text for a CSV-carried slope (tests compare it verbatim)."""
    return f"slope {value:.3f}"


def _load(in_dir: Path, name: str) -> list[dict]:
    path = Path(in_dir) / name
    if not path.exists():
        raise SchemaError(f"{name}: file not found in {in_dir}")
    with open(path) as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError(f"{name}: empty file") from None
    expected = _SCHEMAS[name]
    if header != expected:
        missing = [c for c in expected if c not in header]
        extra = [c for c in header if c not in expected]
        offender = (missing or extra or ["column order"])[0]
        raise SchemaError(f"{name}: schema mismatch at column {offender!r}")
    rows = [dict(zip(header, row)) for row in reader if row]
    if not rows:
        raise SchemaError(f"{name}: no data rows")
    for row in rows:
        if row["schema_version"] != SCHEMA_VERSION:
            raise SchemaError(
                f"{name}: schema_version {row['schema_version']!r} "
                f"!= {SCHEMA_VERSION!r}")
    return rows


def _floats(rows, key):
    return np.array([float(r[key]) for r in rows])


def _densities(rows):
    seen = []
    for r in rows:
        if r["density"] not in seen:
            seen.append(r["density"])
    return seen


def _fig1(in_dir):
    rows = _load(in_dir, "exp1.csv")
    slopes = {(r["density"], r["estimator"]): float(r["slope"])
              for r in _load(in_dir, "exp1_slopes.csv")}
    fig, (ax_naive, ax_paired) = plt.subplots(1, 2, figsize=(8.0, 3.2))
    for est, ax, title in (("naive", ax_naive, "raw estimator"),
                           ("paired", ax_paired, "symmetric pairing")):
        for name in _densities(rows):
            sub = [r for r in rows
                   if r["density"] == name and r["estimator"] == est]
            if not sub:
                raise SchemaError(f"exp1.csv: no rows for {name}/{est}")
            eps = _floats(sub, "eps")
            var = _floats(sub, "mean_var")
            order = np.argsort(eps)
            label = name
            if (name, est) in slopes:
                label += f" ({slope_label(slopes[(name, est)])})"
            ax.loglog(eps[order], var[order], marker="o", ms=3,
                      color=_DENSITY_COLORS.get(name), label=label)
        ax.set_xlabel("regularization eps")
        ax.set_ylabel("variance")
        ax.set_title(title)
        ax.legend(fontsize=7)
    fig.suptitle("Single-sample gradient estimator variance at K*")
    return fig


def _fig2(in_dir):
    rows = _load(in_dir, "exp2.csv")
    comp = _load(in_dir, "exp2_complexity.csv")
    slopes = {(r["density"], r["kind"]): float(r["slope"])
              for r in _load(in_dir, "exp2_slopes.csv")}
    fig, (ax_gap, ax_n) = plt.subplots(1, 2, figsize=(8.0, 3.2))
    for name in _densities(rows):
        sub = [r for r in rows if r["density"] == name]
        n = _floats(sub, "n")
        med = _floats(sub, "gap_median")
        q25 = _floats(sub, "gap_q25")
        q75 = _floats(sub, "gap_q75")
        color = _DENSITY_COLORS.get(name)
        label = name
        if (name, "gap") in slopes:
            label += f" ({slope_label(slopes[(name, 'gap')])})"
        ax_gap.loglog(n, med, color=color, label=label)
        ax_gap.fill_between(n, q25, q75, color=color, alpha=0.2, lw=0)
        csub = [r for r in comp if r["density"] == name]
        if csub:
            label_n = name
            if (name, "complexity") in slopes:
                label_n += f" ({slope_label(slopes[(name, 'complexity')])})"
            ax_n.loglog(_floats(csub, "eta"), _floats(csub, "n_samples"),
                        marker="s", ms=3, color=color, label=label_n)
    ax_gap.set_xlabel("iterations n")
    ax_gap.set_ylabel("tail-averaged gap (median, IQR)")
    ax_gap.set_title("gap trajectories")
    ax_gap.legend(fontsize=7)
    ax_n.set_xlabel("target accuracy eta")
    ax_n.set_ylabel("samples to reach eta")
    ax_n.set_title("sample complexity")
    ax_n.legend(fontsize=7)
    fig.suptitle("Density-known SGD with the paired estimator")
    return fig


_FIG3_STYLES = {
    "naive_sgd": dict(ls=":", marker="", color="C7", label="raw-score SGD"),
    "oracle_paired_sgd": dict(ls="-", marker="o", ms=3, color="C0",
                              label="oracle paired SGD"),
    "kde_plugin_pg": dict(ls="--", marker="^", ms=4, color="C1",
                          label="KDE plug-in PG"),
    "plug_and_solve": dict(ls="-.", marker="s", ms=4, color="C2",
                           label="plug-and-solve"),
}


def _fig3(in_dir):
    rows = _load(in_dir, "exp3.csv")
    slopes = {r["method"]: float(r["slope"])
              for r in _load(in_dir, "exp3_slopes.csv")}
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    anchor = None
    for method, style in _FIG3_STYLES.items():
        sub = [r for r in rows if r["method"] == method]
        if not sub:
            raise SchemaError(f"exp3.csv: no rows for method {method!r}")
        x = _floats(sub, "total_samples")
        y = _floats(sub, "gap_mean")
        order = np.argsort(x)
        label = style.pop("label")
        if method in slopes:
            label += f" ({slope_label(slopes[method])})"
        ax.loglog(x[order], y[order], label=label, **style)
        style["label"] = label
        if method == "kde_plugin_pg":
            anchor = (x[order][0], y[order][0])
    if anchor is not None:
        x0, y0 = anchor
        xs = np.geomspace(x0, max(_floats(rows, "total_samples")), 32)
        ax.loglog(xs, y0 * (xs / x0) ** -0.8, ls="--", lw=0.9, color="k",
                  label="reference slope -0.8")
    ax.set_xlabel("total samples")
    ax.set_ylabel("mean cost gap")
    ax.set_title("Density-unknown learning on D2")
    ax.legend(fontsize=7)
    return fig


def _sm5(in_dir):
    sweep = _load(in_dir, "exp4a.csv")
    newton = _load(in_dir, "exp4b.csv")
    fig, (ax_sweep, ax_newton) = plt.subplots(1, 2, figsize=(8.0, 3.2))
    for scheme, color in (("no_pole_info", "C3"), ("symmetric_cutoff", "C1"),
                          ("parity_shell", "C0")):
        sub = [r for r in sweep if r["scheme"] == scheme]
        if sub:
            x = _floats(sub, "b_sing")
            y = np.maximum(_floats(sub, "abs_err"), 1e-18)
            ax_sweep.semilogy(x, y, marker=".", ms=4, color=color, label=scheme)
        nsub = [r for r in newton if r["scheme"] == scheme]
        if nsub:
            ax_newton.semilogy(_floats(nsub, "iter"),
                               np.maximum(_floats(nsub, "residual"), 1e-18),
                               marker="o", ms=3, color=color, label=scheme)
    ax_sweep.set_xlabel("pole location")
    ax_sweep.set_ylabel("absolute gradient error")
    ax_sweep.set_title("pole sweep")
    ax_sweep.legend(fontsize=7)
    ax_newton.set_xlabel("Newton iteration")
    ax_newton.set_ylabel("residual")
    ax_newton.set_title("root finding on a narrow support")
    ax_newton.legend(fontsize=7)
    fig.suptitle("Quadrature stability at the moving pole")
    return fig


_RENDERERS = {"fig1": _fig1, "fig2": _fig2, "fig3": _fig3, "sm5": _sm5}


def render(spec: FigureSpec) -> Path:
    """Render one figure to a date-free SVG; returns the output path."""
    with plt.rc_context(_STYLE):
        fig = _RENDERERS[spec.figure_id](spec.in_dir)
        spec.out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.out_path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return spec.out_path
