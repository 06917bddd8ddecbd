"""Render figures from the wsnloc experiment CSVs.

Rendering is read-only over the input tables: beyond per-group means and
standard deviations, nothing is recomputed. All figures are deterministic
for fixed inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "wsnplots"  # reproducible element ids

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from matplotlib.patches import Ellipse

FIGURE_IDS = ("fig2", "ellipses", "mse_agents", "mse_total", "scan")

SCHEMAS = {
    "fig2": ["input_bw", "L", "trial", "error"],
    "ellipses": ["algorithm", "agent", "cx", "cy", "m11", "m12", "m22",
                 "level"],
    "mse_agents": ["algorithm", "trial", "timestep", "agent", "mse"],
    "mse_total": ["algorithm", "timestep", "mean_total_mse", "n_trials",
                  "n_diverged"],
    "scan": ["lambda", "side", "n_vertices", "phi_max", "seed"],
}


class SchemaError(Exception):
    """Input CSV does not match the documented column schema."""


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: figure id, input CSV, output image path, styling."""

    figure_id: str
    input_path: str
    output_path: str
    dpi: int = 150
    title: str | None = None
    min_bin_samples: int = 30  # scan figure: samples required per count bin

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(
                f"unknown figure id {self.figure_id!r}; "
                f"expected one of {FIGURE_IDS}"
            )


def load_table(path, figure_id) -> pd.DataFrame:
    """Read one CSV and check it against the figure's column schema."""
    expected = SCHEMAS[figure_id]
    if not Path(path).is_file():
        raise FileNotFoundError(f"input CSV not found: {path}")
    df = pd.read_csv(path)
    found = list(df.columns)
    if found != expected:
        missing = [c for c in expected if c not in found]
        extra = [c for c in found if c not in expected]
        raise SchemaError(
            f"{path}: columns {found} do not match the {figure_id} schema "
            f"{expected} (missing: {missing or 'none'}, "
            f"unexpected: {extra or 'none'})"
        )
    if df.empty:
        raise SchemaError(f"{path}: no data rows")
    return df


def _new_axes(title):
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    if title:
        ax.set_title(title)
    return fig, ax


def draw_fig2(df, ax):
    """Approximation error of the banded inverse vs the band parameter,
    one curve per input bandwidth, trial-averaged."""
    means = (
        df.groupby(["input_bw", "L"])["error"].mean().reset_index()
    )
    for bw, group in means.groupby("input_bw"):
        group = group.sort_values("L")
        ax.semilogy(group["L"], group["error"], marker="o", markersize=3,
                    label=f"input bandwidth {bw}")
    ax.set_xlabel("band parameter L")
    ax.set_ylabel("Frobenius error of the banded inverse")
    ax.legend()


def ellipse_patch(cx, cy, m11, m12, m22, level, **style):
    """The level set {p : (p-c)^T M^{-1} (p-c) = level} of a 2x2 covariance
    block M, as a matplotlib patch. Isotropic blocks give circles."""
    m = np.array([[m11, m12], [m12, m22]])
    eigvals, eigvecs = np.linalg.eigh(m)
    if np.any(eigvals <= 0):
        raise ValueError("covariance block is not positive definite")
    half_axes = np.sqrt(level * eigvals)
    angle = np.degrees(np.arctan2(eigvecs[1, 1], eigvecs[0, 1]))
    return Ellipse((cx, cy), width=2 * half_axes[1], height=2 * half_axes[0],
                   angle=angle, fill=False, **style)


def draw_ellipses(df, ax):
    """Estimate markers with their covariance level-set ellipses, one color
    per algorithm."""
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for idx, (algo, group) in enumerate(df.groupby("algorithm")):
        color = colors[idx % len(colors)]
        ax.plot(group["cx"], group["cy"], ".", color=color, label=algo)
        for row in group.itertuples():
            ax.add_patch(
                ellipse_patch(row.cx, row.cy, row.m11, row.m12, row.m22,
                              row.level, edgecolor=color, linewidth=0.8)
            )
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_aspect("equal")
    ax.legend()


def draw_mse_agents(df, fig):
    """Per-agent trial-averaged MSE over time, one panel per algorithm."""
    means = (
        df.groupby(["algorithm", "timestep", "agent"])["mse"]
        .mean()
        .reset_index()
    )
    algos = sorted(means["algorithm"].unique())
    axes = fig.subplots(1, len(algos), sharey=True, squeeze=False)[0]
    for ax, algo in zip(axes, algos):
        sub = means[means["algorithm"] == algo]
        for _, agent_curve in sub.groupby("agent"):
            curve = agent_curve.sort_values("timestep")
            ax.semilogy(curve["timestep"], curve["mse"], linewidth=0.7)
        ax.set_title(algo)
        ax.set_xlabel("timestep")
    axes[0].set_ylabel("per-agent MSE (m²)")


def draw_mse_total(df, ax):
    """Trial-averaged total MSE over time, one curve per algorithm."""
    for algo, group in df.groupby("algorithm"):
        curve = group.sort_values("timestep")
        ax.semilogy(curve["timestep"], curve["mean_total_mse"], label=algo)
    ax.set_xlabel("timestep")
    ax.set_ylabel("total MSE (m²)")
    ax.legend()


def bin_by_count(n_vertices, values, min_samples):
    """Group samples by realized vertex count, widening each bin until it
    holds at least min_samples samples; returns (center, mean, std) rows."""
    order = np.argsort(n_vertices, kind="stable")
    n_sorted = np.asarray(n_vertices)[order]
    v_sorted = np.asarray(values)[order]
    rows = []
    start = 0
    total = n_sorted.size
    while start < total:
        end = start
        # grow by whole count values so equal counts never straddle bins
        while end < total and (
            end - start < min_samples or
            (end < total and n_sorted[end] == n_sorted[end - 1])
        ):
            end += 1
        if total - end < min_samples and rows:
            end = total  # fold a short tail into the last bin
        chunk_n = n_sorted[start:end]
        chunk_v = v_sorted[start:end]
        rows.append(
            (float(chunk_n.mean()), float(chunk_v.mean()),
             float(chunk_v.std()))
        )
        start = end
    return rows


def draw_scan(df, ax, min_bin_samples=30):
    """Mean window statistic vs realized vertex count, one curve per rate
    with a +/- 2 standard deviation band, plus the dashed linear reference
    of the maximal bandwidth (|V| - 1)."""
    for lam, group in df.groupby("lambda"):
        binned = bin_by_count(group["n_vertices"].to_numpy(),
                              group["phi_max"].to_numpy(), min_bin_samples)
        centers = np.array([b[0] for b in binned])
        means = np.array([b[1] for b in binned])
        stds = np.array([b[2] for b in binned])
        line, = ax.plot(centers, means, label=f"$\\lambda$ = {lam:g}")
        ax.fill_between(centers, means - 2 * stds, means + 2 * stds,
                        color=line.get_color(), alpha=0.2, linewidth=0)
    n_max = float(df["n_vertices"].max())
    ref = np.array([1.0, max(n_max, 2.0)])
    ax.plot(ref, ref - 1, "k--", label="maximal bandwidth")
    ax.set_xlabel("number of agents")
    ax.set_ylabel("relabeled bandwidth bound")
    ax.legend()


def render(spec: FigureSpec) -> str:
    """Render one figure to spec.output_path; returns the output path."""
    df = load_table(spec.input_path, spec.figure_id)
    if spec.figure_id == "mse_agents":
        fig = plt.figure(figsize=(9.6, 4.0))
        if spec.title:
            fig.suptitle(spec.title)
        draw_mse_agents(df, fig)
    else:
        fig, ax = _new_axes(spec.title)
        if spec.figure_id == "fig2":
            draw_fig2(df, ax)
        elif spec.figure_id == "ellipses":
            draw_ellipses(df, ax)
        elif spec.figure_id == "mse_total":
            draw_mse_total(df, ax)
        else:
            draw_scan(df, ax, min_bin_samples=spec.min_bin_samples)
    try:
        fig.savefig(spec.output_path, dpi=spec.dpi,
                    metadata=_deterministic_metadata(spec.output_path))
    finally:
        plt.close(fig)
    return spec.output_path


def _deterministic_metadata(path):
    """Strip writer timestamps so reruns are byte-identical."""
    suffix = Path(path).suffix.lower()
    if suffix == ".svg":
        return {"Date": None}
    if suffix == ".png":
        return {"Software": None}
    return None
