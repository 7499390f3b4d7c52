"""Deterministic figure rendering for the five supported plot kinds.

Figures are drawn with a pinned style and saved without volatile metadata,
so identical inputs and style version produce byte-identical images.
"""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .schema import MissingColumnsError, floats, read_csv, read_json

STYLE_VERSION = 1
TWO_SPIN_BOUND = math.sqrt(2.0 / 3.0)

_RC = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "svg.hashsalt": "singletfigs",
    "figure.max_open_warning": 0,
}


def _save(fig, output: Path):
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    kwargs = {}
    if output.suffix.lower() == ".png":
        kwargs["metadata"] = {"Software": f"singletfigs style {STYLE_VERSION}"}
    elif output.suffix.lower() == ".svg":
        kwargs["metadata"] = {"Date": None}
    fig.savefig(output, **kwargs)
    plt.close(fig)
    return output


def _grid_values(column):
    vals = np.array(sorted(set(column)))
    return vals


def _surface(spec):
    cols = read_csv(spec["inputs"]["csv"],
                    ("nu_hz", "delta_hz", "fidelity", "converged"))
    nu = np.array(floats(cols["nu_hz"]))
    de = np.array(floats(cols["delta_hz"]))
    fid = np.array(floats(cols["fidelity"]))
    nu_ax = _grid_values(nu)
    de_ax = _grid_values(de)
    grid = np.full((len(nu_ax), len(de_ax)), np.nan)
    i = np.searchsorted(nu_ax, nu)
    j = np.searchsorted(de_ax, de)
    grid[i, j] = fid
    meta = {}
    if "sidecar" in spec["inputs"]:
        meta = read_json(spec["inputs"]["sidecar"])
    return nu_ax, de_ax, grid, meta


def render_heatmap(spec) -> Path:
    nu_ax, de_ax, grid, meta = _surface(spec)
    label = "fidelity"
    if spec["normalization"] == "bound_relative":
        bound = meta.get("meta", {}).get("bound", TWO_SPIN_BOUND)
        grid = grid / bound
        label = "fidelity / bound"
    deviation_axes = spec["kind"] == "robustness"
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.2, 3.4))
        mesh = ax.pcolormesh(nu_ax, de_ax, grid.T, shading="nearest",
                             cmap="viridis")
        fig.colorbar(mesh, ax=ax, label=label)
        best = meta.get("best_point")
        if best:
            ax.plot(best["nu_hz"], best["delta_hz"], marker="*", ms=11,
                    mfc="white", mec="black")
        prefix = "deviation in " if deviation_axes else ""
        ax.set_xlabel(f"{prefix}RF amplitude (Hz)")
        ax.set_ylabel(f"{prefix}RF offset (Hz)")
        if spec["title"]:
            ax.set_title(spec["title"])
        fig.tight_layout()
        return _save(fig, spec["output"])


def render_bloch(spec) -> Path:
    cols = read_csv(spec["inputs"]["csv"],
                    ("time_s", "sphere_label", "x", "y", "z"))
    labels = []
    for lab in cols["sphere_label"]:
        if lab and lab not in labels:
            labels.append(lab)
    if not labels:
        raise MissingColumnsError(spec["inputs"]["csv"], ("sphere_label",))
    t = np.array(floats(cols["time_s"]))
    x = np.array(floats(cols["x"]))
    z = np.array(floats(cols["z"]))
    lab_arr = np.array(cols["sphere_label"])
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, len(labels),
                                 figsize=(2.6 * len(labels), 2.9),
                                 squeeze=False)
        for ax, lab in zip(axes[0], labels):
            sel = lab_arr == lab
            circle = plt.Circle((0, 0), 1.0, fill=False, color="0.6", lw=0.8)
            ax.add_patch(circle)
            ax.axhline(0, color="0.85", lw=0.5, zorder=0)
            ax.axvline(0, color="0.85", lw=0.5, zorder=0)
            # orthographic projection onto the (x, z) plane, colored by time
            pts = ax.scatter(x[sel], z[sel], c=t[sel], s=6, cmap="plasma")
            ax.plot(x[sel][:1], z[sel][:1], marker="^", color="black", ms=6)
            ax.plot(x[sel][-1:], z[sel][-1:], marker="v", color="black", ms=6)
            ax.set_xlim(-1.15, 1.15)
            ax.set_ylim(-1.15, 1.15)
            ax.set_aspect("equal")
            ax.set_title(f"S0 vs {lab}")
            ax.set_xticks([])
            ax.set_yticks([])
        fig.colorbar(pts, ax=axes[0], label="time (s)", shrink=0.85)
        if spec["title"]:
            fig.suptitle(spec["title"])
        return _save(fig, spec["output"])


def render_decay(spec) -> Path:
    cols = read_csv(spec["inputs"]["csv"], ("time_s", "amplitude"))
    t = np.array(floats(cols["time_s"]))
    a = np.array(floats(cols["amplitude"]))
    fit = read_json(spec["inputs"]["fit"]) if "fit" in spec["inputs"] else None
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.2, 3.0))
        ax.plot(t, a, "o", ms=4, label="signal")
        if fit:
            tt = np.linspace(t.min(), t.max(), 200)
            ax.plot(tt, fit["amplitude0"] * np.exp(-tt / fit["t_lls_s"]),
                    "-", lw=1.2,
                    label=f"fit: T = {fit['t_lls_s']:.1f} "
                          f"$\\pm$ {fit.get('t_lls_stderr_s', 0.0):.1f} s")
            ax.legend(frameon=False)
        ax.set_xlabel("storage time (s)")
        ax.set_ylabel("amplitude (a.u.)")
        if spec["title"]:
            ax.set_title(spec["title"])
        fig.tight_layout()
        return _save(fig, spec["output"])


def render_comparison(spec) -> Path:
    cols = read_csv(spec["inputs"]["csv"],
                    ("result", "relative_fidelity", "duration_ms"))
    names, fids, durs = [], [], []
    for nm, rf, dm in zip(cols["result"], cols["relative_fidelity"],
                          cols["duration_ms"]):
        if rf == "" or dm == "":
            continue
        names.append(nm.replace("_baseline", "").replace("_evaluation", ""))
        fids.append(float(rf))
        durs.append(float(dm))
    if not names:
        raise MissingColumnsError(spec["inputs"]["csv"],
                                  ("relative_fidelity", "duration_ms"))
    order = np.argsort(durs)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.6, 3.0))
        pos = np.arange(len(names))
        ax.bar(pos, [durs[k] for k in order], color="#4878d0",
               label="duration (ms)")
        ax.set_ylabel("duration (ms)")
        ax.set_xticks(pos)
        ax.set_xticklabels([names[k] for k in order], rotation=30, ha="right")
        twin = ax.twinx()
        twin.plot(pos, [fids[k] for k in order], "o-", color="#d65f5f",
                  label="fidelity / bound")
        twin.set_ylabel("fidelity / bound")
        twin.set_ylim(0, 1.05)
        if spec["title"]:
            ax.set_title(spec["title"])
        fig.tight_layout()
        return _save(fig, spec["output"])


RENDERERS = {
    "heatmap": render_heatmap,
    "robustness": render_heatmap,
    "bloch": render_bloch,
    "decay": render_decay,
    "comparison": render_comparison,
}


def render(spec: dict) -> Path:
    """Dispatch a resolved plot spec to its renderer; returns the image path."""
    return RENDERERS[spec["kind"]](spec)
