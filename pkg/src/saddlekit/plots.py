"""Figure rendering for campaign outputs.

Every campaign that writes CSV/JSON also drops PNG figures next to them.
Rendering is headless (Agg) and derives everything from the CampaignResult
rows, so figures always agree with the emitted data.
"""

from __future__ import annotations

import json
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_campaign_figures(result, out_dir) -> list:
    """Dispatch on experiment kind; returns the list of written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    renderers = {
        "lep-all-index": _render_all_index,
        "lep-perturb": _render_perturb,
        "lep-sweep": _render_sweep,
        "rhf-scan": _render_rhf_scan,
        "oracle-dump": _render_catalog,
    }
    fn = renderers.get(result.experiment)
    if fn is None:
        return []
    return fn(result, out_dir)


def _render_all_index(result, out_dir):
    counts = defaultdict(int)
    for row in result.rows:
        if row.matched_config is not None:
            counts[row.classified_index] += 1
    if counts:
        kmax = max(counts)
    else:
        kmax = 0
    ks = np.arange(kmax + 1)
    vals = [counts.get(int(k), 0) for k in ks]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(ks, vals, color="#4878a8")
    ax.set_xlabel("Morse index of matched stationary point")
    ax.set_ylabel("matched runs")
    ax.set_title("All-index pool: matches per index")
    ax.set_xticks(ks)
    path = out_dir / "lep-all-index_matches.png"
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return [path]


def _render_perturb(result, out_dir):
    cells = list(result.aggregates)
    rates = [result.aggregates[c]["success_rate"] for c in cells]
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(cells)), 4))
    ax.bar(np.arange(len(cells)), rates, color="#4878a8")
    ax.set_xticks(np.arange(len(cells)))
    ax.set_xticklabels(cells, rotation=30, ha="right", fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.axhline(1.0, color="gray", lw=0.8, ls=":")
    ax.set_ylabel("success rate")
    ax.set_title("Perturbation study: success per cell")
    path = out_dir / "lep-perturb_success.png"
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return [path]


def _render_sweep(result, out_dir):
    ex_vals = sorted({_cell_etas(c)[0] for c in result.aggregates})
    ep_vals = sorted({_cell_etas(c)[1] for c in result.aggregates})
    iters = np.full((len(ep_vals), len(ex_vals)), np.nan)
    for cell, agg in result.aggregates.items():
        ex, ep = _cell_etas(cell)
        if agg["mean_iterations"] is not None:
            iters[ep_vals.index(ep), ex_vals.index(ex)] = agg["mean_iterations"]
    fig, ax = plt.subplots(figsize=(6.5, 5))
    im = ax.imshow(iters, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(ex_vals)))
    ax.set_xticklabels([f"{v:g}" for v in ex_vals])
    ax.set_yticks(range(len(ep_vals)))
    ax.set_yticklabels([f"{v:g}" for v in ep_vals])
    ax.set_xlabel("position step")
    ax.set_ylabel("plane step")
    ax.set_title("Step-size sweep: mean iterations of successful runs")
    fig.colorbar(im, ax=ax, label="iterations")
    path = out_dir / "lep-sweep_iterations.png"
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return [path]


def _cell_etas(cell: str) -> tuple[float, float]:
    parts = dict(kv.split("=") for kv in cell.split("/"))
    return float(parts["eta_x"]), float(parts["eta_plane"])


def _render_rhf_scan(result, out_dir):
    """Energy of each discovered index vs bond length, one marker per value."""
    bond = {}
    for path in result.config.fcidump:
        stem = Path(path).stem
        sidecar = Path(path).with_suffix(".json")
        if sidecar.exists():
            with open(sidecar) as fh:
                bond[stem] = json.load(fh).get("bond_length_bohr")
    series = defaultdict(list)  # index -> [(bond or cell ordinal, value)]
    for row in result.rows:
        if not row.converged or row.classified_index is None:
            continue
        xval = bond.get(row.cell)
        if xval is None:
            xval = list(result.aggregates).index(row.cell)
        series[row.classified_index].append((xval, row.terminal_value))
    fig, ax = plt.subplots(figsize=(7, 5))
    for idx in sorted(series):
        pts = np.array(sorted(set(series[idx])))
        ax.plot(pts[:, 0], pts[:, 1], "o", ms=4, label=f"index {idx}")
    ax.set_xlabel("bond length (bohr)")
    ax.set_ylabel("stationary total energy (hartree)")
    ax.set_title("Hartree-Fock stationary points by index")
    ax.legend(fontsize=8)
    path = out_dir / "rhf-scan_energies.png"
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return [path]


def _render_catalog(result, out_dir):
    vals = [row.terminal_value for row in result.rows]
    idxs = [row.classified_index for row in result.rows]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(idxs, vals, "o", ms=4, color="#4878a8")
    ax.set_xlabel("Morse index")
    ax.set_ylabel("stationary value")
    ax.set_title("Stationary-point catalog")
    path = out_dir / "oracle-dump_catalog.png"
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return [path]
