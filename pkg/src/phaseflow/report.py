"""Result persistence: stamped CSV/JSON writers and figure rendering.

Every output file carries the artifact version, the run seed, and the config
hash (tabular files as a leading comment line, JSON files as meta keys).
Tabular data is RFC 4180 CSV with CRLF line endings and floats printed with
repr-faithful precision so that equal-seed runs are byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__


@dataclass(frozen=True)
class RunMeta:
    seed: int
    config_hash: str

    @property
    def stamp(self) -> str:
        return f"phaseflow {__version__} seed={self.seed} config={self.config_hash}"


def _fmt(value) -> str:
    if isinstance(value, float) or isinstance(value, np.floating):
        if math.isnan(value):
            return "nan"
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header, rows, meta: RunMeta) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# {meta.stamp}\r\n")
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


def write_json(path, payload: dict, meta: RunMeta) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {
        "artifact_version": __version__,
        "seed": meta.seed,
        "config_hash": meta.config_hash,
    }
    body.update(_jsonable(payload))
    with open(path, "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# figures


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_profile(path, field, title="transition profile"):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(field.grid.nodes, field.values, lw=1.5)
    ax.axhline(1.0, color="gray", lw=0.5, ls="--")
    ax.axhline(-1.0, color="gray", lw=0.5, ls="--")
    ax.set_xlabel("t")
    ax.set_ylabel("u")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_m_table(path, table, title="interval constant vs half-length"):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    T = [row[0] for row in table]
    m = [row[1] for row in table]
    ax.plot(T, m, "o-")
    ax.set_xlabel("T")
    ax.set_ylabel("m(T)")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_polar_density(path, angles, values, title="surface density by normal angle"):
    plt = _plt()
    fig = plt.figure(figsize=(5.5, 5.5))
    ax = fig.add_subplot(projection="polar")
    ang = list(angles) + [a + math.pi for a in angles]
    val = list(values) * 2
    order = np.argsort(ang)
    ax.plot(np.asarray(ang)[order], np.asarray(val)[order], "o-")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_gamma_curves(path, report, title="energies along the eps schedule"):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(report.eps_table, report.energies, "o-", label="minimized")
    ax.plot(report.eps_table, report.recovery_energies, "s--", label="recovery field")
    if np.isfinite(report.predicted):
        ax.axhline(report.predicted, color="k", lw=0.8, label="predicted limit")
    ax.set_xlabel("eps")
    ax.set_ylabel("energy")
    ax.set_xscale("log")
    ax.invert_xaxis()
    ax.legend()
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_field2d(path, field, title="cell solution"):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5.5, 5))
    x, y = field.grid.node_xy()
    pc = ax.pcolormesh(x, y, field.values, shading="auto", cmap="RdBu_r", vmin=-1.2, vmax=1.2)
    fig.colorbar(pc, ax=ax, label="u")
    ax.set_aspect("equal")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_well(path, well_spec, title="double-well energy density"):
    plt = _plt()
    from .potential import eval_potential

    fig, ax = plt.subplots(figsize=(6, 4))
    s = np.linspace(-2.0, 2.0, 801)
    ax.plot(s, eval_potential(well_spec, s), lw=1.5)
    ax.set_xlabel("s")
    ax.set_ylabel("W(s)")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
