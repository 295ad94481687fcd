"""Artifact writers and figure rendering for experiment outputs.

Every experiment emits deterministic delimited artifacts (CSV with a header
row, JSON with sorted keys, JSON-lines for event logs); floats are formatted
with repr-faithful precision so re-running a config byte-reproduces the
files. Alongside the delimited output the report path can render a matching
matplotlib figure per experiment.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def fmt(value) -> str:
    """Shortest round-trippable decimal form of a float."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path, header, columns) -> Path:
    """Write named columns (equal length) as CSV with one header row."""
    path = Path(path)
    cols = [np.asarray(c) for c in columns]
    n = len(cols[0])
    if any(len(c) != n for c in cols):
        raise ValueError("CSV columns must have equal length")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(n):
            writer.writerow([fmt(c[i]) for c in cols])
    return path


def write_json(path, payload) -> Path:
    path = Path(path)
    with path.open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_events_jsonl(path, records) -> Path:
    """One JSON object per jump event: seed, time, channel, quanta_removed."""
    path = Path(path)
    with path.open("w") as fh:
        for rec in records:
            for ev in rec.events:
                fh.write(json.dumps({
                    "seed": int(rec.seed),
                    "time": float(ev.time),
                    "channel": ev.channel,
                    "quanta_removed": int(ev.quanta_removed),
                }, sort_keys=True))
                fh.write("\n")
    return path


def _save(fig, path):
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return Path(path)


def render_scan(scan, anticrossings, path):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for k in range(scan.levels.shape[1]):
        ax.plot(scan.omega_grid, scan.levels[:, k], lw=0.8, color="tab:blue")
    for ac in anticrossings:
        ax.axvline(ac.omega_star, color="tab:red", ls="--", lw=0.8)
    ax.set_xlabel(r"$\Omega/\omega_b$")
    ax.set_ylabel(r"$(E - E_0)/\omega_b$")
    ax.set_title("Energy levels vs drive amplitude")
    return _save(fig, path)


def render_timeseries(times, series, path, ylabel="population", title=""):
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, values in series.items():
        ax.plot(times, values, lw=1.2, label=name)
    ax.set_xlabel(r"$\omega_b t$")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8, ncol=2)
    return _save(fig, path)


def render_spectrum(omega, series, path, title=""):
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, values in series.items():
        ax.plot(omega, values, lw=1.2, label=name)
    ax.set_xlabel(r"$\omega/\omega_b$")
    ax.set_ylabel("emission spectrum (arb. units)")
    ax.set_yscale("log")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=9)
    return _save(fig, path)


def render_rates(lambda_grid, analytic, numeric, path, title=""):
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(lambda_grid, analytic, "-", color="tab:red", label="analytic")
    ax.plot(lambda_grid, numeric, "o", color="black", mfc="none", label="numeric (gap)")
    ax.set_xlabel(r"$\lambda/\omega_b$")
    ax.set_ylabel(r"$W^{\rm eff}/\omega_b^2$")
    ax.set_yscale("log")
    if title:
        ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def render_g2_sweep(lambda_grid, g2, path, title=""):
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(lambda_grid, g2, "o-", color="tab:purple")
    ax.axhline(1.0, color="gray", ls=":")
    ax.set_xlabel(r"$\lambda/\omega_b$")
    ax.set_ylabel(r"$g^{(2)}_{ab}$")
    ax.set_yscale("log")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def render_events(w_eff, mean, stderr, path, title=""):
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.errorbar(w_eff, mean, yerr=stderr, fmt="s-", color="tab:green", capsize=3)
    ax.set_xlabel(r"$W^{\rm eff}/\omega_b^2$")
    ax.set_ylabel(r"$\bar{N}_T$")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def render_trajectory(record, population_keys, path, title=""):
    fig, ax = plt.subplots(figsize=(7, 4))
    for key in population_keys:
        ax.plot(record.times, record.observables[key], lw=1.0, label=key)
    marker = {"photon": ("v", "gold"), "photon_pair": ("v", "orange"),
              "phonon": ("^", "tab:blue"), "atom": ("x", "black")}
    for ev in record.events:
        m, c = marker.get(ev.channel, ("o", "gray"))
        ax.plot([ev.time], [1.02], marker=m, color=c, clip_on=False)
    ax.set_xlabel(r"$\omega_b t$")
    ax.set_ylabel("population")
    ax.set_ylim(-0.02, 1.05)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8, ncol=2)
    return _save(fig, path)
