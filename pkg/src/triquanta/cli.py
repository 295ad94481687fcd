"""Config-driven experiment runner.

Usage:
    triquanta run <config.toml | preset-name> [--no-plot] [--output-dir DIR]
    triquanta validate <config.toml | preset-name>
    triquanta presets list

A config is a TOML file with [model], [space], [experiment] and [output]
sections; all frequencies and rates are in units of omega_b. Experiments map
one-to-one onto figure-level workflows (level scans, super-Rabi evolution,
steady states, emission spectra, g2 sweeps, rate comparisons, quantum
trajectories and emission-event counting) and write deterministic CSV/JSON
artifacts plus a manifest with every resolved default. Exit codes: 0 on
success, 2 on a config error, 3 on a numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__, report
from .correlations import cross_g2, emission_spectrum, two_time_correlation
from .dynamics import evolve_closed, evolve_open, liouvillian, standard_channels, steady_state
from .hilbert import build_space, dressed_state, label_key, ladder_operator, parse_label
from .model import ModelParams, resonance_drive
from .perturbation import compare_rates, w11_analytic, w22_analytic
from .spectrum import locate_anticrossing, scan_drive
from .trajectories import count_correlated_emissions, run_trajectories, trajectory_populations

EXPERIMENT_KINDS = (
    "scan", "rabi", "evolve", "steady", "spectrum",
    "g2-sweep", "rates", "trajectories", "events",
)

MODEL_KEYS = {
    "delta_a", "delta_sigma", "omega_b", "lambda", "omega_drive",
    "kappa_a", "kappa_a2", "kappa_b", "gamma",
}

_SEED_KINDS = ("trajectories", "events")


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    """Numerical failure, tagged with the stage that produced it."""

    def __init__(self, stage, err):
        super().__init__(f"stage '{stage}': {err}")
        self.stage = stage


# ---------------------------------------------------------------------------
# config loading / validation


def _preset_dir() -> Path:
    return Path(__file__).parent / "presets"


def resolve_config_path(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    preset = _preset_dir() / f"{name}.toml"
    if preset.exists():
        return preset
    raise ConfigError(f"config '{name}' is neither a file nor a known preset")


def load_config(name: str) -> dict:
    path = resolve_config_path(name)
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path}: {err}") from err


def _model_params(raw: dict) -> ModelParams:
    unknown = set(raw) - MODEL_KEYS
    if unknown:
        raise ConfigError(f"unknown model keys: {sorted(unknown)}")
    kwargs = {("lam" if k == "lambda" else k): float(v) for k, v in raw.items()}
    for required in ("delta_a", "omega_drive", "lam"):
        if required not in kwargs:
            raise ConfigError(
                f"model.{'lambda' if required == 'lam' else required} is required"
            )
    try:
        return ModelParams(**kwargs)
    except ValueError as err:
        raise ConfigError(f"model: {err}") from err


def validate_config(cfg: dict) -> list:
    """Return a list of human-readable validation errors (empty = valid)."""
    errors = []
    for section in ("model", "experiment"):
        if section not in cfg or not isinstance(cfg.get(section), dict):
            errors.append(f"missing [{section}] section")
    if errors:
        return errors
    try:
        _model_params(cfg["model"])
    except ConfigError as err:
        errors.append(str(err))
    space_cfg = cfg.get("space", {})
    try:
        build_space(space_cfg.get("photon_trunc", 6), space_cfg.get("phonon_trunc", 6))
    except (ValueError, TypeError) as err:
        errors.append(f"space: {err}")
    exp = cfg["experiment"]
    kind = exp.get("kind")
    if kind not in EXPERIMENT_KINDS:
        errors.append(f"experiment.kind must be one of {EXPERIMENT_KINDS}, got {kind!r}")
        return errors
    if kind in _SEED_KINDS and "seed" not in exp:
        errors.append(f"experiment.seed is required for kind {kind!r}")
    for grid_key in ("lambda_grid",):
        grid = exp.get(grid_key)
        if grid is not None and list(grid) != sorted(float(g) for g in grid):
            errors.append(f"experiment.{grid_key} must be sorted ascending")
    for case in exp.get("cases", []):
        if "tag" not in case:
            errors.append("every experiment case needs a 'tag'")
    for label_key_ in ("populations", "initial"):
        value = exp.get(label_key_)
        items = [value] if isinstance(value, str) else (value or [])
        for item in items:
            try:
                parse_label(item)
            except ValueError as err:
                errors.append(f"experiment.{label_key_}: {err}")
    return errors


# ---------------------------------------------------------------------------
# shared experiment helpers


def _resolve_drive(exp, params, space, notes):
    """Drive amplitude: explicit number, 'nominal' resonance, or 'located'."""
    drive = exp.get("drive", "located")
    if isinstance(drive, (int, float)):
        omega = float(drive)
    else:
        pair = [parse_label(p) for p in exp["pair"]]
        target = pair[1]
        nominal = resonance_drive(target[0], target[1], params).omega_drive
        if drive == "nominal":
            omega = nominal
        elif drive == "located":
            found = locate_anticrossing(
                params.replace(omega_drive=nominal), space, pair, exp["bracket"]
            )
            omega = found.omega_star
            notes["located_gap"] = found.gap
        else:
            raise ConfigError(f"experiment.drive must be a number, 'nominal' or 'located'")
    notes["omega_drive"] = omega
    return params.replace(omega_drive=omega)


def _initial_state(exp, space):
    label = parse_label(exp.get("initial", "00-"))
    return dressed_state(space, *label)


def _population_keys(exp):
    return [parse_label(p) for p in exp.get("populations", [])]


def _analytic_rate(target, lam, params):
    nominal = resonance_drive(target[0], target[1], params).omega_drive
    if (target[0], target[1]) == (1, 1):
        return w11_analytic(lam)
    if (target[0], target[1]) == (2, 2):
        return w22_analytic(lam, nominal, params.delta_a, params.omega_b)
    raise ConfigError(f"no analytic rate for target {target}")


# ---------------------------------------------------------------------------
# experiment runners: each returns (artifact paths, notes dict)


def _run_scan(exp, params, space, outdir, tag, plot):
    grid = np.arange(
        float(exp.get("omega_min", 1.0)),
        float(exp.get("omega_max", 3.0)) + 1e-12,
        float(exp.get("omega_step", 0.005)),
    )
    n_levels = int(exp.get("n_levels", 12))
    notes = {"omega_min": float(grid[0]), "omega_max": float(grid[-1]),
             "omega_step": float(exp.get("omega_step", 0.005)), "n_levels": n_levels}
    scan = scan_drive(params, space, grid, n_levels)
    artifacts = []
    name = f"levels{tag}.csv"
    header = ["omega"] + [f"E_{k}" for k in range(1, n_levels + 1)]
    columns = [scan.omega_grid] + [scan.levels[:, k] for k in range(n_levels)]
    artifacts.append(report.write_csv(outdir / name, header, columns))

    located = []
    for item in exp.get("anticrossings", []):
        pair = [parse_label(p) for p in item["pair"]]
        found = locate_anticrossing(params, space, pair, item["bracket"])
        located.append(found)
    payload = {
        "anticrossings": [
            {
                "pair": ["".join(map(str, p)) for p in found.pair],
                "omega_star": found.omega_star,
                "gap": found.gap,
                "overlaps": list(found.overlaps),
            }
            for found in located
        ],
        "labels_last_point": [
            {"level": k + 1, "label": "".join(map(str, lbl[:3])), "weight": lbl[3]}
            for k, lbl in enumerate(scan.labels[-1])
        ],
    }
    artifacts.append(report.write_json(outdir / f"anticrossings{tag}.json", payload))
    if plot:
        artifacts.append(report.render_scan(scan, located, outdir / f"scan{tag}.png"))
    return artifacts, notes


def _run_rabi(exp, params, space, outdir, tag, plot):
    notes = {}
    params = _resolve_drive(exp, params, space, notes)
    from .model import build_h_dressed

    h = build_h_dressed(params, space)
    psi0 = dressed_state(space, *parse_label(exp.get("initial", "00+")))
    times = np.linspace(0.0, float(exp["t_max"]), int(exp.get("n_samples", 1001)))
    notes.update(initial=exp.get("initial", "00+"), n_samples=len(times))
    pops = _population_keys(exp)
    result = evolve_closed(h, psi0, times, populations=pops)
    keys = ["norm", "photon_number", "phonon_number", "boson_parity"]
    keys += [label_key(p) for p in pops]
    artifacts = [report.write_csv(
        outdir / f"rabi{tag}.csv",
        ["time"] + keys,
        [result.times] + [result.observables[k] for k in keys],
    )]
    if plot:
        series = {label_key(p): result.observables[label_key(p)] for p in pops}
        artifacts.append(report.render_timeseries(
            result.times, series, outdir / f"rabi{tag}.png",
            title="super-Rabi oscillation"))
    return artifacts, notes


def _notes_from(result):
    if "trace" in result.observables:
        return {"final_trace": float(result.observables["trace"][-1])}
    return {}


def _run_evolve(exp, params, space, outdir, tag, plot):
    from .model import build_h_dressed

    h = build_h_dressed(params, space)
    times = np.linspace(0.0, float(exp["t_max"]), int(exp.get("n_samples", 501)))
    pops = _population_keys(exp)
    closed = bool(exp.get("closed", False))
    psi0 = _initial_state(exp, space)
    notes = {"initial": exp.get("initial", "00-"), "n_samples": len(times),
             "closed": closed}
    if closed:
        result = evolve_closed(h, psi0, times, populations=pops)
        keys = ["norm"]
    else:
        chans = standard_channels(params, space)
        result = evolve_open(liouvillian(h, chans), psi0.to_density(), times,
                             populations=pops)
        keys = ["trace", "herm_dev"]
    keys += ["photon_number", "phonon_number", "boson_parity"]
    keys += [label_key(p) for p in pops]
    notes.update(_notes_from(result))
    artifacts = [report.write_csv(
        outdir / f"evolve{tag}.csv",
        ["time"] + keys,
        [result.times] + [result.observables[k] for k in keys],
    )]
    if plot:
        series = {k: result.observables[k]
                  for k in ("photon_number", "phonon_number")}
        series.update({label_key(p): result.observables[label_key(p)] for p in pops})
        artifacts.append(report.render_timeseries(
            result.times, series, outdir / f"evolve{tag}.png",
            ylabel="observable", title="master-equation evolution"))
    return artifacts, notes


def _steady(params, space):
    from .model import build_h_dressed

    h = build_h_dressed(params, space)
    l = liouvillian(h, standard_channels(params, space))
    rho = steady_state(l)
    return l, rho


def _run_steady(exp, params, space, outdir, tag, plot):
    l, rho = _steady(params, space)
    n_a = ladder_operator(space, "photon")
    n_b = ladder_operator(space, "phonon")
    from .hilbert import expectation

    payload = {
        "photon_number": expectation(n_a.dag() @ n_a, rho).real,
        "phonon_number": expectation(n_b.dag() @ n_b, rho).real,
        "residual": l.residual(rho),
        "min_eigenvalue": float(np.linalg.eigvalsh(rho.matrix).min()),
    }
    try:
        payload["g2_ab"] = cross_g2(rho)
    except ValueError:
        payload["g2_ab"] = None
    artifacts = [report.write_json(outdir / f"steady{tag}.json", payload)]
    return artifacts, {}


def _run_spectrum(exp, params, space, outdir, tag, plot):
    l, rho = _steady(params, space)
    rates = [ch.rate for ch in l.channels]
    if not rates:
        raise RuntimeError("spectrum requires at least one dissipation channel")
    tau_max = float(exp.get("tau_max", 20.0 / min(rates)))
    n_tau = int(exp.get("n_tau", 4096))
    tau = np.linspace(0.0, tau_max, n_tau + 1)
    omega = np.arange(
        float(exp.get("omega_min", 0.5)),
        float(exp.get("omega_max", 2.2)) + 1e-12,
        float(exp.get("omega_step", 0.01)),
    )
    series = {}
    for mode, sym in (("photon", "S_a"), ("phonon", "S_b")):
        corr = two_time_correlation(l, rho, ladder_operator(space, mode), tau)
        series[sym] = emission_spectrum(corr, omega)
    artifacts = [report.write_csv(
        outdir / f"spectrum{tag}.csv",
        ["omega", "S_a", "S_b"],
        [omega, series["S_a"].values, series["S_b"].values],
    )]
    payload = {
        "peak_S_a": series["S_a"].peak_frequency(),
        "peak_S_b": series["S_b"].peak_frequency(),
        "omega_step": float(exp.get("omega_step", 0.01)),
        "tau_max": tau_max,
        "g2_ab": cross_g2(rho),
    }
    artifacts.append(report.write_json(outdir / f"spectrum{tag}.json", payload))
    if plot:
        artifacts.append(report.render_spectrum(
            omega, {k: v.values for k, v in series.items()},
            outdir / f"spectrum{tag}.png", title="emission spectra"))
    return artifacts, {"tau_max": tau_max, "n_tau": n_tau,
                       "omega_step": float(exp.get("omega_step", 0.01))}


def _run_g2_sweep(exp, params, space, outdir, tag, plot):
    grid = [float(g) for g in exp["lambda_grid"]]
    values = []
    for lam in grid:
        _, rho = _steady(params.replace(lam=lam), space)
        values.append(cross_g2(rho))
    artifacts = [report.write_csv(
        outdir / f"g2_sweep{tag}.csv", ["lambda", "g2_ab"], [grid, values])]
    if plot:
        artifacts.append(report.render_g2_sweep(
            grid, values, outdir / f"g2_sweep{tag}.png"))
    return artifacts, {}


def _run_rates(exp, params, space, outdir, tag, plot):
    pair = [parse_label(p) for p in exp["pair"]]
    grid = [float(g) for g in exp["lambda_grid"]]
    comparison = compare_rates(params, space, pair, exp["bracket"], grid)
    artifacts = [report.write_csv(
        outdir / f"rates{tag}.csv",
        ["lambda", "W_analytic", "W_numeric"],
        [comparison.lambda_grid, comparison.analytic, comparison.numeric],
    )]
    if plot:
        artifacts.append(report.render_rates(
            comparison.lambda_grid, comparison.analytic, comparison.numeric,
            outdir / f"rates{tag}.png",
            title=f"pair {exp['pair'][0]} - {exp['pair'][1]}"))
    return artifacts, {}


def _run_trajectories(exp, params, space, outdir, tag, plot):
    notes = {}
    if "pair" in exp:
        params = _resolve_drive(exp, params, space, notes)
    from .model import build_h_dressed

    h = build_h_dressed(params, space)
    chans = standard_channels(params, space)
    psi0 = _initial_state(exp, space)
    t_max = float(exp["t_max"])
    times = np.linspace(0.0, t_max, int(exp.get("n_samples", 801)))
    notes.update(initial=exp.get("initial", "00-"), n_samples=len(times),
                 n_csv=int(exp.get("n_csv", 2)))
    pops = _population_keys(exp)
    records = run_trajectories(
        h, chans, psi0, t_max, int(exp["n_traj"]), int(exp["seed"]),
        sample_times=times, populations=pops,
    )
    artifacts = [report.write_events_jsonl(outdir / f"events{tag}.jsonl", records)]
    keys = [label_key(p) for p in pops]
    for k, rec in enumerate(records[: int(exp.get("n_csv", 2))]):
        data = trajectory_populations(rec, pops)
        artifacts.append(report.write_csv(
            outdir / f"trajectory{tag}_{k}.csv",
            ["time"] + keys,
            [data["time"]] + [data[key] for key in keys],
        ))
        if plot:
            artifacts.append(report.render_trajectory(
                rec, keys, outdir / f"trajectory{tag}_{k}.png",
                title=f"trajectory seed {rec.seed}"))
    return artifacts, notes


def _run_events(exp, params, space, outdir, tag, plot):
    notes = {}
    pair = [parse_label(p) for p in exp["pair"]]
    target = pair[1]
    grid = [float(g) for g in exp["lambda_grid"]]
    window = float(exp["window"])
    if "coincidence" in exp:
        coincidence = float(exp["coincidence"])
    else:
        base = params.kappa_a if params.kappa_a > 0 else params.kappa_a2
        coincidence = 2.0 / base
    notes["coincidence"] = coincidence
    notes["n_traj"] = int(exp.get("n_traj", 20))
    notes["window"] = window
    if "window_scaled_by" in exp:
        notes["window_scaled_by"] = float(exp["window_scaled_by"])
    psi0 = _initial_state(exp, space)
    means, errs, analytic = [], [], []
    from .model import build_h_dressed

    for lam in grid:
        p_lam = _resolve_drive(exp, params.replace(lam=lam), space, {})
        h = build_h_dressed(p_lam, space)
        chans = standard_channels(p_lam, space)
        records = run_trajectories(
            h, chans, psi0, window, int(exp.get("n_traj", 20)), int(exp["seed"]),
            sample_times=np.linspace(0.0, window, int(exp.get("n_samples", 51))),
        )
        stats = count_correlated_emissions(records, window, coincidence)
        means.append(stats.mean_events)
        errs.append(stats.stderr)
        analytic.append(_analytic_rate(target, lam, params))
    artifacts = [report.write_csv(
        outdir / f"event_stats{tag}.csv",
        ["lambda", "W_analytic", "N_mean", "N_stderr"],
        [grid, analytic, means, errs],
    )]
    if plot:
        artifacts.append(report.render_events(
            analytic, means, errs, outdir / f"event_stats{tag}.png",
            title=f"correlated emissions, window T={window:g}"))
    return artifacts, notes


_RUNNERS = {
    "scan": _run_scan,
    "rabi": _run_rabi,
    "evolve": _run_evolve,
    "steady": _run_steady,
    "spectrum": _run_spectrum,
    "g2-sweep": _run_g2_sweep,
    "rates": _run_rates,
    "trajectories": _run_trajectories,
    "events": _run_events,
}


# ---------------------------------------------------------------------------
# top-level run


def run_config(cfg: dict, output_dir=None, plot=None) -> dict:
    """Execute a validated config; returns the manifest dict."""
    errors = validate_config(cfg)
    if errors:
        raise ConfigError("; ".join(errors))
    out_cfg = cfg.get("output", {})
    outdir = Path(output_dir or out_cfg.get("dir", "out"))
    outdir.mkdir(parents=True, exist_ok=True)
    do_plot = bool(out_cfg.get("plot", True) if plot is None else plot)

    space_cfg = cfg.get("space", {})
    base_exp = dict(cfg["experiment"])
    kind = base_exp.pop("kind")
    cases = base_exp.pop("cases", None) or [None]

    t_start = time.perf_counter()
    artifacts, notes = [], {}
    for case in cases:
        exp = dict(base_exp)
        model_cfg = dict(cfg["model"])
        tag = ""
        if case is not None:
            case = dict(case)
            tag = "_" + str(case.pop("tag"))
            model_cfg.update(case.pop("model", {}))
            exp.update(case)
        params = _model_params(model_cfg)
        space = build_space(
            exp.get("photon_trunc", space_cfg.get("photon_trunc", 6)),
            exp.get("phonon_trunc", space_cfg.get("phonon_trunc", 6)),
        )
        try:
            case_art, case_notes = _RUNNERS[kind](exp, params, space, outdir, tag, do_plot)
        except ConfigError:
            raise
        except Exception as err:
            raise StageError(f"{kind}{tag}", err) from err
        artifacts.extend(case_art)
        if case_notes:
            notes[tag.lstrip("_") or "base"] = case_notes

    manifest = {
        "version": __version__,
        "experiment": kind,
        "resolved_config": _resolved(cfg, outdir, do_plot),
        "notes": notes,
        "artifacts": sorted(p.name for p in artifacts),
        "wall_time_s": round(time.perf_counter() - t_start, 3),
    }
    report.write_json(outdir / "manifest.json", manifest)
    return manifest


def _resolved(cfg: dict, outdir: Path, plot: bool) -> dict:
    resolved = json.loads(json.dumps(cfg))  # deep copy, JSON-serializable check
    model = dict(ModelParams(
        **{("lam" if k == "lambda" else k): float(v)
           for k, v in cfg["model"].items()}).__dict__)
    model["lambda"] = model.pop("lam")
    resolved["model"] = model
    space_cfg = cfg.get("space", {})
    resolved["space"] = {
        "photon_trunc": space_cfg.get("photon_trunc", 6),
        "phonon_trunc": space_cfg.get("phonon_trunc", 6),
    }
    resolved["output"] = {"dir": str(outdir), "plot": plot}
    return resolved


# ---------------------------------------------------------------------------
# CLI entry points


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        errors = validate_config(cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    if errors:
        print("config validation failed:", file=sys.stderr)
        for e in errors:
            print(f"  - {e}", file=sys.stderr)
        return 2
    plot = None
    if args.no_plot:
        plot = False
    try:
        manifest = run_config(cfg, output_dir=args.output_dir, plot=plot)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except StageError as err:
        print(f"numerical failure in {err}", file=sys.stderr)
        return 3
    outdir = manifest["resolved_config"]["output"]["dir"]
    print(f"wrote {len(manifest['artifacts'])} artifacts to {outdir} "
          f"({manifest['wall_time_s']} s)")
    for name in manifest["artifacts"]:
        print(f"  {name}")
    return 0


def _cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    errors = validate_config(cfg)
    if errors:
        print("invalid:", file=sys.stderr)
        for e in errors:
            print(f"  - {e}", file=sys.stderr)
        return 2
    print("ok")
    return 0


def _cmd_presets(args) -> int:
    if args.action != "list":
        print("usage: triquanta presets list", file=sys.stderr)
        return 2
    for path in sorted(_preset_dir().glob("*.toml")):
        with path.open("rb") as fh:
            cfg = tomllib.load(fh)
        desc = cfg.get("description", "")
        print(f"{path.stem:10s} {desc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triquanta",
        description="tripartite cavity-atom-mechanics experiment runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="TOML config path or preset name")
    p_run.add_argument("--output-dir", default=None, help="override output directory")
    p_run.add_argument("--no-plot", action="store_true",
                       help="skip figure rendering (CSV/JSON only)")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a config without running")
    p_val.add_argument("config")
    p_val.set_defaults(func=_cmd_validate)

    p_pre = sub.add_parser("presets", help="list shipped preset configs")
    p_pre.add_argument("action", choices=["list"])
    p_pre.set_defaults(func=_cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
