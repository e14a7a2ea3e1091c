"""Command-line front end.

Every command resolves its parameters from (lowest to highest precedence)
built-in defaults, ``--paper-defaults``, ``--config`` and explicit flags,
writes ``manifest.json`` with the resolved values, and can be rerun from
that manifest with ``--config manifest.json``.

Exit codes: 0 success, 2 configuration/input error, 3 numerical failure,
4 I/O error.
"""

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import bga, clean
from . import io as fio
from .exceptions import DivergenceError, SingularSystemError, UndefinedRatioError
from .filter_design import (
    build_convolution_matrix,
    compression_metrics,
    matched_filter,
    solve_min_isl,
)
from .rls import DEFAULT_FORGETTING, build_desired_response, export_trace, optimize
from .waveform import generate_lfm

EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 2, 3, 4


class ConfigError(ValueError):
    pass


WAVEFORM_KEYS = {
    "bandwidth": float,
    "pulse_width": float,
    "sample_rate": float,
    "taper_alpha": float,
    "filter_length": int,
    "mainlobe_width": int,
}

COMMAND_KEYS = {
    "design-isl": {**WAVEFORM_KEYS, "alpha": float, "waveform_file": str},
    "optimize-rls": {
        **WAVEFORM_KEYS,
        "alpha": float,
        "waveform_file": str,
        "iterations": int,
        "forgetting_factor": float,
        "regularization": float,
        "desired_shape": str,
    },
    "clean": {
        **WAVEFORM_KEYS,
        "scene": str,
        "n_cells": int,
        "threshold": float,
        "pfa": float,
        "strong_margin_db": float,
        "noise_floor": float,
    },
    "design-nlfm": {
        **WAVEFORM_KEYS,
        "population_size": int,
        "truncation_fraction": float,
        "mutation_rate": float,
        "max_generations": int,
        "stall_generations": int,
        "elitism": bool,
        "jobs": int,
    },
    "metrics": {**WAVEFORM_KEYS, "alpha": float, "waveform_file": str, "filter_file": str},
}

_WAVEFORM_BASE = {
    "bandwidth": None,
    "pulse_width": None,
    "sample_rate": 12e6,
    "taper_alpha": 0.0,
    "filter_length": None,
    "mainlobe_width": 3,
}
BASE_DEFAULTS = {
    "design-isl": {**_WAVEFORM_BASE, "alpha": None, "waveform_file": None},
    "optimize-rls": {
        **_WAVEFORM_BASE,
        "alpha": None,
        "waveform_file": None,
        "iterations": 1000,
        "forgetting_factor": DEFAULT_FORGETTING,
        "regularization": None,
        "desired_shape": "triangular",
    },
    "clean": {
        **_WAVEFORM_BASE,
        "scene": None,
        "n_cells": None,
        "threshold": None,
        "pfa": 1e-6,
        "strong_margin_db": clean.STRONG_MARGIN_DB,
        "noise_floor": 1e-6,
    },
    "design-nlfm": {
        **_WAVEFORM_BASE,
        "population_size": 200,
        "truncation_fraction": 0.40,
        "mutation_rate": 0.001,
        "max_generations": 100,
        "stall_generations": 20,
        "elitism": True,
        "jobs": None,
    },
    "metrics": {**_WAVEFORM_BASE, "alpha": None, "waveform_file": None, "filter_file": None},
}
_PUBLISHED_WAVEFORM = {
    "bandwidth": 5e6,
    "pulse_width": 20e-6,
    "sample_rate": 12e6,
    "taper_alpha": 0.1,
    "filter_length": 480,
    "mainlobe_width": 3,
}
PUBLISHED_DEFAULTS = {
    "design-isl": _PUBLISHED_WAVEFORM,
    "optimize-rls": {**_PUBLISHED_WAVEFORM, "iterations": 10_000},
    "clean": _PUBLISHED_WAVEFORM,
    "design-nlfm": {**_PUBLISHED_WAVEFORM, "taper_alpha": 0.0, "population_size": 200, "truncation_fraction": 0.40,
                    "mutation_rate": 0.001},
    "metrics": _PUBLISHED_WAVEFORM,
}


def _demo_config():
    text = resources.files("lowsidelobe").joinpath("data/demo_clean_config.json").read_text(encoding="utf-8")
    return json.loads(text)


def _demo_scene():
    text = resources.files("lowsidelobe").joinpath("data/demo_scene.json").read_text(encoding="utf-8")
    return json.loads(text)


def _load_config_file(path, command):
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    if "command" in obj and "config" in obj:
        if obj["command"] != command:
            raise ConfigError(f"{path}: manifest is for {obj['command']!r}, not {command!r}")
        obj = obj["config"]
    return obj


def _coerce(command, cfg):
    keys = COMMAND_KEYS[command]
    out = {}
    for key, value in cfg.items():
        if key == "seed":
            out[key] = None if value is None else int(value)
            continue
        if key not in keys:
            raise ConfigError(f"unknown parameter {key!r} for {command}")
        kind = keys[key]
        if value is None:
            out[key] = None
        elif kind is bool:
            if not isinstance(value, bool):
                raise ConfigError(f"{key} must be true or false")
            out[key] = value
        elif kind is int:
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise ConfigError(f"{key} must be an integer, got {value!r}")
            out[key] = int(float(value))
        else:
            out[key] = kind(value)
    return out


def resolve_config(command, args):
    """Merge defaults, published defaults, config file and flags into one dict."""
    user = {}
    if args.config:
        user.update(_load_config_file(args.config, command))
    flags = {k: getattr(args, k) for k in COMMAND_KEYS[command] if getattr(args, k, None) is not None}
    user.update(flags)
    if args.seed is not None:
        user["seed"] = args.seed

    cfg = dict(BASE_DEFAULTS[command])
    cfg["seed"] = 0 if command == "design-nlfm" else None
    if command == "clean" and user.get("scene") is None:
        cfg.update(_demo_config())
    if args.paper_defaults:
        cfg.update(PUBLISHED_DEFAULTS[command])
    cfg.update(user)
    cfg = _coerce(command, cfg)
    needs_params = not cfg.get("waveform_file")
    for key in ("bandwidth", "pulse_width"):
        if needs_params and cfg.get(key) is None:
            raise ConfigError(f"missing required parameter --{key.replace('_', '-')}")
    return cfg


def _waveform(cfg):
    """(samples, Waveform or None) from a CSV file or from LFM parameters."""
    if cfg.get("waveform_file"):
        path = Path(cfg["waveform_file"])
        samples = fio.read_samples_csv(path)
        wf = fio.read_waveform(path) if fio.sidecar_path(path).exists() and samples.size >= 2 else None
        return samples, wf
    wf = generate_lfm(cfg["bandwidth"], cfg["pulse_width"], cfg["sample_rate"], cfg["taper_alpha"])
    return wf.samples, wf


def _filter_length(cfg, n):
    return 2 * n if cfg.get("filter_length") is None else cfg["filter_length"]


def _response_db(S, W):
    y = np.abs(S.entries @ W.weights)
    with np.errstate(divide="ignore"):
        return 20 * np.log10(y / y[S.center_row])


def _write_response(path, S, columns):
    lines = ["index," + ",".join(name for name, _ in columns)]
    data = [_response_db(S, W) for _, W in columns]
    for i in range(S.n_out):
        lines.append(f"{i}," + ",".join(fio._num(col[i]) for col in data))
    fio.write_text(path, "\n".join(lines) + "\n")


def _write_manifest(out, command, cfg):
    fio.write_text(out / "manifest.json", fio.dumps_json({"command": command, "config": cfg}))


def _save_waveform(out, samples, wf):
    if wf is not None:
        fio.write_waveform(out / "waveform.csv", wf)
    else:
        fio.write_text(out / "waveform.csv", fio.samples_csv(samples))


def cmd_design_isl(cfg, out):
    samples, wf = _waveform(cfg)
    S = build_convolution_matrix(samples, _filter_length(cfg, samples.size), cfg["mainlobe_width"])
    Wm = matched_filter(samples, S.n_filter)
    Wi = solve_min_isl(S, cfg["alpha"])
    metrics = {"matched": compression_metrics(Wm, S), "min_isl": compression_metrics(Wi, S)}
    _save_waveform(out, samples, wf)
    fio.write_filter(out / "matched.csv", Wm, metrics["matched"])
    fio.write_filter(out / "min_isl.csv", Wi, metrics["min_isl"])
    _write_response(out / "response.csv", S, [("matched_db", Wm), ("min_isl_db", Wi)])
    fio.write_text(out / "metrics.json", fio.dumps_json({k: m.to_dict() for k, m in metrics.items()}))
    print(f"min_isl isl_db={metrics['min_isl'].isl_db:.4f} matched isl_db={metrics['matched'].isl_db:.4f}")


def cmd_optimize_rls(cfg, out):
    samples, wf = _waveform(cfg)
    S = build_convolution_matrix(samples, _filter_length(cfg, samples.size), cfg["mainlobe_width"])
    Wi = solve_min_isl(S, cfg["alpha"])
    d = build_desired_response(S.n_out, cfg["mainlobe_width"], S.energy, cfg["desired_shape"])
    _save_waveform(out, samples, wf)
    try:
        trace = optimize(S, d, Wi, cfg["iterations"], cfg["forgetting_factor"], cfg["regularization"])
    except DivergenceError as exc:
        rows = ["iteration,isl_raw"] + [f"{i},{fio._num(v)}" for i, v in enumerate(exc.partial)]
        fio.write_text(out / "trace.csv", "\n".join(rows) + "\n")
        raise
    fio.write_text(out / "trace.csv", export_trace(trace))
    metrics = {"min_isl": compression_metrics(Wi, S), "rls": compression_metrics(trace.best_weights, S)}
    fio.write_filter(out / "min_isl.csv", Wi, metrics["min_isl"])
    fio.write_filter(out / "rls.csv", trace.best_weights, metrics["rls"])
    _write_response(out / "response.csv", S, [("min_isl_db", Wi), ("rls_db", trace.best_weights)])
    report = {k: m.to_dict() for k, m in metrics.items()}
    report["best_iteration"] = trace.best_iteration
    report["best_isl_raw"] = float(trace.isl_raw[trace.best_iteration])
    report["initial_isl_raw"] = float(trace.isl_raw[0])
    fio.write_text(out / "metrics.json", fio.dumps_json(report))
    print(f"best_iteration={trace.best_iteration} isl_raw={float(trace.isl_raw[trace.best_iteration])!r} "
          f"isl_db={trace.isl_db[trace.best_iteration]:.4f}")


def cmd_clean(cfg, out):
    samples, wf = _waveform(cfg)
    n_cells = cfg["n_cells"] or _filter_length(cfg, samples.size)
    S = build_convolution_matrix(samples, n_cells)
    scene_obj = _demo_scene() if cfg["scene"] is None else json.loads(Path(cfg["scene"]).read_text(encoding="utf-8"))
    scene = fio.parse_scene(scene_obj, n_cells)
    if cfg["seed"] is not None:
        scene = clean.RangeScene(scene.impulse_response, scene.noise_power, cfg["seed"])
    y = clean.simulate_profile(S, scene)
    sigma2 = max(scene.noise_power, cfg["noise_floor"])
    eta = cfg["threshold"] if cfg["threshold"] is not None else clean.false_alarm_threshold(S, sigma2, cfg["pfa"])
    cleaned, detections, strong = clean.clean_pipeline(S, y, sigma2, eta, cfg["strong_margin_db"])

    fio.write_text(out / "profile.csv", fio.power_csv(y, key="cell"))
    rows = ["cell,statistic,threshold,detected,re,im"]
    for d in detections:
        z = d.amplitude_estimate
        rows.append(f"{d.cell_index},{fio._num(d.statistic)},{fio._num(d.threshold)},{int(d.detected)},"
                    f"{fio._num(z.real)},{fio._num(z.imag)}")
    fio.write_text(out / "statistics.csv", "\n".join(rows) + "\n")
    det = {
        "noise_power": sigma2,
        "detected_cells": [d.cell_index for d in detections if d.detected],
        "strong": [{"index": int(k), "re": b.real, "im": b.imag} for k, b in zip(strong.cells, strong.amplitudes)],
    }
    fio.write_text(out / "detections.json", fio.dumps_json(det))
    fio.write_text(out / "cleaned.csv", fio.power_csv(cleaned, key="cell"))
    print(f"detected={len(det['detected_cells'])} strong={len(det['strong'])}")


def cmd_design_nlfm(cfg, out):
    params = bga.WaveformParams(cfg["bandwidth"], cfg["pulse_width"], cfg["sample_rate"],
                                cfg["filter_length"], cfg["mainlobe_width"])
    config = bga.GaConfig(
        population_size=cfg["population_size"],
        truncation_fraction=cfg["truncation_fraction"],
        mutation_rate=cfg["mutation_rate"],
        max_generations=cfg["max_generations"],
        stall_generations=cfg["stall_generations"],
        elitism=cfg["elitism"],
        seed=cfg["seed"],
        waveform_params=params,
    )
    history = bga.evolve(config, n_jobs=cfg["jobs"])
    best = history.best_individual
    if not np.isfinite(best.fitness):
        raise SingularSystemError("no individual produced a solvable min-ISL filter")
    wf = bga.nlfm_waveform(best.genome, params)
    freq = bga.build_nlfm_frequency(best.genome, params.n_samples)
    S = build_convolution_matrix(wf, params.resolved_filter_length, params.mainlobe_width)
    W = solve_min_isl(S)

    fio.write_text(out / "history.csv", history.to_csv())
    genome = {
        "bandwidth": best.genome.bandwidth,
        "control_weights": [float(v) for v in best.genome.control_weights],
        "control_points": [float(v) for v in best.genome.control_points],
        "fitness_db": best.fitness,
        "generations": len(history),
        "stop_reason": history.stop_reason,
    }
    fio.write_text(out / "best_genome.json", fio.dumps_json(genome))
    rows = ["index,time_s,frequency_hz"]
    for i, f in enumerate(freq.values):
        rows.append(f"{i},{fio._num(i / params.sample_rate)},{fio._num(f)}")
    fio.write_text(out / "frequency.csv", "\n".join(rows) + "\n")
    fio.write_text(out / "acf.csv", fio.power_csv(S.entries @ W.weights, key="index"))
    fio.write_waveform(out / "waveform.csv", wf)
    fio.write_filter(out / "min_isl.csv", W, compression_metrics(W, S))
    print(f"best_db={best.fitness:.4f} generations={len(history)}")


def cmd_metrics(cfg, out):
    samples, _ = _waveform(cfg)
    if cfg["filter_file"]:
        filters = {"filter": fio.read_filter(cfg["filter_file"])}
        L = len(filters["filter"])
    else:
        L = _filter_length(cfg, samples.size)
        filters = None
    S = build_convolution_matrix(samples, L, cfg["mainlobe_width"])
    if filters is None:
        filters = {"matched": matched_filter(samples, L), "min_isl": solve_min_isl(S, cfg["alpha"])}
    report = {k: compression_metrics(W, S).to_dict() for k, W in filters.items()}
    text = fio.dumps_json(report)
    fio.write_text(out / "metrics.json", text)
    sys.stdout.write(text)


COMMANDS = {
    "design-isl": cmd_design_isl,
    "optimize-rls": cmd_optimize_rls,
    "clean": cmd_clean,
    "design-nlfm": cmd_design_nlfm,
    "metrics": cmd_metrics,
}


def _str2bool(v):
    if v.lower() in ("1", "true", "yes"):
        return True
    if v.lower() in ("0", "false", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {v!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config or a previous manifest.json")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--seed", type=int, help="random seed (GA population, scene noise)")
    common.add_argument("--paper-defaults", action="store_true", help="pin the published design parameters")

    parser = argparse.ArgumentParser(prog="lowsidelobe", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "design-isl": "matched and minimum-ISL mismatched filters for an LFM pulse",
        "optimize-rls": "RLS refinement of the min-ISL filter with ISL trace",
        "clean": "simulate a range profile and remove strong-scatterer sidelobes",
        "design-nlfm": "breeder-GA search over Bezier NLFM waveforms",
        "metrics": "ISL/PSL/SNR-loss report for a waveform and filter",
    }
    for name, keys in COMMAND_KEYS.items():
        p = sub.add_parser(name, parents=[common], help=helps[name])
        for key, kind in keys.items():
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, type=_str2bool if kind is bool else kind, default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_manifest(out, args.command, cfg)
        COMMANDS[args.command](cfg, out)
    except (SingularSystemError, DivergenceError, UndefinedRatioError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError, KeyError, IndexError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
