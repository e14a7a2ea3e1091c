"""File formats: sample CSVs with JSON sidecars, scene JSON, metrics JSON."""

import csv
import io
import json
from pathlib import Path

import numpy as np

from .clean import RangeScene
from .waveform import Waveform, tukey_window


def _num(x):
    x = float(x)
    if x == -np.inf:
        return "-inf"
    if x == np.inf:
        return "inf"
    return repr(x)


def dumps_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_text(path, text):
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def samples_csv(values):
    """``index,re,im`` rows for a complex sequence."""
    buf = io.StringIO()
    buf.write("index,re,im\n")
    for i, v in enumerate(np.asarray(values, dtype=complex)):
        buf.write(f"{i},{_num(v.real)},{_num(v.imag)}\n")
    return buf.getvalue()


def power_csv(values, key="cell"):
    """``<key>,re,im,power_db`` rows; power is ``20 log10 |v|``."""
    v = np.asarray(values, dtype=complex)
    with np.errstate(divide="ignore"):
        power = 20 * np.log10(np.abs(v))
    buf = io.StringIO()
    buf.write(f"{key},re,im,power_db\n")
    for i, (z, p) in enumerate(zip(v, power)):
        buf.write(f"{i},{_num(z.real)},{_num(z.imag)},{_num(p)}\n")
    return buf.getvalue()


def read_samples_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"index", "re", "im"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header index,re,im")
        rows = sorted(reader, key=lambda r: int(r["index"]))
    if [int(r["index"]) for r in rows] != list(range(len(rows))):
        raise ValueError(f"{path}: indices must run 0..n-1")
    return np.array([complex(float(r["re"]), float(r["im"])) for r in rows])


def sidecar_path(csv_path):
    return Path(csv_path).with_suffix(".json")


def write_waveform(path, wf):
    write_text(path, samples_csv(wf.samples))
    meta = {
        "sample_rate": wf.sample_rate,
        "bandwidth": wf.bandwidth,
        "pulse_width": wf.pulse_width,
        "taper_alpha": wf.taper_alpha,
    }
    write_text(sidecar_path(path), dumps_json(meta))


def read_waveform(path):
    """Load a waveform CSV and its sidecar as a :class:`Waveform`."""
    samples = read_samples_csv(path)
    meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
    alpha = float(meta.get("taper_alpha", 0.0))
    taper = tukey_window(samples.size, alpha) if samples.size >= 2 else np.ones(samples.size)
    return Waveform(samples, float(meta["sample_rate"]), float(meta["bandwidth"]), float(meta["pulse_width"]), taper, alpha)


def write_filter(path, W, metrics=None):
    """Coefficient CSV plus metadata sidecar (provenance, L, alpha, metrics)."""
    write_text(path, samples_csv(W.weights))
    alpha = W.mainlobe_constraint
    meta = {
        "provenance": W.provenance,
        "L": len(W),
        "alpha": None if alpha is None else {"re": complex(alpha).real, "im": complex(alpha).imag},
    }
    if metrics is not None:
        meta.update(metrics.to_dict())
    write_text(sidecar_path(path), dumps_json(meta))


def read_filter(path):
    from .filter_design import FilterWeights

    weights = read_samples_csv(path)
    side = sidecar_path(path)
    provenance, alpha = "external", None
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
        provenance = meta.get("provenance", "external")
        if meta.get("alpha") is not None:
            alpha = complex(meta["alpha"]["re"], meta["alpha"]["im"])
    return FilterWeights(weights, provenance, alpha)


def parse_scene(obj, n_cells):
    """Scene from the ``{cells: [{index, re, im}], noise_power, seed}`` layout."""
    if not isinstance(obj, dict) or not isinstance(obj.get("cells"), list):
        raise ValueError("scene JSON must be an object with a 'cells' list")
    try:
        return RangeScene.from_cells(n_cells, obj["cells"], float(obj.get("noise_power", 0.0)), int(obj.get("seed", 0)))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed scene cell record: {exc}") from None


def load_scene(path, n_cells):
    return parse_scene(json.loads(Path(path).read_text(encoding="utf-8")), n_cells)
