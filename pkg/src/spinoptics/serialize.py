"""CSV and JSON readers/writers for spectra, field maps and fit results.

CSV files carry '#'-prefixed metadata lines, then a column-title row,
then data rows; decimals always use '.', independent of locale. JSON
files store the grid as a (start, stop, n) spec plus the intensity array
and metadata.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .fitting import FitResult
from .holeburn import HoleFieldMap
from .spectra import Spectrum, uniform_grid


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
    return value


def _meta_lines(meta: dict) -> list[str]:
    return [
        f"# meta.{key}: {json.dumps(_jsonable(meta[key]), sort_keys=True)}"
        for key in sorted(meta)
    ]


def _parse_meta(lines: list[str]) -> dict:
    meta = {}
    for line in lines:
        body = line[1:].strip()
        if not body.startswith("meta."):
            continue
        key, _, raw = body.partition(":")
        meta[key[len("meta.") :].strip()] = json.loads(raw.strip())
    return meta


def write_spectrum_csv(spectrum: Spectrum, path) -> None:
    lines = ["# spinoptics spectrum", f"# axis_kind: {spectrum.axis_kind}"]
    lines += _meta_lines(spectrum.meta)
    lines.append(f"{spectrum.axis_kind},intensity")
    for x, y in zip(spectrum.grid, spectrum.intensity):
        lines.append(f"{x!r},{y!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_spectrum_csv(path) -> Spectrum:
    axis_kind = None
    meta_lines: list[str] = []
    xs: list[float] = []
    ys: list[float] = []
    saw_titles = False
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("axis_kind:"):
                axis_kind = body.split(":", 1)[1].strip()
            else:
                meta_lines.append(line)
            continue
        if not saw_titles:
            saw_titles = True  # column-title row
            continue
        a, b = line.split(",")
        xs.append(float(a))
        ys.append(float(b))
    if axis_kind is None:
        raise ValueError(f"{path}: missing '# axis_kind:' header")
    return Spectrum(axis_kind, np.array(xs), np.array(ys), _parse_meta(meta_lines))


def write_spectrum_json(spectrum: Spectrum, path) -> None:
    doc = {
        "axis_kind": spectrum.axis_kind,
        "grid": {
            "start": float(spectrum.grid[0]),
            "stop": float(spectrum.grid[-1]),
            "n": int(spectrum.grid.size),
        },
        "intensity": [float(v) for v in spectrum.intensity],
        "meta": _jsonable(spectrum.meta),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_spectrum_json(path) -> Spectrum:
    doc = json.loads(Path(path).read_text())
    grid = uniform_grid(doc["grid"]["start"], doc["grid"]["stop"], doc["grid"]["n"])
    return Spectrum(doc["axis_kind"], grid, np.array(doc["intensity"]), doc.get("meta", {}))


def write_map_csv(hmap: HoleFieldMap, path) -> None:
    lines = ["# spinoptics hole field map"]
    lines += _meta_lines(hmap.meta)
    lines.append("field_mT,detuning_MHz,dPL")
    for i, b in enumerate(hmap.fields_mt):
        for j, d in enumerate(hmap.detuning_mhz):
            lines.append(f"{b!r},{d!r},{hmap.dpl[i, j]!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_map_json(hmap: HoleFieldMap, path) -> None:
    doc = {
        "fields_mt": [float(v) for v in hmap.fields_mt],
        "detuning_mhz": {
            "start": float(hmap.detuning_mhz[0]),
            "stop": float(hmap.detuning_mhz[-1]),
            "n": int(hmap.detuning_mhz.size),
        },
        "dpl": [[float(v) for v in row] for row in hmap.dpl],
        "meta": _jsonable(hmap.meta),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_fit_json(result: FitResult, path, provenance: dict | None = None) -> None:
    doc = {
        "params": _jsonable(result.params),
        "sigmas": _jsonable(result.sigmas),
        "residual_norm": _jsonable(result.residual_norm),
        "converged": result.converged,
        "n_iter": result.n_iter,
    }
    if provenance:
        doc["provenance"] = _jsonable(provenance)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_fit_json(path) -> dict:
    return json.loads(Path(path).read_text())
