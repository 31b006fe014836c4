"""Batch front door: JSON scenario configs, execution, noise and manifests.

One scenario per invocation: `simulate <config>` for forward synthesis,
`fit <config>` for parameter recovery, `validate <config>` for schema
diagnostics. Configs are strict (unknown keys rejected); noise is
deterministic per seed via the counter-based Philox generator; every
output gets a manifest sidecar with the config hash.

Exit codes: 0 success, 2 config violation, 3 numerical failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .core import GTensor, HyperfineModel, OpticalSystem, rotation_about_axis
from .core import boltzmann_populations, spin_temperature_from_ratio
from .dynamics import (
    PulsedEsrParams,
    RateModel,
    hahn_echo_trace,
    inversion_recovery_trace,
    pl_time_trace,
    rabi_trace,
)
from .fitting import fit_exponential, fit_gfactors, fit_peaks, initial_peak_model
from .holeburn import (
    REGIMES,
    HoleFieldMap,
    LorentzianBackground,
    hole_field_map,
    hole_pattern,
    render_hole_spectrum,
)
from .serialize import (
    read_spectrum_csv,
    read_spectrum_json,
    write_fit_json,
    write_map_csv,
    write_map_json,
    write_spectrum_csv,
    write_spectrum_json,
)
from .spectra import (
    LineshapeSpec,
    SitePair,
    Spectrum,
    angle_sweep_cd_splitting,
    edfs_spectrum,
    ple_spectrum,
    powder_esr_spectrum,
    uniform_grid,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

OUTPUT_DIR_ENV = "SPINOPTICS_OUTPUT_DIR"
PRNG_NAME = "numpy-philox"

SIMULATE_SCENARIOS = (
    "ple",
    "powder",
    "edfs",
    "holes",
    "hole_map",
    "pump_trace",
    "rabi",
    "echo",
    "recovery",
    "angle_sweep",
    "boltzmann",
)
FIT_SCENARIOS = ("fit_peaks", "fit_g", "fit_decay")
SCENARIOS = SIMULATE_SCENARIOS + FIT_SCENARIOS


@dataclass(frozen=True)
class Diagnostic:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


class ConfigError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


# ---------------------------------------------------------------------------
# schema checking: small combinators, every violation collected with a path
# ---------------------------------------------------------------------------

def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _number(minimum=None, exclusive_minimum=None, maximum=None):
    def check(v, path, diags):
        if not _is_number(v):
            diags.append(Diagnostic(path, "expected a number"))
            return
        if minimum is not None and v < minimum:
            diags.append(Diagnostic(path, f"must be >= {minimum}"))
        if exclusive_minimum is not None and v <= exclusive_minimum:
            diags.append(Diagnostic(path, f"must be > {exclusive_minimum}"))
        if maximum is not None and v > maximum:
            diags.append(Diagnostic(path, f"must be <= {maximum}"))

    return check


def _integer(minimum=None):
    def check(v, path, diags):
        if isinstance(v, bool) or not isinstance(v, int):
            diags.append(Diagnostic(path, "expected an integer"))
            return
        if minimum is not None and v < minimum:
            diags.append(Diagnostic(path, f"must be >= {minimum}"))

    return check


def _boolean():
    def check(v, path, diags):
        if not isinstance(v, bool):
            diags.append(Diagnostic(path, "expected a boolean"))

    return check


def _string(choices=None):
    def check(v, path, diags):
        if not isinstance(v, str):
            diags.append(Diagnostic(path, "expected a string"))
            return
        if choices is not None and v not in choices:
            diags.append(Diagnostic(path, f"must be one of {sorted(choices)}"))

    return check


def _number_list(length=None, minimum=None):
    def check(v, path, diags):
        if not isinstance(v, list) or not all(_is_number(x) for x in v):
            diags.append(Diagnostic(path, "expected a list of numbers"))
            return
        if length is not None and len(v) != length:
            diags.append(Diagnostic(path, f"expected exactly {length} entries"))
        if minimum is not None and any(x < minimum for x in v):
            diags.append(Diagnostic(path, f"entries must be >= {minimum}"))

    return check


def _object(fields):
    """fields: name -> (checker, required). Unknown keys are rejected."""

    def check(v, path, diags):
        if not isinstance(v, dict):
            diags.append(Diagnostic(path, "expected an object"))
            return
        for name, (node, required) in fields.items():
            child = f"{path}.{name}" if path else name
            if name in v:
                node(v[name], child, diags)
            elif required:
                diags.append(Diagnostic(child, "missing required field"))
        for key in v:
            if key not in fields:
                diags.append(Diagnostic(f"{path}.{key}" if path else key, "unknown field"))

    return check


def _array_of(node, min_length=None):
    def check(v, path, diags):
        if not isinstance(v, list):
            diags.append(Diagnostic(path, "expected a list"))
            return
        if min_length is not None and len(v) < min_length:
            diags.append(Diagnostic(path, f"expected at least {min_length} entries"))
        for i, item in enumerate(v):
            node(item, f"{path}[{i}]", diags)

    return check


def _axis_spec(start_min=None):
    fields = {
        "start": (_number(minimum=start_min), True),
        "stop": (_number(), True),
        "n": (_integer(minimum=2), True),
    }
    base = _object(fields)

    def check(v, path, diags):
        before = len(diags)
        base(v, path, diags)
        if len(diags) == before and v["stop"] <= v["start"]:
            diags.append(Diagnostic(f"{path}.stop", "must exceed start"))

    return check


_OPTICAL = _object(
    {
        "g_ground": (_number(minimum=0.0), True),
        "g_excited": (_number(minimum=0.0), True),
        "f0_thz": (_number(exclusive_minimum=0.0), True),
        "gamma_inh_mhz": (_number(exclusive_minimum=0.0), True),
        "gamma_hom_mhz": (_number(exclusive_minimum=0.0), True),
        "t_optical_us": (_number(exclusive_minimum=0.0), True),
    }
)

_GTENSOR = _object(
    {
        "principal": (_number_list(length=3, minimum=0.0), True),
        "rotation_axis": (_number_list(length=3), False),
        "rotation_angle_deg": (_number(), False),
    }
)

_LINESHAPE = _object(
    {
        "kind": (_string(choices=("gaussian", "lorentzian", "pseudo_voigt")), True),
        "fwhm": (_number(exclusive_minimum=0.0), True),
        "mix": (_number(minimum=0.0, maximum=1.0), False),
    }
)

_HYPERFINE = _object(
    {
        "a_iso_mhz": (_number(), True),
        "nuclear_spin": (_number(minimum=0.0), True),
        "abundance": (_number(minimum=0.0, maximum=1.0), True),
    }
)

_PULSED = _object(
    {
        "t_m_ns": (_number(exclusive_minimum=0.0), False),
        "t_1_ns": (_number(exclusive_minimum=0.0), False),
        "rabi_max_mhz": (_number(minimum=0.0), False),
        "rabi_decay_ns": (_number(exclusive_minimum=0.0), False),
        "eseem_depths": (_number_list(minimum=0.0), False),
        "larmor_freqs_mhz": (_number_list(minimum=0.0), False),
    }
)

_BACKGROUND = _object(
    {
        "fwhm_mhz": (_number(exclusive_minimum=0.0), True),
        "amplitude": (_number(), False),
    }
)

_NOISE = _object(
    {
        "sigma_rel": (_number(minimum=0.0), True),
        "seed": (_integer(), True),
    }
)


def _output(formats=("csv", "json")):
    return _object(
        {
            "path": (_string(), True),
            "format": (_string(choices=formats), True),
        }
    )


_PHYSICS = {
    "ple": _object(
        {
            "optical": (_OPTICAL, True),
            "field_mt": (_number(minimum=0.0), True),
            "spin_temperature_k": (_number(exclusive_minimum=0.0), True),
            "line_kind": (_string(choices=("gaussian", "lorentzian", "pseudo_voigt")), False),
            "line_mix": (_number(minimum=0.0, maximum=1.0), False),
        }
    ),
    "powder": _object(
        {
            "g_tensor": (_GTENSOR, True),
            "mw_freq_ghz": (_number(exclusive_minimum=0.0), True),
            "line": (_LINESHAPE, True),
            "n_orientations": (_integer(minimum=100), False),
        }
    ),
    "edfs": _object(
        {
            "g_tensor": (_GTENSOR, True),
            "direction": (_number_list(length=3), True),
            "mw_freq_ghz": (_number(exclusive_minimum=0.0), True),
            "hyperfine": (_HYPERFINE, True),
            "line": (_LINESHAPE, True),
        }
    ),
    "holes": _object(
        {
            "optical": (_OPTICAL, True),
            "field_mt": (_number(minimum=0.0), True),
            "regime": (_string(choices=REGIMES), True),
            "central_amplitude": (_number(minimum=0.0), False),
            "side_amplitude": (_number(minimum=0.0), False),
            "half_harmonics": (_boolean(), False),
            "background": (_BACKGROUND, False),
        }
    ),
    "hole_map": _object(
        {
            "optical": (_OPTICAL, True),
            "fields_mt": (_axis_spec(start_min=0.0), True),
            "regime": (_string(choices=REGIMES), True),
            "central_amplitude": (_number(minimum=0.0), False),
            "side_amplitude": (_number(minimum=0.0), False),
        }
    ),
    "pump_trace": _object(
        {
            "optical": (_OPTICAL, True),
            "field_mt": (_number(minimum=0.0), True),
            "spin_temperature_k": (_number(exclusive_minimum=0.0), True),
            "pump_rate": (_number(minimum=0.0), True),
            "branching": (_number(minimum=0.0, maximum=1.0), False),
            "spin_relax_ground": (_number(minimum=0.0), True),
            "spin_relax_excited": (_number(minimum=0.0), True),
            "pump_transition": (_string(choices=("A", "B", "C", "D")), False),
        }
    ),
    "rabi": _object(
        {
            "pulsed": (_PULSED, True),
            "power_ratio": (_number(minimum=0.0), True),
        }
    ),
    "echo": _object({"pulsed": (_PULSED, True)}),
    "recovery": _object({"pulsed": (_PULSED, True)}),
    "angle_sweep": _object(
        {
            "ground_principal": (_number_list(length=3, minimum=0.0), True),
            "excited_principal": (_number_list(length=3, minimum=0.0), True),
            "site_rotation_axis": (_number_list(length=3), True),
            "site_rotation_angle_deg": (_number(), True),
            "field_t": (_number(minimum=0.0), True),
            "rotation_axis": (_number_list(length=3), False),
        }
    ),
    "boltzmann": _object(
        {
            "splitting_ghz": (_number(minimum=0.0), True),
            "temperature_k": (_number(exclusive_minimum=0.0), False),
            "ratio": (_number(exclusive_minimum=0.0, maximum=1.0), False),
        }
    ),
    "fit_peaks": _object(
        {
            "n_peaks": (_integer(minimum=1), True),
            "shape": (_string(choices=("gaussian", "lorentzian", "pseudo_voigt")), False),
            "negative": (_boolean(), False),
            "mix": (_number(minimum=0.0, maximum=1.0), False),
        }
    ),
    "fit_g": _object({}),
    "fit_decay": _object(
        {"kind": (_string(choices=("decay", "inversion_recovery")), True)}
    ),
}

# scenarios whose `grid` block is required, with the minimum allowed start
_GRID_START_MIN = {
    "ple": None,
    "powder": 0.0,
    "edfs": 0.0,
    "holes": None,
    "hole_map": None,
    "pump_trace": 0.0,
    "rabi": 0.0,
    "echo": 0.0,
    "recovery": 0.0,
    "angle_sweep": None,
}

_FIT_INPUT = _object(
    {
        "field_mt": (_number(exclusive_minimum=0.0), True),
        "path": (_string(), True),
    }
)


def _schema_for(scenario: str):
    fields = {
        "scenario": (_string(choices=SCENARIOS), True),
        "physics": (_PHYSICS[scenario], True),
        "output": (_output(("json",)) if scenario in ("boltzmann", *FIT_SCENARIOS) else _output(), True),
        "noise": (_NOISE, False),
    }
    if scenario in _GRID_START_MIN:
        fields["grid"] = (_axis_spec(start_min=_GRID_START_MIN[scenario]), True)
    if scenario in ("fit_peaks", "fit_decay"):
        fields["input"] = (_string(), True)
    if scenario == "fit_g":
        fields["inputs"] = (_array_of(_FIT_INPUT, min_length=2), True)
    return _object(fields)


def validate_config(doc) -> list[Diagnostic]:
    """All schema violations for a parsed config document (empty if valid)."""
    diags: list[Diagnostic] = []
    if not isinstance(doc, dict):
        return [Diagnostic("", "config must be a JSON object")]
    scenario = doc.get("scenario")
    if scenario is None:
        return [Diagnostic("scenario", "missing required field")]
    if scenario not in SCENARIOS:
        return [Diagnostic("scenario", f"must be one of {sorted(SCENARIOS)}")]
    _schema_for(scenario)(doc, "", diags)
    return diags


# ---------------------------------------------------------------------------
# builders from validated config blocks
# ---------------------------------------------------------------------------

def _build_optical(d) -> OpticalSystem:
    return OpticalSystem(
        g_ground=d["g_ground"],
        g_excited=d["g_excited"],
        f0_thz=d["f0_thz"],
        gamma_inh_mhz=d["gamma_inh_mhz"],
        gamma_hom_mhz=d["gamma_hom_mhz"],
        t_optical_us=d["t_optical_us"],
    )


def _build_gtensor(d) -> GTensor:
    orientation = np.eye(3)
    if "rotation_axis" in d or "rotation_angle_deg" in d:
        if "rotation_axis" not in d or "rotation_angle_deg" not in d:
            raise ValueError("rotation_axis and rotation_angle_deg must be given together")
        orientation = rotation_about_axis(d["rotation_axis"], d["rotation_angle_deg"])
    return GTensor(tuple(d["principal"]), orientation)


def _build_lineshape(d) -> LineshapeSpec:
    return LineshapeSpec(kind=d["kind"], fwhm=d["fwhm"], mix=d.get("mix", 0.5))


def _build_grid(d) -> np.ndarray:
    return uniform_grid(d["start"], d["stop"], d["n"])


def _build_pulsed(d) -> PulsedEsrParams:
    kwargs = {}
    mapping = {
        "t_m_ns": "t_m_ns",
        "t_1_ns": "t_1_ns",
        "rabi_max_mhz": "rabi_max_mhz",
        "rabi_decay_ns": "rabi_decay_ns",
    }
    for key, attr in mapping.items():
        if key in d:
            kwargs[attr] = d[key]
    if "eseem_depths" in d or "larmor_freqs_mhz" in d:
        kwargs["eseem_depths"] = tuple(d.get("eseem_depths", ()))
        kwargs["larmor_freqs_mhz"] = tuple(d.get("larmor_freqs_mhz", ()))
    return PulsedEsrParams(**kwargs)


# ---------------------------------------------------------------------------
# scenario handlers: return a list of (payload, path_suffix) to write
# ---------------------------------------------------------------------------

def _run_simulate(doc):
    scenario = doc["scenario"]
    phys = doc["physics"]
    if scenario == "ple":
        line = LineshapeSpec(
            kind=phys.get("line_kind", "lorentzian"),
            fwhm=phys["optical"]["gamma_inh_mhz"] * 1e-3,
            mix=phys.get("line_mix", 0.5),
        )
        spec = ple_spectrum(
            _build_optical(phys["optical"]),
            phys["field_mt"] * 1e-3,
            phys["spin_temperature_k"],
            line,
            _build_grid(doc["grid"]),
        )
        return [(spec, "")]
    if scenario == "powder":
        spec = powder_esr_spectrum(
            _build_gtensor(phys["g_tensor"]),
            phys["mw_freq_ghz"],
            _build_lineshape(phys["line"]),
            _build_grid(doc["grid"]),
            n_orientations=phys.get("n_orientations", 4096),
        )
        return [(spec, "")]
    if scenario == "edfs":
        direction = np.asarray(phys["direction"], dtype=float)
        norm = np.linalg.norm(direction)
        if norm == 0.0:
            raise ValueError("edfs direction must be nonzero")
        spec = edfs_spectrum(
            _build_gtensor(phys["g_tensor"]),
            direction / norm,
            phys["mw_freq_ghz"],
            HyperfineModel(
                a_iso_mhz=phys["hyperfine"]["a_iso_mhz"],
                nuclear_spin=phys["hyperfine"]["nuclear_spin"],
                abundance=phys["hyperfine"]["abundance"],
            ),
            _build_lineshape(phys["line"]),
            _build_grid(doc["grid"]),
        )
        return [(spec, "")]
    if scenario == "holes":
        background = None
        if "background" in phys:
            background = LorentzianBackground(
                fwhm_mhz=phys["background"]["fwhm_mhz"],
                amplitude=phys["background"].get("amplitude", 1.0),
            )
        pattern = hole_pattern(
            _build_optical(phys["optical"]),
            phys["field_mt"] * 1e-3,
            phys["regime"],
            central_amplitude=phys.get("central_amplitude", 1.0),
            side_amplitude=phys.get("side_amplitude", 0.5),
            half_harmonics=phys.get("half_harmonics", False),
            background=background,
        )
        return [(render_hole_spectrum(pattern, _build_grid(doc["grid"])), "")]
    if scenario == "hole_map":
        hmap = hole_field_map(
            _build_optical(phys["optical"]),
            _build_grid(phys["fields_mt"]),
            phys["regime"],
            _build_grid(doc["grid"]),
            central_amplitude=phys.get("central_amplitude", 1.0),
            side_amplitude=phys.get("side_amplitude", 0.5),
        )
        return [(hmap, "")]
    if scenario == "pump_trace":
        model = RateModel.from_optical_system(
            _build_optical(phys["optical"]),
            phys["field_mt"] * 1e-3,
            phys["spin_temperature_k"],
            phys["pump_rate"],
            branching=phys.get("branching", 0.5),
            spin_relax_ground=phys["spin_relax_ground"],
            spin_relax_excited=phys["spin_relax_excited"],
            pump_transition=phys.get("pump_transition", "A"),
        )
        return [(pl_time_trace(model, _build_grid(doc["grid"])), "")]
    if scenario == "rabi":
        return [
            (
                rabi_trace(_build_pulsed(phys["pulsed"]), phys["power_ratio"], _build_grid(doc["grid"])),
                "",
            )
        ]
    if scenario == "echo":
        return [(hahn_echo_trace(_build_pulsed(phys["pulsed"]), _build_grid(doc["grid"])), "")]
    if scenario == "recovery":
        return [
            (inversion_recovery_trace(_build_pulsed(phys["pulsed"]), _build_grid(doc["grid"])), "")
        ]
    if scenario == "angle_sweep":
        relation = rotation_about_axis(
            phys["site_rotation_axis"], phys["site_rotation_angle_deg"]
        )
        ground = SitePair.from_rotation(GTensor(tuple(phys["ground_principal"])), relation)
        excited = SitePair.from_rotation(GTensor(tuple(phys["excited_principal"])), relation)
        axis = phys.get("rotation_axis", [0.0, 0.0, 1.0])
        trace_a, trace_b = angle_sweep_cd_splitting(
            ground, excited, phys["field_t"], _build_grid(doc["grid"]), rotation_axis=axis
        )
        return [(trace_a, "_site_a"), (trace_b, "_site_b")]
    if scenario == "boltzmann":
        result = {"splitting_ghz": phys["splitting_ghz"]}
        if "temperature_k" in phys:
            p_lo, p_up = boltzmann_populations(phys["splitting_ghz"], phys["temperature_k"])
            result.update(
                temperature_k=phys["temperature_k"],
                p_lower=p_lo,
                p_upper=p_up,
                ratio=p_up / p_lo,
            )
        if "ratio" in phys:
            t = spin_temperature_from_ratio(phys["ratio"], phys["splitting_ghz"])
            result["spin_temperature_k"] = t if np.isfinite(t) else "unbounded"
        if "temperature_k" not in phys and "ratio" not in phys:
            raise ValueError("boltzmann scenario needs temperature_k and/or ratio")
        return [(result, "")]
    raise ValueError(f"unknown simulate scenario {doc['scenario']!r}")


def _read_input_spectrum(path_str: str) -> Spectrum:
    """Read a data file, resolving relative paths like output paths."""
    path = Path(path_str)
    if not path.is_absolute():
        base = os.environ.get(OUTPUT_DIR_ENV, "")
        if base:
            path = Path(base) / path
    if not path.exists():
        raise OSError(f"input file not found: {path}")
    if path.suffix.lower() == ".json":
        return read_spectrum_json(path)
    return read_spectrum_csv(path)


def _run_fit(doc):
    scenario = doc["scenario"]
    phys = doc["physics"]
    if scenario == "fit_peaks":
        spectrum = _read_input_spectrum(doc["input"])
        model = initial_peak_model(
            spectrum,
            phys["n_peaks"],
            shape=phys.get("shape", "lorentzian"),
            negative=phys.get("negative", False),
            mix=phys.get("mix", 0.5),
        )
        result = fit_peaks(spectrum, model)
        return [((result, {"input": doc["input"]}), "")]
    if scenario == "fit_decay":
        trace = _read_input_spectrum(doc["input"])
        result = fit_exponential(trace, kind=phys["kind"])
        return [((result, {"input": doc["input"]}), "")]
    if scenario == "fit_g":
        fields_t = []
        center_sets = []
        for entry in doc["inputs"]:
            spectrum = _read_input_spectrum(entry["path"])
            model = initial_peak_model(spectrum, 4)
            fit = fit_peaks(spectrum, model)
            center_sets.append([fit.params[f"center_{i}"] for i in range(1, 5)])
            fields_t.append(entry["field_mt"] * 1e-3)
        result = fit_gfactors(center_sets, fields_t)
        provenance = {"inputs": [e["path"] for e in doc["inputs"]]}
        return [((result, provenance), "")]
    raise ValueError(f"unknown fit scenario {scenario!r}")


# ---------------------------------------------------------------------------
# output, noise, manifest
# ---------------------------------------------------------------------------

def _apply_noise(payloads, noise_cfg, seed_override):
    if noise_cfg is None:
        return
    sigma_rel = noise_cfg["sigma_rel"]
    if sigma_rel <= 0.0:
        return
    seed = noise_cfg["seed"] if seed_override is None else seed_override
    rng = np.random.Generator(np.random.Philox(seed))
    for payload, _ in payloads:
        if isinstance(payload, Spectrum):
            scale = float(np.max(np.abs(payload.intensity)))
            payload.intensity = payload.intensity + rng.normal(
                0.0, sigma_rel * scale, payload.intensity.size
            )
            payload.meta["noise_sigma_rel"] = sigma_rel
            payload.meta["noise_seed"] = seed
        elif isinstance(payload, HoleFieldMap):
            scale = float(np.max(np.abs(payload.dpl)))
            payload.dpl = payload.dpl + rng.normal(0.0, sigma_rel * scale, payload.dpl.shape)
            payload.meta["noise_sigma_rel"] = sigma_rel
            payload.meta["noise_seed"] = seed


def _resolve_output(path_str: str) -> Path:
    path = Path(path_str)
    if not path.is_absolute():
        base = os.environ.get(OUTPUT_DIR_ENV, "")
        if base:
            path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_payload(payload, path: Path, fmt: str) -> None:
    if isinstance(payload, Spectrum):
        (write_spectrum_csv if fmt == "csv" else write_spectrum_json)(payload, path)
    elif isinstance(payload, HoleFieldMap):
        (write_map_csv if fmt == "csv" else write_map_json)(payload, path)
    elif isinstance(payload, tuple):  # (FitResult, provenance)
        write_fit_json(payload[0], path, provenance=payload[1])
    elif isinstance(payload, dict):
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:  # pragma: no cover
        raise TypeError(f"cannot serialize payload of type {type(payload)!r}")


def run(doc: dict, config_bytes: bytes, overrides: dict | None = None) -> list[Path]:
    """Execute a validated config; returns the written output paths.

    overrides may carry "output", "format" and "seed" from CLI flags.
    Relative input and output paths resolve against SPINOPTICS_OUTPUT_DIR
    when set, otherwise the working directory. Raises ConfigError for
    schema violations; numerical and I/O errors propagate for the command
    wrappers to translate into exit codes.
    """
    overrides = overrides or {}
    diagnostics = validate_config(doc)
    if diagnostics:
        raise ConfigError(diagnostics)

    scenario = doc["scenario"]
    if scenario in SIMULATE_SCENARIOS:
        payloads = _run_simulate(doc)
    else:
        payloads = _run_fit(doc)

    _apply_noise(payloads, doc.get("noise"), overrides.get("seed"))

    out_path = overrides.get("output") or doc["output"]["path"]
    fmt = overrides.get("format") or doc["output"]["format"]
    written = []
    for payload, suffix in payloads:
        path = Path(out_path)
        if suffix:
            path = path.with_name(path.stem + suffix + path.suffix)
        path = _resolve_output(str(path))
        _write_payload(payload, path, fmt)
        written.append(path)

    manifest = {
        "config_sha256": hashlib.sha256(config_bytes).hexdigest(),
        "tool_version": __version__,
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
        "scenario": scenario,
        "prng": PRNG_NAME,
        "input_paths": sorted(
            [doc["input"]] if "input" in doc else [e["path"] for e in doc.get("inputs", [])]
        ),
        "output_paths": [str(p) for p in written],
    }
    if "noise" in doc:
        manifest["noise"] = {
            "sigma_rel": doc["noise"]["sigma_rel"],
            "seed": overrides.get("seed", doc["noise"]["seed"]),
        }
    manifest_path = written[0].with_name(written[0].name + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return written


# ---------------------------------------------------------------------------
# command-line entry
# ---------------------------------------------------------------------------

def _load_config(path_str: str) -> tuple[dict, bytes]:
    path = Path(path_str)
    try:
        raw = path.read_bytes()
    except OSError as err:
        raise OSError(f"cannot read config {path}: {err}") from err
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise ConfigError([Diagnostic("", f"invalid JSON: {err}")]) from err
    return doc, raw


def _error_json(kind: str, message: str, diagnostics=None) -> str:
    doc = {"error": {"kind": kind, "message": message}}
    if diagnostics:
        doc["error"]["diagnostics"] = [
            {"path": d.path, "message": d.message} for d in diagnostics
        ]
    return json.dumps(doc, indent=2, sort_keys=True)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spinoptics",
        description="Simulate and fit spin-photon interface spectra from JSON scenario configs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("simulate", "run a forward-synthesis scenario"),
        ("fit", "run a parameter-recovery scenario"),
        ("validate", "report all schema violations in a config"),
    ):
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("config", help="path to a JSON scenario config")
        if name != "validate":
            cmd.add_argument("--output", help="override output path")
            cmd.add_argument("--format", choices=("csv", "json"), help="override output format")
            cmd.add_argument("--seed", type=int, help="override the noise seed")
            cmd.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)

    try:
        doc, raw = _load_config(args.config)
    except ConfigError as err:
        print(_error_json("config", "config is not valid JSON", err.diagnostics))
        return EXIT_CONFIG
    except OSError as err:
        print(_error_json("io", str(err)))
        return EXIT_IO

    if args.command == "validate":
        diagnostics = validate_config(doc)
        for d in diagnostics:
            print(d)
        if not diagnostics:
            print("ok")
        return EXIT_OK if not diagnostics else EXIT_CONFIG

    scenario = doc.get("scenario")
    family = SIMULATE_SCENARIOS if args.command == "simulate" else FIT_SCENARIOS
    if scenario not in family:
        print(
            _error_json(
                "config",
                f"scenario {scenario!r} cannot be run with '{args.command}'",
                [Diagnostic("scenario", f"not a {args.command} scenario")],
            )
        )
        return EXIT_CONFIG

    overrides = {"output": args.output, "format": args.format, "seed": args.seed}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    try:
        written = run(doc, raw, overrides)
    except ConfigError as err:
        print(_error_json("config", "config failed validation", err.diagnostics))
        return EXIT_CONFIG
    except OSError as err:
        print(_error_json("io", str(err)))
        return EXIT_IO
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as err:
        print(_error_json("numerical", str(err)))
        return EXIT_NUMERICAL

    if not args.quiet:
        for path in written:
            print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
