"""Forward synthesis of frequency- and field-domain spectra.

Four-line PLE with thermal weights, orientation-averaged cw powder ESR
(derivative convention), single-crystal echo-detected field sweeps with
hyperfine satellites, and two-site angle sweeps of the spin-flip optical
splitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import MU_B_OVER_H_GHZ_PER_T
from .core import (
    GTensor,
    OpticalSystem,
    HyperfineModel,
    _check_rotation,
    boltzmann_populations,
    effective_g,
    hyperfine_satellite_offsets,
    optical_transition_frequencies,
    zeeman_frequency,
)

AXIS_KINDS = ("frequency_GHz", "field_mT", "detuning_MHz", "angle_deg", "time_ns")
LINESHAPE_KINDS = ("gaussian", "lorentzian", "pseudo_voigt")

_UNIFORM_RTOL = 1e-9
_KERNEL_CUTOFF_FWHM = 10.0  # truncation of convolution kernels, in units of FWHM


@dataclass(eq=False)
class Spectrum:
    """Uniformly sampled 1-D trace with free-form provenance metadata.

    grid must be strictly increasing and uniform to 1e-9 relative; the
    axis unit is encoded in axis_kind.
    """

    axis_kind: str
    grid: np.ndarray
    intensity: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.axis_kind not in AXIS_KINDS:
            raise ValueError(f"unknown axis_kind {self.axis_kind!r}")
        self.grid = np.asarray(self.grid, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.grid.ndim != 1 or self.grid.size < 2:
            raise ValueError("grid must be a 1-D array with at least 2 samples")
        if self.intensity.shape != self.grid.shape:
            raise ValueError("intensity and grid must have the same shape")
        steps = np.diff(self.grid)
        if np.any(steps <= 0.0):
            raise ValueError("grid must be strictly increasing")
        step = (self.grid[-1] - self.grid[0]) / (self.grid.size - 1)
        # representation floor: offsets far from zero cannot express a step
        # more precisely than a few ulps of the axis values
        tol = max(_UNIFORM_RTOL * step, 8.0 * np.finfo(float).eps * float(np.max(np.abs(self.grid))))
        if np.max(np.abs(steps - step)) > tol:
            raise ValueError("grid must be uniform to 1e-9 relative")
        if not np.all(np.isfinite(self.intensity)):
            raise ValueError("intensity must be finite everywhere")

    @property
    def step(self) -> float:
        return float((self.grid[-1] - self.grid[0]) / (self.grid.size - 1))


def uniform_grid(start: float, stop: float, n: int) -> np.ndarray:
    """Uniform axis of n samples from start to stop inclusive."""
    if n < 2:
        raise ValueError("grid needs at least 2 samples")
    if not stop > start:
        raise ValueError("stop must exceed start")
    return np.linspace(float(start), float(stop), int(n))


@dataclass(frozen=True)
class LineshapeSpec:
    """Unit-area line profile: kind, FWHM (axis units) and pseudo-Voigt mix."""

    kind: str
    fwhm: float
    mix: float = 0.5

    def __post_init__(self):
        if self.kind not in LINESHAPE_KINDS:
            raise ValueError(f"unknown lineshape kind {self.kind!r}")
        if self.fwhm <= 0.0:
            raise ValueError("fwhm must be > 0")
        if not 0.0 <= self.mix <= 1.0:
            raise ValueError("pseudo-Voigt mix must lie in [0, 1]")


def lineshape_profile(x, center: float, line: LineshapeSpec) -> np.ndarray:
    """Evaluate the unit-area profile of `line` centred at `center`."""
    x = np.asarray(x, dtype=float)
    w = line.fwhm
    if line.kind == "lorentzian":
        z = 2.0 * (x - center) / w
        return (2.0 / (math.pi * w)) / (1.0 + z * z)
    if line.kind == "gaussian":
        q = 4.0 * math.log(2.0) * ((x - center) / w) ** 2
        return (2.0 / w) * math.sqrt(math.log(2.0) / math.pi) * np.exp(-q)
    lor = lineshape_profile(x, center, replace(line, kind="lorentzian"))
    gau = lineshape_profile(x, center, replace(line, kind="gaussian"))
    return line.mix * lor + (1.0 - line.mix) * gau


def _lineshape_kernel(line: LineshapeSpec, step: float) -> np.ndarray:
    """Symmetric convolution kernel sampled at `step`, cut at 10x FWHM.

    The Lorentzian mass outside the cut is ~w/(10*pi*w) ~ 3%, documented;
    Gaussian tails are negligible at the cut.
    """
    half = int(math.ceil(_KERNEL_CUTOFF_FWHM * line.fwhm / step))
    offsets = np.arange(-half, half + 1) * step
    return lineshape_profile(offsets, 0.0, line)


def fibonacci_sphere(n: int) -> np.ndarray:
    """n near-uniform unit vectors on the sphere (golden-spiral lattice)."""
    if n < 1:
        raise ValueError("need at least one orientation")
    i = np.arange(n)
    z = 1.0 - 2.0 * (i + 0.5) / n
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    phi = 2.0 * math.pi * i / golden
    s = np.sqrt(1.0 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)


def _effective_g_vectorized(g: GTensor, directions: np.ndarray) -> np.ndarray:
    n_principal = directions @ g.orientation  # row-wise R^T n
    gsq = np.asarray(g.principal) ** 2
    return np.sqrt(n_principal**2 @ gsq)


def ple_spectrum(
    sys: OpticalSystem,
    field_t: float,
    spin_temperature_k: float,
    line: LineshapeSpec,
    grid_ghz: np.ndarray,
) -> Spectrum:
    """Four-transition PLE spectrum on an absolute frequency grid (GHz).

    Lines sit at the four optical transitions; the pair starting from the
    lower ground sub-level (A, C) is weighted by p_lower/2 and the pair
    from the upper sub-level (B, D) by p_upper/2 at spin_temperature_k, so
    the four weights sum to 1. Every line is rendered with the kind/mix of
    `line` but with FWHM equal to sys.gamma_inh_mhz (the ensemble width);
    `line.fwhm` is ignored. Transitions falling outside the grid are still
    rendered and reported under meta["truncated_transitions"].
    """
    grid = np.asarray(grid_ghz, dtype=float)
    freqs = optical_transition_frequencies(sys, field_t)
    p_lower, p_upper = boltzmann_populations(
        zeeman_frequency(sys.g_ground, field_t), spin_temperature_k
    )
    weights = {"A": p_lower / 2.0, "B": p_upper / 2.0, "C": p_lower / 2.0, "D": p_upper / 2.0}
    shape = replace(line, fwhm=sys.gamma_inh_mhz * 1e-3)

    intensity = np.zeros_like(grid)
    truncated = []
    for label, f_thz in freqs.as_dict().items():
        center = f_thz * 1e3
        if not grid[0] <= center <= grid[-1]:
            truncated.append(label)
        intensity += weights[label] * lineshape_profile(grid, center, shape)

    meta = {
        "scenario": "ple",
        "field_t": field_t,
        "spin_temperature_k": spin_temperature_k,
        "weights": weights,
        "lineshape": shape.kind,
        "fwhm_ghz": shape.fwhm,
        "transitions_thz": freqs.as_dict(),
    }
    if truncated:
        meta["truncated_transitions"] = truncated
    return Spectrum("frequency_GHz", grid, intensity, meta)


def powder_esr_spectrum(
    g: GTensor,
    mw_freq_ghz: float,
    line: LineshapeSpec,
    field_grid_mt: np.ndarray,
    n_orientations: int = 4096,
) -> Spectrum:
    """cw powder ESR derivative spectrum on a field grid (mT).

    Resonance fields B = h*nu/(g_eff*mu_B) are accumulated over a
    golden-spiral orientation set, convolved with `line` (FWHM in mT) and
    differentiated once along the field axis (field-modulation detection
    convention). Turning points mark the principal g-values.
    """
    if mw_freq_ghz <= 0.0:
        raise ValueError("microwave frequency must be > 0")
    if n_orientations < 100:
        raise ValueError("orientation quadrature needs at least 100 nodes")
    if min(g.principal) <= 0.0:
        raise ValueError("all principal g-values must be > 0 (resonance field diverges)")

    grid = np.asarray(field_grid_mt, dtype=float)
    step = float(grid[1] - grid[0])
    nodes = fibonacci_sphere(n_orientations)
    g_eff = _effective_g_vectorized(g, nodes)
    b_res_mt = mw_freq_ghz / (g_eff * MU_B_OVER_H_GHZ_PER_T) * 1e3

    # linear deposit onto the two neighbouring bins
    density = np.zeros_like(grid)
    pos = (b_res_mt - grid[0]) / step
    i0 = np.floor(pos).astype(int)
    frac = pos - i0
    in_range = (i0 >= 0) & (i0 < grid.size - 1)
    np.add.at(density, i0[in_range], 1.0 - frac[in_range])
    np.add.at(density, i0[in_range] + 1, frac[in_range])
    density /= n_orientations * step

    kernel = _lineshape_kernel(line, step)
    absorption = np.convolve(density, kernel, mode="same") * step
    derivative = np.gradient(absorption, grid)

    meta = {
        "scenario": "powder",
        "mw_freq_ghz": mw_freq_ghz,
        "g_principal": list(g.principal),
        "lineshape": line.kind,
        "fwhm_mt": line.fwhm,
        "n_orientations": n_orientations,
        "clipped_fraction": float(1.0 - in_range.mean()),
    }
    return Spectrum("field_mT", grid, derivative, meta)


def edfs_spectrum(
    g: GTensor,
    direction,
    mw_freq_ghz: float,
    hf: HyperfineModel,
    line: LineshapeSpec,
    field_grid_mt: np.ndarray,
) -> Spectrum:
    """Absorption-mode echo-detected field sweep at a fixed crystal direction.

    A single line at B = h*nu/(g_eff*mu_B) with hyperfine satellites at
    field offsets h*A_iso*m_I/(g_eff*mu_B); weights follow
    hyperfine_satellite_offsets. Field axis and line FWHM in mT.
    """
    if mw_freq_ghz <= 0.0:
        raise ValueError("microwave frequency must be > 0")
    g_eff = effective_g(g, direction)
    if g_eff <= 0.0:
        raise ValueError("effective g vanishes along this direction")

    grid = np.asarray(field_grid_mt, dtype=float)
    b0_mt = mw_freq_ghz / (g_eff * MU_B_OVER_H_GHZ_PER_T) * 1e3
    intensity = np.zeros_like(grid)
    for offset_mhz, weight in hyperfine_satellite_offsets(hf):
        db_mt = offset_mhz / (g_eff * MU_B_OVER_H_GHZ_PER_T)
        intensity += weight * lineshape_profile(grid, b0_mt + db_mt, line)

    meta = {
        "scenario": "edfs",
        "mw_freq_ghz": mw_freq_ghz,
        "g_eff": g_eff,
        "center_mt": b0_mt,
        "a_iso_mhz": hf.a_iso_mhz,
        "nuclear_spin": hf.nuclear_spin,
        "abundance": hf.abundance,
        "lineshape": line.kind,
        "fwhm_mt": line.fwhm,
    }
    return Spectrum("field_mT", grid, intensity, meta)


@dataclass(frozen=True, eq=False)
class SitePair:
    """Two magnetically inequivalent sites whose g-tensors differ by a rotation."""

    site_a: GTensor
    site_b: GTensor
    relation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "relation", _check_rotation(self.relation))
        if not np.allclose(self.site_a.principal, self.site_b.principal, atol=1e-12):
            raise ValueError("site principal values must be equal (rotation-related sites)")
        expected = self.relation @ self.site_a.orientation
        if not np.allclose(expected, self.site_b.orientation, atol=1e-9):
            raise ValueError("relation does not map site_a orientation onto site_b")

    @classmethod
    def from_rotation(cls, site_a: GTensor, relation: np.ndarray) -> "SitePair":
        relation = _check_rotation(relation)
        return cls(site_a, site_a.rotated(relation), relation)


def _plane_basis(axis) -> tuple[np.ndarray, np.ndarray]:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    ref = np.array([1.0, 0.0, 0.0])
    if abs(axis @ ref) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    u = ref - (ref @ axis) * axis
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    return u, v


def angle_sweep_cd_splitting(
    ground: SitePair,
    excited: SitePair,
    field_t: float,
    angles_deg: np.ndarray,
    rotation_axis=(0.0, 0.0, 1.0),
) -> tuple[Spectrum, Spectrum]:
    """Spin-flip (C-D) splitting vs field angle for two rotation-related sites.

    The field of magnitude field_t rotates in the lab plane perpendicular
    to rotation_axis (the optical axis); angle zero lies along a fixed
    in-plane reference direction. For each site the trace is
    (g_g,eff(theta) + g_e,eff(theta)) * mu_B * B / h in GHz, i.e. the C-D
    separation; ground and excited pairs must share the site relation.
    """
    if field_t < 0.0:
        raise ValueError("field must be >= 0")
    if not np.allclose(ground.relation, excited.relation, atol=1e-9):
        raise ValueError("ground and excited site pairs must share the same relation")
    angles = np.asarray(angles_deg, dtype=float)
    u, v = _plane_basis(rotation_axis)
    k = MU_B_OVER_H_GHZ_PER_T * field_t

    traces = []
    for g_tensor, e_tensor, label in (
        (ground.site_a, excited.site_a, "site_a"),
        (ground.site_b, excited.site_b, "site_b"),
    ):
        values = np.empty_like(angles)
        for idx, theta in enumerate(np.radians(angles)):
            n = math.cos(theta) * u + math.sin(theta) * v
            values[idx] = (effective_g(g_tensor, n) + effective_g(e_tensor, n)) * k
        meta = {
            "scenario": "angle_sweep",
            "site": label,
            "field_t": field_t,
            "rotation_axis": list(np.asarray(rotation_axis, dtype=float)),
        }
        traces.append(Spectrum("angle_deg", angles, values, meta))
    return traces[0], traces[1]
