"""g-tensor algebra, optical level structure and thermal populations.

Shared vocabulary for the spectra, hole-burning, dynamics and fitting
modules. Everything here is a pure function over immutable records.

Units: magnetic fields in tesla, frequencies in GHz (optical carrier in
THz), hyperfine constants in MHz, temperatures in kelvin; each function
documents its own units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import H, K_B, MU_B_OVER_H_GHZ_PER_T

_ROTATION_TOL = 1e-12
_UNIT_TOL = 1e-12


def _as_unit_vector(v, tol: float = _UNIT_TOL) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"direction must be a 3-vector, got shape {v.shape}")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"direction must be a unit vector (|v| = {norm!r})")
    return v


def _check_rotation(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ValueError("orientation must be a 3x3 rotation matrix")
    if not np.allclose(r.T @ r, np.eye(3), atol=_ROTATION_TOL, rtol=0.0):
        raise ValueError("orientation is not orthonormal to 1e-12")
    if abs(np.linalg.det(r) - 1.0) > 1e-9:
        raise ValueError("orientation must be a proper rotation (det = +1)")
    return r


def rotation_about_axis(axis, angle_deg: float) -> np.ndarray:
    """Rotation matrix for a right-handed rotation of angle_deg about axis."""
    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis)
    if norm == 0.0:
        raise ValueError("rotation axis must be nonzero")
    x, y, z = axis / norm
    t = math.radians(angle_deg)
    c, s = math.cos(t), math.sin(t)
    kmat = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + s * kmat + (1.0 - c) * (kmat @ kmat)


@dataclass(frozen=True, eq=False)
class GTensor:
    """Anisotropic g-tensor: principal values plus principal->lab rotation.

    principal: (gx, gy, gz), dimensionless, all >= 0.
    orientation: 3x3 proper rotation taking principal-frame vectors to the
    lab frame; defaults to the identity (principal axes = lab axes).
    """

    principal: tuple[float, float, float]
    orientation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        p = tuple(float(v) for v in self.principal)
        if len(p) != 3:
            raise ValueError("principal must hold exactly three g-values")
        if any(v < 0.0 for v in p):
            raise ValueError(f"principal g-values must be >= 0, got {p}")
        object.__setattr__(self, "principal", p)
        object.__setattr__(self, "orientation", _check_rotation(self.orientation))

    def rotated(self, rotation: np.ndarray) -> "GTensor":
        """Same principal values with `rotation` applied on top of orientation."""
        return GTensor(self.principal, _check_rotation(rotation) @ self.orientation)


@dataclass(frozen=True, eq=False)
class FieldVector:
    """Static magnetic field: magnitude in tesla plus a unit lab-frame direction."""

    magnitude_t: float
    direction: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        if self.magnitude_t < 0.0:
            raise ValueError("field magnitude must be >= 0")
        object.__setattr__(self, "direction", _as_unit_vector(self.direction))

    @classmethod
    def along(cls, v, magnitude_t: float) -> "FieldVector":
        """Field of given magnitude along the (normalized) vector v."""
        v = np.asarray(v, dtype=float)
        norm = np.linalg.norm(v)
        if norm == 0.0:
            raise ValueError("direction vector must be nonzero")
        return cls(magnitude_t, v / norm)


@dataclass(frozen=True)
class OpticalSystem:
    """Effective two-level-per-manifold optical system.

    g_ground / g_excited: effective g-factors along the working field
    direction (dimensionless). f0_thz: zero-field optical transition
    frequency (THz). gamma_inh_mhz / gamma_hom_mhz: inhomogeneous and
    homogeneous FWHM (MHz). t_optical_us: excited-state lifetime (us).
    """

    g_ground: float
    g_excited: float
    f0_thz: float
    gamma_inh_mhz: float
    gamma_hom_mhz: float
    t_optical_us: float

    def __post_init__(self):
        if self.gamma_inh_mhz <= 0.0 or self.gamma_hom_mhz <= 0.0:
            raise ValueError("linewidths must be > 0")
        if self.gamma_hom_mhz > self.gamma_inh_mhz:
            raise ValueError("gamma_hom must not exceed gamma_inh")
        if self.t_optical_us <= 0.0:
            raise ValueError("optical lifetime must be > 0")
        if self.g_ground < 0.0 or self.g_excited < 0.0:
            raise ValueError("effective g-factors must be >= 0")


@dataclass(frozen=True)
class HyperfineModel:
    """First-order isotropic hyperfine coupling of one nuclear-spin isotope.

    a_iso_mhz: isotropic coupling constant (MHz). nuclear_spin: I, with
    2I+1 a positive integer (e.g. 7/2). abundance: isotope fraction in [0, 1].
    """

    a_iso_mhz: float
    nuclear_spin: float
    abundance: float

    def __post_init__(self):
        mult = 2.0 * self.nuclear_spin + 1.0
        if mult < 1.0 or abs(mult - round(mult)) > 1e-9:
            raise ValueError(f"2I+1 must be a positive integer, got I={self.nuclear_spin}")
        if not 0.0 <= self.abundance <= 1.0:
            raise ValueError("abundance must lie in [0, 1]")

    @property
    def multiplicity(self) -> int:
        return int(round(2.0 * self.nuclear_spin + 1.0))


@dataclass(frozen=True)
class TransitionFrequencies:
    """The four optical transitions, THz.

    a: down_g -> down_e and b: up_g -> up_e are the spin-conserving pair,
    split by |g_e - g_g|*mu_B*B/h; c: down_g -> up_e and d: up_g -> down_e
    are the spin-flip pair, split by (g_e + g_g)*mu_B*B/h.
    """

    a: float
    b: float
    c: float
    d: float

    def as_dict(self) -> dict[str, float]:
        return {"A": self.a, "B": self.b, "C": self.c, "D": self.d}

    @property
    def ab_separation_ghz(self) -> float:
        return abs(self.b - self.a) * 1e3

    @property
    def cd_separation_ghz(self) -> float:
        return abs(self.c - self.d) * 1e3


def effective_g(g: GTensor, direction) -> float:
    """Effective g-factor along a unit lab-frame direction.

    g_eff = sqrt(sum_i g_i^2 n_i^2) with n the direction expressed in the
    principal frame. Raises ValueError for a non-unit direction.
    """
    n_lab = _as_unit_vector(direction)
    n_principal = g.orientation.T @ n_lab
    gx, gy, gz = g.principal
    return float(
        math.sqrt(
            gx * gx * n_principal[0] ** 2
            + gy * gy * n_principal[1] ** 2
            + gz * gz * n_principal[2] ** 2
        )
    )


def zeeman_frequency(g_eff: float, field_t: float) -> float:
    """Zeeman splitting in GHz: g_eff * (mu_B/h) * B, exactly linear in B."""
    if g_eff < 0.0:
        raise ValueError("g_eff must be >= 0")
    if field_t < 0.0:
        raise ValueError("field must be >= 0")
    return g_eff * MU_B_OVER_H_GHZ_PER_T * field_t


def optical_transition_frequencies(sys: OpticalSystem, field_t: float) -> TransitionFrequencies:
    """Frequencies (THz) of the four optical transitions at field B (tesla).

    Both manifolds split symmetrically about their zero-field positions, so
    the A/B midpoint and the C/D midpoint both equal f0.
    """
    if field_t < 0.0:
        raise ValueError("field must be >= 0")
    split_g_thz = zeeman_frequency(sys.g_ground, field_t) * 1e-3
    split_e_thz = zeeman_frequency(sys.g_excited, field_t) * 1e-3
    half_diff = 0.5 * (split_e_thz - split_g_thz)
    half_sum = 0.5 * (split_e_thz + split_g_thz)
    return TransitionFrequencies(
        a=sys.f0_thz - half_diff,
        b=sys.f0_thz + half_diff,
        c=sys.f0_thz + half_sum,
        d=sys.f0_thz - half_sum,
    )


def boltzmann_populations(splitting_ghz: float, temperature_k: float) -> tuple[float, float]:
    """Thermal populations (p_lower, p_upper) of a two-level splitting.

    p_upper/p_lower = exp(-h*nu/(k_B*T)); the pair sums to 1.
    """
    if temperature_k <= 0.0:
        raise ValueError("temperature must be > 0")
    if splitting_ghz < 0.0:
        raise ValueError("splitting must be >= 0")
    ratio = math.exp(-H * splitting_ghz * 1e9 / (K_B * temperature_k))
    p_lower = 1.0 / (1.0 + ratio)
    return p_lower, 1.0 - p_lower


def spin_temperature_from_ratio(ratio: float, splitting_ghz: float) -> float:
    """Temperature (K) whose Boltzmann factor equals `ratio` at the splitting.

    Exact inverse of boltzmann_populations: T = h*nu/(k_B*ln(1/ratio)).
    ratio = 1 (equal populations) returns +inf; ratio > 1 would be a
    population inversion, which is not a thermal state, and raises.
    """
    if splitting_ghz <= 0.0:
        raise ValueError("splitting must be > 0")
    if not 0.0 < ratio <= 1.0:
        raise ValueError("population ratio must lie in (0, 1]")
    if ratio == 1.0:
        return math.inf
    return H * splitting_ghz * 1e9 / (K_B * math.log(1.0 / ratio))


def hyperfine_satellite_offsets(hf: HyperfineModel) -> list[tuple[float, float]]:
    """First-order hyperfine line positions as (offset_mhz, weight) pairs.

    2I+1 satellites at a_iso*m_I for m_I in {-I..I}, each carrying
    abundance/(2I+1), plus a central line at 0 carrying 1-abundance for
    the spinless isotopes. Weights sum to 1; zero-weight entries are
    dropped (abundance 0 gives the bare central line).
    """
    lines: list[tuple[float, float]] = []
    if hf.abundance < 1.0:
        lines.append((0.0, 1.0 - hf.abundance))
    if hf.abundance > 0.0:
        w = hf.abundance / hf.multiplicity
        m_i = -hf.nuclear_spin
        for _ in range(hf.multiplicity):
            lines.append((hf.a_iso_mhz * m_i, w))
            m_i += 1.0
    return lines
