"""Two-tone spectral hole-burning patterns and their magnetic-field maps.

Closed-form hole/anti-hole patterns for a pump resonant with both
spin-conserving transitions inside the inhomogeneous line, in two spin
regimes: fast ground-state relaxation (side features are all holes) and
optical pumping (ground-state features become anti-holes).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import MU_B_OVER_H_GHZ_PER_T
from .core import FieldVector, OpticalSystem, effective_g
from .spectra import SitePair, Spectrum

FAST_SPIN_RELAXATION = "fast_spin_relaxation"
OPTICAL_PUMPING = "optical_pumping"
REGIMES = (FAST_SPIN_RELAXATION, OPTICAL_PUMPING)

HOLE = -1
ANTIHOLE = +1


@dataclass(frozen=True)
class HoleFeature:
    """One signed Lorentzian feature of a hole-burning pattern.

    detuning_mhz: pump-probe offset. sign: -1 hole (depleted emission),
    +1 anti-hole (enhanced emission). width_mhz: Lorentzian FWHM.
    amplitude: nonnegative depth/height scale.
    """

    detuning_mhz: float
    sign: int
    width_mhz: float
    amplitude: float

    def __post_init__(self):
        if self.sign not in (HOLE, ANTIHOLE):
            raise ValueError("sign must be -1 (hole) or +1 (anti-hole)")
        if self.width_mhz <= 0.0:
            raise ValueError("feature width must be > 0")
        if self.amplitude < 0.0:
            raise ValueError("feature amplitude must be >= 0")


@dataclass(frozen=True)
class LorentzianBackground:
    """Broad Lorentzian centred at zero detuning, subtracted when rendering."""

    fwhm_mhz: float
    amplitude: float = 1.0

    def __post_init__(self):
        if self.fwhm_mhz <= 0.0:
            raise ValueError("background fwhm must be > 0")


@dataclass(frozen=True)
class HolePattern:
    """Symmetric multiset of hole/anti-hole features plus optional background."""

    features: tuple[HoleFeature, ...]
    background: LorentzianBackground | None = None

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        remaining = list(self.features)
        while remaining:
            f = remaining.pop()
            if abs(f.detuning_mhz) < 1e-12:
                continue
            partner = next(
                (
                    p
                    for p in remaining
                    if abs(p.detuning_mhz + f.detuning_mhz) < 1e-9 * max(1.0, abs(f.detuning_mhz))
                    and p.sign == f.sign
                    and abs(p.amplitude - f.amplitude) < 1e-12
                ),
                None,
            )
            if partner is None:
                raise ValueError(f"feature at {f.detuning_mhz} MHz lacks a mirror partner")
            remaining.remove(partner)

    def detunings_mhz(self) -> np.ndarray:
        return np.array([f.detuning_mhz for f in self.features])

    def signs(self) -> np.ndarray:
        return np.array([f.sign for f in self.features])


def hole_pattern(
    sys: OpticalSystem,
    field_t: float,
    regime: str,
    *,
    central_amplitude: float = 1.0,
    side_amplitude: float = 0.5,
    half_harmonics: bool = False,
    background: LorentzianBackground | None = None,
) -> HolePattern:
    """Hole/anti-hole pattern at field B (tesla) in the given spin regime.

    Side features sit at detunings |g_e-g_g|*k*B, g_g*k*B and g_e*k*B
    (k = mu_B/h), mirrored about zero. In the fast-relaxation regime every
    feature is a hole; under optical pumping the |g_e-g_g| and g_g pairs
    flip to anti-holes while the g_e pair stays a hole. All widths default
    to gamma_hom. Amplitudes are presentation defaults, not physics.
    half_harmonics adds the modulator artifacts at half the side detunings.
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown relaxation regime {regime!r}")
    if field_t < 0.0:
        raise ValueError("field must be >= 0")

    width = sys.gamma_hom_mhz
    features = [HoleFeature(0.0, HOLE, width, central_amplitude)]
    if field_t > 0.0:
        k_mhz = MU_B_OVER_H_GHZ_PER_T * field_t * 1e3
        sides = [
            (abs(sys.g_excited - sys.g_ground) * k_mhz, "difference"),
            (sys.g_ground * k_mhz, "ground"),
            (sys.g_excited * k_mhz, "excited"),
        ]
        for detuning, which in sides:
            if regime == OPTICAL_PUMPING and which in ("difference", "ground"):
                sign = ANTIHOLE
            else:
                sign = HOLE
            for s in (+1.0, -1.0):
                features.append(HoleFeature(s * detuning, sign, width, side_amplitude))
                if half_harmonics:
                    features.append(
                        HoleFeature(s * detuning / 2.0, sign, width, side_amplitude / 2.0)
                    )
    return HolePattern(tuple(features), background)


def render_hole_spectrum(pattern: HolePattern, grid_mhz: np.ndarray) -> Spectrum:
    """Render a pattern as a differential-PL trace on a detuning grid (MHz).

    Sum of signed Lorentzians (peak amplitude parameterization) minus the
    optional broad background. The grid step must not exceed a quarter of
    the narrowest feature width, otherwise the trace would alias and a
    ValueError is raised instead.
    """
    grid = np.asarray(grid_mhz, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("detuning grid must be 1-D with at least 2 samples")
    step = grid[1] - grid[0]
    if pattern.features:
        min_width = min(f.width_mhz for f in pattern.features)
        if step > min_width / 4.0:
            raise ValueError(
                f"grid step {step:g} MHz under-resolves the narrowest feature "
                f"({min_width:g} MHz FWHM); need step <= FWHM/4"
            )
    intensity = np.zeros_like(grid)
    for f in pattern.features:
        half = f.width_mhz / 2.0
        intensity += f.sign * f.amplitude * half**2 / ((grid - f.detuning_mhz) ** 2 + half**2)
    if pattern.background is not None:
        half = pattern.background.fwhm_mhz / 2.0
        intensity -= pattern.background.amplitude * half**2 / (grid**2 + half**2)
    meta = {
        "scenario": "holes",
        "n_features": len(pattern.features),
        "signs": [int(f.sign) for f in pattern.features],
        "detunings_mhz": [float(f.detuning_mhz) for f in pattern.features],
    }
    return Spectrum("detuning_MHz", grid, intensity, meta)


@dataclass(eq=False)
class HoleFieldMap:
    """Stack of hole-burning spectra over a field sweep (rows) x detuning (cols)."""

    fields_mt: np.ndarray
    detuning_mhz: np.ndarray
    dpl: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.fields_mt = np.asarray(self.fields_mt, dtype=float)
        self.detuning_mhz = np.asarray(self.detuning_mhz, dtype=float)
        self.dpl = np.asarray(self.dpl, dtype=float)
        if self.dpl.shape != (self.fields_mt.size, self.detuning_mhz.size):
            raise ValueError("dpl must have shape (n_fields, n_detunings)")

    def row(self, i: int) -> Spectrum:
        return Spectrum(
            "detuning_MHz",
            self.detuning_mhz,
            self.dpl[i],
            {"field_mt": float(self.fields_mt[i]), **self.meta},
        )


def hole_field_map(
    sys: OpticalSystem,
    fields_mt: np.ndarray,
    regime: str,
    grid_mhz: np.ndarray,
    **pattern_kwargs,
) -> HoleFieldMap:
    """Hole-burning spectra for each field in fields_mt (nonnegative, increasing).

    Feature ridges are straight lines through the origin with slopes
    |g_e-g_g|*k, g_g*k and g_e*k in MHz/mT.
    """
    fields = np.asarray(fields_mt, dtype=float)
    if np.any(fields < 0.0):
        raise ValueError("fields must be nonnegative")
    if np.any(np.diff(fields) <= 0.0):
        raise ValueError("fields must be strictly increasing")
    rows = []
    for b_mt in fields:
        pattern = hole_pattern(sys, b_mt * 1e-3, regime, **pattern_kwargs)
        rows.append(render_hole_spectrum(pattern, grid_mhz).intensity)
    meta = {
        "scenario": "hole_map",
        "regime": regime,
        "g_ground": sys.g_ground,
        "g_excited": sys.g_excited,
        "gamma_hom_mhz": sys.gamma_hom_mhz,
    }
    return HoleFieldMap(fields, np.asarray(grid_mhz, dtype=float), np.vstack(rows), meta)


@dataclass(frozen=True)
class TwoSiteDetunings:
    """Side-hole detunings (MHz) of the two sites and their splitting."""

    site_a_mhz: float
    site_b_mhz: float

    @property
    def splitting_mhz(self) -> float:
        return self.site_a_mhz - self.site_b_mhz


def two_site_hole_splitting(pair: SitePair, field: FieldVector) -> TwoSiteDetunings:
    """Per-site side-hole detunings g_eff*k*B (MHz) along the field direction.

    Pass the pair of ground-state tensors for the ground side-hole or the
    pair of excited-state tensors for the excited one; the splitting is the
    difference of the per-site values and vanishes when the field bisects
    the two site orientations.
    """
    k_mhz = MU_B_OVER_H_GHZ_PER_T * field.magnitude_t * 1e3
    return TwoSiteDetunings(
        site_a_mhz=effective_g(pair.site_a, field.direction) * k_mhz,
        site_b_mhz=effective_g(pair.site_b, field.direction) * k_mhz,
    )
