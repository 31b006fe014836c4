"""Time-domain physics: four-level optical pumping and pulsed-ESR traces.

The rate model spans (down_g, up_g, down_e, up_e) with an incoherent
bidirectional pump on one optical transition, radiative decay split into
spin-conserving and spin-flipping branches, and detailed-balance spin
relaxation inside both manifolds. Pulsed-ESR traces (Rabi, Hahn echo with
nuclear envelope modulation, inversion recovery) are phenomenological
closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, null_space

from .constants import H, K_B
from .core import OpticalSystem, boltzmann_populations, zeeman_frequency
from .spectra import Spectrum

LEVELS = ("down_g", "up_g", "down_e", "up_e")
TRANSITIONS = {"A": (0, 2), "B": (1, 3), "C": (0, 3), "D": (1, 2)}

GYRO_H1_MHZ_PER_T = 42.577
GYRO_F19_MHZ_PER_T = 40.05

_EIG_COND_LIMIT = 1e8
_EIG_RESIDUAL_RTOL = 1e-13


@dataclass(frozen=True, eq=False)
class RateModel:
    """Four-level rate-equation model.

    populations: initial (down_g, up_g, down_e, up_e), nonnegative, sum 1.
    pump_rate: stimulated rate (1/s) on pump_transition, equal both ways.
    optical_decay_rate: 1/s (1/t_optical). branching: probability that an
    excited level decays spin-conservingly. spin_relax_ground/excited:
    total intra-manifold relaxation rates (1/s) whose up/down split obeys
    detailed balance at spin_temperature_k for the manifold splittings
    (GHz) given by splitting_ground_ghz / splitting_excited_ghz.
    """

    populations: np.ndarray
    pump_rate: float
    optical_decay_rate: float
    branching: float
    spin_relax_ground: float
    spin_relax_excited: float
    spin_temperature_k: float
    splitting_ground_ghz: float
    splitting_excited_ghz: float
    pump_transition: str = "A"

    def __post_init__(self):
        p = np.asarray(self.populations, dtype=float)
        if p.shape != (4,):
            raise ValueError("populations must be a 4-vector")
        if np.any(p < 0.0):
            raise ValueError("populations must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("populations must sum to 1 within 1e-12")
        object.__setattr__(self, "populations", p)
        for name in ("pump_rate", "optical_decay_rate", "spin_relax_ground", "spin_relax_excited"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.branching <= 1.0:
            raise ValueError("branching must lie in [0, 1]")
        if self.spin_temperature_k <= 0.0:
            raise ValueError("spin temperature must be > 0")
        if self.splitting_ground_ghz < 0.0 or self.splitting_excited_ghz < 0.0:
            raise ValueError("manifold splittings must be >= 0")
        if self.pump_transition not in TRANSITIONS:
            raise ValueError(f"pump_transition must be one of {sorted(TRANSITIONS)}")

    @classmethod
    def from_optical_system(
        cls,
        sys: OpticalSystem,
        field_t: float,
        spin_temperature_k: float,
        pump_rate: float,
        *,
        branching: float = 0.5,
        spin_relax_ground: float = 0.0,
        spin_relax_excited: float = 0.0,
        pump_transition: str = "A",
        populations: np.ndarray | None = None,
    ) -> "RateModel":
        """Model at field B with splittings from the system's g-factors.

        Initial populations default to the thermal ground manifold.
        """
        split_g = zeeman_frequency(sys.g_ground, field_t)
        split_e = zeeman_frequency(sys.g_excited, field_t)
        if populations is None:
            p_lo, p_up = boltzmann_populations(split_g, spin_temperature_k)
            populations = np.array([p_lo, p_up, 0.0, 0.0])
        return cls(
            populations=populations,
            pump_rate=pump_rate,
            optical_decay_rate=1.0 / (sys.t_optical_us * 1e-6),
            branching=branching,
            spin_relax_ground=spin_relax_ground,
            spin_relax_excited=spin_relax_excited,
            spin_temperature_k=spin_temperature_k,
            splitting_ground_ghz=split_g,
            splitting_excited_ghz=split_e,
            pump_transition=pump_transition,
        )


def _detailed_balance_rates(total_rate: float, splitting_ghz: float, temperature_k: float):
    """(down_rate, up_rate) with up/down = exp(-h*nu/kT) and sum = total_rate."""
    r = math.exp(-H * splitting_ghz * 1e9 / (K_B * temperature_k))
    down = total_rate / (1.0 + r)
    return down, total_rate - down


def rate_matrix(model: RateModel, extra_drives: tuple = ()) -> np.ndarray:
    """Generator M of dp/dt = M p; columns sum to zero.

    extra_drives: additional incoherent drives as (transition_label, rate)
    pairs, e.g. a probe tone next to the pump.
    """
    m = np.zeros((4, 4))
    drives = [(model.pump_transition, model.pump_rate)]
    drives.extend(extra_drives)
    for label, rate in drives:
        lo, hi = TRANSITIONS[label]
        m[hi, lo] += rate
        m[lo, lo] -= rate
        m[lo, hi] += rate
        m[hi, hi] -= rate

    g_opt = model.optical_decay_rate
    beta = model.branching
    # down_e decays to down_g (conserving) or up_g; up_e mirrors it
    m[0, 2] += beta * g_opt
    m[1, 2] += (1.0 - beta) * g_opt
    m[2, 2] -= g_opt
    m[1, 3] += beta * g_opt
    m[0, 3] += (1.0 - beta) * g_opt
    m[3, 3] -= g_opt

    for (lo, hi, total, nu) in (
        (0, 1, model.spin_relax_ground, model.splitting_ground_ghz),
        (2, 3, model.spin_relax_excited, model.splitting_excited_ghz),
    ):
        down, up = _detailed_balance_rates(total, nu, model.spin_temperature_k)
        m[lo, hi] += down
        m[hi, hi] -= down
        m[hi, lo] += up
        m[lo, lo] -= up
    return m


def _propagate(m: np.ndarray, p0: np.ndarray, times_s: np.ndarray) -> np.ndarray:
    """Populations at each time, shape (nt, 4), via eigendecomposition.

    Falls back to scaling-and-squaring (scipy expm) when the eigenvector
    basis is ill conditioned or does not reconstruct M. Raises instead of
    returning non-finite values.
    """
    use_eig = True
    try:
        w, v = np.linalg.eig(m)
        if np.linalg.cond(v) > _EIG_COND_LIMIT:
            use_eig = False
        else:
            residual = np.max(np.abs(v @ np.diag(w) @ np.linalg.inv(v) - m))
            scale = max(1.0, np.max(np.abs(m)))
            if residual > _EIG_RESIDUAL_RTOL * scale:
                use_eig = False
    except np.linalg.LinAlgError:
        use_eig = False

    if use_eig:
        c = np.linalg.solve(v, p0.astype(complex))
        out = (v @ (c[:, None] * np.exp(np.outer(w, times_s)))).real.T
    else:
        out = np.stack([expm(m * t) @ p0 for t in times_s])
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("rate-equation propagation produced non-finite populations")
    return out


def rate_evolve(model: RateModel, t_s) -> np.ndarray:
    """Populations after evolving for t_s seconds (scalar or array of times)."""
    times = np.atleast_1d(np.asarray(t_s, dtype=float))
    if np.any(times < 0.0):
        raise ValueError("evolution time must be >= 0")
    out = _propagate(rate_matrix(model), model.populations, times)
    return out[0] if np.isscalar(t_s) or np.ndim(t_s) == 0 else out


def steady_state(model: RateModel, extra_drives: tuple = ()) -> np.ndarray:
    """Unique stationary population vector of the rate matrix.

    Raises if the stationary state is not unique (disconnected rate graph,
    e.g. no relaxation and no pump path between manifold halves).
    """
    ns = null_space(rate_matrix(model, extra_drives))
    if ns.shape[1] != 1:
        raise ValueError(
            f"stationary state is not unique ({ns.shape[1]} null directions); "
            "add relaxation or a pump path"
        )
    p = ns[:, 0]
    total = p.sum()
    if abs(total) < 1e-300:
        raise FloatingPointError("degenerate null vector in steady-state solve")
    return p / total


def pl_time_trace(model: RateModel, grid_ns: np.ndarray) -> Spectrum:
    """Photoluminescence rate (photons/s) vs time under the model's pump.

    PL(t) is the total excited population times the optical decay rate.
    """
    grid = np.asarray(grid_ns, dtype=float)
    pops = _propagate(rate_matrix(model), model.populations, grid * 1e-9)
    pl = model.optical_decay_rate * (pops[:, 2] + pops[:, 3])
    meta = {
        "scenario": "pump_trace",
        "pump_rate": model.pump_rate,
        "pump_transition": model.pump_transition,
        "spin_relax_ground": model.spin_relax_ground,
        "spin_relax_excited": model.spin_relax_excited,
        "spin_temperature_k": model.spin_temperature_k,
    }
    return Spectrum("time_ns", grid, pl, meta)


@dataclass(frozen=True)
class PulsedEsrParams:
    """Phenomenological pulsed-ESR parameters.

    Times in ns, frequencies in MHz. rabi_max_mhz is the oscillation
    frequency at reference power; rabi_decay_ns the oscillation decay
    constant (instrument-limited, quoted range 80-100 ns). eseem_depths
    and larmor_freqs_mhz list one modulation depth k in [0, 1] and one
    nuclear Larmor frequency per coupled nucleus.
    """

    t_m_ns: float = 100.0
    t_1_ns: float = 198.0
    rabi_max_mhz: float = 10.0
    rabi_decay_ns: float = 90.0
    eseem_depths: tuple[float, ...] = ()
    larmor_freqs_mhz: tuple[float, ...] = ()

    def __post_init__(self):
        if self.t_m_ns <= 0.0 or self.t_1_ns <= 0.0:
            raise ValueError("T_m and T_1 must be > 0")
        if self.rabi_max_mhz < 0.0 or self.rabi_decay_ns <= 0.0:
            raise ValueError("Rabi parameters must be positive")
        if len(self.eseem_depths) != len(self.larmor_freqs_mhz):
            raise ValueError("one modulation depth per Larmor frequency required")
        if any(not 0.0 <= k <= 1.0 for k in self.eseem_depths):
            raise ValueError("modulation depths must lie in [0, 1]")

    @classmethod
    def with_ligand_nuclei(
        cls, field_t: float, depths: tuple[float, float] = (0.3, 0.3), **kwargs
    ) -> "PulsedEsrParams":
        """Parameters with 1H and 19F Larmor frequencies at the given field."""
        freqs = (GYRO_H1_MHZ_PER_T * field_t, GYRO_F19_MHZ_PER_T * field_t)
        return cls(eseem_depths=tuple(depths), larmor_freqs_mhz=freqs, **kwargs)


def rabi_trace(params: PulsedEsrParams, power_ratio: float, grid_ns: np.ndarray) -> Spectrum:
    """Damped Rabi oscillation cos(2*pi*Omega*t)*exp(-t/tau_R) vs pulse length.

    Omega = rabi_max * sqrt(power_ratio), so the oscillation frequency
    follows the square-root power law by construction.
    """
    if power_ratio < 0.0:
        raise ValueError("power ratio must be >= 0")
    grid = np.asarray(grid_ns, dtype=float)
    omega_mhz = params.rabi_max_mhz * math.sqrt(power_ratio)
    signal = np.cos(2.0 * math.pi * omega_mhz * 1e-3 * grid) * np.exp(-grid / params.rabi_decay_ns)
    meta = {
        "scenario": "rabi",
        "power_ratio": power_ratio,
        "rabi_freq_mhz": omega_mhz,
        "rabi_decay_ns": params.rabi_decay_ns,
    }
    return Spectrum("time_ns", grid, signal, meta)


def hahn_echo_trace(params: PulsedEsrParams, tau_ns: np.ndarray) -> Spectrum:
    """Hahn-echo decay vs total free evolution 2*tau (the stored axis).

    E = exp(-2*tau/T_m) times the two-pulse nuclear modulation product in
    the weak-coupling limit where both branch frequencies equal the
    nuclear Larmor frequency: each nucleus contributes
    1 - (k/2)*(1 - cos(2*pi*nu_L*tau))^2. meta["time_axis"] marks that the
    axis is 2*tau while the modulation runs in tau.
    """
    tau = np.asarray(tau_ns, dtype=float)
    if np.any(tau < 0.0):
        raise ValueError("tau grid must be nonnegative")
    envelope = np.exp(-2.0 * tau / params.t_m_ns)
    modulation = np.ones_like(tau)
    for depth, nu_mhz in zip(params.eseem_depths, params.larmor_freqs_mhz):
        c = np.cos(2.0 * math.pi * nu_mhz * 1e-3 * tau)
        modulation *= 1.0 - (depth / 2.0) * (1.0 - c) ** 2
    meta = {
        "scenario": "echo",
        "time_axis": "two_tau",
        "t_m_ns": params.t_m_ns,
        "eseem_depths": list(params.eseem_depths),
        "larmor_freqs_mhz": list(params.larmor_freqs_mhz),
    }
    return Spectrum("time_ns", 2.0 * tau, envelope * modulation, meta)


def inversion_recovery_trace(
    params: PulsedEsrParams, delay_ns: np.ndarray, m_inf: float = 1.0
) -> Spectrum:
    """Echo-detected polarization M_inf*(1 - 2*exp(-T_D/T_1)) vs delay (ns)."""
    grid = np.asarray(delay_ns, dtype=float)
    if np.any(grid < 0.0):
        raise ValueError("delay grid must be nonnegative")
    signal = m_inf * (1.0 - 2.0 * np.exp(-grid / params.t_1_ns))
    meta = {"scenario": "recovery", "t_1_ns": params.t_1_ns, "m_inf": m_inf}
    return Spectrum("time_ns", grid, signal, meta)


@dataclass(frozen=True)
class OrbachParams:
    """Thermally activated linewidth: residual width, prefactor (MHz), gap (K)."""

    gamma0_mhz: float
    prefactor_mhz: float
    gap_k: float

    def __post_init__(self):
        if self.gamma0_mhz < 0.0 or self.prefactor_mhz < 0.0 or self.gap_k < 0.0:
            raise ValueError("Orbach parameters must be >= 0")


def orbach_linewidth(params: OrbachParams, temperature_k):
    """Linewidth gamma0 + C*exp(-Delta/T) in MHz; monotone increasing in T."""
    t = np.asarray(temperature_k, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("temperature must be > 0")
    width = params.gamma0_mhz + params.prefactor_mhz * np.exp(-params.gap_k / t)
    return float(width) if np.ndim(temperature_k) == 0 else width
