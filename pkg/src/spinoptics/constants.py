"""Physical constants (CODATA 2018) shared by all modules."""

from __future__ import annotations

from dataclasses import dataclass

MU_B = 9.274_010_0783e-24  # Bohr magneton [J/T]
H = 6.626_070_15e-34       # Planck constant [J*s], exact
K_B = 1.380_649e-23        # Boltzmann constant [J/K], exact

# mu_B/h in GHz/T: 13.996244936... Converts a g-factor times tesla to GHz.
MU_B_OVER_H_GHZ_PER_T = MU_B / H * 1e-9


@dataclass(frozen=True)
class PhysicalConstants:
    """Constant bundle; defaults are the CODATA-2018 values above."""

    mu_B: float = MU_B
    h: float = H
    k_B: float = K_B

    @property
    def mu_B_over_h(self) -> float:
        """mu_B/h in GHz/T."""
        return self.mu_B / self.h * 1e-9


CODATA2018 = PhysicalConstants()
