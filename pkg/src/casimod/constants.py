"""Physical constants (CODATA 2018, SI).

Every module reads these through the module object (``constants.HBAR``)
so a single table governs all derived numbers.
"""

import math

CODATA_VERSION = "CODATA 2018"

C = 299_792_458.0                  # speed of light, m/s
H = 6.626_070_15e-34               # Planck constant, J s
HBAR = H / (2.0 * math.pi)         # reduced Planck constant, J s
K_B = 1.380_649e-23                # Boltzmann constant, J/K
E_CHARGE = 1.602_176_634e-19       # elementary charge, C


def table() -> dict[str, float | str]:
    """Current constants as a plain mapping (used by ``casimod info``)."""
    return {
        "version": CODATA_VERSION,
        "c_m_per_s": C,
        "h_J_s": H,
        "hbar_J_s": HBAR,
        "k_B_J_per_K": K_B,
        "e_C": E_CHARGE,
    }


def ev_to_rad_per_s(energy_ev: float) -> float:
    """Angular frequency corresponding to ``energy_ev`` via omega = E e / hbar."""
    return energy_ev * E_CHARGE / HBAR


def rad_per_s_to_ev(omega: float) -> float:
    return omega * HBAR / E_CHARGE
