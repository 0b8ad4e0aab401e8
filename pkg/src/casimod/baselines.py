"""Closed-form reference quantities: ideal-mirror pressures, thermal scales, Li_3."""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import constants


def _positive(name, value):
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")


def ideal_pressure(d: float) -> float:
    """Zero-temperature pressure between perfect mirrors, pi^2 hbar c / (240 d^4)."""
    _positive("d", d)
    return math.pi ** 2 * constants.HBAR * constants.C / (240.0 * d ** 4)


def ideal_thermal_tail(d: float, temperature: float) -> float:
    """Large-distance limit k_B T zeta(3) / (4 pi d^3) for perfect mirrors."""
    _positive("d", d)
    _positive("temperature", temperature)
    return constants.K_B * temperature * zeta3() / (4.0 * math.pi * d ** 3)


@dataclass(frozen=True)
class ThermalScales:
    thermal_length: float | None           # hbar c / (2 pi k_B T), m
    first_matsubara: float | None          # rad/s
    characteristic_frequency: float | None  # c / (2 a), rad/s
    plasma_depth: float | None             # c / omega_p, m


def thermal_scales(temperature: float | None = None, a: float | None = None,
                   omega_p: float | None = None) -> ThermalScales:
    """Length and frequency scales; any argument may be omitted."""
    lam = xi1 = wc = delta = None
    if temperature is not None:
        _positive("temperature", temperature)
        lam = constants.HBAR * constants.C / (2.0 * math.pi * constants.K_B * temperature)
        xi1 = 2.0 * math.pi * constants.K_B * temperature / constants.HBAR
    if a is not None:
        _positive("a", a)
        wc = constants.C / (2.0 * a)
    if omega_p is not None:
        _positive("omega_p", omega_p)
        delta = constants.C / omega_p
    return ThermalScales(lam, xi1, wc, delta)


def zeta3() -> float:
    """Apery's constant from the partial sum plus an Euler-Maclaurin tail."""
    n = 64
    head = math.fsum(k ** -3.0 for k in range(1, n))
    tail = 1 / (2 * n ** 2) + 1 / (2 * n ** 3) + 1 / (4 * n ** 4) - 1 / (12 * n ** 6)
    return head + tail


def polylog3(x: float) -> float:
    """Trilogarithm Li_3(x) = sum_{n>=1} x^n / n^3 for 0 <= x <= 1.

    Direct compensated series below ``1 - 1e-3``; above it, the expansion of
    Li_3(e^mu) about mu = 0 (needs zeta(3) and zeta(2) only).
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"polylog3 needs 0 <= x <= 1, got {x!r}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return zeta3()
    if x <= 1.0 - 1e-3:
        terms = []
        power = 1.0
        n = 1
        while True:
            power *= x
            term = power / n ** 3
            terms.append(term)
            if term < 1e-18 * terms[0]:
                break
            n += 1
        return math.fsum(terms)
    mu = math.log(x)
    zeta2 = math.pi ** 2 / 6.0
    return math.fsum([
        zeta3(),
        zeta2 * mu,
        (1.5 - math.log(-mu)) * mu * mu / 2.0,
        -mu ** 3 / 12.0,
        -mu ** 4 / 288.0,
        mu ** 6 / 86400.0,
    ])


def te_zero_kernel(mu0: float) -> float:
    """int_0^inf y^2 [e^{2y} A^2 - 1]^-1 dy with A = (mu0 + 1) / (mu0 - 1), i.e. Li_3(A^-2) / 4."""
    if not mu0 > 1:
        raise ValueError("static permeability must be > 1")
    r = (mu0 - 1.0) / (mu0 + 1.0)
    return polylog3(r * r) / 4.0
