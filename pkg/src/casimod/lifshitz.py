"""Finite-temperature Lifshitz pressure between two plane-parallel layered slabs.

The pressure is

    F = (k_B T / pi) sum'_l  int_0^inf dk k q_l  sum_pol [exp(2 d q_l) / (R1 R2) - 1]^-1

with the l = 0 term weighted by 1/2.  Positive values mean attraction.

Each k-integral is mapped to ``y = q_l d`` and shifted to start at zero,
``t = y - xi_l d / c``, which turns it into an exponentially decaying
integrand on ``[0, y_max]``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import constants
from .materials import Prescription
from .quadrature import QuadratureError, integrate_batch
from .reflection import LayerStack, TransverseMode, stack_reflection_pair

WORKERS_ENV = "CASIMOD_WORKERS"
CHUNK = 128  # scenes per work item; fixed so results never depend on worker count


class ConvergenceError(RuntimeError):
    """Matsubara sum or k-quadrature failed to converge.

    ``partial`` carries the breakdown accumulated so far, ``context`` optional
    details about where it happened (e.g. the offending PFA node).
    """

    def __init__(self, message, partial=None, context=None):
        super().__init__(message)
        self.partial = partial
        self.context = context or {}


@dataclass(frozen=True)
class ConvergenceControl:
    quad_rel_tol: float = 1e-10
    sum_rel_tol: float = 1e-9
    max_terms: int = 100_000
    max_quad_refinements: int = 40
    y_max: float = 40.0
    guard_terms: int = 3

    def __post_init__(self):
        if not (self.quad_rel_tol > 0 and self.sum_rel_tol > 0):
            raise ValueError("tolerances must be > 0")
        if self.max_terms < 1 or self.max_quad_refinements < 1 or self.guard_terms < 1:
            raise ValueError("term and refinement budgets must be >= 1")
        if not self.y_max > 0:
            raise ValueError("y_max must be > 0")

    def halved(self) -> "ConvergenceControl":
        return replace(self, quad_rel_tol=self.quad_rel_tol / 2, sum_rel_tol=self.sum_rel_tol / 2)


@dataclass(frozen=True)
class CavityScene:
    stack_upper: LayerStack
    stack_lower: LayerStack
    gap: float
    temperature: float
    prescription: Prescription = Prescription.DRUDE

    def __post_init__(self):
        object.__setattr__(self, "prescription", Prescription.parse(self.prescription))
        if not self.gap > 0:
            raise ValueError("gap must be > 0")
        if not self.temperature > 0:
            raise ValueError("temperature must be > 0")


@dataclass
class PressureBreakdown:
    """Pressure (Pa) split into the TE l=0, TM l=0 and l>0 channels."""

    total: float
    te_zero: float
    tm_zero: float
    nonzero_modes: float
    terms_used: int
    quadrature_error_estimate: float
    truncation_error_estimate: float = 0.0

    @property
    def error_estimate(self) -> float:
        return self.quadrature_error_estimate + self.truncation_error_estimate

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "te_zero": self.te_zero,
            "tm_zero": self.tm_zero,
            "nonzero_modes": self.nonzero_modes,
            "terms_used": self.terms_used,
            "quadrature_error_estimate": self.quadrature_error_estimate,
            "truncation_error_estimate": self.truncation_error_estimate,
        }


def matsubara_frequency(l, temperature):
    """xi_l = 2 pi l k_B T / hbar (rad/s)."""
    if np.any(np.asarray(l) < 0):
        raise ValueError("Matsubara index must be >= 0")
    if not temperature > 0:
        raise ValueError("temperature must be > 0")
    return 2.0 * math.pi * l * constants.K_B * temperature / constants.HBAR


def _round_trip_factor(r_product, y):
    """y^2 P e^{-2y} / (1 - P e^{-2y}), written to stay accurate when P -> 1, y -> 0."""
    decay = np.exp(-2.0 * y)
    den = -np.expm1(-2.0 * y) + (1.0 - r_product) * decay
    with np.errstate(divide="ignore", invalid="ignore"):
        out = y * y * r_product * decay / den
    # removable singularity of perfect mirrors at y = 0
    return np.where((y == 0) | (r_product == 0), 0.0, out)


def mode_integrand(scene: CavityScene, mode: TransverseMode, pol: str):
    """k q [exp(2 d q) / (R1 R2) - 1]^-1 for one polarization (units 1/m^2)."""
    pol = pol.upper()
    kperp = np.asarray(mode.kperp, dtype=float)
    xi = 0.0 if mode.static else np.asarray(mode.xi, dtype=float)
    q = np.sqrt((xi / constants.C) ** 2 + kperp ** 2)
    r1 = stack_reflection_pair(scene.stack_upper, mode, scene.prescription)
    r2 = stack_reflection_pair(scene.stack_lower, mode, scene.prescription)
    i = 0 if pol == "TE" else 1
    product = r1[i] * r2[i]
    y = scene.gap * q
    f = _round_trip_factor(product, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(y > 0, kperp * f / (scene.gap * y), 0.0)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite mode integrand")
    return out if out.ndim else float(out)


class _Batch:
    """Scenes sharing materials, temperature and prescription; gaps and thicknesses vary."""

    def __init__(self, upper, lower, gaps, upper_th, lower_th, temperature, prescription, ctrl):
        self.upper = upper
        self.lower = lower
        self.gaps = np.asarray(gaps, dtype=float)
        self.upper_th = upper_th
        self.lower_th = lower_th
        self.temperature = temperature
        self.prescription = prescription
        self.ctrl = ctrl
        self.xi1 = matsubara_frequency(1, temperature)

    def term_integrals(self, scene_idx, ls):
        """Dimensionless y-integrals (TE, TM) for scene/term pairs; shape (n, 2)."""
        scene_idx = np.asarray(scene_idx)
        ls = np.asarray(ls)
        static = bool(np.all(ls == 0))
        if not static and np.any(ls == 0):
            raise ValueError("static and dynamic terms must be integrated separately")
        d = self.gaps[scene_idx]
        xi = ls * self.xi1
        y0 = xi * d / constants.C
        ut = self.upper_th[scene_idx]
        lt = self.lower_th[scene_idx]

        def integrand(t, owner):
            dd = d[owner][:, None]
            yl = y0[owner][:, None]
            kperp = np.sqrt(t * (t + 2.0 * yl)) / dd
            if static:
                mode = TransverseMode(kperp, 0.0, 0)
            else:
                mode = TransverseMode(kperp, xi[owner][:, None], ls[owner][:, None])
            up = stack_reflection_pair(
                self.upper, mode, self.prescription,
                [ut[owner, j][:, None] for j in range(ut.shape[1])])
            lo = stack_reflection_pair(
                self.lower, mode, self.prescription,
                [lt[owner, j][:, None] for j in range(lt.shape[1])])
            y = yl + t
            return np.stack([_round_trip_factor(up[0] * lo[0], y),
                             _round_trip_factor(up[1] * lo[1], y)], axis=-1)

        n = len(scene_idx)
        try:
            res = integrate_batch(
                integrand, np.zeros(n), np.full(n, self.ctrl.y_max),
                rel_tol=self.ctrl.quad_rel_tol, max_levels=self.ctrl.max_quad_refinements)
        except QuadratureError as exc:
            raise ConvergenceError(str(exc)) from exc
        return res.value, res.error

    def _block_plan(self, gap):
        # terms decay like exp(-2 xi_l d / c); aim the first block at the expected cutoff
        y1 = self.xi1 * gap / constants.C
        needed = (0.5 * math.log(1.0 / self.ctrl.sum_rel_tol) + 5.0) / y1
        first = int(min(max(8, math.ceil(needed)), 4096))
        return first, max(8, first // 4)

    def run(self) -> list[PressureBreakdown]:
        ctrl = self.ctrl
        n = len(self.gaps)
        pref = constants.K_B * self.temperature / math.pi / self.gaps ** 3

        zero_val, zero_err = self.term_integrals(np.arange(n), np.zeros(n, dtype=int))
        te0 = 0.5 * pref * zero_val[:, 0]
        tm0 = 0.5 * pref * zero_val[:, 1]
        quad_err = 0.5 * pref * (zero_err[:, 0] + zero_err[:, 1])

        nonzero = [0.0] * n
        terms = [1] * n
        small_run = [0] * n
        history = [[] for _ in range(n)]
        next_l = np.ones(n, dtype=int)
        block = np.empty(n, dtype=int)
        later = np.empty(n, dtype=int)
        for i in range(n):
            block[i], later[i] = self._block_plan(self.gaps[i])
        active = list(range(n))
        truncation = [0.0] * n

        while active:
            owners, ls = [], []
            for i in active:
                count = min(block[i], ctrl.max_terms - next_l[i] + 1)
                owners.append(np.full(count, i))
                ls.append(np.arange(next_l[i], next_l[i] + count))
            owners = np.concatenate(owners)
            ls = np.concatenate(ls)
            vals, errs = self.term_integrals(owners, ls)
            contrib = pref[owners] * (vals[:, 0] + vals[:, 1])
            contrib_err = pref[owners] * (errs[:, 0] + errs[:, 1])

            still = []
            pos = 0
            for i in active:
                count = min(block[i], ctrl.max_terms - next_l[i] + 1)
                stopped = False
                for k in range(pos, pos + count):
                    term = float(contrib[k])
                    nonzero[i] += term
                    quad_err[i] += float(contrib_err[k])
                    terms[i] += 1
                    history[i].append(term)
                    running = te0[i] + tm0[i] + nonzero[i]
                    if abs(term) <= ctrl.sum_rel_tol * abs(running):
                        small_run[i] += 1
                    else:
                        small_run[i] = 0
                    if small_run[i] >= ctrl.guard_terms:
                        truncation[i] = _tail_estimate(history[i])
                        stopped = True
                        break
                pos += count
                if stopped:
                    continue
                next_l[i] += count
                block[i] = later[i]
                if next_l[i] > ctrl.max_terms:
                    partial = _breakdown(te0[i], tm0[i], nonzero[i], terms[i], quad_err[i], math.inf)
                    raise ConvergenceError(
                        f"Matsubara sum not converged within {ctrl.max_terms} terms",
                        partial=partial, context={"gap": float(self.gaps[i])})
                still.append(i)
            active = still

        return [
            _breakdown(te0[i], tm0[i], nonzero[i], terms[i], quad_err[i], truncation[i])
            for i in range(n)
        ]


def _tail_estimate(history):
    """Geometric estimate of the discarded Matsubara tail."""
    last = abs(history[-1])
    if len(history) < 2 or history[-2] == 0:
        return last
    ratio = last / abs(history[-2])
    if ratio >= 1.0:
        return last * 10
    return last * ratio / (1.0 - ratio)


def _breakdown(te0, tm0, nonzero, terms, quad_err, truncation):
    te0, tm0, nonzero = float(te0), float(tm0), float(nonzero)
    return PressureBreakdown(
        total=te0 + tm0 + nonzero, te_zero=te0, tm_zero=tm0, nonzero_modes=nonzero,
        terms_used=int(terms), quadrature_error_estimate=float(quad_err),
        truncation_error_estimate=float(truncation))


def default_workers() -> int:
    cap = os.environ.get(WORKERS_ENV)
    if cap:
        try:
            return max(1, int(cap))
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {cap!r}") from None
    return os.cpu_count() or 1


def pressure_batch(upper: LayerStack, lower: LayerStack, gaps, temperature,
                   prescription=Prescription.DRUDE, ctrl: ConvergenceControl | None = None,
                   lower_thicknesses=None, upper_thicknesses=None,
                   workers: int | None = None) -> list[PressureBreakdown]:
    """Pressures for many gaps (and finite-layer thicknesses) of one material setup.

    ``lower_thicknesses`` / ``upper_thicknesses`` have shape ``(n_gaps, n_finite_layers)``
    and override the stacks' own thicknesses.  Work is cut into fixed chunks of
    scenes; ``workers`` threads process chunks and results are reassembled in
    input order, so output is identical for any worker count.
    """
    ctrl = ctrl or ConvergenceControl()
    prescription = Prescription.parse(prescription)
    gaps = np.atleast_1d(np.asarray(gaps, dtype=float))
    if np.any(gaps <= 0):
        raise ValueError("gaps must be > 0")
    n = gaps.size

    def thickness_table(stack, given):
        if given is None:
            return np.tile(np.asarray(stack.finite_thicknesses, dtype=float), (n, 1)).reshape(
                n, len(stack.layers) - 1)
        arr = np.asarray(given, dtype=float).reshape(n, len(stack.layers) - 1)
        if np.any(arr <= 0):
            raise ValueError("layer thicknesses must be > 0")
        return arr

    ut = thickness_table(upper, upper_thicknesses)
    lt = thickness_table(lower, lower_thicknesses)

    def work(start):
        sl = slice(start, min(start + CHUNK, n))
        return _Batch(upper, lower, gaps[sl], ut[sl], lt[sl], temperature,
                      prescription, ctrl).run()

    starts = list(range(0, n, CHUNK))
    workers = workers or default_workers()
    if workers == 1 or len(starts) == 1:
        parts = [work(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, starts))
    return [b for part in parts for b in part]


def pressure_plane_parallel(scene: CavityScene,
                            ctrl: ConvergenceControl | None = None) -> PressureBreakdown:
    """Lifshitz pressure (Pa) for one plane-parallel cavity with channel breakdown."""
    return pressure_batch(scene.stack_upper, scene.stack_lower, [scene.gap],
                          scene.temperature, scene.prescription, ctrl, workers=1)[0]


def te_zero_pressure(scene: CavityScene, ctrl: ConvergenceControl | None = None) -> float:
    """The TE l=0 channel alone, including its 1/2 weight."""
    ctrl = ctrl or ConvergenceControl()
    b = _Batch(scene.stack_upper, scene.stack_lower, np.array([scene.gap]),
               np.asarray([scene.stack_upper.finite_thicknesses], dtype=float).reshape(1, -1),
               np.asarray([scene.stack_lower.finite_thicknesses], dtype=float).reshape(1, -1),
               scene.temperature, scene.prescription, ctrl)
    val, _ = b.term_integrals(np.array([0]), np.array([0]))
    return float(0.5 * constants.K_B * scene.temperature / math.pi / scene.gap ** 3 * val[0, 0])
