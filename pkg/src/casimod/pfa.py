"""Corrugated Ni plates with a flat gold overlayer, in the proximity force approximation.

The upper plate has profile ``H1(x) = a + A1 cos(2 pi (x - L) / period)``; the
lower Ni corrugation ``H2(x) = -w - A2 (1 - cos(2 pi x / period))`` is buried
under gold filling ``H2(x) <= z <= 0``.  Locally the cavity is a Ni half-space
at distance ``H1(x)`` from a gold film of thickness ``-H2(x)`` on Ni, and the
PFA pressure is the period average of that plane-parallel pressure.

Within the PFA the period only rescales x, so every x-average is done on the
reduced angle ``theta = 2 pi x / period``.
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import constants
from .baselines import te_zero_kernel
from .lifshitz import (
    CavityScene,
    ConvergenceControl,
    ConvergenceError,
    PressureBreakdown,
    pressure_batch,
)
from .materials import Prescription

DEFAULT_X_NODES = 64
AVERAGE_PHASES = 64
X_REL_TOL = 1e-6
MAX_X_NODES = 4096
CACHE_RESOLUTION = 1e-15  # m


class PFARegimeWarning(UserWarning):
    """Amplitudes or gap are not small compared with the period."""


@dataclass(frozen=True)
class CorrugationGeometry:
    """Lengths in metres; ``lateral_shift`` L sets the phase 2 pi L / period."""

    mean_gap: float
    amplitude_upper: float
    amplitude_lower: float
    overlayer_thickness: float
    period: float
    lateral_shift: float = 0.0

    def __post_init__(self):
        problems = geometry_problems(self)
        if problems:
            raise ValueError("; ".join(problems))
        scale = max(self.mean_gap, self.amplitude_upper, self.amplitude_lower)
        if scale >= self.period / 5.0:
            warnings.warn(
                f"PFA regime questionable: max(a, A1, A2) = {scale:.3g} m is not "
                f"small compared with the period {self.period:.3g} m",
                PFARegimeWarning, stacklevel=3)

    @property
    def phase(self) -> float:
        return 2.0 * math.pi * self.lateral_shift / self.period

    def with_phase(self, phi: float) -> "CorrugationGeometry":
        return replace(self, lateral_shift=phi * self.period / (2.0 * math.pi))

    @property
    def flat(self) -> bool:
        return self.amplitude_upper == 0 and self.amplitude_lower == 0


def geometry_problems(g) -> list[str]:
    """Every violated geometric constraint (empty when valid)."""
    out = []
    if not g.mean_gap > 0:
        out.append("a must be > 0")
    if not 0 <= g.amplitude_upper:
        out.append("A1 must be >= 0")
    if not g.amplitude_upper < g.mean_gap:
        out.append("A1 must be < a")
    if not g.amplitude_lower >= 0:
        out.append("A2 must be >= 0")
    if not g.overlayer_thickness > 0:
        out.append("w must be > 0")
    if not g.period > 0:
        out.append("period must be > 0")
    return out


def profiles(geom: CorrugationGeometry, x):
    """Heights ``(H1(x), H2(x))`` of the upper plate and of the buried Ni corrugation."""
    x = np.asarray(x, dtype=float)
    k = 2.0 * math.pi / geom.period
    h1 = geom.mean_gap + geom.amplitude_upper * np.cos(k * (x - geom.lateral_shift))
    h2 = -geom.overlayer_thickness - geom.amplitude_lower * (1.0 - np.cos(k * x))
    if h1.ndim == 0:
        return float(h1), float(h2)
    return h1, h2


def _local_cavities(geom: CorrugationGeometry, phi: float, n: int):
    """Local gaps and gold thicknesses at ``n`` equispaced points of one period."""
    theta = 2.0 * math.pi * np.arange(n) / n
    gap = geom.mean_gap + geom.amplitude_upper * np.cos(theta - phi)
    gold = geom.overlayer_thickness + geom.amplitude_lower * (1.0 - np.cos(theta))
    return gap, gold


class PressureCache:
    """Memo of plane-parallel pressures keyed on (setup, gap, gold thickness).

    Gap and thickness are keyed at ``CACHE_RESOLUTION``; the stored value is
    the pressure at the first exact pair requested for that key.  Safe for
    concurrent use.
    """

    def __init__(self):
        self._store: dict = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._store)

    @staticmethod
    def context(template: CavityScene, ctrl: ConvergenceControl):
        lower = tuple(layer.material for layer in template.stack_lower.layers)
        return (template.stack_upper, lower, template.temperature,
                template.prescription, ctrl)

    @staticmethod
    def key(gap: float, gold: float):
        return (round(gap / CACHE_RESOLUTION), round(gold / CACHE_RESOLUTION))

    def lookup(self, template, ctrl, gaps, golds, workers=None) -> list[PressureBreakdown]:
        """Breakdowns for each (gap, gold) pair, evaluating the missing ones in one batch."""
        ctx = self.context(template, ctrl)
        keys = [(ctx,) + self.key(g, s) for g, s in zip(gaps, golds)]
        missing: dict = {}
        with self._lock:
            for k, g, s in zip(keys, gaps, golds):
                if k not in self._store and k not in missing:
                    missing[k] = (float(g), float(s))
        if missing:
            pairs = list(missing.values())
            extra = template.stack_lower.finite_thicknesses[1:]
            thick = [(s,) + extra for _, s in pairs]
            results = pressure_batch(
                template.stack_upper, template.stack_lower, [g for g, _ in pairs],
                template.temperature, template.prescription, ctrl,
                lower_thicknesses=thick, workers=workers)
            with self._lock:
                for k, r in zip(missing, results):
                    self._store.setdefault(k, r)
        with self._lock:
            return [self._store[k] for k in keys]


def _average(breakdowns: list[PressureBreakdown], stride: int = 1) -> PressureBreakdown:
    sub = breakdowns[::stride]
    n = len(sub)
    return PressureBreakdown(
        total=math.fsum(b.total for b in sub) / n,
        te_zero=math.fsum(b.te_zero for b in sub) / n,
        tm_zero=math.fsum(b.tm_zero for b in sub) / n,
        nonzero_modes=math.fsum(b.nonzero_modes for b in sub) / n,
        terms_used=max(b.terms_used for b in sub),
        quadrature_error_estimate=math.fsum(b.quadrature_error_estimate for b in sub) / n,
        truncation_error_estimate=math.fsum(b.truncation_error_estimate for b in sub) / n,
    )


@dataclass
class PFAResult:
    breakdown: PressureBreakdown
    x_nodes: int
    x_change: float  # relative change against the half-resolution estimate


def _pfa_many(geom, template, phases, ctrl, cache, workers) -> list[PFAResult]:
    """PFA averages for several phases, refining the x grid per phase."""
    results: list[PFAResult | None] = [None] * len(phases)
    n_nodes = 1 if geom.flat else DEFAULT_X_NODES
    pending = list(range(len(phases)))
    while pending:
        grids = [_local_cavities(geom, phases[i], n_nodes) for i in pending]
        gaps = np.concatenate([g for g, _ in grids])
        golds = np.concatenate([s for _, s in grids])
        try:
            flat = cache.lookup(template, ctrl, gaps, golds, workers)
        except ConvergenceError as exc:
            exc.context.setdefault("x_nodes", n_nodes)
            raise
        still = []
        for j, i in enumerate(pending):
            local = flat[j * n_nodes:(j + 1) * n_nodes]
            fine = _average(local)
            if n_nodes == 1:
                results[i] = PFAResult(fine, 1, 0.0)
                continue
            coarse = _average(local, stride=2)
            change = abs(fine.total - coarse.total) / max(abs(fine.total), 1e-300)
            if change < X_REL_TOL:
                results[i] = PFAResult(fine, n_nodes, change)
            else:
                still.append(i)
        pending = still
        if pending:
            n_nodes *= 2
            if n_nodes > MAX_X_NODES:
                raise ConvergenceError(
                    f"x-average not converged with {MAX_X_NODES} nodes",
                    context={"phases": [phases[i] for i in pending]})
    return results


def _check_template(template: CavityScene) -> None:
    if len(template.stack_lower.layers) < 2:
        raise ValueError("the lower stack needs a finite overlayer on a substrate")


def pfa_pressure(geom: CorrugationGeometry, scene_template: CavityScene,
                 ctrl: ConvergenceControl | None = None, cache: PressureCache | None = None,
                 workers: int | None = None) -> PressureBreakdown:
    """Period-averaged pressure (Pa) with channel breakdown.

    ``scene_template`` supplies the stacks, temperature and prescription; its
    gap and overlayer thickness are replaced by the local values.
    """
    _check_template(scene_template)
    ctrl = ctrl or ConvergenceControl()
    cache = cache if cache is not None else PressureCache()
    return _pfa_many(geom, scene_template, [geom.phase], ctrl, cache, workers)[0].breakdown


@dataclass
class ModulationCurve:
    """Phase modulation dF(phi) = F(phi) - <F>_phi and its TE l=0 part."""

    phases: np.ndarray
    values: np.ndarray
    mean_pressure: float
    prescription: Prescription
    breakdown_te0: np.ndarray
    totals: np.ndarray
    breakdowns: list = field(default_factory=list, repr=False)
    x_nodes: int = 0
    error_estimate: float = 0.0

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0


def modulation_curve(geom: CorrugationGeometry, scene_template: CavityScene, phase_grid,
                     ctrl: ConvergenceControl | None = None, cache: PressureCache | None = None,
                     workers: int | None = None) -> ModulationCurve:
    """Modulation at ``phase_grid`` (rad, each in [0, 2 pi)).

    The phase average is taken over a fixed uniform grid of ``AVERAGE_PHASES``
    points, independent of the requested phases.
    """
    _check_template(scene_template)
    phases = np.atleast_1d(np.asarray(phase_grid, dtype=float))
    if phases.size == 0:
        raise ValueError("phase_grid must not be empty")
    if np.any((phases < 0) | (phases >= 2.0 * math.pi)):
        raise ValueError("phases must lie in [0, 2 pi)")
    ctrl = ctrl or ConvergenceControl()
    cache = cache if cache is not None else PressureCache()

    avg_grid = 2.0 * math.pi * np.arange(AVERAGE_PHASES) / AVERAGE_PHASES
    all_phases = list(avg_grid) + list(phases)
    res = _pfa_many(geom, scene_template, all_phases, ctrl, cache, workers)
    avg_part, req_part = res[:AVERAGE_PHASES], res[AVERAGE_PHASES:]

    mean_total = math.fsum(r.breakdown.total for r in avg_part) / AVERAGE_PHASES
    mean_te0 = math.fsum(r.breakdown.te_zero for r in avg_part) / AVERAGE_PHASES
    totals = np.array([r.breakdown.total for r in req_part])
    te0 = np.array([r.breakdown.te_zero for r in req_part])
    return ModulationCurve(
        phases=phases,
        values=totals - mean_total,
        mean_pressure=mean_total,
        prescription=scene_template.prescription,
        breakdown_te0=te0 - mean_te0,
        totals=totals,
        breakdowns=[r.breakdown for r in req_part],
        x_nodes=max(r.x_nodes for r in res),
        error_estimate=max(r.breakdown.error_estimate for r in res),
    )


def mean_inverse_cube_gap(geom: CorrugationGeometry) -> float:
    """Period average of (H1 - H2)^-3, in closed form.

    H1 - H2 = C + R cos(theta - psi) with C = a + w + A2 and
    R^2 = A1^2 + A2^2 - 2 A1 A2 cos(phi); the average of (C + R cos)^-3 is
    (2 C^2 + R^2) / (2 (C^2 - R^2)^(5/2)).
    """
    c = geom.mean_gap + geom.overlayer_thickness + geom.amplitude_lower
    a1, a2 = geom.amplitude_upper, geom.amplitude_lower
    r2 = max(a1 * a1 + a2 * a2 - 2.0 * a1 * a2 * math.cos(geom.phase), 0.0)
    return (2.0 * c * c + r2) / (2.0 * (c * c - r2) ** 2.5)


def te_zero_pfa_closed_form(geom: CorrugationGeometry, mu0: float, temperature: float) -> float:
    """TE l=0 PFA pressure under the Drude prescription (Pa).

    (k_B T / 2 pi) <(H1 - H2)^-3> Li_3(((mu0 - 1)/(mu0 + 1))^2) / 4: linear in T
    and fixed by the static permeability of Ni alone.
    """
    if not mu0 > 1:
        raise ValueError("static permeability must be > 1")
    if not temperature > 0:
        raise ValueError("temperature must be > 0")
    return (constants.K_B * temperature / (2.0 * math.pi)
            * mean_inverse_cube_gap(geom) * te_zero_kernel(mu0))
