"""Release-gate checks: analytic oracles and properties of the modulation curve.

Each check returns a :class:`CheckResult`; ``casimod verify`` and the test
suite both run them.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from . import constants
from .baselines import ideal_pressure, ideal_thermal_tail
from .config import ScenarioConfig
from .lifshitz import CavityScene, ConvergenceControl, pressure_batch, pressure_plane_parallel
from .materials import DispersionParams, Kind, MaterialModel, Prescription, builtin_materials
from .pfa import (
    CorrugationGeometry,
    PressureCache,
    modulation_curve,
    pfa_pressure,
    te_zero_pfa_closed_form,
)
from .reflection import LayerStack
from .runner import format_csv, run_scenario

NM = 1e-9
# pi^2 hbar c / (240 d^4) at d = 1 um with CODATA 2018 constants
IDEAL_PRESSURE_1UM = 1.3001257732443655e-3


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    measured: str
    expected: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.number:2d}. {self.name}: measured {self.measured}; "
                f"expected {self.expected} ({self.seconds:.1f} s)")


class AcceptanceSuite:
    """Runs the acceptance criteria, sharing the expensive default-scenario curves."""

    phases = 2.0 * math.pi * np.arange(64) / 64

    def __init__(self, workers: int | None = None):
        self.workers = workers
        self.ctrl = ConvergenceControl()
        self._curves: dict = {}
        self.catalog = builtin_materials()

    # -- shared scenarios --------------------------------------------------
    def geometry(self, period=1000 * NM) -> CorrugationGeometry:
        return CorrugationGeometry(140 * NM, 85 * NM, 100 * NM, 70 * NM, period)

    def template(self, prescription="drude", temperature=300.0, gold=None) -> CavityScene:
        gold = gold or self.catalog["Au"]
        ni = self.catalog["Ni"]
        return CavityScene(LayerStack.bulk(ni), LayerStack.coated(gold, 70 * NM, ni),
                           140 * NM, temperature, prescription)

    def curve(self, key="drude", prescription="drude", temperature=300.0, gold=None,
              period=1000 * NM):
        if key not in self._curves:
            self._curves[key] = modulation_curve(
                self.geometry(period), self.template(prescription, temperature, gold),
                self.phases, self.ctrl, PressureCache(), self.workers)
        return self._curves[key]

    # -- criteria -----------------------------------------------------------
    def check_ideal_plates(self):
        au = self.catalog["Au"]
        mirror = MaterialModel("Au x1000", Kind.PLASMA,
                               DispersionParams(plasma_frequency=1e3 * au.params.plasma_frequency))
        scene = CavityScene(LayerStack.bulk(mirror), LayerStack.bulk(mirror), 1e-6, 1.0, "plasma")
        t0 = time.perf_counter()
        p = pressure_plane_parallel(scene, self.ctrl).total
        dt = time.perf_counter() - t0
        dev_formula = abs(p / ideal_pressure(1e-6) - 1)
        dev_frozen = abs(p / IDEAL_PRESSURE_1UM - 1)
        ok = dev_formula <= 0.01 and dev_frozen <= 0.01 and dt < 10
        return ok, f"{p * 1e3:.5f} mPa (dev {max(dev_formula, dev_frozen):.2e}, {dt:.2f} s)", \
            "1.300 mPa within 1%, < 10 s"

    def check_drude_tail(self):
        au = self.catalog["Au"]
        scene = CavityScene(LayerStack.bulk(au), LayerStack.bulk(au), 6e-6, 300.0, "drude")
        t0 = time.perf_counter()
        p = pressure_plane_parallel(scene, self.ctrl).total
        dt = time.perf_counter() - t0
        target = 0.5 * ideal_thermal_tail(6e-6, 300.0)
        dev = abs(p / target - 1)
        return dev <= 0.03 and dt < 30, \
            f"{p:.4e} Pa vs {target:.4e} Pa (dev {dev:.2%}, {dt:.2f} s)", \
            "1/2 k_B T zeta(3)/(4 pi d^3) within 3%, < 30 s"

    def check_te0_closed_form(self):
        t0 = time.perf_counter()
        worst = 0.0
        mu0 = self.catalog["Ni"].params.static_permeability
        tpl = self.template()
        for a in (120, 140, 160):
            for w in (50, 70, 90):
                g = CorrugationGeometry(a * NM, 85 * NM, 100 * NM, w * NM, 1000 * NM).with_phase(
                    math.pi / 3)
                te0 = pfa_pressure(g, tpl, self.ctrl, PressureCache(), self.workers).te_zero
                ref = te_zero_pfa_closed_form(g, mu0, 300.0)
                worst = max(worst, abs(te0 / ref - 1))
        dt = time.perf_counter() - t0
        return worst <= 1e-8 and dt < 60, f"max rel dev {worst:.2e} ({dt:.1f} s)", \
            "<= 1e-8 on 3x3 (a, w) grid, < 60 s"

    def check_te0_dominance(self):
        c = self.curve()
        dev = float(np.max(np.abs(c.values - c.breakdown_te0)))
        return dev <= 0.05 * c.peak, f"{dev / c.peak:.2%} of peak", "<= 5% of peak"

    def check_discrimination(self):
        ratio = self.curve("plasma", "plasma").peak / self.curve().peak
        return ratio <= 0.05, f"plasma/Drude peak = {ratio:.4f}", "<= 0.05"

    def check_magnitude(self):
        peak = self.curve().peak * 1e3
        return 0.1 <= peak <= 100, f"{peak:.3f} mPa", "in [0.1, 100] mPa"

    def check_symmetry_mean(self):
        c = self.curve()
        n = len(c.values)
        mirror = c.values[(-np.arange(n)) % n]
        asym = float(np.max(np.abs(c.values - mirror)))
        mean = abs(float(np.mean(c.values)))
        ok = asym <= 1e-3 * c.peak and mean <= 1e-3 * c.peak
        return ok, f"asymmetry {asym / c.peak:.1e}, mean {mean / c.peak:.1e} of peak", \
            "both <= 1e-3 of peak"

    def check_period_invariance(self):
        c1 = self.curve()
        c3 = self.curve("period3", period=3000 * NM)
        diff = float(np.max(np.abs(c1.values - c3.values)))
        tol = max(c1.error_estimate, c3.error_estimate)
        return diff <= tol, f"max diff {diff:.2e} Pa", f"<= quadrature error {tol:.2e} Pa"

    def check_gold_blindness(self):
        base = self.curve()
        au = self.catalog["Au"]
        changes = {}
        for tag, kw in (("wp+10%", {"plasma": 1.1}), ("wp-10%", {"plasma": 0.9}),
                        ("gamma+10%", {"relaxation": 1.1}), ("gamma-10%", {"relaxation": 0.9})):
            c = self.curve("gold " + tag, gold=au.scaled(**kw))
            changes[tag] = float(np.max(np.abs(c.values - base.values))) / base.peak
        worst = max(changes.values())
        detail = ", ".join(f"{k} {v:.2%}" for k, v in changes.items())
        return worst < 0.01, f"max change {worst:.2%} of peak ({detail})", "< 1% of peak"

    def check_temperature_linearity(self):
        ratio = self.curve("T150", temperature=150.0).peak / self.curve().peak
        dev = abs(ratio / 0.5 - 1)
        return dev <= 0.01, f"peak(150 K)/peak(300 K) = {ratio:.4f} (dev {dev:.2%})", \
            "0.5 within 1%"

    def check_stability(self):
        ctrl, fine = self.ctrl, self.ctrl.halved()
        worst = 0.0
        ni, au = self.catalog["Ni"], self.catalog["Au"]
        upper, lower = LayerStack.bulk(ni), LayerStack.coated(au, 70 * NM, ni)
        gaps = np.array([55.0, 140.0, 225.0]) * NM
        golds = np.array([[270.0], [70.0], [170.0]]) * NM
        pairs = []
        for p in ("drude", "plasma"):
            a = pressure_batch(upper, lower, gaps, 300.0, p, ctrl, golds, workers=self.workers)
            b = pressure_batch(upper, lower, gaps, 300.0, p, fine, golds, workers=self.workers)
            pairs += list(zip(a, b))
        geom, tpl = self.geometry(), self.template()
        for phi in (0.0, math.pi / 2, math.pi):
            g = geom.with_phase(phi)
            pairs.append((pfa_pressure(g, tpl, ctrl, PressureCache(), self.workers),
                          pfa_pressure(g, tpl, fine, PressureCache(), self.workers)))
        ok = True
        for old, new in pairs:
            for ch in ("total", "te_zero", "tm_zero", "nonzero_modes"):
                v0, v1 = getattr(old, ch), getattr(new, ch)
                bound = old.error_estimate + 1e-15 * abs(v0)
                change = abs(v1 - v0)
                worst = max(worst, change / bound if bound else 0.0)
                ok &= change <= bound
        return ok, f"max change / previous error estimate = {worst:.3f}", "< 1 for every pressure"

    def check_determinism(self):
        cfg = ScenarioConfig()
        one = format_csv(run_scenario(cfg, workers=1), cfg)
        many = format_csv(run_scenario(cfg, workers=4), cfg)
        same = one.encode() == many.encode()
        return same, "byte-identical" if same else "CSV differs", "byte-identical CSV (1 vs 4 workers)"

    CHECKS = (
        (1, "Ideal-plate recovery", "check_ideal_plates"),
        (2, "Classical Drude tail", "check_drude_tail"),
        (3, "TE0 closed-form oracle", "check_te0_closed_form"),
        (4, "TE0 dominance (Drude)", "check_te0_dominance"),
        (5, "Prescription discrimination", "check_discrimination"),
        (6, "Magnitude sanity", "check_magnitude"),
        (7, "Symmetry and mean", "check_symmetry_mean"),
        (8, "Period invariance", "check_period_invariance"),
        (9, "Gold-blindness", "check_gold_blindness"),
        (10, "Temperature linearity", "check_temperature_linearity"),
        (11, "Numerical stability", "check_stability"),
        (12, "Determinism", "check_determinism"),
    )

    def run_one(self, number: int) -> CheckResult:
        for num, name, method in self.CHECKS:
            if num == number:
                t0 = time.perf_counter()
                passed, measured, expected = getattr(self, method)()
                return CheckResult(num, name, bool(passed), measured, expected,
                                   time.perf_counter() - t0)
        raise KeyError(number)

    def run(self, numbers=None, echo=None) -> list[CheckResult]:
        out = []
        for num, _, _ in self.CHECKS:
            if numbers is None or num in numbers:
                res = self.run_one(num)
                if echo:
                    echo(res.line())
                out.append(res)
        return out
