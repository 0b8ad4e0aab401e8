"""Scenario execution and CSV emission."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__, constants
from .config import ScenarioConfig
from .lifshitz import ConvergenceError
from .materials import Prescription
from .pfa import ModulationCurve, PressureCache, modulation_curve, pfa_pressure

BASE_COLUMNS = ["phi_rad", "F_total_Pa", "dF_Pa", "dF_TE0_Pa"]
BREAKDOWN_COLUMNS = ["F_TE0_Pa", "F_TM0_Pa", "F_nonzero_Pa"]


@dataclass
class RunRecord:
    config_hash: str
    tool_version: str
    columns: list[str]
    rows: list[tuple[float, ...]]
    curves: dict = field(default_factory=dict, repr=False)
    diagnostics: dict = field(default_factory=dict)
    failed: bool = False

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def summary(self) -> dict:
        out = {"config_sha256": self.config_hash}
        for p, curve in self.curves.items():
            out[f"{p}_peak_dF_Pa"] = curve.peak
            out[f"{p}_mean_F_Pa"] = curve.mean_pressure
        if "drude" in self.curves and "plasma" in self.curves:
            out["plasma_to_drude_peak_ratio"] = self.curves["plasma"].peak / self.curves["drude"].peak
        return out


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def run_scenario(cfg: ScenarioConfig, workers: int | None = None,
                 cache: PressureCache | None = None) -> RunRecord:
    """Modulation curve(s) for ``cfg``; rows follow the requested phase grid.

    A convergence failure falls back to phase-by-phase evaluation so that the
    record still carries every row that could be computed (failed entries are
    NaN and ``failed`` is set).
    """
    geom = cfg.geometry()
    ctrl = cfg.control()
    phases = cfg.phase_grid()
    cache = cache if cache is not None else PressureCache()
    curves: dict[str, ModulationCurve] = {}
    diagnostics: dict = {"errors": []}
    failed = False
    per_phase: dict[str, list] = {}

    for p in cfg.prescriptions():
        template = cfg.template(p)
        try:
            curves[p.value] = modulation_curve(geom, template, phases, ctrl, cache, workers)
        except ConvergenceError as exc:
            failed = True
            diagnostics["errors"].append({"prescription": p.value, "message": str(exc),
                                          **{k: v for k, v in exc.context.items()}})
            per_phase[p.value] = _phase_by_phase(geom, template, phases, ctrl, cache, workers,
                                                 diagnostics)

    main = cfg.prescriptions()[0].value
    columns = list(BASE_COLUMNS)
    if cfg.breakdown:
        columns += BREAKDOWN_COLUMNS
    if "plasma" in curves or "plasma" in per_phase:
        if main != "plasma":
            columns.append("dF_plasma_Pa")

    def series(name):
        if name in curves:
            c = curves[name]
            return (c.totals, c.values, c.breakdown_te0,
                    [(b.te_zero, b.tm_zero, b.nonzero_modes) for b in c.breakdowns])
        totals, chans = per_phase[name]
        nan = np.full(len(phases), math.nan)
        return totals, nan, nan, chans

    totals, dF, dTE0, chans = series(main)
    rows = []
    for j, phi in enumerate(phases):
        row = [phi, totals[j], dF[j], dTE0[j]]
        if cfg.breakdown:
            row += list(chans[j])
        if "dF_plasma_Pa" in columns:
            row.append(series("plasma")[1][j])
        rows.append(tuple(float(v) for v in row))

    for name, c in curves.items():
        diagnostics[name] = {"x_nodes": c.x_nodes, "error_estimate_Pa": c.error_estimate,
                             "max_terms": max(b.terms_used for b in c.breakdowns)}
    diagnostics["cache_entries"] = len(cache)
    return RunRecord(cfg.digest(), __version__, columns, rows, curves, diagnostics, failed)


def _phase_by_phase(geom, template, phases, ctrl, cache, workers, diagnostics):
    totals, chans = [], []
    for phi in phases:
        try:
            b = pfa_pressure(geom.with_phase(phi), template, ctrl, cache, workers)
            totals.append(b.total)
            chans.append((b.te_zero, b.tm_zero, b.nonzero_modes))
        except ConvergenceError as exc:
            diagnostics["errors"].append({"phi_rad": phi, "message": str(exc)})
            totals.append(math.nan)
            chans.append((math.nan,) * 3)
    return totals, chans


def format_csv(record: RunRecord, cfg: ScenarioConfig | None = None) -> str:
    out = io.StringIO()
    out.write(f"# casimod {record.tool_version}\n")
    out.write(f"# config_sha256 {record.config_hash}\n")
    out.write(f"# constants {constants.CODATA_VERSION}\n")
    if cfg is not None:
        out.write(f"# prescription {cfg.prescription}\n")
    if record.failed:
        out.write("# status PARTIAL (convergence failure)\n")
    out.write(",".join(record.columns) + "\n")
    for row in record.rows:
        out.write(",".join(_fmt(v) for v in row) + "\n")
    return out.getvalue()


def write_csv(record: RunRecord, path, cfg: ScenarioConfig | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(record, cfg))


def read_csv(path_or_text) -> dict[str, np.ndarray]:
    """Columns of an emitted CSV (comment lines skipped)."""
    text = str(path_or_text)
    if "\n" not in text:
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    data = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    arr = np.array(data, dtype=float).reshape(len(data), len(header))
    return {name: arr[:, i] for i, name in enumerate(header)}
