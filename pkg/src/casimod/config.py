"""Scenario configuration: a strict TOML document with unit-suffixed keys.

Every key is optional; an empty document is the default scenario (a = 140 nm,
A1 = 85 nm, A2 = 100 nm, w = 70 nm, T = 300 K, Ni / Au / Ni, Drude).

Example::

    mean_gap_nm = 140
    overlayer_thickness_nm = 70
    temperature_K = 300
    prescription = "both"        # drude | plasma | both
    phases = 64                  # or phases_deg = [0, 45, 90, 180]
    csv_path = "modulation.csv"
    svg_path = "modulation.svg"

    [materials.Au_soft]          # inline material, referenced by name
    kind = "drude"
    plasma_frequency_eV = 8.5
    relaxation_frequency_eV = 0.04
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields, replace

import tomli

from .lifshitz import CavityScene, ConvergenceControl
from .materials import Kind, MaterialError, MaterialModel, Prescription, builtin_materials
from .pfa import CorrugationGeometry, geometry_problems
from .reflection import LayerStack

NM = 1e-9
PRESCRIPTIONS = ("drude", "plasma", "both")
MATERIAL_KEYS = {"kind", "plasma_frequency_eV", "relaxation_frequency_eV", "static_permeability"}


class ConfigError(ValueError):
    """Malformed or invalid scenario; ``problems`` lists every violation."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class ScenarioConfig:
    mean_gap_nm: float = 140.0
    amplitude_upper_nm: float = 85.0
    amplitude_lower_nm: float = 100.0
    overlayer_thickness_nm: float = 70.0
    period_nm: float = 1000.0
    temperature_K: float = 300.0
    prescription: str = "drude"
    phases: int = 64
    phases_deg: tuple[float, ...] | None = None
    upper_material: str = "Ni"
    overlayer_material: str = "Au"
    substrate_material: str = "Ni"
    quad_rel_tol: float = ConvergenceControl.quad_rel_tol
    sum_rel_tol: float = ConvergenceControl.sum_rel_tol
    max_terms: int = ConvergenceControl.max_terms
    max_quad_refinements: int = ConvergenceControl.max_quad_refinements
    csv_path: str | None = None
    svg_path: str | None = None
    breakdown: bool = False
    materials: tuple[tuple[str, tuple[tuple[str, object], ...]], ...] = ()

    # -- derived objects -------------------------------------------------
    def catalog(self) -> dict[str, MaterialModel]:
        cat = builtin_materials()
        for name, items in self.materials:
            cat[name] = MaterialModel.from_record({"name": name, **dict(items)})
        return cat

    def geometry(self) -> CorrugationGeometry:
        return CorrugationGeometry(
            self.mean_gap_nm * NM, self.amplitude_upper_nm * NM, self.amplitude_lower_nm * NM,
            self.overlayer_thickness_nm * NM, self.period_nm * NM)

    def control(self) -> ConvergenceControl:
        return ConvergenceControl(
            quad_rel_tol=self.quad_rel_tol, sum_rel_tol=self.sum_rel_tol,
            max_terms=self.max_terms, max_quad_refinements=self.max_quad_refinements)

    def prescriptions(self) -> list[Prescription]:
        if self.prescription == "both":
            return [Prescription.DRUDE, Prescription.PLASMA]
        return [Prescription(self.prescription)]

    def template(self, prescription: Prescription) -> CavityScene:
        cat = self.catalog()
        upper = LayerStack.bulk(cat[self.upper_material])
        lower = LayerStack.coated(cat[self.overlayer_material], self.overlayer_thickness_nm * NM,
                                  cat[self.substrate_material])
        return CavityScene(upper, lower, self.mean_gap_nm * NM, self.temperature_K, prescription)

    def phase_grid(self) -> list[float]:
        """Requested phases in radians."""
        if self.phases_deg is not None:
            return [math.radians(p) for p in self.phases_deg]
        return [2.0 * math.pi * j / self.phases for j in range(self.phases)]

    def canonical(self) -> dict:
        """Physics-relevant content (output paths excluded), for hashing."""
        out = asdict(self)
        for key in ("csv_path", "svg_path", "breakdown"):
            out.pop(key)
        out["materials"] = {name: dict(items) for name, items in self.materials}
        out["phases_deg"] = list(self.phases_deg) if self.phases_deg is not None else None
        return out

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def with_value(self, key: str, value) -> "ScenarioConfig":
        """Copy with one numeric key replaced, re-validated."""
        if key not in NUMERIC_KEYS:
            raise ConfigError(f"cannot vary {key!r}; numeric keys: {', '.join(sorted(NUMERIC_KEYS))}")
        kind = NUMERIC_KEYS[key]
        cfg = replace(self, **{key: kind(value)})
        validate(cfg)
        return cfg


_FIELDS = {f.name: f for f in fields(ScenarioConfig)}
NUMERIC_KEYS = {
    "mean_gap_nm": float, "amplitude_upper_nm": float, "amplitude_lower_nm": float,
    "overlayer_thickness_nm": float, "period_nm": float, "temperature_K": float,
    "quad_rel_tol": float, "sum_rel_tol": float, "phases": int, "max_terms": int,
    "max_quad_refinements": int,
}


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document.  Raises :class:`ConfigError`."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None

    problems = []
    values: dict = {}
    for key, value in doc.items():
        if key == "materials":
            if not isinstance(value, dict):
                problems.append("materials: expected tables [materials.<name>]")
                continue
            mats = []
            for name, body in value.items():
                if not isinstance(body, dict):
                    problems.append(f"materials.{name}: expected a table")
                    continue
                unknown = set(body) - MATERIAL_KEYS
                if unknown:
                    problems.append(f"materials.{name}: unknown keys {sorted(unknown)}")
                mats.append((name, tuple(sorted(body.items()))))
            values["materials"] = tuple(mats)
        elif key not in _FIELDS:
            problems.append(f"{key}: unknown key")
        elif key in NUMERIC_KEYS:
            if not _is_number(value) or (NUMERIC_KEYS[key] is int and not isinstance(value, int)):
                problems.append(f"{key}: expected {NUMERIC_KEYS[key].__name__}, got {value!r}")
            else:
                values[key] = NUMERIC_KEYS[key](value)
        elif key == "phases_deg":
            if not isinstance(value, list) or not value or not all(_is_number(v) for v in value):
                problems.append("phases_deg: expected a non-empty list of numbers")
            else:
                values[key] = tuple(float(v) for v in value)
        elif key == "breakdown":
            if not isinstance(value, bool):
                problems.append("breakdown: expected true or false")
            else:
                values[key] = value
        else:
            if not isinstance(value, str):
                problems.append(f"{key}: expected a string, got {value!r}")
            else:
                values[key] = value.strip().lower() if key == "prescription" else value
    if problems:
        raise ConfigError(problems)
    cfg = ScenarioConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: ScenarioConfig) -> None:
    """Raise :class:`ConfigError` listing every violated constraint."""
    problems = []
    for key in ("mean_gap_nm", "overlayer_thickness_nm", "period_nm", "temperature_K"):
        if not getattr(cfg, key) > 0:
            problems.append(f"{key} must be > 0")
    geo = _GeometryView(cfg.mean_gap_nm, cfg.amplitude_upper_nm, cfg.amplitude_lower_nm,
                        cfg.overlayer_thickness_nm, cfg.period_nm)
    for p in geometry_problems(geo):
        if p not in ("a must be > 0", "w must be > 0", "period must be > 0"):
            problems.append(p)
    if cfg.prescription not in PRESCRIPTIONS:
        problems.append(f"prescription must be one of {PRESCRIPTIONS}, got {cfg.prescription!r}")
    if cfg.phases_deg is None:
        if cfg.phases < 1:
            problems.append("phases must be >= 1")
    elif any(not 0 <= p < 360 for p in cfg.phases_deg):
        problems.append("phases_deg values must lie in [0, 360)")
    for key in ("quad_rel_tol", "sum_rel_tol"):
        if not getattr(cfg, key) > 0:
            problems.append(f"{key} must be > 0")
    for key in ("max_terms", "max_quad_refinements"):
        if getattr(cfg, key) < 1:
            problems.append(f"{key} must be >= 1")
    try:
        cat = cfg.catalog()
    except (MaterialError, ValueError, KeyError) as exc:
        problems.append(f"materials: {exc}")
        cat = builtin_materials()
    for key in ("upper_material", "overlayer_material", "substrate_material"):
        name = getattr(cfg, key)
        if name not in cat:
            problems.append(f"{key}: unknown material {name!r} (known: {', '.join(sorted(cat))})")
        elif cat[name].kind is Kind.VACUUM and key != "substrate_material":
            problems.append(f"{key}: must be a conductor")
    if problems:
        raise ConfigError(problems)


@dataclass(frozen=True)
class _GeometryView:
    mean_gap: float
    amplitude_upper: float
    amplitude_lower: float
    overlayer_thickness: float
    period: float


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
