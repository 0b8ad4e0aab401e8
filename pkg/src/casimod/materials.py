"""Dispersion of the media on the imaginary frequency axis.

Permittivities follow the Drude law ``eps(i xi) = 1 + wp^2 / (xi (xi + gamma))``
(plasma law when ``gamma = 0``).  The permeability of a magnetic metal is its
static value in the zero-frequency term and exactly 1 for every other
Matsubara term.

At ``xi = 0`` a conductor's permittivity diverges, so it is returned as a
:class:`StaticLimit` describing *how* it diverges instead of as a number.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import constants


class MaterialError(ValueError):
    """Invalid material parameters or an undefined evaluation."""


class Kind(str, enum.Enum):
    VACUUM = "vacuum"
    DRUDE = "drude"
    PLASMA = "plasma"
    MAGNETIC_DRUDE = "magnetic_drude"


class Prescription(str, enum.Enum):
    """Zero-frequency treatment of conductors."""

    DRUDE = "drude"
    PLASMA = "plasma"

    @classmethod
    def parse(cls, value: "str | Prescription") -> "Prescription":
        if isinstance(value, Prescription):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise MaterialError(
                f"unknown prescription {value!r}; expected 'drude' or 'plasma'"
            ) from None


@dataclass(frozen=True)
class DispersionParams:
    """Drude/Debye parameters, frequencies in rad/s."""

    plasma_frequency: float = 0.0
    relaxation_frequency: float = 0.0
    static_permeability: float = 1.0
    debye_frequency: float | None = None  # stored only; l > 0 permeability is pinned to 1

    def __post_init__(self):
        if self.plasma_frequency < 0:
            raise MaterialError("plasma_frequency must be >= 0")
        if self.relaxation_frequency < 0:
            raise MaterialError("relaxation_frequency must be >= 0")
        if self.static_permeability < 1:
            raise MaterialError("static_permeability must be >= 1")
        if self.debye_frequency is not None and self.debye_frequency <= 0:
            raise MaterialError("debye_frequency must be > 0 when given")

    @classmethod
    def from_ev(cls, plasma_ev: float, relaxation_ev: float = 0.0,
                static_permeability: float = 1.0) -> "DispersionParams":
        return cls(
            plasma_frequency=constants.ev_to_rad_per_s(plasma_ev),
            relaxation_frequency=constants.ev_to_rad_per_s(relaxation_ev),
            static_permeability=static_permeability,
        )


@dataclass(frozen=True)
class MaterialModel:
    name: str
    kind: Kind
    params: DispersionParams = DispersionParams()

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is not Kind.VACUUM and self.params.plasma_frequency <= 0:
            raise MaterialError(f"{self.name}: conductors need plasma_frequency > 0")
        if self.kind is Kind.PLASMA and self.params.relaxation_frequency != 0:
            raise MaterialError(f"{self.name}: plasma metals have no relaxation")
        if self.kind is not Kind.MAGNETIC_DRUDE and self.params.static_permeability != 1:
            raise MaterialError(f"{self.name}: only magnetic_drude media may have mu(0) != 1")

    @property
    def is_conductor(self) -> bool:
        return self.kind is not Kind.VACUUM

    @property
    def is_magnetic(self) -> bool:
        return self.kind is Kind.MAGNETIC_DRUDE and self.params.static_permeability != 1.0

    def scaled(self, plasma: float = 1.0, relaxation: float = 1.0, name: str | None = None):
        """Copy with the plasma and relaxation frequencies multiplied by the given factors."""
        p = self.params
        new = DispersionParams(
            plasma_frequency=p.plasma_frequency * plasma,
            relaxation_frequency=p.relaxation_frequency * relaxation,
            static_permeability=p.static_permeability,
            debye_frequency=p.debye_frequency,
        )
        return MaterialModel(name or self.name, self.kind, new)

    def to_record(self) -> dict:
        """Serializable form used by the CLI config and ``info`` output."""
        p = self.params
        return {
            "name": self.name,
            "kind": self.kind.value,
            "plasma_frequency_eV": constants.rad_per_s_to_ev(p.plasma_frequency),
            "relaxation_frequency_eV": constants.rad_per_s_to_ev(p.relaxation_frequency),
            "static_permeability": p.static_permeability,
        }

    @classmethod
    def from_record(cls, record: dict) -> "MaterialModel":
        kind = Kind(record.get("kind", "drude"))
        params = DispersionParams.from_ev(
            float(record.get("plasma_frequency_eV", 0.0)),
            float(record.get("relaxation_frequency_eV", 0.0)),
            float(record.get("static_permeability", 1.0)),
        )
        return cls(record["name"], kind, params)


@dataclass(frozen=True)
class StaticLimit:
    """Behaviour of eps(i xi) as xi -> 0.

    ``order`` is the power of the divergence: 0 finite (``coefficient`` is the
    value), 1 ohmic (eps ~ coefficient / xi), 2 plasma (eps ~ coefficient / xi^2).
    """

    order: int
    coefficient: float

    @property
    def tag(self) -> str:
        return {0: "finite", 1: "ohmic-divergent", 2: "plasma-divergent"}[self.order]


VACUUM = MaterialModel("vacuum", Kind.VACUUM)


def permittivity_imag_axis(model: MaterialModel, xi, prescription=Prescription.DRUDE):
    """Relative permittivity at imaginary frequency ``i xi``.

    ``xi`` may be a scalar or an array of strictly positive frequencies.  A
    scalar ``xi == 0`` returns a :class:`StaticLimit`.
    """
    prescription = Prescription.parse(prescription)
    if np.ndim(xi) == 0 and xi == 0:
        return static_permittivity(model, prescription)
    xi = np.asarray(xi, dtype=float)
    if np.any(xi <= 0):
        raise MaterialError("xi must be > 0 (use a scalar 0 for the static limit)")
    if model.kind is Kind.VACUUM:
        out = np.ones_like(xi)
    else:
        wp = model.params.plasma_frequency
        gamma = model.params.relaxation_frequency
        out = 1.0 + wp * wp / (xi * (xi + gamma))
    return out if out.ndim else float(out)


def static_permittivity(model: MaterialModel, prescription=Prescription.DRUDE) -> StaticLimit:
    """Zero-frequency limit of the permittivity under ``prescription``."""
    prescription = Prescription.parse(prescription)
    if model.kind is Kind.VACUUM:
        return StaticLimit(0, 1.0)
    wp2 = model.params.plasma_frequency ** 2
    if model.kind is Kind.PLASMA or prescription is Prescription.PLASMA:
        return StaticLimit(2, wp2)
    gamma = model.params.relaxation_frequency
    if gamma == 0:
        raise MaterialError(
            f"{model.name}: Drude static limit undefined for zero relaxation frequency"
        )
    return StaticLimit(1, wp2 / gamma)


def permeability_imag_axis(model: MaterialModel, matsubara_index):
    """Relative permeability for Matsubara index ``l`` (scalar or array).

    The static permeability applies only at ``l = 0``; every ``l > 0`` term uses 1.
    """
    index = np.asarray(matsubara_index)
    if np.any(index < 0):
        raise MaterialError("matsubara_index must be >= 0")
    mu0 = model.params.static_permeability if model.is_magnetic else 1.0
    out = np.where(index == 0, mu0, 1.0)
    return out if out.ndim else float(out)


def builtin_materials(gold_kind: Kind | str = Kind.DRUDE) -> dict[str, MaterialModel]:
    """Catalog of the shipped media: Au, Ni (mu(0) = 110) and vacuum."""
    gold_kind = Kind(gold_kind)
    gold_gamma = 0.0 if gold_kind is Kind.PLASMA else 0.035
    return {
        "Au": MaterialModel("Au", gold_kind, DispersionParams.from_ev(9.0, gold_gamma)),
        "Ni": MaterialModel(
            "Ni", Kind.MAGNETIC_DRUDE, DispersionParams.from_ev(4.89, 0.0436, 110.0)
        ),
        "vacuum": VACUUM,
    }
