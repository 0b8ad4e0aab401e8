"""Reflection coefficients of layered magnetodielectric slabs at imaginary frequency.

All quantities are real on the imaginary axis, so everything here is plain
float arithmetic.  The static (``xi = 0``) terms are evaluated from the
analytic limits carried by :class:`~casimod.materials.StaticLimit`; nothing is
ever evaluated at a "small" frequency.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import constants
from .materials import (
    VACUUM,
    MaterialModel,
    Prescription,
    StaticLimit,
    permeability_imag_axis,
    permittivity_imag_axis,
)

TE = "TE"
TM = "TM"


class StackError(ValueError):
    pass


@dataclass(frozen=True)
class Layer:
    """A slab of ``material``; ``thickness=None`` marks the semi-infinite substrate."""

    material: MaterialModel
    thickness: float | None = None

    def __post_init__(self):
        if self.thickness is not None and not self.thickness > 0:
            raise StackError(f"layer of {self.material.name} must have thickness > 0")

    @property
    def semi_infinite(self) -> bool:
        return self.thickness is None


@dataclass(frozen=True)
class LayerStack:
    """Layers ordered from the vacuum gap inwards; the last one is semi-infinite."""

    layers: tuple[Layer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise StackError("a stack needs at least one layer")
        if not layers[-1].semi_infinite:
            raise StackError("the last layer of a stack must be semi-infinite")
        if any(layer.semi_infinite for layer in layers[:-1]):
            raise StackError("only the last layer of a stack may be semi-infinite")

    @classmethod
    def bulk(cls, material: MaterialModel) -> "LayerStack":
        return cls((Layer(material),))

    @classmethod
    def coated(cls, coating: MaterialModel, thickness: float,
               substrate: MaterialModel) -> "LayerStack":
        return cls((Layer(coating, thickness), Layer(substrate)))

    @property
    def finite_thicknesses(self) -> tuple[float, ...]:
        return tuple(layer.thickness for layer in self.layers[:-1])

    def with_thicknesses(self, thicknesses: Sequence[float]) -> "LayerStack":
        finite = self.layers[:-1]
        if len(thicknesses) != len(finite):
            raise StackError("one thickness per finite layer expected")
        new = [Layer(layer.material, float(t)) for layer, t in zip(finite, thicknesses)]
        return LayerStack(tuple(new) + (self.layers[-1],))


@dataclass(frozen=True)
class TransverseMode:
    """In-plane wavenumber ``kperp`` (1/m, scalar or array) at frequency ``i xi``.

    ``xi`` is either the scalar 0 (static term, ``matsubara_index`` 0) or
    strictly positive, possibly an array broadcastable against ``kperp``.
    """

    kperp: object
    xi: object
    matsubara_index: object

    @property
    def static(self) -> bool:
        return np.ndim(self.xi) == 0 and self.xi == 0


def _medium(material: MaterialModel, mode: TransverseMode, prescription):
    """Permittivity, permeability and wavenumber of one medium for ``mode``."""
    kperp = np.asarray(mode.kperp, dtype=float)
    mu = permeability_imag_axis(material, mode.matsubara_index)
    if mode.static:
        eps = permittivity_imag_axis(material, 0.0, prescription)
        if eps.order == 2:
            # eps mu xi^2 / c^2 -> mu wp^2 / c^2
            k = np.sqrt(mu * eps.coefficient / constants.C ** 2 + kperp * kperp)
        else:
            k = kperp
        return eps, mu, k
    xi = np.asarray(mode.xi, dtype=float)
    eps = permittivity_imag_axis(material, xi, prescription)
    k = np.sqrt(eps * mu * (xi / constants.C) ** 2 + kperp * kperp)
    return eps, mu, k


def medium_wavenumber(material: MaterialModel, mode: TransverseMode,
                      prescription=Prescription.DRUDE):
    """k = sqrt(eps mu xi^2 / c^2 + kperp^2), with analytic xi = 0 limits."""
    return _medium(material, mode, Prescription.parse(prescription))[2]


def _ratio_te(a, b):
    _, mu_a, k_a = a
    _, mu_b, k_b = b
    num = mu_b * k_a - mu_a * k_b
    den = mu_b * k_a + mu_a * k_b
    return num / den


def _ratio_tm(a, b):
    eps_a, _, k_a = a
    eps_b, _, k_b = b
    if isinstance(eps_a, StaticLimit):
        if eps_a.order != eps_b.order:
            # the more strongly divergent permittivity dominates
            sign = 1.0 if eps_b.order > eps_a.order else -1.0
            return np.full(np.broadcast(k_a, k_b).shape, sign)
        eps_a, eps_b = eps_a.coefficient, eps_b.coefficient
    num = eps_b * k_a - eps_a * k_b
    den = eps_b * k_a + eps_a * k_b
    return num / den


def fresnel_te(a: MaterialModel, b: MaterialModel, mode: TransverseMode,
               prescription=Prescription.DRUDE):
    """TE reflection coefficient of the planar a|b interface, seen from a."""
    p = Prescription.parse(prescription)
    return _ratio_te(_medium(a, mode, p), _medium(b, mode, p))


def fresnel_tm(a: MaterialModel, b: MaterialModel, mode: TransverseMode,
               prescription=Prescription.DRUDE):
    """TM reflection coefficient of the planar a|b interface, seen from a."""
    p = Prescription.parse(prescription)
    return _ratio_tm(_medium(a, mode, p), _medium(b, mode, p))


def stack_reflection_pair(stack: LayerStack, mode: TransverseMode,
                          prescription=Prescription.DRUDE, thicknesses=None):
    """(R_TE, R_TM) of ``stack`` seen from the vacuum gap.

    ``thicknesses`` optionally overrides the finite layer thicknesses; each
    entry may be an array broadcastable against ``mode.kperp``.
    """
    p = Prescription.parse(prescription)
    layers = stack.layers
    if thicknesses is None:
        thicknesses = stack.finite_thicknesses
    elif len(thicknesses) != len(layers) - 1:
        raise StackError("one thickness per finite layer expected")

    media = [_medium(layer.material, mode, p) for layer in layers]
    vac = _medium(VACUUM, mode, p)
    above = [vac] + media[:-1]

    r_te = _ratio_te(above[-1], media[-1])
    r_tm = _ratio_tm(above[-1], media[-1])
    for j in range(len(layers) - 2, -1, -1):
        k_layer = media[j][2]
        prop = np.exp(-2.0 * np.asarray(thicknesses[j], dtype=float) * k_layer)
        top_te = _ratio_te(above[j], media[j])
        top_tm = _ratio_tm(above[j], media[j])
        r_te = (top_te + prop * r_te) / (1.0 + prop * top_te * r_te)
        r_tm = (top_tm + prop * r_tm) / (1.0 + prop * top_tm * r_tm)
    return r_te, r_tm


def stack_reflection(stack: LayerStack, mode: TransverseMode, pol: str,
                     prescription=Prescription.DRUDE, thicknesses=None):
    """Reflection coefficient of ``stack`` for polarization ``pol`` ('TE' or 'TM')."""
    pol = pol.upper()
    if pol not in (TE, TM):
        raise ValueError(f"polarization must be 'TE' or 'TM', got {pol!r}")
    r_te, r_tm = stack_reflection_pair(stack, mode, prescription, thicknesses)
    return r_te if pol == TE else r_tm
