import math
import warnings
from types import SimpleNamespace

import numpy as np
import pytest
from scipy import integrate

from casimod import constants
from casimod.baselines import polylog3
from casimod.lifshitz import CavityScene, pressure_plane_parallel
from casimod.pfa import (
    CorrugationGeometry,
    PFARegimeWarning,
    PressureCache,
    geometry_problems,
    mean_inverse_cube_gap,
    modulation_curve,
    pfa_pressure,
    profiles,
    te_zero_pfa_closed_form,
)
from casimod.reflection import LayerStack

NM = 1e-9
KERNEL_110 = polylog3((109 / 111) ** 2) / 4


def default_geometry(period=1000 * NM, **kw):
    args = dict(mean_gap=140 * NM, amplitude_upper=85 * NM, amplitude_lower=100 * NM,
                overlayer_thickness=70 * NM, period=period)
    args.update(kw)
    return CorrugationGeometry(**args)


def template(catalog, prescription="drude", temperature=300.0):
    return CavityScene(LayerStack.bulk(catalog["Ni"]),
                       LayerStack.coated(catalog["Au"], 70 * NM, catalog["Ni"]),
                       140 * NM, temperature, prescription)


def test_profiles():
    g = default_geometry()
    h1, h2 = profiles(g, 0.0)
    assert h1 == pytest.approx(225 * NM) and h2 == pytest.approx(-70 * NM)
    h1, h2 = profiles(g, g.period / 2)
    assert h1 == pytest.approx(55 * NM) and h2 == pytest.approx(-270 * NM)
    x = np.linspace(0, g.period, 7)
    h1, h2 = profiles(g.with_phase(math.pi), x)
    assert np.allclose(h1, g.mean_gap - g.amplitude_upper * np.cos(2 * math.pi * x / g.period))


def test_geometry_validation():
    with pytest.raises(ValueError, match="A1 must be < a"):
        default_geometry(amplitude_upper=150 * NM)
    bad = SimpleNamespace(mean_gap=140 * NM, amplitude_upper=150 * NM, amplitude_lower=-1.0,
                          overlayer_thickness=0.0, period=1000 * NM)
    assert geometry_problems(bad) == ["A1 must be < a", "A2 must be >= 0", "w must be > 0"]
    with pytest.raises(ValueError):
        default_geometry(overlayer_thickness=0.0)
    with pytest.warns(PFARegimeWarning):
        default_geometry(period=500 * NM)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        default_geometry()


def test_phase_round_trip():
    g = default_geometry().with_phase(1.25)
    assert g.phase == pytest.approx(1.25, rel=1e-15)


def test_mean_inverse_cube_gap_against_quadrature():
    for phi in (0.0, 0.7, math.pi / 2, math.pi, 5.0):
        g = default_geometry().with_phase(phi)

        def f(x):
            h1, h2 = profiles(g, x)
            return (h1 - h2) ** -3

        ref = integrate.quad(f, 0, g.period, epsabs=0, epsrel=1e-13, limit=200)[0] / g.period
        assert mean_inverse_cube_gap(g) == pytest.approx(ref, rel=1e-12)


def test_closed_form_limits():
    g = default_geometry()
    t1 = te_zero_pfa_closed_form(g, 110.0, 150.0)
    assert te_zero_pfa_closed_form(g, 110.0, 300.0) == pytest.approx(2 * t1, rel=1e-15)
    assert te_zero_pfa_closed_form(g, 1 + 1e-8, 300.0) < 1e-12 * te_zero_pfa_closed_form(g, 110.0, 300.0)
    with pytest.raises(ValueError):
        te_zero_pfa_closed_form(g, 1.0, 300.0)
    flat = default_geometry(amplitude_upper=0.0, amplitude_lower=0.0)
    expect = constants.K_B * 300.0 / (2 * math.pi) * (210 * NM) ** -3 * KERNEL_110
    assert te_zero_pfa_closed_form(flat, 110.0, 300.0) == pytest.approx(expect, rel=1e-14)


def test_flat_plates_reduce_to_plane_parallel(catalog, loose):
    flat = default_geometry(amplitude_upper=0.0, amplitude_lower=0.0)
    tpl = template(catalog)
    pfa = pfa_pressure(flat, tpl, loose)
    pp = pressure_plane_parallel(tpl, loose)
    assert pfa.total == pp.total
    assert pfa.te_zero == pp.te_zero
    curve = modulation_curve(flat, tpl, [0.0, 1.0, 2.0, 4.0], loose)
    assert np.all(curve.values == 0.0)
    assert curve.x_nodes == 1


def test_te_zero_matches_closed_form(catalog, ctrl, nickel):
    g = default_geometry().with_phase(math.pi / 2)
    b = pfa_pressure(g, template(catalog), ctrl)
    ref = te_zero_pfa_closed_form(g, nickel.params.static_permeability, 300.0)
    assert b.te_zero == pytest.approx(ref, rel=1e-8)


def test_x_average_against_brute_force_trapezoid(catalog, loose):
    g = default_geometry().with_phase(math.pi / 3)
    tpl = template(catalog)
    cache = PressureCache()
    value = pfa_pressure(g, tpl, loose, cache).total
    n = 1024
    theta = 2 * math.pi * np.arange(n) / n
    gaps = g.mean_gap + g.amplitude_upper * np.cos(theta - g.phase)
    golds = g.overlayer_thickness + g.amplitude_lower * (1 - np.cos(theta))
    brute = math.fsum(b.total for b in cache.lookup(tpl, loose, gaps, golds)) / n
    assert value == pytest.approx(brute, rel=1e-6)


PHASES16 = 2 * math.pi * np.arange(16) / 16


@pytest.fixture(scope="module")
def curve16(catalog, loose):
    return modulation_curve(default_geometry(), template(catalog), PHASES16, loose)


def test_period_invariance_is_exact(catalog, loose, curve16):
    other = modulation_curve(default_geometry(period=2000 * NM), template(catalog), PHASES16, loose)
    assert np.array_equal(curve16.values, other.values)


def test_symmetry_and_zero_mean(curve16):
    c = curve16
    mirror = c.values[(-np.arange(16)) % 16]
    assert np.max(np.abs(c.values - mirror)) <= 1e-3 * c.peak
    assert abs(np.mean(c.values)) <= 1e-3 * c.peak
    # out of phase the Ni-Ni separation varies most (|A1 + A2|), so attraction peaks at pi
    assert np.argmax(c.values) == 8 and np.argmin(c.values) == 0


def test_cache_reuse(catalog, loose):
    cache = PressureCache()
    g, tpl = default_geometry(), template(catalog)
    first = pfa_pressure(g, tpl, loose, cache)
    size = len(cache)
    second = pfa_pressure(g, tpl, loose, cache)
    assert len(cache) == size and first.total == second.total
    # a different prescription is a different context
    pfa_pressure(g, template(catalog, "plasma"), loose, cache)
    assert len(cache) > size
    assert PressureCache.key(70e-9, 70e-9) == PressureCache.key(70e-9 + 1e-17, 70e-9)


def test_argument_validation(catalog, loose):
    g = default_geometry()
    with pytest.raises(ValueError):
        modulation_curve(g, template(catalog), [2 * math.pi], loose)
    with pytest.raises(ValueError):
        modulation_curve(g, template(catalog), [], loose)
    bulk = CavityScene(LayerStack.bulk(catalog["Ni"]), LayerStack.bulk(catalog["Ni"]),
                       140 * NM, 300.0)
    with pytest.raises(ValueError):
        pfa_pressure(g, bulk, loose)
