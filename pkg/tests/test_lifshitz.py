import math

import numpy as np
import pytest
from scipy import integrate

from casimod import constants
from casimod.baselines import polylog3, zeta3
from casimod.lifshitz import (
    CavityScene,
    ConvergenceControl,
    ConvergenceError,
    matsubara_frequency,
    mode_integrand,
    pressure_batch,
    pressure_plane_parallel,
    te_zero_pressure,
)
from casimod.materials import VACUUM
from casimod.reflection import LayerStack, TransverseMode, stack_reflection_pair

NM = 1e-9
KB = constants.K_B


def ni_au_ni(catalog, gap=140 * NM, temperature=300.0, prescription="drude", gold=70 * NM):
    return CavityScene(LayerStack.bulk(catalog["Ni"]),
                       LayerStack.coated(catalog["Au"], gold, catalog["Ni"]),
                       gap, temperature, prescription)


def test_matsubara_frequency():
    assert matsubara_frequency(0, 300.0) == 0.0
    assert matsubara_frequency(1, 300.0) == pytest.approx(2.468e14, rel=1e-3)
    assert matsubara_frequency(2, 300.0) == pytest.approx(2 * matsubara_frequency(1, 300.0), rel=1e-15)
    with pytest.raises(ValueError):
        matsubara_frequency(-1, 300.0)
    with pytest.raises(ValueError):
        matsubara_frequency(1, 0.0)


def test_scene_validation(catalog):
    with pytest.raises(ValueError):
        ni_au_ni(catalog, gap=0.0)
    with pytest.raises(ValueError):
        ni_au_ni(catalog, temperature=-3.0)
    with pytest.raises(ValueError):
        ConvergenceControl(quad_rel_tol=0.0)


def test_transparent_mirror_contributes_nothing(catalog):
    scene = CavityScene(LayerStack.bulk(VACUUM), LayerStack.bulk(catalog["Au"]), 100 * NM, 300.0)
    k = np.logspace(5, 9, 20)
    for pol in ("TE", "TM"):
        assert np.all(mode_integrand(scene, TransverseMode(k, 1e15, 4), pol) == 0)


def test_mode_integrand_matches_direct_formula(catalog):
    scene = ni_au_ni(catalog)
    d = scene.gap
    for md in (TransverseMode(1 / d, 0.0, 0), TransverseMode(3e6, 5e14, 2)):
        q = math.sqrt((md.xi / constants.C) ** 2 + md.kperp ** 2)
        r1 = stack_reflection_pair(scene.stack_upper, md)
        r2 = stack_reflection_pair(scene.stack_lower, md)
        for i, pol in enumerate(("TE", "TM")):
            p = r1[i] * r2[i]
            direct = md.kperp * q / (math.exp(2 * d * q) / p - 1)
            value = mode_integrand(scene, md, pol)
            assert value == pytest.approx(direct, rel=1e-13)
            assert value > 0


def test_perfect_mirror_integrand(catalog):
    mirror = catalog["Au"].scaled(plasma=1e6)
    scene = CavityScene(LayerStack.bulk(mirror), LayerStack.bulk(mirror), 1e-6, 1.0, "plasma")
    y = np.linspace(0.01, 10, 50)
    k = y / scene.gap
    vals = mode_integrand(scene, TransverseMode(k, 0.0, 0), "TM")
    assert np.allclose(vals, k * k / np.expm1(2 * y), rtol=1e-14)


def test_te_zero_nickel_against_polylog(catalog, ctrl):
    ni = catalog["Ni"]
    d, t = 200 * NM, 300.0
    scene = CavityScene(LayerStack.bulk(ni), LayerStack.bulk(ni), d, t, "drude")
    oracle = KB * t / (2 * math.pi * d ** 3) * polylog3((109 / 111) ** 2) / 4
    assert te_zero_pressure(scene, ctrl) == pytest.approx(oracle, rel=1e-10)
    assert pressure_plane_parallel(scene, ctrl).te_zero == pytest.approx(oracle, rel=1e-10)


def test_te_zero_vanishes_for_nonmagnetic_drude(catalog, ctrl):
    au = catalog["Au"]
    scene = CavityScene(LayerStack.bulk(au), LayerStack.bulk(au), 300 * NM, 300.0, "drude")
    assert te_zero_pressure(scene, ctrl) == 0.0
    b = pressure_plane_parallel(scene, ctrl)
    assert b.te_zero == 0.0
    # TM at l = 0 is a perfect reflector: half of k_B T zeta(3) / (4 pi d^3)
    assert b.tm_zero == pytest.approx(KB * 300.0 * zeta3() / (8 * math.pi * (300 * NM) ** 3),
                                      rel=1e-10)


def test_static_channels_are_linear_in_temperature(catalog, ctrl):
    a = pressure_plane_parallel(ni_au_ni(catalog, temperature=150.0), ctrl)
    b = pressure_plane_parallel(ni_au_ni(catalog, temperature=300.0), ctrl)
    assert b.te_zero == pytest.approx(2 * a.te_zero, rel=1e-10)
    assert b.tm_zero == pytest.approx(2 * a.tm_zero, rel=1e-10)


def test_breakdown_closure(catalog, ctrl):
    for p in ("drude", "plasma"):
        b = pressure_plane_parallel(ni_au_ni(catalog, prescription=p), ctrl)
        assert abs(b.total - (b.te_zero + b.tm_zero + b.nonzero_modes)) <= max(
            b.quadrature_error_estimate, 1e-15 * abs(b.total))
        assert b.total > 0  # attraction
        assert b.terms_used > 1
        assert set(b.as_dict()) >= {"total", "te_zero", "tm_zero", "nonzero_modes"}


def test_prescription_only_touches_zero_frequency(catalog, ctrl):
    d = pressure_plane_parallel(ni_au_ni(catalog, prescription="drude"), ctrl)
    p = pressure_plane_parallel(ni_au_ni(catalog, prescription="plasma"), ctrl)
    # same l > 0 terms; the stop point may differ by a term, within the truncation estimate
    assert abs(d.nonzero_modes - p.nonzero_modes) <= max(d.error_estimate, p.error_estimate)
    assert d.tm_zero == pytest.approx(p.tm_zero, rel=1e-14)
    assert d.te_zero != p.te_zero


def test_gap_doubling_decreases_pressure(catalog, loose):
    for p in ("drude", "plasma"):
        near = pressure_plane_parallel(ni_au_ni(catalog, gap=100 * NM, prescription=p), loose)
        far = pressure_plane_parallel(ni_au_ni(catalog, gap=200 * NM, prescription=p), loose)
        assert far.total < near.total


def test_plasma_te_zero_is_substrate_blind(catalog, ctrl):
    au, ni = catalog["Au"], catalog["Ni"]
    thick = CavityScene(LayerStack.bulk(ni), LayerStack.coated(au, 2000 * NM, ni),
                        140 * NM, 300.0, "plasma")
    bulk = CavityScene(LayerStack.bulk(ni), LayerStack.bulk(au), 140 * NM, 300.0, "plasma")
    a, b = te_zero_pressure(thick, ctrl), te_zero_pressure(bulk, ctrl)
    assert math.isfinite(a) and a != 0
    assert a == pytest.approx(b, rel=1e-12)


def test_batch_matches_single_scenes_and_is_worker_independent(catalog, loose):
    au, ni = catalog["Au"], catalog["Ni"]
    upper, lower = LayerStack.bulk(ni), LayerStack.coated(au, 70 * NM, ni)
    gaps = np.linspace(60, 220, 9) * NM
    golds = [(s,) for s in np.linspace(70, 270, 9) * NM]
    one = pressure_batch(upper, lower, gaps, 300.0, "drude", loose, golds, workers=1)
    many = pressure_batch(upper, lower, gaps, 300.0, "drude", loose, golds, workers=3)
    assert [b.as_dict() for b in one] == [b.as_dict() for b in many]
    single = pressure_plane_parallel(
        CavityScene(upper, lower.with_thicknesses(golds[4]), gaps[4], 300.0, "drude"), loose)
    assert single.total == pytest.approx(one[4].total, rel=1e-7)


def test_term_budget_exhaustion(catalog):
    tiny = ConvergenceControl(max_terms=3)
    with pytest.raises(ConvergenceError) as info:
        pressure_plane_parallel(ni_au_ni(catalog, gap=50 * NM), tiny)
    assert info.value.partial is not None


def _independent_nonzero_modes(catalog, d, s, temperature=300.0):
    """scipy quad over k for every l > 0, explicit three-medium reflection coefficients."""
    au, ni = catalog["Au"].params, catalog["Ni"].params
    c = constants.C

    def eps(p, xi):
        return 1 + p.plasma_frequency ** 2 / (xi * (xi + p.relaxation_frequency))

    def ratio(pa, pb, ka, kb):
        return (pb * ka - pa * kb) / (pb * ka + pa * kb)

    def term(l):
        xi = 2 * math.pi * l * KB * temperature / constants.HBAR
        ea, en = eps(au, xi), eps(ni, xi)

        def f(k):
            q = math.sqrt((xi / c) ** 2 + k * k)
            ka = math.sqrt(ea * (xi / c) ** 2 + k * k)
            kn = math.sqrt(en * (xi / c) ** 2 + k * k)
            total = 0.0
            for p0, pa, pn in ((1, 1, 1), (1, ea, en)):
                r_upper = ratio(p0, pn, q, kn)
                r01, r12 = ratio(p0, pa, q, ka), ratio(pa, pn, ka, kn)
                g = math.exp(-2 * ka * s)
                r_lower = (r01 + g * r12) / (1 + g * r01 * r12)
                rr = r_upper * r_lower
                total += k * q * rr * math.exp(-2 * d * q) / (1 - rr * math.exp(-2 * d * q))
            return total

        return integrate.quad(f, 0, 60 / d, limit=200, epsabs=0, epsrel=1e-12)[0]

    acc, l = [], 1
    while True:
        acc.append(term(l))
        if abs(acc[-1]) < 1e-13 * abs(math.fsum(acc)):
            break
        l += 1
    return KB * temperature / math.pi * math.fsum(acc)


def test_nonzero_modes_against_independent_quadrature(catalog, ctrl):
    d, s = 225 * NM, 70 * NM
    engine = pressure_plane_parallel(ni_au_ni(catalog, gap=d, gold=s), ctrl)
    ref = _independent_nonzero_modes(catalog, d, s)
    assert engine.nonzero_modes == pytest.approx(ref, rel=1e-8)
    assert abs(engine.nonzero_modes - ref) <= engine.error_estimate + 1e-12 * abs(ref)
