import numpy as np
import pytest

from nphoton import (
    JCParams,
    build_liouvillian,
    driven_cavity,
    expectation,
    jaynes_cummings,
    jc_ladder,
    number,
    steady_state,
    thermal_cavity,
)
from nphoton.models import probe_operator

from conftest import rel_err


def test_jc_unpumped_steady_state_is_vacuum():
    me = jaynes_cummings(JCParams(gamma_a=0.1, gamma_s=0.01, P_s=0.0, n_max=3))
    rho = steady_state(build_liouvillian(me))
    assert expectation(rho, number(me.space, "a")).real < 1e-12


def test_jc_weak_pump_population(jc_fig1_solved):
    _p, me, _a, _liou, rho = jc_fig1_solved
    na = expectation(rho, number(me.space, "a")).real
    assert 0 < na < 0.1


def test_jc_truncation_guard(jc_fig1_solved):
    # oracle: increase n_max by one and compare the mean photon number
    p, me, _a, _liou, rho = jc_fig1_solved
    na = expectation(rho, number(me.space, "a")).real
    bigger = jaynes_cummings(
        JCParams(p.gamma_a, p.gamma_s, p.P_s, n_max=p.n_max + 1)
    )
    rho5 = steady_state(build_liouvillian(bigger))
    na5 = expectation(rho5, number(bigger.space, "a")).real
    assert abs(na5 - na) < 1e-6 * na
    # the top Fock level itself carries a vanishing share of the population
    top = rho.matrix.reshape(p.n_max + 1, 2, p.n_max + 1, 2)
    top_pop = np.real(np.trace(top[p.n_max, :, p.n_max, :]))
    assert top_pop < 1e-4 * na


def test_ladder_closed_forms_equal_rates():
    # gamma_a = gamma_s kills the broadening shift: R = g exactly
    p = JCParams(gamma_a=0.01, gamma_s=0.01, P_s=0.0, n_max=4)
    trans = {t.branch + str(t.rung): t for t in jc_ladder(p, 2)}
    assert trans["+1"].frequency == pytest.approx(1.0)
    assert trans["++2"].frequency == pytest.approx(np.sqrt(2) - 1)
    assert trans["+-2"].frequency == pytest.approx(np.sqrt(2) + 1)
    assert trans["-+2"].frequency == pytest.approx(-(np.sqrt(2) + 1))
    assert trans["+1"].linewidth == pytest.approx(0.01)


def test_ladder_supplement_linewidth():
    p = JCParams(gamma_a=0.001, gamma_s=0.001, P_s=0.0, n_max=4)
    gamma2 = {t.rung: t.linewidth for t in jc_ladder(p, 2)}[2]
    assert gamma2 == pytest.approx(0.003)


def test_ladder_counts_and_signs():
    p = JCParams(gamma_a=0.1, gamma_s=0.01, P_s=0.01, n_max=4)
    trans = jc_ladder(p, 3)
    assert len(trans) == 10  # 2 Rabi lines + 4 per higher rung
    freqs = sorted(t.frequency for t in trans)
    assert freqs == sorted(-f for f in freqs)  # symmetric doublets


def test_ladder_overdamped_error():
    p = JCParams(gamma_a=8.0, gamma_s=0.0, P_s=0.0, n_max=2, g=1.0)
    with pytest.raises(ValueError, match="overdamped at rung 1"):
        jc_ladder(p, 1)


def test_thermal_cavity_mean():
    me = thermal_cavity(P_a=0.2, gamma_a=1.0, n_max=14)
    rho = steady_state(build_liouvillian(me))
    nbar = expectation(rho, number(me.space, "a")).real
    assert rel_err(nbar, 0.25) < 1e-6


def test_thermal_divergence_error():
    with pytest.raises(ValueError, match="thermal divergence"):
        thermal_cavity(P_a=1.0, gamma_a=1.0, n_max=5)


def test_driven_cavity_mean():
    me = driven_cavity(Omega=0.25, gamma_a=1.0, n_max=8)
    rho = steady_state(build_liouvillian(me))
    nbar = expectation(rho, number(me.space, "a")).real
    assert rel_err(nbar, 4 * 0.25**2) < 1e-8


def test_rate_scale_invariance():
    # multiplying g and every rate by a common factor leaves dimensionless
    # outputs unchanged
    from nphoton import DelayGrid, colorblind_g2

    vals = []
    for scale in (1.0, 7.0):
        p = JCParams(
            gamma_a=0.1 * scale,
            gamma_s=0.01 * scale,
            P_s=0.01 * scale,
            n_max=3,
            g=scale,
        )
        me = jaynes_cummings(p)
        liou = build_liouvillian(me)
        rho = steady_state(liou)
        a = probe_operator(me)
        vals.append(
            colorblind_g2(liou, rho, a, DelayGrid((0.0, 1.0 / scale)))
        )
    np.testing.assert_allclose(vals[0], vals[1], rtol=1e-10)


def test_params_validation():
    with pytest.raises(ValueError):
        JCParams(gamma_a=-0.1, gamma_s=0.0, P_s=0.0)
    with pytest.raises(ValueError):
        JCParams(gamma_a=0.1, gamma_s=0.0, P_s=0.0, n_max=0)
