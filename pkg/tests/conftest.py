import numpy as np
import pytest

from nphoton import (
    Dissipator,
    JCParams,
    MasterEquation,
    annihilator,
    build_liouvillian,
    identity,
    jaynes_cummings,
    make_space,
    qubit,
    steady_state,
    thermal_cavity,
)
from nphoton.models import probe_operator


def rel_err(got, want, floor=1e-300):
    got = np.asarray(got, dtype=float)
    want = np.asarray(want, dtype=float)
    return np.abs(got - want) / np.maximum(np.abs(want), floor)


@pytest.fixture(scope="session")
def decaying_qubit():
    """Qubit with decay gamma = 1, no pump."""
    sp = make_space([qubit("s")])
    s = annihilator(sp, "s")
    me = MasterEquation(sp, 0.0 * identity(sp), (Dissipator(1.0, s),))
    return me, s


@pytest.fixture(scope="session")
def pumped_qubit():
    """Qubit with pump P = 0.4 and decay gamma = 1."""
    sp = make_space([qubit("s")])
    s = annihilator(sp, "s")
    me = MasterEquation(
        sp, 0.0 * identity(sp), (Dissipator(1.0, s), Dissipator(0.4, s.dag()))
    )
    return me, s


@pytest.fixture(scope="session")
def thermal():
    """Thermal cavity with <n> = 0.25."""
    me = thermal_cavity(P_a=0.2, gamma_a=1.0, n_max=12)
    return me, probe_operator(me)


@pytest.fixture(scope="session")
def thermal_solved(thermal):
    me, a = thermal
    liou = build_liouvillian(me)
    return me, a, liou, steady_state(liou)


@pytest.fixture(scope="session")
def jc_fig1():
    """JC system at the weak-pump working point used throughout."""
    p = JCParams(gamma_a=0.1, gamma_s=0.01, P_s=0.01, n_max=4)
    me = jaynes_cummings(p)
    return p, me, probe_operator(me)


@pytest.fixture(scope="session")
def jc_fig1_solved(jc_fig1):
    p, me, a = jc_fig1
    liou = build_liouvillian(me)
    return p, me, a, liou, steady_state(liou)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20120814)
