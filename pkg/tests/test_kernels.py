import numpy as np
import pytest
import scipy.sparse as sp

from nphoton import kernels
from nphoton import build_liouvillian, jaynes_cummings, JCParams


@pytest.fixture(scope="module")
def jc_superop():
    me = jaynes_cummings(JCParams(gamma_a=0.1, gamma_s=0.01, P_s=0.01, n_max=3))
    return build_liouvillian(me).superop


@pytest.fixture(scope="module")
def seed_vec(jc_superop, rng):
    d = jc_superop.shape[0]
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def test_csr_matvec_matches_scipy(jc_superop, seed_vec):
    csr = jc_superop.tocsr()
    out = np.empty_like(seed_vec)
    kernels._csr_matvec_py(csr.data, csr.indices, csr.indptr, seed_vec, out)
    np.testing.assert_allclose(out, csr @ seed_vec, rtol=1e-13)
    if kernels.USING_NUMBA:
        out_nb = np.empty_like(seed_vec)
        kernels.csr_matvec_numba(csr.data, csr.indices, csr.indptr, seed_vec, out_nb)
        np.testing.assert_allclose(out_nb, csr @ seed_vec, rtol=1e-13)


@pytest.mark.skipif(not kernels.USING_NUMBA, reason="numba backend disabled")
def test_rk45_backends_agree(jc_superop, seed_vec):
    span = (0.0, 7.0)
    y_nb, _, n_nb, st_nb = kernels.expm_action(
        jc_superop, seed_vec, span, 1e-9, 1e-14, use_numba=True
    )
    y_np, _, n_np, st_np = kernels.expm_action(
        jc_superop, seed_vec, span, 1e-9, 1e-14, use_numba=False
    )
    assert st_nb == st_np == kernels.OK
    assert n_nb == n_np  # identical step-control decisions
    np.testing.assert_allclose(y_nb, y_np, rtol=1e-10, atol=1e-14)


def test_rk45_against_dense_expm(jc_superop, seed_vec):
    from scipy.linalg import expm

    tau = 3.0
    y, _, _, status = kernels.expm_action(
        jc_superop, seed_vec, (0.0, tau), 1e-10, 1e-14
    )
    assert status == kernels.OK
    want = expm(jc_superop.toarray() * tau) @ seed_vec
    np.testing.assert_allclose(y, want, rtol=1e-7, atol=1e-12)


def test_rk45_zero_span_is_identity(jc_superop, seed_vec):
    y, _, n, status = kernels.expm_action(
        jc_superop, seed_vec, (0.0, 0.0), 1e-9, 1e-14
    )
    assert status == kernels.OK and n == 0
    np.testing.assert_array_equal(y, seed_vec)


def test_rk45_step_budget_status(jc_superop, seed_vec):
    _, _, _, status = kernels.expm_action(
        jc_superop, seed_vec, (0.0, 50.0), 1e-9, 1e-14, max_steps=3
    )
    assert status == kernels.MAX_STEPS


def test_rk45_nonfinite_status(seed_vec):
    bad = sp.identity(len(seed_vec), format="csr") * np.inf
    _, _, _, status = kernels.expm_action(bad, seed_vec, (0.0, 1.0), 1e-9, 1e-14)
    assert status == kernels.NON_FINITE


@pytest.mark.parametrize("use_numba", [False, True])
def test_pole_weights_match_direct_formula(use_numba, rng):
    if use_numba and not kernels.USING_NUMBA:
        pytest.skip("numba backend disabled")
    m = -(rng.uniform(0.01, 2.0, size=24)) + 1j * rng.normal(size=24)
    m[0] = 0.0  # steady-state eigenvalue
    tau, w2, g2 = 2.3, 0.7, 0.21
    w, fdiag = kernels.pole_weights(m, tau, w2, g2, 1e-12, use_numba=use_numba)
    x = m - 1j * w2 + g2 / 2
    y = m + g2
    f_direct = np.exp(-g2 * tau) * (np.exp(x * tau) - 1.0) / x
    np.testing.assert_allclose(fdiag, f_direct, rtol=1e-12)
    b_direct = np.exp(-g2 * tau) * (np.exp(y * tau) - 1.0) / y
    w_direct = (f_direct[:, None] - b_direct[None, :]) / (x[:, None] - y[None, :])
    np.testing.assert_allclose(w, w_direct, rtol=1e-10)


def test_pole_weights_backends_agree(rng):
    if not kernels.USING_NUMBA:
        pytest.skip("numba backend disabled")
    m = -(rng.uniform(0.0, 3.0, size=40)) + 1j * rng.normal(size=40)
    args = (m, 1.7, -0.4, 0.35, 1e-8)
    w_nb, f_nb = kernels.pole_weights(*args, use_numba=True)
    w_np, f_np = kernels.pole_weights(*args, use_numba=False)
    np.testing.assert_allclose(w_nb, w_np, rtol=1e-12)
    np.testing.assert_allclose(f_nb, f_np, rtol=1e-12)


def test_pole_weights_degenerate_limit_continuous():
    # a pair with x_p - y_q exactly zero takes the limiting branch, which
    # must join the generic branch smoothly
    g2, w2, tau = 0.3, 0.5, 1.9
    y0 = -0.7 + 0.2j + g2
    base = y0 + 1j * w2 - g2 / 2  # makes x exactly equal y0

    def wval(eps):
        m = np.array([base - g2 / 2 + 1j * w2 + eps, -0.7 + 0.2j])
        # recompute so m[0] gives x = y0 + eps
        m[0] = y0 + eps + 1j * w2 - g2 / 2
        w, _ = kernels.pole_weights(m, tau, w2, g2, 1e-9, use_numba=False)
        return w[0, 1]

    exact_limit = wval(0.0)
    nearby = wval(1e-7)
    assert abs(nearby - exact_limit) < 1e-6 * abs(exact_limit)


def test_real_embedding_action(jc_superop, seed_vec):
    lr = kernels.real_embedding(jc_superop)
    direct = jc_superop @ seed_vec
    n = len(seed_vec)
    stacked = lr @ np.concatenate([seed_vec.real, seed_vec.imag])
    np.testing.assert_allclose(stacked[:n] + 1j * stacked[n:], direct, rtol=1e-13)
