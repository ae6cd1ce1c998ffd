import numpy as np
import pytest

from nphoton import (
    DensityMatrix,
    Dissipator,
    MasterEquation,
    annihilator,
    boson,
    build_liouvillian,
    expectation,
    identity,
    make_space,
    number,
    qubit,
    steady_state,
    thermal_cavity,
)
from nphoton.liouville import unvectorize, vectorize

from conftest import rel_err


def lindblad_rhs(me, rho):
    """Independent dense evaluation of the generator (no vectorization)."""
    h = me.hamiltonian.dense()
    out = 1j * (rho @ h - h @ rho)
    for d in me.dissipators:
        c = d.collapse.dense()
        cd = c.conj().T
        out += (d.rate / 2.0) * (2 * c @ rho @ cd - cd @ c @ rho - rho @ cd @ c)
    return out


def random_matrix(rng, d, hermitian=False):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (m + m.conj().T) / 2 if hermitian else m


def test_superop_matches_direct_evaluation(jc_fig1, rng):
    _p, me, _a = jc_fig1
    liou = build_liouvillian(me)
    for _ in range(5):
        rho = random_matrix(rng, me.space.dim, hermitian=True)
        direct = lindblad_rhs(me, rho)
        via_superop = liou.apply(rho)
        assert np.abs(via_superop - direct).max() <= 1e-14 * np.abs(direct).max()


def test_qubit_decay_superop_eigenvalues(decaying_qubit):
    # Oracle: assemble the 4x4 superoperator column by column from the
    # dense RHS (independent of the kron construction), then eigensolve.
    me, _s = decaying_qubit
    cols = []
    for j in range(4):
        basis = np.zeros(4)
        basis[j] = 1.0
        cols.append(vectorize(lindblad_rhs(me, unvectorize(basis, 2))))
    dense = np.column_stack(cols)
    oracle_eigs = np.sort_complex(np.linalg.eigvals(dense))
    expected = np.sort_complex(np.array([0.0, -0.5, -0.5, -1.0], dtype=complex))
    np.testing.assert_allclose(oracle_eigs, expected, atol=1e-12)

    liou = build_liouvillian(me)
    got = np.sort_complex(np.linalg.eigvals(liou.superop.toarray()))
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_empty_generator_is_zero():
    sp = make_space([qubit("s")])
    me = MasterEquation(sp, 0.0 * identity(sp), ())
    liou = build_liouvillian(me)
    assert liou.superop.nnz == 0 or abs(liou.superop).max() == 0.0


def test_trace_preservation_on_random_states(pumped_qubit, rng):
    me, _s = pumped_qubit
    liou = build_liouvillian(me)
    for _ in range(100):
        rho = random_matrix(rng, 2, hermitian=True)
        img = liou.apply(rho)
        assert abs(img.trace()) < 1e-10 * np.linalg.norm(img)


def test_hermiticity_preservation(jc_fig1, rng):
    _p, me, _a = jc_fig1
    liou = build_liouvillian(me)
    for _ in range(20):
        sigma = random_matrix(rng, me.space.dim)
        left = liou.apply(sigma.conj().T)
        right = liou.apply(sigma).conj().T
        assert np.abs(left - right).max() <= 1e-12 * np.abs(right).max()


def test_non_hermitian_hamiltonian_rejected():
    sp = make_space([qubit("s")])
    s = annihilator(sp, "s")
    with pytest.raises(ValueError, match="Hermitian"):
        MasterEquation(sp, 1.0 * s, ())


def test_steady_state_decaying_qubit(decaying_qubit):
    me, s = decaying_qubit
    rho = steady_state(build_liouvillian(me))
    np.testing.assert_allclose(rho.matrix, np.diag([1.0, 0.0]), atol=1e-12)


def test_steady_state_pumped_qubit(pumped_qubit):
    # rate equation: d<n>/dt = P(1 - <n>) - gamma <n> = 0
    me, s = pumped_qubit
    expected = 0.4 / (0.4 + 1.0)
    rho = steady_state(build_liouvillian(me))
    pop = expectation(rho, s.dag() @ s).real
    assert pop == pytest.approx(expected, rel=1e-12)


def test_steady_state_thermal_cavity():
    me = thermal_cavity(P_a=0.5, gamma_a=1.0, n_max=10)
    rho = steady_state(build_liouvillian(me))
    nbar = expectation(rho, number(me.space, "a")).real
    assert rel_err(nbar, 0.5 / (1.0 - 0.5)) < 1e-2  # truncation-limited


def test_steady_state_residual_and_validity(jc_fig1):
    _p, me, _a = jc_fig1
    liou = build_liouvillian(me)
    rho = steady_state(liou)
    assert np.linalg.norm(liou.apply(rho.matrix)) < 1e-10 * liou.fro_norm()
    assert rho.matrix.trace().real == pytest.approx(1.0, abs=1e-12)
    assert rho.min_eigenvalue() > -1e-8


def test_degenerate_steady_state_raises():
    # two disconnected qubits with no dissipation on either coherence
    # sector: a purely Hamiltonian generator has no unique fixed point
    sp = make_space([qubit("s")])
    me = MasterEquation(sp, 0.0 * identity(sp), ())
    with pytest.raises(ValueError, match="degenerate steady state"):
        steady_state(build_liouvillian(me))


def test_block_systems_factorize():
    # two non-interacting pumped qubits: the joint steady state is the
    # tensor product of the individual ones
    sp = make_space([qubit("s"), qubit("t")])
    s = annihilator(sp, "s")
    t = annihilator(sp, "t")
    me = MasterEquation(
        sp,
        0.0 * identity(sp),
        (
            Dissipator(1.0, s),
            Dissipator(0.3, s.dag()),
            Dissipator(0.7, t),
            Dissipator(0.2, t.dag()),
        ),
    )
    rho = steady_state(build_liouvillian(me)).matrix

    def single(P, g):
        spq = make_space([qubit("q")])
        q = annihilator(spq, "q")
        meq = MasterEquation(
            spq, 0.0 * identity(spq), (Dissipator(g, q), Dissipator(P, q.dag()))
        )
        return steady_state(build_liouvillian(meq)).matrix

    expected = np.kron(single(0.3, 1.0), single(0.2, 0.7))
    assert np.abs(rho - expected).max() < 1e-8


def test_expectation_examples(pumped_qubit):
    me, s = pumped_qubit
    rho = steady_state(build_liouvillian(me))
    sp = me.space
    assert expectation(rho, identity(sp)).real == pytest.approx(1.0)
    ground = DensityMatrix(sp, np.diag([1.0, 0.0]))
    assert expectation(ground, s.dag() @ s) == 0.0
    maximally_mixed = DensityMatrix(sp, np.eye(2) / 2)
    assert expectation(maximally_mixed, identity(sp)).real == pytest.approx(1.0)


def test_expectation_space_mismatch(pumped_qubit):
    me, _s = pumped_qubit
    rho = steady_state(build_liouvillian(me))
    other = annihilator(make_space([boson("b", 2)]), "b")
    with pytest.raises(ValueError, match="different spaces"):
        expectation(rho, other)


def test_density_matrix_dump_roundtrip(pumped_qubit):
    me, _s = pumped_qubit
    rho = steady_state(build_liouvillian(me))
    text = rho.dumps()
    for line in text.strip().split("\n"):
        r, c, re, im = line.split()
        assert complex(float(re), float(im)) == pytest.approx(
            rho.matrix[int(r), int(c)]
        )
