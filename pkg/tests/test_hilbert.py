import numpy as np
import pytest

from nphoton import hilbert
from nphoton.hilbert import (
    annihilator,
    boson,
    identity,
    make_space,
    number,
    qubit,
)


def test_space_dims():
    assert make_space([qubit("s")]).dim == 2
    assert make_space([boson("a", 4), qubit("s")]).dim == 10
    assert make_space(
        [boson("a", 4), qubit("s"), qubit("s1"), qubit("s2")]
    ).dim == 40


def test_space_rejects_duplicates_and_bad_truncation():
    with pytest.raises(ValueError, match="duplicate"):
        make_space([qubit("s"), qubit("s")])
    with pytest.raises(ValueError, match="n_max"):
        boson("a", 0)
    with pytest.raises(ValueError):
        make_space([])


def test_qubit_annihilator():
    sp = make_space([qubit("s")])
    s = annihilator(sp, "s")
    np.testing.assert_array_equal(s.dense(), [[0, 1], [0, 0]])


def test_boson_annihilator_matrix_elements():
    sp = make_space([boson("a", 2)])
    a = annihilator(sp, "a").dense()
    assert a[0, 1] == 1.0
    assert a[1, 2] == pytest.approx(np.sqrt(2))
    assert np.count_nonzero(a) == 2


def test_embedded_sparsity_count():
    # a (x) 1 has exactly n_max * (other dims) nonzeros
    sp = make_space([boson("a", 4), qubit("s"), qubit("t")])
    a = annihilator(sp, "a")
    assert a.nnz == 4 * 4


def test_unknown_label():
    sp = make_space([qubit("s")])
    with pytest.raises(ValueError, match="unknown factor"):
        annihilator(sp, "nope")


def test_number_operator_diagonal():
    sp = make_space([boson("a", 3), qubit("s")])
    for label, levels in (("a", [0, 1, 2, 3]), ("s", [0, 1])):
        n = number(sp, label).dense()
        assert np.allclose(n, np.diag(np.diag(n)))
        vals = sorted(set(np.round(np.diag(n).real, 12)))
        assert vals == levels


def test_algebra_examples():
    sp = make_space([qubit("s")])
    s = annihilator(sp, "s")
    np.testing.assert_array_equal((s.dag() @ s).dense(), [[0, 0], [0, 1]])
    np.testing.assert_array_equal((s @ s).dense(), np.zeros((2, 2)))


def test_truncated_commutator():
    # [a, a_dag] = 1 below the truncation level, deviates on the top level
    n_max = 5
    sp = make_space([boson("a", n_max)])
    a = annihilator(sp, "a")
    comm = (a @ a.dag() - a.dag() @ a).dense()
    expected = np.eye(n_max + 1)
    expected[n_max, n_max] = -n_max  # truncation artifact
    np.testing.assert_allclose(comm, expected, atol=1e-14)


def test_adjoint_involution_exact():
    sp = make_space([boson("a", 3), qubit("s")])
    a = annihilator(sp, "a")
    h = a + a.dag() + 0.5j * (a @ a)
    again = h.dag().dag()
    assert (again.matrix != h.matrix).nnz == 0


def test_distinct_factor_operators_commute():
    sp = make_space([boson("a", 3), qubit("s")])
    a = annihilator(sp, "a")
    s = annihilator(sp, "s")
    diff = (a @ s - s @ a).matrix
    assert abs(diff).max() == 0.0


def test_space_mismatch_rejected():
    a1 = annihilator(make_space([qubit("s")]), "s")
    a2 = annihilator(make_space([qubit("t")]), "t")
    with pytest.raises(ValueError, match="different spaces"):
        _ = a1 @ a2


def test_dump_format():
    sp = make_space([boson("a", 2)])
    a = annihilator(sp, "a")
    lines = a.dumps().strip().split("\n")
    assert lines[0] == f"0 1 {1.0:.16e} {0.0:.16e}"
    assert lines[1] == f"1 2 {np.sqrt(2):.16e} {0.0:.16e}"
    # deterministic: identical on repeated dumps
    assert a.dumps() == a.dumps()


def test_identity_and_scalar_algebra():
    sp = make_space([boson("a", 2), qubit("s")])
    one = identity(sp)
    a = annihilator(sp, "a")
    assert np.allclose((2.0 * one).dense(), 2 * np.eye(sp.dim))
    assert np.allclose((a - a).dense(), 0)
    assert hilbert.adjoint(hilbert.scale(1j, a)).dense() == pytest.approx(
        (-1j * a.dag()).dense()
    )
