"""Truncated tensor-product Hilbert spaces and sparse operators on them.

Factors are bosonic modes truncated at ``n_max`` excitations or two-level
systems.  The first factor in a composite space varies slowest, i.e. an
operator acting on factor ``k`` embeds as
``kron(I_before, op_local, I_after)``.  All operators are stored as
canonical (sorted, duplicate-free) CSR matrices so that dumps and
downstream solves are reproducible bit for bit on a fixed build.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "FactorSpec",
    "CompositeSpace",
    "Operator",
    "boson",
    "qubit",
    "make_space",
    "annihilator",
    "number",
    "identity",
    "add",
    "scale",
    "matmul",
    "adjoint",
]


@dataclass(frozen=True)
class FactorSpec:
    """One tensor factor: a truncated boson (``n_max`` >= 1) or a qubit."""

    label: str
    kind: str  # "boson" or "qubit"
    n_max: int = 0

    def __post_init__(self):
        if self.kind not in ("boson", "qubit"):
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if self.kind == "boson" and self.n_max < 1:
            raise ValueError(f"boson factor {self.label!r} needs n_max >= 1")

    @property
    def dim(self) -> int:
        return self.n_max + 1 if self.kind == "boson" else 2


def boson(label: str, n_max: int) -> FactorSpec:
    return FactorSpec(label, "boson", n_max)


def qubit(label: str) -> FactorSpec:
    return FactorSpec(label, "qubit")


@dataclass(frozen=True)
class CompositeSpace:
    """Ordered tensor product of factors; first factor varies slowest."""

    factors: tuple[FactorSpec, ...]
    dim: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dim", int(np.prod([f.dim for f in self.factors])))

    def index(self, label: str) -> int:
        for i, f in enumerate(self.factors):
            if f.label == label:
                return i
        raise ValueError(f"unknown factor label {label!r}")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f.label for f in self.factors)


def make_space(factors) -> CompositeSpace:
    """Build a composite space from a non-empty list of factors.

    Raises on duplicate labels; the factor order given here fixes the
    tensor-product index convention for every operator on the space.
    """
    factors = tuple(factors)
    if not factors:
        raise ValueError("a composite space needs at least one factor")
    labels = [f.label for f in factors]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate factor labels in {labels}")
    return CompositeSpace(factors)


def _canonical(matrix: sp.spmatrix) -> sp.csr_matrix:
    m = sp.csr_matrix(matrix, dtype=np.complex128)
    m.sum_duplicates()
    m.sort_indices()
    return m


class Operator:
    """A sparse complex operator bound to a :class:`CompositeSpace`."""

    __slots__ = ("space", "matrix")

    def __init__(self, space: CompositeSpace, matrix):
        matrix = _canonical(matrix)
        if matrix.shape != (space.dim, space.dim):
            raise ValueError(
                f"matrix shape {matrix.shape} does not match space dim {space.dim}"
            )
        self.space = space
        self.matrix = matrix

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conjugate().transpose())

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def _check_space(self, other: "Operator"):
        if self.space != other.space:
            raise ValueError("operators act on different spaces")

    def __add__(self, other: "Operator") -> "Operator":
        self._check_space(other)
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_space(other)
        return Operator(self.space, self.matrix - other.matrix)

    def __mul__(self, c) -> "Operator":
        return Operator(self.space, self.matrix * complex(c))

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return self * (-1.0)

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check_space(other)
        return Operator(self.space, self.matrix @ other.matrix)

    def __repr__(self) -> str:
        return f"Operator(dim={self.space.dim}, nnz={self.nnz})"

    def dumps(self) -> str:
        """Coordinate-list text dump: one ``row col re im`` line per nonzero.

        Rows and columns are 0-based; values are written in scientific
        notation with 17 significant digits, rows in CSR order.
        """
        coo = self.matrix.tocoo()
        lines = []
        for r, c, v in zip(coo.row, coo.col, coo.data):
            lines.append(f"{r} {c} {v.real:.16e} {v.imag:.16e}")
        return "\n".join(lines) + ("\n" if lines else "")


def _local_annihilator(factor: FactorSpec) -> sp.csr_matrix:
    if factor.kind == "qubit":
        return sp.csr_matrix(np.array([[0, 1], [0, 0]], dtype=np.complex128))
    n = factor.n_max
    data = np.sqrt(np.arange(1, n + 1, dtype=np.float64))
    return sp.csr_matrix(
        (data.astype(np.complex128), (np.arange(n), np.arange(1, n + 1))),
        shape=(n + 1, n + 1),
    )


def embed(space: CompositeSpace, label: str, local: sp.spmatrix) -> Operator:
    """Embed a local factor operator into the full space (identity elsewhere)."""
    k = space.index(label)
    dims = [f.dim for f in space.factors]
    pre = int(np.prod(dims[:k])) if k > 0 else 1
    post = int(np.prod(dims[k + 1 :])) if k + 1 < len(dims) else 1
    mat = sp.kron(sp.identity(pre, format="csr"), local, format="csr")
    mat = sp.kron(mat, sp.identity(post, format="csr"), format="csr")
    return Operator(space, mat)


def annihilator(space: CompositeSpace, label: str) -> Operator:
    """Lowering operator of one factor, embedded in the full space.

    Bosons follow ``<n-1|a|n> = sqrt(n)`` truncated at ``n_max``
    (``a|n_max> -> sqrt(n_max)|n_max-1>``, ``a_dag|n_max> -> 0``); a qubit
    gives ``[[0, 1], [0, 0]]``.
    """
    factor = space.factors[space.index(label)]
    return embed(space, label, _local_annihilator(factor))


def number(space: CompositeSpace, label: str) -> Operator:
    a = annihilator(space, label)
    return a.dag() @ a


def identity(space: CompositeSpace) -> Operator:
    return Operator(space, sp.identity(space.dim, format="csr"))


def add(a: Operator, b: Operator) -> Operator:
    return a + b


def scale(c, a: Operator) -> Operator:
    return a * c


def matmul(a: Operator, b: Operator) -> Operator:
    return a @ b


def adjoint(a: Operator) -> Operator:
    return a.dag()
