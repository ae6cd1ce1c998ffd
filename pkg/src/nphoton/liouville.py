"""Lindblad generator as a sparse superoperator and its steady state.

Conventions
-----------
The master equation is written with half-rates on the dissipators,

    d rho/dt = i (rho H - H rho) + sum_c (gamma_c / 2) L_c(rho),
    L_c(rho) = 2 c rho c_dag - c_dag c rho - rho c_dag c,

so rates quoted as multiples of a reference coupling are usable verbatim.
(The common convention ``gamma D[c]`` with ``D[c] = c rho c_dag -
{c_dag c, rho}/2`` corresponds to the same ``gamma``.)

Density matrices are vectorized by column stacking, ``vec(rho)[i + d j] =
rho[i, j]``, so left multiplication by ``A`` maps to ``I (x) A`` and right
multiplication by ``B`` maps to ``B.T (x) I``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hilbert import CompositeSpace, Operator

__all__ = [
    "Dissipator",
    "MasterEquation",
    "Liouvillian",
    "DensityMatrix",
    "build_liouvillian",
    "steady_state",
    "expectation",
    "vectorize",
    "unvectorize",
    "left_mult_superop",
    "right_mult_superop",
]

HERMITICITY_RTOL = 1e-12


@dataclass(frozen=True)
class Dissipator:
    """One Lindblad channel ``(rate / 2) L_collapse``."""

    rate: float
    collapse: Operator

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"dissipator rate must be >= 0, got {self.rate}")


@dataclass(frozen=True)
class MasterEquation:
    space: CompositeSpace
    hamiltonian: Operator
    dissipators: tuple[Dissipator, ...]

    def __post_init__(self):
        object.__setattr__(self, "dissipators", tuple(self.dissipators))
        h = self.hamiltonian.matrix
        defect = abs(h - h.conjugate().transpose()).max()
        scale = abs(h).max() if h.nnz else 0.0
        if scale > 0 and defect > HERMITICITY_RTOL * scale:
            raise ValueError(
                f"Hamiltonian is not Hermitian: max defect {defect:.3e} "
                f"exceeds {HERMITICITY_RTOL:.0e} * {scale:.3e}"
            )

    @property
    def rates(self) -> tuple[float, ...]:
        return tuple(d.rate for d in self.dissipators)


def vectorize(mat: np.ndarray) -> np.ndarray:
    return np.asarray(mat, dtype=np.complex128).flatten(order="F")


def unvectorize(vec: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(vec, dtype=np.complex128).reshape((d, d), order="F")


def left_mult_superop(op: Operator) -> sp.csr_matrix:
    """Superoperator of ``sigma -> op sigma`` under column stacking."""
    d = op.space.dim
    return sp.kron(sp.identity(d, format="csr"), op.matrix, format="csr")


def right_mult_superop(op: Operator) -> sp.csr_matrix:
    """Superoperator of ``sigma -> sigma op`` under column stacking."""
    d = op.space.dim
    return sp.kron(op.matrix.transpose(), sp.identity(d, format="csr"), format="csr")


class Liouvillian:
    """Sparse ``d^2 x d^2`` generator acting on column-stacked matrices."""

    def __init__(self, me: MasterEquation, superop: sp.csr_matrix):
        self.me = me
        self.superop = superop
        self.dim = me.space.dim
        self._lu = None  # steady-state factorization, built on demand
        self._resolvent_cache: dict[complex, spla.SuperLU] = {}
        self._eig = None

    @property
    def space(self) -> CompositeSpace:
        return self.me.space

    def apply(self, mat: np.ndarray) -> np.ndarray:
        """Evaluate the generator on a dense ``d x d`` matrix."""
        return unvectorize(self.superop @ vectorize(mat), self.dim)

    def fro_norm(self) -> float:
        return float(spla.norm(self.superop, "fro"))


def build_liouvillian(me: MasterEquation) -> Liouvillian:
    """Assemble the generator ``i(rho H - H rho) + sum (g/2) L_c(rho)``."""
    d = me.space.dim
    ident = sp.identity(d, format="csr")
    h = me.hamiltonian.matrix
    # i(rho H - H rho) -> i (H.T (x) I - I (x) H)
    superop = 1j * (
        sp.kron(h.transpose(), ident, format="csr")
        - sp.kron(ident, h, format="csr")
    )
    for dis in me.dissipators:
        if dis.rate == 0.0:
            continue
        c = dis.collapse.matrix
        cdc = (c.conjugate().transpose() @ c).tocsr()
        superop = superop + (dis.rate / 2.0) * (
            2.0 * sp.kron(c.conjugate(), c, format="csr")
            - sp.kron(ident, cdc, format="csr")
            - sp.kron(cdc.transpose(), ident, format="csr")
        )
    out = sp.csr_matrix(superop)
    out.sum_duplicates()
    out.sort_indices()
    return Liouvillian(me, out)


@dataclass
class DensityMatrix:
    space: CompositeSpace
    matrix: np.ndarray = field(repr=False)

    HERM_TOL = 1e-10
    TRACE_TOL = 1e-12

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.complex128)
        d = self.space.dim
        if self.matrix.shape != (d, d):
            raise ValueError("density matrix shape does not match space")
        herm = np.abs(self.matrix - self.matrix.conj().T).max()
        scale = max(np.abs(self.matrix).max(), 1e-300)
        if herm > self.HERM_TOL * scale:
            raise ValueError(f"density matrix not Hermitian (defect {herm:.3e})")
        tr = self.matrix.trace()
        if abs(tr - 1.0) > self.TRACE_TOL:
            raise ValueError(f"density matrix trace {tr} != 1")

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)[0])

    def dumps(self) -> str:
        """Coordinate-list dump in the same format as operator dumps."""
        lines = []
        d = self.space.dim
        for c in range(d):
            for r in range(d):
                v = self.matrix[r, c]
                if v != 0:
                    lines.append(f"{r} {c} {v.real:.16e} {v.imag:.16e}")
        lines.sort(key=lambda s: (int(s.split()[0]), int(s.split()[1])))
        return "\n".join(lines) + ("\n" if lines else "")


STEADY_RESIDUAL_RTOL = 1e-10


def steady_state(liou: Liouvillian) -> DensityMatrix:
    """Unique steady state of the generator via one sparse LU solve.

    The row of the ``(0, 0)`` density-matrix element (vectorized index 0)
    is replaced by the trace constraint ``sum_i rho[i, i] = 1``; the
    resulting system is factorized once.  A singular factorization signals
    a non-unique steady state; a large residual signals non-convergence.
    """
    d = liou.dim
    dd = d * d
    if liou._lu is None:
        a = liou.superop.tocoo()
        keep = a.row != 0
        rows = np.concatenate([a.row[keep], np.zeros(d, dtype=a.row.dtype)])
        cols = np.concatenate([a.col[keep], np.arange(d) * (d + 1)])
        data = np.concatenate([a.data[keep], np.ones(d, dtype=np.complex128)])
        constrained = sp.csc_matrix((data, (rows, cols)), shape=(dd, dd))
        try:
            liou._lu = spla.splu(constrained)
        except RuntimeError as exc:
            raise ValueError(f"degenerate steady state ({exc})") from exc
    b = np.zeros(dd, dtype=np.complex128)
    b[0] = 1.0
    x = liou._lu.solve(b)
    residual = np.linalg.norm(liou.superop @ x)
    if not np.isfinite(residual) or residual > STEADY_RESIDUAL_RTOL * liou.fro_norm():
        raise ValueError(
            f"steady state not converged (residual {residual:.3e})"
        )
    rho = unvectorize(x, d)
    rho = (rho + rho.conj().T) / 2.0
    rho = rho / rho.trace().real
    return DensityMatrix(liou.space, rho)


def expectation(rho: DensityMatrix, op: Operator) -> complex:
    """``Tr[A rho]`` for a sparse operator and a dense density matrix."""
    if rho.space != op.space:
        raise ValueError("operator and state act on different spaces")
    return complex(op.matrix.multiply(rho.matrix.T).sum())
