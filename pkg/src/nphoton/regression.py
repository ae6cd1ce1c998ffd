"""Liouville-space propagation and multi-time correlators.

The quantum regression theorem reduces every multi-time correlator used
here to the action of ``exp(L tau)`` on an operator seed.  That action is
computed by adaptive ODE integration of ``d sigma/d tau = L(sigma)`` (the
jitted Dormand-Prince kernel), never by a dense matrix exponential; if the
explicit stepper exhausts its stability budget the propagation escalates
to an implicit BDF solve on the real embedding with the sparse generator
as Jacobian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import kernels
from .hilbert import Operator
from .liouville import DensityMatrix, Liouvillian, unvectorize, vectorize

__all__ = [
    "LiouvilleVector",
    "DelayGrid",
    "propagate",
    "propagate_grid",
    "two_time_sandwich",
    "colorblind_g2",
]

DEFAULT_RTOL = 1e-8
ATOL_FLOOR_FACTOR = 1e-12
MAX_EXPLICIT_STEPS = 3_000_000


@dataclass
class LiouvilleVector:
    """A general operator seed evolving under the Liouvillian."""

    space: object
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.complex128)
        d = self.space.dim
        if self.matrix.shape != (d, d):
            raise ValueError("matrix shape does not match space")

    @classmethod
    def from_density(cls, rho: DensityMatrix) -> "LiouvilleVector":
        return cls(rho.space, rho.matrix.copy())

    def trace(self) -> complex:
        return complex(self.matrix.trace())

    def fro_norm(self) -> float:
        return float(np.linalg.norm(self.matrix))


@dataclass(frozen=True)
class DelayGrid:
    """Sorted non-negative delays plus the propagation tolerance."""

    delays: tuple[float, ...]
    rtol: float = DEFAULT_RTOL

    def __post_init__(self):
        object.__setattr__(self, "delays", tuple(float(t) for t in self.delays))
        if not self.delays:
            raise ValueError("delay grid is empty")
        if self.delays[0] < 0:
            raise ValueError("delays must be >= 0")
        if any(b < a for a, b in zip(self.delays, self.delays[1:])):
            raise ValueError("delays must be non-decreasing")


def _bdf_segment(liou: Liouvillian, y: np.ndarray, t0: float, t1: float,
                 rtol: float, atol: float) -> np.ndarray:
    """Implicit fallback for stiffness-dominated spans (real embedding)."""
    lr = kernels.real_embedding(liou.superop)
    y_real = np.concatenate([y.real, y.imag])
    sol = solve_ivp(
        lambda _t, v: lr @ v,
        (t0, t1),
        y_real,
        method="BDF",
        jac=lr,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise RuntimeError(f"propagation failed ({sol.message})")
    out = sol.y[:, -1]
    n = y.shape[0]
    return out[:n] + 1j * out[n:]


def _advance(liou: Liouvillian, y: np.ndarray, t0: float, t1: float,
             rtol: float, atol: float, h0: float) -> tuple[np.ndarray, float]:
    ynew, h_last, _nsteps, status = kernels.expm_action(
        liou.superop, y, (t0, t1), rtol, atol, h0=h0,
        max_steps=MAX_EXPLICIT_STEPS,
    )
    if status == kernels.OK:
        return ynew, h_last
    if status == kernels.NON_FINITE:
        raise RuntimeError("propagation diverged (non-finite values)")
    if status in (kernels.MAX_STEPS, kernels.STEP_UNDERFLOW):
        # Stability-limited explicit stepping; hand the span to BDF.
        return _bdf_segment(liou, y, t0, t1, rtol, atol), 0.0
    raise RuntimeError("propagation failed")


def propagate(liou: Liouvillian, sigma: LiouvilleVector, tau: float,
              rtol: float = DEFAULT_RTOL) -> LiouvilleVector:
    """Return ``exp(L tau) sigma`` for ``tau >= 0``.

    ``tau = 0`` returns a copy of the seed.  The absolute tolerance floor
    is tied to the seed scale, ``1e-12 * ||sigma(0)||_F``, so that seeds
    many orders of magnitude below unit trace keep their relative
    accuracy.
    """
    if tau < 0:
        raise ValueError("propagation requires tau >= 0")
    if sigma.space != liou.space:
        raise ValueError("seed and Liouvillian act on different spaces")
    if tau == 0.0:
        return LiouvilleVector(sigma.space, sigma.matrix.copy())
    y = vectorize(sigma.matrix)
    atol = ATOL_FLOOR_FACTOR * max(np.linalg.norm(y), 1e-300)
    y, _h = _advance(liou, y, 0.0, float(tau), rtol, atol, 0.0)
    if not np.all(np.isfinite(y)):
        raise RuntimeError("propagation diverged (non-finite values)")
    return LiouvilleVector(sigma.space, unvectorize(y, liou.dim))


def propagate_grid(liou: Liouvillian, sigma: LiouvilleVector, grid: DelayGrid):
    """Checkpointed marching over a delay grid.

    The state at each grid point seeds the next segment, so the total cost
    scales with the final delay rather than the sum of delays.  Yields
    ``(tau, LiouvilleVector)`` in grid order.
    """
    if sigma.space != liou.space:
        raise ValueError("seed and Liouvillian act on different spaces")
    y = vectorize(sigma.matrix)
    atol = ATOL_FLOOR_FACTOR * max(np.linalg.norm(y), 1e-300)
    t = 0.0
    h = 0.0
    for tau in grid.delays:
        if tau > t:
            y, h = _advance(liou, y, t, tau, grid.rtol, atol, h)
            t = tau
        if not np.all(np.isfinite(y)):
            raise RuntimeError("propagation diverged (non-finite values)")
        yield tau, LiouvilleVector(sigma.space, unvectorize(y, liou.dim))


def two_time_sandwich(liou: Liouvillian, rho_ss: DensityMatrix, left: Operator,
                      mid: Operator, right: Operator, tau: float,
                      rtol: float = DEFAULT_RTOL) -> complex:
    """``Tr[mid exp(L tau)(right rho_ss left)]`` via the regression theorem."""
    seed = LiouvilleVector(
        rho_ss.space, right.matrix @ rho_ss.matrix @ left.matrix.toarray()
    )
    evolved = propagate(liou, seed, tau, rtol)
    return complex((mid.matrix @ evolved.matrix).trace())


def colorblind_g2(liou: Liouvillian, rho_ss: DensityMatrix, a: Operator,
                  grid: DelayGrid) -> list[float]:
    """Unfiltered ``g2(tau) = <a'a' a a>/(n)^2`` on the delay grid."""
    n_op = a.dag() @ a
    nbar = np.real((n_op.matrix @ rho_ss.matrix).trace())
    if nbar <= 0 or not np.isfinite(nbar):
        raise ValueError("normalization undefined (zero population)")
    seed = LiouvilleVector(
        rho_ss.space, a.matrix @ rho_ss.matrix @ a.matrix.conjugate().transpose().toarray()
    )
    out = []
    for _tau, sig in propagate_grid(liou, seed, grid):
        out.append(float(np.real((n_op.matrix @ sig.matrix).trace()) / nbar**2))
    return out
