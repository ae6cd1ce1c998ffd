"""Integral-method filtered spectra: the independent cross-check.

Works directly in Liouville space: the regression matrix of the correlator
hierarchy corresponds to the Liouvillian, the operators that insert a
creation (annihilation) quantum while keeping normal order correspond to
right multiplication by ``a_dag`` (left multiplication by ``a``), the
stationary correlator vector corresponds to ``rho_ss`` and taking the
first vector element corresponds to the trace:
``<X O Y> = Tr[O (Y rho X)]``.

Every filtered quantity is then a chain of shifted resolvent solves
``R(s) sigma = -(L + s)^{-1} sigma`` interleaved with those
multiplications.  The two-filter correlation at zero delay sums six such
chains plus the filter exchange; the delayed version adds the
eigendecomposition-based ``F(tau)``/``Z(tau)`` insertions.  This module is
deliberately restricted to small systems (dense eigendecompositions); the
sensor method is the production path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from . import kernels
from .hilbert import Operator
from .liouville import (
    DensityMatrix,
    Liouvillian,
    left_mult_superop,
    unvectorize,
    vectorize,
)
from .regression import LiouvilleVector

__all__ = [
    "FilterSpec",
    "EigenLiouvillian",
    "resolvent_apply",
    "filtered_spectrum",
    "s2_zero_delay",
    "s2_tau",
    "eigendecompose",
    "ZERO_DELAY_CHAINS",
]

MAX_EIG_DIM = 4096  # Liouville dimension d^2 allowed for dense work
EIG_RESIDUAL_RTOL = 1e-8
ZERO_EIG_TOL = 1e-9
DEGEN_POLE_RTOL = 1e-8
NEGATIVE_CLAMP = 1e-12


@dataclass(frozen=True)
class FilterSpec:
    """A Lorentzian detector: center frequency and linewidth."""

    omega: float
    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("filter linewidth must be > 0")


class EigenLiouvillian:
    """Dense eigendecomposition ``L = E diag(m) E^{-1}`` with checks."""

    def __init__(self, liou: Liouvillian, e: np.ndarray, m: np.ndarray,
                 e_inv: np.ndarray):
        self.liou = liou
        self.E = e
        self.m = m
        self.E_inv = e_inv

    def to_eigbasis(self, vec: np.ndarray) -> np.ndarray:
        return self.E_inv @ vec

    def from_eigbasis(self, coeffs: np.ndarray) -> np.ndarray:
        return self.E @ coeffs


def eigendecompose(liou: Liouvillian) -> EigenLiouvillian:
    """Dense eigendecomposition, cached on the Liouvillian.

    Raises when the reconstruction residual marks the generator as
    (numerically) defective, and when the near-zero eigenvalue is not
    unique.
    """
    if liou._eig is not None:
        return liou._eig
    dd = liou.dim**2
    if dd > MAX_EIG_DIM:
        raise ValueError(
            f"oracle restricted to small systems (d^2 = {dd} > {MAX_EIG_DIM})"
        )
    dense = liou.superop.toarray()
    m, e = np.linalg.eig(dense)
    try:
        e_inv = np.linalg.inv(e)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"defective Liouvillian ({exc})") from exc
    norm_l = np.linalg.norm(dense)
    residual = np.linalg.norm(dense @ e - e * m[None, :])
    if residual > EIG_RESIDUAL_RTOL * max(norm_l, 1e-300):
        raise ValueError(
            f"defective Liouvillian (eigen residual {residual:.3e})"
        )
    recon = np.linalg.norm(e @ (m[:, None] * e_inv) - dense)
    if recon > EIG_RESIDUAL_RTOL * max(norm_l, 1e-300):
        raise ValueError(
            f"defective Liouvillian (reconstruction residual {recon:.3e})"
        )
    n_zero = int(np.sum(np.abs(m.real) < ZERO_EIG_TOL))
    if n_zero != 1:
        raise ValueError(
            f"steady state not unique ({n_zero} near-zero eigenvalues)"
        )
    liou._eig = EigenLiouvillian(liou, e, m, e_inv)
    return liou._eig


def resolvent_apply(liou: Liouvillian, shift: complex,
                    sigma: LiouvilleVector) -> LiouvilleVector:
    """``-(L + shift I)^{-1} sigma`` by one sparse solve.

    Factorizations are cached per shift on the Liouvillian.  ``shift``
    must have strictly negative real part (guaranteed by positive filter
    linewidths), which keeps the shifted system regular.
    """
    shift = complex(shift)
    if shift.real >= 0:
        raise ValueError(f"resolvent shift must have Re < 0, got {shift}")
    lu = liou._resolvent_cache.get(shift)
    if lu is None:
        dd = liou.dim**2
        import scipy.sparse as sp

        shifted = (liou.superop + shift * sp.identity(dd, format="csr")).tocsc()
        try:
            lu = spla.splu(shifted)
        except RuntimeError as exc:
            raise ValueError(f"resolvent singular at shift {shift} ({exc})")
        liou._resolvent_cache[shift] = lu
    x = lu.solve(-vectorize(sigma.matrix))
    return LiouvilleVector(liou.space, unvectorize(x, liou.dim))


def _t_minus(a: Operator, sigma: np.ndarray) -> np.ndarray:
    return a.matrix @ sigma


def _t_plus(a: Operator, sigma: np.ndarray) -> np.ndarray:
    return sigma @ a.matrix.conjugate().transpose().toarray()


# The six independent chains of the two-filter zero-delay correlation,
# written right-to-left (application order) as (op, shift-key) stages.
# Shift keys are resolved against a concrete filter pair; "Tp"/"Tm" insert
# a creation/annihilation quantum keeping normal order.  The count
# (2N-1)!! 2^(N-1) = 6 for N = 2 is asserted in the tests.
ZERO_DELAY_CHAINS = (
    ("1a", ("Tm", "s_w2_g2", "Tp", "s_p1_m2", "Tm", "s_outer", "Tp")),
    ("1b", ("Tm", "s_w2_g2", "Tm", "s_m1_m2", "Tp", "s_outer", "Tp")),
    ("2a", ("Tp", "s_p1_g1", "Tm", "s_p1_m2", "Tm", "s_outer", "Tp")),
    ("2b", ("Tm", "s_m1_g1", "Tm", "s_m1_m2", "Tp", "s_outer", "Tp")),
    ("3a", ("Tp", "s_p1_g1", "Tm", "s_g1", "Tm", "s_outer", "Tp")),
    ("3b", ("Tm", "s_m1_g1", "Tp", "s_g1", "Tm", "s_outer", "Tp")),
)


def _shift_table(f1: FilterSpec, f2: FilterSpec) -> dict[str, complex]:
    w1, g1 = f1.omega, f1.gamma
    w2, g2 = f2.omega, f2.gamma
    return {
        "s_outer": -1j * w2 - g1 - g2 / 2.0,
        "s_p1_m2": 1j * w1 - 1j * w2 - (g1 + g2) / 2.0,
        "s_m1_m2": -1j * w1 - 1j * w2 - (g1 + g2) / 2.0,
        "s_w2_g2": -1j * w2 - g2 / 2.0,
        "s_p1_g1": 1j * w1 - g1 / 2.0,
        "s_m1_g1": -1j * w1 - g1 / 2.0,
        "s_g1": -g1 + 0j,
    }


def filtered_spectrum(liou: Liouvillian, rho_ss: DensityMatrix, a: Operator,
                      f: FilterSpec, return_flag: bool = False):
    """Physical single-filter spectrum at ``f.omega``.

    ``S = (1/pi) Re Tr[(-(L + (-i w - G/2))^{-1} (a rho)) a_dag]``; tiny
    negative values from roundoff are clamped to 0 (flagged when
    requested).
    """
    seed = LiouvilleVector(rho_ss.space, _t_minus(a, rho_ss.matrix))
    resolved = resolvent_apply(liou, -1j * f.omega - f.gamma / 2.0, seed)
    val = float(np.real(_t_plus(a, resolved.matrix).trace()) / np.pi)
    clamped = False
    if val < 0:
        if val < -NEGATIVE_CLAMP:
            clamped = True
        val = 0.0
    if return_flag:
        return val, clamped
    return val


def _run_chain(liou: Liouvillian, a: Operator, rho_ss: DensityMatrix,
               stages, shifts: dict[str, complex],
               insert_before_last=None) -> complex:
    """Apply one chain right-to-left; optionally insert a superoperator
    callable just before the final normal-ordered insertion."""
    sigma = rho_ss.matrix
    n_stage = len(stages)
    for idx, stage in enumerate(stages):
        last = idx == n_stage - 1
        if last and insert_before_last is not None:
            sigma = insert_before_last(sigma)
        if stage == "Tm":
            sigma = _t_minus(a, sigma)
        elif stage == "Tp":
            sigma = _t_plus(a, sigma)
        else:
            vec = LiouvilleVector(liou.space, sigma)
            sigma = resolvent_apply(liou, shifts[stage], vec).matrix
    return complex(sigma.trace())


def s2_zero_delay(liou: Liouvillian, rho_ss: DensityMatrix, a: Operator,
                  f1: FilterSpec, f2: FilterSpec) -> float:
    """Two-filter correlation at equal detection times.

    Sums the six resolvent chains with prefactor
    ``G1 G2 / ((G1 + G2) (2 pi)^2)``, adds the filter exchange, and
    returns twice the real part of the total.
    """
    total = 0.0 + 0.0j
    for fa, fb in ((f1, f2), (f2, f1)):
        shifts = _shift_table(fa, fb)
        pref = fa.gamma * fb.gamma / ((fa.gamma + fb.gamma) * (2 * np.pi) ** 2)
        for _name, stages in ZERO_DELAY_CHAINS:
            total += pref * _run_chain(liou, a, rho_ss, stages, shifts)
    return float(2.0 * total.real)


def _f_apply(eig: EigenLiouvillian, fdiag: np.ndarray, sigma: np.ndarray):
    d = eig.liou.dim
    coeffs = eig.to_eigbasis(vectorize(sigma))
    return unvectorize(eig.from_eigbasis(fdiag * coeffs), d)


def _z_apply(eig: EigenLiouvillian, w: np.ndarray, g_mat: np.ndarray,
             sigma: np.ndarray):
    d = eig.liou.dim
    coeffs = eig.to_eigbasis(vectorize(sigma))
    return unvectorize(eig.from_eigbasis((w * g_mat) @ coeffs), d)


def s2_tau(liou: Liouvillian, rho_ss: DensityMatrix, a: Operator,
           f1: FilterSpec, f2: FilterSpec, tau: float,
           s2_0: float | None = None) -> float:
    """Two-filter correlation with the second detection delayed by ``tau``.

    Splits into ``e^{-G2 tau}`` times the zero-delay value plus the
    delayed remainder: the six chains re-run with the pole factor
    ``(G1 + G2) F(tau)`` inserted after the final creation insertion
    (cancelling the ``1/(G1 + G2)`` prefactor), plus the two extra chains
    carrying ``Z(tau)``.  ``F`` and ``Z`` share one eigendecomposition and
    one pole-weight kernel; near-degenerate pole pairs switch to the
    analytic limiting form so the result stays continuous in ``omega_2``.
    """
    if tau <= 0:
        raise ValueError("s2_tau requires tau > 0")
    eig = eigendecompose(liou)
    if s2_0 is None:
        s2_0 = s2_zero_delay(liou, rho_ss, a, f1, f2)

    w2, g2 = f2.omega, f2.gamma
    g1 = f1.gamma
    norm_l = np.linalg.norm(eig.m)  # spectral scale of the generator
    w_mat, fdiag = kernels.pole_weights(
        eig.m, tau, w2, g2, DEGEN_POLE_RTOL * max(norm_l, 1e-300)
    )
    tm_super = left_mult_superop(a).toarray()
    g_mat = eig.E_inv @ tm_super @ eig.E
    exp_g2 = float(np.exp(-g2 * tau))

    shifts = _shift_table(f1, f2)
    delta = 0.0 + 0.0j

    # Six delayed chains: prefactor G1 G2 / (2 pi)^2, F(tau) inserted
    # before the final creation insertion.
    pref = g1 * g2 / (2 * np.pi) ** 2
    f_insert = lambda sigma: _f_apply(eig, fdiag, sigma)
    for _name, stages in ZERO_DELAY_CHAINS:
        delta += pref * _run_chain(
            liou, a, rho_ss, stages, shifts, insert_before_last=f_insert
        )

    # The two Z(tau) chains replacing the outer resolvent of the third
    # integration domain.
    z_insert = lambda sigma: _z_apply(eig, w_mat, g_mat, sigma)
    z_chains = (
        ("Tp", "s_p1_g1", "Tm", "s_g1", "Tp"),
        ("Tm", "s_m1_g1", "Tp", "s_g1", "Tp"),
    )
    for stages in z_chains:
        delta += pref * _run_chain(
            liou, a, rho_ss, stages, shifts, insert_before_last=z_insert
        )

    return float(exp_g2 * s2_0 + 2.0 * delta.real)
