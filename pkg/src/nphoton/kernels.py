"""Hot numerical kernels with numba and pure-numpy twins.

Two kernels dominate runtime outside of sparse LU factorizations (which
stay in SuperLU via scipy): the adaptive Dormand-Prince propagation of
Liouville vectors, and the elementwise pole-weight matrices used by the
integral-method filter machinery.  Each kernel exists in two builds:

* a ``numba.njit`` build (default), and
* a pure numpy/scipy build with identical step-control logic.

Set the environment variable ``NPHOTON_NO_NUMBA=1`` to select the numpy
path at import time.  ``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.sparse as sp

NO_NUMBA = os.getenv("NPHOTON_NO_NUMBA", "").strip() not in ("", "0", "false", "False")

if not NO_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        numba = None
        NO_NUMBA = True
else:
    numba = None

USING_NUMBA = not NO_NUMBA

# Integrator status codes shared by both builds.
OK = 0
MAX_STEPS = 1
STEP_UNDERFLOW = 2
NON_FINITE = 3

# Dormand-Prince 5(4) tableau, identical to the classic RK45 pair.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
        [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    ]
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# Difference between the 5th and embedded 4th order weights (7 stages, FSAL).
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_SAFETY = 0.9


def _csr_matvec_py(data, indices, indptr, x, out):
    n = out.shape[0]
    for i in range(n):
        acc = 0.0 + 0.0j
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        out[i] = acc


def _rk45_csr_py(data, indices, indptr, y, t_span, rtol, atol, h0, max_steps):
    """Advance ``y' = A y`` over ``t_span`` with adaptive Dormand-Prince.

    Returns ``(y_end, h_last, n_steps, status)``.  ``y`` is modified in
    place; ``atol`` is a scalar absolute floor applied per component.
    """
    n = y.shape[0]
    k = np.empty((7, n), dtype=np.complex128)
    ytmp = np.empty(n, dtype=np.complex128)
    yerr = np.empty(n, dtype=np.complex128)
    ynew = np.empty(n, dtype=np.complex128)

    t = t_span[0]
    t_end = t_span[1]
    span = t_end - t
    if span <= 0.0:
        return y, h0, 0, OK

    _csr_matvec_py(data, indices, indptr, y, k[0])

    h = h0
    if h <= 0.0:
        # Hairer-style cheap initial step guess from the first derivative.
        d0 = 0.0
        d1 = 0.0
        for i in range(n):
            sc = atol + rtol * abs(y[i])
            d0 += abs(y[i] / sc) ** 2
            d1 += abs(k[0][i] / sc) ** 2
        d0 = np.sqrt(d0 / n)
        d1 = np.sqrt(d1 / n)
        if d1 > 1e-300:
            h = 0.01 * d0 / d1
        else:
            h = span * 1e-3
        if h > span:
            h = span
        if h <= 0.0 or not np.isfinite(h):
            h = span * 1e-6

    nsteps = 0
    while t < t_end:
        if nsteps >= max_steps:
            return y, h, nsteps, MAX_STEPS
        if h < 1e-14 * max(abs(t), abs(t_end)) + 1e-300:
            return y, h, nsteps, STEP_UNDERFLOW
        if t + h > t_end:
            h = t_end - t

        for s in range(1, 6):
            for i in range(n):
                acc = 0.0 + 0.0j
                for j in range(s):
                    aij = _A[s, j]
                    if aij != 0.0:
                        acc += aij * k[j][i]
                ytmp[i] = y[i] + h * acc
            _csr_matvec_py(data, indices, indptr, ytmp, k[s])

        for i in range(n):
            acc = 0.0 + 0.0j
            for j in range(6):
                bj = _B[j]
                if bj != 0.0:
                    acc += bj * k[j][i]
            ynew[i] = y[i] + h * acc
        _csr_matvec_py(data, indices, indptr, ynew, k[6])

        err = 0.0
        for i in range(n):
            acc = 0.0 + 0.0j
            for j in range(7):
                ej = _E[j]
                if ej != 0.0:
                    acc += ej * k[j][i]
            yerr[i] = h * acc
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            err += abs(yerr[i] / sc) ** 2
        err = np.sqrt(err / n)

        if not np.isfinite(err):
            return y, h, nsteps, NON_FINITE

        if err <= 1.0:
            t += h
            for i in range(n):
                y[i] = ynew[i]
                k[0][i] = k[6][i]  # FSAL
            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err ** -0.2))
            h *= factor
        else:
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
        nsteps += 1

    return y, h, nsteps, OK


def _pole_phi_py(z):
    # (exp(z) - 1)/z with a series branch for small |z|.
    if abs(z) < 1e-6:
        return 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    return (np.exp(z) - 1.0) / z


def _pole_dphi_py(z):
    # d/dz[(exp(z)-1)/z], series branch for small |z|.
    if abs(z) < 1e-4:
        return 0.5 + z / 3.0 + z * z / 8.0 + z * z * z / 30.0
    return ((z - 1.0) * np.exp(z) + 1.0) / (z * z)


def _pole_weights_py(m, tau, omega2, gamma2, degen_tol):
    """Pole weights for the delayed filter integrals.

    Builds the diagonal ``fdiag[p] = e^{-G2 tau}(e^{x_p tau}-1)/x_p`` with
    ``x_p = m_p - i w2 + G2/2`` and the matrix
    ``W[p,q] = (fdiag[p] - bdiag[q])/(x_p - y_q)`` with
    ``y_q = m_q + G2`` and ``bdiag[q] = e^{-G2 tau}(e^{y_q tau}-1)/y_q``,
    switching to the limiting derivative form when ``|x_p - y_q|`` falls
    below ``degen_tol``.  All exponentials are arranged to stay decaying.
    """
    n = m.shape[0]
    shift = -1j * omega2 + gamma2 / 2.0
    egt = np.exp(-gamma2 * tau)
    fdiag = np.empty(n, dtype=np.complex128)
    bdiag = np.empty(n, dtype=np.complex128)
    x = np.empty(n, dtype=np.complex128)
    yv = np.empty(n, dtype=np.complex128)
    for p in range(n):
        xp = m[p] + shift
        x[p] = xp
        if abs(xp * tau) < 1e-6:
            fdiag[p] = egt * tau * _pole_phi_py(xp * tau)
        else:
            # e^{-G2 t}(e^{x t}-1)/x with the decaying combination first
            fdiag[p] = (np.exp((m[p] - 1j * omega2 - gamma2 / 2.0) * tau) - egt) / xp
    for q in range(n):
        yq = m[q] + gamma2
        yv[q] = yq
        if abs(yq * tau) < 1e-6:
            bdiag[q] = egt * tau * _pole_phi_py(yq * tau)
        else:
            bdiag[q] = (np.exp(m[q] * tau) - egt) / yq

    w = np.empty((n, n), dtype=np.complex128)
    for p in range(n):
        for q in range(n):
            dx = x[p] - yv[q]
            if abs(dx) > degen_tol:
                w[p, q] = (fdiag[p] - bdiag[q]) / dx
            else:
                zbar = 0.5 * (x[p] + yv[q]) * tau
                w[p, q] = egt * tau * tau * _pole_dphi_py(zbar)
    return w, fdiag


if USING_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    csr_matvec_numba = _jit(_csr_matvec_py)

    @numba.njit(cache=True, nogil=True)
    def rk45_csr_numba(data, indices, indptr, y, t_span, rtol, atol, h0, max_steps):
        # stage combinations run as contiguous row passes over k
        n = y.shape[0]
        k = np.empty((7, n), dtype=np.complex128)
        ytmp = np.empty(n, dtype=np.complex128)
        ynew = np.empty(n, dtype=np.complex128)
        yerr = np.empty(n, dtype=np.complex128)

        t = t_span[0]
        t_end = t_span[1]
        span = t_end - t
        if span <= 0.0:
            return y, h0, 0, OK

        csr_matvec_numba(data, indices, indptr, y, k[0])

        h = h0
        if h <= 0.0:
            d0 = 0.0
            d1 = 0.0
            for i in range(n):
                sc = atol + rtol * abs(y[i])
                d0 += abs(y[i] / sc) ** 2
                d1 += abs(k[0, i] / sc) ** 2
            d0 = np.sqrt(d0 / n)
            d1 = np.sqrt(d1 / n)
            if d1 > 1e-300:
                h = 0.01 * d0 / d1
            else:
                h = span * 1e-3
            if h > span:
                h = span
            if h <= 0.0 or not np.isfinite(h):
                h = span * 1e-6

        nsteps = 0
        while t < t_end:
            if nsteps >= max_steps:
                return y, h, nsteps, MAX_STEPS
            if h < 1e-14 * max(abs(t), abs(t_end)) + 1e-300:
                return y, h, nsteps, STEP_UNDERFLOW
            if t + h > t_end:
                h = t_end - t

            for s in range(1, 6):
                for i in range(n):
                    ytmp[i] = y[i]
                for j in range(s):
                    c = h * _A[s, j]
                    if c != 0.0:
                        kj = k[j]
                        for i in range(n):
                            ytmp[i] += c * kj[i]
                csr_matvec_numba(data, indices, indptr, ytmp, k[s])

            for i in range(n):
                ynew[i] = y[i]
            for j in range(6):
                c = h * _B[j]
                if c != 0.0:
                    kj = k[j]
                    for i in range(n):
                        ynew[i] += c * kj[i]
            csr_matvec_numba(data, indices, indptr, ynew, k[6])

            for i in range(n):
                yerr[i] = 0.0 + 0.0j
            for j in range(7):
                c = h * _E[j]
                if c != 0.0:
                    kj = k[j]
                    for i in range(n):
                        yerr[i] += c * kj[i]
            err = 0.0
            for i in range(n):
                sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
                err += abs(yerr[i] / sc) ** 2
            err = np.sqrt(err / n)

            if not np.isfinite(err):
                return y, h, nsteps, NON_FINITE

            if err <= 1.0:
                t += h
                for i in range(n):
                    y[i] = ynew[i]
                    k[0, i] = k[6, i]
                if err == 0.0:
                    factor = _MAX_FACTOR
                else:
                    factor = min(
                        _MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err ** -0.2)
                    )
                h *= factor
            else:
                h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            nsteps += 1

        return y, h, nsteps, OK

    @numba.njit(cache=True, nogil=True)
    def pole_weights_numba(m, tau, omega2, gamma2, degen_tol):
        n = m.shape[0]
        shift = -1j * omega2 + gamma2 / 2.0
        egt = np.exp(-gamma2 * tau)
        fdiag = np.empty(n, dtype=np.complex128)
        bdiag = np.empty(n, dtype=np.complex128)
        x = np.empty(n, dtype=np.complex128)
        yv = np.empty(n, dtype=np.complex128)
        for p in range(n):
            xp = m[p] + shift
            x[p] = xp
            z = xp * tau
            if abs(z) < 1e-6:
                fdiag[p] = egt * tau * (1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0)
            else:
                fdiag[p] = (
                    np.exp((m[p] - 1j * omega2 - gamma2 / 2.0) * tau) - egt
                ) / xp
        for q in range(n):
            yq = m[q] + gamma2
            yv[q] = yq
            z = yq * tau
            if abs(z) < 1e-6:
                bdiag[q] = egt * tau * (1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0)
            else:
                bdiag[q] = (np.exp(m[q] * tau) - egt) / yq

        w = np.empty((n, n), dtype=np.complex128)
        for p in range(n):
            for q in range(n):
                dx = x[p] - yv[q]
                if abs(dx) > degen_tol:
                    w[p, q] = (fdiag[p] - bdiag[q]) / dx
                else:
                    z = 0.5 * (x[p] + yv[q]) * tau
                    if abs(z) < 1e-4:
                        dphi = 0.5 + z / 3.0 + z * z / 8.0 + z * z * z / 30.0
                    else:
                        dphi = ((z - 1.0) * np.exp(z) + 1.0) / (z * z)
                    w[p, q] = egt * tau * tau * dphi
        return w, fdiag


def rk45_csr_numpy(matrix, y, t_span, rtol, atol, h0, max_steps):
    """Pure numpy/scipy twin of the jitted stepper (same control logic).

    ``matrix`` is a ``scipy.sparse`` CSR matrix; the step loop runs in
    Python with vectorized stage combinations.
    """
    n = y.shape[0]
    k = np.empty((7, n), dtype=np.complex128)

    t, t_end = t_span
    if t_end - t <= 0.0:
        return y, h0, 0, OK

    k[0] = matrix @ y

    h = h0
    if h <= 0.0:
        sc = atol + rtol * np.abs(y)
        d0 = np.sqrt(np.mean(np.abs(y / sc) ** 2))
        d1 = np.sqrt(np.mean(np.abs(k[0] / sc) ** 2))
        h = 0.01 * d0 / d1 if d1 > 1e-300 else (t_end - t) * 1e-3
        h = min(h, t_end - t)
        if h <= 0.0 or not np.isfinite(h):
            h = (t_end - t) * 1e-6

    nsteps = 0
    while t < t_end:
        if nsteps >= max_steps:
            return y, h, nsteps, MAX_STEPS
        if h < 1e-14 * max(abs(t), abs(t_end)) + 1e-300:
            return y, h, nsteps, STEP_UNDERFLOW
        if t + h > t_end:
            h = t_end - t

        for s in range(1, 6):
            ytmp = y + h * (_A[s, :s] @ k[:s])
            k[s] = matrix @ ytmp

        ynew = y + h * (_B @ k[:6])
        k[6] = matrix @ ynew

        yerr = h * (_E @ k)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        err = np.sqrt(np.mean(np.abs(yerr / sc) ** 2))

        if not np.isfinite(err):
            return y, h, nsteps, NON_FINITE

        if err <= 1.0:
            t += h
            y = ynew
            k[0] = k[6]
            factor = _MAX_FACTOR if err == 0.0 else min(
                _MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            )
            h *= factor
        else:
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
        nsteps += 1

    return y, h, nsteps, OK


def pole_weights_numpy(m, tau, omega2, gamma2, degen_tol):
    """Vectorized twin of the jitted pole-weight kernel."""
    shift = -1j * omega2 + gamma2 / 2.0
    egt = np.exp(-gamma2 * tau)
    x = m + shift
    yv = m + gamma2

    zx = x * tau
    small = np.abs(zx) < 1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        fdiag = (np.exp((m - 1j * omega2 - gamma2 / 2.0) * tau) - egt) / x
    series = egt * tau * (1.0 + zx / 2.0 + zx**2 / 6.0 + zx**3 / 24.0)
    fdiag = np.where(small, series, fdiag)

    zy = yv * tau
    small = np.abs(zy) < 1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        bdiag = (np.exp(m * tau) - egt) / yv
    series = egt * tau * (1.0 + zy / 2.0 + zy**2 / 6.0 + zy**3 / 24.0)
    bdiag = np.where(small, series, bdiag)

    dx = x[:, None] - yv[None, :]
    degen = np.abs(dx) <= degen_tol
    with np.errstate(divide="ignore", invalid="ignore"):
        w = (fdiag[:, None] - bdiag[None, :]) / dx
    if degen.any():
        zbar = 0.5 * (x[:, None] + yv[None, :]) * tau
        zb = zbar[degen]
        dphi = np.where(
            np.abs(zb) < 1e-4,
            0.5 + zb / 3.0 + zb**2 / 8.0 + zb**3 / 30.0,
            ((zb - 1.0) * np.exp(zb) + 1.0) / (zb * zb),
        )
        w[degen] = egt * tau * tau * dphi
    return w, fdiag


def expm_action(matrix, y0, t_span, rtol, atol, h0=0.0, max_steps=5_000_000,
                use_numba=None):
    """Propagate ``y' = A y`` across ``t_span``; dispatches on the backend.

    Returns ``(y, h_last, n_steps, status)``.  ``y0`` is not modified.
    """
    if use_numba is None:
        use_numba = USING_NUMBA
    y = np.array(y0, dtype=np.complex128, copy=True)
    span = np.array(t_span, dtype=np.float64)
    if use_numba and USING_NUMBA:
        csr = matrix.tocsr()
        return rk45_csr_numba(
            csr.data.astype(np.complex128),
            csr.indices,
            csr.indptr,
            y,
            span,
            float(rtol),
            float(atol),
            float(h0),
            int(max_steps),
        )
    return rk45_csr_numpy(matrix.tocsr(), y, span, float(rtol), float(atol),
                          float(h0), int(max_steps))


def pole_weights(m, tau, omega2, gamma2, degen_tol, use_numba=None):
    """Dispatching wrapper around the pole-weight kernels."""
    if use_numba is None:
        use_numba = USING_NUMBA
    m = np.asarray(m, dtype=np.complex128)
    if use_numba and USING_NUMBA:
        return pole_weights_numba(m, float(tau), float(omega2), float(gamma2),
                                  float(degen_tol))
    return pole_weights_numpy(m, float(tau), float(omega2), float(gamma2),
                              float(degen_tol))


def real_embedding(matrix):
    """Real 2d x 2d block form of a complex sparse matrix.

    Used by the implicit (BDF) escalation path, which does not support
    complex systems: ``[[Re, -Im], [Im, Re]]`` acting on ``[Re y; Im y]``.
    """
    re = matrix.real
    im = matrix.imag
    return sp.bmat([[re, -im], [im, re]], format="csc")
