"""Frequency-filtered N-photon correlations via weakly coupled sensors.

Each sensor is a two-level system at frequency ``omega_i`` with linewidth
``Gamma_i``, tunnel-coupled to the probed mode with strength
``epsilon_i``.  In the vanishing-coupling limit the normalized sensor
intensity correlations equal the frequency- and time-resolved photon
correlations of the probed mode; couplings are kept small enough
(``epsilon_i << sqrt(Gamma_i gamma_Q / 2)``, with ``gamma_Q`` the
smallest nonzero system rate) that back-action stays at next-to-leading
order, and an epsilon-halving loop provides the convergence check.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import hilbert
from .hilbert import Operator
from .liouville import (
    Dissipator,
    DensityMatrix,
    Liouvillian,
    MasterEquation,
    build_liouvillian,
    expectation,
    steady_state,
)
from .regression import (
    DEFAULT_RTOL,
    DelayGrid,
    LiouvilleVector,
    propagate,
    propagate_grid,
)

__all__ = [
    "SensorSpec",
    "SensedSystem",
    "CorrelationResult",
    "SensorStarved",
    "EpsilonTooLarge",
    "attach_sensors",
    "gn_zero_delay",
    "gn_at_delays",
    "gn_delays",
    "sensor_spectrum",
    "converge_epsilon",
]

DEFAULT_CHI = 1e-2
MAX_SENSORS = 4
POPULATION_CEILING = 1e-3
POPULATION_FLOOR = 1e-30
MAX_HALVINGS = 6


class SensorStarved(ValueError):
    """No emission reaches a sensor (population below the floor)."""


class EpsilonTooLarge(ValueError):
    """A sensor population exceeds the weak-coupling ceiling."""


@dataclass(frozen=True)
class SensorSpec:
    """One sensor: frequency, linewidth and optional explicit coupling.

    Frequencies are relative to the rotating-frame origin of the probed
    model.  When ``epsilon`` is omitted it is chosen automatically as
    ``chi * sqrt(gamma * gamma_Q / 2)`` at attach time.
    """

    omega: float
    gamma: float
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("sensor linewidth must be > 0")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("sensor coupling must be > 0 when given")


@dataclass
class CorrelationResult:
    """A correlation value with its provenance.

    ``convergence_estimate`` is the relative change under the most recent
    epsilon halving (``None`` when no halving was performed).
    """

    value: float
    epsilon_used: tuple[float, ...]
    populations: tuple[float, ...]
    convergence_estimate: Optional[float] = None
    tau: Optional[tuple[float, ...]] = None


class SensedSystem:
    """A base master equation enlarged by one qubit per sensor."""

    def __init__(self, base: MasterEquation, probe: Operator,
                 sensors: tuple[SensorSpec, ...], enlarged: MasterEquation,
                 gamma_q: float):
        self.base = base
        self.probe = probe
        self.sensors = sensors
        self.enlarged = enlarged
        self.gamma_q = gamma_q
        space = enlarged.space
        self._labels = [f"sensor{i + 1}" for i in range(len(sensors))]
        self.sigma_ops = tuple(
            hilbert.annihilator(space, lb) for lb in self._labels
        )
        self.n_ops = tuple(op.dag() @ op for op in self.sigma_ops)
        self._liou: Optional[Liouvillian] = None
        self._rho: Optional[DensityMatrix] = None

    @property
    def n_sensors(self) -> int:
        return len(self.sensors)

    def liouvillian(self) -> Liouvillian:
        if self._liou is None:
            self._liou = build_liouvillian(self.enlarged)
        return self._liou

    def index_amplitudes(self) -> np.ndarray:
        """Per-Hilbert-index magnitude estimates for the graded solve.

        Each excited sensor index contributes ``sqrt(<n_i>)`` with
        ``<n_i>`` taken from a cheap single-sensor steady state (the
        populations agree with the full system at leading order, which is
        all the rescaling needs).
        """
        n = self.n_sensors
        d = self.enlarged.space.dim
        amps = np.ones(d)
        idx = np.arange(d) % (2**n)
        for i, spec in enumerate(self.sensors):
            single = attach_sensors(self.base, self.probe, (spec,))
            pop = steady_state(single.liouvillian())
            p = float(expectation(pop, single.n_ops[0]).real)
            if p < POPULATION_FLOOR:
                raise SensorStarved(
                    f"sensor starved (no emission at omega_{i + 1} = "
                    f"{spec.omega:g})"
                )
            s_i = min(max(np.sqrt(p), 1e-15), 1.0)
            excited = ((idx >> (n - 1 - i)) & 1).astype(bool)
            amps[excited] *= s_i
        return amps

    def steady(self) -> DensityMatrix:
        if self._rho is None:
            if self.n_sensors == 1:
                self._rho = steady_state(self.liouvillian())
            else:
                self._rho = graded_steady_state(
                    self.liouvillian(), self.index_amplitudes()
                )
        return self._rho

    def populations(self, rho: Optional[DensityMatrix] = None) -> tuple[float, ...]:
        rho = rho or self.steady()
        return tuple(float(expectation(rho, n).real) for n in self.n_ops)

    def with_couplings(self, scale: float) -> "SensedSystem":
        """New system with every sensor coupling multiplied by ``scale``."""
        scaled = tuple(
            replace(s, epsilon=e * scale)
            for s, e in zip(self.sensors, self.epsilons)
        )
        return attach_sensors(self.base, self.probe, scaled)

    @property
    def epsilons(self) -> tuple[float, ...]:
        return tuple(s.epsilon for s in self.sensors)

    def reversed(self) -> "SensedSystem":
        """Sensor roles exchanged (used for negative-delay requests)."""
        return attach_sensors(self.base, self.probe, tuple(reversed(self.sensors)))


def _smallest_rate(me: MasterEquation) -> float:
    rates = [d.rate for d in me.dissipators if d.rate > 0]
    if not rates:
        raise ValueError("system has no nonzero rates; gamma_Q undefined")
    return min(rates)


AMPLITUDE_CLIP = (1e-25, 1.0)


def graded_steady_state(liou: Liouvillian, amplitudes: np.ndarray) -> DensityMatrix:
    """Steady state via a sector-rescaled sparse solve.

    The joint-excitation components of a multi-sensor steady state sit as
    far as ``prod_i <n_i>`` below the leading components, beyond what a
    plain double-precision solve resolves componentwise.  Given per-index
    ``amplitudes`` (roughly the expected magnitude of each Hilbert-space
    index, e.g. ``sqrt(<n_i>)`` per excited sensor), this solves the
    diagonally similarity-transformed system ``(W^-1 A W) x' = W^-1 b``
    with ``W[i + d j] = amplitudes[i] amplitudes[j]``, which is the exact
    same steady state with all sectors brought to comparable scale, and
    maps the solution back.  No perturbative truncation is involved.
    """
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    d = liou.dim
    amplitudes = np.clip(np.asarray(amplitudes, dtype=float), *AMPLITUDE_CLIP)
    w = np.outer(amplitudes, amplitudes).flatten(order="F")

    a = liou.superop.tocoo()
    keep = a.row != 0
    diag_cols = np.arange(d) * (d + 1)
    rows = np.concatenate([a.row[keep], np.zeros(d, dtype=a.row.dtype)])
    cols = np.concatenate([a.col[keep], diag_cols])
    data = np.concatenate(
        [a.data[keep] * (w[a.col[keep]] / w[a.row[keep]]),
         w[diag_cols].astype(np.complex128)]
    )
    constrained = sp.csc_matrix((data, (rows, cols)), shape=(d * d, d * d))
    b = np.zeros(d * d, dtype=np.complex128)
    b[0] = 1.0
    try:
        lu = spla.splu(constrained)
    except RuntimeError as exc:
        raise ValueError(f"degenerate steady state ({exc})") from exc
    x = w * lu.solve(b)
    residual = np.linalg.norm(liou.superop @ x)
    from .liouville import STEADY_RESIDUAL_RTOL, unvectorize

    if not np.isfinite(residual) or residual > STEADY_RESIDUAL_RTOL * liou.fro_norm():
        raise ValueError(f"steady state not converged (residual {residual:.3e})")
    rho = unvectorize(x, d)
    rho = (rho + rho.conj().T) / 2.0
    rho = rho / rho.trace().real
    return DensityMatrix(liou.space, rho)


def attach_sensors(me: MasterEquation, probe: Operator,
                   sensors: Sequence[SensorSpec],
                   chi: float = DEFAULT_CHI) -> SensedSystem:
    """Append one sensor qubit per spec and wire the tunnelling terms.

    The enlarged Hamiltonian gains ``omega_i n_i + epsilon_i (a s_i_dag +
    a_dag s_i)`` per sensor and the dissipators gain ``(Gamma_i/2)
    L_{s_i}``.  Couplings violating the weak-coupling bound are rejected.
    """
    sensors = tuple(sensors)
    if not 1 <= len(sensors) <= MAX_SENSORS:
        raise ValueError(f"between 1 and {MAX_SENSORS} sensors supported")
    if probe.space != me.space:
        raise ValueError("probe operator does not act on the system space")
    gamma_q = _smallest_rate(me)

    resolved = []
    for i, s in enumerate(sensors):
        bound = np.sqrt(s.gamma * gamma_q / 2.0)
        eps = s.epsilon if s.epsilon is not None else chi * bound
        if eps >= bound:
            raise ValueError(
                f"sensor back-action regime: epsilon {eps:.3e} >= "
                f"sqrt(Gamma_{i + 1} gamma_Q / 2) = {bound:.3e}"
            )
        resolved.append(replace(s, epsilon=eps))
    resolved = tuple(resolved)

    labels = [f"sensor{i + 1}" for i in range(len(sensors))]
    space = hilbert.make_space(
        list(me.space.factors) + [hilbert.qubit(lb) for lb in labels]
    )

    def lift(op: Operator) -> Operator:
        import scipy.sparse as sp

        mat = sp.kron(op.matrix, sp.identity(2 ** len(sensors), format="csr"),
                      format="csr")
        return Operator(space, mat)

    h = lift(me.hamiltonian)
    a = lift(probe)
    dissipators = [Dissipator(d.rate, lift(d.collapse)) for d in me.dissipators]
    for lb, s in zip(labels, resolved):
        varsigma = hilbert.annihilator(space, lb)
        h = h + s.omega * (varsigma.dag() @ varsigma)
        h = h + s.epsilon * (a @ varsigma.dag() + a.dag() @ varsigma)
        dissipators.append(Dissipator(s.gamma, varsigma))

    enlarged = MasterEquation(space, h, tuple(dissipators))
    sensed = SensedSystem(me, probe, resolved, enlarged, gamma_q)
    return sensed


def _checked_populations(ss: SensedSystem, rho: DensityMatrix) -> tuple[float, ...]:
    pops = ss.populations(rho)
    for i, p in enumerate(pops):
        if p < POPULATION_FLOOR:
            raise SensorStarved(
                f"sensor starved (no emission at omega_{i + 1} = "
                f"{ss.sensors[i].omega:g})"
            )
        if p > POPULATION_CEILING:
            raise EpsilonTooLarge(
                f"epsilon too large (sensor {i + 1} population {p:.2e})"
            )
    return pops


def gn_zero_delay(ss: SensedSystem) -> CorrelationResult:
    """``g^(N)(0) = <n_1 ... n_N> / (<n_1> ... <n_N>)`` in steady state."""
    rho = ss.steady()
    pops = _checked_populations(ss, rho)
    joint = ss.n_ops[0]
    for n in ss.n_ops[1:]:
        joint = joint @ n
    value = float(expectation(rho, joint).real) / float(np.prod(pops))
    return CorrelationResult(
        value=max(value, 0.0),
        epsilon_used=ss.epsilons,
        populations=pops,
    )


def _sandwich_seed(ss: SensedSystem, rho: DensityMatrix, idx: int,
                   mat: Optional[np.ndarray] = None) -> np.ndarray:
    s = ss.sigma_ops[idx].matrix
    base = rho.matrix if mat is None else mat
    return s @ base @ s.conjugate().transpose().toarray()


def gn_at_delays(ss: SensedSystem, delays: Sequence[float],
                 rtol: float = DEFAULT_RTOL) -> CorrelationResult:
    """One correlation at detection times ``0 <= tau_1 <= ... <= tau_{N-1}``
    measured from the first detection (sensor-list order).

    Evaluated as the nested sandwich: the first click projects with
    ``s_1 . s_1_dag``, each intermediate sensor clicks after its delay
    increment, and the last sensor contributes its population operator.
    """
    n = ss.n_sensors
    delays = [float(t) for t in delays]
    if n < 2:
        raise ValueError("delayed correlations need at least two sensors")
    if len(delays) != n - 1:
        raise ValueError(f"expected {n - 1} delays for {n} sensors")
    if any(t < 0 for t in delays) or any(
        b < a for a, b in zip(delays, delays[1:])
    ):
        raise ValueError("delays must be sorted and >= 0")

    rho = ss.steady()
    pops = _checked_populations(ss, rho)
    liou = ss.liouvillian()

    sigma = LiouvilleVector(ss.enlarged.space, _sandwich_seed(ss, rho, 0))
    t_prev = 0.0
    for k in range(1, n - 1):
        sigma = propagate(liou, sigma, delays[k - 1] - t_prev, rtol)
        t_prev = delays[k - 1]
        sigma = LiouvilleVector(
            ss.enlarged.space, _sandwich_seed(ss, rho, k, sigma.matrix)
        )
    sigma = propagate(liou, sigma, delays[-1] - t_prev, rtol)
    raw = float(np.real((ss.n_ops[-1].matrix @ sigma.matrix).trace()))
    value = raw / float(np.prod(pops))
    return CorrelationResult(
        value=max(value, 0.0),
        epsilon_used=ss.epsilons,
        populations=pops,
        tau=tuple(delays),
    )


def gn_delays(ss: SensedSystem, taus: Sequence[float],
              rtol: float = DEFAULT_RTOL) -> list[CorrelationResult]:
    """Correlations over a sorted grid of scalar delays.

    For two sensors the grid is the delay of the second click and the
    evolution marches through the grid reusing the previous state.  For
    ``N > 2`` sensors a grid value ``tau`` means uniformly spaced clicks
    at ``0, tau, 2 tau, ...``.  Negative entries are answered by
    exchanging sensor roles and evaluating at ``|tau|``; the grid itself
    must be sorted (unsorted input is rejected, not reordered).
    """
    taus = [float(t) for t in taus]
    if ss.n_sensors < 2:
        raise ValueError("delayed correlations need at least two sensors")
    if any(b < a for a, b in zip(taus, taus[1:])):
        raise ValueError("delay grid must be sorted")

    neg = [-t for t in taus if t < 0][::-1]
    pos = [t for t in taus if t >= 0]
    results: dict[float, CorrelationResult] = {}

    def fill(system: SensedSystem, values: list[float], sign: float):
        if not values:
            return
        if system.n_sensors == 2:
            rho = system.steady()
            pops = _checked_populations(system, rho)
            liou = system.liouvillian()
            seed = LiouvilleVector(
                system.enlarged.space, _sandwich_seed(system, rho, 0)
            )
            norm = float(np.prod(pops))
            n_last = system.n_ops[-1].matrix
            for tau, sig in propagate_grid(
                liou, seed, DelayGrid(tuple(values), rtol)
            ):
                raw = float(np.real((n_last @ sig.matrix).trace()))
                results[sign * tau] = CorrelationResult(
                    value=max(raw / norm, 0.0),
                    epsilon_used=system.epsilons,
                    populations=pops,
                    tau=(sign * tau,),
                )
        else:
            for tau in values:
                ticks = [k * tau for k in range(1, system.n_sensors)]
                res = gn_at_delays(system, ticks, rtol)
                res.tau = (sign * tau,)
                results[sign * tau] = res

    fill(ss, pos, 1.0)
    if neg:
        fill(ss.reversed(), neg, -1.0)
    return [results[t] for t in taus]


def sensor_spectrum(me: MasterEquation, probe: Operator, omegas, gamma: float,
                    chi: float = DEFAULT_CHI, return_flags: bool = False):
    """Physical spectrum from single-sensor populations.

    ``S(omega) = Gamma <n_1> / (2 pi epsilon^2)`` per grid point.  Starved
    grid points (spectral nulls) yield exactly 0 with a raised flag
    instead of aborting the sweep.
    """
    values = []
    flags = []
    for w in omegas:
        ss = attach_sensors(me, probe, (SensorSpec(float(w), gamma),), chi=chi)
        rho = ss.steady()
        pop = ss.populations(rho)[0]
        if pop > POPULATION_CEILING:
            raise EpsilonTooLarge(
                f"epsilon too large (sensor population {pop:.2e})"
            )
        if pop < POPULATION_FLOOR:
            values.append(0.0)
            flags.append(True)
            continue
        eps = ss.epsilons[0]
        values.append(float(gamma * pop / (2.0 * np.pi * eps**2)))
        flags.append(False)
    if return_flags:
        return values, flags
    return values


def converge_epsilon(computation: Callable[[float], CorrelationResult],
                     tol: float = 1e-3) -> CorrelationResult:
    """Halve all couplings until the value moves by less than ``tol``.

    ``computation`` maps a coupling scale factor (1, 1/2, 1/4, ...) to a
    :class:`CorrelationResult`.  Gives up after six halvings.
    """
    if tol <= 0:
        raise ValueError("tolerance must be > 0")
    prev = computation(1.0)
    history = [prev.value]
    for k in range(1, MAX_HALVINGS + 1):
        cur = computation(0.5**k)
        history.append(cur.value)
        denom = max(abs(cur.value), 1e-300)
        rel = abs(cur.value - prev.value) / denom
        if rel < tol:
            cur.convergence_estimate = rel
            return cur
        prev = cur
    raise RuntimeError(
        f"epsilon not converged after {MAX_HALVINGS} halvings; "
        f"values: {history}"
    )
