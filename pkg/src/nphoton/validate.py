"""Sensor-vs-integral cross checks behind the ``validate`` command.

Each check compares the sensor method against the integral method on the
same master equation and reports the worst relative error together with
its tolerance; the two routes share nothing beyond the Liouvillian.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import models, oracle, sensors
from .liouville import build_liouvillian, steady_state
from .oracle import FilterSpec
from .sensors import SensorSpec, attach_sensors

__all__ = ["CheckRow", "n1_equality", "n2_equality_tau0", "n2_equality_tau",
           "quick_checks", "full_checks"]


@dataclass
class CheckRow:
    name: str
    max_rel_error: float
    tolerance: float
    seconds: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.name}: max rel err {self.max_rel_error:.3e} "
            f"(tol {self.tolerance:.1e}, {self.seconds:.1f}s)"
        )


def _rel_errors(sensed, exact):
    sensed = np.asarray(sensed, dtype=float)
    exact = np.asarray(exact, dtype=float)
    floor = 1e-12 * max(np.abs(exact).max(), 1e-300)
    return np.abs(sensed - exact) / np.maximum(np.abs(exact), floor)


def n1_equality(me, probe, omegas, gamma, chi=1e-2, tol=1e-3,
                name="N=1 sensor vs integral") -> CheckRow:
    t0 = time.perf_counter()
    liou = build_liouvillian(me)
    rho = steady_state(liou)
    exact = [
        oracle.filtered_spectrum(liou, rho, probe, FilterSpec(w, gamma))
        for w in omegas
    ]
    sensed = sensors.sensor_spectrum(me, probe, omegas, gamma, chi=chi)
    err = float(_rel_errors(sensed, exact).max())
    return CheckRow(name, err, tol, time.perf_counter() - t0)


def _oracle_g2_tau0(liou, rho, probe, f1, f2):
    s1 = oracle.filtered_spectrum(liou, rho, probe, f1)
    s2 = oracle.filtered_spectrum(liou, rho, probe, f2)
    s12 = oracle.s2_zero_delay(liou, rho, probe, f1, f2)
    return s12 / (s1 * s2)


def n2_equality_tau0(me, probe, pairs, gamma, chi=1e-2, tol=1e-2,
                     name="N=2 tau=0 sensor vs integral") -> CheckRow:
    t0 = time.perf_counter()
    liou = build_liouvillian(me)
    rho = steady_state(liou)
    exact = []
    sensed = []
    for w1, w2 in pairs:
        exact.append(
            _oracle_g2_tau0(liou, rho, probe, FilterSpec(w1, gamma),
                            FilterSpec(w2, gamma))
        )
        ss = attach_sensors(
            me, probe, (SensorSpec(w1, gamma), SensorSpec(w2, gamma)), chi=chi
        )
        sensed.append(sensors.gn_zero_delay(ss).value)
    err = float(_rel_errors(sensed, exact).max())
    return CheckRow(name, err, tol, time.perf_counter() - t0)


def n2_equality_tau(me, probe, pair, gamma, taus, chi=1e-2, tol=1e-2,
                    name="N=2 tau>0 sensor vs integral") -> CheckRow:
    t0 = time.perf_counter()
    liou = build_liouvillian(me)
    rho = steady_state(liou)
    w1, w2 = pair
    f1, f2 = FilterSpec(w1, gamma), FilterSpec(w2, gamma)
    s1 = oracle.filtered_spectrum(liou, rho, probe, f1)
    s2 = oracle.filtered_spectrum(liou, rho, probe, f2)
    s2_0 = oracle.s2_zero_delay(liou, rho, probe, f1, f2)
    exact = [
        oracle.s2_tau(liou, rho, probe, f1, f2, t, s2_0=s2_0) / (s1 * s2)
        for t in taus
    ]
    ss = attach_sensors(
        me, probe, (SensorSpec(w1, gamma), SensorSpec(w2, gamma)), chi=chi
    )
    sensed = [r.value for r in sensors.gn_delays(ss, taus)]
    err = float(_rel_errors(sensed, exact).max())
    return CheckRow(name, err, tol, time.perf_counter() - t0)


def quick_checks() -> list[CheckRow]:
    """N=1 equality on the thermal cavity, 20 frequencies."""
    me = models.thermal_cavity(P_a=0.2, gamma_a=1.0, n_max=12)
    probe = models.probe_operator(me)
    omegas = np.linspace(-3.0, 3.0, 20)
    return [
        n1_equality(me, probe, omegas, gamma=0.8,
                    name="N=1 thermal cavity (20 omegas)")
    ]


def full_checks() -> list[CheckRow]:
    """Quick checks plus N=2 equalities on a small JC system."""
    rows = quick_checks()
    p = models.JCParams(gamma_a=0.1, gamma_s=0.01, P_s=0.01, n_max=3)
    me = models.jaynes_cummings(p)
    probe = models.probe_operator(me)
    ladder = models.jc_ladder(p, 2)
    freq = {t.branch + str(t.rung): t.frequency for t in ladder}
    r1 = freq["+1"]
    r2m = freq["++2"]
    gamma2 = 2 * p.gamma_a + p.gamma_s
    pairs = [(r1, r2m), (r1, -r1), (r1, r1), (0.0, r1)]
    rows.append(
        n2_equality_tau0(me, probe, pairs, gamma2,
                         name="N=2 tau=0 JC (4 pairs)")
    )
    taus = [0.1 / gamma2, 0.5 / gamma2, 1.0 / gamma2, 5.0 / gamma2,
            20.0 / gamma2]
    rows.append(
        n2_equality_tau(me, probe, (r2m, r1), gamma2, taus,
                        name="N=2 tau>0 JC (5 delays)")
    )
    return rows
