"""Built-in master equations and the Jaynes-Cummings ladder predictor.

All rates are expressed in units of the light-matter coupling ``g`` (kept
as an explicit field so scale invariance can be checked); the rotating
frame sits at the common bare frequency, so every transition frequency
below is relative to it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hilbert
from .liouville import Dissipator, MasterEquation

__all__ = [
    "JCParams",
    "Transition",
    "jaynes_cummings",
    "jc_ladder",
    "thermal_cavity",
    "driven_cavity",
    "probe_operator",
]


@dataclass(frozen=True)
class JCParams:
    """Resonant Jaynes-Cummings model with decay and incoherent pumping."""

    gamma_a: float
    gamma_s: float
    P_s: float
    n_max: int = 4
    g: float = 1.0

    def __post_init__(self):
        for name in ("gamma_a", "gamma_s", "P_s"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.g <= 0:
            raise ValueError("g must be > 0")

    def to_dict(self) -> dict:
        return {
            "gamma_a": self.gamma_a,
            "gamma_s": self.gamma_s,
            "P_s": self.P_s,
            "n_max": self.n_max,
            "g": self.g,
        }


@dataclass(frozen=True)
class Transition:
    """One dressed-ladder emission line.

    ``branch`` is the pair of polariton branches (departing, arriving),
    e.g. ``"+-"`` for ``|n,+> -> |n-1,->``; rung-1 transitions end in the
    vacuum and carry a single branch character.
    """

    rung: int
    branch: str
    frequency: float
    linewidth: float

    @property
    def name(self) -> str:
        if self.rung == 1:
            return f"|1,{self.branch}> -> |vac>"
        return f"|{self.rung},{self.branch[0]}> -> |{self.rung - 1},{self.branch[1]}>"


def jaynes_cummings(p: JCParams) -> MasterEquation:
    """JC master equation on ``boson(n_max) (x) qubit``.

    ``H = g (a_dag s + a s_dag)`` with dissipators ``(gamma_a/2) L_a``,
    ``(gamma_s/2) L_s`` and the incoherent pump ``(P_s/2) L_{s_dag}``.
    """
    space = hilbert.make_space(
        [hilbert.boson("a", p.n_max), hilbert.qubit("s")]
    )
    a = hilbert.annihilator(space, "a")
    s = hilbert.annihilator(space, "s")
    h = p.g * (a.dag() @ s + a @ s.dag())
    dissipators = [
        Dissipator(p.gamma_a, a),
        Dissipator(p.gamma_s, s),
        Dissipator(p.P_s, s.dag()),
    ]
    return MasterEquation(space, h, tuple(dissipators))


def probe_operator(me: MasterEquation, label: str = "a") -> hilbert.Operator:
    """The annihilation operator whose emission is probed."""
    return hilbert.annihilator(me.space, label)


def jc_ladder(p: JCParams, max_rung: int) -> list[Transition]:
    """All ladder transitions up to ``max_rung``.

    Rung 1 contributes the Rabi doublet at ``+-R`` with ``R = sqrt(g^2 -
    ((gamma_a - gamma_s)/4)^2)`` and linewidth ``(gamma_a + gamma_s)/2``;
    rung ``n >= 2`` contributes the four lines at ``+-R_n^+-`` with
    ``R_n^+- = sqrt(n g^2 - D^2) +- sqrt((n-1) g^2 - D^2)`` and linewidth
    ``2(n-1) gamma_a + gamma_s``.
    """
    if max_rung < 1:
        raise ValueError("max_rung must be >= 1")
    delta = (p.gamma_a - p.gamma_s) / 4.0
    for n in range(1, max_rung + 1):
        if n * p.g**2 <= delta**2:
            raise ValueError(f"transition overdamped at rung {n}")

    def sq(n: int) -> float:
        return np.sqrt(n * p.g**2 - delta**2)

    out = []
    gamma1 = (p.gamma_a + p.gamma_s) / 2.0
    out.append(Transition(1, "+", sq(1), gamma1))
    out.append(Transition(1, "-", -sq(1), gamma1))
    for n in range(2, max_rung + 1):
        gamma_n = 2 * (n - 1) * p.gamma_a + p.gamma_s
        rn_minus = sq(n) - sq(n - 1)
        rn_plus = sq(n) + sq(n - 1)
        out.append(Transition(n, "++", rn_minus, gamma_n))
        out.append(Transition(n, "+-", rn_plus, gamma_n))
        out.append(Transition(n, "-+", -rn_plus, gamma_n))
        out.append(Transition(n, "--", -rn_minus, gamma_n))
    return out


def thermal_cavity(P_a: float, gamma_a: float, n_max: int) -> MasterEquation:
    """Incoherently pumped cavity; steady state is thermal with
    ``<n> = P_a / (gamma_a - P_a)``."""
    if P_a >= gamma_a:
        raise ValueError("no steady state (thermal divergence)")
    space = hilbert.make_space([hilbert.boson("a", n_max)])
    a = hilbert.annihilator(space, "a")
    h = 0.0 * hilbert.identity(space)
    return MasterEquation(
        space, h, (Dissipator(P_a, a.dag()), Dissipator(gamma_a, a))
    )


def driven_cavity(Omega: float, gamma_a: float, n_max: int) -> MasterEquation:
    """Coherently driven cavity; steady state is the coherent state with
    ``<n> = 4 Omega^2 / gamma_a^2`` (keep ``n_max`` well above that)."""
    space = hilbert.make_space([hilbert.boson("a", n_max)])
    a = hilbert.annihilator(space, "a")
    h = Omega * (a + a.dag())
    return MasterEquation(space, h, (Dissipator(gamma_a, a),))
