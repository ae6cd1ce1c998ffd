"""Grid orchestration: scan frequencies, linewidths or delays.

Grid points are embarrassingly parallel; a thread pool evaluates them
through pure engine calls and a single writer collects results in axis
order, so parallel and serial runs produce identical values.  Per-point
failures become flags instead of aborting the scan.  Results round-trip
through a CSV file plus a JSON sidecar carrying the full request, the
per-point wall times and a checksum; resuming recomputes only missing or
flagged points.
"""

from __future__ import annotations

import concurrent.futures as cf
import hashlib
import json
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import models, sensors
from .liouville import MasterEquation
from .sensors import SensorSpec

__all__ = [
    "Axis",
    "EpsilonPolicy",
    "ScanRequest",
    "ScanResult",
    "run",
    "checkpoint",
    "resume",
    "build_model",
]

MODES = ("spectrum", "gn_zero", "gn_tau", "g2_map")
AXIS_KINDS = ("omega", "omega1", "gamma", "tau", "omega12")
FLOAT_FMT = "{:.16e}"


def build_model(name: str, params: dict) -> MasterEquation:
    """Construct a catalogued master equation from serialized parameters."""
    if name == "jc":
        return models.jaynes_cummings(models.JCParams(**params))
    if name == "thermal":
        return models.thermal_cavity(**params)
    if name == "driven":
        return models.driven_cavity(**params)
    raise ValueError(f"unknown model {name!r}")


@dataclass(frozen=True)
class Axis:
    """The scanned grid: which quantity varies and its values.

    ``omega``/``omega1`` scan the (first) sensor frequency, ``gamma``
    scans the common sensor linewidth, ``tau`` scans the delay (signed
    values allowed), ``omega12`` scans pairs of frequencies.
    """

    kind: str
    values: tuple

    def __post_init__(self):
        if self.kind not in AXIS_KINDS:
            raise ValueError(f"unknown axis kind {self.kind!r}")
        vals = tuple(
            tuple(float(x) for x in v) if self.kind == "omega12" else float(v)
            for v in self.values
        )
        if not vals:
            raise ValueError("axis grid is empty")
        flat = [x for v in vals for x in (v if isinstance(v, tuple) else (v,))]
        if not all(np.isfinite(flat)):
            raise ValueError("axis grid contains non-finite values")
        object.__setattr__(self, "values", vals)

    def columns(self) -> tuple[str, ...]:
        return ("omega1", "omega2") if self.kind == "omega12" else (
            "omega" if self.kind == "omega" else self.kind,
        )


@dataclass(frozen=True)
class EpsilonPolicy:
    """Either a fixed coupling fraction or a convergence target."""

    chi: float = sensors.DEFAULT_CHI
    converge_tol: Optional[float] = None

    def to_dict(self) -> dict:
        return {"chi": self.chi, "converge_tol": self.converge_tol}


@dataclass(frozen=True)
class ScanRequest:
    model_name: str
    model_params: dict
    mode: str
    sensors: tuple[SensorSpec, ...]
    axis: Axis
    epsilon: EpsilonPolicy = EpsilonPolicy()
    workers: Optional[int] = None
    rtol: float = 1e-8
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown scan mode {self.mode!r}")
        object.__setattr__(self, "sensors", tuple(self.sensors))

    def value_column(self) -> str:
        if self.mode == "spectrum":
            return "s1"
        if self.mode == "g2_map":
            return "g2"
        return f"g{len(self.sensors)}"

    def to_dict(self) -> dict:
        return {
            "model": {"name": self.model_name, "params": self.model_params},
            "mode": self.mode,
            "sensors": [
                {"omega": s.omega, "gamma": s.gamma, "epsilon": s.epsilon}
                for s in self.sensors
            ],
            "axis": {"kind": self.axis.kind, "values": list(self.axis.values)},
            "epsilon_policy": self.epsilon.to_dict(),
            "rtol": self.rtol,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScanRequest":
        axis_values = d["axis"]["values"]
        if d["axis"]["kind"] == "omega12":
            axis_values = [tuple(v) for v in axis_values]
        return cls(
            model_name=d["model"]["name"],
            model_params=d["model"]["params"],
            mode=d["mode"],
            sensors=tuple(
                SensorSpec(s["omega"], s["gamma"], s.get("epsilon"))
                for s in d["sensors"]
            ),
            axis=Axis(d["axis"]["kind"], tuple(axis_values)),
            epsilon=EpsilonPolicy(**d["epsilon_policy"]),
            rtol=d.get("rtol", 1e-8),
            metadata=d.get("metadata", {}),
        )


@dataclass
class ScanResult:
    request: ScanRequest
    values: list
    flags: list
    wall_times: list

    @property
    def axis_values(self):
        return self.request.axis.values


def _default_workers() -> int:
    env = os.getenv("NPHOTON_WORKERS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _point_sensors(req: ScanRequest, x) -> tuple[SensorSpec, ...]:
    specs = req.sensors
    if req.axis.kind in ("omega", "omega1"):
        return (replace(specs[0], omega=float(x)),) + specs[1:]
    if req.axis.kind == "gamma":
        return tuple(replace(s, gamma=float(x)) for s in specs)
    if req.axis.kind == "omega12":
        w1, w2 = x
        return (replace(specs[0], omega=w1), replace(specs[1], omega=w2))
    return specs


def _eval_correlation(req: ScanRequest, me, probe,
                      specs: tuple[SensorSpec, ...]) -> float:
    def at_scale(scale: float):
        ss = sensors.attach_sensors(me, probe, specs, chi=req.epsilon.chi)
        if scale != 1.0:
            ss = ss.with_couplings(scale)
        return sensors.gn_zero_delay(ss)

    if req.epsilon.converge_tol is not None:
        return sensors.converge_epsilon(at_scale, req.epsilon.converge_tol).value
    return at_scale(1.0).value


def _eval_point(req: ScanRequest, me, probe, x) -> float:
    specs = _point_sensors(req, x)
    if req.mode == "spectrum":
        vals, fl = sensors.sensor_spectrum(
            me, probe, [specs[0].omega], specs[0].gamma,
            chi=req.epsilon.chi, return_flags=True,
        )
        if fl[0]:
            raise sensors.SensorStarved("sensor starved")
        return vals[0]
    return _eval_correlation(req, me, probe, specs)


def _flag_of(exc: Exception) -> str:
    if isinstance(exc, sensors.SensorStarved):
        return "starved"
    if isinstance(exc, RuntimeError) and "not converged" in str(exc):
        return "not-converged"
    return f"error:{type(exc).__name__}"


def run(req: ScanRequest, todo: Optional[set] = None,
        prior: Optional[ScanResult] = None) -> ScanResult:
    """Evaluate the request; optionally only the ``todo`` point indices.

    Points are independent and evaluated concurrently (except the delay
    mode, which marches the grid in one checkpointed propagation); output
    ordering always matches the axis ordering.
    """
    me = build_model(req.model_name, req.model_params)
    probe = models.probe_operator(me, "a")
    n = len(req.axis.values)
    values = list(prior.values) if prior else [np.nan] * n
    flags = list(prior.flags) if prior else [""] * n
    times = list(prior.wall_times) if prior else [0.0] * n
    indices = sorted(todo) if todo is not None else list(range(n))
    if not indices:
        return ScanResult(req, values, flags, times)

    if req.mode == "gn_tau":
        taus = [req.axis.values[i] for i in indices]
        t0 = time.perf_counter()
        ss = sensors.attach_sensors(me, probe, req.sensors, chi=req.epsilon.chi)
        try:
            res = sensors.gn_delays(ss, taus, rtol=req.rtol)
            elapsed = (time.perf_counter() - t0) / len(indices)
            for i, r in zip(indices, res):
                values[i], flags[i], times[i] = r.value, "", elapsed
        except Exception as exc:
            for i in indices:
                values[i], flags[i] = np.nan, _flag_of(exc)
        if all(flags):
            raise ValueError("all scan points failed")
        return ScanResult(req, values, flags, times)

    def work(i):
        x = req.axis.values[i]
        t0 = time.perf_counter()
        try:
            v = _eval_point(req, me, probe, x)
            return i, v, "", time.perf_counter() - t0
        except Exception as exc:  # noqa: BLE001 - survive per-point failure
            return i, np.nan, _flag_of(exc), time.perf_counter() - t0

    n_workers = req.workers or _default_workers()
    if n_workers <= 1 or len(indices) == 1:
        outs = [work(i) for i in indices]
    else:
        with cf.ThreadPoolExecutor(max_workers=n_workers) as pool:
            outs = list(pool.map(work, indices))
    for i, v, flag, dt in outs:
        values[i], flags[i], times[i] = v, flag, dt

    if all(flags):
        raise ValueError("all scan points failed")
    return ScanResult(req, values, flags, times)


def _csv_text(res: ScanResult) -> str:
    req = res.request
    cols = list(req.axis.columns()) + [req.value_column(), "flag"]
    lines = [",".join(cols)]
    n = len(req.axis.values)
    for i in range(n):
        x = req.axis.values[i]
        axis_part = (
            [FLOAT_FMT.format(v) for v in x]
            if isinstance(x, tuple)
            else [FLOAT_FMT.format(x)]
        )
        v = res.values[i]
        vtxt = FLOAT_FMT.format(v) if np.isfinite(v) else "nan"
        lines.append(",".join(axis_part + [vtxt, res.flags[i]]))
    return "\n".join(lines) + "\n"


def checkpoint(res: ScanResult, basepath) -> tuple[Path, Path]:
    """Write ``<base>.csv`` and ``<base>.meta.json``; returns both paths."""
    base = Path(basepath)
    base.parent.mkdir(parents=True, exist_ok=True)
    csv_path = base.with_suffix(".csv")
    meta_path = base.with_suffix(".meta.json")
    text = _csv_text(res)
    csv_path.write_text(text, encoding="utf-8", newline="\n")
    meta = res.request.to_dict()
    meta["version"] = _package_version()
    meta["wall_times_s"] = res.wall_times
    meta["checksum_sha256"] = hashlib.sha256(text.encode()).hexdigest()
    if res.request.model_name == "jc":
        meta["ladder"] = _ladder_meta(res.request.model_params)
    meta_path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return csv_path, meta_path


def _package_version() -> str:
    from . import __version__

    return __version__


def _ladder_meta(params: dict, max_rung: int = 3) -> list[dict]:
    p = models.JCParams(**params)
    try:
        trans = models.jc_ladder(p, max_rung)
    except ValueError:
        return []
    return [
        {
            "rung": t.rung,
            "branch": t.branch,
            "frequency": t.frequency,
            "linewidth": t.linewidth,
            "name": t.name,
        }
        for t in trans
    ]


def resume(basepath) -> ScanResult:
    """Load a checkpoint and recompute only flagged or missing points."""
    base = Path(basepath)
    csv_path = base.with_suffix(".csv")
    meta_path = base.with_suffix(".meta.json")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        text = csv_path.read_text(encoding="utf-8")
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"checkpoint unreadable ({exc})") from exc

    req = ScanRequest.from_dict(meta)
    n = len(req.axis.values)
    lines = text.splitlines()
    if not lines:
        raise ValueError("checkpoint unreadable (empty csv)")
    rows = lines[1:]

    digest = hashlib.sha256(text.encode()).hexdigest()
    recorded = meta.get("checksum_sha256")
    complete = len(rows) == n
    if complete and recorded is not None and digest != recorded:
        raise ValueError("checkpoint unreadable (checksum mismatch)")

    values = [np.nan] * n
    flags = ["missing"] * n
    stored_times = list(meta.get("wall_times_s", []))
    times = (stored_times + [0.0] * n)[:n]
    n_axis_cols = len(req.axis.columns())
    for i, row in enumerate(rows[:n]):
        parts = row.split(",")
        vtxt = parts[n_axis_cols]
        values[i] = float(vtxt) if vtxt != "nan" else np.nan
        flags[i] = parts[n_axis_cols + 1]

    todo = {i for i in range(n) if flags[i] != ""}
    prior = ScanResult(req, values, flags, times)
    if not todo:
        return prior
    return run(req, todo=todo, prior=prior)
