"""Command-line frontend.

Subcommands map one-to-one onto scan modes (``spectrum``, ``gn``,
``gtau``, ``g2map``) plus the ``ladder`` predictor and the ``validate``
cross-check suite.  Scans are configured by a TOML file (all frequencies
and rates in units of g); command-line flags override config values.
Each scan writes ``<basename>.csv`` and ``<basename>.meta.json``.

Exit codes: 0 success, 1 configuration/validation error, 2 computation
error, 3 failed validate checks.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import models, sweep
from .sensors import SensorSpec
from .sweep import Axis, EpsilonPolicy, ScanRequest

MODE_OF_COMMAND = {
    "spectrum": "spectrum",
    "gn": "gn_zero",
    "gtau": "gn_tau",
    "g2map": "g2_map",
}


class ConfigError(ValueError):
    pass


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing field '{key}' in [{where}]")
    return section[key]


def _grid(spec, where: str) -> list[float]:
    if isinstance(spec, list):
        return [float(x) for x in spec]
    if isinstance(spec, dict):
        for key in ("start", "stop", "num"):
            _require(spec, key, where)
        import numpy as np

        fn = np.geomspace if spec.get("log") else np.linspace
        return list(fn(spec["start"], spec["stop"], int(spec["num"])))
    raise ConfigError(f"grid in [{where}] must be a list or start/stop/num table")


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(p, "rb") as fh:
        return tomllib.load(fh)


def _parse_sensors(cfg: dict) -> tuple[SensorSpec, ...]:
    entries = cfg.get("sensors")
    if not entries:
        raise ConfigError("missing [[sensors]] section")
    specs = []
    for i, ent in enumerate(entries):
        where = f"sensors[{i}]"
        gamma = _require(ent, "gamma", where)
        omega = float(ent.get("omega", 0.0))
        eps = ent.get("epsilon")
        try:
            specs.append(SensorSpec(omega, float(gamma),
                                    float(eps) if eps is not None else None))
        except ValueError as exc:
            raise ConfigError(f"invalid sensor in [{where}]: {exc}") from exc
    return tuple(specs)


def _parse_model(cfg: dict) -> tuple[str, dict]:
    model = cfg.get("model")
    if model is None:
        raise ConfigError("missing [model] section")
    name = _require(model, "name", "model")
    params = {k: v for k, v in model.items() if k != "name"}
    return name, params


def _build_request(cfg: dict, mode: str, args) -> ScanRequest:
    name, params = _parse_model(cfg)
    specs = _parse_sensors(cfg)
    scan = cfg.get("scan", {})

    if mode == "spectrum":
        axis = Axis("omega", _grid(_require(scan, "omega", "scan"), "scan.omega"))
    elif mode == "gn_zero":
        if "omega1" in scan:
            axis = Axis("omega1", _grid(scan["omega1"], "scan.omega1"))
        elif "gamma" in scan:
            axis = Axis("gamma", _grid(scan["gamma"], "scan.gamma"))
        else:
            raise ConfigError("missing field 'omega1' (or 'gamma') in [scan]")
    elif mode == "gn_tau":
        axis = Axis("tau", _grid(_require(scan, "tau", "scan"), "scan.tau"))
    elif mode == "g2_map":
        if "omega1" in scan and "omega2" in scan:
            w1 = _grid(scan["omega1"], "scan.omega1")
            w2 = _grid(scan["omega2"], "scan.omega2")
            pairs = [(a, b) for a in w1 for b in w2]
        else:
            pairs = [tuple(p) for p in _require(scan, "pairs", "scan")]
        axis = Axis("omega12", pairs)
    else:  # pragma: no cover - argparse restricts the commands
        raise ConfigError(f"unknown mode {mode}")

    chi = args.chi if args.chi is not None else cfg.get("epsilon", {}).get(
        "chi", 1e-2
    )
    conv = (
        args.converge_eps
        if args.converge_eps is not None
        else cfg.get("epsilon", {}).get("converge_tol")
    )
    return ScanRequest(
        model_name=name,
        model_params=params,
        mode=mode,
        sensors=specs,
        axis=axis,
        epsilon=EpsilonPolicy(chi=float(chi),
                              converge_tol=float(conv) if conv else None),
        workers=args.workers,
    )


def _run_scan(args, mode: str) -> int:
    try:
        cfg = _load_config(args.config)
        req = _build_request(cfg, mode, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    outdir = Path(args.out or cfg.get("output", {}).get("dir", "."))
    basename = args.basename or cfg.get("output", {}).get("basename", mode)
    try:
        result = sweep.run(req)
    except Exception as exc:  # engine failure across all points
        print(f"computation error: {exc}", file=sys.stderr)
        return 2
    csv_path, meta_path = sweep.checkpoint(result, outdir / basename)
    n_bad = sum(1 for f in result.flags if f)
    print(f"wrote {csv_path} and {meta_path} ({n_bad} flagged points)")
    return 0


def _cmd_ladder(args) -> int:
    try:
        p = models.JCParams(
            gamma_a=args.gamma_a, gamma_s=args.gamma_s, P_s=args.pump,
            n_max=max(args.rungs, 1), g=1.0,
        )
        transitions = models.jc_ladder(p, args.rungs)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{'transition':<22} {'rung':>4} {'frequency/g':>14} {'linewidth/g':>14}")
    for t in transitions:
        print(f"{t.name:<22} {t.rung:>4} {t.frequency:>14.6f} {t.linewidth:>14.6f}")
    return 0


def _cmd_validate(args) -> int:
    from . import validate

    rows = validate.quick_checks() if args.level == "quick" else (
        validate.full_checks()
    )
    for row in rows:
        print(row.line())
    return 0 if all(r.passed for r in rows) else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nphoton",
        description="Frequency-filtered N-photon correlations of open "
                    "quantum systems (all rates in units of g)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scan(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="TOML config file")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--basename", default=None, help="output basename")
        sp.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: NPHOTON_WORKERS or auto)")
        sp.add_argument("--chi", type=float, default=None,
                        help="coupling fraction of the back-action bound")
        sp.add_argument("--converge-eps", type=float, default=None,
                        help="enable coupling-halving convergence to this tol")
        return sp

    add_scan("spectrum", "single-sensor physical spectrum over omega")
    add_scan("gn", "N-sensor zero-delay correlation over omega1 or Gamma")
    add_scan("gtau", "correlation versus delay (signed)")
    add_scan("g2map", "two-sensor zero-delay correlation over (omega1, omega2)")

    lad = sub.add_parser("ladder", help="print dressed-ladder transitions")
    lad.add_argument("--model", default="jc", choices=["jc"])
    lad.add_argument("--gamma-a", type=float, required=True)
    lad.add_argument("--gamma-s", type=float, required=True)
    lad.add_argument("--pump", type=float, default=0.0)
    lad.add_argument("--rungs", type=int, default=2)

    val = sub.add_parser("validate", help="sensor-vs-integral cross checks")
    val.add_argument("--level", choices=["quick", "full"], default="quick")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command in MODE_OF_COMMAND:
        return _run_scan(args, MODE_OF_COMMAND[args.command])
    if args.command == "ladder":
        return _cmd_ladder(args)
    if args.command == "validate":
        return _cmd_validate(args)
    return 1


if __name__ == "__main__":
    sys.exit(main())
