"""Command-line front end: ``modent entropy | sweep | verify``.

Settings come from an optional JSON config file (``--config``) overridden by
flags.  Every output file starts with a provenance header holding the sha256
of the canonical config (output location and worker count excluded) and the
versions of the numerical stack, so identical configs give identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .canonical_subspace import CSV_COLUMNS, run_pipeline
from .errors import DiagnosticError, InputError
from .mobius_geometry import DEFAULT_FFT_SAMPLES

log = logging.getLogger("modent")

EXIT_INPUT = 2
EXIT_STAGE = 3
EXIT_CHECK = 1
SUITES = ("modular", "fock", "hankel", "geometry")
HASH_EXCLUDED = ("out_dir", "jobs")


class ConfigError(InputError):
    def __init__(self, message: str, field_name: str | None = None):
        super().__init__(message)
        self.field_name = field_name


@dataclass
class RunConfig:
    command: str
    phi: list | None = None
    interval: list | None = None
    modes: list | None = None
    fft_samples: int = DEFAULT_FFT_SAMPLES
    convention: str = "real"
    q: list = field(default_factory=lambda: [0.8])
    jobs: int = 1
    seed: int = 0
    out_dir: str | None = None
    suite: str | None = None

    def validate(self) -> "RunConfig":
        if self.command == "verify":
            if self.suite not in SUITES:
                raise ConfigError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES)}", "suite")
            return self
        if self.phi is None and self.interval is None:
            raise ConfigError("missing config field: phi (or interval)", "phi")
        if self.phi is not None and self.interval is not None:
            raise ConfigError("give exactly one of phi and interval", "phi")
        if self.modes is None:
            raise ConfigError("missing config field: modes", "modes")
        if self.interval is not None and len(self.interval) != 4:
            raise ConfigError("interval needs four endpoints a,b,c,d", "interval")
        for N in self.modes:
            if N < 64 or N > 2048 or N & (N - 1):
                raise ConfigError(f"modes must be powers of two in [64, 2048], got {N}", "modes")
            if self.fft_samples < 8 * N:
                raise ConfigError(f"fft_samples {self.fft_samples} < 8 * modes = {8 * N}", "fft_samples")
        if self.fft_samples & (self.fft_samples - 1):
            raise ConfigError("fft_samples must be a power of two", "fft_samples")
        if self.phi is not None and not all(0 < p < math.pi for p in self.phi):
            raise ConfigError("phi must lie in (0, pi)", "phi")
        if self.convention not in ("real", "complex"):
            raise ConfigError("convention must be real or complex", "convention")
        if any(q <= 0 for q in self.q):
            raise ConfigError("q values must be positive", "q")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1", "jobs")
        if self.command == "entropy" and (len(self.modes) != 1 or (self.phi is not None and len(self.phi) != 1)):
            raise ConfigError("entropy takes a single phi and a single modes value", "modes")
        if self.command == "sweep" and len(self.points()) < 2:
            raise ConfigError("a sweep needs at least two points", "phi")
        return self

    def points(self) -> list[tuple]:
        angles = [("phi", p) for p in self.phi] if self.phi is not None else [("interval", tuple(self.interval))]
        return [(kind, value, N) for kind, value in angles for N in self.modes]

    def digest(self) -> str:
        data = {k: v for k, v in asdict(self).items() if k not in HASH_EXCLUDED}
        return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()

    def output_root(self) -> Path:
        return Path(self.out_dir or os.environ.get("MODENT_OUT_DIR") or "modent_out")


def versions() -> dict[str, str]:
    return {"modent": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _header_fields(cfg: RunConfig) -> dict:
    return {"config_sha256": cfg.digest(), "versions": versions()}


def _write_json(path: Path, cfg: RunConfig, payload: dict) -> None:
    doc = {"header": _header_fields(cfg), "config": {k: v for k, v in asdict(cfg).items() if k not in HASH_EXCLUDED}}
    doc.update(payload)
    path.write_text(json.dumps(doc, sort_keys=True, indent=1, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _write_csv(path: Path, cfg: RunConfig, columns, rows) -> None:
    head = _header_fields(cfg)
    buf = io.StringIO()
    buf.write(f"# config_sha256={head['config_sha256']}\n")
    buf.write("# versions=" + " ".join(f"{k}={v}" for k, v in head["versions"].items()) + "\n")
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})
    path.write_text(buf.getvalue())


# -- commands -------------------------------------------------------------------------------


def _run_point(point, fft_samples):
    kind, value, N = point
    if kind == "phi":
        return run_pipeline(value, N, sample_count=fft_samples)
    return run_pipeline(cutoff=N, interval=value, sample_count=fft_samples)


def cmd_entropy(cfg: RunConfig) -> int:
    summary = _run_point(cfg.points()[0], cfg.fft_samples)
    mu = np.asarray(summary.mu)
    power_sums = {repr(float(q)): float(np.sum(mu[mu > 0] ** q)) for q in cfg.q}
    out = cfg.output_root()
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "entropy.json", cfg, {"summary": summary.to_dict(), "mu_power_sums": power_sums})
    _write_csv(out / "entropy.csv", cfg, CSV_COLUMNS, [summary.csv_row()])
    headline = summary.S_subspace_real if cfg.convention == "real" else summary.S_subspace_complex
    print(f"phi = {summary.phi:.12g}  N = {summary.cutoff}")
    print(f"S ({cfg.convention}) = {headline:.10f}")
    print(f"S_real = {summary.S_subspace_real:.10f}  S_complex = {summary.S_subspace_complex:.10f}")
    print(f"S_fermi = {summary.S_fermi_normalized:.10f}  S_bose = {summary.S_bose_normalized:.10f}")
    print(f"lower bound = {summary.lower_bound:.10f}")
    print(f"wrote {out / 'entropy.json'} and {out / 'entropy.csv'}")
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    points = cfg.points()
    if cfg.jobs == 1:
        summaries = [_run_point(p, cfg.fft_samples) for p in points]
    else:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            # map keeps input order, so output is independent of scheduling
            summaries = list(pool.map(_run_point, points, [cfg.fft_samples] * len(points)))
    rows, prev = [], None
    for s in summaries:
        row = s.csv_row()
        same_angle = prev is not None and prev.phi == s.phi
        row["dS_real"] = s.S_subspace_real - prev.S_subspace_real if same_angle else ""
        rows.append(row)
        prev = s
    out = cfg.output_root()
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "sweep.csv", cfg, list(CSV_COLUMNS) + ["dS_real"], rows)
    _write_json(out / "sweep.json", cfg, {"summaries": [s.to_dict() for s in summaries]})
    for row in rows:
        print(f"phi={row['phi']:.6f} N={row['N']} S_real={row['S_real']:.10f} defect_idem={row['defect_idem']:.3e}")
    print(f"wrote {out / 'sweep.csv'}")
    return 0


def _battery(suite: str, seed: int) -> list[dict]:
    if suite == "modular":
        from .modular_lab import verification_battery
    elif suite == "fock":
        from .fock_lab import verification_battery
    elif suite == "hankel":
        from .hankel_lab import verification_battery
    else:
        from .mobius_geometry import verification_battery
    return verification_battery(seed)


def cmd_verify(cfg: RunConfig) -> int:
    checks = _battery(cfg.suite, cfg.seed)
    failed = [c["name"] for c in checks if not c["passed"]]
    out = cfg.output_root()
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"verify_{cfg.suite}.json"
    _write_json(path, cfg, {"suite": cfg.suite, "passed": not failed, "checks": checks})
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}  {c['value']:.3e}")
    if failed:
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    print(f"suite {cfg.suite}: all {len(checks)} checks passed; wrote {path}")
    return 0


COMMANDS = {"entropy": cmd_entropy, "sweep": cmd_sweep, "verify": cmd_verify}


# -- parsing --------------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--phi", type=_floats, help="angle(s) in radians, comma separated for sweeps")
    common.add_argument("--interval", type=_floats, help="a,b,c,d: inner interval (a,b) inside outer (c,d)")
    common.add_argument("--modes", type=_ints, help="mode cutoff(s) N, powers of two in [64, 2048]")
    common.add_argument("--fft-samples", dest="fft_samples", type=int, help="DFT samples for the symbols")
    common.add_argument("--convention", choices=("complex", "real"), help="headline entropy convention")
    common.add_argument("--q", type=_floats, help="exponents for the sum of mu^q")
    common.add_argument("--jobs", type=int, help="worker processes for sweeps")
    common.add_argument("--seed", type=int, help="seed for the randomized suites")
    common.add_argument("--out-dir", dest="out_dir", help="output directory (default $MODENT_OUT_DIR or ./modent_out)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="modent", description="Entropy of the canonical intermediate subspace for intervals on the circle.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("entropy", parents=[common], help="single configuration")
    sub.add_parser("sweep", parents=[common], help="several phi or N values")
    v = sub.add_parser("verify", parents=[common], help="run an identity battery")
    v.add_argument("suite", help="one of " + ", ".join(SUITES))
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}", "config") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object", "config")
    known = {f for f in RunConfig.__dataclass_fields__ if f != "command"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}", sorted(unknown)[0])
    for key in known:
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    for key in ("phi", "modes", "q"):
        if key in data and not isinstance(data[key], list):
            data[key] = [data[key]]
    try:
        cfg = RunConfig(command=args.command, **data)
        if cfg.modes is not None:
            cfg.modes = [int(n) for n in cfg.modes]
        for key in ("phi", "interval", "q"):
            if getattr(cfg, key) is not None:
                setattr(cfg, key, [float(x) for x in getattr(cfg, key)])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    return cfg.validate()


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors and --help come back as return codes
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        field_note = f" [field: {exc.field_name}]" if exc.field_name else ""
        print(f"modent: {exc}{field_note}", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[cfg.command](cfg)
    except DiagnosticError as exc:
        print(f"modent: stage {exc.stage or 'unknown'} failed: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except InputError as exc:
        print(f"modent: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
