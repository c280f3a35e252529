"""Command line: ``g2lab verify`` runs check suites and writes a JSON or CSV report."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from .models import T3K3Chart
from .numdiff import FDScheme
from .suites import SUITES, Context, run_suites

MODELS = ("flat7", "full35", "t3k3")
DEFAULTS = {"model": "flat7", "suite": "all", "seed": 0, "fd": {}, "tolerance": 1.0,
            "samples": 5, "format": "json", "out": None, "t3k3": {}}
CONFIG_KEYS = {"model", "suite", "seed", "fd", "tolerance", "samples", "format", "out", "t3k3"}
FD_KEYS = {"step", "richardson"}
T3K3_KEYS = {"dims", "Q", "base"}
CSV_FIELDS = ("id", "paper_ref", "status", "max_residual", "tolerance", "sample_count", "runtime_ms")


class ConfigError(Exception):
    pass


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for k in cfg:
        if k not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {k!r}")
    for k in cfg.get("fd", {}) or {}:
        if k not in FD_KEYS:
            raise ConfigError(f"unknown config key 'fd.{k}'")
    for k in cfg.get("t3k3", {}) or {}:
        if k not in T3K3_KEYS:
            raise ConfigError(f"unknown config key 't3k3.{k}'")
    return cfg


def resolve(args) -> dict:
    """Defaults, then G2LAB_SEED, then config file, then flags."""
    cfg = json.loads(json.dumps(DEFAULTS))
    env_seed = os.environ.get("G2LAB_SEED")
    if env_seed is not None:
        try:
            cfg["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"G2LAB_SEED must be an integer, got {env_seed!r}") from None
    if args.config:
        for k, v in load_config(args.config).items():
            cfg[k] = v
    for key, val in (("model", args.model), ("suite", args.suite), ("seed", args.seed),
                     ("tolerance", args.tol), ("samples", args.samples), ("format", args.format), ("out", args.out)):
        if val is not None:
            cfg[key] = val
    if args.fd_step is not None:
        cfg["fd"] = dict(cfg["fd"] or {}, step=args.fd_step)
    if args.fd_richardson is not None:
        cfg["fd"] = dict(cfg["fd"] or {}, richardson=args.fd_richardson)
    _validate(cfg)
    return cfg


def suite_names(value) -> list:
    """Normalise "a,b" or ["a", "b"] to a list of known suite names."""
    names = value.split(",") if isinstance(value, str) else value
    if not isinstance(names, list) or not names:
        raise ConfigError("suite must be a name, a comma separated list or a list of names")
    out = []
    for n in names:
        n = n.strip() if isinstance(n, str) else n
        if n not in SUITES + ("all",):
            raise ConfigError(f"unknown suite {n!r}; expected one of {', '.join(SUITES + ('all',))}")
        out.append(n)
    return out


def _validate(cfg):
    if cfg["model"] not in MODELS:
        raise ConfigError(f"unknown model {cfg['model']!r}; expected one of {', '.join(MODELS)}")
    cfg["suite"] = ",".join(suite_names(cfg["suite"]))
    if cfg["format"] not in ("json", "csv"):
        raise ConfigError(f"unknown format {cfg['format']!r}")
    seed = cfg["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if not isinstance(cfg["samples"], int) or cfg["samples"] < 1:
        raise ConfigError("samples must be a positive integer")
    tol = cfg["tolerance"]
    if not isinstance(tol, (int, float)) or not tol > 0:
        raise ConfigError("tolerance scale must be positive")


def build_context(cfg) -> Context:
    fd = cfg["fd"] or {}
    scheme = None
    if fd:
        try:
            scheme = FDScheme(float(fd.get("step", 1e-2)), int(fd.get("richardson", 2)))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad finite-difference settings: {exc}") from None
    t3 = None
    tc = cfg["t3k3"] or {}
    if tc:
        try:
            t3 = T3K3Chart(dims=tuple(tc.get("dims", (3, 3, 3))), Q=tc.get("Q"))
            if "base" in tc:
                base = np.asarray(tc["base"], dtype=float)
                if not t3.contains(base):
                    raise ValueError("t3k3 base point is outside the chart")
                _, parts = t3.split(base)
                t3 = T3K3Chart(dims=t3.dims, Q=t3.Q, reference=parts)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad t3k3 settings: {exc}") from None
    return Context(seed=cfg["seed"], tol_scale=float(cfg["tolerance"]), scheme=scheme, t3k3=t3,
                   samples=cfg["samples"])


def render(cfg, records) -> str:
    if cfg["format"] == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerow({k: ("" if v is None else v) for k, v in r.as_dict().items()})
        return buf.getvalue()
    residuals = [r.max_residual for r in records if r.max_residual is not None]
    report = {
        "suite": cfg["suite"],
        "model": cfg["model"],
        "seed": cfg["seed"],
        "config_echo": {k: cfg[k] for k in sorted(cfg) if k not in ("out",)},
        "checks": [r.as_dict() for r in records],
        "summary": {
            "passed": sum(r.status == "pass" for r in records),
            "failed": sum(r.status != "pass" for r in records),
            "max_residual_overall": max(residuals) if residuals else None,
        },
    }
    return json.dumps(report, indent=2) + "\n"


def write_atomic(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".g2lab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="g2lab")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--suite", help="suite name or comma separated list: " + ", ".join(SUITES + ("all",)))
    v.add_argument("--model", choices=MODELS)
    v.add_argument("--seed", type=int)
    v.add_argument("--fd-step", type=float, dest="fd_step")
    v.add_argument("--fd-richardson", type=int, dest="fd_richardson")
    v.add_argument("--tol", type=float, help="scale factor applied to every tolerance")
    v.add_argument("--samples", type=int, help="random draws per check")
    v.add_argument("--config")
    v.add_argument("--out")
    v.add_argument("--format", choices=("json", "csv"))
    return p


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    try:
        cfg = resolve(args)
        ctx = build_context(cfg)
        if cfg["out"]:
            out_dir = os.path.dirname(os.path.abspath(cfg["out"]))
            if not os.path.isdir(out_dir) or not os.access(out_dir, os.W_OK):
                raise ConfigError(f"output directory {out_dir} is not writable")
    except ConfigError as exc:
        print(f"g2lab: error: {exc}", file=sys.stderr)
        return 2
    records = run_suites(suite_names(cfg["suite"]), ctx)
    text = render(cfg, records)
    try:
        if cfg["out"]:
            write_atomic(cfg["out"], text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"g2lab: error: cannot write report: {exc}", file=sys.stderr)
        return 2
    for r in records:
        if r.status != "pass":
            print(f"FAIL {r.id}: residual {r.max_residual} > {r.tolerance}", file=sys.stderr)
    return 0 if all(r.status == "pass" for r in records) else 1


if __name__ == "__main__":
    sys.exit(main())
