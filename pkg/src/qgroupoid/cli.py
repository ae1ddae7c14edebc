"""Command-line verification harness.

    qgroupoid-verify --suite all --group su2 --grid-n 256 --trials 100 --seed 42 --report report.json

Exit status: 0 every check passed, 1 some check failed, 2 unsupported
(suite, group) pair or invalid configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, fields, replace

import numpy as np

from .lie import INSTANCE_NAMES
from .sampling import NumericalFailure
from .suites import SUITES, Record, SuiteConfig, resolve_group, run_suite

EXIT_OK, EXIT_FAIL, EXIT_UNSUPPORTED, EXIT_NUMERICAL = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _parse_tols(items) -> dict:
    out = {}
    for item in items:
        for part in filter(None, (p.strip() for p in item.split(","))):
            name, sep, val = part.partition("=")
            if not sep:
                name, sep, val = part.partition(":")
            if not sep:
                raise ConfigError(f"tolerance override {part!r} is not name=value")
            out[name.strip()] = float(val)
    return out


_CASTS = {"suite": str, "group": str, "grid_n": int, "substeps": int, "trials": int, "seed": int,
          "fd_step": float}


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            if key == "tol_overrides":
                out[key] = _parse_tols([val])
            elif key in _CASTS:
                try:
                    out[key] = _CASTS[key](val)
                except ValueError as exc:
                    raise ConfigError(f"{path}:{lineno}: bad value for {key}: {val!r}") from exc
            else:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qgroupoid-verify", description="Run residual verification suites.")
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--suite", choices=SUITES + ("all",))
    p.add_argument("--group", choices=INSTANCE_NAMES)
    p.add_argument("--grid-n", type=int, dest="grid_n")
    p.add_argument("--substeps", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--fd-step", type=float, dest="fd_step")
    p.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                   help="tolerance override for a suite or suite.check (repeatable)")
    p.add_argument("--report", help="report path (default: standard output)")
    p.add_argument("--timings", action="store_true", help="record runtime_ms (reports are then not byte-stable)")
    p.add_argument("--convergence", metavar="N1,N2,...", help="run a convergence study over these grid sizes")
    return p


def config_from_args(args) -> SuiteConfig:
    values = read_config_file(args.config) if args.config else {}
    for key in ("suite", "group", "grid_n", "substeps", "trials", "seed", "fd_step"):
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    tols = dict(values.pop("tol_overrides", {}))
    tols.update(_parse_tols(args.tol))
    return SuiteConfig(**values, tol_overrides=tols, timings=args.timings).validate()


def _workers() -> int:
    raw = os.environ.get("VERIFY_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"VERIFY_THREADS must be an integer, got {raw!r}")
    return n if n > 0 else (os.cpu_count() or 1)


def plan(cfg: SuiteConfig) -> list[tuple[str, str]]:
    """(suite, group) pairs to run; raises ConfigError for an unsupported single suite."""
    if cfg.suite != "all":
        g = resolve_group(cfg.suite, cfg.group, False)
        if g is None:
            raise ConfigError(f"suite {cfg.suite!r} is not defined on group {cfg.group!r}")
        return [(cfg.suite, g)]
    out = []
    for s in SUITES:
        g = resolve_group(s, cfg.group, True)
        if g is not None:
            out.append((s, g))
    return out


def run(cfg: SuiteConfig):
    """Execute the configured suites; returns (records, findings, skipped)."""
    jobs = plan(cfg)
    skipped = [s for s in SUITES if cfg.suite == "all" and s not in {j[0] for j in jobs}]
    with ThreadPoolExecutor(max_workers=min(_workers(), len(jobs))) as pool:
        results = list(pool.map(lambda j: run_suite(j[0], cfg, j[1]), jobs))
    records = [r for res in results for r in res.records]
    findings = [f for res in results for f in res.findings]
    return records, findings, skipped


def _clean(x):
    if isinstance(x, float):
        if not np.isfinite(x):
            return str(x)
        return float(x)
    if isinstance(x, (np.floating, np.integer)):
        return _clean(x.item())
    return x


def render_report(cfg: SuiteConfig, records, findings, skipped, convergence=None) -> str:
    conf = {k: v for k, v in asdict(cfg).items() if k != "timings"}
    conf["tol_overrides"] = dict(sorted(cfg.tol_overrides.items()))
    doc = {
        "config": conf,
        "records": [{k: _clean(v) for k, v in r.as_dict().items()} for r in records],
        "findings": findings,
        "skipped": skipped,
        "all_pass": all(r.passed for r in records),
    }
    if convergence is not None:
        doc["convergence"] = convergence
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def convergence_study(cfg: SuiteConfig, resolutions) -> list[dict]:
    """Least-squares slope of log residual against log n, per (suite, check).

    Orders are reported as positive rates; any residual below 1e-12 marks
    the check "saturated" (rounding floor, not a failure).
    """
    resolutions = sorted(int(n) for n in resolutions)
    if len(resolutions) < 2:
        raise ConfigError("a convergence study needs at least two resolutions")
    per = {}
    for n in resolutions:
        records, _, _ = run(replace(cfg, grid_n=n, timings=False))
        for r in records:
            if r.grid_n is None:
                continue
            value = r.relative_max if r.relative_max is not None else r.max_residual
            per.setdefault((r.suite, r.check), []).append(value)
    out = []
    for (suite, check), vals in per.items():
        vals = np.asarray(vals, dtype=float)
        if vals.min() < 1e-12:
            order = "saturated"
        else:
            order = float(-np.polyfit(np.log(resolutions), np.log(vals), 1)[0])
        out.append({"suite": suite, "check": check, "resolutions": resolutions,
                    "residuals": [float(v) for v in vals], "order": order})
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        records, findings, skipped = run(cfg)
        conv = None
        if args.convergence:
            conv = convergence_study(cfg, [int(x) for x in args.convergence.split(",")])
    except (ConfigError, ValueError) as exc:
        print(f"qgroupoid-verify: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except NumericalFailure as exc:
        print(f"qgroupoid-verify: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    text = render_report(cfg, records, findings, skipped, conv)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for r in records:
        if not r.passed:
            print(f"FAIL {r.suite}/{r.check} [{r.group}]", file=sys.stderr)
    return EXIT_OK if all(r.passed for r in records) else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
