"""Command-line front end.

Exit codes: 0 success, 1 failed check or numerical construction, 2 invalid
configuration, 3 domain error (input outside the causal cone).
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .checks import VerifySettings, run_checks
from .config import KEYS_HELP, ConfigError, ModelConfig, load_config, parse_config
from .flow import integrate
from .geometry import DomainError
from .separation import time_separation
from .stable import (ConstructionError, build_table, construct_alpha_maximal, dual_stable,
                     rotation_vector, support_set)

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_DOMAIN = 0, 1, 2, 3


@dataclass
class RunReport:
    command: str
    config: ModelConfig
    seed: int
    checks: list[dict] = field(default_factory=list)
    results: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        return {"command": self.command, "config": self.config.as_dict(),
                "config_hash": self.config.digest,
                "defaults_applied": self.config.defaults_applied, "seed": self.seed,
                "checks": self.checks, "results": self.results,
                "wall_time": round(self.wall_time, 3)}

    def write(self, out: Path) -> None:
        with open(out / f"{self.command}_report.json", "w", encoding="utf-8") as fh:
            json.dump(self.as_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")


def _vector(text: str, dim: int, what: str) -> np.ndarray:
    try:
        v = np.array([float(t) for t in text.replace(",", " ").split()])
    except ValueError:
        raise DomainError(f"{what}: cannot parse {text!r}") from None
    if v.shape != (dim,):
        raise DomainError(f"{what}: expected {dim} components, got {len(v)}")
    return v


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _open_csv(path: Path):
    fh = open(path, "w", encoding="utf-8", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


# -- commands -------------------------------------------------------------------


def cmd_geodesic(cfg: ModelConfig, args, out: Path, report: RunReport) -> int:
    model = cfg.build_model()
    x0 = _vector(args.x0, model.dim, "--x0") if args.x0 else np.zeros(model.dim)
    v0 = _vector(args.v0, model.dim, "--v0") if args.v0 else model.space.time_axis
    arc = integrate(model, x0, v0, args.t_end, cfg.h)
    with open(out / "geodesic.csv", "w", encoding="utf-8", newline="") as fh:
        arc.write_csv(fh)
    report.results = {"energy_drift": arc.energy_drift, "length": arc.length,
                      "samples": len(arc.t), "warnings": list(arc.warnings)}
    return EXIT_OK


def _read_pairs(path: Path, dim: int):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for k, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = [p for p in text.replace(",", " ").split()]
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                if k == 1:
                    continue  # header
                rows.append((k, None, f"line {k}: non-numeric entry"))
                continue
            if len(vals) != 2 * dim:
                rows.append((k, None, f"line {k}: expected {2 * dim} numbers, got {len(vals)}"))
                continue
            rows.append((k, (np.array(vals[:dim]), np.array(vals[dim:])), None))
    return rows


def cmd_distance(cfg: ModelConfig, args, out: Path, report: RunReport) -> int:
    model = cfg.build_model()
    try:
        rows = _read_pairs(Path(args.pairs), model.dim)
    except OSError as exc:
        raise ConfigError(f"cannot read pairs file {args.pairs}: {exc.strerror}") from None
    errors = 0
    fh, w = _open_csv(out / "distances.csv")
    with fh:
        w.writerow(["line", "lower", "upper", "method", "tag", "iterations", "error"])
        for line, pair, err in rows:
            if pair is None:
                errors += 1
                w.writerow([line, "", "", "", "", "", err])
                continue
            est = time_separation(model, *pair, seed=cfg.seed)
            w.writerow([line, _fmt(est.lower), _fmt(est.upper), est.method, est.tag,
                        est.iterations, ""])
    report.results = {"rows": len(rows), "errors": errors}
    return EXIT_OK


def cmd_stable_norm(cfg: ModelConfig, args, out: Path, report: RunReport) -> int:
    model = cfg.build_model()
    table = build_table(model, cfg.eps, cfg.grid, cfg.depth, seed=cfg.seed)
    if args.format == "json":
        with open(out / "stable_norm.json", "w", encoding="utf-8") as fh:
            table.write_json(fh)
            fh.write("\n")
    else:
        with open(out / "stable_norm.csv", "w", encoding="utf-8", newline="") as fh:
            table.write_csv(fh)
    report.results = {"directions": len(table.directions), "max_err": table.max_err,
                      **table.deficits()}
    return EXIT_OK


def _read_covectors(path: Path, dim: int) -> list[np.ndarray]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read covector file {path}: {exc.strerror}") from None
    out = []
    for k, line in enumerate(lines, 1):
        text = line.strip()
        if text and not text.startswith("#"):
            out.append(_vector(text, dim, f"{path}:{k}"))
    return out


def cmd_dual(cfg: ModelConfig, args, out: Path, report: RunReport) -> int:
    model = cfg.build_model()
    covs = _read_covectors(args.covectors, model.dim)
    table = build_table(model, cfg.eps, cfg.grid, cfg.depth, seed=cfg.seed, probes=False)
    records = []
    for alpha in covs:
        if not model.space.interior_dual(alpha):
            raise DomainError(f"covector {alpha.tolist()} is not in the interior of the dual cone")
        du = dual_stable(alpha, table)
        sup = support_set(alpha, table, dual=du)
        records.append({"alpha": alpha.tolist(), "dual": du.value, "err": du.err,
                        "support": sup.tolist()})
    if args.format == "json":
        with open(out / "dual.json", "w", encoding="utf-8") as fh:
            json.dump(records, fh, sort_keys=True, indent=1)
            fh.write("\n")
    else:
        m = model.dim
        fh, w = _open_csv(out / "dual.csv")
        with fh:
            w.writerow([f"alpha_{j + 1}" for j in range(m)] + ["dual", "err", "support_index"]
                       + [f"v_{j + 1}" for j in range(m)])
            for r in records:
                for k, v in enumerate(r["support"]):
                    w.writerow([_fmt(a) for a in r["alpha"]] + [_fmt(r["dual"]), _fmt(r["err"]), k]
                               + [_fmt(c) for c in v])
    report.results = {"covectors": len(records),
                      "dual": [r["dual"] for r in records]}
    return EXIT_OK


def cmd_mather(cfg: ModelConfig, args, out: Path, report: RunReport) -> int:
    model = cfg.build_model()
    alpha = _vector(args.covector, model.dim, "--covector")
    if not model.space.interior_dual(alpha):
        raise DomainError(f"covector {alpha.tolist()} is not in the interior of the dual cone")
    table = build_table(model, cfg.eps, cfg.grid, cfg.depth, seed=cfg.seed, probes=False)
    arc = construct_alpha_maximal(model, alpha, args.horizon, table)
    with open(out / "mather_arc.csv", "w", encoding="utf-8", newline="") as fh:
        arc.write_csv(fh)
    m = model.dim
    fh, w = _open_csv(out / "mather_rotation.csv")
    with fh:
        w.writerow(["s", "t"] + [f"rho_{j + 1}" for j in range(m)] + ["stable", "err_rel"])
        stride = max(1, (len(arc.t) - 1) // args.samples)
        for i in range(stride, len(arc.t), stride):
            rs = rotation_vector(arc, arc.t[0], arc.t[i], table)
            w.writerow([_fmt(rs.s), _fmt(rs.t)] + [_fmt(c) for c in rs.rho]
                       + [_fmt(rs.stable), _fmt(rs.err_rel)])
    report.results = {"length": arc.length, "energy_drift": arc.energy_drift,
                      "samples": len(arc.t)}
    return EXIT_OK


def cmd_verify(cfg: ModelConfig, args, out: Path, report: RunReport) -> int:
    model = cfg.build_model()
    settings = VerifySettings.for_level(args.level, model.dim, cfg.depth, cfg.grid)

    def show(r):
        print(r.line(), flush=True)

    results = run_checks(model, cfg.eps, settings, cfg.seed, progress=show)
    report.checks = [r.as_dict() for r in results]
    failed = [r.name for r in results if not r.passed]
    report.results = {"level": args.level, "failed": failed, "total": len(results)}
    if failed:
        print(f"verify: {len(failed)} check(s) failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    print(f"verify: all {len(results)} checks passed")
    return EXIT_OK


COMMANDS = {"geodesic": cmd_geodesic, "distance": cmd_distance, "stable-norm": cmd_stable_norm,
            "dual": cmd_dual, "mather": cmd_mather, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="model config file (defaults used when omitted)")
    common.add_argument("--out", default=".", help="output directory [.]")
    common.add_argument("--seed", type=int, help="override [solver] seed")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    p = argparse.ArgumentParser(prog="lorentz-tori", epilog=KEYS_HELP,
                                formatter_class=argparse.RawDescriptionHelpFormatter,
                                description="Time separation and stable structure of "
                                            "conformally flat Lorentzian tori.")
    sub = p.add_subparsers(dest="command", required=True)
    kw = {"parents": [common], "epilog": KEYS_HELP,
          "formatter_class": argparse.RawDescriptionHelpFormatter}
    g = sub.add_parser("geodesic", help="integrate a geodesic and export it", **kw)
    g.add_argument("--x0", help="start point, comma separated [origin]")
    g.add_argument("--v0", help="initial velocity, comma separated [e_1]")
    g.add_argument("--t-end", type=float, default=1.0, help="affine end time [1]")
    d = sub.add_parser("distance", help="time separation for a file of (x, y) rows", **kw)
    d.add_argument("--pairs", required=True, help="rows x_1..x_m y_1..y_m")
    sub.add_parser("stable-norm", help="tabulate the stable time separation", **kw)
    du = sub.add_parser("dual", help="dual stable values and support sets", **kw)
    du.add_argument("--covectors", required=True, help="file with one covector per line")
    ma = sub.add_parser("mather", help="alpha-maximal geodesic and rotation trace", **kw)
    ma.add_argument("--covector", required=True, help="covector, comma separated")
    ma.add_argument("--horizon", type=float, default=16.0, help="horizon [16]")
    ma.add_argument("--samples", type=int, default=64, help="rotation trace samples [64]")
    v = sub.add_parser("verify", help="run the property checks", **kw)
    v.add_argument("--level", choices=("quick", "full"), default="quick")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = load_config(args.config) if args.config else parse_config("", "<defaults>")
        if args.seed is not None:
            cfg.seed = args.seed
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report = RunReport(args.command, cfg, cfg.seed)
        code = COMMANDS[args.command](cfg, args, out, report)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ConstructionError as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    report.wall_time = time.perf_counter() - start
    report.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
