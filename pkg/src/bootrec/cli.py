"""Command-line front end: ``bootrec <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 fixture parse error,
4 step budget exhausted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .analytics import beta, crossing_sequence, lambda_with_error, poly_F, threshold_p
from .dynamics import Kind, Rule, run_dynamics
from .grid import AsciiParseError, Grid, format_ascii, parse_ascii
from .montecarlo import (Cell, Estimate, Model, SweepRow, crossing_outcomes, run_sweep,
                         sample_board, search_critical_p, trial_rng)
from .search import find_bvsr
from .tiles import TileConfig, double_gap_in, find_triples, project_sites, sample_tile_config

EXIT_OK, EXIT_CONFIG, EXIT_PARSE, EXIT_BUDGET = 0, 2, 3, 4

THRESHOLD_HEADER = ("n", "p_hat", "lo", "hi", "scaled", "predicted")


class ConfigError(ValueError):
    pass


# -- output helpers ------------------------------------------------------------

def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def metadata(args: argparse.Namespace) -> dict:
    cfg = {k: (v.value if hasattr(v, "value") else v) for k, v in sorted(vars(args).items())
           if k not in ("func", "threads", "out", "meta")}
    return {"version": __version__, "command": args.command, "seed": args.seed, "config": cfg}


def emit(args: argparse.Namespace, header: Sequence[str], rows: list[list], extra: dict | None = None,
         runtime: dict | None = None) -> None:
    """Write a table as CSV (metadata to a sidecar or stderr) or as one JSON document."""
    meta = metadata(args)
    if extra:
        meta["summary"] = extra
    runtime = dict(runtime or {}, threads=getattr(args, "threads", 1))
    if args.format == "json":
        doc = {"metadata": meta, "runtime": runtime,
               "rows": [dict(zip(header, r)) for r in rows]}
        text = json.dumps(doc, indent=2, sort_keys=False) + "\n"
        _write(args.out, text)
        return
    _write(args.out, csv_text(header, [[_fmt(v) for v in r] for r in rows]))
    meta_text = json.dumps({"metadata": meta, "runtime": runtime}, indent=2) + "\n"
    meta_path = getattr(args, "meta", None) or (f"{args.out}.meta.json" if args.out else None)
    if meta_path:
        Path(meta_path).write_text(meta_text, encoding="utf-8")
    else:
        sys.stderr.write(meta_text)


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


# -- commands --------------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.fixture:
        try:
            x0 = parse_ascii(Path(args.fixture).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read fixture: {exc}") from exc
    else:
        if args.n is None or args.p is None:
            raise ConfigError("simulate needs --fixture or both --n and --p")
        n, p = _one(args.n, "n"), _one(args.p, "p")
        _check_p(p)
        rows = sample_board(Model(args.model), trial_rng(args.seed, 0, 0), n, n, p)
        x0 = Grid(n, n, rows)
    out = run_dynamics(x0, Rule(args.rule), args.max_steps, record_populations=args.populations)
    if args.format == "json":
        doc = {"metadata": metadata(args), "outcome": out.kind.value, "t_stop": out.t_stop,
               "period": out.period, "width": x0.width, "height": x0.height,
               "initial_infected": x0.popcount()}
        if args.populations:
            doc["populations"] = list(out.populations)
        _write(args.out, json.dumps(doc, indent=2) + "\n")
    else:
        lines = [str(out), f"steps: {out.t_stop}"]
        if args.populations:
            lines.append("populations: " + " ".join(map(str, out.populations)))
        _write(args.out, "\n".join(lines) + "\n")
    return EXIT_BUDGET if out.kind is Kind.BUDGET_EXCEEDED else EXIT_OK


def cmd_percolation(args) -> int:
    ns = args.n or [64]
    ps = _p_values(args)
    cells = [Cell(n, p, Model(args.model), Rule(args.rule), args.trials, args.max_steps)
             for n in ns for p in ps]
    for c in cells:
        if c.n < 1:
            raise ConfigError("n must be positive")
    t0 = time.perf_counter()
    rows = run_sweep(cells, args.seed, args.threads)
    table = [_sweep_values(r) for r in rows]
    emit(args, SweepRow.CSV_HEADER, table, runtime={"wall_time": time.perf_counter() - t0})
    if any(r.error for r in rows):
        return EXIT_CONFIG
    if any(r.estimate and r.estimate.budget_exceeded for r in rows):
        return EXIT_BUDGET
    return EXIT_OK


def _sweep_values(r: SweepRow) -> list:
    e = r.estimate
    stats = [None] * 8 if e is None else [e.trials, e.successes, e.budget_exceeded, e.point,
                                          e.ci_low, e.ci_high, e.seed, e.cell]
    return [r.n, r.p, r.model.value, r.rule.value, *stats, r.error]


def cmd_crossing(args) -> int:
    if args.m < 1 or args.h < 1:
        raise ConfigError("--m and --h must be positive")
    header = ("m", "h", "p", "model", "rule", "trials", "traversed", "gap_free", "point",
              "ci_low", "ci_high", "gap_free_point", "predicted")
    table = []
    for p in _p_values(args):
        trav, free = crossing_outcomes(args.m, args.h, p, Model(args.model), Rule(args.rule),
                                       args.trials, args.seed, 0, args.threads)
        est = Estimate.from_counts(int(trav.sum()), len(trav), args.seed)
        if Model(args.model) is Model.TILES and 0 < p < 1:
            predicted = crossing_sequence((1 - p * p) ** args.h, args.m)[args.m]
        else:
            predicted = float("nan")
        table.append([args.m, args.h, p, args.model, args.rule, est.trials, int(trav.sum()),
                      int(free.sum()), est.point, est.ci_low, est.ci_high,
                      float(free.mean()), predicted])
    emit(args, header, table)
    return EXIT_OK


def _search(args, n: int):
    lo, hi = args.lo, args.hi
    if lo is None or hi is None:
        lam = _lam()
        lo = math.sqrt(lam / 3 / math.log(n)) if lo is None else lo
        hi = min(1.0, math.sqrt(3 * lam / math.log(n))) if hi is None else hi
    return search_critical_p(n, args.trials, args.seed, args.tol, Model(args.model),
                             Rule(args.rule), (lo, hi), threads=args.threads,
                             max_steps=args.max_steps)


def cmd_pc_search(args) -> int:
    n = _one(args.n or [64], "n")
    if n < 2:
        raise ConfigError("n must be at least 2")
    res = _search(args, n)
    header = ("p", "trials", "successes", "point", "ci_low", "ci_high")
    table = [[pr.p, pr.estimate.trials, pr.estimate.successes, pr.estimate.point,
              pr.estimate.ci_low, pr.estimate.ci_high] for pr in sorted(res.probes, key=lambda q: q.p)]
    summary = {"n": n, "p_hat": res.p_hat, "bracket": list(res.bracket), "ci": list(res.ci),
               "monotone": res.monotone, "warning": res.warning}
    emit(args, header, table, extra=summary)
    budget = any(pr.estimate.budget_exceeded for pr in res.probes)
    return EXIT_BUDGET if budget else EXIT_OK


def cmd_thresholds(args) -> int:
    ns = args.n or [256, 1024]
    if any(n < 2 for n in ns):
        raise ConfigError("every n must be at least 2")
    lam = _lam()
    table, errors, budget = [], {}, False
    for n in ns:
        try:
            res = _search(args, n)
        except (ValueError, RuntimeError) as exc:
            errors[str(n)] = str(exc)
            continue
        budget |= any(pr.estimate.budget_exceeded for pr in res.probes)
        lo, hi = res.bracket
        table.append([n, res.p_hat, lo, hi, res.p_hat * math.sqrt(math.log(n)),
                      threshold_p(n, 0.0, lam)])
    scaled = [r[4] for r in table]
    summary = {"scaled_positive": all(s > 0 for s in scaled),
               "scaled_decreasing": all(a > b for a, b in zip(scaled, scaled[1:])),
               "errors": errors}
    emit(args, THRESHOLD_HEADER, table, extra=summary)
    if errors:
        return EXIT_CONFIG
    return EXIT_BUDGET if budget else EXIT_OK


def cmd_beta(args) -> int:
    us = args.u or [0.5]
    if any(not 0 <= u <= 1 for u in us):
        raise ConfigError("u must lie in [0, 1]")
    table = [[u, beta(u), float(poly_F(u, beta(u)))] for u in us]
    emit(args, ("u", "beta", "residual"), table)
    return EXIT_OK


def cmd_lambda(args) -> int:
    if not args.tol > 0:
        raise ConfigError("--tol must be positive")
    q = lambda_with_error(args.tol)
    emit(args, ("lambda", "error_bound", "nodes"), [[q.value, q.error, q.nodes]])
    return EXIT_OK


def cmd_tiles(args) -> int:
    if args.config:
        n = _one(args.n or [0], "n")
        if n < 1:
            raise ConfigError("--n is required with --config")
        try:
            cfg = TileConfig.from_json(Path(args.config).read_text(encoding="utf-8"), n, args.height)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read tile config: {exc}") from exc
    else:
        n = _one(args.n or [16], "n")
        p = _one(args.p or [0.1], "p")
        _check_p(p)
        cfg = sample_tile_config(n, p, trial_rng(args.seed, 0, 0), args.height)
    sites = np.zeros((cfg.height, cfg.width), dtype=bool)
    for x, y in project_sites(cfg):
        sites[y - 1, x - 1] = True
    doc = {"metadata": metadata(args), "width": cfg.width, "height": cfg.height,
           "tiles": cfg.to_json_obj(), "sites": int(sites.sum()),
           "double_gap": double_gap_in(sites), "triples": len(find_triples(cfg))}
    if args.format == "csv":
        table = [[t["ax"], t["ay"], t["kind"]] for t in doc["tiles"]]
        emit(args, ("ax", "ay", "kind"), table,
             extra={k: doc[k] for k in ("width", "height", "sites", "double_gap", "triples")})
    else:
        _write(args.out, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_find_bvsr(args) -> int:
    n = _one(args.n or [3], "n")
    p = _one(args.p or [0.3], "p")
    _check_p(p)
    rep = find_bvsr(n, args.budget, args.seed, p)
    doc = {"metadata": metadata(args), "n": n, "mode": rep.mode, "examined": rep.examined,
           "found": rep.witness is not None, "message": rep.message(),
           "witness": format_ascii(rep.witness) if rep.witness is not None else None}
    if args.format == "json":
        _write(args.out, json.dumps(doc, indent=2) + "\n")
    else:
        text = rep.message() + "\n" + (doc["witness"] or "")
        _write(args.out, text)
    return EXIT_OK


# -- parsing ---------------------------------------------------------------------

_LAMBDA_CACHE: list[float] = []


def _lam() -> float:
    if not _LAMBDA_CACHE:
        from .analytics import lambda_value
        _LAMBDA_CACHE.append(lambda_value())
    return _LAMBDA_CACHE[0]


def _one(values, name):
    if isinstance(values, list):
        if len(values) != 1:
            raise ConfigError(f"--{name} takes a single value for this command")
        return values[0]
    return values


def _check_p(p: float) -> None:
    if not 0 <= p <= 1:
        raise ConfigError(f"p={p} outside [0, 1]")


def _p_values(args) -> list[float]:
    ps = list(args.p or [])
    if args.p_range:
        start, stop, step = args.p_range
        if step <= 0:
            raise ConfigError("--p-range step must be positive")
        k = int(math.floor((stop - start) / step + 1e-9)) + 1
        ps.extend(round(start + i * step, 12) for i in range(max(k, 0)))
    if not ps:
        raise ConfigError("give --p or --p-range")
    for p in ps:
        _check_p(p)
    return ps


def _add_common(p: argparse.ArgumentParser, fmt=("csv", "json"), model: str = "sites") -> None:
    p.add_argument("--n", type=int, nargs="+", help="grid side(s)")
    p.add_argument("--p", type=float, nargs="+", help="infection probability(ies)")
    p.add_argument("--p-range", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--model", choices=[m.value for m in Model], default=model)
    p.add_argument("--rule", choices=[r.value for r in Rule], default="recovery")
    p.add_argument("--format", choices=list(fmt), default=fmt[0])
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--meta", help="metadata file for CSV output (default: OUT.meta.json or stderr)")
    p.add_argument("--max-steps", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bootrec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bootrec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one trajectory")
    _add_common(s, fmt=("text", "json"))
    s.add_argument("--fixture", help="ASCII grid ('.' healthy, '#' infected, top row first)")
    s.add_argument("--populations", action="store_true", help="print per-step infected counts")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("percolation", help="estimate percolation probabilities")
    _add_common(s)
    s.set_defaults(func=cmd_percolation)

    s = sub.add_parser("crossing", help="estimate crossing probabilities")
    _add_common(s, model="tiles")
    s.add_argument("--m", type=int, required=True, help="rectangle width")
    s.add_argument("--h", type=int, required=True, help="rectangle height")
    s.set_defaults(func=cmd_crossing)

    for name, fn, helptext in (("pc-search", cmd_pc_search, "bisect for the critical probability"),
                               ("thresholds", cmd_thresholds, "critical probability against n")):
        s = sub.add_parser(name, help=helptext)
        _add_common(s)
        s.add_argument("--tol", type=float, default=0.004)
        s.add_argument("--lo", type=float, default=None)
        s.add_argument("--hi", type=float, default=None)
        s.set_defaults(func=fn)

    s = sub.add_parser("beta", help="evaluate beta(u)")
    _add_common(s)
    s.add_argument("--u", type=float, nargs="+")
    s.set_defaults(func=cmd_beta)

    s = sub.add_parser("lambda", help="integrate g over the positive axis")
    _add_common(s)
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_lambda)

    s = sub.add_parser("tiles", help="sample or inspect a tile configuration")
    _add_common(s, fmt=("json", "csv"), model="tiles")
    s.add_argument("--config", help="JSON list of {ax, ay, kind}")
    s.add_argument("--height", type=int, default=None)
    s.set_defaults(func=cmd_tiles)

    s = sub.add_parser("find-bvsr",
                       help="look for boards that fill under bootstrap but die under recovery")
    _add_common(s, fmt=("text", "json"))
    s.add_argument("--budget", type=int, default=100_000)
    s.set_defaults(func=cmd_find_bvsr)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "trials", 1) < 1:
        parser.error("--trials must be at least 1")
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be at least 1")
    if args.max_steps is not None and args.max_steps < 0:
        parser.error("--max-steps must be non-negative")
    try:
        return args.func(args)
    except AsciiParseError as exc:
        sys.stderr.write(f"bootrec: fixture error: {exc}\n")
        return EXIT_PARSE
    except ValueError as exc:
        sys.stderr.write(f"bootrec: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
