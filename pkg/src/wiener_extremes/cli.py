"""Command-line interface.

Every subcommand prints one JSON object per line (``--format csv`` gives a
flat table instead). Exit codes: 0 success, 2 usage or domain error,
3 numerical non-convergence, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import sys
from typing import Iterable, Sequence

import numpy as np

from . import copula, joint_dist, mc_oracle, pricing
from .errors import ConsistencyError, DomainError, ResourceError, SeriesConvergenceError
from .special_fn import SeriesControl

EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing helpers

def parse_values(text: str) -> list[float]:
    """Parse ``"1"``, ``"-inf"``, ``"0,0.5,1"`` or an inclusive grid ``"0:2:0.5"``."""
    out: list[float] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            pieces = part.split(":")
            if len(pieces) != 3:
                raise argparse.ArgumentTypeError(f"grid must be start:stop:step, got {part!r}")
            start, stop, step = (float(p) for p in pieces)
            if not (step > 0 and math.isfinite(start) and math.isfinite(stop)) or stop < start:
                raise argparse.ArgumentTypeError(f"bad grid {part!r}")
            n = int(math.floor((stop - start) / step + 1e-9))
            out.extend(start + i * step for i in range(n + 1))
        else:
            try:
                out.append(float(part))
            except ValueError:
                raise argparse.ArgumentTypeError(f"not a number: {part!r}") from None
    if not out:
        raise argparse.ArgumentTypeError(f"no values in {text!r}")
    return out


def _looks_like_value(token: str) -> bool:
    try:
        parse_values(token)
    except argparse.ArgumentTypeError:
        return False
    return True


def normalize_argv(argv: Sequence[str]) -> list[str]:
    # argparse reads "-inf" or "-1:0:0.5" as flags; glue them to the preceding option
    out: list[str] = []
    for tok in argv:
        if (out and tok.startswith("-") and out[-1].startswith("--") and "=" not in out[-1]
                and _looks_like_value(tok)):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def _flatten(values: list[list[float]] | None, default: list[float]) -> list[float]:
    if not values:
        return default
    return [v for chunk in values for v in chunk]


def _single(values: list[list[float]] | None, name: str) -> float:
    flat = _flatten(values, [])
    if len(flat) != 1:
        raise UsageError(f"{name} takes exactly one value here (use --sweep for grids)")
    return flat[0]


def _control(args) -> SeriesControl:
    return SeriesControl(tol=args.tol, max_terms=args.max_terms)


def _num(x: float):
    # JSON has no infinities; keep the CLI tokens
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _record(kind: str, quantity: str, inputs: dict, value, meta: dict, **extra) -> dict:
    rec = {"kind": kind, "quantity": quantity,
           "inputs": {k: _num(v) for k, v in inputs.items()},
           "value": value, "meta": meta}
    rec.update(extra)
    return rec


def _flat_row(rec: dict) -> dict:
    row = {"kind": rec["kind"], "quantity": rec["quantity"]}
    row.update(rec["inputs"])
    row["value"] = rec["value"]
    for key in ("marginals", "mc", "residuals"):
        for k, v in rec.get(key, {}).items():
            row[f"{key}.{k}"] = v
    for k, v in rec["meta"].items():
        row[f"meta.{k}"] = v
    return row


def emit(records: Iterable[dict], fmt: str, stream=None) -> None:
    stream = sys.stdout if stream is None else stream
    if fmt == "jsonl":
        for rec in records:
            stream.write(json.dumps(rec) + "\n")
        return
    rows = [_flat_row(r) for r in records]
    fields: list[str] = []
    for row in rows:
        fields.extend(k for k in row if k not in fields)
    writer = csv.DictWriter(stream, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def _mc_meta(args) -> dict:
    return {"seed": args.seed, "paths": args.paths, "steps": args.steps}


def _path_config(args, t: float = 1.0) -> mc_oracle.PathConfig:
    return mc_oracle.PathConfig(n_paths=args.paths, n_steps=args.steps, t=t, seed=args.seed)


def _z_score(analytic: float, est: float, se: float) -> float:
    return (est - analytic) / se if se > 0 else (0.0 if est == analytic else math.inf)


# ---------------------------------------------------------------------------
# subcommands

def cmd_cdf(args) -> list[dict]:
    ctrl = _control(args)
    xs = _flatten(args.x, [math.inf])
    ys = _flatten(args.y, [math.inf])
    zs = _flatten(args.z, [math.inf])
    t = args.t
    meta_base = {"tol": ctrl.tol, "max_terms": ctrl.max_terms}
    paths = None
    if args.with_mc:
        paths = mc_oracle.simulate_triples(_path_config(args, t), workers=args.workers,
                                           max_mem_mb=args.max_mem_mb)
    records = []
    rt = math.sqrt(t)
    for x, y, z in itertools.product(xs, ys, zs):
        value, terms = joint_dist.joint_cdf_std_terms(x / rt, y / rt, z / rt, ctrl)
        extra = {}
        if args.marginals:
            extra["marginals"] = {
                "w": joint_dist.norm_cdf(x / rt),
                "max": joint_dist.cdf_max(y, t),
                "min": joint_dist.cdf_min(z, t),
                "w_max": joint_dist.cdf_w_max(x, y, t),
                "w_min": joint_dist.cdf_w_min(x, z, t),
                "max_min": joint_dist.cdf_max_min(y, z, t, ctrl),
            }
        meta = dict(meta_base, terms=terms)
        if paths is not None:
            est = mc_oracle.empirical_joint_cdf(paths, x, y, z)
            se = math.sqrt(est * (1.0 - est) / len(paths))
            extra["mc"] = {"value": est, "se": se, "z": _z_score(value, est, se)}
            meta.update(_mc_meta(args))
        records.append(_record("cdf", "joint_cdf", {"x": x, "y": y, "z": z, "t": t},
                               value, meta, **extra))
    return records


def cmd_exit(args) -> list[dict]:
    ctrl = _control(args)
    bars = [joint_dist.BarrierPair(z, y)
            for y, z in itertools.product(_flatten(args.y, []), _flatten(args.z, []))]
    if not bars:
        raise UsageError("exit needs --y and --z")
    t = args.t
    paths = None
    if args.with_mc:
        paths = mc_oracle.simulate_triples(_path_config(args, t), barriers=bars,
                                           workers=args.workers, max_mem_mb=args.max_mem_mb)
    records = []
    for j, b in enumerate(bars):
        lower = joint_dist.prob_hit_lower_first(b, t, ctrl)
        upper = joint_dist.prob_hit_upper_first(b, t, ctrl)
        values = {"hit_lower_first": lower, "hit_upper_first": upper,
                  "exit_by": joint_dist.prob_exit_by(b, t, ctrl)}
        for name, value in values.items():
            meta = {"tol": ctrl.tol, "max_terms": ctrl.max_terms}
            extra = {}
            if paths is not None:
                side = paths.exit_side[j]
                hits = {"hit_lower_first": side == -1, "hit_upper_first": side == 1,
                        "exit_by": side != 0}[name]
                est = float(np.count_nonzero(hits)) / len(paths)
                se = math.sqrt(est * (1.0 - est) / len(paths))
                extra["mc"] = {"value": est, "se": se, "z": _z_score(value, est, se)}
                meta.update(_mc_meta(args))
            records.append(_record("cdf", name, {"y": b.y_bar, "z": b.z_bar, "t": t},
                                   value, meta, **extra))
    return records


_PAIR_FUNCS = {
    "wm": (copula.copula_wm, ("u", "v")),
    "wmin": (copula.copula_wmin, ("u", "w")),
    "maxmin": (copula.copula_maxmin_terms, ("v", "w")),
}


def cmd_copula(args) -> list[dict]:
    ctrl = _control(args)
    grids = {"u": _flatten(args.u, [1.0]), "v": _flatten(args.v, [1.0]),
             "w": _flatten(args.w, [1.0])}
    records = []
    if args.pair == "triple":
        for u, v, w in itertools.product(grids["u"], grids["v"], grids["w"]):
            value, terms = copula.copula3_terms(u, v, w, ctrl)
            extra = {}
            if args.check_involutions:
                extra["residuals"] = {"involution": copula.involution_residual3(u, v, w, ctrl)}
            records.append(_record("copula", "triple", {"u": u, "v": v, "w": w}, value,
                                   {"tol": ctrl.tol, "max_terms": ctrl.max_terms, "terms": terms},
                                   **extra))
        return records

    func, names = _PAIR_FUNCS[args.pair]
    for a, b in itertools.product(grids[names[0]], grids[names[1]]):
        out = func(a, b, ctrl)
        value, terms = out if isinstance(out, tuple) else (out, 0)
        extra = {}
        if args.check_involutions:
            res = (copula.survival_residual(a, b, ctrl) if args.pair == "wmin"
                   else copula.survival_residual(1.0 - a, 1.0 - b, ctrl) if args.pair == "wm"
                   else copula.self_duality_residual(a, b, ctrl))
            extra["residuals"] = {"involution": res}
        records.append(_record("copula", args.pair, {names[0]: a, names[1]: b}, value,
                               {"tol": ctrl.tol, "max_terms": ctrl.max_terms, "terms": terms},
                               **extra))
    return records


def cmd_rho(args) -> list[dict]:
    ctrl = _control(args)
    if args.pair == "maxmin":
        value, terms = copula.spearman_rho_maxmin_terms(ctrl)
    else:
        value, terms = (copula.spearman_rho_wm() if args.pair == "wm"
                        else copula.spearman_rho_wmin()), 0
    return [_record("rho", args.pair, {"pair": args.pair}, value,
                    {"tol": ctrl.tol, "max_terms": ctrl.max_terms, "terms": terms})]


def cmd_price(args) -> list[dict]:
    ctrl = _control(args)
    if args.sweep:
        lows, highs = _flatten(args.lower, []), _flatten(args.upper, [])
        if not lows or not highs:
            raise UsageError("--sweep needs --lower and --upper")
    else:
        lows, highs = [_single(args.lower, "--lower")], [_single(args.upper, "--upper")]
    s0, k = _single(args.s0, "--s0"), _single(args.strike, "--strike")
    common = dict(s0=s0, k_strike=k, t_mat=args.maturity, r_rate=args.rate, sigma=args.vol)
    contracts = [pricing.MarketParams(a_low=a, b_high=b, **common)
                 for a, b in itertools.product(lows, highs)]

    paths = None
    if args.with_mc:
        paths = mc_oracle.simulate_log_prices(contracts[0], _path_config(args), workers=args.workers,
                                              max_mem_mb=args.max_mem_mb)
    records = []
    for mp in contracts:
        value, terms = pricing.price_double_barrier_terms(mp, ctrl, args.max_k)
        meta = {"tol": ctrl.tol, "max_terms": ctrl.max_terms, "terms": terms}
        extra = {}
        if paths is not None:
            est, se = mc_oracle.mean_and_se(
                mc_oracle.knockout_payoffs(paths, mp, use_bg_correction=not args.no_bg))
            extra["mc"] = {"value": est, "se": se, "z": _z_score(value, est, se)}
            meta.update(_mc_meta(args), bg_correction=not args.no_bg)
        inputs = {"s0": mp.s0, "strike": mp.k_strike, "lower": mp.a_low, "upper": mp.b_high,
                  "maturity": mp.t_mat, "rate": mp.r_rate, "vol": mp.sigma}
        records.append(_record("price", "double_barrier_call", inputs, value, meta, **extra))
    return records


_SCATTER_COLUMNS = {"wm": ((0, 1), ("u", "v")), "wmin": ((0, 2), ("u", "w")),
                    "maxmin": ((1, 2), ("v", "w"))}


def cmd_scatter(args) -> list[dict]:
    paths = mc_oracle.simulate_triples(
        mc_oracle.PathConfig(args.n, args.steps, 1.0, args.seed),
        workers=args.workers, max_mem_mb=args.max_mem_mb)
    pobs = mc_oracle.pseudo_observations(paths)
    (i, j), names = _SCATTER_COLUMNS[args.pair]
    with open(args.out, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        writer.writerows(pobs[:, [i, j]].tolist())
    return [_record("scatter", args.pair, {"pair": args.pair, "n": args.n}, args.out,
                    {"seed": args.seed, "steps": args.steps, "paths": args.n})]


# ---------------------------------------------------------------------------

def _add_series_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-13, help="series truncation tolerance")
    p.add_argument("--max-terms", type=int, default=200, help="series term cap")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")


def _add_mc_flags(p: argparse.ArgumentParser, paths: int, steps: int) -> None:
    p.add_argument("--with-mc", action="store_true", help="append a Monte-Carlo estimate")
    p.add_argument("--paths", type=int, default=paths)
    p.add_argument("--steps", type=int, default=steps)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="threads for path simulation")
    p.add_argument("--max-mem-mb", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wiener-extremes",
        description="Joint law of a Wiener process with its running maximum and minimum.")
    sub = parser.add_subparsers(dest="command", required=True)
    level = dict(type=parse_values, action="append", metavar="VALUES")

    p = sub.add_parser("cdf", help="joint CDF of (W_t, M_t, m_t)")
    p.add_argument("--x", **level)
    p.add_argument("--y", **level)
    p.add_argument("--z", **level)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--marginals", action="store_true", help="add the six marginal CDFs")
    _add_series_flags(p)
    _add_mc_flags(p, 400_000, 10_000)
    p.set_defaults(func=cmd_cdf)

    p = sub.add_parser("exit", help="two-sided exit and first-hit probabilities")
    p.add_argument("--y", **level)
    p.add_argument("--z", **level)
    p.add_argument("--t", type=float, default=1.0)
    _add_series_flags(p)
    _add_mc_flags(p, 400_000, 10_000)
    p.set_defaults(func=cmd_exit)

    p = sub.add_parser("copula", help="trivariate copula and its bivariate margins")
    p.add_argument("--u", **level)
    p.add_argument("--v", **level)
    p.add_argument("--w", **level)
    p.add_argument("--pair", choices=("wm", "wmin", "maxmin", "triple"), default="triple")
    p.add_argument("--check-involutions", action="store_true")
    _add_series_flags(p)
    p.set_defaults(func=cmd_copula)

    p = sub.add_parser("rho", help="Spearman rho of a bivariate margin")
    p.add_argument("--pair", choices=("wm", "wmin", "maxmin"), required=True)
    _add_series_flags(p)
    p.set_defaults(func=cmd_rho)

    p = sub.add_parser("price", help="double-knock-out call")
    p.add_argument("--s0", **level, required=True)
    p.add_argument("--strike", **level, required=True)
    p.add_argument("--lower", **level, required=True)
    p.add_argument("--upper", **level, required=True)
    p.add_argument("--maturity", type=float, required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--vol", type=float, required=True)
    p.add_argument("--sweep", action="store_true", help="price every (lower, upper) combination")
    p.add_argument("--max-k", type=int, default=pricing.DEFAULT_MAX_K)
    p.add_argument("--no-bg", action="store_true", help="disable the discrete-monitoring shift")
    _add_series_flags(p)
    _add_mc_flags(p, 1_000_000, 10_000)
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("scatter", help="write rank pairs of simulated triples to CSV")
    p.add_argument("--pair", choices=("wm", "wmin", "maxmin"), required=True)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-mem-mb", type=float, default=None)
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.set_defaults(func=cmd_scatter)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(normalize_argv(sys.argv[1:] if argv is None else argv))
    try:
        records = args.func(args)
    except (DomainError, ResourceError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SeriesConvergenceError, ConsistencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    emit(records, args.format)
    return 0


if __name__ == "__main__":
    sys.exit(main())
