"""Command-line driver.

Subcommands: ``generate``, ``factorize``, ``invert``, ``pack``,
``simulate`` and ``bench``.  Every output file gets a JSON sidecar
``<file>.manifest.json`` recording the command, parameters, seed, package
version and SHA-256 digests of inputs and outputs.

Exit codes: 0 ok, 2 usage, 3 I/O, 4 pattern violation, 5 definiteness,
6 disconnected input, 1 any other library error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import mmio
from .bench import flop_scaling, scaling_summary
from .dyadic_index import DyadicPattern
from .dyadic_matrix import TAU_ZERO, DyadicMatrix, detect_parameters
from .errors import DisconnectedError, DyapackError
from .factorization import invert, sequential_orthogonalize
from .generators import FAMILIES, GenSpec
from .packing import neighborhoods, pack, report_stats
from .packing.separators import recursive_dyadic_pack
from .simulate import STUDIES, run_study

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3
RESIDUAL_MAX_D = 8192


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _default_seed() -> int:
    env = os.environ.get("DYAPACK_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"DYAPACK_SEED must be an integer, got {env!r}")


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _params(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _manifest(args, inputs, outputs):
    """Write one sidecar per output file."""
    record = {
        "command": args.command,
        "parameters": _params(args),
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "threads": args.threads,
        "inputs": {str(p): _digest(p) for p in inputs},
        "outputs": {str(p): _digest(p) for p in outputs},
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    for p in outputs:
        Path(f"{p}.manifest.json").write_text(json.dumps(record, indent=2, default=str) + "\n")


def write_csv(path, rows: list[dict]):
    fields = []
    for r in rows:
        fields += [k for k in r if k not in fields]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\r\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def _read(path) -> np.ndarray:
    try:
        return mmio.read_matrix(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read {path}: {exc}")


def _parse_pair(text: str) -> tuple[int, int]:
    try:
        N, k = (int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"--dyadic expects N,k (got {text!r})")
    return N, k


def parse_range(text: str) -> list[int]:
    """``"4-10"``, ``"4..10"`` or ``"4,6,8"`` to a list of ints."""
    text = text.strip()
    try:
        for sep in ("..", "-"):
            if sep in text:
                a, b = text.split(sep)
                return list(range(int(a), int(b) + 1))
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise UsageError(f"cannot parse range {text!r}")


def _parse_value(v: str):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v


def _parse_kv(items, lists: bool = False) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k] = [_parse_value(x) for x in v.split(",")] if lists else _parse_value(v)
    return out


def _load_dyadic(args) -> DyadicMatrix:
    M = _read(args.input)
    if args.dyadic:
        N, k = _parse_pair(args.dyadic)
    else:
        meta = mmio.read_metadata(args.input)["dyadic"]
        if meta is not None and not args.auto_detect:
            N, k = meta[0], meta[1]
        elif args.auto_detect:
            N, k = detect_parameters(M, args.tol)
        else:
            raise UsageError("no dyadic header in the input; pass --dyadic N,k or --auto-detect")
    if M.shape[0] != k * (2**N - 1):
        raise UsageError(f"matrix of size {M.shape[0]} does not match N={N}, k={k}")
    return DyadicMatrix.from_dense(M, DyadicPattern(N, k, "s"), tol=args.tol)


# ------------------------------------------------------------- commands

def cmd_generate(args):
    spec = GenSpec(args.family, _parse_kv(args.param), args.seed)
    try:
        M = spec.generate()
    except KeyError as exc:
        raise UsageError(f"family {args.family} needs parameter {exc}")
    mmio.write_matrix(args.out, M, genspec=spec)
    _manifest(args, [], [args.out])
    d = M.d if isinstance(M, DyadicMatrix) else M.shape[0]
    print(f"wrote {args.family} matrix of size {d} to {args.out}")


def _fast_flag(text):
    return {"auto": "auto", "on": True, "off": False}[text]


def cmd_factorize(args):
    sigma = _load_dyadic(args)
    t0 = time.perf_counter()
    res = sequential_orthogonalize(sigma, fast_path=_fast_flag(args.fast_path))
    seconds = time.perf_counter() - t0
    residual = res.residual if sigma.d <= RESIDUAL_MAX_D else float("nan")
    row = {"N": sigma.N, "k": sigma.k, "d": sigma.d, "fast_path": res.fast_path,
           "residual": residual, "block_multiplies": res.flops.block_multiplies,
           "block_adds": res.flops.block_adds, "scalar_ops": res.flops.scalar_ops,
           "seconds": seconds}
    outputs = []
    if args.out:
        mmio.write_matrix(args.out, res.P)
        outputs.append(args.out)
    if args.report:
        write_csv(args.report, [row])
        outputs.append(args.report)
    _manifest(args, [args.input], outputs)
    print(f"factorized d={sigma.d} (N={sigma.N}, k={sigma.k}) fast_path={res.fast_path} "
          f"residual={residual:.3e} block_multiplies={res.flops.block_multiplies}")


def cmd_invert(args):
    sigma = _load_dyadic(args)
    res = sequential_orthogonalize(sigma, fast_path=_fast_flag(args.fast_path))
    inv = invert(sigma, res)
    mmio.write_matrix(args.out, inv, pattern=False)
    _manifest(args, [args.input], [args.out])
    print(f"wrote inverse of size {sigma.d} to {args.out}")


def cmd_pack(args):
    M = _read(args.input)
    S = (np.abs(M) > args.threshold).astype(np.int8)
    if not np.array_equal(S, S.T):
        raise UsageError("input pattern is not symmetric")
    try:
        neighborhoods(S).require_connected()
    except DisconnectedError as exc:
        print(f"input is disconnected: {len(exc.components)} components", file=sys.stderr)
        for i, comp in enumerate(exc.components, 1):
            print(f"component {i}: " + " ".join(str(x + 1) for x in comp), file=sys.stderr)
        raise
    outputs = []
    if args.recursive:
        pi, tree = recursive_dyadic_pack(S, max_depth=args.max_depth, seed=args.seed,
                                         t=args.order)
        rep = report_stats(S, pi, s=args.order)
        if args.separators:
            write_csv(args.separators, [
                {"level": lev, "size": len(sep), "rows": " ".join(str(x + 1) for x in sep)}
                for lev, sep in tree.separators()])
            outputs.append(args.separators)
    else:
        pi, _ = pack(S, t=args.order, seed=args.seed)
        rep = report_stats(S, pi, m=args.delta or None, s=args.order)
    if args.out:
        mmio.write_permutation(args.out, pi)
        outputs.append(args.out)
    if args.report:
        write_csv(args.report, [rep.as_row()])
        outputs.append(args.report)
    _manifest(args, [args.input], outputs)
    print(f"packed d={rep.d}: half_bandwidth={rep.half_bandwidth} "
          f"half_width_l1={rep.half_width_l1} eta_bar={rep.eta_bar:.4f} F({rep.s})={rep.fill:.4f}")


def cmd_simulate(args):
    grid = _parse_kv(args.grid, lists=True)
    rows = run_study(args.study, grid, reps=args.reps, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.study}.csv"
    write_csv(path, rows)
    _manifest(args, [], [path])
    failed = sum(r["failures"] for r in rows)
    print(f"{args.study}: {len(rows)} cells x {args.reps} reps -> {path} ({failed} failed replicates)")


def cmd_bench(args):
    Ns = parse_range(args.N)
    if not Ns:
        raise UsageError("empty range of heights")
    rows = flop_scaling(args.k, Ns, args.family, args.seed)
    fits = scaling_summary(rows) if len(Ns) >= 2 else []
    records = [{"record": "size", **r} for r in rows] + [{"record": "fit", **f} for f in fits]
    write_csv(args.out, records)
    _manifest(args, [], [args.out])
    for f in fits:
        if "r2" in f:
            print(f"{f['path']:>8} vs {f['reference']:<6} slope={f['slope']:.3f} R2={f['r2']:.5f}")


# --------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dyapack", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--threads", type=int, default=1,
                    help="parallelism cap (recorded; outputs do not depend on it)")
    sub = ap.add_subparsers(dest="command", required=True)

    def seeded(p):
        p.add_argument("--seed", type=int, default=None,
                       help="random seed (default: $DYAPACK_SEED or 0)")

    p = sub.add_parser("generate", help="write a generated test matrix")
    p.add_argument("family", choices=FAMILIES)
    p.add_argument("--param", "-p", action="append", metavar="KEY=VALUE",
                   help="family parameter, e.g. d=127 lam=5 p=0.5 N=4 k=2")
    p.add_argument("--out", required=True)
    seeded(p)
    p.set_defaults(func=cmd_generate)

    for name, func, helptext in (("factorize", cmd_factorize, "factorize an SPD dyadic matrix"),
                                 ("invert", cmd_invert, "dense inverse of an SPD dyadic matrix")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("input")
        g = p.add_mutually_exclusive_group()
        g.add_argument("--dyadic", metavar="N,k")
        g.add_argument("--auto-detect", action="store_true")
        p.add_argument("--fast-path", choices=("auto", "on", "off"), default="auto")
        p.add_argument("--tol", type=float, default=TAU_ZERO,
                       help="entries at most this large count as zero")
        if name == "factorize":
            p.add_argument("--out", help="Matrix Market file for P")
            p.add_argument("--report", help="CSV report")
        else:
            p.add_argument("--out", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("pack", help="find a bandwidth-reducing permutation")
    p.add_argument("input")
    p.add_argument("--order", "-s", type=int, default=1, help="neighborhood order")
    p.add_argument("--threshold", type=float, default=0.0,
                   help="entries with magnitude above this are nonzero")
    p.add_argument("--delta", type=int, action="append", metavar="M",
                   help="also report delta_M (repeatable)")
    p.add_argument("--recursive", action="store_true",
                   help="extract nested separators of a dyadic-like matrix")
    p.add_argument("--max-depth", type=int)
    p.add_argument("--separators", help="CSV of separators (with --recursive)")
    p.add_argument("--out", help="one-based permutation file")
    p.add_argument("--report", help="CSV report")
    seeded(p)
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("simulate", help="repeated packing experiments")
    p.add_argument("study", choices=STUDIES)
    p.add_argument("--grid", action="append", metavar="KEY=V1,V2",
                   help="override a grid axis, e.g. p=0.25,0.5")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--out", required=True, help="output directory")
    seeded(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="operation-count scaling of the factorization")
    p.add_argument("--family", choices=("spd_dyadic", "band"), default="spd_dyadic")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--N", required=True, help="heights, e.g. 4-10 or 4,6,8")
    p.add_argument("--out", required=True)
    seeded(p)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _default_seed()
        args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DyapackError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
