"""Command-line interface: ``prdecomp {gen,ar,probe,decompose,verify,corpus}``.

Exit codes: 0 success or verified, 1 usage error, 2 unverified or failed
check, 3 budget exceeded.  Axes on the command line are 1-based.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from itertools import product

import numpy as np

from . import __version__
from .engine import Config, decompose
from .errors import BudgetExceeded, PRDecompError
from .field import parse_field
from .formats import certificate_to_json, decomposition_from_json, dump, load, tensor_from_json, tensor_to_json
from .oracles import AuditConfig, check_inequalities
from .tensor import Tensor, random_tensor, verify_decomposition
from .variety import analytic_rank, default_budget, estimate_dim

EXIT_OK, EXIT_USAGE, EXIT_FAILED, EXIT_BUDGET = 0, 1, 2, 3

CSV_COLUMNS = [
    "tensor_id", "q", "dims", "ar_count", "ar_value", "pr", "gr_est", "cert_terms", "thm11", "thm12",
    "ar_le_pr", "gr_stable", "verified", "tool_version", "config_hash",
]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(t) for t in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"bad dims {text!r}; expected e.g. 2x3x2") from None
    if not dims or any(n < 1 for n in dims):
        raise UsageError(f"bad dims {text!r}")
    return dims


def config_hash(args, keys) -> str:
    blob = json.dumps({k: getattr(args, k, None) for k in keys}, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _axis(args, T: Tensor) -> int:
    if args.axis is None:
        return T.k - 1
    if not 1 <= args.axis <= T.k:
        raise UsageError(f"--axis must be between 1 and {T.k}")
    return args.axis - 1


def _budget(args) -> int:
    return args.budget if getattr(args, "budget", None) is not None else default_budget()


def _emit(text: str, out):
    if out and out != "-":
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def generate(field: str, dims, seed: int, density: float) -> Tensor:
    ctx = parse_field(field)
    rng = np.random.default_rng(seed)
    return random_tensor(ctx, dims, rng, density)


def cmd_gen(args) -> int:
    if not 0.0 <= args.density <= 1.0:
        raise UsageError("--density must lie in [0, 1]")
    T = generate(args.field, parse_dims(args.dims), args.seed, args.density)
    obj = tensor_to_json(T)
    obj["generator"] = {"seed": args.seed, "density": args.density, "version": __version__}
    _emit(dump(obj), args.out)
    return EXIT_OK


def cmd_ar(args) -> int:
    T = tensor_from_json(load(args.tensor))
    axis = _axis(args, T)
    ar = analytic_rank(T, axis, _budget(args))
    out = {"N": ar.N, "count": ar.count, "q": ar.q, "axis": axis + 1, "ar": ar.value, "ar_exact": str(ar),
           "version": __version__}
    _emit(dump(out), None)
    return EXIT_OK


def cmd_probe(args) -> int:
    T = tensor_from_json(load(args.tensor))
    axis = _axis(args, T)
    rep = estimate_dim(T, axis, args.E, _budget(args), with_candidates=True)
    out = rep.to_json()
    out["candidates"] = out["candidates"][: args.top]
    out["version"] = __version__
    _emit(dump(out), args.out)
    return EXIT_OK


def cmd_decompose(args) -> int:
    T = tensor_from_json(load(args.tensor))
    axis = _axis(args, T)
    cfg = Config(axis=axis, max_candidates=args.max_candidates, budget=_budget(args))
    cert = decompose(T, cfg)
    _emit(dump(certificate_to_json(cert, T.ctx, cfg.digest())), args.out)
    if not cert.verified:
        print(f"no verified decomposition; {len(cert.diagnostics.get('failures', []))} candidates failed",
              file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_verify(args) -> int:
    T = tensor_from_json(load(args.tensor))
    ctx, dec, meta = decomposition_from_json(load(args.cert))
    if ctx != T.ctx:
        print("certificate and tensor are over different fields", file=sys.stderr)
        return EXIT_FAILED
    try:
        res = verify_decomposition(T, dec)
    except PRDecompError as exc:
        print(f"invalid certificate: {exc}", file=sys.stderr)
        return EXIT_FAILED
    bound = meta.get("bound")
    within = bound is not None and res.term_count <= int(bound)
    print(json.dumps({"ok": res.ok, "terms": res.term_count, "bound": bound, "within_bound": within}))
    return EXIT_OK if (res.ok and within) else EXIT_FAILED


def _corpus_row(job):
    tid, T, budget, E, pr_budget, chash = job
    cfg = Config(budget=budget)
    cert = decompose(T, cfg)
    rec = check_inequalities(T, AuditConfig(E=E, budget=budget, pr_budget=pr_budget), certificate=cert)
    return {
        "tensor_id": tid,
        "q": T.ctx.q,
        "dims": "x".join(map(str, T.dims)),
        "ar_count": None if rec.ar is None else rec.ar.count,
        "ar_value": None if rec.ar is None else round(rec.ar.value, 6),
        "pr": rec.pr,
        "gr_est": rec.gr_est,
        "cert_terms": rec.cert_terms,
        "thm11": rec.holds_thm11,
        "thm12": rec.holds_thm12,
        "ar_le_pr": rec.holds_ar_le_pr,
        "gr_stable": rec.gr_stable,
        "verified": cert.verified,
        "tool_version": __version__,
        "config_hash": chash,
    }


def corpus_tensors(field: str, dims, count: int, seed: int, density: float, exhaustive: bool):
    ctx = parse_field(field)
    if exhaustive:
        size = int(np.prod(dims))
        if ctx.q**size > 1 << 20:
            raise UsageError(f"exhaustive sweep of {ctx.q}^{size} tensors is too large")
        for i, vals in enumerate(product(range(ctx.q), repeat=size)):
            yield f"t{i:06d}", Tensor(ctx, np.array(vals[::-1], dtype=np.int64).reshape(dims))
        return
    rng = np.random.default_rng(seed)
    for i in range(count):
        yield f"t{i:06d}", random_tensor(ctx, dims, rng, density)


def cmd_corpus(args) -> int:
    dims = parse_dims(args.dims)
    if args.count < 0:
        raise UsageError("--count must be >= 0")
    chash = config_hash(args, ["field", "dims", "count", "seed", "density", "exhaustive", "E", "pr_budget", "budget"])
    budget = _budget(args)
    jobs = [(tid, T, budget, args.E, args.pr_budget, chash)
            for tid, T in corpus_tensors(args.field, dims, args.count, args.seed, args.density, args.exhaustive)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_corpus_row, jobs))
    else:
        rows = [_corpus_row(j) for j in jobs]
    fmt = args.format or ("json" if (args.report or "").endswith(".json") else "csv")
    if fmt == "json":
        text = dump({"tool": "prdecomp", "version": __version__, "config_hash": chash, "rows": rows})
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if v is None else v) for k, v in row.items()})
        text = buf.getvalue()
    _emit(text, args.report)
    bad = sum(1 for r in rows if r["ar_le_pr"] is False or (r["thm12"] is False and r["gr_stable"]))
    if bad:
        print(f"{bad} rows violate an audited inequality", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="prdecomp", description="Certified partition-rank decompositions over finite fields.")
    p.add_argument("--version", action="version", version=f"prdecomp {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a random tensor")
    g.add_argument("--field", required=True, help="p, p^e or a prime power q")
    g.add_argument("--dims", required=True, help="e.g. 2x3x2")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--density", type=float, default=1.0)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("ar", help="exact analytic rank")
    a.add_argument("tensor")
    a.add_argument("--axis", type=int, default=None)
    a.add_argument("--budget", type=int, default=None)
    a.set_defaults(func=cmd_ar)

    pr = sub.add_parser("probe", help="kernel point counts, dimension estimate and candidate points")
    pr.add_argument("tensor")
    pr.add_argument("--axis", type=int, default=None)
    pr.add_argument("-E", type=int, default=3, help="largest extension degree")
    pr.add_argument("--top", type=int, default=10, help="candidates to list")
    pr.add_argument("--budget", type=int, default=None)
    pr.add_argument("--out", default=None)
    pr.set_defaults(func=cmd_probe)

    d = sub.add_parser("decompose", help="compute a certified decomposition")
    d.add_argument("tensor")
    d.add_argument("--axis", type=int, default=None)
    d.add_argument("--max-candidates", type=int, default=64)
    d.add_argument("--budget", type=int, default=None)
    d.add_argument("--out", default=None)
    d.set_defaults(func=cmd_decompose)

    v = sub.add_parser("verify", help="check a certificate against a tensor")
    v.add_argument("tensor")
    v.add_argument("cert")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("corpus", help="sweep gen -> decompose -> inequality audit")
    c.add_argument("--field", required=True)
    c.add_argument("--dims", required=True)
    c.add_argument("--count", type=int, default=10)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--density", type=float, default=1.0)
    c.add_argument("--exhaustive", action="store_true", help="every tensor of the shape instead of random ones")
    c.add_argument("-E", type=int, default=3)
    c.add_argument("--pr-budget", type=int, default=2_000_000)
    c.add_argument("--budget", type=int, default=None)
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--report", default=None)
    c.add_argument("--format", choices=["csv", "json"], default=None)
    c.set_defaults(func=cmd_corpus)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"prdecomp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"prdecomp: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"prdecomp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
