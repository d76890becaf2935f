"""JSON formats for tensors, certificates and kernel reports.

Serialized index tuples and partition sides are 1-based; everything in
memory is 0-based.
"""

from __future__ import annotations

import json

import numpy as np

from . import __version__
from .engine import Certificate
from .errors import ShapeMismatch
from .field import FieldCtx, ff_make
from .tensor import PRDecomposition, PRTerm, Tensor, complement


def field_to_json(ctx: FieldCtx) -> dict:
    return {"p": ctx.p, "e": ctx.e}


def field_from_json(obj) -> FieldCtx:
    return ff_make(int(obj["p"]), int(obj.get("e", 1)))


def array_to_json(ctx: FieldCtx, arr: np.ndarray) -> dict:
    """Sparse form: dims plus the nonzero entries."""
    arr = np.asarray(arr, dtype=np.int64)
    entries = [
        {"idx": [int(i) + 1 for i in idx], "val": ctx.serialize(int(arr[tuple(idx)]))}
        for idx in np.argwhere(arr != 0)
    ]
    return {"dims": list(arr.shape), "entries": entries}


def array_from_json(ctx: FieldCtx, obj) -> np.ndarray:
    dims = tuple(int(n) for n in obj["dims"])
    if any(n < 1 for n in dims):
        raise ShapeMismatch(f"dims must be positive, got {dims}")
    arr = np.zeros(dims, dtype=np.int64)
    for ent in obj.get("entries", []):
        idx = tuple(int(i) - 1 for i in ent["idx"])
        if len(idx) != len(dims) or any(not 0 <= i < n for i, n in zip(idx, dims)):
            raise ShapeMismatch(f"index {ent['idx']} outside dims {list(dims)}")
        arr[idx] = ctx.deserialize(ent["val"])
    return arr


def tensor_to_json(T: Tensor) -> dict:
    out = {"field": field_to_json(T.ctx)}
    out.update(array_to_json(T.ctx, T.data))
    return out


def tensor_from_json(obj) -> Tensor:
    ctx = field_from_json(obj["field"])
    return Tensor(ctx, array_from_json(ctx, obj))


def certificate_to_json(cert: Certificate, ctx: FieldCtx, config_hash: str | None = None) -> dict:
    dec = cert.decomposition
    return {
        "tool": "prdecomp",
        "version": __version__,
        "config_hash": config_hash,
        "tensor": cert.tensor_ref,
        "dims": list(dec.dims),
        "field": field_to_json(ctx),
        "terms": [
            {"S": [a + 1 for a in t.S], "u": array_to_json(ctx, t.u), "v": array_to_json(ctx, t.v)}
            for t in dec.terms
        ],
        "verified": bool(cert.verified),
        "x0": None if cert.x0 is None else [ctx.serialize(int(v)) for v in cert.x0],
        "axis": cert.axis + 1,
        "r_used": cert.r_used,
        "codim_used": cert.codim_used,
        "bound": cert.bound,
        "diagnostics": cert.diagnostics,
    }


def decomposition_from_json(obj) -> tuple[FieldCtx, PRDecomposition, dict]:
    """The decomposition in a certificate file, plus the remaining metadata."""
    ctx = field_from_json(obj["field"])
    dims = tuple(int(n) for n in obj["dims"])
    k = len(dims)
    terms = []
    for t in obj["terms"]:
        S = tuple(sorted(int(a) - 1 for a in t["S"]))
        if not S or any(not 0 <= a < k for a in S) or len(S) == k:
            raise ShapeMismatch(f"invalid partition side {t['S']}")
        u = array_from_json(ctx, t["u"])
        v = array_from_json(ctx, t["v"])
        if (k - 1) in S:
            S, u, v = complement(S, k), v, u
        terms.append(PRTerm(S, u, v))
    meta = {key: obj.get(key) for key in ("verified", "bound", "axis", "r_used", "x0")}
    return ctx, PRDecomposition(ctx, dims, terms), meta


def dump(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is not None and path != "-":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def load(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
