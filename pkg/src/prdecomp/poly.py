"""Sparse multivariate polynomials, rational functions and rational maps.

``MultiPoly`` stores its monomials as two NumPy arrays: an ``(nterms, nvars)``
exponent matrix and a vector of encoded field coefficients, kept sorted in
descending graded-lexicographic order with no zero coefficients.  This makes
the canonical form unique, so structural equality is exact equality.

``RatFunc`` keeps its denominator *factored*: a tuple of ``(poly, exponent)``
pairs with monic, pairwise distinct factor polynomials.  Nothing is reduced to
lowest terms; only constant factors, monomial content and a numerator that is
a scalar multiple of a factor are cancelled.  Sums bring operands to the
least common multiple of their factor lists, so a construction that only ever
divides by one determinant keeps denominators equal to powers of it.
"""

from __future__ import annotations

import contextlib
import contextvars
from itertools import product as iproduct

import numpy as np

from .errors import DegreeBlowup, OutsideDomain, ShapeMismatch
from .field import FieldCtx

_DEGREE_CEILING = contextvars.ContextVar("degree_ceiling", default=512)


@contextlib.contextmanager
def degree_ceiling(limit: int):
    """Temporarily change the total-degree ceiling enforced by multiplication."""
    token = _DEGREE_CEILING.set(limit)
    try:
        yield
    finally:
        _DEGREE_CEILING.reset(token)


def _group(exps: np.ndarray):
    """Sort rows of ``exps`` in descending grlex order and group duplicates.

    Returns (order, starts): ``exps[order]`` is sorted and ``starts`` marks the
    first row of every run of equal rows.
    """
    t, n = exps.shape
    if t == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    deg = exps.sum(axis=1)
    bits = max(1, int(exps.max()).bit_length())
    dbits = max(1, int(deg.max()).bit_length())
    if bits * n + dbits <= 62:
        key = deg.copy()
        for i in range(n):
            key = (key << bits) | exps[:, i]
        order = np.argsort(-key, kind="stable")
        ks = key[order]
        starts = np.flatnonzero(np.concatenate(([True], ks[1:] != ks[:-1])))
        return order, starts
    keys = [-exps[:, i] for i in range(n - 1, -1, -1)] + [-deg]
    order = np.lexsort(keys)
    es = exps[order]
    starts = np.flatnonzero(np.concatenate(([True], np.any(es[1:] != es[:-1], axis=1))))
    return order, starts


class MultiPoly:
    """A polynomial in ``nvars`` variables over a finite field."""

    __slots__ = ("ctx", "nvars", "exps", "coeffs", "_key")

    def __init__(self, ctx: FieldCtx, nvars: int, exps=None, coeffs=None, *, canonical=False):
        self.ctx = ctx
        self.nvars = nvars
        if exps is None:
            exps = np.zeros((0, nvars), dtype=np.int64)
            coeffs = np.zeros(0, dtype=np.int64)
        exps = np.asarray(exps, dtype=np.int64).reshape(-1, nvars)
        coeffs = np.asarray(coeffs, dtype=np.int64).reshape(-1)
        if not canonical:
            exps, coeffs = self._canonicalize(ctx, exps, coeffs)
        self.exps = exps
        self.coeffs = coeffs
        self._key = None

    @staticmethod
    def _canonicalize(ctx, exps, coeffs):
        if len(coeffs) == 0:
            return exps, coeffs
        if np.any(exps < 0):
            raise ValueError("negative exponent")
        order, starts = _group(exps)
        c = ctx.segment_sum(coeffs[order], starts)
        e = exps[order][starts]
        keep = c != 0
        return np.ascontiguousarray(e[keep]), np.ascontiguousarray(c[keep])

    # -- constructors ------------------------------------------------------
    @classmethod
    def zero(cls, ctx, nvars):
        return cls(ctx, nvars, canonical=True)

    @classmethod
    def const(cls, ctx, nvars, c: int):
        if c == 0:
            return cls.zero(ctx, nvars)
        return cls(ctx, nvars, np.zeros((1, nvars), dtype=np.int64), [c], canonical=True)

    @classmethod
    def var(cls, ctx, nvars, i: int):
        if not 0 <= i < nvars:
            raise ValueError(f"variable index {i} out of range for {nvars} variables")
        e = np.zeros((1, nvars), dtype=np.int64)
        e[0, i] = 1
        return cls(ctx, nvars, e, [1], canonical=True)

    @classmethod
    def from_dict(cls, ctx, nvars, terms: dict):
        if not terms:
            return cls.zero(ctx, nvars)
        exps = np.array([list(k) for k in terms], dtype=np.int64)
        return cls(ctx, nvars, exps, [v % ctx.q if ctx.e == 1 else v for v in terms.values()])

    def to_dict(self) -> dict:
        return {tuple(int(x) for x in e): int(c) for e, c in zip(self.exps, self.coeffs)}

    # -- properties --------------------------------------------------------
    @property
    def nterms(self) -> int:
        return len(self.coeffs)

    def is_zero(self) -> bool:
        return len(self.coeffs) == 0

    def is_constant(self) -> bool:
        return len(self.coeffs) == 0 or (len(self.coeffs) == 1 and not self.exps[0].any())

    def constant_value(self) -> int:
        """The value of a constant polynomial."""
        return 0 if len(self.coeffs) == 0 else int(self.coeffs[0])

    def is_one(self) -> bool:
        return self.is_constant() and self.constant_value() == 1

    def is_monomial(self) -> bool:
        return len(self.coeffs) == 1

    def total_degree(self) -> int:
        if len(self.coeffs) == 0:
            return -1
        return int(self.exps[0].sum())

    def degree_in(self, i: int) -> int:
        return int(self.exps[:, i].max()) if len(self.coeffs) else -1

    def depends_on(self, i: int) -> bool:
        return bool(len(self.coeffs)) and bool(np.any(self.exps[:, i] > 0))

    def leading_coeff(self) -> int:
        return int(self.coeffs[0]) if len(self.coeffs) else 0

    def key(self):
        if self._key is None:
            self._key = (self.ctx.p, self.ctx.e, self.nvars, self.exps.tobytes(), self.coeffs.tobytes())
        return self._key

    def __eq__(self, other):
        return isinstance(other, MultiPoly) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        if self.is_zero():
            return "0"
        parts = []
        for e, c in zip(self.exps, self.coeffs):
            mono = "*".join(f"x{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            cs = str(self.ctx.serialize(int(c)))
            parts.append(cs if not mono else (mono if c == 1 else f"{cs}*{mono}"))
        return " + ".join(parts)

    # -- arithmetic ----------------------------------------------------------
    def _check(self, other):
        if other.nvars != self.nvars or other.ctx != self.ctx:
            raise ShapeMismatch("polynomials over different rings")

    def __add__(self, other: MultiPoly) -> MultiPoly:
        self._check(other)
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        return MultiPoly(
            self.ctx,
            self.nvars,
            np.concatenate([self.exps, other.exps]),
            np.concatenate([self.coeffs, other.coeffs]),
        )

    def __neg__(self) -> MultiPoly:
        return MultiPoly(self.ctx, self.nvars, self.exps, self.ctx.neg_arr(self.coeffs), canonical=True)

    def __sub__(self, other: MultiPoly) -> MultiPoly:
        return self + (-other)

    def scale(self, c: int) -> MultiPoly:
        if c == 0:
            return MultiPoly.zero(self.ctx, self.nvars)
        if c == 1:
            return self
        return MultiPoly(self.ctx, self.nvars, self.exps, self.ctx.mul_arr(self.coeffs, c), canonical=True)

    def __mul__(self, other: MultiPoly) -> MultiPoly:
        self._check(other)
        if self.is_zero() or other.is_zero():
            return MultiPoly.zero(self.ctx, self.nvars)
        if self.is_constant():
            return other.scale(self.constant_value())
        if other.is_constant():
            return self.scale(other.constant_value())
        limit = _DEGREE_CEILING.get()
        if self.total_degree() + other.total_degree() > limit:
            raise DegreeBlowup(
                f"product degree {self.total_degree() + other.total_degree()} exceeds ceiling {limit}"
            )
        exps = (self.exps[:, None, :] + other.exps[None, :, :]).reshape(-1, self.nvars)
        coeffs = self.ctx.mul_arr(self.coeffs[:, None], other.coeffs[None, :]).reshape(-1)
        if self.is_monomial() or other.is_monomial():
            # a monomial times a canonical polynomial stays sorted and distinct
            keep = coeffs != 0
            return MultiPoly(self.ctx, self.nvars, exps[keep], coeffs[keep], canonical=True)
        return MultiPoly(self.ctx, self.nvars, exps, coeffs)

    def __pow__(self, n: int) -> MultiPoly:
        result = MultiPoly.const(self.ctx, self.nvars, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def partial(self, i: int) -> MultiPoly:
        """Formal partial derivative with respect to variable ``i`` (0-based)."""
        mask = self.exps[:, i] > 0
        if not mask.any():
            return MultiPoly.zero(self.ctx, self.nvars)
        exps = self.exps[mask].copy()
        mult = exps[:, i].copy()
        exps[:, i] -= 1
        coeffs = self.ctx.scale_int_arr(self.coeffs[mask], mult)
        keep = coeffs != 0
        # decrementing one variable keeps the grlex order of the survivors
        return MultiPoly(self.ctx, self.nvars, exps[keep], coeffs[keep], canonical=True)

    def monomial_content(self) -> np.ndarray:
        return self.exps.min(axis=0) if len(self.coeffs) else np.zeros(self.nvars, dtype=np.int64)

    def shift_down(self, content) -> MultiPoly:
        """Divide by the monomial x^content (which must divide every term)."""
        return MultiPoly(self.ctx, self.nvars, self.exps - np.asarray(content), self.coeffs, canonical=True)

    def proportional_to(self, other: MultiPoly):
        """Return c with self == c * other, or None."""
        if len(self.coeffs) != len(other.coeffs) or not len(self.coeffs):
            return None
        if not np.array_equal(self.exps, other.exps):
            return None
        c = self.ctx.div(int(self.coeffs[0]), int(other.coeffs[0]))
        if np.array_equal(self.ctx.mul_arr(other.coeffs, c), self.coeffs):
            return c
        return None

    # -- evaluation --------------------------------------------------------
    def __call__(self, x) -> int:
        return poly_eval(self, x)

    def eval_many(self, points) -> np.ndarray:
        """Evaluate at every row of an integer array of points, vectorized."""
        pts = np.asarray(points, dtype=np.int64).reshape(-1, self.nvars)
        ctx = self.ctx
        if self.is_zero():
            return np.zeros(len(pts), dtype=np.int64)
        vals = np.broadcast_to(self.coeffs, (len(pts), self.nterms)).copy()
        for i in range(self.nvars):
            col = self.exps[:, i]
            dmax = int(col.max())
            if dmax == 0:
                continue
            table = np.ones((len(pts), dmax + 1), dtype=np.int64)
            for d in range(1, dmax + 1):
                table[:, d] = ctx.mul_arr(table[:, d - 1], pts[:, i])
            vals = ctx.mul_arr(vals, table[:, col])
        return ctx.sum_arr(vals, axis=1)


def poly_eval(f: MultiPoly, x) -> int:
    """Exact value of ``f`` at the point ``x`` (a sequence of encoded elements)."""
    if len(x) != f.nvars:
        raise ShapeMismatch(f"point has {len(x)} coordinates, polynomial has {f.nvars} variables")
    if f.is_zero():
        return 0
    ctx = f.ctx
    vals = f.coeffs.copy()
    for i in range(f.nvars):
        col = f.exps[:, i]
        dmax = int(col.max())
        if dmax:
            vals = ctx.mul_arr(vals, ctx.pow_table(int(x[i]), dmax)[col])
    return int(ctx.sum_arr(vals))


# ---------------------------------------------------------------------------
# Rational functions
# ---------------------------------------------------------------------------


def _factor_items(factors: dict):
    return tuple(sorted(factors.values(), key=lambda fe: fe[0].key()))


class RatFunc:
    """``num / prod(f**e for f, e in factors)`` with monic distinct factors."""

    __slots__ = ("num", "factors")

    def __init__(self, num: MultiPoly, den: MultiPoly | None = None, *, factors=None, _normalized=False):
        if _normalized:
            self.num, self.factors = num, factors
            return
        fdict = {}
        if factors:
            for f, e in factors:
                _add_factor(fdict, f, e)
        if den is not None:
            if den.is_zero():
                raise OutsideDomain("zero denominator")
            _add_factor(fdict, den, 1)
        self.num, self.factors = _normalize(num, fdict)

    # -- construction ----------------------------------------------------------
    @classmethod
    def poly(cls, f: MultiPoly) -> RatFunc:
        return cls(f, factors=(), _normalized=True)

    @classmethod
    def const(cls, ctx, nvars, c) -> RatFunc:
        return cls.poly(MultiPoly.const(ctx, nvars, c))

    @property
    def ctx(self):
        return self.num.ctx

    @property
    def nvars(self):
        return self.num.nvars

    @property
    def den(self) -> MultiPoly:
        out = MultiPoly.const(self.ctx, self.nvars, 1)
        for f, e in self.factors:
            out = out * f**e
        return out

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return not self.factors

    def is_constant(self) -> bool:
        return not self.factors and self.num.is_constant()

    def is_one(self) -> bool:
        return not self.factors and self.num.is_one()

    def total_degree(self) -> tuple[int, int]:
        return self.num.total_degree(), sum(e * f.total_degree() for f, e in self.factors)

    def __repr__(self):
        if not self.factors:
            return f"({self.num!r})"
        den = " * ".join(f"({f!r})^{e}" if e > 1 else f"({f!r})" for f, e in self.factors)
        return f"({self.num!r}) / ({den})"

    # -- arithmetic -----------------------------------------------------------
    def __add__(self, other: RatFunc) -> RatFunc:
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        if not self.factors and not other.factors:
            return RatFunc.poly(self.num + other.num)
        fa = {f.key(): (f, e) for f, e in self.factors}
        fb = {f.key(): (f, e) for f, e in other.factors}
        if fa == fb or (fa.keys() == fb.keys() and all(fa[k][1] == fb[k][1] for k in fa)):
            return RatFunc(self.num + other.num, factors=self.factors)
        lcm = {}
        ma = MultiPoly.const(self.ctx, self.nvars, 1)
        mb = ma
        for k in fa.keys() | fb.keys():
            f = (fa.get(k) or fb.get(k))[0]
            ea = fa.get(k, (f, 0))[1]
            eb = fb.get(k, (f, 0))[1]
            e = max(ea, eb)
            lcm[k] = (f, e)
            if e > ea:
                ma = ma * f ** (e - ea)
            if e > eb:
                mb = mb * f ** (e - eb)
        num = self.num * ma + other.num * mb
        return RatFunc(num, factors=tuple(lcm.values()))

    def __neg__(self) -> RatFunc:
        return RatFunc(-self.num, factors=self.factors, _normalized=True)

    def __sub__(self, other: RatFunc) -> RatFunc:
        return self + (-other)

    def scale(self, c: int) -> RatFunc:
        if c == 0:
            return RatFunc.poly(MultiPoly.zero(self.ctx, self.nvars))
        return RatFunc(self.num.scale(c), factors=self.factors, _normalized=True)

    def __mul__(self, other: RatFunc) -> RatFunc:
        if self.num.is_zero() or other.num.is_zero():
            return RatFunc.poly(MultiPoly.zero(self.ctx, self.nvars))
        if self.is_constant():
            return other.scale(self.num.constant_value())
        if other.is_constant():
            return self.scale(other.num.constant_value())
        if not self.factors and not other.factors:
            return RatFunc.poly(self.num * other.num)
        return RatFunc(self.num * other.num, factors=self.factors + other.factors)

    def inverse(self) -> RatFunc:
        if self.num.is_zero():
            raise OutsideDomain("inverse of the zero rational function")
        num = MultiPoly.const(self.ctx, self.nvars, 1)
        for f, e in self.factors:
            num = num * f**e
        return RatFunc(num, self.num)

    def __truediv__(self, other: RatFunc) -> RatFunc:
        if other.num.is_zero():
            raise OutsideDomain("division by the zero rational function")
        if other.is_constant():
            return self.scale(self.ctx.inv(other.num.constant_value()))
        return self * other.inverse()

    def __pow__(self, n: int) -> RatFunc:
        if n < 0:
            return self.inverse() ** (-n)
        return RatFunc(self.num**n, factors=tuple((f, e * n) for f, e in self.factors))

    def equals(self, other: RatFunc) -> bool:
        """Equality as rational functions (numerator of the difference is zero)."""
        return (self - other).is_zero()

    def partial(self, i: int) -> RatFunc:
        """Formal partial derivative by the quotient rule.

        For ``p / prod q_k^{e_k}`` only the factors that involve ``x_i`` gain one
        power: the result is ``(dp * Q - p * sum_k e_k dq_k Q/q_k) / (prod q_k^{e_k} * Q)``
        with ``Q`` the product of those factors.
        """
        dep = [(f, e) for f, e in self.factors if f.depends_on(i)]
        dp = self.num.partial(i)
        if not dep:
            return RatFunc(dp, factors=self.factors)
        one = MultiPoly.const(self.ctx, self.nvars, 1)
        prod_all = one
        for f, _ in dep:
            prod_all = prod_all * f
        num = dp * prod_all
        for k, (f, e) in enumerate(dep):
            rest = one
            for k2, (g, _) in enumerate(dep):
                if k2 != k:
                    rest = rest * g
            term = self.num * f.partial(i) * rest
            num = num - term.scale(self.ctx.from_int(e))
        bumped = tuple((f, e + 1) if f.depends_on(i) else (f, e) for f, e in self.factors)
        return RatFunc(num, factors=bumped)

    # -- evaluation -----------------------------------------------------------
    def in_domain(self, x) -> bool:
        return all(poly_eval(f, x) != 0 for f, _ in self.factors)

    def __call__(self, x) -> int:
        return rat_eval(self, x)

    def eval_many(self, points):
        """Values at many points; raises OutsideDomain if any denominator vanishes."""
        ctx = self.ctx
        num = self.num.eval_many(points)
        if not self.factors:
            return num
        den = np.ones_like(num)
        for f, e in self.factors:
            v = f.eval_many(points)
            if np.any(v == 0):
                raise OutsideDomain("denominator vanishes at a sample point")
            den = ctx.mul_arr(den, ctx.pow_arr(v, e))
        return ctx.mul_arr(num, ctx.inv_arr(den))

    def compose(self, subs) -> RatFunc:
        """Substitute the rational functions ``subs`` for the variables."""
        out = compose_poly(self.num, subs)
        for f, e in self.factors:
            out = out / compose_poly(f, subs) ** e
        return out


def _add_factor(fdict, f: MultiPoly, e: int):
    if e == 0:
        return
    k = f.key()
    if k in fdict:
        fdict[k] = (f, fdict[k][1] + e)
    else:
        fdict[k] = (f, e)


def _normalize(num: MultiPoly, fdict: dict):
    """Cheap normalization: monic factors, constant/monomial stripping, obvious cancellation."""
    ctx = num.ctx
    if num.is_zero():
        return MultiPoly.zero(ctx, num.nvars), ()
    out = {}
    scale = 1
    for f, e in fdict.values():
        if e == 0:
            continue
        if f.is_zero():
            raise OutsideDomain("zero denominator factor")
        lc = f.leading_coeff()
        if f.is_constant():
            scale = ctx.mul(scale, ctx.inv(ctx.pow(lc, e)))
            continue
        if lc != 1:
            scale = ctx.mul(scale, ctx.inv(ctx.pow(lc, e)))
            f = f.scale(ctx.inv(lc))
        if f.is_monomial():
            for i, d in enumerate(f.exps[0]):
                if d:
                    _add_factor(out, MultiPoly.var(ctx, num.nvars, i), int(d) * e)
            continue
        _add_factor(out, f, e)
    if scale != 1:
        num = num.scale(scale)
    # strip monomial content shared with variable factors
    content = num.monomial_content()
    if content.any():
        cut = np.zeros(num.nvars, dtype=np.int64)
        for k, (f, e) in list(out.items()):
            if f.is_monomial():
                i = int(np.flatnonzero(f.exps[0])[0])
                c = min(int(content[i]), e)
                if c:
                    cut[i] = c
                    if e == c:
                        del out[k]
                    else:
                        out[k] = (f, e - c)
        if cut.any():
            num = num.shift_down(cut)
    # a numerator that is a scalar multiple of a factor cancels one power
    for k, (f, e) in list(out.items()):
        if not f.is_monomial():
            c = num.proportional_to(f)
            if c is not None:
                num = MultiPoly.const(ctx, num.nvars, c)
                if e == 1:
                    del out[k]
                else:
                    out[k] = (f, e - 1)
                break
    return num, _factor_items(out)


def compose_poly(f: MultiPoly, subs) -> RatFunc:
    """f(subs_1, ..., subs_n) as a rational function."""
    if len(subs) != f.nvars:
        raise ShapeMismatch(f"{len(subs)} substitutions for {f.nvars} variables")
    ctx = f.ctx
    target_nvars = subs[0].nvars if subs else 0
    out = RatFunc.const(ctx, target_nvars, 0)
    cache = {}

    def power(i, d):
        if (i, d) not in cache:
            cache[(i, d)] = subs[i] ** d
        return cache[(i, d)]

    for e, c in zip(f.exps, f.coeffs):
        term = RatFunc.const(ctx, target_nvars, int(c))
        for i, d in enumerate(e):
            if d:
                term = term * power(i, int(d))
        out = out + term
    return out


def rat_eval(f: RatFunc, x) -> int:
    ctx = f.ctx
    den = 1
    for g, e in f.factors:
        v = poly_eval(g, x)
        if v == 0:
            raise OutsideDomain(f"denominator factor vanishes at {tuple(int(t) for t in x)}")
        den = ctx.mul(den, ctx.pow(v, e))
    return ctx.div(poly_eval(f.num, x), den)


def partial_derivative(f: RatFunc, j: int) -> RatFunc:
    return f.partial(j)


class RatFuncField:
    """Field protocol over rational functions in ``nvars`` variables."""

    def __init__(self, ctx: FieldCtx, nvars: int):
        self.ctx = ctx
        self.nvars = nvars
        self.zero = RatFunc.const(ctx, nvars, 0)
        self.one = RatFunc.const(ctx, nvars, 1)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def div(self, a, b):
        return a / b

    def inv(self, a):
        return a.inverse()

    def is_zero(self, a):
        return a.is_zero()

    def eq(self, a, b):
        return a.equals(b)

    def from_int(self, n):
        return RatFunc.const(self.ctx, self.nvars, self.ctx.from_int(n))


# ---------------------------------------------------------------------------
# Rational maps
# ---------------------------------------------------------------------------


def obj_array(shape, fill=None) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    if fill is not None:
        for idx in np.ndindex(*shape):
            out[idx] = fill
    return out


class RationalMap:
    """A tensor-shaped tuple of rational functions F^n --> F^shape.

    ``denominators`` records the domain: the map is defined exactly where all
    of these polynomials are nonzero.  Derivatives carry the list forward, so
    a map and its derivatives always share one domain.
    """

    def __init__(self, ctx: FieldCtx, arity: int, components: np.ndarray, denominators=None):
        self.ctx = ctx
        self.arity = arity
        self.components = components
        if denominators is None:
            dens = {}
            for f in components.flat:
                for g, _ in f.factors:
                    dens[g.key()] = g
            denominators = tuple(dens[k] for k in sorted(dens))
        self.denominators = tuple(denominators)

    @classmethod
    def from_polys(cls, ctx, arity, polys) -> RationalMap:
        arr = np.asarray(polys, dtype=object)
        comps = obj_array(arr.shape)
        for idx in np.ndindex(*arr.shape):
            comps[idx] = RatFunc.poly(arr[idx])
        return cls(ctx, arity, comps, ())

    @classmethod
    def identity(cls, ctx, n) -> RationalMap:
        return cls.from_polys(ctx, n, [MultiPoly.var(ctx, n, i) for i in range(n)])

    @property
    def shape(self) -> tuple[int, ...]:
        return self.components.shape

    def in_domain(self, x) -> bool:
        return all(poly_eval(g, x) != 0 for g in self.denominators)

    def __call__(self, x) -> np.ndarray:
        if not self.in_domain(x):
            raise OutsideDomain(f"point {tuple(int(t) for t in x)} is outside the map's domain")
        out = np.zeros(self.shape, dtype=np.int64)
        for idx in np.ndindex(*self.shape):
            out[idx] = rat_eval(self.components[idx], x)
        return out

    def eval_many(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.int64).reshape(-1, self.arity)
        out = np.zeros((len(pts),) + self.shape, dtype=np.int64)
        for idx in np.ndindex(*self.shape):
            out[(slice(None),) + idx] = self.components[idx].eval_many(pts)
        return out

    def max_degree(self) -> int:
        return max((max(f.total_degree()) for f in self.components.flat), default=-1)


def total_derivative(F: RationalMap) -> RationalMap:
    """Jacobian map: component ``idx + (j,)`` is the partial of component ``idx`` by x_j."""
    n = F.arity
    out = obj_array(F.shape + (n,))
    for idx in np.ndindex(*F.shape):
        f = F.components[idx]
        for j in range(n):
            out[idx + (j,)] = f.partial(j)
    return RationalMap(F.ctx, n, out, F.denominators)


def higher_derivative(F: RationalMap, a: int) -> RationalMap:
    if a < 0:
        raise ValueError("derivative order must be >= 0")
    for _ in range(a):
        F = total_derivative(F)
    return F


def map_compose(F: RationalMap, G: RationalMap) -> RationalMap:
    """F o G for a vector-valued G whose length is the arity of F."""
    if len(G.shape) != 1 or G.shape[0] != F.arity:
        raise ShapeMismatch(f"cannot compose a map of arity {F.arity} with codomain shape {G.shape}")
    subs = list(G.components)
    out = obj_array(F.shape)
    for idx in np.ndindex(*F.shape):
        out[idx] = F.components[idx].compose(subs)
    dens = {g.key(): g for g in G.denominators}
    for g in F.denominators:
        comp = compose_poly(g, subs)
        for h in (comp.num,) + tuple(f for f, _ in comp.factors):
            if not h.is_constant():
                dens[h.key()] = h
    return RationalMap(F.ctx, G.arity, out, tuple(dens[k] for k in sorted(dens)))


def jacobian_polys(forms, nvars) -> list[list[MultiPoly]]:
    return [[f.partial(j) for j in range(nvars)] for f in forms]


def all_points(ctx: FieldCtx, n: int):
    return iproduct(ctx.elements(), repeat=n)
