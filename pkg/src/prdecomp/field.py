"""Prime and extension finite fields F_{p^e}.

Elements are encoded as plain Python/NumPy integers in ``range(q)``: the
element ``c_0 + c_1 x + ... + c_{e-1} x^{e-1}`` (reduced modulo the field's
irreducible modulus) is stored as ``c_0 + c_1 p + ... + c_{e-1} p^{e-1}``.
The prime subfield is therefore ``range(p)`` in every extension, and the
same integer array can be pushed through the vectorized ``*_arr`` methods.

``FieldCtx`` also satisfies the small "field protocol" used by the generic
linear algebra (``zero``, ``one``, ``add``, ``sub``, ``mul``, ``div``,
``neg``, ``is_zero``, ``eq``), which lets the same code run over a concrete
field and over rational functions.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, DivisionByZero, NotPrime

#: enumeration-style operations refuse fields larger than this
MAX_ENUM_FIELD = 1 << 20
#: log/exp tables are only built below this size
TABLE_LIMIT = 1 << 20


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _prime_factors(n: int) -> list[int]:
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


# --- univariate helpers over F_p (coefficient lists, low degree first) -----


def _trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmod(a, m, p):
    a = _trim(list(a))
    dm = len(m) - 1
    inv_lead = pow(m[-1], -1, p)
    while len(a) - 1 >= dm and a:
        c = a[-1] * inv_lead % p
        shift = len(a) - 1 - dm
        for i, mi in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mi) % p
        _trim(a)
    return a


def _pmul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _trim(out)


def _psub(a, b, p):
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return _trim([(x - y) % p for x, y in zip(a, b)])


def _pgcd(a, b, p):
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _pmod(a, b, p)
    return a


def _xpow_mod(n, m, p):
    """x^n mod m over F_p."""
    result = [1]
    base = _pmod([0, 1], m, p)
    while n:
        if n & 1:
            result = _pmod(_pmul(result, base, p), m, p)
        base = _pmod(_pmul(base, base, p), m, p)
        n >>= 1
    return result


def is_irreducible(m, p: int) -> bool:
    """Ben-Or test for a monic polynomial ``m`` (low degree first) over F_p."""
    d = len(m) - 1
    if d <= 0:
        return False
    if d == 1:
        return True
    for i in range(1, d // 2 + 1):
        h = _psub(_xpow_mod(p**i, m, p), [0, 1], p)
        if len(_pgcd(m, h, p)) > 1:
            return False
    return True


def _smallest_irreducible(p: int, e: int) -> tuple[int, ...]:
    # candidates ordered by the integer encoding of their lower coefficients
    for code in range(p**e):
        low = [(code // p**i) % p for i in range(e)]
        if low[0] == 0:
            continue
        m = low + [1]
        if is_irreducible(m, p):
            return tuple(m)
    raise AssertionError("an irreducible polynomial of every degree exists")


class FieldCtx:
    """A finite field F_q, q = p^e, with a fixed irreducible modulus."""

    zero = 0
    one = 1

    def __init__(self, p: int, e: int = 1):
        if not is_prime(p):
            raise NotPrime(f"{p} is not prime")
        if e < 1:
            raise ValueError("extension degree must be >= 1")
        self.p = p
        self.e = e
        self.q = p**e
        self.modulus = _smallest_irreducible(p, e) if e > 1 else (0, 1)
        self._weights = np.array([p**i for i in range(e)], dtype=np.int64)
        self._tables = None

    # -- identity --------------------------------------------------------
    def __repr__(self):
        return f"FieldCtx(p={self.p}, e={self.e})"

    def __eq__(self, other):
        return isinstance(other, FieldCtx) and (self.p, self.e) == (other.p, other.e)

    def __hash__(self):
        return hash((self.p, self.e))

    def __reduce__(self):
        return (ff_make, (self.p, self.e))

    @property
    def is_prime_field(self) -> bool:
        return self.e == 1

    # -- digits ------------------------------------------------------------
    def digits(self, a: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.e):
            a, r = divmod(a, self.p)
            out.append(r)
        return tuple(out)

    def from_digits(self, coeffs) -> int:
        coeffs = list(coeffs)
        if len(coeffs) > self.e or any(not 0 <= c < self.p for c in coeffs):
            raise ValueError(f"invalid coefficient vector {coeffs} for F_{self.q}")
        return sum(c * self.p**i for i, c in enumerate(coeffs))

    def from_int(self, n: int) -> int:
        """Image of the integer n under Z -> F_q."""
        return n % self.p

    def _digits_arr(self, a):
        a = np.asarray(a, dtype=np.int64)
        return (a[..., None] // self._weights) % self.p

    def _undigits(self, d):
        return (np.asarray(d, dtype=np.int64) % self.p) @ self._weights

    # -- tables ------------------------------------------------------------
    def _mul_digits_vec(self, A, c):
        """Multiply each row of the digit array A by the fixed element with digits c."""
        p, e = self.p, self.e
        low = np.array(self.modulus[:e], dtype=np.int64)
        acc = np.zeros_like(A)
        cur = A.copy()
        for i in range(e):
            if c[i]:
                acc = (acc + c[i] * cur) % p
            top = cur[:, e - 1].copy()
            cur = np.roll(cur, 1, axis=1)
            cur[:, 0] = 0
            cur = (cur - top[:, None] * low[None, :]) % p
        return acc

    def _slow_mul(self, a, b):
        prod = _pmul(list(self.digits(a)), list(self.digits(b)), self.p)
        red = _pmod(prod, list(self.modulus), self.p)
        return sum(c * self.p**i for i, c in enumerate(red))

    def _build_tables(self):
        if self._tables is not None:
            return self._tables
        q, p, e = self.q, self.p, self.e
        if q > TABLE_LIMIT:
            self._tables = False
            return False
        if e == 1:
            g = self._primitive_prime()
            exp = np.empty(q - 1, dtype=np.int64)
            exp[0] = 1
            for i in range(1, q - 1):
                exp[i] = exp[i - 1] * g % p
        else:
            g = self._primitive_ext()
            gd = np.array(self.digits(g), dtype=np.int64)
            block = min(1024, q - 1)
            rows = np.zeros((block, e), dtype=np.int64)
            rows[0, 0] = 1
            for i in range(1, block):
                rows[i] = self._mul_digits_vec(rows[i - 1 : i], gd)[0]
            blocks = [rows]
            step = self._mul_digits_vec(rows[-1:], gd)[0]  # g^block
            total = block
            while total < q - 1:
                rows = self._mul_digits_vec(blocks[-1], step)
                blocks.append(rows)
                total += block
            exp = (np.concatenate(blocks)[: q - 1] @ self._weights).astype(np.int64)
        log = np.zeros(q, dtype=np.int64)
        log[exp] = np.arange(q - 1, dtype=np.int64)
        self._tables = (exp, log, exp.tolist(), log.tolist())
        return self._tables

    def _primitive_prime(self):
        p = self.p
        if p == 2:
            return 1
        fac = _prime_factors(p - 1)
        for g in range(2, p):
            if all(pow(g, (p - 1) // l, p) != 1 for l in fac):
                return g
        raise AssertionError

    def _primitive_ext(self):
        fac = _prime_factors(self.q - 1)
        for g in range(self.p, self.q):
            if all(self._slow_pow(g, (self.q - 1) // l) != 1 for l in fac):
                return g
        raise AssertionError

    def _slow_pow(self, a, n):
        r = 1
        while n:
            if n & 1:
                r = self._slow_mul(r, a)
            a = self._slow_mul(a, a)
            n >>= 1
        return r

    # -- scalar protocol ---------------------------------------------------
    def add(self, a: int, b: int) -> int:
        if self.e == 1:
            return (a + b) % self.p
        if self.p == 2:
            return a ^ b
        p = self.p
        out, w = 0, 1
        while a or b:
            a, ra = divmod(a, p)
            b, rb = divmod(b, p)
            out += ((ra + rb) % p) * w
            w *= p
        return out

    def neg(self, a: int) -> int:
        if self.e == 1:
            return -a % self.p
        if self.p == 2:
            return a
        p = self.p
        out, w = 0, 1
        while a:
            a, ra = divmod(a, p)
            out += (-ra % p) * w
            w *= p
        return out

    def sub(self, a: int, b: int) -> int:
        if self.e == 1:
            return (a - b) % self.p
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.e == 1:
            return a * b % self.p
        if a == 0 or b == 0:
            return 0
        t = self._build_tables()
        if not t:
            return self._slow_mul(a, b)
        return t[2][(t[3][a] + t[3][b]) % (self.q - 1)]

    def inv(self, a: int) -> int:
        if a == 0:
            raise DivisionByZero("inverse of zero")
        if self.e == 1:
            return pow(a, -1, self.p)
        t = self._build_tables()
        if not t:
            return self._slow_pow(a, self.q - 2)
        return t[2][(-t[3][a]) % (self.q - 1)]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, n: int) -> int:
        if n < 0:
            return self.pow(self.inv(a), -n)
        if self.e == 1:
            return pow(a, n, self.p)
        if a == 0:
            return 1 if n == 0 else 0
        t = self._build_tables()
        if not t:
            return self._slow_pow(a, n)
        return t[2][(t[3][a] * n) % (self.q - 1)]

    def frobenius(self, a: int, times: int = 1) -> int:
        """a^(p^times)."""
        return self.pow(a, self.p ** (times % self.e) if self.e > 1 else 1)

    def scale_int(self, a: int, n: int) -> int:
        """n * a for an integer n (repeated addition)."""
        return self.mul(a, n % self.p)

    def is_zero(self, a) -> bool:
        return a == 0

    def eq(self, a, b) -> bool:
        return a == b

    def elements(self) -> range:
        if self.q > MAX_ENUM_FIELD:
            raise BudgetExceeded(f"refusing to enumerate F_{self.q} (limit {MAX_ENUM_FIELD})")
        return range(self.q)

    # -- vectorized ---------------------------------------------------------
    def add_arr(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.e == 1:
            return (a + b) % self.p
        if self.p == 2:
            return a ^ b
        return self._undigits(self._digits_arr(a) + self._digits_arr(b))

    def neg_arr(self, a):
        a = np.asarray(a, dtype=np.int64)
        if self.e == 1:
            return -a % self.p
        if self.p == 2:
            return a.copy()
        return self._undigits(-self._digits_arr(a))

    def sub_arr(self, a, b):
        if self.e == 1:
            return (np.asarray(a, dtype=np.int64) - b) % self.p
        return self.add_arr(a, self.neg_arr(b))

    def mul_arr(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.e == 1:
            return a * b % self.p
        t = self._build_tables()
        if not t:
            a, b = np.broadcast_arrays(a, b)
            out = [self._slow_mul(int(x), int(y)) for x, y in zip(a.ravel(), b.ravel())]
            return np.array(out, dtype=np.int64).reshape(a.shape)
        exp, log = t[0], t[1]
        idx = (log[a] + log[b]) % (self.q - 1)
        return np.where((a == 0) | (b == 0), 0, exp[idx])

    def inv_arr(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise DivisionByZero("inverse of zero")
        t = self._build_tables()
        if not t:
            return np.vectorize(self.inv, otypes=[np.int64])(a)
        exp, log = t[0], t[1]
        return exp[(-log[a]) % (self.q - 1)]

    def scale_int_arr(self, a, n):
        a = np.asarray(a, dtype=np.int64)
        n = np.asarray(n, dtype=np.int64) % self.p
        if self.e == 1:
            return a * n % self.p
        return self._undigits(self._digits_arr(a) * n[..., None])

    def sum_arr(self, a, axis=None):
        a = np.asarray(a, dtype=np.int64)
        if self.e == 1:
            return a.sum(axis=axis) % self.p
        if self.p == 2:
            if axis is None:
                return np.bitwise_xor.reduce(a.ravel())
            return np.bitwise_xor.reduce(a, axis=axis)
        d = self._digits_arr(a)
        if axis is None:
            return self._undigits(d.reshape(-1, self.e).sum(axis=0))
        ax = axis if axis >= 0 else axis - 1
        return self._undigits(d.sum(axis=ax))

    def segment_sum(self, a, starts):
        """Field sums of consecutive segments of a 1-d array beginning at ``starts``."""
        a = np.asarray(a, dtype=np.int64)
        if self.e == 1:
            return np.add.reduceat(a, starts) % self.p
        if self.p == 2:
            return np.bitwise_xor.reduceat(a, starts)
        return self._undigits(np.add.reduceat(self._digits_arr(a), starts, axis=0))

    def pow_table(self, x: int, dmax: int) -> np.ndarray:
        out = np.empty(dmax + 1, dtype=np.int64)
        out[0] = 1
        for i in range(1, dmax + 1):
            out[i] = self.mul(int(out[i - 1]), x)
        return out

    def pow_arr(self, a, n: int):
        """Elementwise a^n for a fixed exponent n >= 0."""
        a = np.asarray(a, dtype=np.int64)
        result = np.ones_like(a)
        base = a.copy()
        while n:
            if n & 1:
                result = self.mul_arr(result, base)
            base = self.mul_arr(base, base)
            n >>= 1
        return result

    # -- serialization -------------------------------------------------------
    def serialize(self, a: int):
        return int(a) if self.e == 1 else list(self.digits(int(a)))

    def deserialize(self, obj) -> int:
        if isinstance(obj, (list, tuple)):
            return self.from_digits(obj)
        if self.e != 1:
            raise ValueError(f"F_{self.q} elements serialize as coefficient vectors")
        v = int(obj)
        if not 0 <= v < self.p:
            raise ValueError(f"{v} is not a reduced residue mod {self.p}")
        return v

    def to_json(self):
        return {"p": self.p, "e": self.e}


@functools.lru_cache(maxsize=None)
def ff_make(p: int, e: int = 1) -> FieldCtx:
    """The (cached, deterministic) field context for F_{p^e}."""
    return FieldCtx(p, e)


def parse_field(text: str) -> FieldCtx:
    """Parse ``"5"``, ``"2^3"`` or ``"8"`` (a prime power) into a field context."""
    text = str(text).strip()
    if "^" in text:
        p, e = text.split("^")
        return ff_make(int(p), int(e))
    q = int(text)
    for p in range(2, q + 1):
        if q % p == 0:
            e = 0
            while q % p == 0:
                q //= p
                e += 1
            if q != 1:
                raise NotPrime(f"{text} is not a prime power")
            return ff_make(p, e)
    raise NotPrime(f"{text} is not a prime power")


def embedding(small: FieldCtx, big: FieldCtx) -> np.ndarray:
    """Lookup table for a field embedding F_{p^a} -> F_{p^b} (a | b)."""
    if small.p != big.p or big.e % small.e:
        raise ValueError(f"no embedding of F_{small.q} into F_{big.q}")
    if small.e == 1:
        return np.arange(small.q, dtype=np.int64)
    # image of x: the smallest root of the small modulus in the big field
    root = None
    for a in range(big.q):
        acc = 0
        for c in reversed(small.modulus):
            acc = big.add(big.mul(acc, a), c)
        if acc == 0:
            root = a
            break
    assert root is not None
    powers = [big.pow(root, i) for i in range(small.e)]
    table = np.zeros(small.q, dtype=np.int64)
    for v in range(small.q):
        acc = 0
        for c, pw in zip(small.digits(v), powers):
            acc = big.add(acc, big.scale_int(pw, c))
        table[v] = acc
    return table


@dataclass(frozen=True)
class FieldElement:
    """A field element bound to its context, with operator overloading."""

    ctx: FieldCtx
    value: int

    @property
    def coeffs(self) -> tuple[int, ...]:
        return self.ctx.digits(self.value)

    def _other(self, b):
        if isinstance(b, FieldElement):
            if b.ctx != self.ctx:
                raise ValueError("elements of different fields")
            return b.value
        return self.ctx.from_int(int(b))

    def __add__(self, b):
        return FieldElement(self.ctx, self.ctx.add(self.value, self._other(b)))

    __radd__ = __add__

    def __sub__(self, b):
        return FieldElement(self.ctx, self.ctx.sub(self.value, self._other(b)))

    def __rsub__(self, b):
        return FieldElement(self.ctx, self.ctx.sub(self._other(b), self.value))

    def __mul__(self, b):
        return FieldElement(self.ctx, self.ctx.mul(self.value, self._other(b)))

    __rmul__ = __mul__

    def __truediv__(self, b):
        return FieldElement(self.ctx, self.ctx.div(self.value, self._other(b)))

    def __neg__(self):
        return FieldElement(self.ctx, self.ctx.neg(self.value))

    def __pow__(self, n: int):
        return FieldElement(self.ctx, self.ctx.pow(self.value, n))

    def inverse(self):
        return FieldElement(self.ctx, self.ctx.inv(self.value))

    def frobenius(self, times: int = 1):
        return FieldElement(self.ctx, self.ctx.frobenius(self.value, times))

    def __bool__(self):
        return self.value != 0


def ff_arith(a: FieldElement, b: FieldElement, op: str) -> FieldElement:
    ops = {"add": a.__add__, "sub": a.__sub__, "mul": a.__mul__, "div": a.__truediv__}
    return ops[op](b)


def ff_frobenius(a: FieldElement, times: int = 1) -> FieldElement:
    return a.frobenius(times)


def ff_enumerate(ctx: FieldCtx) -> list[FieldElement]:
    return [FieldElement(ctx, v) for v in ctx.elements()]
