"""Exact arithmetic in (Z/p^K)[s] / (s^(p^n) - 1), the group ring of the
cyclic group of order p^n with generator sigma.

An element is a fixed-length coefficient vector c_0..c_{p^n-1} standing for
sum(c_k * sigma^k).  Coefficients live either in Z/p^K ("truncated" mode,
with explicit precision K) or in Z ("exact" mode, used wherever later
stages need rational reductions or unbounded integers).  Values are
immutable and every operation returns a fresh element.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

TRUNCATED = "truncated"
EXACT = "exact"


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class RingContext:
    """Ambient ring parameters: prime p, group order p^n, precision K.

    K is ignored (kept at 0) in exact mode.
    """

    p: int
    n: int
    K: int = 0
    mode: str = TRUNCATED

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p must be prime, got {self.p}")
        if self.n < 1:
            raise ValueError("n >= 1 required")
        if self.mode not in (TRUNCATED, EXACT):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == TRUNCATED and self.K < 1:
            raise ValueError("K >= 1 required in truncated mode")
        if self.mode == EXACT and self.K != 0:
            raise ValueError("exact mode carries no precision")

    @property
    def order(self) -> int:
        return self.p ** self.n

    @property
    def modulus(self) -> int:
        """Coefficient modulus p^K, or 0 in exact mode."""
        return self.p ** self.K if self.mode == TRUNCATED else 0

    def exact(self) -> RingContext:
        return RingContext(self.p, self.n, 0, EXACT)

    def truncated(self, K: int) -> RingContext:
        return RingContext(self.p, self.n, K, TRUNCATED)

    def to_json(self) -> dict:
        return {"p": self.p, "n": self.n, "K": self.K, "mode": self.mode}

    @staticmethod
    def from_json(obj: dict) -> RingContext:
        return RingContext(int(obj["p"]), int(obj["n"]), int(obj.get("K", 0)), obj.get("mode", TRUNCATED))


def _reduce_coeff(c: int, modulus: int) -> int:
    # canonical range [0, p^K) in truncated mode, plain int otherwise
    return c % modulus if modulus else c


@dataclass(frozen=True)
class GroupRingElem:
    """An element sum(c_k sigma^k) with exactly p^n canonical coefficients."""

    ctx: RingContext
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.coeffs) != self.ctx.order:
            raise ValueError("coefficient vector has wrong length")

    # -- constructors ------------------------------------------------

    @staticmethod
    def make(ctx: RingContext, coeffs) -> GroupRingElem:
        """Build an element from any coefficient sequence.

        Shorter sequences are zero-padded; indices >= p^n fold back via
        sigma^(p^n) = 1.  Coefficients must be plain integers.
        """
        order = ctx.order
        acc = [0] * order
        for k, c in enumerate(coeffs):
            if not isinstance(c, int) or isinstance(c, bool):
                raise ValueError(f"coefficient {c!r} not representable in {ctx.mode} mode")
            acc[k % order] += c
        m = ctx.modulus
        return GroupRingElem(ctx, tuple(_reduce_coeff(c, m) for c in acc))

    # -- ring operations ---------------------------------------------

    def _check_ctx(self, other: GroupRingElem):
        if self.ctx != other.ctx:
            raise ValueError("context mismatch")

    def __add__(self, other: GroupRingElem) -> GroupRingElem:
        self._check_ctx(other)
        m = self.ctx.modulus
        return GroupRingElem(self.ctx, tuple(_reduce_coeff(a + b, m) for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: GroupRingElem) -> GroupRingElem:
        self._check_ctx(other)
        m = self.ctx.modulus
        return GroupRingElem(self.ctx, tuple(_reduce_coeff(a - b, m) for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> GroupRingElem:
        m = self.ctx.modulus
        return GroupRingElem(self.ctx, tuple(_reduce_coeff(-a, m) for a in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, int):
            return self.scale(other)
        self._check_ctx(other)
        order = self.ctx.order
        acc = [0] * order
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                if b:
                    k = i + j
                    if k >= order:
                        k -= order
                    acc[k] += a * b
        m = self.ctx.modulus
        return GroupRingElem(self.ctx, tuple(_reduce_coeff(c, m) for c in acc))

    __rmul__ = __mul__

    def scale(self, c: int) -> GroupRingElem:
        m = self.ctx.modulus
        return GroupRingElem(self.ctx, tuple(_reduce_coeff(c * a, m) for a in self.coeffs))

    def __pow__(self, e: int) -> GroupRingElem:
        if e < 0:
            raise ValueError("negative powers not supported")
        result = one(self.ctx)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    # -- maps ---------------------------------------------------------

    def augmentation(self) -> int:
        """Sum of coefficients, i.e. the image under sigma -> 1."""
        return _reduce_coeff(sum(self.coeffs), self.ctx.modulus)

    def degree(self) -> int:
        """Largest k with c_k nonzero, or -1 for the zero element."""
        for k in range(self.ctx.order - 1, -1, -1):
            if self.coeffs[k]:
                return k
        return -1

    def to_exact(self) -> GroupRingElem:
        """Lift canonical coefficients to exact-integer mode."""
        return GroupRingElem(self.ctx.exact(), self.coeffs)

    def truncate(self, K: int) -> GroupRingElem:
        m = self.ctx.p ** K
        return GroupRingElem(self.ctx.truncated(K), tuple(c % m for c in self.coeffs))

    # -- serialization ------------------------------------------------

    def to_text(self) -> str:
        """Canonical text form "c0 + c1*s + c2*s^2 + ..." (all terms)."""
        parts = []
        for k, c in enumerate(self.coeffs):
            if k == 0:
                parts.append(str(c))
            elif k == 1:
                parts.append(f"{c}*s")
            else:
                parts.append(f"{c}*s^{k}")
        return " + ".join(parts)

    @staticmethod
    def from_text(ctx: RingContext, text: str) -> GroupRingElem:
        coeffs = []
        for part in text.split(" + "):
            coeffs.append(int(part.split("*")[0]))
        return GroupRingElem.make(ctx, coeffs)

    def to_json(self) -> dict:
        return {"ctx": self.ctx.to_json(), "coeffs": list(self.coeffs)}

    @staticmethod
    def from_json(obj: dict) -> GroupRingElem:
        return GroupRingElem.make(RingContext.from_json(obj["ctx"]), [int(c) for c in obj["coeffs"]])

    def __str__(self) -> str:
        return self.to_text()


# -- distinguished elements -------------------------------------------


def zero(ctx: RingContext) -> GroupRingElem:
    return GroupRingElem(ctx, (0,) * ctx.order)


def one(ctx: RingContext) -> GroupRingElem:
    return GroupRingElem.make(ctx, [1])


def const(ctx: RingContext, c: int) -> GroupRingElem:
    return GroupRingElem.make(ctx, [c])


def sigma_power(ctx: RingContext, k: int) -> GroupRingElem:
    coeffs = [0] * ctx.order
    coeffs[k % ctx.order] = 1
    return GroupRingElem.make(ctx, coeffs)


def sigma(ctx: RingContext) -> GroupRingElem:
    return sigma_power(ctx, 1)


def norm_element(ctx: RingContext) -> GroupRingElem:
    """N = 1 + sigma + ... + sigma^(p^n - 1)."""
    return GroupRingElem.make(ctx, [1] * ctx.order)


def abel_element(ctx: RingContext) -> GroupRingElem:
    """A = 0 + sigma + 2 sigma^2 + ... + (p^n - 1) sigma^(p^n - 1).

    Satisfies A * (1 - sigma) = N - p^n, the discrete Abel summation.
    """
    return GroupRingElem.make(ctx, list(range(ctx.order)))


def _check_level(ctx: RingContext, m: int):
    if not 0 <= m <= ctx.n:
        raise ValueError(f"level m={m} out of range 0..{ctx.n}")


def geometric_sum(ctx: RingContext, m: int) -> GroupRingElem:
    """S_m = 1 + sigma + ... + sigma^(p^m - 1), so (1 - sigma) S_m = 1 - sigma^(p^m)."""
    _check_level(ctx, m)
    return GroupRingElem.make(ctx, [1] * ctx.p ** m)


def norm_level(ctx: RingContext, m: int) -> GroupRingElem:
    """N_m = sum of sigma^(k p^m) for k < p^(n-m), the level-m partial norm."""
    _check_level(ctx, m)
    step = ctx.p ** m
    coeffs = [0] * ctx.order
    for k in range(ctx.p ** (ctx.n - m)):
        coeffs[k * step] = 1
    return GroupRingElem.make(ctx, coeffs)


def abel_level(ctx: RingContext, m: int) -> GroupRingElem:
    """A_m = sum of k sigma^(k p^m), satisfying A_m (1 - sigma^(p^m)) = N_m - p^(n-m)."""
    _check_level(ctx, m)
    step = ctx.p ** m
    coeffs = [0] * ctx.order
    for k in range(ctx.p ** (ctx.n - m)):
        coeffs[k * step] = k
    return GroupRingElem.make(ctx, coeffs)


def special_element(ctx: RingContext, which: str, m: int | None = None) -> GroupRingElem:
    """Dispatch on the classical names: N, A, S_m, A_m, N_m."""
    if which == "N":
        return norm_element(ctx)
    if which == "A":
        return abel_element(ctx)
    if m is None:
        raise ValueError(f"{which} needs a level m")
    table = {"S_m": geometric_sum, "A_m": abel_level, "N_m": norm_level}
    if which not in table:
        raise ValueError(f"unknown special element {which!r}")
    return table[which](ctx, m)


# -- euclidean division ---------------------------------------------


def _lead_inverse(ctx: RingContext, lead: int) -> int:
    if ctx.mode == EXACT:
        if lead not in (1, -1):
            raise ValueError("non-unit leading coefficient")
        return lead
    if lead % ctx.p == 0:
        raise ValueError("non-unit leading coefficient")
    return pow(lead, -1, ctx.modulus)


def divmod_poly(u: GroupRingElem, f: GroupRingElem) -> tuple[GroupRingElem, GroupRingElem]:
    """Euclidean division u = f*q + r with deg r < deg f.

    Both operands are read as polynomials in sigma of degree < p^n; the
    leading coefficient of f must be a unit of the coefficient ring.
    """
    u._check_ctx(f)
    ctx = u.ctx
    d = f.degree()
    if d < 0:
        raise ValueError("division by zero")
    inv = _lead_inverse(ctx, f.coeffs[d])
    m = ctx.modulus
    rem = list(u.coeffs)
    quo = [0] * ctx.order
    for k in range(ctx.order - 1, d - 1, -1):
        if rem[k] == 0:
            continue
        c = _reduce_coeff(rem[k] * inv, m)
        quo[k - d] = c
        for j in range(d + 1):
            rem[k - d + j] = _reduce_coeff(rem[k - d + j] - c * f.coeffs[j], m)
    return GroupRingElem(ctx, tuple(quo)), GroupRingElem(ctx, tuple(rem))


# GroupRingElem supports the builtin divmod
GroupRingElem.__divmod__ = lambda self, other: divmod_poly(self, other)


# -- component fields -------------------------------------------------


def cyclotomic_level(p: int, k: int) -> list[int]:
    """Coefficients of the level-k irreducible factor of X^(p^n) - 1 over Q.

    Level 0 is X - 1; level k >= 1 is 1 + X^(p^(k-1)) + X^(2 p^(k-1)) + ...
    with p terms (degree p^k - p^(k-1)).
    """
    if k == 0:
        return [-1, 1]
    step = p ** (k - 1)
    coeffs = [0] * (step * (p - 1) + 1)
    for j in range(p):
        coeffs[j * step] = 1
    return coeffs


def poly_rem_fractions(coeffs, modpoly) -> list[Fraction]:
    """Remainder of an integer/rational polynomial modulo a monic one."""
    rem = [Fraction(c) for c in coeffs]
    d = len(modpoly) - 1
    lead = Fraction(modpoly[d])
    for k in range(len(rem) - 1, d - 1, -1):
        if rem[k] == 0:
            continue
        c = rem[k] / lead
        for j in range(d + 1):
            rem[k - d + j] -= c * Fraction(modpoly[j])
    return rem[:d] + [Fraction(0)] * max(0, d - len(rem))


def component_image(u: GroupRingElem, k: int) -> tuple[Fraction, ...]:
    """Image of an exact-integer element in the level-k component field.

    The field is Q[X]/(P_k) with P_k the level-k factor of X^(p^n) - 1;
    the image is returned as a rational coefficient vector of length
    deg P_k.
    """
    if u.ctx.mode != EXACT:
        raise ValueError("component evaluation needs exact-integer mode")
    if not 0 <= k <= u.ctx.n:
        raise ValueError(f"component index {k} out of range 0..{u.ctx.n}")
    modpoly = cyclotomic_level(u.ctx.p, k)
    rem = poly_rem_fractions(u.coeffs, modpoly)
    return tuple(rem)
