"""The measurement engine: truncated Smith normal form, stabilized module
structure (rank and torsion), two-periodic cohomology of the cyclic group,
Herbrand quotients, character multiplicities, element orders, and the
direct-factor test.

Rank and torsion are read off truncations at two precisions that must
agree.  Cohomology is different: truncating first would manufacture
spurious kernels (multiplication by p^n is injective on Z_p but never on
Z/p^K), so kernels and images are computed on exact integer lattices and
only the final finite quotient is reduced to its p-part.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .group_ring import (
    EXACT,
    GroupRingElem,
    cyclotomic_level,
    component_image,
    poly_rem_fractions,
)
from .linalg import (
    RationalEchelon,
    dvr_snf_valuations,
    fp_rank,
    frac_valuation,
    identity_int,
    integer_diagonal_coltf,
    integer_kernel,
    lattice_basis,
    matmul_int,
    rational_rank,
    truncated_snf,
    valuation,
)
from .presentation import (
    FiniteModel,
    MembershipTester,
    Presentation,
    default_precision,
    scale_element,
    sigma_permutation,
    translated_rows,
    truncate,
)


class StabilizationError(RuntimeError):
    """A finite invariant failed to agree across two precisions."""


@dataclass(frozen=True)
class SNFResult:
    """Cokernel exponents of a matrix over Z/p^K, one per ambient column.

    Exponent e contributes a cyclic factor Z/p^e; e = K means the column
    is free at this precision.
    """

    exponents: tuple[int, ...]
    K: int


def snf_exponents(matrix, ncols: int, p: int, K: int) -> SNFResult:
    return SNFResult(tuple(truncated_snf(matrix, ncols, p, K)), K)


@dataclass(frozen=True)
class InvariantReport:
    """Fingerprint of a module: rank, torsion, cohomology orders (as
    exponents of p), character multiplicities, optional torsion generator
    order."""

    p: int
    zp_rank: int
    torsion_divisors: tuple[int, ...]
    h0_exp: int
    h1_exp: int
    character: tuple[int, ...]
    torsion_gen_order_exp: int | None = None
    stabilized_at: tuple[int, int] | None = None

    def herbrand(self) -> Fraction:
        return Fraction(self.p**self.h0_exp, self.p**self.h1_exp)

    def torsion_order_exp(self) -> int:
        return sum(self.torsion_divisors)

    def core(self) -> tuple:
        """The fields compared when two modules are matched."""
        return (self.p, self.zp_rank, self.torsion_divisors, self.h0_exp, self.h1_exp, self.character)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "zp_rank": self.zp_rank,
            "torsion_divisors": list(self.torsion_divisors),
            "h0": {"p": self.p, "exp": self.h0_exp},
            "h1": {"p": self.p, "exp": self.h1_exp},
            "character": list(self.character),
            "torsion_gen_order": None
            if self.torsion_gen_order_exp is None
            else {"p": self.p, "exp": self.torsion_gen_order_exp},
            "stabilized_at": list(self.stabilized_at) if self.stabilized_at else None,
        }

    @staticmethod
    def from_json(obj: dict) -> InvariantReport:
        tg = obj.get("torsion_gen_order")
        st = obj.get("stabilized_at")
        return InvariantReport(
            p=int(obj["p"]),
            zp_rank=int(obj["zp_rank"]),
            torsion_divisors=tuple(int(e) for e in obj["torsion_divisors"]),
            h0_exp=int(obj["h0"]["exp"]),
            h1_exp=int(obj["h1"]["exp"]),
            character=tuple(int(m) for m in obj["character"]),
            torsion_gen_order_exp=None if tg is None else int(tg["exp"]),
            stabilized_at=None if st is None else (int(st[0]), int(st[1])),
        )


# ---------------------------------------------------------------------
# rank and torsion from truncations at two precisions
# ---------------------------------------------------------------------


def module_structure(pres: Presentation, K1: int | None = None, K2: int | None = None):
    """(zp_rank, torsion_divisors, stabilized) for the presented module.

    Cokernel exponents are computed at K1 and K2 > K1; exponents equal to
    the working precision count as free rank, smaller ones as torsion.
    The two reads must agree, otherwise stabilized is False.
    """
    if K1 is None:
        K1 = default_precision(pres)
    if K2 is None:
        K2 = K1 + 2
    if not 1 <= K1 < K2:
        raise ValueError("need 1 <= K1 < K2")
    p = pres.ctx.p
    t = pres.ambient_rank

    def read(K):
        rows = [list(vec) for vec, _, _ in translated_rows(pres, K)]
        exps = truncated_snf(rows, t, p, K)
        torsion = tuple(sorted(e for e in exps if 0 < e < K1))
        free = sum(1 for e in exps if e >= K1)
        middle = [e for e in exps if K1 <= e < K]
        return torsion, free, middle

    t1, f1, _ = read(K1)
    t2, f2, mid2 = read(K2)
    stabilized = (t1 == t2) and (f1 == f2) and not mid2
    return f1, t1, stabilized


# ---------------------------------------------------------------------
# exact cohomology of the cyclic action
# ---------------------------------------------------------------------


def poly_at_matrix(coeffs, M) -> list[list[int]]:
    """Evaluate an integer polynomial at an integer square matrix."""
    n = len(M)
    acc = [[coeffs[0] if i == j else 0 for j in range(n)] for i in range(n)] if coeffs else identity_int(n)
    power = identity_int(n)
    for c in coeffs[1:]:
        power = matmul_int(power, M)
        if c:
            for i in range(n):
                for j in range(n):
                    acc[i][j] += c * power[i][j]
    return acc


def _poly_product_is_unit_times_xn_minus_1(B, C, p: int, n: int) -> bool:
    # exact polynomial product must be +-(X^(p^n) - 1)
    order = p**n
    prod = [0] * (len(B) + len(C) - 1 or 1)
    for i, b in enumerate(B):
        for j, c in enumerate(C):
            prod[i + j] += b * c
    target = [0] * (order + 1)
    target[0], target[order] = -1, 1
    neg = [-c for c in target]
    prod = prod + [0] * (order + 1 - len(prod))
    return prod == target or prod == neg


def _fold_poly(coeffs, order):
    out = [0] * order
    for k, c in enumerate(coeffs):
        out[k % order] += c
    return out


def cohomology_orders(relation_rows, t: int, sigma_matrix, B, C, p: int, n: int):
    """Order and cyclic divisors of ker(B) / im(C) on the presented module.

    relation_rows are exact integer vectors spanning the relation lattice
    R inside Z^t; sigma_matrix is the integer action, and B, C are
    integer polynomials (in sigma) with B*C = +-(X^(p^n) - 1).  The
    result is the p-part of the finite quotient L / T with
    L = preimage of R under B and T = image of C plus R, both exact
    integer lattices, so no precision enters.
    """
    order = p**n
    MB = poly_at_matrix(_fold_poly(B, order), sigma_matrix)
    MC = poly_at_matrix(_fold_poly(C, order), sigma_matrix)

    if relation_rows:
        diag, Q = integer_diagonal_coltf(relation_rows, t)
    else:
        diag, Q = [], identity_int(t)
    BQ = matmul_int(MB, Q)

    # congruence system for L = {w : w.MB in R (x) Z_(p)}:
    # pivot column i of the diagonalized relation lattice demands
    # (w.BQ)_i = 0 mod p^v_p(diag_i); pivotless columns demand exact 0;
    # columns with unit divisor impose nothing (prime-to-p saturation).
    cond_cols = []
    moduli = []
    for i in range(t):
        if i < len(diag):
            e = valuation(abs(diag[i]), p, 1 << 30)
            if e == 0:
                continue
            cond_cols.append(i)
            moduli.append(p**e)
        else:
            cond_cols.append(i)
            moduli.append(0)
    aux = [i for i, m in enumerate(moduli) if m]
    ncond = len(cond_cols)
    system = []
    for j in range(t):
        system.append([BQ[j][c] for c in cond_cols])
    for ai in aux:
        row = [0] * ncond
        row[ai] = moduli[ai]
        system.append(row)
    kernel = integer_kernel(system, ncond)
    L_gens = [u[:t] for u in kernel]
    L_basis = lattice_basis(L_gens, t)

    T_gens = [list(r) for r in MC] + [list(r) for r in relation_rows]
    T_gens = [r for r in T_gens if any(r)]

    if not L_basis:
        if T_gens:
            raise StabilizationError("image lattice escapes the kernel lattice")
        return 0, ()
    if not T_gens:
        raise StabilizationError("cohomology is not finite")

    ech = RationalEchelon(L_basis)
    coords = [ech.coordinates(g) for g in T_gens]
    for row in coords:
        for c in row:
            v = frac_valuation(c, p)
            if v is not None and v < 0:
                raise StabilizationError("image lattice escapes the kernel lattice")
    vals = dvr_snf_valuations(coords, p)
    if len(vals) < len(L_basis):
        raise StabilizationError("cohomology is not finite")
    divisors = tuple(sorted(v for v in vals if v > 0))
    return sum(divisors), divisors


def _pres_lattice_data(pres: Presentation):
    rows = [list(vec) for vec, _, _ in translated_rows(pres, None)]
    return rows, pres.ambient_rank, sigma_permutation(pres)


def cohomology_BC(pres: Presentation, B, C, K: int | None = None):
    """Order (exponent of p) and divisors of H(B, C) = ker(B)/im(C).

    B and C are integer polynomial coefficient sequences (or group ring
    elements read as polynomials) with B*C = +-(X^(p^n) - 1); exactly one
    of B(1), C(1) may vanish.  K is accepted for interface compatibility
    but the computation is exact and does not use it.
    """
    del K
    p, n = pres.ctx.p, pres.ctx.n
    B = list(B.coeffs) if isinstance(B, GroupRingElem) else list(B)
    C = list(C.coeffs) if isinstance(C, GroupRingElem) else list(C)
    if not _poly_product_is_unit_times_xn_minus_1(B, C, p, n):
        raise ValueError("B*C must equal X^(p^n) - 1 up to sign")
    b1, c1 = sum(B), sum(C)
    if (b1 == 0) == (c1 == 0):
        raise ValueError("exactly one of B(1), C(1) must vanish")
    rows, t, sig = _pres_lattice_data(pres)
    return cohomology_orders(rows, t, sig, B, C, p, n)


def h0_exp(pres: Presentation) -> int:
    """log_p |ker(1 - sigma) / im(N)|."""
    order = pres.ctx.order
    return cohomology_BC(pres, [1, -1], [1] * order)[0]


def h1_exp(pres: Presentation) -> int:
    """log_p |ker(N) / im(1 - sigma)|."""
    order = pres.ctx.order
    return cohomology_BC(pres, [1] * order, [1, -1])[0]


def herbrand_quotient(pres: Presentation, K: int | None = None) -> Fraction:
    del K
    p = pres.ctx.p
    return Fraction(p ** h0_exp(pres), p ** h1_exp(pres))


# ---------------------------------------------------------------------
# character multiplicities
# ---------------------------------------------------------------------


def _poly_xgcd(a, b):
    # extended gcd over Q[X] on Fraction coefficient lists
    def deg(f):
        for i in range(len(f) - 1, -1, -1):
            if f[i]:
                return i
        return -1

    def trim(f):
        d = deg(f)
        return f[: d + 1]

    def pdivmod(u, v):
        u = list(u)
        dv = deg(v)
        lead = v[dv]
        q = [Fraction(0)] * max(1, len(u))
        for k in range(deg(u), dv - 1, -1):
            if u[k]:
                c = u[k] / lead
                q[k - dv] = c
                for j in range(dv + 1):
                    u[k - dv + j] -= c * v[j]
        return trim(q) or [Fraction(0)], trim(u) or [Fraction(0)]

    r0, r1 = trim(list(a)) or [Fraction(0)], trim(list(b)) or [Fraction(0)]
    s0, s1 = [Fraction(1)], [Fraction(0)]
    while deg(r1) >= 0:
        q, r = pdivmod(r0, r1)
        r0, r1 = r1, r
        prod = [Fraction(0)] * (len(q) + len(s1))
        for i, x in enumerate(q):
            for j, y in enumerate(s1):
                prod[i + j] += x * y
        news = [Fraction(0)] * max(len(s0), len(prod))
        for i, x in enumerate(s0):
            news[i] += x
        for i, x in enumerate(prod):
            news[i] -= x
        s0, s1 = s1, trim(news) or [Fraction(0)]
    return r0, s0


class ComponentField:
    """Q[X]/(P_k) with P_k the level-k irreducible factor of X^(p^n) - 1."""

    def __init__(self, p: int, k: int):
        self.modpoly = [Fraction(c) for c in cyclotomic_level(p, k)]
        self.deg = len(self.modpoly) - 1

    def reduce(self, coeffs):
        rem = poly_rem_fractions(coeffs, self.modpoly)
        return tuple(rem[: self.deg])

    def mul(self, a, b):
        prod = [Fraction(0)] * (2 * self.deg)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        prod[i + j] += x * y
        return self.reduce(prod)

    def inv(self, a):
        g, s = _poly_xgcd(list(a), self.modpoly)
        if len(g) != 1 or g[0] == 0:
            raise ZeroDivisionError("element not invertible")
        c = 1 / g[0]
        return self.reduce([x * c for x in s])

    def sub_mul(self, a, f, b):
        # a - f*b
        fb = self.mul([f] if not isinstance(f, tuple) else f, b)
        return tuple(x - y for x, y in zip(a, fb))


def _field_rank(rows, field: ComponentField) -> int:
    A = [list(row) for row in rows]
    rank = 0
    ncols = len(A[0]) if A else 0
    zero = tuple([Fraction(0)] * field.deg)
    for col in range(ncols):
        piv = next((i for i in range(rank, len(A)) if A[i][col] != zero), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        inv = field.inv(A[rank][col])
        A[rank] = [field.mul(inv, e) for e in A[rank]]
        for i in range(len(A)):
            if i != rank and A[i][col] != zero:
                f = A[i][col]
                A[i] = [tuple(x - y for x, y in zip(e, field.mul(f, b))) for e, b in zip(A[i], A[rank])]
        rank += 1
    return rank


def character_multiplicities(pres: Presentation) -> tuple[int, ...]:
    """Multiplicities m_0..m_n of the irreducible rational components.

    m_k = g minus the rank of the relation matrix over the level-k
    component field; the trivial component has degree 1 and level k has
    degree p^k - p^(k-1).
    """
    if pres.ctx.mode != EXACT:
        raise ValueError("character needs exact-integer rows")
    out = []
    for k in range(pres.ctx.n + 1):
        field = ComponentField(pres.ctx.p, k)
        rows = [[field.reduce(e.coeffs) for e in row] for row in pres.rows]
        out.append(pres.g - _field_rank(rows, field))
    return tuple(out)


def component_degree(p: int, k: int) -> int:
    return 1 if k == 0 else p**k - p ** (k - 1)


def rank_from_character(character, p: int) -> int:
    return sum(m * component_degree(p, k) for k, m in enumerate(character))


def action_character(sigma_matrix, relation_rows, t: int, p: int, n: int) -> tuple[int, ...]:
    """Character of the rational quotient Q^t / span(relations) under sigma.

    Independent route used to cross-check the rank-based computation:
    m_k = dim ker(P_k(sigma_bar)) / deg(P_k) on the induced action.
    """
    rel = [[Fraction(c) for c in row] for row in relation_rows]
    # row-reduce the relation span to find pivot columns
    pivots = []
    rank = 0
    for col in range(t):
        piv = next((i for i in range(rank, len(rel)) if rel[i][col] != 0), None)
        if piv is None:
            continue
        rel[rank], rel[piv] = rel[piv], rel[rank]
        inv = 1 / rel[rank][col]
        rel[rank] = [c * inv for c in rel[rank]]
        for i in range(len(rel)):
            if i != rank and rel[i][col]:
                f = rel[i][col]
                rel[i] = [a - f * b for a, b in zip(rel[i], rel[rank])]
        pivots.append(col)
        rank += 1
    free_cols = [j for j in range(t) if j not in pivots]
    dim = len(free_cols)

    def project(vec):
        # reduce modulo the relation span, keep free coordinates
        v = list(vec)
        for r, col in enumerate(pivots):
            f = v[col]
            if f:
                for j in range(t):
                    v[j] -= f * rel[r][j]
        return [v[j] for j in free_cols]

    induced = []
    for j in free_cols:
        row = [Fraction(c) for c in sigma_matrix[j]]
        induced.append(project(row))
    out = []
    for k in range(n + 1):
        Pk = cyclotomic_level(p, k)
        M = [[Fraction(0)] * dim for _ in range(dim)]
        power = [[Fraction(1) if i == j else Fraction(0) for j in range(dim)] for i in range(dim)]
        for c in Pk:
            if c:
                for i in range(dim):
                    for j in range(dim):
                        M[i][j] += c * power[i][j]
            nxt = [[sum(power[i][l] * induced[l][j] for l in range(dim)) for j in range(dim)] for i in range(dim)]
            power = nxt
        kdim = dim - rational_rank(M) if dim else 0
        d = component_degree(p, k)
        if kdim % d:
            raise ArithmeticError("component dimension is not a multiple of the field degree")
        out.append(kdim // d)
    return tuple(out)


# ---------------------------------------------------------------------
# element orders and direct factors
# ---------------------------------------------------------------------


def element_order(pres: Presentation, expr, K: int | None = None) -> int | None:
    """Least e with p^e . expr in the relation submodule, searched to K-2.

    None means "infinite at precision K".
    """
    if K is None:
        K = default_precision(pres)
    tester = MembershipTester(pres, K)
    return element_order_with_tester(tester, expr)


def element_order_with_tester(tester: MembershipTester, expr) -> int | None:
    p = tester.pres.ctx.p
    for e in range(tester.K - 1):
        if tester.member(scale_element(expr, p**e)):
            return e
    return None


def direct_factor_test(model: FiniteModel, sub_gens) -> bool:
    """Purity test for the submodule generated by sub_gens.

    True iff the images of the generators are linearly independent in the
    mod-p quotient of the model, i.e. any product landing in p-th powers
    forces every exponent to be divisible by p.  Meaningful as a direct
    factor certificate when the truncated module is torsion-free in the
    tested range, which is the caller's responsibility.
    """
    p = model.ctx.p
    gens = [list(v) for v in sub_gens]
    for v in gens:
        if not any(c % p for c in v) and not any(c % model.ctx.modulus for c in v):
            raise ValueError("degenerate generator (zero vector)")
    base = [list(r) for r in model.relation_matrix]
    r0 = fp_rank(base, model.ambient_rank, p)
    r1 = fp_rank(base + gens, model.ambient_rank, p)
    return r1 == r0 + len(gens)


# ---------------------------------------------------------------------
# assembled reports
# ---------------------------------------------------------------------


def full_report(
    pres: Presentation,
    K1: int | None = None,
    K2: int | None = None,
    torsion_gen=None,
) -> InvariantReport:
    """Measure everything on a presentation; raises on instability."""
    if K1 is None:
        K1 = default_precision(pres)
    if K2 is None:
        K2 = K1 + 2
    rank, torsion, stabilized = module_structure(pres, K1, K2)
    if not stabilized:
        raise StabilizationError(f"module structure unstable between K={K1} and K={K2}")
    character = character_multiplicities(pres)
    if rank != rank_from_character(character, pres.ctx.p):
        raise StabilizationError("rank from truncation disagrees with the character")
    order_exp = None
    if torsion_gen is not None:
        order_exp = element_order(pres, torsion_gen, K2)
    return InvariantReport(
        p=pres.ctx.p,
        zp_rank=rank,
        torsion_divisors=torsion,
        h0_exp=h0_exp(pres),
        h1_exp=h1_exp(pres),
        character=character,
        torsion_gen_order_exp=order_exp,
        stabilized_at=(K1, K2),
    )
