"""Finitely presented modules over the group ring of a cyclic p-group.

A presentation has g free generators and relation rows whose entries are
exact-integer group ring elements; generators can be marked invariant,
which appends an explicit (1 - sigma) relation row for them.  Truncating
at precision K produces a finite model: a free (Z/p^K)-module of rank
g * p^n together with the translated relation rows and the permutation
action of sigma.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .group_ring import EXACT, GroupRingElem, RingContext, one, sigma, zero
from .linalg import ModEchelon, frac_valuation, valuation


@dataclass(frozen=True)
class Presentation:
    ctx: RingContext
    gen_names: tuple[str, ...]
    invariant_gens: frozenset[int]
    user_rows: tuple[tuple[GroupRingElem, ...], ...]
    rows: tuple[tuple[GroupRingElem, ...], ...]  # user rows then invariance rows

    @property
    def g(self) -> int:
        return len(self.gen_names)

    @property
    def ambient_rank(self) -> int:
        return self.g * self.ctx.order

    def gen_index(self, name: str) -> int:
        return self.gen_names.index(name)

    def to_json(self) -> dict:
        return {
            "ctx": self.ctx.to_json(),
            "gen_names": list(self.gen_names),
            "invariant_gens": sorted(self.invariant_gens),
            "rows": [[list(e.coeffs) for e in row] for row in self.user_rows],
        }

    @staticmethod
    def from_json(obj: dict) -> Presentation:
        ctx = RingContext.from_json(obj["ctx"])
        rows = [
            [GroupRingElem.make(ctx, [int(c) for c in entry]) for entry in row]
            for row in obj["rows"]
        ]
        return make_presentation(ctx, obj["gen_names"], rows, obj.get("invariant_gens", ()))


def _coerce_entry(ctx: RingContext, entry) -> GroupRingElem:
    if isinstance(entry, GroupRingElem):
        if entry.ctx != ctx:
            raise ValueError("row entry context mismatch")
        return entry
    if isinstance(entry, int):
        return GroupRingElem.make(ctx, [entry])
    raise ValueError(f"cannot use {entry!r} as a relation entry")


def _normalize_row(ctx, row, invariant_gens):
    # an exponent on an invariant generator only acts through its
    # augmentation, so store the constant for a canonical form
    out = []
    for i, entry in enumerate(row):
        e = _coerce_entry(ctx, entry)
        if i in invariant_gens:
            e = GroupRingElem.make(ctx, [e.augmentation()])
        out.append(e)
    return tuple(out)


def make_presentation(ctx: RingContext, gen_names, rows, invariant_gens=()) -> Presentation:
    """Build a presentation; invariance rows are appended automatically."""
    if ctx.mode != EXACT:
        raise ValueError("presentations use exact-integer coefficients")
    gen_names = tuple(gen_names)
    if len(set(gen_names)) != len(gen_names):
        raise ValueError("duplicate generator names")
    inv = frozenset(int(i) for i in invariant_gens)
    for i in inv:
        if not 0 <= i < len(gen_names):
            raise ValueError("invariant generator index out of range")
    user_rows = []
    for row in rows:
        row = list(row)
        if len(row) != len(gen_names):
            raise ValueError("relation row has wrong length")
        user_rows.append(_normalize_row(ctx, row, inv))
    stored = list(user_rows)
    one_minus_sigma = one(ctx) - sigma(ctx)
    for i in sorted(inv):
        row = [zero(ctx)] * len(gen_names)
        row[i] = one_minus_sigma
        stored.append(tuple(row))
    return Presentation(ctx, gen_names, inv, tuple(user_rows), tuple(stored))


def free_presentation(ctx: RingContext, gen_names, invariant_gens=()) -> Presentation:
    return make_presentation(ctx, gen_names, [], invariant_gens)


def direct_sum(a: Presentation, b: Presentation) -> Presentation:
    """External direct sum; generator names must not collide."""
    if a.ctx != b.ctx:
        raise ValueError("context mismatch")
    names = a.gen_names + b.gen_names
    z = zero(a.ctx)
    rows = [list(r) + [z] * b.g for r in a.user_rows]
    rows += [[z] * a.g + list(r) for r in b.user_rows]
    inv = set(a.invariant_gens) | {i + a.g for i in b.invariant_gens}
    return make_presentation(a.ctx, names, rows, inv)


def with_free_gens(pres: Presentation, names) -> Presentation:
    """Adjoin free rank-1 summands (one new generator per name)."""
    names = list(names)
    if not names:
        return pres
    z = zero(pres.ctx)
    rows = [list(r) + [z] * len(names) for r in pres.user_rows]
    return make_presentation(pres.ctx, pres.gen_names + tuple(names), rows, pres.invariant_gens)


# -- element expressions ----------------------------------------------


def element(pres: Presentation, **exponents) -> tuple[GroupRingElem, ...]:
    """Exponent vector for a product of generator powers, by name."""
    out = [zero(pres.ctx)] * pres.g
    for name, e in exponents.items():
        out[pres.gen_index(name)] = _coerce_entry(pres.ctx, e)
    return tuple(out)


def scale_element(expr, c) -> tuple[GroupRingElem, ...]:
    """Raise the element to a group-ring power (exponents multiply)."""
    return tuple(e * c for e in expr)


# -- truncation --------------------------------------------------------


@dataclass(frozen=True)
class FiniteModel:
    """Truncation of a presentation at precision K.

    The ambient group is (Z/p^K)^(g * p^n); relation_matrix rows span the
    image of the relation submodule and sigma_matrix is the block cyclic
    shift of coefficient vectors.  row_origin records, for each relation
    row, the stored row it translates and by which power of sigma.
    """

    ctx: RingContext  # truncated
    K: int
    g: int
    ambient_rank: int
    relation_matrix: tuple[tuple[int, ...], ...]
    sigma_matrix: tuple[tuple[int, ...], ...]
    row_origin: tuple[tuple[int, int], ...]


def embed_vector(pres: Presentation, expr, K: int | None = None) -> list[int]:
    """Concatenate the coefficient vectors of an exponent vector.

    With K given, coefficients are reduced mod p^K.
    """
    if len(expr) != pres.g:
        raise ValueError("exponent vector has wrong length")
    m = pres.ctx.p ** K if K is not None else 0
    out = []
    for e in expr:
        coeffs = e.coeffs if isinstance(e, GroupRingElem) else _coerce_entry(pres.ctx, e).coeffs
        out.extend(c % m if m else c for c in coeffs)
    return out


def _shift_coeffs(coeffs, j, order):
    return tuple(coeffs[(k - j) % order] for k in range(order))


def translated_rows(pres: Presentation, K: int | None = None):
    """All sigma-translates of the stored rows as flat coefficient vectors.

    Zero rows and exact duplicates are dropped; order is deterministic.
    Yields (vector, origin_row_index, shift).
    """
    order = pres.ctx.order
    m = pres.ctx.p ** K if K is not None else 0
    seen = set()
    out = []
    for idx, row in enumerate(pres.rows):
        for j in range(order):
            vec = []
            for e in row:
                shifted = _shift_coeffs(e.coeffs, j, order)
                vec.extend(c % m if m else c for c in shifted)
            tvec = tuple(vec)
            if not any(tvec) or tvec in seen:
                continue
            seen.add(tvec)
            out.append((tvec, idx, j))
    return out


def sigma_permutation(pres: Presentation) -> list[list[int]]:
    """Matrix of the sigma action on the ambient free module (row convention)."""
    order = pres.ctx.order
    t = pres.ambient_rank
    M = [[0] * t for _ in range(t)]
    for gidx in range(pres.g):
        for k in range(order):
            M[gidx * order + k][gidx * order + (k + 1) % order] = 1
    return M


def truncate(pres: Presentation, K: int) -> FiniteModel:
    if K < 1:
        raise ValueError("K >= 1 required")
    rows = translated_rows(pres, K)
    return FiniteModel(
        ctx=pres.ctx.truncated(K),
        K=K,
        g=pres.g,
        ambient_rank=pres.ambient_rank,
        relation_matrix=tuple(vec for vec, _, _ in rows),
        sigma_matrix=tuple(tuple(r) for r in sigma_permutation(pres)),
        row_origin=tuple((idx, j) for _, idx, j in rows),
    )


def default_precision(pres: Presentation) -> int:
    """Precision floor read off the rows: max coefficient valuation + 2n + 4."""
    p, n = pres.ctx.p, pres.ctx.n
    vmax = 0
    for row in pres.rows:
        for e in row:
            for c in e.coeffs:
                if c:
                    vmax = max(vmax, valuation(abs(c), p, 64))
    return vmax + 2 * n + 4


# -- relation membership ------------------------------------------------


class MembershipTester:
    """Decides membership in the relation submodule at precision K.

    Reuses one echelonized relation matrix across many queries, and can
    report a certificate: group ring multipliers, one per stored row,
    whose combination reproduces the queried vector mod p^K.
    """

    def __init__(self, pres: Presentation, K: int):
        self.pres = pres
        self.K = K
        self.model = truncate(pres, K)
        self._echelon = ModEchelon(
            [list(r) for r in self.model.relation_matrix],
            pres.ambient_rank,
            pres.ctx.p,
            K,
        )

    def member(self, expr) -> bool:
        return self.witness(expr) is not None

    def witness(self, expr) -> dict[int, GroupRingElem] | None:
        vec = embed_vector(self.pres, expr, self.K)
        combo = self._echelon.member(vec)
        if combo is None:
            return None
        order = self.pres.ctx.order
        tctx = self.pres.ctx.truncated(self.K)
        lams: dict[int, list[int]] = {}
        for c, (ridx, shift) in zip(combo, self.model.row_origin):
            if c:
                lams.setdefault(ridx, [0] * order)[shift] += c
        return {ridx: GroupRingElem.make(tctx, coeffs) for ridx, coeffs in lams.items()}

    def verify_witness(self, expr, witness) -> bool:
        """Re-multiply a certificate against the stored rows, exactly mod p^K."""
        tctx = self.pres.ctx.truncated(self.K)
        acc = [zero(tctx)] * self.pres.g
        for ridx, lam in witness.items():
            for i, entry in enumerate(self.pres.rows[ridx]):
                acc[i] = acc[i] + lam * entry.truncate(self.K)
        target = [e.truncate(self.K) for e in expr]
        return acc == target


def relation_member(pres: Presentation, expr, K: int | None = None) -> bool:
    """True iff the exponent vector lies in the relation submodule mod p^K."""
    if K is None:
        K = default_precision(pres)
    return MembershipTester(pres, K).member(expr)


def relation_witness(pres: Presentation, expr, K: int | None = None):
    if K is None:
        K = default_precision(pres)
    return MembershipTester(pres, K).witness(expr)


# -- substitution --------------------------------------------------------


def _frac_lists(e: GroupRingElem) -> list[Fraction]:
    return [Fraction(c) for c in e.coeffs]


def _frac_convolve(a, b, order):
    out = [Fraction(0)] * order
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[(i + j) % order] += x * y
    return out


def substitute(pres: Presentation, new_gens) -> Presentation:
    """Change of generators given as (new_name, exponent vector over old gens).

    The map must be triangular with constant unit diagonal after matching
    new generator i with old generator i: each new generator is old
    generator i raised to a unit, times a monomial in other generators
    already expressible.  Transported rows are scaled by a p-unit to
    clear denominators, which does not change the module.
    """
    ctx = pres.ctx
    order = ctx.order
    g = pres.g
    new_gens = list(new_gens)
    if len(new_gens) != g:
        raise ValueError("substitution must cover every generator")
    names = tuple(name for name, _ in new_gens)
    if len(set(names)) != g:
        raise ValueError("duplicate generator names")
    U = []
    for i, (_, expo) in enumerate(new_gens):
        row = [_coerce_entry(ctx, e) for e in expo]
        if len(row) != g:
            raise ValueError("substitution row has wrong length")
        diag = row[i]
        if diag.degree() > 0 or diag.augmentation() % ctx.p == 0:
            raise ValueError("non-unit diagonal exponent")
        U.append(row)

    # new generator is invariant iff its expression uses invariant old gens only
    new_inv = {
        i
        for i, (_, _) in enumerate(new_gens)
        if all(j in pres.invariant_gens for j in range(g) if not U[i][j].is_zero())
    }

    def transport(vrow):
        # solve w . U = v by triangular elimination over Q, then clear
        # the (p-unit) denominators
        w: list[list[Fraction] | None] = [None] * g
        v = [_frac_lists(e) for e in vrow]
        remaining = set(range(g))
        while remaining:
            ready = None
            for i in remaining:
                others = [j for j in remaining if j != i and not U[j][i].is_zero()]
                if not others:
                    ready = i
                    break
            if ready is None:
                raise ValueError("substitution is not triangular")
            i = ready
            acc = list(v[i])
            for j in range(g):
                if j != i and w[j] is not None and not U[j][i].is_zero():
                    prod = _frac_convolve(w[j], _frac_lists(U[j][i]), order)
                    acc = [a - b for a, b in zip(acc, prod)]
            diag = Fraction(U[i][i].augmentation())
            w[i] = [a / diag for a in acc]
            remaining.discard(i)
        den = 1
        for row in w:
            for c in row:
                den = den * c.denominator // _gcd(den, c.denominator)
        if den % ctx.p == 0:
            raise ValueError("substitution produced non-p-integral row")
        out = []
        for row in w:
            coeffs = [c * den for c in row]
            assert all(c.denominator == 1 for c in coeffs)
            out.append(GroupRingElem.make(ctx, [int(c) for c in coeffs]))
        return out

    new_rows = [transport(row) for row in pres.user_rows]
    return make_presentation(ctx, names, new_rows, new_inv)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def quotient_gen(pres: Presentation, i: int) -> Presentation:
    """Quotient by one generator: set it to 1 in every row and drop it."""
    if not 0 <= i < pres.g:
        raise ValueError("generator index out of range")
    names = pres.gen_names[:i] + pres.gen_names[i + 1 :]
    inv = {j if j < i else j - 1 for j in pres.invariant_gens if j != i}
    rows = []
    for row in pres.user_rows:
        newrow = list(row[:i] + row[i + 1 :])
        if any(not e.is_zero() for e in newrow):
            rows.append(newrow)
    return make_presentation(pres.ctx, names, rows, inv)
