"""Exact linear algebra for the invariant engine.

Everything here acts on row-style matrices given as lists of lists of
plain Python ints (or Fractions where stated).  Three flavours:

* echelon/Smith reduction over Z/p^K with valuation pivoting, used for
  relation-membership tests and truncated cokernel structure,
* integer Hermite reduction with transform tracking, used for kernels
  and bases of integer lattices,
* Smith valuations over the local ring Z_(p), used to read off orders
  of finite p-group quotients assembled from rational data.
"""

from __future__ import annotations

from fractions import Fraction


def valuation(x: int, p: int, cap: int) -> int:
    """p-adic valuation of x, capped at `cap` (the value used for 0)."""
    if x == 0:
        return cap
    v = 0
    while x % p == 0 and v < cap:
        x //= p
        v += 1
    return v


def frac_valuation(x: Fraction, p: int) -> int | None:
    """p-adic valuation of a rational, None for 0."""
    if x == 0:
        return None
    return valuation(x.numerator, p, 1 << 62) - valuation(x.denominator, p, 1 << 62)


# ---------------------------------------------------------------------
# Z/p^K: Howell-style echelon with transform, for membership with witness
# ---------------------------------------------------------------------


class ModEchelon:
    """Echelon basis of the row span of a matrix over Z/p^K.

    Pivots are chosen with minimal p-valuation and normalized to pure
    powers of p; for every pivot p^v with v > 0 the stabilizer row
    p^(K-v) * row is folded back in, so the basis decides membership in
    the row span exactly (a Howell form).  A transform is tracked so a
    membership certificate over the original rows can be reported.
    """

    def __init__(self, rows, ncols: int, p: int, K: int):
        self.p = p
        self.K = K
        self.modulus = p ** K
        self.ncols = ncols
        self.nrows = len(rows)
        m = self.modulus
        work = []
        for i, row in enumerate(rows):
            r = [c % m for c in row]
            t = [0] * self.nrows
            t[i] = 1
            if any(r):
                work.append((r, t))
        self.pivots: list[tuple[int, int]] = []  # (column, valuation)
        self.rows: list[list[int]] = []
        self.transform: list[list[int]] = []
        for col in range(ncols):
            best = None
            bestv = K
            for idx, (r, _) in enumerate(work):
                v = valuation(r[col], p, K)
                if v < bestv:
                    bestv = v
                    best = idx
            if best is None:
                continue
            r, t = work.pop(best)
            v = bestv
            unit = r[col] // p**v
            inv = pow(unit, -1, m)
            r = [(c * inv) % m for c in r]
            t = [(c * inv) % m for c in t]
            for rr, tt in work:
                w = valuation(rr[col], p, K)
                if w >= K:
                    continue
                c = rr[col] // p**v
                for j in range(ncols):
                    rr[j] = (rr[j] - c * r[j]) % m
                for j in range(self.nrows):
                    tt[j] = (tt[j] - c * t[j]) % m
            self.pivots.append((col, v))
            self.rows.append(r)
            self.transform.append(t)
            if v > 0:
                s = p ** (K - v)
                srow = [(c * s) % m for c in r]
                stf = [(c * s) % m for c in t]
                if any(srow):
                    work.append((srow, stf))
        # drop work rows that became zero; any nonzero leftover would mean
        # a pivot was missed, which the column sweep makes impossible

    def reduce(self, vec) -> tuple[list[int], list[int]]:
        """Reduce a vector against the basis.

        Returns (residual, combo) with vec = residual + combo . original_rows
        over Z/p^K.  The vector is a member of the row span iff residual
        is zero.
        """
        m = self.modulus
        p = self.p
        res = [c % m for c in vec]
        combo = [0] * self.nrows
        for (col, v), row, tf in zip(self.pivots, self.rows, self.transform):
            x = res[col]
            if x == 0:
                continue
            if valuation(x, p, self.K) < v:
                continue  # cannot be cleared; residual stays nonzero here
            c = x // p**v
            for j in range(self.ncols):
                res[j] = (res[j] - c * row[j]) % m
            for j in range(self.nrows):
                combo[j] = (combo[j] + c * tf[j]) % m
        return res, combo

    def member(self, vec) -> list[int] | None:
        res, combo = self.reduce(vec)
        if any(res):
            return None
        return combo


def span_order_exp(rows, ncols: int, p: int, K: int) -> int:
    """log_p of the order of the subgroup of (Z/p^K)^ncols spanned by rows."""
    ech = ModEchelon(rows, ncols, p, K)
    return sum(K - v for _, v in ech.pivots)


# ---------------------------------------------------------------------
# Z/p^K: truncated Smith normal form
# ---------------------------------------------------------------------


def truncated_snf(rows, ncols: int, p: int, K: int) -> list[int]:
    """Cokernel exponents of a matrix over Z/p^K, one per ambient column.

    Diagonalizes by row and column operations, always pivoting on an
    entry of minimal p-valuation (ties broken by position).  Pivot
    p^v contributes a cyclic factor Z/p^v to the cokernel; columns
    without a pivot contribute Z/p^K and are reported as exponent K.
    """
    m = p ** K
    A = [[c % m for c in row] for row in rows]
    nrows = len(A)
    exps = []
    t = 0
    while t < min(nrows, ncols):
        bestv, bi, bj = K, None, None
        for i in range(t, nrows):
            for j in range(t, ncols):
                v = valuation(A[i][j], p, K)
                if v < bestv:
                    bestv, bi, bj = v, i, j
                    if v == 0:
                        break
            if bestv == 0:
                break
        if bi is None:
            break
        if bi != t:
            A[t], A[bi] = A[bi], A[t]
        if bj != t:
            for row in A:
                row[t], row[bj] = row[bj], row[t]
        v = bestv
        unit = A[t][t] // p**v
        inv = pow(unit, -1, m)
        A[t] = [(c * inv) % m for c in A[t]]
        for i in range(t + 1, nrows):
            if A[i][t]:
                c = A[i][t] // p**v
                A[i] = [(a - c * b) % m for a, b in zip(A[i], A[t])]
        for j in range(t + 1, ncols):
            if A[t][j]:
                c = A[t][j] // p**v
                for i in range(t, nrows):
                    A[i][j] = (A[i][j] - c * A[i][t]) % m
        exps.append(v)
        t += 1
    exps.extend([K] * (ncols - len(exps)))
    return sorted(exps)


# ---------------------------------------------------------------------
# Z: Hermite reduction, kernels, lattice bases
# ---------------------------------------------------------------------


def _hermite(rows, ncols: int, transform: bool):
    A = [list(r) for r in rows]
    nrows = len(A)
    U = [[1 if i == j else 0 for j in range(nrows)] for i in range(nrows)] if transform else None
    r = 0
    for c in range(ncols):
        while True:
            nz = [i for i in range(r, nrows) if A[i][c] != 0]
            if not nz:
                pivot = None
                break
            i0 = min(nz, key=lambda i: (abs(A[i][c]), i))
            if len(nz) == 1:
                pivot = i0
                break
            for i in nz:
                if i == i0:
                    continue
                q = A[i][c] // A[i0][c]
                if q:
                    A[i] = [a - q * b for a, b in zip(A[i], A[i0])]
                    if transform:
                        U[i] = [a - q * b for a, b in zip(U[i], U[i0])]
        if pivot is None:
            continue
        if pivot != r:
            A[r], A[pivot] = A[pivot], A[r]
            if transform:
                U[r], U[pivot] = U[pivot], U[r]
        if A[r][c] < 0:
            A[r] = [-a for a in A[r]]
            if transform:
                U[r] = [-a for a in U[r]]
        r += 1
    return A, U, r


def integer_kernel(rows, ncols: int) -> list[list[int]]:
    """Basis of {u : u . rows = 0} as a saturated integer lattice."""
    A, U, r = _hermite(rows, ncols, transform=True)
    return [U[i] for i in range(r, len(A))]


def lattice_basis(rows, ncols: int) -> list[list[int]]:
    """Independent generating set (echelon form) of the row lattice."""
    A, _, r = _hermite(rows, ncols, transform=False)
    return [A[i] for i in range(r)]


def integer_diagonal_coltf(rows, ncols: int) -> tuple[list[int], list[list[int]]]:
    """Diagonalize an integer matrix, tracking column operations only.

    Returns (diag, Q) with diag the nonzero diagonal entries and Q the
    ncols x ncols unimodular matrix of accumulated column operations:
    a row vector x lies in the row span of the input iff x.Q reduces to
    zero against the diagonal (congruence per pivot column, exact zero
    on the rest).
    """
    A = [list(r) for r in rows]
    nrows = len(A)
    Q = [[1 if i == j else 0 for j in range(ncols)] for i in range(ncols)]

    def colop_sub(j, j0, q):
        for row in A:
            row[j] -= q * row[j0]
        for row in Q:
            row[j] -= q * row[j0]

    def colswap(j, j0):
        for row in A:
            row[j], row[j0] = row[j0], row[j]
        for row in Q:
            row[j], row[j0] = row[j0], row[j]

    t = 0
    diag = []
    while t < min(nrows, ncols):
        bi = bj = None
        best = None
        for i in range(t, nrows):
            for j in range(t, ncols):
                a = A[i][j]
                if a and (best is None or abs(a) < best):
                    best, bi, bj = abs(a), i, j
        if bi is None:
            break
        if bi != t:
            A[t], A[bi] = A[bi], A[t]
        if bj != t:
            colswap(t, bj)
        while True:
            # clear column t below the pivot
            done = True
            for i in range(t + 1, nrows):
                if A[i][t]:
                    q = A[i][t] // A[t][t]
                    A[i] = [a - q * b for a, b in zip(A[i], A[t])]
                    if A[i][t]:
                        A[t], A[i] = A[i], A[t]
                        done = False
            # clear row t right of the pivot
            for j in range(t + 1, ncols):
                if A[t][j]:
                    q = A[t][j] // A[t][t]
                    colop_sub(j, t, q)
                    if A[t][j]:
                        colswap(t, j)
                        done = False
            if done:
                break
        if A[t][t] < 0:
            A[t] = [-a for a in A[t]]
        diag.append(A[t][t])
        t += 1
    return diag, Q


def matmul_int(A, B) -> list[list[int]]:
    ncols = len(B[0]) if B else 0
    out = []
    for row in A:
        acc = [0] * ncols
        for k, a in enumerate(row):
            if a:
                brow = B[k]
                for j in range(ncols):
                    if brow[j]:
                        acc[j] += a * brow[j]
        out.append(acc)
    return out


def identity_int(n: int) -> list[list[int]]:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


# ---------------------------------------------------------------------
# Z_(p): Smith valuations of p-integral rational matrices
# ---------------------------------------------------------------------


def dvr_snf_valuations(rows, p: int) -> list[int]:
    """Pivot valuations of the Smith form over the local ring Z_(p).

    Input entries are ints or Fractions with denominators prime to p.
    The returned list has one valuation per pivot; its length is the
    rank of the matrix over Q.
    """
    A = [[Fraction(x) for x in row] for row in rows]
    nrows = len(A)
    ncols = len(A[0]) if A else 0
    vals = []
    t = 0
    while t < min(nrows, ncols):
        best = None
        bi = bj = None
        for i in range(t, nrows):
            for j in range(t, ncols):
                v = frac_valuation(A[i][j], p)
                if v is not None and (best is None or v < best):
                    best, bi, bj = v, i, j
        if bi is None:
            break
        if best < 0:
            raise ValueError("matrix is not p-integral")
        A[t], A[bi] = A[bi], A[t]
        if bj != t:
            for row in A:
                row[t], row[bj] = row[bj], row[t]
        pivot = A[t][t]
        for i in range(t + 1, nrows):
            if A[i][t]:
                f = A[i][t] / pivot
                A[i] = [a - f * b for a, b in zip(A[i], A[t])]
        for j in range(t + 1, ncols):
            if A[t][j]:
                f = A[t][j] / pivot
                for i in range(t, nrows):
                    A[i][j] -= f * A[i][t]
        vals.append(best)
        t += 1
    return vals


# ---------------------------------------------------------------------
# Q: coordinate solving and ranks
# ---------------------------------------------------------------------


class RationalEchelon:
    """Echelon form of full-row-rank rational rows, with combo tracking."""

    def __init__(self, rows):
        self.nrows = len(rows)
        self.ncols = len(rows[0]) if rows else 0
        work = []
        for i, row in enumerate(rows):
            t = [Fraction(0)] * self.nrows
            t[i] = Fraction(1)
            work.append(([Fraction(c) for c in row], t))
        self.pivcols: list[int] = []
        self.rows: list[list[Fraction]] = []
        self.transform: list[list[Fraction]] = []
        for col in range(self.ncols):
            idx = next((k for k, (r, _) in enumerate(work) if r[col] != 0), None)
            if idx is None:
                continue
            r, t = work.pop(idx)
            inv = 1 / r[col]
            r = [c * inv for c in r]
            t = [c * inv for c in t]
            for rr, tt in work:
                f = rr[col]
                if f:
                    for j in range(self.ncols):
                        rr[j] -= f * r[j]
                    for j in range(self.nrows):
                        tt[j] -= f * t[j]
            self.pivcols.append(col)
            self.rows.append(r)
            self.transform.append(t)
        if work and any(any(r) for r, _ in work):
            raise ValueError("rows are not independent")

    def coordinates(self, vec) -> list[Fraction]:
        """Coordinates of vec in terms of the original rows; raises if outside the span."""
        res = [Fraction(c) for c in vec]
        combo = [Fraction(0)] * self.nrows
        for col, row, tf in zip(self.pivcols, self.rows, self.transform):
            f = res[col]
            if f:
                for j in range(self.ncols):
                    res[j] -= f * row[j]
                for j in range(self.nrows):
                    combo[j] += f * tf[j]
        if any(res):
            raise ValueError("vector outside the span")
        return combo


def rational_rank(rows) -> int:
    if not rows:
        return 0
    A = [[Fraction(c) for c in row] for row in rows]
    ncols = len(A[0])
    rank = 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(A)) if A[i][col] != 0), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        inv = 1 / A[rank][col]
        A[rank] = [c * inv for c in A[rank]]
        for i in range(len(A)):
            if i != rank and A[i][col]:
                f = A[i][col]
                A[i] = [a - f * b for a, b in zip(A[i], A[rank])]
        rank += 1
    return rank


def fp_rank(rows, ncols: int, p: int) -> int:
    """Rank over the prime field F_p."""
    A = [[c % p for c in row] for row in rows]
    rank = 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(A)) if A[i][col]), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        inv = pow(A[rank][col], -1, p)
        A[rank] = [(c * inv) % p for c in A[rank]]
        for i in range(len(A)):
            if i != rank and A[i][col]:
                f = A[i][col]
                A[i] = [(a - f * b) % p for a, b in zip(A[i], A[rank])]
        rank += 1
    return rank
