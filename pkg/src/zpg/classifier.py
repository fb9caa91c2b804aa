"""Extension descriptors, validation, case dispatch, descriptor
equivalence, and the explicit two-coordinate model available when the
residual characteristic differs from p.

A descriptor records the arithmetic of a cyclic degree-p^n extension:
p, n, the base dimension d, whether the residual characteristic is p,
|mu_K| = p^a, the norm defect b of the base roots of unity, the
cyclotomic level m, the unit kappa with k_sigma = 1 + kappa p^a, and
for p = 2, a = 1 the auxiliary invariants (procyclic flag, l with
|mu_{K(i)}| = 2^l) plus the minus-one-is-norm flag used by the n >= 2
branch of the non-procyclic regime.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .group_ring import EXACT, RingContext
from .invariants import (
    InvariantReport,
    action_character,
    cohomology_orders,
    full_report,
    rank_from_character,
    truncated_snf,
)
from .linalg import matmul_int, valuation
from .presentation import Presentation, with_free_gens
from .spaces import (
    CaseId,
    FormalSpaceParams,
    expected_invariants,
    make_case_presentation,
    torsion_generator_xi,
    torsion_order_exp,
)


class DescriptorError(ValueError):
    """A named constraint violated by an extension descriptor."""


@dataclass(frozen=True)
class ExtensionDescriptor:
    p: int
    n: int
    d: int = 1
    residual_char_is_p: bool = True
    a: int = 0
    b: int = 0
    m: int = 0
    kappa: int = 1
    procyclic: bool = True
    l: int | None = None
    minus_one_is_norm: bool = False

    @property
    def k_sigma(self) -> int:
        return 1 + self.kappa * self.p**self.a

    def to_json(self) -> dict:
        out = {
            "p": self.p,
            "n": self.n,
            "d": self.d,
            "residual_char_is_p": self.residual_char_is_p,
            "a": self.a,
            "b": self.b,
            "m": self.m,
            "kappa": self.kappa,
        }
        if self.p == 2 and self.a == 1:
            out["procyclic"] = self.procyclic
            out["l"] = self.l
            out["minus_one_is_norm"] = self.minus_one_is_norm
        return out

    @staticmethod
    def from_json(obj: dict) -> ExtensionDescriptor:
        return ExtensionDescriptor(
            p=int(obj["p"]),
            n=int(obj["n"]),
            d=int(obj.get("d", 1)),
            residual_char_is_p=bool(obj.get("residual_char_is_p", True)),
            a=int(obj.get("a", 0)),
            b=int(obj.get("b", 0)),
            m=int(obj.get("m", 0)),
            kappa=int(obj.get("kappa", 1)),
            procyclic=bool(obj.get("procyclic", True)),
            l=int(obj["l"]) if obj.get("l") is not None else None,
            minus_one_is_norm=bool(obj.get("minus_one_is_norm", False)),
        )


def _fail(constraint: str):
    raise DescriptorError(constraint)


def mu_F_exp(desc: ExtensionDescriptor) -> int:
    """log_p of the number of p-power roots of unity upstairs."""
    if desc.p == 2 and desc.a == 1 and desc.m >= 1:
        if not desc.procyclic and desc.residual_char_is_p:
            return desc.l  # m = 1 here
        return desc.l + desc.m - 1
    return desc.a + desc.m


def validate_descriptor(desc: ExtensionDescriptor) -> ExtensionDescriptor:
    """Check every named constraint; returns the descriptor unchanged.

    Violations raise DescriptorError carrying the constraint text.
    """
    if desc.n < 1:
        _fail("n >= 1")
    if desc.d < 1:
        _fail("d >= 1")
    if min(desc.a, desc.b, desc.m) < 0:
        _fail("a, b, m >= 0")
    if desc.b > min(desc.a, desc.n):
        _fail("b <= min(a,n)")
    if desc.m + desc.b > desc.n:
        _fail("m+b <= n")
    if desc.kappa % desc.p == 0:
        _fail("kappa is a unit mod p")
    if not desc.residual_char_is_p:
        if desc.n != desc.m + desc.b:
            _fail("n = m+b when the residual characteristic is not p")
        if desc.d != 1:
            _fail("d = 1 when the residual characteristic is not p")
        if desc.a < 1:
            _fail("a >= 1 when the residual characteristic is not p")
        if desc.p == 2 and desc.a == 1 and not desc.procyclic:
            _fail("cyclotomic tower is procyclic when the residual characteristic is not p")
    if desc.p == 2 and desc.a == 1:
        if desc.l is None:
            _fail("l required when p = 2 and a = 1")
        if desc.l < 2:
            _fail("l >= 2")
        if desc.kappa == -1:
            _fail("kappa != -1 when p = 2 and a = 1")
        v = valuation(desc.kappa + 1, 2, 1 << 30)
        if desc.m >= 1:
            if desc.procyclic:
                if v != desc.l - 2:
                    _fail("kappa determines l: v_2(kappa+1) = l-2 in the procyclic regime")
            else:
                if v < desc.l - 1:
                    _fail("k_sigma = -1 mod 2^l in the non-procyclic regime")
        if not desc.procyclic:
            if desc.m > 1:
                _fail("m <= 1 in the non-procyclic regime")
            if desc.m == 1:
                if (desc.b == 0) != desc.minus_one_is_norm:
                    _fail("b = 0 iff -1 is a norm")
                if desc.n == 1 and desc.minus_one_is_norm != (desc.d % 2 == 0):
                    _fail("-1 is a norm iff d is even (n = 1, non-procyclic)")
                if desc.n >= 2 and desc.d % 2 != 0:
                    _fail("d is even (n >= 2, non-procyclic)")
    elif desc.l is not None:
        _fail("l only applies when p = 2 and a = 1")
    return desc


def classify(desc: ExtensionDescriptor):
    """Dispatch a validated descriptor to its case.

    Returns (case, presentation, metadata); the presentation is the case
    space plus d-1 free rank-1 summands, and metadata carries the
    splitting flag and the expected invariant report of the full module.
    """
    desc = validate_descriptor(desc)
    params = FormalSpaceParams(
        p=desc.p, n=desc.n, a=desc.a, b=desc.b, m=desc.m, kappa=desc.kappa, l=desc.l
    )
    if not desc.residual_char_is_p:
        case = CaseId.Case7
    elif desc.p == 2 and desc.a == 1 and not desc.procyclic and desc.m == 1:
        if desc.n == 1:
            case = CaseId.Case3_3b if desc.minus_one_is_norm else CaseId.Case3_3a
        else:
            case = CaseId.Case6_norm if desc.minus_one_is_norm else CaseId.Case6_nonorm
    elif desc.m == desc.n:
        case = CaseId.Case3_2
    elif desc.a == 0:
        case = CaseId.Case1
    elif desc.m == 0:
        case = CaseId.Case2 if desc.b == 0 else CaseId.Case4
    else:
        case = CaseId.Case5

    base = make_case_presentation(case, params)
    free_names = [f"U{i}" for i in range(1, desc.d)]
    pres = with_free_gens(base, free_names)
    expected = expected_invariants(case, params)
    # every free rank-1 summand contributes one regular character
    extra = desc.d - 1
    full_character = tuple(m + extra for m in expected.character)
    expected_full = InvariantReport(
        p=expected.p,
        zp_rank=rank_from_character(full_character, desc.p),
        torsion_divisors=expected.torsion_divisors,
        h0_exp=expected.h0_exp,
        h1_exp=expected.h1_exp,
        character=full_character,
        torsion_gen_order_exp=expected.torsion_gen_order_exp,
        stabilized_at=None,
    )
    metadata = {
        "splitting": desc.b == 0,
        "params": params,
        "expected_case": expected,
        "expected": expected_full,
        "mu_F_exp": mu_F_exp(desc),
    }
    return case, pres, metadata


def measured_report(desc: ExtensionDescriptor) -> InvariantReport:
    case, pres, meta = classify(desc)
    params: FormalSpaceParams = meta["params"]
    K1 = params.default_precision()
    xi = None
    if case in (CaseId.Case1, CaseId.Case2, CaseId.Case3_2, CaseId.Case4, CaseId.Case5):
        from .group_ring import zero as gr_zero

        xi_base = torsion_generator_xi(params)
        xi = tuple(xi_base) + tuple(gr_zero(pres.ctx) for _ in range(pres.g - len(xi_base)))
    return full_report(pres, K1, K1 + 2, torsion_gen=xi)


# -- descriptor equivalence ----------------------------------------------


def equivalence_key(desc: ExtensionDescriptor) -> tuple:
    desc = validate_descriptor(desc)
    mf = mu_F_exp(desc)
    return (
        desc.p,
        desc.n,
        desc.residual_char_is_p,
        mf,
        desc.k_sigma % desc.p**mf if mf else 0,
        desc.a - desc.b,
        desc.d if desc.residual_char_is_p else 1,
    )


def equivalence_report(d1: ExtensionDescriptor, d2: ExtensionDescriptor) -> dict:
    k1, k2 = equivalence_key(d1), equivalence_key(d2)
    names = ("p", "n", "residual class", "|mu_F|", "k_sigma mod |mu_F|", "|mu_K meet norms|", "d")
    reasons = [name for name, a, b in zip(names, k1, k2) if a != b]
    return {"equivalent": not reasons, "reasons": reasons}


def equivalent(d1: ExtensionDescriptor, d2: ExtensionDescriptor) -> bool:
    return equivalence_key(d1) == equivalence_key(d2)


# -- the explicit model for residual characteristic != p ------------------


@dataclass(frozen=True)
class ConcreteModel:
    """Coordinates (alpha, beta) for pi^alpha xi^beta with alpha free and
    beta modulo the torsion order; sigma acts by
    (alpha, beta) -> (alpha, p^delta alpha + k_sigma beta)."""

    p: int
    n: int
    K: int
    delta: int
    k_sigma: int
    torsion_exp: int

    def sigma_matrix(self) -> list[list[int]]:
        return [[1, self.p**self.delta], [0, self.k_sigma]]

    def relation_rows(self) -> list[list[int]]:
        return [[0, self.p**self.torsion_exp]]

    def act(self, point: tuple[int, int]) -> tuple[int, int]:
        alpha, beta = point
        return (
            alpha % self.p**self.K,
            (self.p**self.delta * alpha + self.k_sigma * beta) % self.p**self.torsion_exp,
        )

    def iterate_is_identity(self) -> bool:
        """sigma^(p^n) must be the identity on the model."""
        M = [[1, 0], [0, 1]]
        for _ in range(self.p**self.n):
            M = matmul_int(M, self.sigma_matrix())
        mod_alpha = self.p**self.K
        mod_beta = self.p**self.torsion_exp
        return (
            M[0][0] % mod_alpha == 1
            and M[1][0] % mod_alpha == 0
            and M[0][1] % mod_beta == 0
            and M[1][1] % mod_beta == 1 % mod_beta
        )


def case7_concrete(desc: ExtensionDescriptor, K: int | None = None) -> ConcreteModel:
    """Build the two-coordinate model; residual characteristic must not be p."""
    desc = validate_descriptor(desc)
    if desc.residual_char_is_p:
        raise DescriptorError("residual characteristic is not p")
    if desc.p == 2 and desc.a == 1 and desc.m >= 1:
        delta = desc.l - desc.b - 1
        torsion_exp = desc.l + desc.m - 1
    else:
        delta = desc.a - desc.b
        torsion_exp = desc.a + desc.m
    if K is None:
        K = desc.n + torsion_exp + 4
    if K < desc.n + torsion_exp + 2:
        raise ValueError("K >= n + torsion_exp + 2 required")
    return ConcreteModel(
        p=desc.p, n=desc.n, K=K, delta=delta, k_sigma=desc.k_sigma, torsion_exp=torsion_exp
    )


def concrete_invariants(model: ConcreteModel, K: int | None = None) -> InvariantReport:
    """Rank, torsion, cohomology and character measured on the model.

    The measurements run on the integer lattice presentation with ambient
    Z^2, relation p^torsion_exp e_2 and the model's sigma matrix; the
    truncated structure read is checked at two precisions.
    """
    if K is None:
        K = model.K
    p = model.p
    rel = model.relation_rows()
    sig = model.sigma_matrix()

    def read(KK):
        exps = truncated_snf(rel, 2, p, KK)
        torsion = tuple(sorted(e for e in exps if 0 < e < K))
        free = sum(1 for e in exps if e >= K)
        return torsion, free

    t1 = read(K)
    t2 = read(K + 1)
    if t1 != t2:
        raise RuntimeError("concrete model structure unstable across precisions")
    torsion, rank = t1
    order = p**model.n
    h0, _ = cohomology_orders(rel, 2, sig, [1, -1], [1] * order, p, model.n)
    h1, _ = cohomology_orders(rel, 2, sig, [1] * order, [1, -1], p, model.n)
    character = action_character(sig, rel, 2, p, model.n)
    return InvariantReport(
        p=p,
        zp_rank=rank,
        torsion_divisors=torsion,
        h0_exp=h0,
        h1_exp=h1,
        character=character,
        torsion_gen_order_exp=(torsion[-1] if torsion else None),
        stabilized_at=(K, K + 1),
    )


# -- descriptor grids ------------------------------------------------------


def descriptor_grid(
    ps=(2, 3),
    n_max: int = 2,
    a_max: int = 3,
    kappas=None,
    d_values=(1,),
    include_residual_other: bool = True,
):
    """Enumerate valid descriptors inside desk-scale bounds, sorted."""
    out = []
    for p in ps:
        kset = kappas if kappas is not None else (1, 1 + p)
        for n in range(1, n_max + 1):
            for a in range(0, a_max + 1):
                for b in range(0, min(a, n) + 1):
                    for m in range(0, n - b + 1):
                        for kappa in kset:
                            for d in d_values:
                                for desc in _residual_p_variants(p, n, d, a, b, m, kappa):
                                    out.append(desc)
                                if include_residual_other and n == m + b and a >= 1 and d == 1:
                                    for desc in _residual_other_variants(p, n, a, b, m, kappa):
                                        out.append(desc)
    uniq = {}
    for desc in out:
        uniq[_sort_key(desc)] = desc
    return [uniq[k] for k in sorted(uniq)]


def _sort_key(desc: ExtensionDescriptor):
    return (
        desc.p,
        desc.n,
        not desc.residual_char_is_p,
        desc.d,
        desc.a,
        desc.b,
        desc.m,
        desc.kappa,
        desc.procyclic,
        desc.l or 0,
        desc.minus_one_is_norm,
    )


def _try(desc: ExtensionDescriptor):
    try:
        return [validate_descriptor(desc)]
    except DescriptorError:
        return []


def _residual_p_variants(p, n, d, a, b, m, kappa):
    if p == 2 and a == 1:
        l_link = valuation(kappa + 1, 2, 1 << 30) + 2
        variants = [
            ExtensionDescriptor(p, n, d, True, a, b, m, kappa, procyclic=True, l=l_link)
        ]
        if m == 1:
            for l in (2, 3):
                variants.append(
                    ExtensionDescriptor(
                        p, n, d, True, a, b, m, kappa,
                        procyclic=False, l=l, minus_one_is_norm=(b == 0),
                    )
                )
        out = []
        for v in variants:
            out.extend(_try(v))
        return out
    return _try(ExtensionDescriptor(p, n, d, True, a, b, m, kappa))


def _residual_other_variants(p, n, a, b, m, kappa):
    if p == 2 and a == 1:
        if m >= 1:
            l_link = valuation(kappa + 1, 2, 1 << 30) + 2
            return _try(
                ExtensionDescriptor(p, n, 1, False, a, b, m, kappa, procyclic=True, l=l_link)
            )
        out = []
        for l in (2, 3):
            out.extend(
                _try(ExtensionDescriptor(p, n, 1, False, a, b, m, kappa, procyclic=True, l=l))
            )
        return out
    return _try(ExtensionDescriptor(p, n, 1, False, a, b, m, kappa))
