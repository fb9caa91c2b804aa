"""Machine checks for the exponent identities that drive the norm
computations: exact group ring equalities where possible, relation
membership with an explicit certificate otherwise.

Every check either verifies an equality of ring elements coefficient by
coefficient, or solves for group ring multipliers lambda such that the
target vector is exactly the lambda-combination of the relation rows at
the working precision, and re-multiplies the certificate to confirm it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .group_ring import (
    EXACT,
    GroupRingElem,
    RingContext,
    abel_element,
    abel_level,
    const,
    geometric_sum,
    norm_element,
    norm_level,
    one,
    sigma,
    sigma_power,
    zero,
)
from .presentation import MembershipTester, Presentation, element, make_presentation
from .spaces import CaseId, FormalSpaceParams, make_case_presentation, make_W, torsion_generator_xi


@dataclass
class IdentityCheck:
    name: str
    params: dict
    passed: bool
    detail: str = ""
    witness: dict | None = None

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "params": self.params,
            "passed": self.passed,
            "detail": self.detail,
            "witness": self.witness,
        }


def _exact_ctx(p: int, n: int) -> RingContext:
    return RingContext(p, n, mode=EXACT)


def check_abel(ctx: RingContext) -> IdentityCheck:
    """A (1 - sigma) = N - p^n, exactly."""
    lhs = abel_element(ctx) * (one(ctx) - sigma(ctx))
    rhs = norm_element(ctx) - const(ctx, ctx.order)
    ok = lhs == rhs
    return IdentityCheck(
        name="abel",
        params={"p": ctx.p, "n": ctx.n},
        passed=ok,
        detail="" if ok else f"lhs={lhs}, rhs={rhs}",
    )


def check_tower(ctx: RingContext, m: int) -> IdentityCheck:
    """(1 - sigma) S_m = 1 - sigma^(p^m) and A_m (1 - sigma^(p^m)) = N_m - p^(n-m)."""
    pm = ctx.p**m
    lhs1 = (one(ctx) - sigma(ctx)) * geometric_sum(ctx, m)
    rhs1 = one(ctx) - sigma_power(ctx, pm)
    lhs2 = abel_level(ctx, m) * (one(ctx) - sigma_power(ctx, pm))
    rhs2 = norm_level(ctx, m) - const(ctx, ctx.p ** (ctx.n - m))
    factor = norm_level(ctx, m) * geometric_sum(ctx, m) == norm_element(ctx)
    ok = lhs1 == rhs1 and lhs2 == rhs2 and factor
    return IdentityCheck(
        name="tower",
        params={"p": ctx.p, "n": ctx.n, "m": m},
        passed=ok,
        detail="" if ok else "tower identities failed",
    )


def _membership_check(name, params, pres, target, K) -> IdentityCheck:
    tester = MembershipTester(pres, K)
    witness = tester.witness(target)
    if witness is None:
        residual, _ = tester._echelon.reduce(
            __import__("zpg.presentation", fromlist=["embed_vector"]).embed_vector(pres, target, K)
        )
        return IdentityCheck(
            name=name, params=params, passed=False, detail=f"residual {residual}"
        )
    if not tester.verify_witness(target, witness):
        return IdentityCheck(name=name, params=params, passed=False, detail="witness failed to re-multiply")
    return IdentityCheck(
        name=name,
        params=params,
        passed=True,
        witness={str(ridx): list(lam.coeffs) for ridx, lam in witness.items()},
    )


def check_radical_identities(p: int, n: int, a: int) -> IdentityCheck:
    """Exponent identities for r = Z^(p^(a-c) A) Y^(p^(n-c)) in <Z,Y | Z^(p^a) Y^(sigma-1)>.

    With c = min(n, a), both
        r^(1-sigma) = Z^(p^(a-c) N)   and   Y^N = Z^(p^a A) Y^(p^n)
    must hold as relation membership facts.
    """
    if a < 1:
        raise ValueError("a >= 1")
    ctx = _exact_ctx(p, n)
    pres = make_presentation(
        ctx, ("Z", "Y"), [[const(ctx, p**a), sigma(ctx) - one(ctx)]]
    )
    c = min(n, a)
    A = abel_element(ctx)
    N = norm_element(ctx)
    om = one(ctx) - sigma(ctx)
    r = element(pres, Z=A * const(ctx, p ** (a - c)), Y=const(ctx, p ** (n - c)))
    k = a + n + 6
    first = tuple(e * om for e in r)
    first = (first[0] - N * const(ctx, p ** (a - c)), first[1])
    second = element(pres, Z=-(A * const(ctx, p**a)), Y=N - const(ctx, p**n))
    params = {"p": p, "n": n, "a": a, "c": c}
    chk1 = _membership_check("radical", params, pres, first, k)
    if not chk1.passed:
        return chk1
    chk2 = _membership_check("radical", params, pres, second, k)
    if not chk2.passed:
        return chk2
    return IdentityCheck(
        name="radical", params=params, passed=True, witness={"first": chk1.witness, "second": chk2.witness}
    )


def check_radical_identities_x0(p: int, n: int, a: int) -> IdentityCheck:
    """Variant with an invariant auxiliary generator X0 absorbing constants.

    In <X0, Z, Y | Z^(p^a) X0^(-1) Y^(sigma-1); X0 invariant>, with
    c = min(n, a) and r = Z^(p^(a-c) A) Y^(p^(n-c)):
        r^(1-sigma) = Z^(p^(a-c) N) X0^(-p^(n-c))
        Y^N = r^(p^c) X0^(-p^n (p^n - 1) / 2)
    """
    if a < 1:
        raise ValueError("a >= 1")
    ctx = _exact_ctx(p, n)
    pres = make_presentation(
        ctx,
        ("X0", "Z", "Y"),
        [[const(ctx, -1), const(ctx, p**a), sigma(ctx) - one(ctx)]],
        invariant_gens=[0],
    )
    c = min(n, a)
    A = abel_element(ctx)
    N = norm_element(ctx)
    om = one(ctx) - sigma(ctx)
    pn = p**n
    half = pn * (pn - 1) // 2
    rZ = A * const(ctx, p ** (a - c))
    rY = const(ctx, p ** (n - c))
    first = (
        const(ctx, p ** (n - c)),
        rZ * om - N * const(ctx, p ** (a - c)),
        rY * om,
    )
    second = (
        const(ctx, half),
        -(rZ * const(ctx, p**c)),
        N - rY * const(ctx, p**c),
    )
    params = {"p": p, "n": n, "a": a, "c": c}
    k = a + n + 6
    chk1 = _membership_check("radical-x0", params, pres, first, k)
    if not chk1.passed:
        return chk1
    chk2 = _membership_check("radical-x0", params, pres, second, k)
    if not chk2.passed:
        return chk2
    return IdentityCheck(
        name="radical-x0", params=params, passed=True, witness={"first": chk1.witness, "second": chk2.witness}
    )


def check_mixed_radical(params: FormalSpaceParams) -> IdentityCheck:
    """The radical computation inside the generic space, exponent level.

    With m >= 1, n > m, c = min(n-m, a) and
        r = S^(kappa S_m A_m p^(a-c)) (T^(S_m) S^(-1))^(p^(n-m-c)),
    the vector of r^(1-sigma) Xi^(-kappa p^(a-c)) must lie in the
    relation submodule, Xi being the torsion generator.
    """
    if params.m < 1 or params.n <= params.m:
        raise ValueError("requires m >= 1 and n > m")
    p, n, a, m = params.p, params.n, params.a, params.m
    c = min(n - m, a)
    ctx = params.ctx()
    pres = make_W(params)
    Sm = geometric_sum(ctx, m)
    Am = abel_level(ctx, m)
    om = one(ctx) - sigma(ctx)
    scale = p ** (n - m - c)
    r_S = Sm * Am * const(ctx, params.kappa * p ** (a - c)) - const(ctx, scale)
    r_T = Sm * const(ctx, scale)
    xi = torsion_generator_xi(params)
    co = const(ctx, -params.kappa * p ** (a - c))
    target = (
        xi[0] * co,  # X entry of Xi^(-kappa p^(a-c)); r has no X part
        r_S * om + xi[1] * co,
        r_T * om,
    )
    K = params.default_precision() + 2
    meta = {"p": p, "n": n, "a": a, "b": params.b, "m": m, "kappa": params.kappa, "c": c}
    return _membership_check("mixed-radical", meta, pres, target, K)


def check_two_torsion_spaces(l: int, n: int, variant: str) -> IdentityCheck:
    """Measured torsion 2^l, |H^0| = 2^n, |H^1| = 1 on the two Case6 spaces.

    variant: "norm" (no X in the relation) or "nonorm" (X present).
    """
    if l < 2 or n < 2:
        raise ValueError("requires l >= 2 and n >= 2")
    from .invariants import full_report

    case = CaseId.Case6_norm if variant == "norm" else CaseId.Case6_nonorm
    params = FormalSpaceParams(p=2, n=n, a=1, b=0 if variant == "norm" else 1, m=1, kappa=1, l=l)
    pres = make_case_presentation(case, params)
    K1 = l + n + 4
    report = full_report(pres, K1, K1 + 2)
    ok = (
        report.torsion_divisors == (l,)
        and report.h0_exp == n
        and report.h1_exp == 0
    )
    return IdentityCheck(
        name="torsion-spaces",
        params={"l": l, "n": n, "variant": variant},
        passed=ok,
        detail="" if ok else f"measured {report.to_json()}",
    )


# -- suites -------------------------------------------------------------


def default_suite() -> list[IdentityCheck]:
    """The standard verification grid; exact arithmetic, so any failure
    is a defect rather than a tolerance issue."""
    checks: list[IdentityCheck] = []
    for p in (2, 3, 5):
        for n in (1, 2, 3):
            if p == 5 and n > 1:
                continue
            ctx = _exact_ctx(p, n)
            checks.append(check_abel(ctx))
            for m in range(n + 1):
                checks.append(check_tower(ctx, m))
    for p in (2, 3):
        for n in (1, 2):
            for a in (1, 2):
                checks.append(check_radical_identities(p, n, a))
                checks.append(check_radical_identities_x0(p, n, a))
    for p, n, m, a, b, kappa in [
        (3, 2, 1, 1, 0, 1),
        (3, 2, 1, 1, 1, 1),
        (3, 2, 1, 2, 0, 1),
        (2, 2, 1, 1, 1, 1),
        (2, 2, 1, 2, 0, 1),
        (2, 2, 1, 2, 1, 3),
    ]:
        checks.append(check_mixed_radical(FormalSpaceParams(p=p, n=n, a=a, b=b, m=m, kappa=kappa)))
    for l in (2, 3):
        for variant in ("norm", "nonorm"):
            checks.append(check_two_torsion_spaces(l, 2, variant))
    return checks
