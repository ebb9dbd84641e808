"""Certified arithmetic for the non-linearizability bounds on the AES group.

Two independent arguments bound the exponent ℓ of any space (F_2)^(2^ℓ) whose
general linear group contains Alt((F_2)^128): comparing group orders, and
comparing the largest even element orders. Every verdict is decided on exact
integers or on rational intervals, never on a bare float comparison.
"""
from __future__ import annotations

import decimal
import logging
from decimal import Decimal
from fractions import Fraction
from math import factorial, isqrt
from typing import Optional

import sympy

from .schemas import BoundReport

logger = logging.getLogger(__name__)

# 30-digit brackets; verify_constants() re-derives both by series
LN2_LO = Fraction("0.693147180559945309417232121458")
LN2_HI = Fraction("0.693147180559945309417232121459")
LOG2E_LO = Fraction("1.442695040888963407359924681001")
LOG2E_HI = Fraction("1.442695040888963407359924681002")

SQRT_SCALE = 10**60
LN_CONTEXT = decimal.Context(prec=80)

AES_BITS = 7  # n = 2^7 state bits
AES_LOG_STATES = 1 << AES_BITS  # |(F_2)^128| = 2^128


Interval = tuple[Fraction, Fraction]


def _fmt(value: Fraction | int, digits: int = 12) -> str:
    if isinstance(value, int) or value.denominator == 1:
        return str(int(value))
    return f"{float(value):.{digits}g}"


def _fmt_interval(iv: Interval) -> str:
    return f"[{_fmt(iv[0])}, {_fmt(iv[1])}]"


def _pow2_str(exponent: int) -> str:
    return f"2^{exponent}"


# -- constants -------------------------------------------------------------------------


def ln2_series(terms: int = 120) -> Interval:
    """ln 2 = Σ_{k≥1} 1/(k·2^k); the tail after K terms is below 1/((K+1)·2^K)."""
    partial = sum((Fraction(1, k << k) for k in range(1, terms + 1)), Fraction(0))
    return partial, partial + Fraction(1, (terms + 1) << terms)


def e_series(terms: int = 40) -> Interval:
    """e = Σ 1/k!; the tail after the k = K term is below 2/(K+1)!."""
    partial = sum((Fraction(1, factorial(k)) for k in range(terms + 1)), Fraction(0))
    return partial, partial + Fraction(2, factorial(terms + 1))


def verify_constants() -> BoundReport:
    lo, hi = ln2_series()
    ln2_ok = LN2_LO <= lo and hi <= LN2_HI
    log2e = (1 / hi, 1 / lo)
    log2e_ok = LOG2E_LO <= log2e[0] and log2e[1] <= LOG2E_HI
    report = BoundReport(
        claim="certified brackets for ln 2 and log2 e",
        left=f"series ln 2 in {_fmt_interval((lo, hi))}",
        right=f"bracket [{LN2_LO}, {LN2_HI}]",
        verdict=ln2_ok and log2e_ok,
        method="exact rational series with a bounded tail",
        details={"ln2": str(ln2_ok), "log2e": str(log2e_ok)},
    )
    if not report.verdict:
        logger.warning("hard-coded constant brackets disagree with the series evaluation")
    return report


def _mul_interval(a: Interval, b: Interval) -> Interval:
    products = [x * y for x in a for y in b]
    return min(products), max(products)


def sqrt_interval(value: Interval) -> Interval:
    lo = value[0] * SQRT_SCALE**2
    hi = value[1] * SQRT_SCALE**2
    root_lo = isqrt(lo.numerator // lo.denominator)
    root_hi = isqrt(-(-hi.numerator // hi.denominator))
    if root_hi * root_hi < hi:
        root_hi += 1
    return Fraction(root_lo, SQRT_SCALE), Fraction(root_hi, SQRT_SCALE)


def epsilon_interval() -> Interval:
    """ε = log2(e)·√(2 ln 2), the exponent rate of the even-order witness."""
    root = sqrt_interval((2 * LN2_LO, 2 * LN2_HI))
    return _mul_interval((LOG2E_LO, LOG2E_HI), root)


def ln_interval(value: int | Fraction) -> tuple[Decimal, Decimal]:
    """Natural log padded by one unit in the last place of the correctly rounded result."""
    with decimal.localcontext(LN_CONTEXT) as ctx:
        if isinstance(value, Fraction):
            x = Decimal(value.numerator) / Decimal(value.denominator)
        else:
            x = Decimal(value)
        centre = x.ln()
        ulp = Decimal(1).scaleb(centre.adjusted() - ctx.prec + 2)
        return centre - ulp, centre + ulp


# -- first argument: group orders -------------------------------------------------------------


def stirling_log2_factorial(n_log: int, log2e: Interval = (LOG2E_LO, LOG2E_HI)) -> Interval:
    """Bracket of log2(N!) for N = 2^n_log from N log2 N − N log2 e ≤ log2 N! ≤ … + log2 N."""
    big_n = 1 << n_log
    lower = big_n * (n_log - log2e[1])
    upper = big_n * (n_log - log2e[0]) + n_log
    return lower, upper


def stirling_bracket_holds(n: int) -> bool:
    """(n/e)^n ≤ n! ≤ n·(n/e)^n, exact with a rational e bracket; the upper side needs n ≥ 7."""
    if n < 1:
        raise ValueError("n must be positive")
    e_lo, e_hi = e_series()
    fact = factorial(n)
    return fact * e_hi**n >= n**n and fact * e_lo**n <= n ** (n + 1)


def elementary_lower_exponent(n: int = AES_LOG_STATES) -> int:
    """n + Σ_{i=1}^{n−1} 2^(n−i)·(n−i): the exponent the halving argument puts below log2((2^n)!)."""
    return n + sum((1 << (n - i)) * (n - i) for i in range(1, n))


def check_factorial_bracket() -> BoundReport:
    n = AES_LOG_STATES
    lower, upper = stirling_log2_factorial(n)
    low_target = n**19
    high_target = n**20
    elementary = elementary_lower_exponent(n)
    small_ok = all(stirling_bracket_holds(k) for k in range(7, 33))
    verdict = lower > low_target and upper < high_target and small_ok
    return BoundReport(
        claim="n^19 < log2((2^n)!) < n^20 at n = 2^7",
        left=f"log2((2^128)!) in {_fmt_interval((lower, upper))}",
        right=f"({_pow2_str(133)}, {_pow2_str(140)})",
        verdict=verdict,
        method="finite Stirling bracket with certified log2 e",
        details={
            "lower_over_2^133": _fmt(lower / low_target),
            "upper_over_2^140": _fmt(upper / high_target),
            "elementary_exponent_exceeds_n^19": str(elementary > low_target),
            "small_factorials_in_bracket": str(small_ok),
        },
    )


def induction_step_holds(n: int) -> bool:
    return n**20 + (1 << n) * n + (1 << n) < (n + 1) ** 20


def check_induction_inequality(start: int = 2, stop: int = AES_LOG_STATES) -> BoundReport:
    failures = [n for n in range(start, stop + 1) if not induction_step_holds(n)]
    beyond = stop + 1
    return BoundReport(
        claim="n^20 + 2^n·n + 2^n < (n+1)^20",
        left=f"every n in [{start}, {stop}]",
        right="exact big-integer comparison",
        verdict=not failures,
        method="exact integers",
        details={
            "first_failure": str(failures[0]) if failures else "none",
            f"holds_at_{beyond}": str(induction_step_holds(beyond)),
        },
    )


def min_linearization_exponent_by_counting(sharp: bool = False) -> BoundReport:
    """Smallest ℓ with log2|GL((F_2)^(2^ℓ))| < 2^(2ℓ) not below log2|Alt((F_2)^128)|.

    The plain argument takes log2((2^128)!) > 2^133; ``sharp`` uses the
    Stirling lower bound instead.
    """
    if sharp:
        alt_lower = stirling_log2_factorial(AES_LOG_STATES)[0] - 1
        source = "Stirling lower bound"
    else:
        alt_lower = Fraction(AES_LOG_STATES**19 - 1)
        source = "log2((2^128)!) > 2^133"
    ell = 2
    while (1 << (2 * ell)) < alt_lower:
        ell += 1
    excluded = ell - 1
    logger.info("counting argument (%s) excludes l = %d", source, excluded)
    return BoundReport(
        claim=f"l >= {ell} by group orders",
        left=f"log2|Alt| > {_fmt(alt_lower)}",
        right=f"log2|GL(2^{excluded})| < {_pow2_str(2 * excluded)}",
        verdict=(1 << (2 * excluded)) < alt_lower,
        method=source,
        details={"exponent": str(ell), "excluded": str(excluded)},
    )


# -- second argument: element orders -----------------------------------------------------------


def max_even_order_gl(n: int) -> int:
    """Largest even element order in GL((F_2)^n)."""
    if n < 4:
        raise ValueError(f"n must be at least 4, got {n}")
    return (1 << (n - 1)) - 2


def alt_even_order_witness(nu: int) -> dict[str, object]:
    """Even-order element of Alt on 2^nu points: two transpositions and one cycle per odd prime up to z.

    z is the largest prime with (z / ln z)·Σ_{3≤p≤z} ln p ≤ n, decided exactly as
    (∏p)^z ≤ z^n.
    """
    if nu < 7:
        raise ValueError(f"nu must be at least 7, got {nu}")
    if nu > 16:
        raise ValueError("witness search is limited to nu <= 16")
    n = 1 << nu
    primes: list[int] = []
    product = 1
    for p in sympy.primerange(3, n + 1):
        if (product * p) ** p > p**n:
            break
        primes.append(p)
        product *= p
    order = 2 * product
    support = 4 + sum(primes)
    # threshold exponent: ln(order)^2 > n ln n / 4
    log_order = ln_interval(order)
    log_n = ln_interval(n)
    with decimal.localcontext(LN_CONTEXT):
        exceeds = log_order[0] * log_order[0] > n * log_n[1] / 4
        threshold = (n * log_n[0] / 4).sqrt().exp()
    return {
        "n": n,
        "primes": primes,
        "z": primes[-1],
        "order": order,
        "support": support,
        "fits": support <= n,
        "threshold": float(threshold),
        "exceeds_threshold": bool(exceeds),
    }


def order_inequality(exponent_scale: int, n: int) -> Optional[bool]:
    """Whether 2^(exponent_scale·ε) ≤ 2^(n−1) − 2, or None when ε's bracket cannot tell."""
    eps_lo, eps_hi = epsilon_interval()
    if exponent_scale * eps_hi <= n - 2:
        return True
    if exponent_scale * eps_lo > n - 1:
        return False
    return None


def min_linearization_exponent_by_order() -> BoundReport:
    eps = epsilon_interval()
    scale = 1 << 66  # √((1/4)·2^128·ln 2^128) = 2^66·√(2 ln 2)
    at_66 = order_inequality(scale, 1 << 66)
    at_67 = order_inequality(scale, 1 << 67)
    ell = 2
    while order_inequality(scale, 1 << ell) is not True:
        ell += 1
    eps_ok = Fraction("1.66") <= eps[0] and eps[1] <= Fraction("1.70")
    return BoundReport(
        claim=f"l >= {ell} by element orders",
        left=f"2^(2^66·eps), eps in {_fmt_interval(eps)}",
        right="2^(N-1) - 2 with N = 2^l",
        verdict=at_66 is False and at_67 is True and eps_ok,
        method="exponent comparison with certified eps",
        details={
            "exponent": str(ell),
            "N=2^66": str(at_66),
            "N=2^67": str(at_67),
            "eps_in_[1.66,1.70]": str(eps_ok),
        },
    )


def landau_remark() -> BoundReport:
    """Assuming the maximal element order grows like e^√(n ln n) the order argument gives ℓ ≥ 68."""
    scale = 1 << 67
    ell = 2
    while order_inequality(scale, 1 << ell) is not True:
        ell += 1
    return BoundReport(
        claim=f"l >= {ell} under the asymptotic maximal order",
        left="2^(2^67·eps)",
        right="2^(N-1) - 2 with N = 2^l",
        verdict=ell == 68,
        method="asymptotic maximal order taken as given",
        informational=True,
        details={"exponent": str(ell)},
    )


def all_bound_reports() -> list[BoundReport]:
    reports = [
        verify_constants(),
        check_factorial_bracket(),
        check_induction_inequality(),
        min_linearization_exponent_by_counting(),
        min_linearization_exponent_by_counting(sharp=True).model_copy(update={"informational": True}),
        min_linearization_exponent_by_order(),
        landau_remark(),
    ]
    for report in reports:
        logger.debug("%s: %s", report.claim, report.verdict)
    return reports
