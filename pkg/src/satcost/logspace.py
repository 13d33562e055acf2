"""Base-2 log-domain arithmetic."""

import math

NEG_INF = float("-inf")
_LN2 = math.log(2.0)


def log2_add(a: float, b: float) -> float:
    """log2(2**a + 2**b)."""
    if a < b:
        a, b = b, a
    if b == NEG_INF:
        return a
    return a + math.log1p(2.0 ** (b - a)) / _LN2


def log2_sub(a: float, b: float) -> float:
    """log2(2**a - 2**b) for a >= b; -inf when equal."""
    if b == NEG_INF:
        return a
    if b > a:
        raise ValueError("log2_sub would go negative")
    if b == a:
        return NEG_INF
    return a + math.log1p(-(2.0 ** (b - a))) / _LN2


def log2_sum(xs) -> float:
    xs = list(xs)
    if not xs:
        return NEG_INF
    top = max(xs)
    if top == NEG_INF:
        return top
    return top + math.log2(math.fsum(2.0 ** (x - top) for x in xs))


def log2_minus_one(x: float) -> float:
    """log2(2**x - 1) for x >= 0, dropping the -1 once it is below double precision."""
    if x >= 52.0:
        return x
    if x <= 0.0:
        return NEG_INF if x == 0.0 else math.nan
    return x + math.log1p(-(2.0 ** -x)) / _LN2


def log2_plus_one(x: float) -> float:
    """log2(2**x + 1)."""
    return log2_add(x, 0.0)
