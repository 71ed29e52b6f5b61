"""Continued fractions with positive terms, x = 1/(a0 + 1/(a1 + ...)).

Convergents follow the convention p_n/q_n = [a0, ..., a_{n-1}], so that
q_0 = 1, q_1 = a0 and q_{n+1} = a_n q_n + q_{n-1}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

MAX_DEPTH = 40
ZERO_TOL = 1e-14
UNIT_ROUNDOFF = 2.0 ** -53
EXACT_CAP = 1e-8  # a quotient above 1e8 is indistinguishable from termination in doubles

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SILVER = math.sqrt(2.0) - 1.0


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class CFExpansion:
    terms: tuple[int, ...]
    value: float
    exact: bool = False

    @property
    def depth(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class BoundedTypeWitness:
    K: int
    depth: int


@dataclass(frozen=True)
class BoundedTypeRejection:
    K: int
    index: int
    term: int

    def __bool__(self) -> bool:
        return False


def gauss(x: float) -> float:
    if not 0.0 < x < 1.0:
        raise DomainError(f"Gauss map needs x in (0,1), got {x!r}")
    y = 1.0 / x
    return y - math.floor(y)


def expand(x: float, n: int = MAX_DEPTH) -> CFExpansion:
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < x < 1.0:
        raise DomainError(f"expansion needs x in (0,1), got {x!r}")
    n = min(n, MAX_DEPTH)
    terms = []
    a = x
    err = UNIT_ROUNDOFF * x
    exact = False
    for _ in range(n):
        y = 1.0 / a
        k = math.floor(y)
        frac = y - k
        # round-off in alpha_i is amplified by 1/alpha_i^2 per Gauss step
        err = err / (a * a) + UNIT_ROUNDOFF * y
        tol = min(max(ZERO_TOL, 8.0 * err), EXACT_CAP)
        # 1/a may round to just below an integer
        if 1.0 - frac < tol:
            k, frac = k + 1, 0.0
        terms.append(int(k))
        if frac < tol:
            exact = True
            break
        a = frac
    return CFExpansion(tuple(terms), x, exact)


def reconstruct(terms) -> float:
    terms = list(terms)
    if not terms:
        raise ValueError("need at least one term")
    x = 0.0
    for a in reversed(terms):
        x = 1.0 / (a + x)
    return x


def _recursion(terms):
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    out = [(p, q)]
    for a in terms:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append((p, q))
    return out


def convergents(e: CFExpansion | list | tuple) -> list[tuple[int, int]]:
    """(p_n, q_n) for n = 1..len(terms); the n-th uses the first n terms."""
    terms = e.terms if isinstance(e, CFExpansion) else tuple(e)
    if not terms:
        raise ValueError("empty expansion")
    return _recursion(terms)[1:]


def q_sequence(e: CFExpansion | list | tuple) -> list[int]:
    """Denominators q_0, q_1, ..., q_m (q_0 = 1)."""
    terms = e.terms if isinstance(e, CFExpansion) else tuple(e)
    return [q for _, q in _recursion(terms)]


def is_bounded_type(e: CFExpansion | list | tuple, K: int):
    terms = e.terms if isinstance(e, CFExpansion) else tuple(e)
    for i, a in enumerate(terms):
        if a > K:
            return BoundedTypeRejection(K, i, a)
    return BoundedTypeWitness(K, len(terms))


def depth_for_error(x: float, err: float) -> int:
    """Largest n with q_n^2 <= 1/err for the expansion of x (at least 1)."""
    qs = q_sequence(expand(x))
    n = 1
    for i, q in enumerate(qs):
        if q * q * err <= 1.0:
            n = i
    return max(n, 1)


def cf_compare(x: float, y: float, depth: int) -> int:
    """Order x against y by their first `depth` partial quotients.

    Returns -1, 0 or +1.  0 means the prefixes agree to `depth`.  A larger
    term at an even index makes the number smaller; orientation alternates.
    """
    if x == y:
        return 0
    ex, ey = expand(x, depth), expand(y, depth)
    for i in range(depth):
        ax = ex.terms[i] if i < len(ex.terms) else math.inf
        ay = ey.terms[i] if i < len(ey.terms) else math.inf
        if ax == ay == math.inf:
            return 0
        if ax != ay:
            smaller = ax > ay if i % 2 == 0 else ax < ay
            return -1 if smaller else 1
    return 0


def parse_alpha(token: str) -> tuple[float, tuple[int, ...] | None]:
    """'golden', 'silver' or a comma-separated list of partial quotients.

    A finite list is read as a periodic tail repeating its last term, so
    '1,2' means [1,2,2,2,...].  Returns (value, prefix).
    """
    t = token.strip().lower()
    if t == "golden":
        return GOLDEN, (1,) * MAX_DEPTH
    if t == "silver":
        return SILVER, (2,) * MAX_DEPTH
    try:
        terms = [int(s) for s in t.strip("[]").split(",") if s.strip()]
    except ValueError:
        raise DomainError(f"alpha must be golden, silver or a term list, got {token!r}") from None
    if not terms or min(terms) < 1:
        raise DomainError(f"bad continued fraction {token!r}")
    full = terms + [terms[-1]] * (MAX_DEPTH - len(terms))
    return reconstruct(full), tuple(full)
