"""Prime and residue arithmetic used everywhere else in the package.

Everything here is exact integer arithmetic.  numpy only shows up inside the
sieve, where the boolean-array formulation is an order of magnitude faster
than a pure Python loop.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InputError, ResourceError

# Hard ceiling for any prime enumeration.  Large enough for every survey the
# package supports, small enough to fail fast on a runaway request.
SCAN_CEILING = 10**8

# Above this size the sieve switches to fixed-width segments so memory stays
# bounded by the segment, not by the range.
_SEGMENT_THRESHOLD = 10**6
_SEGMENT_WIDTH = 1 << 20

# Deterministic Miller-Rabin bases, valid for every n < 3.3 * 10**24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for base in _MR_BASES:
        x = pow(base, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _require_odd_prime(p: int) -> None:
    if p < 3 or p % 2 == 0 or not is_prime(p):
        raise InputError(f"expected an odd prime, got {p}")


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a|p) via the Euler criterion.  p must be an odd prime."""
    _require_odd_prime(p)
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def sqrt_mod(a: int, p: int):
    """Smaller square root of a mod p, or None when a is a non-residue.

    Tonelli-Shanks in the 1 mod 8 case; the shortcuts for p = 3 mod 4 and
    p = 5 mod 8 avoid the loop entirely.
    """
    _require_odd_prime(p)
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        r = pow(a, (p + 1) // 4, p)
    elif p % 8 == 5:
        r = pow(a, (p + 3) // 8, p)
        if r * r % p != a:
            r = r * pow(2, (p - 1) // 4, p) % p
    else:
        # Tonelli-Shanks.  Find a generator of the 2-Sylow subgroup first.
        q, s = p - 1, 0
        while q % 2 == 0:
            q //= 2
            s += 1
        z = 2
        while pow(z, (p - 1) // 2, p) != p - 1:
            z += 1
        c = pow(z, q, p)
        r = pow(a, (q + 1) // 2, p)
        t = pow(a, q, p)
        m = s
        while t != 1:
            t2 = t
            i = 0
            while t2 != 1:
                t2 = t2 * t2 % p
                i += 1
            b = pow(c, 1 << (m - i - 1), p)
            r = r * b % p
            c = b * b % p
            t = t * c % p
            m = i
    return min(r, p - r)


def _simple_sieve(limit: int) -> np.ndarray:
    """All primes <= limit as an int64 array."""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    for q in range(2, math.isqrt(limit) + 1):
        if mask[q]:
            mask[q * q :: q] = False
    return np.flatnonzero(mask).astype(np.int64)


def primes_in_range(lo: int, hi: int, *, ceiling: int = SCAN_CEILING) -> list[int]:
    """Primes p with lo <= p <= hi, ascending.

    Ranges past _SEGMENT_THRESHOLD are sieved in fixed-width segments.
    Anything beyond the ceiling is refused rather than attempted.
    """
    if lo < 0 or hi < lo:
        raise InputError(f"bad prime range [{lo}, {hi}]")
    if hi > ceiling:
        raise ResourceError(
            f"prime range end {hi} exceeds the scan ceiling {ceiling}"
        )
    if hi < 2:
        return []
    if hi <= _SEGMENT_THRESHOLD:
        primes = _simple_sieve(hi)
        return [int(p) for p in primes[primes >= lo]]

    base = _simple_sieve(math.isqrt(hi))
    out: list[int] = [int(p) for p in base[(base >= lo) & (base <= hi)]]
    start = max(lo, int(base[-1]) + 1)
    while start <= hi:
        stop = min(start + _SEGMENT_WIDTH, hi + 1)
        mask = np.ones(stop - start, dtype=bool)
        for q in base:
            q = int(q)
            first = max(q * q, ((start + q - 1) // q) * q)
            if first >= stop:
                continue
            mask[first - start :: q] = False
        out.extend(int(v) for v in np.flatnonzero(mask) + start)
        start = stop
    return out


def valuation(n, p: int):
    """p-adic valuation of a rational or integer n; math.inf for n = 0."""
    if p < 2 or not is_prime(p):
        raise InputError(f"valuation needs a prime, got {p}")
    from fractions import Fraction

    if n == 0:
        return math.inf
    if isinstance(n, Fraction):
        return valuation(n.numerator, p) - valuation(n.denominator, p)
    n = abs(int(n))
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def factorize(n: int, *, bound: int = 10**7) -> dict[int, int]:
    """Factor |n| by trial division up to bound.

    A prime cofactor beyond the bound is accepted; a composite one means the
    input is out of scope for this package and raises ResourceError.
    """
    n = abs(n)
    if n == 0:
        raise InputError("cannot factor 0")
    factors: dict[int, int] = {}
    for q in (2, 3, 5):
        while n % q == 0:
            factors[q] = factors.get(q, 0) + 1
            n //= q
    q = 7
    # wheel over 7, 11, 13, ... stepping 2/4; plain alternation is enough here
    step = 4
    while q * q <= n and q <= bound:
        while n % q == 0:
            factors[q] = factors.get(q, 0) + 1
            n //= q
        q += step
        step = 6 - step
    if n > 1:
        if n <= bound * bound or is_prime(n):
            factors[n] = factors.get(n, 0) + 1
        else:
            raise ResourceError(
                f"composite cofactor {n} has no prime factor <= {bound}"
            )
    return factors


def divisors(n: int, *, bound: int = 10**7) -> list[int]:
    """Sorted positive divisors of |n|."""
    out = [1]
    for q, e in factorize(n, bound=bound).items():
        out = [d * q**k for d in out for k in range(e + 1)]
    return sorted(out)
