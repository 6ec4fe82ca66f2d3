"""Reduction data and point counts.

local_data runs Tate's algorithm: the full stepwise version with translation
searches at p = 2, 3 and the (v(c4), v(disc)) classification at p >= 5.
Point counts at odd p use a numpy residue table over the p-minimal model, so
a count at a bad prime is the count of the reduced singular curve, which is
what the gcd and survey layers want.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .arith import factorize, is_prime, legendre, sqrt_mod, valuation
from .curve import CurveK, CurveQ, QuadInt, integral_model, invariants_K
from .errors import (
    BadReductionError,
    DataIntegrityError,
    InputError,
    ResourceError,
    UnsupportedPrimeError,
)

# Largest prime a single point count will attempt; the count is O(p).
COUNT_CEILING = 10**7

# Enumeration bound for the quadratic-field residue degree two oracle.
FP2_DIRECT_CEILING = 200


class ReductionType(str, Enum):
    GOOD = "good"
    SPLIT = "split multiplicative"
    NONSPLIT = "nonsplit multiplicative"
    ADDITIVE = "additive"


@dataclass(frozen=True)
class Kodaira:
    series: str  # "I", "I*", "II", "III", "IV", "II*", "III*", "IV*"
    n: int = 0

    @property
    def label(self) -> str:
        if self.series == "I":
            return f"I{self.n}"
        if self.series == "I*":
            return f"I{self.n}*"
        return self.series

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class LocalData:
    p: int
    rtype: ReductionType
    kodaira: Kodaira
    v_disc_min: int
    # points of the reduced (singular) curve for bad p: p, p+1 or p+2.
    # None for good reduction, where it would be a full point count.
    reduced_count: int | None
    minimal_ainvs: tuple


@dataclass(frozen=True)
class PointCount:
    p: int
    n: int
    count: int
    trace: int | None


def _ints(c: CurveQ) -> tuple:
    ci = integral_model(c)
    return tuple(int(a) for a in ci.ainvs)


def _b_disc(ai):
    a1, a2, a3, a4, a6 = ai
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    disc = -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    return b2, b4, b6, b8, disc


def _transform_int(ai, r=0, s=0, t=0):
    a1, a2, a3, a4, a6 = ai
    return (
        a1 + 2 * s,
        a2 - s * a1 + 3 * r - s * s,
        a3 + r * a1 + 2 * t,
        a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t,
        a6 + r * a4 + r * r * a2 + r**3 - t * a3 - t * t - r * t * a1,
    )


def _scale_down(ai, p):
    a1, a2, a3, a4, a6 = ai
    return (a1 // p, a2 // p**2, a3 // p**3, a4 // p**4, a6 // p**6)


def _tate_small(ai, p):
    """Full Tate algorithm at p in {2, 3}.

    Translation choices are found by brute search over small residues; at
    these primes the search spaces have at most a few thousand entries, and
    the search sidesteps the characteristic 2 and 3 special cases entirely.
    """
    while True:
        b2, b4, b6, b8, disc = _b_disc(ai)
        n = valuation(disc, p)
        if n == 0:
            return Kodaira("I", 0), ReductionType.GOOD, 0, ai

        # Step 2: move the singular point of the reduction to (0, 0).
        a1, a2, a3, a4, a6 = ai
        sing = None
        for x0 in range(p):
            for y0 in range(p):
                eq = y0 * y0 + a1 * x0 * y0 + a3 * y0 - (x0**3 + a2 * x0 * x0 + a4 * x0 + a6)
                dx = a1 * y0 - (3 * x0 * x0 + 2 * a2 * x0 + a4)
                dy = 2 * y0 + a1 * x0 + a3
                if eq % p == 0 and dx % p == 0 and dy % p == 0:
                    sing = (x0, y0)
                    break
            if sing:
                break
        if sing is None:
            raise DataIntegrityError(f"no singular point mod {p} despite v(disc) = {n}")
        ai = _transform_int(ai, r=sing[0], t=sing[1])
        a1, a2, a3, a4, a6 = ai
        b2 = a1 * a1 + 4 * a2

        if b2 % p != 0:
            # Multiplicative: split iff the tangent quadratic has a root.
            split = any((T * T + a1 * T - a2) % p == 0 for T in range(p))
            rt = ReductionType.SPLIT if split else ReductionType.NONSPLIT
            return Kodaira("I", n), rt, n, ai

        if a6 % p**2 != 0:
            return Kodaira("II"), ReductionType.ADDITIVE, n, ai
        _, _, _, b8, _ = _b_disc(ai)
        if b8 % p**3 != 0:
            return Kodaira("III"), ReductionType.ADDITIVE, n, ai
        b6_ = a3 * a3 + 4 * a6
        if b6_ % p**3 != 0:
            return Kodaira("IV"), ReductionType.ADDITIVE, n, ai

        # Normalise for step 6: p | a1, a2; p^2 | a3, a4; p^3 | a6.
        ai = _step6_normalise(ai, p)
        a1, a2, a3, a4, a6 = ai

        # P(T) = T^3 + (a2/p) T^2 + (a4/p^2) T + (a6/p^3) over F_p.
        c2, c4_, c6_ = a2 // p, a4 // p**2, a6 // p**3
        pdisc = (
            18 * c2 * c4_ * c6_ - 4 * c2**3 * c6_ + c2 * c2 * c4_ * c4_
            - 4 * c4_**3 - 27 * c6_ * c6_
        )
        if pdisc % p != 0:
            return Kodaira("I*", 0), ReductionType.ADDITIVE, n, ai

        rep = next(
            T for T in range(p)
            if (T**3 + c2 * T * T + c4_ * T + c6_) % p == 0
            and (3 * T * T + 2 * c2 * T + c4_) % p == 0
        )
        triple = all(
            (x - y) % p == 0
            for x, y in ((c2, -3 * rep), (c4_, 3 * rep * rep), (c6_, -rep**3))
        )
        ai = _transform_int(ai, r=p * rep)
        a1, a2, a3, a4, a6 = ai

        if not triple:
            # I_m* loop: alternate a quadratic in y and a quadratic in x,
            # shifting away repeated roots until one becomes separable.
            q = 2
            while True:
                A, B = a3 // p**q, a6 // p ** (2 * q)
                if (A * A + 4 * B) % p != 0:
                    m = 2 * q - 3
                    return Kodaira("I*", m), ReductionType.ADDITIVE, n, ai
                y0 = next(Y for Y in range(p) if (Y * Y + A * Y - B) % p == 0)
                ai = _transform_int(ai, t=p**q * y0)
                a1, a2, a3, a4, a6 = ai

                A2, A4, A6 = a2 // p, a4 // p ** (q + 1), a6 // p ** (2 * q + 1)
                if (A4 * A4 - 4 * A2 * A6) % p != 0:
                    m = 2 * q - 2
                    return Kodaira("I*", m), ReductionType.ADDITIVE, n, ai
                t0 = next(T for T in range(p) if (A2 * T * T + A4 * T + A6) % p == 0)
                ai = _transform_int(ai, r=p**q * t0)
                a1, a2, a3, a4, a6 = ai
                q += 1

        # Triple root: steps 8-10.
        A, B = a3 // p**2, a6 // p**4
        if (A * A + 4 * B) % p != 0:
            return Kodaira("IV*"), ReductionType.ADDITIVE, n, ai
        y0 = next(Y for Y in range(p) if (Y * Y + A * Y - B) % p == 0)
        ai = _transform_int(ai, t=p**2 * y0)
        a1, a2, a3, a4, a6 = ai

        if a4 % p**4 != 0:
            return Kodaira("III*"), ReductionType.ADDITIVE, n, ai
        if a6 % p**6 != 0:
            return Kodaira("II*"), ReductionType.ADDITIVE, n, ai

        # Step 11: not minimal; scale down and start over.
        ai = _scale_down(ai, p)


def _step6_normalise(ai, p):
    for s in range(p**2):
        a1s = ai[0] + 2 * s
        if a1s % p != 0:
            continue
        for r in range(p**3):
            for t in range(p**3):
                cand = _transform_int(ai, r=r, s=s, t=t)
                if (
                    cand[0] % p == 0 and cand[1] % p == 0
                    and cand[2] % p**2 == 0 and cand[3] % p**2 == 0
                    and cand[4] % p**3 == 0
                ):
                    return cand
    raise DataIntegrityError(f"step 6 normalisation failed at p = {p}")


def _local_large(ai, p):
    """Kodaira type at p >= 5 from the valuations of c4 and the discriminant."""
    b2, b4, b6, _, disc = _b_disc(ai)
    c4 = b2 * b2 - 24 * b4
    c6 = -(b2**3) + 36 * b2 * b4 - 216 * b6
    k = 0
    while (
        disc % p ** (12 * (k + 1)) == 0
        and (c4 == 0 or c4 % p ** (4 * (k + 1)) == 0)
        and (c6 == 0 or c6 % p ** (6 * (k + 1)) == 0)
    ):
        k += 1
    if k:
        c4 //= p ** (4 * k)
        c6 //= p ** (6 * k)
        disc //= p ** (12 * k)
    # A p-integral, p-minimal model with these invariants; 6 is a unit here.
    ai_min = (0, 0, 0, -27 * c4, -54 * c6)

    delta = valuation(disc, p)
    if delta == 0:
        return Kodaira("I", 0), ReductionType.GOOD, 0, ai_min
    gamma = valuation(c4, p) if c4 != 0 else delta  # c4 = 0 acts as gamma >= 3
    if gamma == 0:
        if legendre(-c6, p) == 1:
            rt = ReductionType.SPLIT
        else:
            rt = ReductionType.NONSPLIT
        return Kodaira("I", delta), rt, delta, ai_min
    add = ReductionType.ADDITIVE
    if delta == 2:
        return Kodaira("II"), add, delta, ai_min
    if delta == 3:
        return Kodaira("III"), add, delta, ai_min
    if delta == 4:
        return Kodaira("IV"), add, delta, ai_min
    if delta == 6:
        return Kodaira("I*", 0), add, delta, ai_min
    if gamma == 2:
        return Kodaira("I*", delta - 6), add, delta, ai_min
    if delta == 8:
        return Kodaira("IV*"), add, delta, ai_min
    if delta == 9:
        return Kodaira("III*"), add, delta, ai_min
    if delta == 10:
        return Kodaira("II*"), add, delta, ai_min
    raise DataIntegrityError(f"impossible valuation pair ({gamma}, {delta}) at {p}")


@lru_cache(maxsize=16384)
def _local_data_ints(ai, p):
    if p in (2, 3):
        kod, rt, v, ai_min = _tate_small(ai, p)
    else:
        kod, rt, v, ai_min = _local_large(ai, p)
    if rt is ReductionType.GOOD:
        m = None
    elif rt is ReductionType.SPLIT:
        m = p
    elif rt is ReductionType.NONSPLIT:
        m = p + 2
    else:
        m = p + 1
    return LocalData(p, rt, kod, v, m, ai_min)


def local_data(c: CurveQ, p: int) -> LocalData:
    if p < 2 or not is_prime(p):
        raise InputError(f"local data needs a prime, got {p}")
    return _local_data_ints(_ints(c), p)


def smooth_locus_order(ld: LocalData) -> int:
    """Order of the group of nonsingular points of the reduction mod p."""
    if ld.rtype is ReductionType.SPLIT:
        return ld.p - 1
    if ld.rtype is ReductionType.NONSPLIT:
        return ld.p + 1
    if ld.rtype is ReductionType.ADDITIVE:
        return ld.p
    raise InputError(
        "smooth locus order is only a formula at bad primes; "
        "count points for good reduction"
    )


def _count_model_mod_p(ai, p: int) -> int:
    """Projective points of the reduction of an integral model mod p.

    Valid for good and bad reduction alike: the residue character sum counts
    points of the possibly singular reduced cubic.
    """
    if p == 2:
        a1, a2, a3, a4, a6 = (a % 2 for a in ai)
        count = 1
        for x in (0, 1):
            for y in (0, 1):
                if (y * y + a1 * x * y + a3 * y - (x**3 + a2 * x * x + a4 * x + a6)) % 2 == 0:
                    count += 1
        return count
    b2, b4, b6, _, _ = _b_disc(ai)
    b2 %= p
    d4 = (2 * b4) % p
    b6 %= p
    xs = np.arange(p, dtype=np.int64)
    chi = np.full(p, -1, dtype=np.int64)
    chi[(xs * xs) % p] = 1
    chi[0] = 0
    vals = (4 * xs + b2) % p
    vals = (vals * xs + d4) % p
    vals = (vals * xs + b6) % p
    return int(p + 1 + chi[vals].sum())


def count_points_fp(c: CurveQ, p: int) -> PointCount:
    """|E(F_p)| on the p-minimal model; the trace is set only for good p."""
    if not is_prime(p):
        raise InputError(f"point count needs a prime, got {p}")
    if p > COUNT_CEILING:
        raise ResourceError(f"point count at {p} exceeds ceiling {COUNT_CEILING}")
    ai = _ints(c)
    _, _, _, _, disc = _b_disc(ai)
    if disc % p != 0:
        n = _count_model_mod_p(ai, p)
        good = True
    else:
        ld = _local_data_ints(ai, p)
        n = _count_model_mod_p(ld.minimal_ainvs, p)
        good = ld.rtype is ReductionType.GOOD
        if not good and n != ld.reduced_count:
            raise DataIntegrityError(
                f"reduced count {n} at {p} disagrees with type {ld.rtype}"
            )
    trace = p + 1 - n if good else None
    if trace is not None and trace * trace > 4 * p:
        raise DataIntegrityError(f"trace {trace} at {p} violates the Hasse bound")
    return PointCount(p, 1, n, trace)


def count_extension(trace_or_count, p: int | None = None, n: int = 2) -> PointCount:
    """|E(F_{p^n})| from the degree one trace via the standard recurrence."""
    if isinstance(trace_or_count, PointCount):
        if trace_or_count.trace is None:
            raise InputError("extension counts need good reduction")
        a = trace_or_count.trace
        p = trace_or_count.p
    else:
        a = int(trace_or_count)
        if p is None:
            raise InputError("a bare trace needs the prime alongside it")
    if n < 1:
        raise InputError(f"extension degree must be >= 1, got {n}")
    if not is_prime(p):
        raise InputError(f"need a prime, got {p}")
    if a * a > 4 * p:
        raise InputError(f"trace {a} violates the Hasse bound at {p}")
    prev, cur = 2, a
    for _ in range(n - 1):
        prev, cur = cur, a * cur - p * prev
    an = cur if n > 1 else a
    return PointCount(p, n, p**n + 1 - an, an)


def count_fp2_direct(c: CurveQ, p: int) -> int:
    """Enumerative |E(F_{p^2})| for small odd good p: the n = 2 oracle.

    Squareness in F_{p^2} is read off the norm, so the double loop stays in
    plain integers.
    """
    if p < 3 or not is_prime(p) or p > FP2_DIRECT_CEILING:
        raise InputError(
            f"direct F_p^2 enumeration supports odd primes up to {FP2_DIRECT_CEILING}"
        )
    ai = _ints(c)
    _, _, _, _, disc = _b_disc(ai)
    if disc % p != 0:
        b2, b4, b6, _, _ = _b_disc(ai)
    else:
        ld = _local_data_ints(ai, p)
        if ld.rtype is not ReductionType.GOOD:
            raise InputError(f"direct F_p^2 enumeration needs good reduction at {p}")
        b2, b4, b6, _, _ = _b_disc(ld.minimal_ainvs)
    r = 2
    while legendre(r, p) != -1:
        r += 1
    b2, d4, b6 = b2 % p, (2 * b4) % p, b6 % p
    total = p * p + 1
    for x0 in range(p):
        for x1 in range(p):
            # B(x) for x = x0 + x1 s, s^2 = r
            u, v = x0, x1
            # x^2
            u2, v2 = (u * u + r * v * v) % p, (2 * u * v) % p
            # x^3
            u3, v3 = (u2 * u + r * v2 * v) % p, (u2 * v + v2 * u) % p
            zu = (4 * u3 + b2 * u2 + d4 * u + b6) % p
            zv = (4 * v3 + b2 * v2 + d4 * v) % p
            nrm = (zu * zu - r * zv * zv) % p
            # norm zero forces z = 0 since r is a nonresidue; chi(0) = 0
            if nrm != 0:
                total += legendre(nrm, p)
    return total


def twist_count_identity_check(c: CurveQ, p: int) -> bool:
    """Check |E(F_p)| + |E^d(F_p)| = 2p + 2 for a nonresidue twist d mod p."""
    if p < 3 or not is_prime(p):
        raise InputError("twist identity check needs an odd prime")
    ai = _ints(c)
    b2, b4, b6, _, disc = _b_disc(ai)
    if disc % p == 0:
        raise InputError(f"twist identity check needs good reduction at {p}")
    # complete the square only; eliminating the x^2 term would need p > 3
    inv2 = pow(2, p - 2, p)
    inv4 = inv2 * inv2 % p
    a2 = b2 * inv4 % p
    a4 = b4 * inv2 % p
    a6 = b6 * inv4 % p
    d = 2
    while legendre(d, p) != -1:
        d += 1
    n_e = _count_model_mod_p((0, a2, 0, a4, a6), p)
    n_tw = _count_model_mod_p(
        (0, a2 * d % p, 0, a4 * d * d % p, a6 * pow(d, 3, p)), p)
    base = _count_model_mod_p(ai, p)
    return n_e == base and n_e + n_tw == 2 * p + 2


class SplitKind(str, Enum):
    SPLIT = "split"
    INERT = "inert"
    RAMIFIED = "ramified"


@dataclass(frozen=True)
class QuadraticPrimeSplitting:
    p: int
    d: int
    kind: SplitKind
    e: int  # ramification index
    f: int  # residue degree


def splitting(d: int, p: int) -> QuadraticPrimeSplitting:
    """How p behaves in Q(sqrt d), d squarefree and not 0 or 1."""
    if d in (0, 1):
        raise InputError(f"need a nontrivial squarefree d, got {d}")
    for q, e in factorize(abs(d)).items():
        if e > 1:
            raise InputError(f"d = {d} is not squarefree")
    if not is_prime(p):
        raise InputError(f"need a prime, got {p}")
    if p == 2:
        m = d % 8
        if m == 1:
            return QuadraticPrimeSplitting(p, d, SplitKind.SPLIT, 1, 1)
        if m == 5:
            return QuadraticPrimeSplitting(p, d, SplitKind.INERT, 1, 2)
        return QuadraticPrimeSplitting(p, d, SplitKind.RAMIFIED, 2, 1)
    ch = legendre(d % p, p)
    if ch == 1:
        return QuadraticPrimeSplitting(p, d, SplitKind.SPLIT, 1, 1)
    if ch == -1:
        return QuadraticPrimeSplitting(p, d, SplitKind.INERT, 1, 2)
    return QuadraticPrimeSplitting(p, d, SplitKind.RAMIFIED, 2, 1)


def count_at_quadratic_prime(c: CurveQ, d: int, p: int) -> int:
    """|E(O_K/P)| for P above p in K = Q(sqrt d), for a curve defined over Q.

    Both primes above a split p give the same count, so one integer suffices.
    Ramified primes are refused; so are primes of bad reduction.
    """
    sp = splitting(d, p)
    if sp.kind is SplitKind.RAMIFIED:
        raise UnsupportedPrimeError(f"{p} ramifies in Q(sqrt {d})")
    if p == 2:
        raise UnsupportedPrimeError("residue counts at 2 are not supported")
    ai = _ints(c)
    _, _, _, _, disc = _b_disc(ai)
    if disc % p == 0:
        ld = _local_data_ints(ai, p)
        if ld.rtype is not ReductionType.GOOD:
            raise BadReductionError(f"bad reduction at {p}")
        ai = ld.minimal_ainvs
    n1 = _count_model_mod_p(ai, p)
    if sp.kind is SplitKind.SPLIT:
        return n1
    return n1 * (2 * p + 2 - n1)


# ---------------------------------------------------------------------------
# F_{p^2} arithmetic: elements are pairs (u, v) = u + v*s with s^2 = r.


def _fq_mul(a, b, p, r):
    return ((a[0] * b[0] + r * a[1] * b[1]) % p, (a[0] * b[1] + a[1] * b[0]) % p)


def _fq_inv(a, p, r):
    nrm = (a[0] * a[0] - r * a[1] * a[1]) % p
    if nrm == 0:
        raise ZeroDivisionError("inverse of zero in F_p^2")
    ni = pow(nrm, p - 2, p)
    return ((a[0] * ni) % p, (-a[1] * ni) % p)


def _fq_pow(a, e, p, r):
    out = (1, 0)
    base = a
    while e:
        if e & 1:
            out = _fq_mul(out, base, p, r)
        base = _fq_mul(base, base, p, r)
        e >>= 1
    return out


def _fq_is_square(a, p, r):
    if a == (0, 0):
        return True
    nrm = (a[0] * a[0] - r * a[1] * a[1]) % p
    return legendre(nrm, p) == 1


def _fq_sqrt(a, p, r):
    """A square root in F_{p^2} by Tonelli-Shanks in the cyclic group."""
    if a == (0, 0):
        return (0, 0)
    if not _fq_is_square(a, p, r):
        return None
    q = p * p
    m = q - 1
    e = 0
    while m % 2 == 0:
        m //= 2
        e += 1
    # find a nonsquare generator of the 2-part
    g = (1, 1)
    while _fq_is_square(g, p, r):
        g = (g[0] + 1, g[1]) if g[0] + 1 < p else (0, g[1] + 1)
    z = _fq_pow(g, m, p, r)
    x = _fq_pow(a, (m + 1) // 2, p, r)
    b = _fq_mul(_fq_pow(a, m, p, r), (1, 0), p, r)
    while b != (1, 0):
        # order of b is 2^k
        k = 0
        t = b
        while t != (1, 0):
            t = _fq_mul(t, t, p, r)
            k += 1
        if k == e:
            raise DataIntegrityError("square root search left the square class")
        w = z
        for _ in range(e - k - 1):
            w = _fq_mul(w, w, p, r)
        x = _fq_mul(x, w, p, r)
        b = _fq_mul(b, _fq_mul(w, w, p, r), p, r)
        e = k
        z = _fq_mul(w, w, p, r)
    return x


# Point group over F_{p^2} for a long Weierstrass model; points are
# (x, y) pairs of field elements or None for the point at infinity.


def _fq_pt_neg(pt, ai, p, r):
    if pt is None:
        return None
    a1, _, a3, _, _ = ai
    x, y = pt
    my = _fq_mul((p - 1, 0), y, p, r)
    t = _fq_mul(a1, x, p, r)
    return (x, ((my[0] - t[0] - a3[0]) % p, (my[1] - t[1] - a3[1]) % p))


def _fq_pt_add(pt1, pt2, ai, p, r):
    if pt1 is None:
        return pt2
    if pt2 is None:
        return pt1
    a1, a2, a3, a4, _ = ai
    x1, y1 = pt1
    x2, y2 = pt2
    sub = lambda a, b: ((a[0] - b[0]) % p, (a[1] - b[1]) % p)
    add = lambda a, b: ((a[0] + b[0]) % p, (a[1] + b[1]) % p)
    if x1 == x2 and add(add(y1, y2), add(_fq_mul(a1, x1, p, r), a3)) == (0, 0):
        return None
    if x1 == x2:
        num = add(
            add(_fq_mul((3, 0), _fq_mul(x1, x1, p, r), p, r),
                _fq_mul(_fq_mul((2, 0), a2, p, r), x1, p, r)),
            sub(a4, _fq_mul(a1, y1, p, r)),
        )
        den = add(add(_fq_mul((2, 0), y1, p, r), _fq_mul(a1, x1, p, r)), a3)
    else:
        num = sub(y2, y1)
        den = sub(x2, x1)
    lam = _fq_mul(num, _fq_inv(den, p, r), p, r)
    x3 = sub(sub(sub(add(_fq_mul(lam, lam, p, r), _fq_mul(a1, lam, p, r)), a2), x1), x2)
    y3 = sub(sub(_fq_mul(lam, sub(x1, x3), p, r), y1),
             add(_fq_mul(a1, x3, p, r), a3))
    return (x3, y3)


def _fq_pt_mul(k, pt, ai, p, r):
    if k < 0:
        return _fq_pt_mul(-k, _fq_pt_neg(pt, ai, p, r), ai, p, r)
    out = None
    base = pt
    while k:
        if k & 1:
            out = _fq_pt_add(out, base, ai, p, r)
        base = _fq_pt_add(base, base, ai, p, r)
        k >>= 1
    return out


def _fq_random_point(ai, p, r, rng):
    a1, a2, a3, a4, a6 = ai
    inv2 = pow(2, p - 2, p)
    while True:
        x = (rng.randrange(p), rng.randrange(p))
        x2 = _fq_mul(x, x, p, r)
        x3 = _fq_mul(x2, x, p, r)
        rhs = (
            (x3[0] + _fq_mul(a2, x2, p, r)[0] + _fq_mul(a4, x, p, r)[0] + a6[0]) % p,
            (x3[1] + _fq_mul(a2, x2, p, r)[1] + _fq_mul(a4, x, p, r)[1] + a6[1]) % p,
        )
        lin = (
            (_fq_mul(a1, x, p, r)[0] + a3[0]) % p,
            (_fq_mul(a1, x, p, r)[1] + a3[1]) % p,
        )
        # complete the square: y = (-lin + sqrt(lin^2 + 4 rhs)) / 2
        disc = (
            (_fq_mul(lin, lin, p, r)[0] + 4 * rhs[0]) % p,
            (_fq_mul(lin, lin, p, r)[1] + 4 * rhs[1]) % p,
        )
        root = _fq_sqrt(disc, p, r)
        if root is None:
            continue
        y = (((-lin[0] + root[0]) * inv2) % p, ((-lin[1] + root[1]) * inv2) % p)
        return (x, y)


def _bsgs_annihilator(pt, ai, p, r, lo, hi):
    """Some k in [lo, hi] with k*pt = O; the group order is one such k."""
    width = hi - lo + 1
    m = math.isqrt(width) + 1
    baby = {}
    q = None
    for j in range(m):
        baby.setdefault(q, j)  # q = j*pt; None is the identity at j = 0
        q = _fq_pt_add(q, pt, ai, p, r)
    giant = _fq_pt_mul(m, pt, ai, p, r)
    cur = _fq_pt_mul(lo, pt, ai, p, r)
    i = 0
    while lo + i * m <= hi + m:
        tgt = _fq_pt_neg(cur, ai, p, r)
        if tgt in baby:
            k = lo + i * m + baby[tgt]
            if lo <= k <= hi:
                return k
        cur = _fq_pt_add(cur, giant, ai, p, r)
        i += 1
    raise DataIntegrityError("no annihilating multiple found in the Hasse window")


def _exact_order(pt, ai, p, r, multiple):
    o = multiple
    for q in factorize(multiple):
        while o % q == 0 and _fq_pt_mul(o // q, pt, ai, p, r) is None:
            o //= q
    return o


def _fq_twist(ai, p, r):
    """A quadratic twist over F_{p^2} of the short form of the model."""
    b2, b4, b6 = _fq_b_values(ai, p, r)
    # c4, c6 of the reduced model
    c4 = (
        (_fq_mul(b2, b2, p, r)[0] - 24 * b4[0]) % p,
        (_fq_mul(b2, b2, p, r)[1] - 24 * b4[1]) % p,
    )
    b23 = _fq_mul(b2, _fq_mul(b2, b2, p, r), p, r)
    b2b4 = _fq_mul(b2, b4, p, r)
    c6 = (
        (-b23[0] + 36 * b2b4[0] - 216 * b6[0]) % p,
        (-b23[1] + 36 * b2b4[1] - 216 * b6[1]) % p,
    )
    inv48 = pow(48, p - 2, p)
    inv864 = pow(864, p - 2, p)
    a4 = ((-c4[0] * inv48) % p, (-c4[1] * inv48) % p)
    a6 = ((-c6[0] * inv864) % p, (-c6[1] * inv864) % p)
    g = (1, 1)
    while _fq_is_square(g, p, r):
        g = (g[0] + 1, g[1]) if g[0] + 1 < p else (0, g[1] + 1)
    g2 = _fq_mul(g, g, p, r)
    g3 = _fq_mul(g2, g, p, r)
    zero = (0, 0)
    return (zero, zero, zero, _fq_mul(a4, g2, p, r), _fq_mul(a6, g3, p, r))


def _fq_b_values(ai, p, r):
    a1, a2, a3, a4, a6 = ai
    b2 = (
        (_fq_mul(a1, a1, p, r)[0] + 4 * a2[0]) % p,
        (_fq_mul(a1, a1, p, r)[1] + 4 * a2[1]) % p,
    )
    a1a3 = _fq_mul(a1, a3, p, r)
    b4 = ((2 * a4[0] + a1a3[0]) % p, (2 * a4[1] + a1a3[1]) % p)
    a3a3 = _fq_mul(a3, a3, p, r)
    b6 = ((a3a3[0] + 4 * a6[0]) % p, (a3a3[1] + 4 * a6[1]) % p)
    return b2, b4, b6


def _fq_candidates(ai, p, r, rng, rounds=24):
    """(lcm of sampled point orders, candidate group orders) for a model."""
    q = p * p
    t = math.isqrt(4 * q)
    lo, hi = q + 1 - t, q + 1 + t
    lcm_ = 1
    for _ in range(rounds):
        pt = _fq_random_point(ai, p, r, rng)
        k = _bsgs_annihilator(pt, ai, p, r, lo, hi)
        o = _exact_order(pt, ai, p, r, k)
        lcm_ = lcm_ * o // math.gcd(lcm_, o)
        first = ((lo + lcm_ - 1) // lcm_) * lcm_
        cands = list(range(first, hi + 1, lcm_))
        if len(cands) == 1:
            return lcm_, cands
    first = ((lo + lcm_ - 1) // lcm_) * lcm_
    return lcm_, list(range(first, hi + 1, lcm_))


def _fq_enumerate(ai, p, r):
    b2, b4, b6 = _fq_b_values(ai, p, r)
    total = p * p + 1
    for x0 in range(p):
        for x1 in range(p):
            x = (x0, x1)
            x2 = _fq_mul(x, x, p, r)
            x3 = _fq_mul(x2, x, p, r)
            zu = (4 * x3[0] + _fq_mul(b2, x2, p, r)[0]
                  + 2 * _fq_mul(b4, x, p, r)[0] + b6[0]) % p
            zv = (4 * x3[1] + _fq_mul(b2, x2, p, r)[1]
                  + 2 * _fq_mul(b4, x, p, r)[1] + b6[1]) % p
            nrm = (zu * zu - r * zv * zv) % p
            if nrm != 0:
                total += legendre(nrm, p)
    return total


def _fq_group_order(ai, p, r):
    """|E(F_{p^2})| by random-point order finding inside the Hasse window.

    Ambiguity (several multiples of the sampled exponent in the window, as
    happens for supersingular reductions) is broken against the quadratic
    twist, whose order is locked to this one by the trace identity.
    """
    if p <= 211:
        return _fq_enumerate(ai, p, r)
    seed = p
    for comp in ai:
        seed = seed * 1000003 + comp[0] * 65537 + comp[1]
    rng = random.Random(seed & (2**63 - 1))
    _, cands = _fq_candidates(ai, p, r, rng)
    if len(cands) == 1:
        return cands[0]
    q = p * p
    tw = _fq_twist(ai, p, r)
    lcm_tw, _ = _fq_candidates(tw, p, r, rng)
    narrowed = [n for n in cands if (2 * q + 2 - n) % lcm_tw == 0]
    if len(narrowed) == 1:
        return narrowed[0]
    return _fq_enumerate(ai, p, r)


def count_curveK_at_prime(c: CurveK, p: int) -> list:
    """Residue field point counts above p for a curve over Q(sqrt d).

    Split p: two counts, the embedding using the smaller square root of d
    mod p first. Inert p: one count over F_{p^2}. Ramified p and p = 2 are
    refused; primes dividing the reduced discriminant raise
    BadReductionError so scans can skip them.
    """
    d = c.d
    sp = splitting(d, p)
    if p == 2:
        raise UnsupportedPrimeError("residue counts at 2 are not supported")
    if sp.kind is SplitKind.RAMIFIED:
        raise UnsupportedPrimeError(f"{p} ramifies in Q(sqrt {d})")
    inv = invariants_K(c)
    if sp.kind is SplitKind.SPLIT:
        root = sqrt_mod(d % p, p)
        inv2 = pow(2, p - 2, p)
        counts = []
        for rt in (root, p - root):
            def emb(z: QuadInt) -> int:
                u, v = z.doubled()
                return ((u + v * rt) * inv2) % p
            if emb(inv.disc) == 0:
                raise BadReductionError(f"bad reduction above {p} (split)")
            ai = tuple(emb(a) for a in c.ainvs)
            counts.append(_count_model_mod_p(ai, p))
        return counts
    # inert: residue field F_{p^2} = F_p(sqrt d)
    r = d % p
    inv2 = pow(2, p - 2, p)

    def embq(z: QuadInt):
        u, v = z.doubled()
        return ((u * inv2) % p, (v * inv2) % p)

    if embq(inv.disc) == (0, 0):
        raise BadReductionError(f"bad reduction above {p} (inert)")
    ai = tuple(embq(a) for a in c.ainvs)
    return [_fq_group_order(ai, p, r)]
