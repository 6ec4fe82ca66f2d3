"""Command-line front end.

One subcommand per operation; data goes to stdout, diagnostics to stderr.
Exit codes follow the package convention: 0 success, 1 a verification found
violations, 2 usage, 3 resource or network trouble.  Reports depend only on
the flags, so identical invocations give identical bytes.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from fractions import Fraction

import click

from .catalog import as_curve, bundled_corpus, parse_curve, render_curve, resolve_label
from .curve import make_family, quadratic_twist
from .errors import (
    BadReductionError,
    DataIntegrityError,
    InputError,
    NetworkError,
    NotFoundError,
    ParseError,
    ResourceError,
    UnsupportedPrimeError,
)
from .reduction import count_at_quadratic_prime, count_points_fp, local_data
from .survey import (
    SurveySpec,
    Violation,
    ScanReport,
    bad_primes,
    check_kubert_conditions,
    congruence_survey,
    gcd_orders,
    gcd_orders_quadratic,
    scan_anomalous,
    scan_supersingular,
    verify_expected,
    verify_family,
)
from .torsion import (
    odd_torsion_over_quadratic,
    quadratic_torsion_bound,
    torsion_over_Q,
)
from .arith import legendre, primes_in_range

SCAN_CEILING_ENV = "ELLORDERS_SCAN_CEILING"

# --d on the command line maps onto whatever the family calls its parameter
_FAMILY_PARAM = {
    "kkp": "t",
    "family3": "t",
    "family5": "t",
    "kubert5": "lam",
    "e1k": "k",
    "e2k": "k",
}


def _checked_bound(x: int) -> int:
    cap = os.environ.get(SCAN_CEILING_ENV)
    if cap is not None:
        try:
            cap_val = int(cap)
        except ValueError:
            raise InputError(f"{SCAN_CEILING_ENV} must be an integer, got {cap!r}")
        if x > cap_val:
            raise ResourceError(
                f"prime bound {x} exceeds the configured ceiling {cap_val}"
            )
    return x


def _parse_value(text: str):
    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise click.UsageError(f"cannot read {text!r} as a rational number")
    return int(v) if v.denominator == 1 else v


def _parse_params(text: str) -> list:
    """Parameter lists: '2,3,7' or '1..10' or a single value."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            lo_i, hi_i = int(lo), int(hi)
        except ValueError:
            raise click.UsageError(f"range endpoints must be integers: {text!r}")
        if hi_i < lo_i:
            raise click.UsageError(f"empty range {text!r}")
        return list(range(lo_i, hi_i + 1))
    return [_parse_value(part) for part in text.split(",")]


def _load_curve(curve_text, label, family, t, offline, cache_dir):
    picked = [x for x in (curve_text, label, family) if x is not None]
    if len(picked) != 1:
        raise click.UsageError("give exactly one of --curve, --label, --family")
    if curve_text is not None:
        return parse_curve(curve_text)
    if label is not None:
        return as_curve(resolve_label(label, offline=offline, cache_dir=cache_dir))
    if t is None:
        raise click.UsageError(f"--family {family} needs --t")
    params = _parse_params(t)
    if len(params) != 1:
        raise click.UsageError("this command takes a single --t value")
    key = _FAMILY_PARAM.get(family, "t")
    return make_family(family, **{key: params[0]})


def _int_vector(text: str) -> list:
    c = parse_curve(text)  # reuse the strict parser for syntax and arity
    out = []
    for a in c.ainvs:
        if a.denominator != 1:
            raise InputError(f"integer coefficients required, got {a}")
        out.append(int(a))
    return out


def _md_table(headers, rows) -> str:
    lines = ["| " + " | ".join(headers) + " |"]
    lines.append("|" + "|".join("---" for _ in headers) + "|")
    for row in rows:
        lines.append("| " + " | ".join(str(x) for x in row) + " |")
    return "\n".join(lines)


def _csv(headers, rows) -> str:
    lines = [",".join(headers)]
    lines.extend(",".join(str(x) for x in row) for row in rows)
    return "\n".join(lines)


def _emit_json(payload: dict):
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


def _structure_str(pair) -> str:
    n1, n2 = pair
    if n2 == 1:
        return "trivial"
    if n1 == 1:
        return f"Z/{n2}"
    return f"Z/{n1} x Z/{n2}"


def guarded(fn):
    """Map library errors onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            code = fn(*args, **kwargs) or 0
        except click.ClickException:
            raise
        except ParseError as exc:
            pos = f" (position {exc.position})" if exc.position is not None else ""
            click.echo(f"error: {exc}{pos}", err=True)
            code = 2
        except InputError as exc:
            click.echo(f"error: {exc}", err=True)
            code = 2
        except (ResourceError, NetworkError, NotFoundError) as exc:
            click.echo(f"error: {exc}", err=True)
            code = 3
        except DataIntegrityError as exc:
            click.echo(f"error: {exc}", err=True)
            code = 1
        sys.exit(code)

    return wrapper


def _curve_options(fn):
    fn = click.option("--curve", "curve_text", default=None,
                      help="coefficients, e.g. \"[0,0,0,-12,-11]\"")(fn)
    fn = click.option("--label", default=None, help="curve label to resolve")(fn)
    fn = click.option("--family", default=None,
                      type=click.Choice(sorted(_FAMILY_PARAM)),
                      help="parametrized family name")(fn)
    fn = click.option("--t", default=None, help="family parameter")(fn)
    fn = click.option("--offline", is_flag=True, help="never touch the network")(fn)
    fn = click.option("--cache-dir", default=None, type=click.Path(),
                      help="curve cache directory")(fn)
    return fn


def _format_option(fn):
    return click.option("--format", "fmt", default="md",
                        type=click.Choice(["md", "csv", "json"]),
                        help="output format")(fn)


@click.group()
def main():
    """Orders of reductions of elliptic curves over Q."""


@main.command()
@_curve_options
@_format_option
@click.option("--max-prime", default=100, show_default=True,
              help="scan primes up to this bound")
@guarded
def count(curve_text, label, family, t, offline, cache_dir, fmt, max_prime):
    """Point counts of the reductions at primes up to the bound."""
    c = _load_curve(curve_text, label, family, t, offline, cache_dir)
    _checked_bound(max_prime)
    bad = bad_primes(c)
    rows = []
    for p in primes_in_range(2, max_prime):
        if p in bad:
            ld = local_data(c, p)
            rows.append((p, ld.rtype.value, ld.reduced_count, None))
        else:
            pc = count_points_fp(c, p)
            rows.append((p, "good", pc.count, pc.trace))
    if fmt == "json":
        _emit_json({
            "schema": "ellorders.count/1",
            "curve": [str(a) for a in c.ainvs],
            "max_prime": max_prime,
            "rows": [
                {"p": p, "reduction": r, "points": n, "trace": a}
                for p, r, n, a in rows
            ],
        })
        return
    shown = [(p, r, n, "" if a is None else a) for p, r, n, a in rows]
    if fmt == "csv":
        click.echo(_csv(["p", "reduction", "points", "trace"], shown))
    else:
        click.echo(_md_table(["p", "reduction", "points", "trace"], shown))


@main.command()
@_curve_options
@_format_option
@click.option("--max-prime", default=None, type=int,
              help="only bad primes up to this bound")
@guarded
def local(curve_text, label, family, t, offline, cache_dir, fmt, max_prime):
    """Reduction type and Kodaira data at the bad primes."""
    c = _load_curve(curve_text, label, family, t, offline, cache_dir)
    ps = sorted(bad_primes(c))
    if max_prime is not None:
        ps = [p for p in ps if p <= max_prime]
    data = [local_data(c, p) for p in ps]
    if fmt == "json":
        _emit_json({
            "schema": "ellorders.local/1",
            "curve": [str(a) for a in c.ainvs],
            "rows": [
                {
                    "p": ld.p,
                    "reduction": ld.rtype.value,
                    "kodaira": ld.kodaira.label,
                    "v_disc_min": ld.v_disc_min,
                    "points": ld.reduced_count,
                }
                for ld in data
            ],
        })
        return
    rows = [
        (ld.p, ld.rtype.value, ld.kodaira.label, ld.v_disc_min, ld.reduced_count)
        for ld in data
    ]
    headers = ["p", "reduction", "kodaira", "v_disc_min", "points"]
    click.echo(_csv(headers, rows) if fmt == "csv" else _md_table(headers, rows))


@main.command()
@_curve_options
@_format_option
@click.option("--d", "d", type=int, required=True, help="field is Q(sqrt d)")
@click.option("--max-prime", default=100, show_default=True,
              help="rational primes up to this bound")
@guarded
def extension(curve_text, label, family, t, offline, cache_dir, fmt, d, max_prime):
    """Residue-field orders over Q(sqrt d) at odd unramified good primes.

    A split prime contributes two places with the same order; the table
    shows it once.
    """
    c = _load_curve(curve_text, label, family, t, offline, cache_dir)
    _checked_bound(max_prime)
    rows = []
    for p in primes_in_range(3, max_prime):
        if d % p == 0:
            continue
        try:
            n = count_at_quadratic_prime(c, d, p)
        except (BadReductionError, UnsupportedPrimeError):
            continue
        kind = "split" if legendre(d % p, p) == 1 else "inert"
        rows.append((p, kind, n))
    if fmt == "json":
        _emit_json({
            "schema": "ellorders.extension/1",
            "curve": [str(a) for a in c.ainvs],
            "d": d,
            "max_prime": max_prime,
            "rows": [
                {"p": p, "splitting": k, "order": n} for p, k, n in rows
            ],
        })
        return
    headers = ["p", "splitting", "order"]
    click.echo(_csv(headers, rows) if fmt == "csv" else _md_table(headers, rows))


@main.command()
@_curve_options
@_format_option
@click.option("--d", "d", type=int, default=None,
              help="also report torsion data over Q(sqrt d)")
@click.option("--max-prime", default=300, show_default=True,
              help="reduction bound for the quadratic order estimate")
@guarded
def torsion(curve_text, label, family, t, offline, cache_dir, fmt, d, max_prime):
    """Rational torsion; with --d, torsion data over Q(sqrt d)."""
    c = _load_curve(curve_text, label, family, t, offline, cache_dir)
    grp = torsion_over_Q(c)
    quad = None
    if d is not None:
        _checked_bound(max_prime)
        quad = {
            "d": d,
            "odd_order": odd_torsion_over_quadratic(c, d),
            "order_bound": quadratic_torsion_bound(c, d, max_prime),
        }
    if fmt == "json":
        payload = {
            "schema": "ellorders.torsion/1",
            "curve": [str(a) for a in c.ainvs],
            "structure": [grp.n1, grp.n2],
            "order": grp.order,
            "generators": [[str(x), str(y)] for x, y in grp.generators],
        }
        if quad is not None:
            payload["quadratic"] = quad
        _emit_json(payload)
        return
    lines = [f"torsion over Q: {grp} (order {grp.order})"]
    for x, y in grp.generators:
        lines.append(f"generator: ({x}, {y})")
    if quad is not None:
        lines.append(f"odd torsion over Q(sqrt {d}): {quad['odd_order']}")
        lines.append(f"order bound over Q(sqrt {d}): {quad['order_bound']}")
    if fmt == "csv":
        click.echo(_csv(["key", "value"],
                        [ln.split(": ", 1) for ln in lines]))
    else:
        click.echo("\n".join(lines))


@main.command()
@_curve_options
@_format_option
@click.option("--d", "d", type=int, required=True, help="twisting integer")
@click.option("--max-prime", default=1000, show_default=True,
              help="check the paired count identity up to this bound")
@guarded
def twist(curve_text, label, family, t, offline, cache_dir, fmt, d, max_prime):
    """Quadratic twist model and the paired count identity.

    At odd good primes away from d the counts of the curve and its twist
    agree when d is a square mod p and sum to 2p+2 when it is not.
    """
    c = _load_curve(curve_text, label, family, t, offline, cache_dir)
    _checked_bound(max_prime)
    tw = quadratic_twist(c, d)
    skip = bad_primes(c) | bad_primes(tw)
    checked = 0
    violations = []
    for p in primes_in_range(3, max_prime):
        if p in skip or d % p == 0:
            continue
        n = count_points_fp(c, p).count
        n_tw = count_points_fp(tw, p).count
        checked += 1
        if legendre(d % p, p) == 1:
            ok = n == n_tw
        else:
            ok = n + n_tw == 2 * p + 2
        if not ok:
            violations.append((p, n, n_tw))
    if fmt == "json":
        _emit_json({
            "schema": "ellorders.twist/1",
            "curve": [str(a) for a in c.ainvs],
            "d": d,
            "twist": [str(a) for a in tw.ainvs],
            "max_prime": max_prime,
            "checked": checked,
            "violations": [
                {"p": p, "points": n, "twist_points": m}
                for p, n, m in violations
            ],
        })
    else:
        click.echo(f"twist by {d}: {render_curve(tw)}")
        click.echo(f"checked {checked} primes up to {max_prime}")
        if violations:
            headers = ["p", "points", "twist_points"]
            table = _csv(headers, violations) if fmt == "csv" \
                else _md_table(headers, violations)
            click.echo(table)
        else:
            click.echo("identity holds at every checked prime")
    return 1 if violations else 0


@main.command()
@_curve_options
@_format_option
@click.option("--mod", "m", type=int, required=True, help="count modulus")
@click.option("--class-mod", "n", type=int, required=True,
              help="prime-class modulus")
@click.option("--max-prime", default=1000, show_default=True)
@click.option("--threads", default=1, show_default=True)
@guarded
def survey(curve_text, label, family, t, offline, cache_dir, fmt, m, n,
           max_prime, threads):
    """Bucket point-count residues against prime classes."""
    c = _load_curve(curve_text, label, family, t, offline, cache_dir)
    _checked_bound(max_prime)
    table = congruence_survey(c, SurveySpec(m, n, max_prime), workers=threads)
    if fmt == "json":
        payload = json.loads(table.as_json())
        payload["schema"] = "ellorders.survey/1"
        _emit_json(payload)
    elif fmt == "csv":
        click.echo(table.as_csv(), nl=False)
    else:
        # one row per count residue, listing the prime classes that hit it
        by_t = {}
        hits = {}
        for s, tt, cnt in table.cells():
            by_t.setdefault(tt, set()).add(s)
            hits[tt] = hits.get(tt, 0) + cnt
        rows = [
            (tt, ", ".join(str(s) for s in sorted(by_t[tt])), hits[tt])
            for tt in sorted(by_t)
        ]
        click.echo(_md_table(
            [f"count mod {m}", f"p mod {n}", "primes"], rows))


@main.command()
@_curve_options
@_format_option
@click.option("--max-prime", default=1000, show_default=True)
@guarded
def gcd(curve_text, label, family, t, offline, cache_dir, fmt, max_prime):
    """gcd of reduction orders over all primes up to the bound."""
    c = _load_curve(curve_text, label, family, t, offline, cache_dir)
    _checked_bound(max_prime)
    g = gcd_orders(c, max_prime)
    if fmt == "json":
        _emit_json({
            "schema": "ellorders.gcd/1",
            "curve": [str(a) for a in c.ainvs],
            "max_prime": max_prime,
            "gcd": g,
        })
    elif fmt == "csv":
        click.echo(f"gcd\n{g}")
    else:
        click.echo(str(g))


@main.command(name="gcd-quadratic")
@_curve_options
@_format_option
@click.option("--d", "d", type=int, required=True, help="field is Q(sqrt d)")
@click.option("--max-prime", default=2000, show_default=True)
@guarded
def gcd_quadratic(curve_text, label, family, t, offline, cache_dir, fmt, d,
                  max_prime):
    """gcd of residue-field orders over Q(sqrt d)."""
    c = _load_curve(curve_text, label, family, t, offline, cache_dir)
    _checked_bound(max_prime)
    g = gcd_orders_quadratic(c, d, max_prime)
    if fmt == "json":
        _emit_json({
            "schema": "ellorders.gcd-quadratic/1",
            "curve": [str(a) for a in c.ainvs],
            "d": d,
            "max_prime": max_prime,
            "gcd": g,
        })
    elif fmt == "csv":
        click.echo(f"gcd\n{g}")
    else:
        click.echo(str(g))


@main.command()
@_curve_options
@_format_option
@click.option("--mod", "m", type=int, default=None,
              help="annotate primes with their class mod this")
@click.option("--max-prime", default=1000, show_default=True)
@guarded
def supersingular(curve_text, label, family, t, offline, cache_dir, fmt, m,
                  max_prime):
    """Good primes with trace zero."""
    c = _load_curve(curve_text, label, family, t, offline, cache_dir)
    _checked_bound(max_prime)
    found = scan_supersingular(c, max_prime, moduli=(m,) if m else ())
    if fmt == "json":
        _emit_json({
            "schema": "ellorders.supersingular/1",
            "curve": [str(a) for a in c.ainvs],
            "max_prime": max_prime,
            "mod": m,
            "primes": [
                {"p": p, "residue": res[0] if res else None}
                for p, res in found
            ],
        })
        return
    if m:
        headers = ["p", f"p mod {m}"]
        rows = [(p, res[0]) for p, res in found]
    else:
        headers = ["p"]
        rows = [(p,) for p, _ in found]
    click.echo(_csv(headers, rows) if fmt == "csv" else _md_table(headers, rows))


@main.command()
@_curve_options
@_format_option
@click.option("--mod", "m", type=int, default=None,
              help="annotate primes with their class mod this")
@click.option("--max-prime", default=1000, show_default=True)
@guarded
def anomalous(curve_text, label, family, t, offline, cache_dir, fmt, m,
              max_prime):
    """Good primes dividing their own point count."""
    c = _load_curve(curve_text, label, family, t, offline, cache_dir)
    _checked_bound(max_prime)
    found = scan_anomalous(c, max_prime, modulus=m or 1)
    if fmt == "json":
        _emit_json({
            "schema": "ellorders.anomalous/1",
            "curve": [str(a) for a in c.ainvs],
            "max_prime": max_prime,
            "mod": m,
            "primes": [
                {"p": p, "residue": res if m else None} for p, res in found
            ],
        })
        return
    if m:
        headers = ["p", f"p mod {m}"]
        rows = found
    else:
        headers = ["p"]
        rows = [(p,) for p, _ in found]
    click.echo(_csv(headers, rows) if fmt == "csv" else _md_table(headers, rows))


@main.command()
@_format_option
@click.option("--family", "family", required=True,
              type=click.Choice(["family3", "family5", "kkp"]))
@click.option("--t", "t", required=True,
              help="parameter values: '2,3,7' or '1..10'")
@click.option("--max-prime", default=5000, show_default=True)
@guarded
def family(fmt, family, t, max_prime):
    """Check a family's count-divisibility claim over its parameters."""
    _checked_bound(max_prime)
    params = _parse_params(t)
    report = verify_family(family, params, max_prime)
    if fmt == "json":
        _emit_json({
            "schema": "ellorders.family/1",
            "family": family,
            "params": [str(v) for v in params],
            "max_prime": max_prime,
            "passed": report.passed,
            "checked": report.total,
            "violations": [
                {"p": v.p, "points": v.count, "residue": v.observed,
                 "context": v.context}
                for v in report.violations
            ],
        })
    else:
        click.echo(f"{family} at t={t}: checked {report.total} prime/parameter "
                   f"pairs up to {max_prime}")
        if report.passed:
            click.echo("divisibility holds everywhere")
        else:
            headers = ["p", "points", "residue", "context"]
            rows = [(v.p, v.count, v.observed, v.context)
                    for v in report.violations]
            click.echo(_csv(headers, rows) if fmt == "csv"
                       else _md_table(headers, rows))
    return 0 if report.passed else 1


@main.command(name="kubert-check")
@_format_option
@click.option("--curve", "curve_text", required=True,
              help="integer coefficients")
@click.option("--t", "t", required=True, type=int,
              help="candidate x-coordinate")
@click.option("--mod", "p", required=True, type=int,
              help="odd prime order to test")
@guarded
def kubert_check(fmt, curve_text, t, p):
    """Test a candidate x-coordinate for a point of odd prime order mod p."""
    vec = _int_vector(curve_text)
    verdict = check_kubert_conditions(vec, t, p)
    if fmt == "json":
        _emit_json({
            "schema": "ellorders.kubert-check/1",
            "curve": [str(a) for a in vec],
            "x": t,
            "order": p,
            "accepted": verdict.accepted,
            "reason": verdict.reason,
            "psi_value": verdict.psi_value,
            "count": verdict.count,
        })
    else:
        click.echo(f"accepted: {'yes' if verdict.accepted else 'no'}")
        if verdict.reason:
            click.echo(f"reason: {verdict.reason}")
        if verdict.psi_value is not None:
            click.echo(f"division value: {verdict.psi_value}")
        if verdict.count is not None:
            click.echo(f"points: {verdict.count}")
    return 0 if verdict.accepted else 1


@main.command()
@_format_option
@click.option("--label", required=True)
@click.option("--offline", is_flag=True, help="never touch the network")
@click.option("--cache-dir", default=None, type=click.Path())
@guarded
def resolve(fmt, label, offline, cache_dir):
    """Resolve a curve label to coefficients via the cache or resolver."""
    rec = resolve_label(label, offline=offline, cache_dir=cache_dir)
    c = as_curve(rec)
    if fmt == "json":
        _emit_json({
            "schema": "ellorders.resolve/1",
            "label": rec.label,
            "curve": [str(a) for a in rec.a_invariants],
            "source": rec.source,
            "notes": list(rec.notes),
        })
        return
    lines = [f"label: {rec.label}",
             f"curve: {render_curve(c)}",
             f"source: {rec.source}"]
    lines.extend(f"note: {note}" for note in rec.notes)
    if fmt == "csv":
        click.echo(_csv(["key", "value"],
                        [ln.split(": ", 1) for ln in lines]))
    else:
        click.echo("\n".join(lines))


# quadratic order bound horizon for the corpus torsion columns
_CORPUS_BOUND_PRIME = 300


def _corpus_rows(X, offline, cache_dir, threads):
    out = []
    for rec in bundled_corpus():
        if not rec.needs_resolution:
            continue
        resolved = resolve_label(rec.label, offline=offline, cache_dir=cache_dir)
        c = as_curve(resolved)
        exp = rec.expected
        table = congruence_survey(
            c, SurveySpec(exp.table.m, exp.table.N, X), workers=threads)
        rep = verify_expected(table, exp.table)
        violations = [
            Violation(v.p, v.count, v.observed, v.allowed,
                      f"{rec.label}: {v.context}")
            for v in rep.violations
        ]
        tq = torsion_over_Q(c).structure
        n1, n2 = exp.torsion_K
        m_k = n1 * n2
        odd_claim = m_k // (m_k & -m_k)
        odd_got = odd_torsion_over_quadratic(c, exp.d)
        bound = quadratic_torsion_bound(c, exp.d, _CORPUS_BOUND_PRIME)
        torsion_failures = []
        if tq != exp.torsion_Q:
            torsion_failures.append(
                f"rational torsion {_structure_str(tq)}, "
                f"expected {_structure_str(exp.torsion_Q)}")
        if odd_got != odd_claim:
            torsion_failures.append(
                f"odd torsion over Q(sqrt {exp.d}) is {odd_got}, "
                f"expected {odd_claim}")
        if bound % m_k:
            torsion_failures.append(
                f"order bound {bound} over Q(sqrt {exp.d}) not divisible "
                f"by {m_k}")
        violations.extend(
            Violation(0, 0, 0, frozenset(), f"{rec.label}: {msg}")
            for msg in torsion_failures
        )
        out.append({
            "label": rec.label,
            "d": exp.d,
            "m": exp.table.m,
            "N": exp.table.N,
            "torsion_q": _structure_str(exp.torsion_Q),
            "torsion_k": _structure_str(exp.torsion_K),
            "primes": table.total,
            "rows_ok": rep.passed,
            "torsion_ok": not torsion_failures,
            "matched": rep.matched,
            "violations": tuple(violations),
        })
    return out


def corpus_verify(X: int, *, offline: bool = False, cache_dir=None,
                  threads: int = 1) -> ScanReport:
    """Verify every bundled survey row plus its torsion columns."""
    rows = _corpus_rows(X, offline, cache_dir, threads)
    violations = tuple(v for r in rows for v in r["violations"])
    matched = tuple(p for r in rows for p in r["matched"])
    notes = tuple(
        f"{r['label']}: {r['primes']} primes, "
        f"rows {'ok' if r['rows_ok'] else 'FAIL'}, "
        f"torsion {'ok' if r['torsion_ok'] else 'FAIL'}"
        for r in rows
    )
    return ScanReport(
        passed=not violations,
        matched=matched,
        violations=violations,
        densities={},
        total=sum(r["primes"] for r in rows),
        notes=notes,
    )


@main.command(name="corpus-verify")
@_format_option
@click.option("--max-prime", default=10000, show_default=True)
@click.option("--offline", is_flag=True, help="never touch the network")
@click.option("--cache-dir", default=None, type=click.Path())
@click.option("--threads", default=1, show_default=True)
@guarded
def corpus_verify_cmd(fmt, max_prime, offline, cache_dir, threads):
    """Verify every bundled survey row and its torsion columns."""
    _checked_bound(max_prime)
    rows = _corpus_rows(max_prime, offline, cache_dir, threads)
    passed = all(r["rows_ok"] and r["torsion_ok"] for r in rows)
    if fmt == "json":
        _emit_json({
            "schema": "ellorders.corpus-verify/1",
            "max_prime": max_prime,
            "passed": passed,
            "rows": [
                {
                    "label": r["label"],
                    "d": r["d"],
                    "torsion_q": r["torsion_q"],
                    "torsion_k": r["torsion_k"],
                    "primes": r["primes"],
                    "rows_ok": r["rows_ok"],
                    "torsion_ok": r["torsion_ok"],
                    "violations": [
                        {"p": v.p, "points": v.count, "residue": v.observed,
                         "allowed": sorted(v.allowed), "context": v.context}
                        for v in r["violations"]
                    ],
                }
                for r in rows
            ],
        })
        return 0 if passed else 1
    headers = ["label", "torsion Q", "torsion K", "d", "primes", "rows",
               "torsion"]
    shown = [
        (r["label"], r["torsion_q"], r["torsion_k"], r["d"], r["primes"],
         "ok" if r["rows_ok"] else "FAIL",
         "ok" if r["torsion_ok"] else "FAIL")
        for r in rows
    ]
    click.echo(_csv(headers, shown) if fmt == "csv"
               else _md_table(headers, shown))
    bad = [v for r in rows for v in r["violations"]]
    if bad:
        click.echo("")
        vh = ["p", "points", "residue", "allowed", "context"]
        vt = [
            (v.p, v.count, v.observed,
             " ".join(str(x) for x in sorted(v.allowed)), v.context)
            for v in bad
        ]
        click.echo(_csv(vh, vt) if fmt == "csv" else _md_table(vh, vt))
        return 1
    click.echo("")
    click.echo(f"all {len(rows)} rows verified up to {max_prime}")
    return 0


if __name__ == "__main__":
    main()
