"""Resolve a catalog curve, survey its point counts, check the stored row."""

from ellorders.catalog import as_curve, resolve_label
from ellorders.survey import SurveySpec, congruence_survey, empirical_density, verify_expected

LABEL = "50a3"
X = 10**4

rec = resolve_label(LABEL, offline=True)
c = as_curve(rec)
print(f"{LABEL} = {[str(a) for a in c.ainvs]}")

exp = rec.expected.table
table = congruence_survey(c, SurveySpec(exp.m, exp.N, X))
print(f"counts mod {exp.m} bucketed by p mod {exp.N}, primes to {X}:")
print(table.as_markdown())

report = verify_expected(table, exp)
print(f"matches stored row: {report.passed} ({len(report.matched)} primes)")

# how often each residue class of p actually shows up
for s in sorted(table.rows):
    for t in sorted(table.rows[s]):
        frac, dec = empirical_density(table, s, t)
        print(f"  p={s} (mod {exp.N}), N_p={t} (mod {exp.m}): {frac} ~ {dec:.3f}")
