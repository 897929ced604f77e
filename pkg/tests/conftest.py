"""Folds the acceptance tests into one terminal line per criterion.

Functions in test_acceptance.py are named test_a<N>_*; every criterion
gets exactly one PASS/FAIL verdict in the summary, aggregated over its
test functions (any failure — including a fixture error — marks the
criterion FAIL).
"""

import re

_CRITERIA = {
    "a1": "exact recovery rates, gaussian 256/128/8, 100 trials per algorithm",
    "a2": "noise stability: median error-to-noise ratio within ceiling, errors finite",
    "a3": "cosamp iteration counts within the logarithmic budget",
    "a4": "compressible decay: medians fall with s, negative slope, linear in R",
    "a5": "regularized window equals exhaustive subset search on 1000 instances",
    "a6": "iterative restricted least squares matches the dense Cholesky oracle",
    "a7": "per-iteration structural invariants hold on every logged trial",
    "a8": "isometry probe: identity floor, gaussian ceiling, witness replay",
    "a9": "repeat runs emit byte-identical CSV and JSON",
}

_PATTERN = re.compile(r"test_acceptance\.py::test_(a[1-9])_")
_outcomes = {}


def pytest_runtest_logreport(report):
    match = _PATTERN.search(report.nodeid)
    if match is None:
        return
    key = match.group(1)
    if report.failed:
        _outcomes[key] = "FAIL"
    elif report.skipped:
        _outcomes.setdefault(key, "SKIP")
    elif report.when == "call":
        _outcomes.setdefault(key, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        verdict = _outcomes.get(key, "NOT RUN")
        terminalreporter.write_line(f"{key.upper()} {verdict} — {_CRITERIA[key]}")
