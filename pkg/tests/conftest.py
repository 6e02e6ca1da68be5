"""Shared pytest wiring: prints one line per release criterion at the end."""

import re

CRITERIA = {
    1: "contrastive loss matches the brute-force reference",
    2: "network and band-PSD gradients match finite differences",
    3: "dual HR training beats 3.0 bpm MAE and CHROM on the noisy camera",
    4: "dual RR training beats 2.0 bpm MAE and the flow-mean baseline under shake",
    5: "temporal resampling scales the dominant frequency by L/T",
    6: "loss pushes positive-pair distances down and negatives up",
    7: "frozen-anchor and shared-weight contracts hold, pretraining helps",
    8: "parameter count, output lengths, rate grid, round trips, determinism",
}

_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            m = _PATTERN.search(getattr(report, "nodeid", ""))
            if m:
                n = int(m.group(1))
                ok = status == "passed" and outcomes.get(n, True)
                outcomes[n] = ok
    if not outcomes:
        return
    terminalreporter.section("release criteria")
    for n in sorted(CRITERIA):
        if n in outcomes:
            verdict = "PASS" if outcomes[n] else "FAIL"
        else:
            verdict = "NOT RUN"
        terminalreporter.write_line(f"CRITERION {n}: {verdict} - {CRITERIA[n]}")
