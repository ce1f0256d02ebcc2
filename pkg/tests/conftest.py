import numpy as np
import pytest


def separable_toy(n=100, seed=0, side=8):
    """Two classes of noisy images that differ in mean brightness."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    base = np.where(labels == 1, 170.0, 85.0)[:, None, None, None]
    images = base + rng.normal(0, 20, (n, side, side, 1))
    return np.clip(np.rint(images), 0, 255).astype(np.uint8), labels


@pytest.fixture
def toy():
    return separable_toy()


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", "call") != "call" and outcome != "error":
                continue
            crit = dict(rep.user_properties).get("criterion")
            if crit is not None:
                lines.append((crit, "PASS" if outcome == "passed" else "FAIL", rep.nodeid))
    if lines:
        terminalreporter.section("acceptance criteria")
        for crit, verdict, nodeid in sorted(lines):
            terminalreporter.write_line(f"criterion {crit}: {verdict}  ({nodeid})")
