import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qdiv.channels import channel_from_kraus

settings.register_profile(
    "qdiv",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("qdiv")


def random_channel(d_in, d_out, kraus_rank, seed):
    """CPTP map from a Haar-like random isometry C^d_in -> C^(d_out * rank)."""
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(d_out * kraus_rank, d_in)) + 1j * rng.normal(size=(d_out * kraus_rank, d_in))
    V, _ = np.linalg.qr(G)
    return channel_from_kraus(V.reshape(kraus_rank, d_out, d_in), name="random")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance summary ------------------------------------------------------------

ACCEPTANCE_LINES: dict = {}


def record_acceptance(number: int, ok: bool, detail: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
