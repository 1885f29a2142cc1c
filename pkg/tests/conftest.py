import numpy as np
import pytest

from raduls.records import RecordLayout

LAYOUTS = [
    RecordLayout(rs, ks)
    for rs in (8, 16, 24, 32)
    for ks in (8, 16)
    if ks <= rs
]

_acceptance_lines = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_records(rng, n, layout, key_alphabet=256):
    """Random records; ``key_alphabet`` < 256 forces duplicate key bytes."""
    out = rng.integers(0, 256, size=(n, layout.record_size), dtype=np.uint8)
    if key_alphabet < 256:
        out[:, :layout.key_size] = rng.integers(0, key_alphabet, size=(n, layout.key_size))
    return out


@pytest.fixture
def acceptance_report():
    return _acceptance_lines.append


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
