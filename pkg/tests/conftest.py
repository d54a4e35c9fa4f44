import pytest

from rudetox.data_io import LabeledCorpus, StyleLabel
from rudetox.synth import SyntheticWorld

T, N = StyleLabel.TOXIC, StyleLabel.NEUTRAL


def corpus(*pairs):
    return LabeledCorpus(tuple((text, StyleLabel(label)) for text, label in pairs))


@pytest.fixture(scope="session")
def world():
    return SyntheticWorld.create(seed=7)


@pytest.fixture(scope="session")
def synthetic_corpus(world):
    return world.corpus(300, 600, seed=8)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record a criterion verdict for the terminal summary, then assert it."""

    def check(number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
