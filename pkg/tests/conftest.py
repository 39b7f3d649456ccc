import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kahlerstar.jets import TruncatedJet, pack
from kahlerstar.rings import QQi


@pytest.fixture
def rng():
    return random.Random(20240611)


def jet(terms: dict, order: int, n: int = 1) -> TruncatedJet:
    """Jet from ``{exponents: value}``; values may be ints or strings like ``"1/2"``."""
    return TruncatedJet(2 * n, order, {pack(tuple(k)): QQi.parse(str(v)) for k, v in terms.items()})


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.line(num))
