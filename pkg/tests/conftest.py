import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spinhom import projector as pj
from spinhom.complexes import Window


@pytest.fixture(scope="session")
def w8() -> Window:
    return Window(-8, 0)


@pytest.fixture(scope="session")
def p2_w8(w8):
    return pj.p2(w8)


@pytest.fixture(scope="session")
def p3_w8(w8):
    return pj.build_projector(3, w8)
