import json
from pathlib import Path

import numpy as np
import pytest

from matgcd.matpoly import FactorizationTriple, MatPoly, PolyPair

FIXTURES = Path(__file__).parent / "fixtures"

# factor and cofactors of the worked 2x2 degree-2 example
WORKED_C = MatPoly.from_entries([[[1, 1], [-1]], [[1], [1, 1]]])
WORKED_ABAR = MatPoly.from_entries([[[1, 1], [0, -1]], [[3, -1], [-1]]])
WORKED_BBAR = MatPoly.from_entries([[[1], [-1, -1]], [[-1, 3], [0, -1]]])


@pytest.fixture
def worked_pair():
    data = json.loads((FIXTURES / "worked_exact.json").read_text())
    return PolyPair(MatPoly.from_dict(data["a"]), MatPoly.from_dict(data["b"]))


@pytest.fixture
def worked_triple():
    return FactorizationTriple(WORKED_C, WORKED_ABAR, WORKED_BBAR)


@pytest.fixture
def coprime_pair():
    data = json.loads((FIXTURES / "coprime.json").read_text())
    return PolyPair(MatPoly.from_dict(data["a"]), MatPoly.from_dict(data["b"]))


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def scalar(*coeffs):
    """Scalar polynomial from ascending coefficients."""
    return MatPoly(np.asarray(coeffs, dtype=float))


def from_roots(roots, lead=1.0):
    return scalar(*(lead * np.poly(roots)[::-1]))
