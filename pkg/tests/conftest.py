import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from wsspline.geometry import Triangle

FIXTURES = Path(__file__).parent / "fixtures"


def area2(V) -> float:
    """Twice the signed area of a vertex triple."""
    (x0, y0), (x1, y1), (x2, y2) = V
    return (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)


def random_triangle(rng, min_area=1e-3) -> Triangle:
    while True:
        V = rng.uniform(-2, 2, size=(3, 2))
        if 0.5 * abs(area2(V)) > min_area:
            return Triangle(V)


def random_points(tri: Triangle, rng, n) -> np.ndarray:
    return rng.dirichlet([1, 1, 1], n) @ tri.vertices


def load_tables():
    """Hermite tables as exact fractions: (B rows, Bt rows, extra rows), rows indexed by basis."""
    d = json.loads((FIXTURES / "hermite_tables.json").read_text())
    main = d["rho1_28"]
    frac = lambda xs: [Fraction(x) for x in xs]
    B = [frac(main[f"B{i}"]) for i in range(1, 29)]
    Bt = [frac(main.get(f"Bt{i}", main[f"B{i}"])) for i in range(1, 29)]
    extra = [frac(d["rho29_34"][f"Bt{i}"]) for i in range(1, 29)]
    return B, Bt, extra


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def unit_triangle():
    return Triangle(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))


# acceptance report: one line per criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    def add(n: int, ok: bool, text: str):
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
