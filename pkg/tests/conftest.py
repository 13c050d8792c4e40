import pathlib

import pytest

from aubincheck.problemfile import load_problem

FIXTURE_DIR = pathlib.Path(__file__).resolve().parent.parent / "fixtures"

FIXTURE_NAMES = (
    "trust_region",
    "bilinear_ball",
    "cubic_pitchfork",
    "quartic_cuberoot",
    "circle_boundary",
    "moving_plane",
    "product_constraint",
    "halfline_quadratic",
    "halfline_bilinear",
)

# Fixtures within the probe's dimensional capability (n <= 2, d <= 2).
PROBEABLE = tuple(n for n in FIXTURE_NAMES if n != "trust_region")


def fixture_path(name: str) -> str:
    return str(FIXTURE_DIR / f"{name}.prob")


@pytest.fixture(scope="session")
def problems():
    return {name: load_problem(fixture_path(name)) for name in FIXTURE_NAMES}
