import warnings

import pytest

from kitaevlab.canon import equilibrium_correlations, svd_canonical
from kitaevlab.model import ModelParams, build_b_matrix, make_sector

ACCEPTANCE_LINES: list[str] = []


def ground(params: ModelParams, sector=None):
    """(canonical form, correlations, sector) of a sector vacuum."""
    if sector is None:
        sector = make_sector("homogeneous-plus", params.L)
    elif isinstance(sector, str):
        sector = make_sector(sector, params.L)
    cf = svd_canonical(build_b_matrix(params, sector))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        corr = equilibrium_correlations(cf)
    return cf, corr, sector


@pytest.fixture
def record_acceptance():
    def record(number: int, passed: bool, detail: str):
        line = f"ACCEPTANCE {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
