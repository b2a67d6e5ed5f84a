import numpy as np
import pytest

from genrf.simulate import gen_genotypes


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


def make_dataset(seed, n=20, p=5, q=1, maf=0.3, rho=0.3, signal=0.0):
    """Random genotypes, design with intercept and a normal trait."""
    r = np.random.default_rng(seed)
    g = gen_genotypes(n, p, maf, rho, r)
    x = np.column_stack([np.ones(n), r.standard_normal((n, q - 1))])
    y = x @ r.standard_normal(q) + signal * g[:, 0] + r.standard_normal(n)
    return g, x, y


@pytest.fixture
def dataset():
    return make_dataset(5, n=20, p=5)


#: criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
