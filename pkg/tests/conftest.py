import numpy as np
import pytest
from scipy.special import expit

from twodsel import DataSet, FactorModel, ResponseFamily

# acceptance criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def random_data(rng, family="bernoulli", n=40, s=4, t=3, r=2, scale=0.5):
    """Small random data set of the given family with a rank-``r`` truth."""
    X = rng.standard_normal((n, s, t))
    B = scale * rng.standard_normal((s, r)) @ rng.standard_normal((r, t))
    eta = np.tensordot(X, B, axes=([1, 2], [0, 1]))
    if family == "bernoulli":
        y = (rng.random(n) < expit(eta)).astype(float)
        fam = ResponseFamily.bernoulli()
    elif family == "binomial":
        trials = rng.integers(1, 6, size=n)
        y = rng.binomial(trials, expit(eta)).astype(float)
        fam = ResponseFamily.binomial(trials)
    else:
        y = eta + rng.standard_normal(n)
        fam = ResponseFamily.normal(sigma=rng.uniform(0.5, 2.0))
    return DataSet(X, y, fam)


def random_model(rng, s, t, r, scale=0.5):
    return FactorModel(scale * rng.standard_normal((s, r)), scale * rng.standard_normal((r, t)),
                       scale * rng.standard_normal())


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
