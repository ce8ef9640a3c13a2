import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from prandtl_lab.tridiag import solve_tridiag, tridiag_matvec

import oracles


def test_matches_banded_lapack():
    rng = np.random.default_rng(3)
    n = 200
    a, c = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)
    b = 3.0 + rng.uniform(0, 1, n)
    d = rng.normal(size=n)
    assert np.allclose(solve_tridiag(a, b, c, d), oracles.thomas_oracle(a, b, c, d), atol=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=2, max_value=60).flatmap(
    lambda n: st.tuples(*(arrays(np.float64, n, elements=st.floats(-1, 1)) for _ in range(4)))))
def test_inverse_of_matvec(arrs):
    a, c, x, off = arrs
    b = 2.5 + np.abs(off)  # strictly diagonally dominant
    d = tridiag_matvec(a, b, c, x)
    assert np.allclose(solve_tridiag(a, b, c, d), x, atol=1e-10)


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        solve_tridiag(np.zeros(3), np.ones(4), np.zeros(4), np.ones(4))
