import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats

from rrdoe._special import betainc, norm_ppf, t_two_sided_p


@given(a=st.floats(0.05, 200), b=st.floats(0.05, 200), x=st.floats(0, 1))
@settings(max_examples=300)
def test_betainc_matches_scipy(a, b, x):
    assert betainc(a, b, x) == pytest.approx(special.betainc(a, b, x), rel=1e-9, abs=1e-13)


@pytest.mark.parametrize("a,b,x", [(0.5, 0.5, 0.3), (10, 2.5, 0.8), (40, 0.5, 0.99)])
def test_betainc_matches_mpmath(a, b, x):
    ref = float(mpmath.betainc(a, b, 0, x, regularized=True))
    assert betainc(a, b, x) == pytest.approx(ref, rel=1e-11)


@pytest.mark.parametrize("df", [1, 2, 5, 39, 91, 1000])
@pytest.mark.parametrize("t", [0.0, 0.3, -1.7, 2.0, 8.5])
def test_t_pvalue(t, df):
    assert t_two_sided_p(t, df) == pytest.approx(2 * stats.t.sf(abs(t), df), rel=1e-9)


def test_norm_ppf_center_and_quartile():
    assert norm_ppf(0.5) == 0.0
    assert norm_ppf(0.25) == pytest.approx(-0.6744897501960817, abs=1e-12)


@pytest.mark.parametrize("p", np.concatenate([np.logspace(-12, -1, 25), np.linspace(0.01, 0.99, 99)]))
def test_norm_ppf_accuracy(p):
    assert abs(norm_ppf(p) - special.ndtri(p)) < 1e-8 * max(1.0, abs(special.ndtri(p)))
    assert norm_ppf(1 - p) == pytest.approx(special.ndtri(1 - p), abs=1e-8)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, math.nan])
def test_norm_ppf_domain(p):
    with pytest.raises(ValueError):
        norm_ppf(p)
