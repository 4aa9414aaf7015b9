import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from induced_brw.brw_engine import OffspringLaw, persistence_probability
from induced_brw.product_lab import (
    FreeProductSpec,
    ProductSpec,
    fiber_subgraph,
    free_product_thresholds,
    parse_group,
    product_dp_crosscheck,
    product_return_series,
    product_spectral_summary,
    transient_window,
    tree_phi,
)
from induced_brw.spectral_lab import radius_from_log_diag, zeta_estimate

# frozen closed forms for the (3, 100) product with weights 3/103 and 100/103
PHI1 = 2 * math.sqrt(2) / 3
PHI2 = 2 * math.sqrt(99) / 100
INV_RHO_G = 103 / (2 * math.sqrt(2) + 2 * math.sqrt(99))
REC2 = 103**2 / (200 * math.sqrt(99))


# -- closed forms -----------------------------------------------------------------


def test_closed_forms(product):
    spec, P, U = product
    s = product_spectral_summary(spec)
    assert s.phi[0] == pytest.approx(PHI1, abs=1e-12)
    assert s.phi[1] == pytest.approx(PHI2, abs=1e-12)
    assert s.m1[1] == pytest.approx(1.03, abs=1e-12)
    assert s.inv_rho_G == pytest.approx(INV_RHO_G, abs=1e-12)
    assert 4.4 < s.inv_rho_G < 4.6
    assert s.recurrence_mean[1] == pytest.approx(REC2, abs=1e-9)
    assert 5.3 < REC2 < 5.4


def test_symmetric_product():
    s = product_spectral_summary(ProductSpec(4, 4, 0.5))
    assert s.m1 == pytest.approx((2.0, 2.0))
    assert s.rho_G == pytest.approx(tree_phi(4))
    assert s.rho_U[0] == pytest.approx(s.rho_U[1])


def test_spec_validation():
    with pytest.raises(ValueError):
        ProductSpec(1, 3, 0.5)
    with pytest.raises(ValueError):
        ProductSpec(3, 3, 0.4, 0.4)
    with pytest.raises(ValueError):
        ProductSpec(3, 3, 0.5, fiber=3)


@given(st.integers(2, 200), st.integers(2, 200), st.floats(0.01, 0.99))
def test_rho_G_bounds(d1, d2, a):
    s = product_spectral_summary(ProductSpec(d1, d2, a))
    assert max(s.rho_U) <= s.rho_G * (1 + 1e-12)
    assert s.rho_G <= 1 + 1e-12
    for i in (0, 1):
        assert s.rho_U[i] <= s.phi[i] * (1 + 1e-12)
        assert s.m1[i] == pytest.approx(s.phi[i] / s.rho_U[i])


# -- transient windows ---------------------------------------------------------


def test_transient_window_fibers(product):
    spec, P, U = product
    w2 = transient_window(spec, 2)
    assert not w2.empty
    assert 2.0 in w2 and 1.03 not in w2 and 6.0 not in w2
    assert transient_window(spec, 1).empty


def test_transient_window_symmetric():
    w = transient_window(ProductSpec(3, 3, 0.5))
    # 1 / rho_G = 3 / (2 sqrt 2) < 2 = m1
    assert w.empty and w.upper == pytest.approx(3 / (2 * math.sqrt(2)))


# -- DP cross-check ----------------------------------------------------------------


@pytest.mark.parametrize("dims", [(3, 100, 3 / 103), (4, 4, 0.5)])
def test_dp_crosscheck(dims):
    spec = ProductSpec(*dims)
    dp = product_dp_crosscheck(spec, 2000)
    assert dp["rel_err_rho_G"] < 0.02
    for f in dp["fibers"]:
        assert f["rel_err_rho_U"] < 0.02
        assert f["rel_err_phi_U"] < 0.02
        assert f["abs_err_zeta"] < 1e-9


def test_fiber_zeta_is_alpha(product):
    spec, P, U = product
    for i, a in zip((1, 2), spec.alphas):
        V = fiber_subgraph(spec, i)
        assert zeta_estimate(P, V, V.base_vertex, 300).value == pytest.approx(a, abs=1e-9)


def test_return_series_is_normalised():
    spec = ProductSpec(3, 4, 0.4)
    logs = product_return_series(spec, 40)
    assert logs[0] == 0.0
    assert np.all(np.isneginf(logs[1::2]))
    assert np.all(np.exp(logs) <= 1.0 + 1e-12)
    est = radius_from_log_diag(product_return_series(spec, 1500)).value
    assert abs(est - product_spectral_summary(spec).rho_G) / est < 0.02


# -- free products -------------------------------------------------------------------


def test_parse_group():
    assert parse_group("cyclic:3").order == 3
    assert parse_group("free:2").rank == 2
    for bad in ("cyclic:x", "torus:2"):
        with pytest.raises(ValueError):
            parse_group(bad)


words = st.lists(st.tuples(st.sampled_from([1, 2]), st.integers(0, 3)), max_size=12)


@given(words)
def test_free_product_generator_then_inverse(moves):
    G = FreeProductSpec("cyclic:3", "free:2", 0.4).group()
    w = ()
    for factor, k in moves:
        gens = G.factors[factor - 1].generators
        w = G.step(w, factor, gens[k % len(gens)])
    G.validate(w)
    for factor in (1, 2):
        for g in G.factors[factor - 1].generators:
            back = G.step(G.step(w, factor, g), factor, G.factors[factor - 1].inv(g))
            assert back == w
    assert G.mul(w, G.inv(w)) == ()


def test_free_product_thresholds(freeprod):
    spec, P, U = freeprod
    th = free_product_thresholds(spec)
    assert th.zeta == pytest.approx(0.7)
    assert th.m1 == pytest.approx(10 / 7) and th.m0 == th.m1
    assert th.zeta_error < 1e-9


def test_free_product_small_alpha_limit():
    m1 = [free_product_thresholds(FreeProductSpec("cyclic:2", "free:2", a), 40).m1 for a in (0.1, 0.01, 0.001)]
    assert np.all(np.diff(m1) < 0)
    assert m1[-1] == pytest.approx(1.0, abs=2e-3)


def test_free_product_simulation(freeprod):
    spec, P, U = freeprod
    a2 = spec.alpha2
    hi = persistence_probability(P, U, OffspringLaw.geometric(1.2 / a2), U.base_vertex, 150, 1e5, 2000, 61)
    lo = persistence_probability(P, U, OffspringLaw.geometric(0.9 / a2), U.base_vertex, 150, 1e5, 2000, 62)
    assert hi.ci_low > 0
    assert lo.ci_high < 0.01
