import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import enumerate_paths
from induced_brw.kernel_core import HomogeneousTree, SubgraphSpec, normalize_kernel, restrict_kernel, whole_graph
from induced_brw.product_lab import ProductSpec, fiber_subgraph, product_return_series
from induced_brw.spectral_lab import (
    PeriodError,
    TransitivityError,
    detect_period,
    diag_series,
    diagonal_table,
    green_partial,
    kernel_identity_check,
    radius_from_log_diag,
    spectral_radius_estimate,
    spectral_summary,
    stay_prob,
    uniform_stay_mass,
    zeta_estimate,
)

PHI3 = 2 * math.sqrt(2) / 3
PHI100 = 2 * math.sqrt(99) / 100


def test_tree3_radius_depth_2000(tree3):
    est = spectral_radius_estimate(tree3.kernel(), (), 2000)
    assert est.period == 2
    assert abs(est.value - PHI3) / PHI3 < 0.02


def test_tree100_radius():
    est = spectral_radius_estimate(HomogeneousTree(100).kernel(), (), 1000)
    assert abs(est.value - PHI100) / PHI100 < 0.02


def test_fiber_radius(product):
    spec, P, U = product
    est = spectral_radius_estimate(restrict_kernel(P, U), U.base_vertex, 1000)
    target = 2 * math.sqrt(99) / 103
    assert abs(est.value - target) / target < 0.02


def test_stay_prob_power_law(product):
    spec, P, U = product
    for N in (1, 7, 40):
        assert stay_prob(P, U, U.base_vertex, N) == pytest.approx((100 / 103) ** N, rel=1e-12)


def test_stay_prob_whole_graph(tree3):
    P = tree3.kernel()
    assert stay_prob(P, whole_graph(P), (), 25) == pytest.approx(1.0, abs=1e-12)


def test_free_product_stay_prob(freeprod):
    spec, P, U = freeprod
    for N in (1, 5, 20):
        assert stay_prob(P, U, U.base_vertex, N) == pytest.approx(0.7**N, rel=1e-12)


def test_zeta_fiber_exact(product):
    spec, P, U = product
    assert zeta_estimate(P, U, U.base_vertex, 400).value == pytest.approx(100 / 103, abs=1e-9)


def test_zeta_whole_graph(tree3):
    P = tree3.kernel()
    assert zeta_estimate(P, whole_graph(P), (), 200).value == pytest.approx(1.0, abs=1e-12)


def test_zeta_free_product(freeprod):
    spec, P, U = freeprod
    assert zeta_estimate(P, U, U.base_vertex, 200).value == pytest.approx(0.7, abs=1e-9)


def test_green_partial_trivial(tree3):
    assert green_partial(tree3.kernel(), (1,), (1,), 0.37, 0) == 1.0


def test_green_partial_tree3(tree3):
    # 1 + p2 + p4 with the path-enumeration values
    oracle = 1 + enumerate_paths(tree3.neighbors, (), (), 2) + enumerate_paths(tree3.neighbors, (), (), 4)
    assert oracle == pytest.approx(41 / 27, abs=1e-15)
    assert green_partial(tree3.kernel(), (), (), 1.0, 4) == pytest.approx(41 / 27, abs=1e-14)


@pytest.mark.parametrize("J", [0, 3, 10, 30])
def test_green_at_inverse_zeta(product, J):
    spec, P, U = product
    pU = restrict_kernel(P, U)
    qU = normalize_kernel(pU)
    x = U.base_vertex
    a = green_partial(pU, x, x, 103 / 100, J)
    b = green_partial(qU, x, x, 1.0, J)
    assert a == pytest.approx(b, rel=1e-12)


def test_kernel_identity_fiber(product):
    spec, P, U = product
    pU = restrict_kernel(P, U)
    chk = kernel_identity_check(pU, normalize_kernel(pU), 100 / 103, U.base_vertex, U.base_vertex, 30)
    assert chk.max_abs < 1e-12
    assert chk.per_step_abs[0] == 0.0


def test_kernel_identity_wrong_zeta(product):
    spec, P, U = product
    pU = restrict_kernel(P, U)
    x = ((), ())
    y = ((), (0,))
    chk = kernel_identity_check(pU, normalize_kernel(pU), 0.5 * 100 / 103, x, y, 3)
    # with zeta halved p/zeta'^1 = 2 q at j = 1, a relative deviation of 1
    assert chk.per_step_rel[1] > 0.5


def test_uniform_stay_mass_rejects_nontransitive(tree3):
    U = SubgraphSpec(lambda v: all(c != 2 for c in v), ())
    with pytest.raises(TransitivityError):
        uniform_stay_mass(restrict_kernel(tree3.kernel(), U), (), 3)


def test_detect_period():
    with pytest.raises(PeriodError):
        detect_period(np.array([0.0] + [-np.inf] * 60))
    assert detect_period(np.array([0.0, -np.inf, -1.0, -np.inf, -2.0])) == 2


@given(st.integers(3, 6), st.integers(0, 3))
def test_period_divides_returns(d, start_depth):
    T = HomogeneousTree(d)
    x = (0,) * start_depth
    logd = diag_series(T.kernel(), x, 50)
    p = detect_period(logd)
    for n in range(1, 51):
        if np.isfinite(logd[n]):
            assert n % p == 0


def test_product_period():
    spec = ProductSpec(3, 4, 0.5)
    assert detect_period(diag_series(spec.kernel(), ((), ()), 50)) == 2


@pytest.mark.parametrize("dims", [(3, 100), (4, 4)])
def test_ordering_and_zeta_consistency(dims):
    spec = ProductSpec(dims[0], dims[1], 3 / 103 if dims == (3, 100) else 0.5)
    P = spec.kernel()
    rho_G = radius_from_log_diag(product_return_series(spec, 1000)).value
    for i in (1, 2):
        U = fiber_subgraph(spec, i)
        s = spectral_summary(P, U, U.base_vertex, 1000)
        z = zeta_estimate(P, U, U.base_vertex, 1000).value
        assert s.rho_U <= rho_G * 1.01
        assert s.rho_U <= s.phi_U * (1 + 1e-9)
        assert abs(z - s.rho_U / s.phi_U) / z < 0.03


def test_diagonal_table(product):
    spec, P, U = product
    rows = diagonal_table(P, U, U.base_vertex, 6)
    assert rows[0] == (0, 1.0, 1.0)
    assert rows[1][1] == 0.0
    assert rows[6][2] == pytest.approx((100 / 103) ** 6, rel=1e-12)
