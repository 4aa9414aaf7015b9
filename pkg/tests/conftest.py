import itertools

import pytest
from hypothesis import HealthCheck, settings

from induced_brw.kernel_core import HomogeneousTree
from induced_brw.product_lab import FreeProductSpec, ProductSpec, fiber_subgraph, free_product_kernel, gamma2_copy

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def product():
    """The (3, 100) product with weights 3/103 and 100/103 plus its second fiber."""
    spec = ProductSpec(3, 100, 3 / 103, 100 / 103)
    return spec, spec.kernel(), fiber_subgraph(spec, 2)


@pytest.fixture(scope="session")
def freeprod():
    spec = FreeProductSpec("cyclic:2", "free:2", 0.3)
    return spec, free_product_kernel(spec), gamma2_copy(spec)


def enumerate_paths(neighbor_fn, x, y, n):
    """Brute-force ``p^(n)(x, y)`` by listing every path; an oracle independent of the DP code."""
    total = 0.0
    stack = [(x, 1.0, 0)]
    while stack:
        v, w, k = stack.pop()
        if k == n:
            if v == y:
                total += w
            continue
        for u, p in neighbor_fn(v):
            stack.append((u, w * p, k + 1))
    return total


def tree_vertices(d, depth):
    """All vertices of ``T_d`` up to ``depth``."""
    out = [()]
    for L in range(1, depth + 1):
        for first in range(d):
            for rest in itertools.product(range(d - 1), repeat=L - 1):
                out.append((first,) + rest)
    return out


@pytest.fixture(scope="session")
def tree3():
    return HomogeneousTree(3)


# one line per acceptance criterion, filled by test_acceptance and echoed in the summary
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
