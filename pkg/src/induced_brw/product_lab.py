"""Cartesian products of trees and free products of groups.

Closed forms for products of simple random walks on homogeneous trees sit next
to DP cross-checks.  For a fiber ``U_i`` (the copy of factor ``i`` through the
root of the other factor) the stay mass is exactly ``alpha_i``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from .kernel_core import (
    CartesianProduct,
    CyclicGroup,
    FreeGroup,
    FreeProductGroup,
    HomogeneousTree,
    SubgraphSpec,
    TransitionKernel,
    normalize_kernel,
    restrict_kernel,
)
from .spectral_lab import SpectralSummary, diag_series, radius_from_log_diag, spectral_radius_estimate, zeta_estimate


# ---------------------------------------------------------------------------
# Cartesian products
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProductSpec:
    d1: int
    d2: int
    alpha1: float
    alpha2: Optional[float] = None
    fiber: int = 2

    def __post_init__(self):
        if self.alpha2 is None:
            object.__setattr__(self, "alpha2", 1.0 - self.alpha1)
        if min(self.d1, self.d2) < 2:
            raise ValueError(f"tree degrees must be >= 2, got {self.d1}, {self.d2}")
        if self.alpha1 <= 0 or self.alpha2 <= 0 or abs(self.alpha1 + self.alpha2 - 1.0) > 1e-12:
            raise ValueError(f"weights must be positive and sum to 1, got {self.alpha1}, {self.alpha2}")
        if self.fiber not in (1, 2):
            raise ValueError(f"fiber index must be 1 or 2, got {self.fiber}")

    @property
    def degrees(self) -> tuple:
        return (self.d1, self.d2)

    @property
    def alphas(self) -> tuple:
        return (self.alpha1, self.alpha2)

    def graph(self) -> CartesianProduct:
        return CartesianProduct(self.d1, self.d2, self.alpha1, self.alpha2)

    def kernel(self) -> TransitionKernel:
        return self.graph().kernel()


def fiber_subgraph(spec: ProductSpec, fiber: Optional[int] = None) -> SubgraphSpec:
    """``U_1 = T1 x {o2}`` or ``U_2 = {o1} x T2``, as a lumpable subgraph."""
    i = spec.fiber if fiber is None else fiber
    other = 0 if i == 2 else 1
    return SubgraphSpec(lambda v: len(v[other]) == 0, ((), ()), lumpable=True, name=f"fiber-{i}")


def tree_phi(d: int) -> float:
    """Spectral radius ``2 sqrt(d-1) / d`` of simple random walk on ``T_d``."""
    return 2.0 * math.sqrt(d - 1) / d


@dataclass
class ProductSummary:
    spec: ProductSpec
    phi: tuple
    rho_U: tuple
    rho_G: float
    m1: tuple
    recurrence_mean: tuple
    fibers: tuple = field(repr=False)
    dp: Optional[dict] = None

    @property
    def inv_rho_G(self) -> float:
        return 1.0 / self.rho_G

    def to_dict(self) -> dict:
        return {
            "spec": asdict(self.spec),
            "phi": list(self.phi),
            "rho_U": list(self.rho_U),
            "rho_G": self.rho_G,
            "inv_rho_G": self.inv_rho_G,
            "m1": list(self.m1),
            "recurrence_mean": list(self.recurrence_mean),
            "dp": self.dp,
        }


def product_return_series(spec: ProductSpec, n: int) -> np.ndarray:
    """``log p^(k)(o, o)`` on the product for ``k = 0..n``.

    A step moves in factor ``i`` with probability ``alpha_i``, so the return
    series is the binomial mixture of the two factor return series, each from
    the orbit-class DP.
    """
    logs = [diag_series(HomogeneousTree(d).kernel(), (), n) for d in spec.degrees]
    la1, la2 = math.log(spec.alpha1), math.log(spec.alpha2)
    out = np.full(n + 1, -np.inf)
    for m in range(n + 1):
        k = np.arange(m + 1)
        terms = gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1) + k * la1 + (m - k) * la2
        terms = terms + logs[0][k] + logs[1][m - k]
        out[m] = logsumexp(terms)
    return out


def product_spectral_summary(spec: ProductSpec, depth: Optional[int] = None) -> ProductSummary:
    """Closed-form spectral data of the product and its fibers, optionally DP-checked at ``depth``."""
    phi = tuple(tree_phi(d) for d in spec.degrees)
    rho_U = tuple(a * f for a, f in zip(spec.alphas, phi))
    rho_G = sum(rho_U)
    m1 = tuple(1.0 / a for a in spec.alphas)
    rec = tuple(1.0 / (a * a * f) for a, f in zip(spec.alphas, phi))
    fibers = tuple(SpectralSummary.from_radii(r, f, period=2) for r, f in zip(rho_U, phi))
    summary = ProductSummary(spec, phi, rho_U, rho_G, m1, rec, fibers)
    if depth is not None:
        summary.dp = product_dp_crosscheck(spec, depth, summary)
    return summary


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def product_dp_crosscheck(spec: ProductSpec, depth: int, closed: Optional[ProductSummary] = None) -> dict:
    """DP estimates of ``phi_i``, ``rho_{U_i}``, ``zeta_i`` and ``rho_G`` with relative errors."""
    closed = closed or product_spectral_summary(spec)
    P = spec.kernel()
    out: dict = {"depth": depth, "fibers": []}
    for i in (1, 2):
        U = fiber_subgraph(spec, i)
        pU = restrict_kernel(P, U)
        rho = spectral_radius_estimate(pU, U.base_vertex, depth).value
        phi = spectral_radius_estimate(normalize_kernel(pU), U.base_vertex, depth).value
        zeta = zeta_estimate(P, U, U.base_vertex, depth).value
        out["fibers"].append(
            {
                "fiber": i,
                "rho_U": rho,
                "phi_U": phi,
                "zeta": zeta,
                "rel_err_rho_U": _rel(rho, closed.rho_U[i - 1]),
                "rel_err_phi_U": _rel(phi, closed.phi[i - 1]),
                "abs_err_zeta": abs(zeta - spec.alphas[i - 1]),
            }
        )
    rho_G = radius_from_log_diag(product_return_series(spec, depth)).value
    out["rho_G"] = rho_G
    out["rel_err_rho_G"] = _rel(rho_G, closed.rho_G)
    return out


@dataclass(frozen=True)
class Window:
    lower: float  # phi_U / rho_U, exclusive
    upper: float  # 1 / rho_G, inclusive

    @property
    def empty(self) -> bool:
        return self.lower >= self.upper

    def __contains__(self, m: float) -> bool:
        return self.lower < m <= self.upper


def transient_window(spec: ProductSpec, fiber: Optional[int] = None) -> Window:
    """Means for which the BRW is transient on the product yet can persist in the fiber."""
    i = spec.fiber if fiber is None else fiber
    s = product_spectral_summary(spec)
    return Window(s.m1[i - 1], s.inv_rho_G)


# ---------------------------------------------------------------------------
# free products
# ---------------------------------------------------------------------------


def parse_group(desc: str):
    """``'cyclic:k'`` or ``'free:r'``."""
    kind, _, arg = desc.partition(":")
    try:
        n = int(arg)
    except ValueError:
        raise ValueError(f"bad group descriptor {desc!r}") from None
    if kind == "cyclic":
        return CyclicGroup(n)
    if kind == "free":
        return FreeGroup(n)
    raise ValueError(f"unknown group family {kind!r}; use cyclic:k or free:r")


@dataclass(frozen=True)
class FreeProductSpec:
    """``G1 * G2`` with step law ``alpha mu1 + (1 - alpha) mu2``; ``mu_i`` default to uniform."""

    factor1: str = "cyclic:2"
    factor2: str = "free:2"
    alpha: float = 0.3
    mu1: Optional[tuple] = None  # ((generator, weight), ...)
    mu2: Optional[tuple] = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def alpha2(self) -> float:
        return 1.0 - self.alpha

    def group(self) -> FreeProductGroup:
        mu1 = dict(self.mu1) if self.mu1 is not None else None
        mu2 = dict(self.mu2) if self.mu2 is not None else None
        return FreeProductGroup(parse_group(self.factor1), parse_group(self.factor2), self.alpha, mu1, mu2)


def free_product_kernel(spec: FreeProductSpec) -> TransitionKernel:
    """Kernel ``p(x, y) = mu(x^-1 y)`` on reduced words."""
    return spec.group().kernel()


def gamma2_copy(spec: FreeProductSpec, base: tuple = ()) -> SubgraphSpec:
    """The copy ``base G2`` of the second factor (the identity-rooted copy by default)."""
    G = spec.group()
    G.validate(base)
    inv = G.inv(base)

    def member(w):
        u = G.mul(inv, w)
        return len(u) == 0 or (len(u) == 1 and u[0][0] == 2)

    return SubgraphSpec(member, base, lumpable=True, name="G2-copy")


@dataclass
class FreeProductThresholds:
    zeta: float
    m0: float
    m1: float
    zeta_dp: float
    depth: int

    @property
    def zeta_error(self) -> float:
        return abs(self.zeta_dp - self.zeta)

    def to_dict(self) -> dict:
        return asdict(self)


def free_product_thresholds(spec: FreeProductSpec, depth: int = 200) -> FreeProductThresholds:
    """``zeta = alpha_2`` and ``m0 = m1 = 1 / alpha_2`` on the second-factor copy, DP-checked.

    Only this conclusion is implemented; the general criterion for ``m0`` via
    first-passage generating functions is not.
    """
    a2 = spec.alpha2
    P = free_product_kernel(spec)
    U = gamma2_copy(spec)
    z = zeta_estimate(P, U, U.base_vertex, depth).value
    return FreeProductThresholds(a2, 1.0 / a2, 1.0 / a2, z, depth)
