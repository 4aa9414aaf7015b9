"""Spectral radii, stay probabilities and Green-function partial sums."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .kernel_core import (
    ClassGraph,
    SubgraphSpec,
    SubgraphError,
    TransitionKernel,
    Vertex,
    ball,
    normalize_kernel,
    restrict_kernel,
)

PERIOD_WINDOW = 50


class PeriodError(ValueError):
    """No return to the start vertex was observed, so no period exists."""


class TransitivityError(ValueError):
    """Stay mass ``delta_x`` is not constant over the explored region."""


@dataclass
class RadiusEstimate:
    value: float
    period: int
    depth: int
    method: str = "dp_extrapolation"
    log_diag: np.ndarray = field(default=None, repr=False)


@dataclass
class ZetaEstimate:
    value: float
    depth: int
    underflow_depth: Optional[int] = None
    log_stay: np.ndarray = field(default=None, repr=False)


@dataclass
class SpectralSummary:
    """Spectral data of a subgraph: ``rho_U``, ``phi_U``, ``zeta`` and ``m1``."""

    rho_U: float
    phi_U: float
    zeta: float
    m1: float
    period: int
    depth: Optional[int]
    method: str

    @classmethod
    def from_radii(cls, rho_U: float, phi_U: float, period: int = 1, depth=None, method="closed_form"):
        return cls(rho_U, phi_U, rho_U / phi_U, phi_U / rho_U, period, depth, method)

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# DP series
# ---------------------------------------------------------------------------


def _logsumexp(v: np.ndarray) -> float:
    m = float(np.max(v)) if len(v) else -math.inf
    if not math.isfinite(m):
        return -math.inf
    return m + math.log(float(np.sum(np.exp(v - m))))


def _exact_series(kernel: TransitionKernel, x: Vertex, n: int, y: Optional[Vertex] = None) -> tuple:
    """Log of ``p^(k)(x, y)`` and of the total mass, k = 0..n, with per-step rescaling."""
    target = x if y is None else y
    cur = {x: 1.0}
    scale = 0.0
    log_point = np.full(n + 1, -np.inf)
    log_total = np.zeros(n + 1)
    log_point[0] = 0.0 if target == x else -np.inf
    for k in range(1, n + 1):
        nxt: dict = {}
        for v, mass in cur.items():
            for w, p in kernel.neighbor_fn(v):
                nxt[w] = nxt.get(w, 0.0) + mass * p
        total = math.fsum(nxt.values())
        if total <= 0.0:
            log_total[k:] = -np.inf
            break
        scale += math.log(total)
        cur = {w: m / total for w, m in nxt.items() if m > 0.0}
        log_total[k] = scale
        pt = cur.get(target, 0.0)
        log_point[k] = scale + math.log(pt) if pt > 0.0 else -np.inf
    return log_point, log_total


def dp_series(kernel: TransitionKernel, x: Vertex, n: int, y: Optional[Vertex] = None, radius: Optional[int] = None) -> tuple:
    """``(log p^(k)(x, y), log sum_w p^(k)(x, w))`` for ``k = 0..n``.

    Uses the orbit-class quotient when the kernel has an orbit key, otherwise
    the vertex-level DP (feasible only for small balls).
    """
    kernel.validate(x)
    if kernel.orbit_key is None:
        return _exact_series(kernel, x, n, y)
    graph = ClassGraph(kernel, x)
    if radius is None:
        radius = n
    logs = graph.log_masses(n, radius)
    if y is None or y == x:
        log_point = np.array([lv[0] for lv in logs])
    else:
        graph.ensure_radius(radius)
        j = graph.index.get(graph.key(y))
        if j is None:
            log_point = np.full(n + 1, -np.inf)
        else:
            log_point = np.array([lv[j] - graph.log_size[j] if j < len(lv) else -np.inf for lv in logs])
    log_total = np.array([_logsumexp(lv) for lv in logs])
    return log_point, log_total


def diag_series(kernel: TransitionKernel, x: Vertex, n: int) -> np.ndarray:
    """``log p^(k)(x, x)`` for ``k = 0..n``."""
    if kernel.orbit_key is None:
        return _exact_series(kernel, x, n)[0]
    graph = ClassGraph(kernel, x)
    # a walk that returns by step n never gets farther than n // 2
    logs = graph.log_masses(n, n // 2 + 1)
    return np.array([lv[0] for lv in logs])


def detect_period(log_diag: np.ndarray, window: int = PERIOD_WINDOW) -> int:
    """gcd of the return times ``1 <= k <= window`` with positive return probability."""
    d = 0
    for k in range(1, min(window, len(log_diag) - 1) + 1):
        if np.isfinite(log_diag[k]):
            d = math.gcd(d, k)
    if d == 0:
        raise PeriodError(f"no return to the start vertex within {min(window, len(log_diag) - 1)} steps")
    return d


def _top_half_rate(log_vals: np.ndarray, steps: np.ndarray) -> float:
    """exp of the least-squares slope of ``log_vals`` against ``steps`` on the upper half."""
    h = len(steps) // 2
    s, lv = steps[h:], log_vals[h:]
    if len(s) < 2:
        s, lv = steps, log_vals
    if len(s) == 1:
        return math.exp(lv[0] / s[0])
    slope = np.polyfit(s.astype(float), lv, 1)[0]
    return math.exp(slope)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def spectral_radius_estimate(kernel: TransitionKernel, x: Vertex, n_max: int) -> RadiusEstimate:
    """Extrapolated ``limsup (p^(n)(x, x))^(1/n)`` along multiples of the period."""
    return radius_from_log_diag(diag_series(kernel, x, n_max))


def radius_from_log_diag(log_diag: np.ndarray, method: str = "dp_extrapolation") -> RadiusEstimate:
    """Extrapolate the spectral radius from a return series ``log p^(k)(x, x)``, ``k = 0..n``."""
    n_max = len(log_diag) - 1
    period = detect_period(log_diag)
    if n_max < 2 * period:
        raise ValueError(f"n_max={n_max} is shorter than two periods ({period})")
    steps = np.arange(period, n_max + 1, period)
    vals = log_diag[steps]
    ok = np.isfinite(vals)
    if not ok.all():
        steps, vals = steps[ok], vals[ok]
    return RadiusEstimate(_top_half_rate(vals, steps), period, n_max, method, log_diag)


def stay_log_series(P: TransitionKernel, U: SubgraphSpec, x: Vertex, N: int) -> np.ndarray:
    """``log P_x(E_n)`` for ``n = 0..N``."""
    if not U.membership(x):
        raise SubgraphError(f"{x!r} is not in {U.name or 'U'}")
    pU = restrict_kernel(P, U)
    return dp_series(pU, x, N)[1]


def stay_prob(P: TransitionKernel, U: SubgraphSpec, x: Vertex, N: int) -> float:
    """Probability that the walk from ``x`` makes ``N`` consecutive steps inside ``U``."""
    return math.exp(stay_log_series(P, U, x, N)[N])


def zeta_estimate(P: TransitionKernel, U: SubgraphSpec, x: Vertex, N_max: int) -> ZetaEstimate:
    """Extrapolated ``lim P_x(E_N)^(1/N)``."""
    log_stay = stay_log_series(P, U, x, N_max)
    steps = np.arange(1, N_max + 1)
    vals = log_stay[1:]
    underflow = None
    dead = np.flatnonzero(~np.isfinite(vals))
    if len(dead):
        underflow = int(steps[dead[0]])
        steps, vals = steps[: dead[0]], vals[: dead[0]]
        if len(steps) == 0:
            return ZetaEstimate(0.0, N_max, underflow, log_stay)
    return ZetaEstimate(_top_half_rate(vals, steps), N_max, underflow, log_stay)


def prob_series(kernel: TransitionKernel, x: Vertex, y: Vertex, J: int) -> np.ndarray:
    """``p^(j)(x, y)`` for ``j = 0..J``."""
    return np.exp(dp_series(kernel, x, J, y=y)[0])


def green_partial(kernel: TransitionKernel, x: Vertex, y: Vertex, z: float, J: int) -> float:
    """Truncated Green function ``sum_{j <= J} p^(j)(x, y) z^j``."""
    if J < 0 or z <= 0:
        raise ValueError("need J >= 0 and z > 0")
    logp = dp_series(kernel, x, J, y=y)[0]
    terms = np.exp(logp + np.arange(J + 1) * math.log(z))
    return math.fsum(terms)


@dataclass
class IdentityCheck:
    max_abs: float
    max_rel: float
    per_step_abs: np.ndarray = field(repr=False)
    per_step_rel: np.ndarray = field(repr=False)


def uniform_stay_mass(pU: TransitionKernel, x: Vertex, radius: int, tol: float = 1e-12) -> float:
    """Common row sum of ``pU`` over the region within ``radius`` of ``x``.

    Raises :class:`TransitivityError` if two explored rows differ by more than
    ``tol``.
    """
    if pU.orbit_key is not None:
        graph = ClassGraph(pU, x)
        graph.ensure_radius(radius + 1)
        sums = [float(graph.rows[i][1].sum()) for i in range(len(graph)) if graph.rows[i] is not None]
    else:
        sums = [math.fsum(p for _, p in pU.neighbor_fn(v)) for v in ball(pU, x, radius)]
    lo, hi = min(sums), max(sums)
    if hi - lo > tol:
        raise TransitivityError(f"row sums range over [{lo!r}, {hi!r}]")
    return sums[0]


def kernel_identity_check(
    pU: TransitionKernel, qU: TransitionKernel, zeta: float, x: Vertex, y: Vertex, J: int
) -> IdentityCheck:
    """Largest deviation of ``q_U^(j)(x, y)`` from ``p_U^(j)(x, y) / zeta^j`` over ``j <= J``.

    Both sides come from separate DP runs.  The relative deviation is taken
    over the steps where ``q_U^(j)(x, y) > 0``.
    """
    uniform_stay_mass(pU, x, J)
    p = prob_series(pU, x, y, J)
    q = prob_series(qU, x, y, J)
    scaled = p / zeta ** np.arange(J + 1)
    dev = np.abs(q - scaled)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(q > 0, dev / q, 0.0)
    return IdentityCheck(float(dev.max()), float(rel.max()), dev, rel)


def spectral_summary(P: TransitionKernel, U: SubgraphSpec, x: Vertex, n_max: int) -> SpectralSummary:
    """``rho_U`` from ``P_U`` and ``phi_U`` from ``Q_U``, both by DP extrapolation."""
    pU = restrict_kernel(P, U)
    qU = normalize_kernel(pU)
    rho = spectral_radius_estimate(pU, x, n_max)
    phi = spectral_radius_estimate(qU, x, n_max)
    return SpectralSummary.from_radii(rho.value, phi.value, rho.period, n_max, "dp_extrapolation")


def diagonal_table(P: TransitionKernel, U: SubgraphSpec, x: Vertex, n: int) -> list:
    """Rows ``(k, p_U^(k)(x, x), P_x(E_k))`` for ``k = 0..n``."""
    pU = restrict_kernel(P, U)
    log_point, log_total = dp_series(pU, x, n)
    return [(k, math.exp(a), math.exp(b)) for k, (a, b) in enumerate(zip(log_point, log_total))]
