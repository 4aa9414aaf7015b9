"""F-BRW detection: projections with type-constant quotient rows, thresholds, regimes."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Optional

import numpy as np

from .kernel_core import TransitionKernel, Vertex, ball
from .spectral_lab import SpectralSummary, dp_series, _top_half_rate

QUOTIENT_TOL = 1e-12

GLOBAL_EXTINCTION = "global_extinction"
GLOBAL_NOT_LOCAL = "global_not_local"
LOCAL_POSSIBLE = "local_possible"
REGIME_ORDER = (GLOBAL_EXTINCTION, GLOBAL_NOT_LOCAL, LOCAL_POSSIBLE)


class ContractError(RuntimeError):
    """An operation was called without its precondition being established."""


@dataclass(frozen=True)
class ProjectionMap:
    """Map ``g`` from vertices to a finite label set."""

    g: Callable[[Vertex], Hashable]
    labels: Optional[tuple] = None
    radius: Optional[int] = None  # labels are defined within this radius (None: everywhere)

    @property
    def type_count(self) -> Optional[int]:
        return None if self.labels is None else len(self.labels)

    def __call__(self, v):
        return self.g(v)


def constant_projection() -> ProjectionMap:
    return ProjectionMap(lambda v: 0, (0,))


@dataclass
class ProjectionCheck:
    """Outcome of checking type-constant quotient rows on a ball.

    ``status`` is ``'pass'``, ``'fail'`` or ``'inconclusive'`` (some declared
    labels never seen).  ``rows`` maps each label to its quotient row
    ``{target label: mass}`` and ``witness`` holds two equally-labelled
    vertices with different rows on failure.
    """

    status: str
    radius: int
    labels: list
    rows: dict
    witness: Optional[tuple] = None
    checked: int = 0

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @property
    def is_fbrw(self) -> bool:
        return self.passed

    @property
    def type_count(self) -> int:
        return len(self.labels)

    def matrix(self) -> np.ndarray:
        if not self.passed:
            raise ContractError(f"quotient requested after a {self.status!r} projection check")
        pos = {a: i for i, a in enumerate(self.labels)}
        Q = np.zeros((len(self.labels), len(self.labels)))
        for a, row in self.rows.items():
            for b, mass in row.items():
                Q[pos[a], pos[b]] = mass
        return Q


def _quotient_row(pU: TransitionKernel, g, x) -> dict:
    row: dict = {}
    for w, p in pU.neighbor_fn(x):
        y = g(w)
        row[y] = row.get(y, 0.0) + p
    return row


def _rows_differ(r1: dict, r2: dict, tol: float) -> bool:
    for k in set(r1) | set(r2):
        if abs(r1.get(k, 0.0) - r2.get(k, 0.0)) > tol:
            return True
    return False


def check_projection(
    pU: TransitionKernel, g: ProjectionMap, ball_radius: int, base: Optional[Vertex] = None, tol: float = QUOTIENT_TOL
) -> ProjectionCheck:
    """Check that ``sum_{w: g(w) = y} p_U(x, w)`` depends only on ``(g(x), y)``.

    Rows are compared for every ``x`` within ``ball_radius`` of ``base``
    (defaults to the kernel root).  A pass means "F-BRW up to radius r".
    """
    base = pU.root if base is None else base
    region = ball(pU, base, ball_radius)
    seen: dict = {}
    owner: dict = {}
    for x in sorted(region, key=lambda v: (region[v], repr(v))):
        a = g(x)
        row = _quotient_row(pU, g, x)
        if a not in seen:
            seen[a], owner[a] = row, x
        elif _rows_differ(seen[a], row, tol):
            return ProjectionCheck("fail", ball_radius, list(seen), seen, (owner[a], x), len(region))
    labels = list(seen)
    if g.labels is not None:
        missing = [a for a in g.labels if a not in seen]
        if missing:
            return ProjectionCheck("inconclusive", ball_radius, labels, seen, None, len(region))
        labels = list(g.labels)
    targets = {b for row in seen.values() for b in row}
    if not targets <= set(labels):
        # rows reach labels whose own rows were never observed
        return ProjectionCheck("inconclusive", ball_radius, labels, seen, None, len(region))
    return ProjectionCheck("pass", ball_radius, labels, seen, None, len(region))


def refine_partition(pU: TransitionKernel, ball_radius: int, base: Optional[Vertex] = None, digits: int = 12) -> ProjectionMap:
    """Coarsest partition stable under quotient-row signatures, found by colour refinement.

    Round 0 colours vertices by row sum; round ``k`` recolours each vertex by
    its colour and its mass into every colour class.  After ``k`` rounds the
    colours of vertices within ``ball_radius - k`` of ``base`` do not depend
    on the truncation of the ball, so only those are kept.  Refinement stops
    at the first round that splits no class; the returned map carries the
    radius on which its labels are defined.  If splitting never stops the map
    has ``radius = 0``.
    """
    base = pU.root if base is None else base
    region = ball(pU, base, ball_radius)
    order = sorted(region, key=lambda v: (region[v], repr(v)))
    rows = {v: pU.neighbor_fn(v) for v in order}

    def canon(sig_of: dict, keep) -> dict:
        ids: dict = {}
        return {v: ids.setdefault(sig_of[v], len(ids)) for v in keep}

    colour = canon({v: round(math.fsum(p for _, p in rows[v]), digits) for v in order}, order)
    for k in range(1, ball_radius + 1):
        inner = [v for v in order if region[v] <= ball_radius - k]
        sig = {}
        for v in inner:
            acc: dict = {}
            for w, p in rows[v]:
                acc[colour[w]] = acc.get(colour[w], 0.0) + p
            sig[v] = (colour[v], tuple(sorted((c, round(m, digits)) for c, m in acc.items())))
        new = canon(sig, inner)
        if len(set(new.values())) == len({colour[v] for v in inner}):
            table = new
            labels = tuple(sorted(set(table.values())))
            return ProjectionMap(table.get, labels, ball_radius - k)
        colour = new
    return ProjectionMap({base: 0}.get, (0,), 0)


def quotient_kernel(pU: TransitionKernel, g: ProjectionMap, ball_radius: int, base: Optional[Vertex] = None) -> np.ndarray:
    """Finite substochastic matrix ``Q[g(x), y] = sum_{w: g(w) = y} p_U(x, w)``.

    Raises :class:`ContractError` unless the projection check passes.
    """
    return check_projection(pU, g, ball_radius, base).matrix()


def m1_threshold(pU: TransitionKernel, x: Vertex, n_max: int) -> float:
    """``1 / liminf (sum_y p_U^(n)(x, y))^(1/n)`` by extrapolation."""
    log_total = dp_series(pU, x, n_max)[1]
    steps = np.arange(1, n_max + 1)
    vals = log_total[1:]
    ok = np.isfinite(vals)
    if not ok.all():
        cut = int(np.flatnonzero(~ok)[0])
        if cut == 0:
            return math.inf
        steps, vals = steps[:cut], vals[:cut]
    return 1.0 / _top_half_rate(vals, steps)


def quotient_threshold(Q: np.ndarray) -> float:
    """``1 / spectral radius`` of a finite quotient matrix."""
    r = float(np.max(np.abs(np.linalg.eigvals(Q))))
    return math.inf if r == 0 else 1.0 / r


@dataclass
class RegimeLabel:
    label: str
    m: float
    lower: float  # phi_U / rho_U
    upper: float  # 1 / rho_U

    def to_dict(self) -> dict:
        return {"label": self.label, "m": self.m, "phi_over_rho": self.lower, "inv_rho": self.upper}


def classify_regime(m: float, summary: SpectralSummary) -> RegimeLabel:
    """Place ``m`` against ``phi_U / rho_U`` and ``1 / rho_U``."""
    if m <= 1:
        raise ValueError(f"mean offspring must exceed 1, got {m}")
    lower, upper = summary.phi_U / summary.rho_U, 1.0 / summary.rho_U
    if m <= lower:
        label = GLOBAL_EXTINCTION
    elif m <= upper:
        label = GLOBAL_NOT_LOCAL
    else:
        label = LOCAL_POSSIBLE
    return RegimeLabel(label, m, lower, upper)
