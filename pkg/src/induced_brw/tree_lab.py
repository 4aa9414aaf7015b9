"""Tree constructions: boundary measure, GW percolation, pruned trees,
edge-breeding BRW, the hitting-probability recursion and sparse subsets.

Tree vertices use the encoding of :class:`HomogeneousTree`: a tuple of child
indices read from the root ``()``.  A forward-branching tree with level
degrees ``n_i`` uses the same encoding with ``v[i] < n_i``; with
``n_i = d - 1`` it is the subtree of ``T_d`` made of the words that do not
start with ``d - 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import numpy as np

from .brw_engine import Evolver, MCEstimate, OffspringLaw, trial_rng
from .kernel_core import ClassGraph, HomogeneousTree, SubgraphSpec, restrict_kernel

GLOBAL_EXTINCTION = "global_extinction"
GLOBAL_SURVIVAL_LOCAL_EXTINCTION = "global_survival_local_extinction"
LOCAL_SURVIVAL = "local_survival"

NONE, ALL, MIXED = "none", "all", "mixed"


class ShootingError(RuntimeError):
    """The shooting bisection could not bracket the decaying solution."""


# ---------------------------------------------------------------------------
# forward-branching trees and boundary measure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TreeSpec:
    """Rooted tree where every vertex at depth ``i`` has ``n_i`` children.

    ``n_i = head[i]`` for ``i < len(head)`` and ``tail`` afterwards.
    """

    head: tuple = ()
    tail: int = 2

    def __post_init__(self):
        if self.tail < 1 or any(int(n) != n or n < 1 for n in self.head):
            raise ValueError(f"forward degrees must be integers >= 1, got head={self.head}, tail={self.tail}")

    @classmethod
    def constant(cls, n: int) -> "TreeSpec":
        return cls((), int(n))

    @classmethod
    def homogeneous(cls, d: int) -> "TreeSpec":
        """``T_d`` seen from its root: ``d`` children at the root, ``d - 1`` elsewhere."""
        return cls((int(d),), int(d) - 1)

    def forward_degree(self, i: int) -> int:
        return self.head[i] if i < len(self.head) else self.tail

    def level_size(self, i: int) -> int:
        """``|S_i| = prod_{j < i} n_j``."""
        return math.prod(self.forward_degree(j) for j in range(i))

    def contains(self, v: tuple) -> bool:
        return all(0 <= c < self.forward_degree(k) for k, c in enumerate(v))

    def children(self, v: tuple) -> list:
        return [v + (c,) for c in range(self.forward_degree(len(v)))]

    def level(self, i: int) -> list:
        out = [()]
        for j in range(i):
            n = self.forward_degree(j)
            out = [v + (c,) for v in out for c in range(n)]
        return out


def boundary_measure(tree: TreeSpec, x: tuple) -> Fraction:
    """``gamma_o`` of the boundary of the subtree rooted at ``x``: ``1 / |S_i|``."""
    if not tree.contains(x):
        raise ValueError(f"{x!r} is not a vertex of {tree}")
    return Fraction(1, tree.level_size(len(x)))


# ---------------------------------------------------------------------------
# Galton-Watson percolation
# ---------------------------------------------------------------------------


def _level_probs(p, depth: int) -> np.ndarray:
    if np.isscalar(p):
        return np.full(depth, float(p))
    arr = np.asarray(p, dtype=float)
    if len(arr) < depth:
        raise ValueError(f"need {depth} percolation parameters, got {len(arr)}")
    return arr[:depth]


@dataclass
class GWRealization:
    """Root cluster of an edge percolation truncated at ``depth``.

    ``levels[i]`` lists the retained vertices at depth ``i``.
    """

    tree: TreeSpec
    p: np.ndarray
    depth: int
    levels: list
    _members: frozenset = field(default=None, repr=False)

    def __post_init__(self):
        self._members = frozenset(v for lvl in self.levels for v in lvl)

    def __contains__(self, v) -> bool:
        return v in self._members

    @property
    def size(self) -> int:
        return len(self._members)

    def boundary_estimate(self, i: Optional[int] = None) -> float:
        """``|cluster cap S_i| / |S_i|``, the depth-``i`` shadow of ``gamma_o`` of the cluster boundary."""
        i = self.depth if i is None else i
        return len(self.levels[i]) / self.tree.level_size(i)

    def as_subgraph(self) -> SubgraphSpec:
        return SubgraphSpec(self.__contains__, (), lumpable=False, name="gw-cluster")


def gw_percolate(tree: TreeSpec, p, depth: int, rng: np.random.Generator) -> GWRealization:
    """Open each edge from ``S_i`` to ``S_{i+1}`` with probability ``p_i`` and keep the root cluster."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    probs = _level_probs(p, depth)
    levels = [[()]]
    for i in range(depth):
        cur = levels[-1]
        n = tree.forward_degree(i)
        if not cur:
            levels.append([])
            continue
        open_ = rng.random((len(cur), n)) < probs[i]
        rows, cols = np.nonzero(open_)
        levels.append([cur[r] + (int(c),) for r, c in zip(rows, cols)])
    return GWRealization(tree, probs, depth, levels)


def retention_frequency(tree: TreeSpec, p, vertex: tuple, realizations: int, master_seed: int) -> MCEstimate:
    """Fraction of clusters containing ``vertex``; the expected value is ``prod_{j < |vertex|} p_j``."""
    depth = max(1, len(vertex))
    hits = sum(vertex in gw_percolate(tree, p, depth, trial_rng(master_seed, t)) for t in range(realizations))
    return MCEstimate.from_counts(hits, realizations, master_seed, expected=float(np.prod(_level_probs(p, depth)[: len(vertex)])))


@dataclass
class BoundaryMean:
    mean: float
    stderr: float
    bound: float
    depth: int
    realizations: int

    @property
    def within(self) -> bool:
        """True when the mean is at most ``bound + 3 stderr``."""
        return self.mean <= self.bound + 3.0 * self.stderr


def gw_boundary_profile(tree: TreeSpec, p, depth: int, realizations: int, master_seed: int) -> list:
    """Per-depth :class:`BoundaryMean` for ``i = 1..depth`` from one batch of realizations."""
    est = np.array(
        [
            [r.boundary_estimate(i) for i in range(1, depth + 1)]
            for r in (gw_percolate(tree, p, depth, trial_rng(master_seed, t)) for t in range(realizations))
        ]
    )
    sd = est.std(axis=0, ddof=1) if realizations > 1 else np.zeros(depth)
    bounds = np.cumprod(_level_probs(p, depth))
    return [
        BoundaryMean(float(est[:, i].mean()), float(sd[i]) / math.sqrt(realizations), float(bounds[i]), i + 1, realizations)
        for i in range(depth)
    ]


def gw_boundary_mean(tree: TreeSpec, p, depth: int, realizations: int, master_seed: int) -> BoundaryMean:
    """Empirical mean of the depth-``depth`` boundary estimate against ``prod_{j < depth} p_j``."""
    return gw_boundary_profile(tree, p, depth, realizations, master_seed)[-1]


# ---------------------------------------------------------------------------
# pruned trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrunedTree:
    """``T_d`` with, at each listed level ``k``, the last child edge of every vertex in ``S_k`` removed."""

    degree: int
    levels: tuple

    def removed_child(self, k: int) -> int:
        return self.degree - 1 if k == 0 else self.degree - 2

    def __contains__(self, v) -> bool:
        lv = set(self.levels)
        return all(not (k in lv and c == self.removed_child(k)) for k, c in enumerate(v))

    def as_subgraph(self) -> SubgraphSpec:
        return SubgraphSpec(self.__contains__, (), lumpable=False, name=f"pruned-{self.degree}")

    def applied(self, depth: int) -> int:
        """Number of pruning levels that cut edges above depth ``depth``."""
        return sum(1 for k in self.levels if k < depth)

    def measure_certificate(self, depth: int) -> Fraction:
        """Exact ``gamma_o`` mass of the depth-``depth`` vertices kept in the pruned tree."""
        lv = set(self.levels)
        out = Fraction(1)
        for k in range(depth):
            n = self.degree if k == 0 else self.degree - 1
            if k in lv:
                out *= Fraction(n - 1, n)
        return out

    def measure_by_enumeration(self, depth: int) -> Fraction:
        spec = TreeSpec.homogeneous(self.degree)
        return sum((boundary_measure(spec, v) for v in spec.level(depth) if v in self), Fraction(0))

    def bound(self, depth: int) -> Fraction:
        i = self.applied(depth)
        return Fraction((self.degree - 1) ** i, self.degree**i)


def prune_tree(d: int, levels: Sequence[int] = ()) -> PrunedTree:
    levels = tuple(int(k) for k in levels)
    if any(b <= a for a, b in zip(levels, levels[1:])) or any(k < 0 for k in levels):
        raise ValueError(f"pruning levels must be strictly increasing and non-negative, got {levels}")
    if d < 3:
        raise ValueError("pruning needs d >= 3")
    return PrunedTree(int(d), levels)


# ---------------------------------------------------------------------------
# edge-breeding BRW
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeBreedingRegime:
    label: str
    lam: float
    degree: int
    lower: float  # 1/d
    upper: float  # 1/(2 sqrt(d-1))


def edge_breeding_law(lam: float, d: int) -> OffspringLaw:
    """Geometric offspring with mean ``lam * d`` (children placed uniformly on neighbours)."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    return OffspringLaw.edge_breeding(lam, d)


def edge_breeding_regime(lam: float, d: int) -> EdgeBreedingRegime:
    lower, upper = 1.0 / d, 1.0 / (2.0 * math.sqrt(d - 1))
    if lam <= lower:
        label = GLOBAL_EXTINCTION
    elif lam <= upper:
        label = GLOBAL_SURVIVAL_LOCAL_EXTINCTION
    else:
        label = LOCAL_SURVIVAL
    return EdgeBreedingRegime(label, lam, d, lower, upper)


# ---------------------------------------------------------------------------
# hitting-probability recursion
# ---------------------------------------------------------------------------


@dataclass
class RecursionSolution:
    """``a_n`` = probability that the edge-breeding BRW from the root ever visits a fixed vertex at distance ``n``."""

    lam: float
    degree: int
    a: np.ndarray
    a1: float
    decay_rate: float
    epsilon: float
    residual_max: float
    bracket_width: float
    tol: float

    @property
    def N(self) -> int:
        return len(self.a) - 1

    def value(self, n: int) -> float:
        """``a_n``, continued geometrically beyond the computed range."""
        if n <= self.N:
            return float(self.a[n])
        return float(self.a[-1]) * self.decay_rate ** (n - self.N)

    def tail_sum(self, r0: int, spacing: int = 1) -> float:
        """Upper bound on ``sum_{i >= 0} a_{r0 + i*spacing}``."""
        total, r = 0.0, r0
        while r <= self.N:
            total += float(self.a[r])
            r += spacing
        q = self.decay_rate**spacing
        return total + self.value(r) / (1.0 - q)


def _forward_orbit(a1, lam, d, M):
    """Orbit of the forward form of the recursion; stops when it leaves ``(0, a_prev)``."""
    orbit = [mpmath.mpf(1), a1]
    c = 1 / (lam * (d - 1))
    for _ in range(M - 1):
        prev, cur = orbit[-2], orbit[-1]
        nxt = c * cur / (1 - cur) - prev / (d - 1)
        orbit.append(nxt)
        if nxt <= 0 or nxt >= cur:
            break
    return orbit


def _residual(a, n, lam, d):
    s = lam * d * (a[n - 1] / d + (d - 1) * a[n + 1] / d)
    return a[n] - s / (1 + s)


def solve_extinction_recursion(lam: float, d: int, N: int = 60, tol: float = 1e-12) -> RecursionSolution:
    """Shooting solution of ``a_n = s_n / (1 + s_n)``, ``s_n = lam d (a_{n-1}/d + (d-1) a_{n+1}/d)``, ``a_0 = 1``.

    The forward form is unstable around the decaying solution: an orbit
    started below the true ``a_1`` eventually turns negative, one started
    above it eventually stops decreasing.  Bisection on that sign is run in
    extended precision on an orbit longer than ``N`` so that the first ``N``
    terms are accurate.
    """
    if N < 10:
        raise ValueError("N must be >= 10")
    if not 1.0 / d < lam <= 1.0 / (2.0 * math.sqrt(d - 1)) + 1e-15:
        raise ValueError(f"lam={lam} outside (1/d, 1/(2 sqrt(d-1))]")
    # linearisation near 0: r^2 - r/(lam (d-1)) + 1/(d-1) = 0
    b = 1.0 / (lam * (d - 1))
    disc = max(b * b - 4.0 / (d - 1), 0.0)
    slow, fast = (b + math.sqrt(disc)) / 2, max((b - math.sqrt(disc)) / 2, 1e-3)
    M = 2 * N + 40
    digits = int(M * (math.log10(1 / fast) + math.log10(max(slow / fast, 1.0 + 1e-9)))) + 40
    with mpmath.workdps(digits):
        lamm, dm = mpmath.mpf(lam), mpmath.mpf(d)
        lo, hi = mpmath.mpf(0), mpmath.mpf(1) - mpmath.mpf(10) ** (-digits // 2)

        def too_low(a1):
            orb = _forward_orbit(a1, lamm, dm, M)
            return orb[-1] <= 0

        if not too_low(lo + mpmath.mpf(10) ** (-digits // 2)) or too_low(hi):
            raise ShootingError(f"no sign change of the forward orbit on (0, 1) for lam={lam}, d={d}")
        target = mpmath.mpf(10) ** (-(digits - 20))
        iters = 0
        while hi - lo > target and iters < 4 * digits:
            mid = (lo + hi) / 2
            if too_low(mid):
                lo = mid
            else:
                hi = mid
            iters += 1
        orbit = _forward_orbit(hi, lamm, dm, M)
        if len(orbit) < N + 2:
            raise ShootingError(f"orbit stopped after {len(orbit) - 1} steps; bracket width {float(hi - lo):.3e}")
        res = max(abs(_residual(orbit, n, lamm, dm)) for n in range(1, N + 1))
        a = np.array([float(x) for x in orbit[: N + 1]])
        width = float(hi - lo)
    ratios = a[1:] / a[:-1]
    tail = ratios[len(ratios) // 2 :]
    rate = float(tail.max())
    return RecursionSolution(lam, d, a, float(a[1]), rate, 1.0 - rate, float(res), width, tol)


def hitting_probability_mc(
    d: int,
    law: OffspringLaw,
    target: tuple,
    trials: int,
    master_seed: int,
    radius: int = 30,
    horizon: int = 4000,
) -> MCEstimate:
    """Monte Carlo frequency with which the BRW from the root of ``T_d`` ever visits ``target``.

    Particles farther than ``radius`` from ``target`` are discarded; each of
    them would have reached ``target`` with probability of order
    ``a_radius``.  Subtrees not containing ``target`` are lumped by height.
    """
    tree = HomogeneousTree(d)
    dist = tree.distance
    ball = SubgraphSpec(lambda v: dist(v, target) <= radius, (), name="target-ball")
    pU = restrict_kernel(tree.kernel(), ball)
    key = region_key(FiniteTreeSet([target]), None, depth_bound=len(target) + radius)
    graph = ClassGraph(pU, (), key=key)
    ev = Evolver(graph, law, dense_radius=horizon)
    t_idx = graph.index[key(target)]
    hits, unresolved = 0, 0
    for t in range(trials):
        rng = trial_rng(master_seed, t)
        hit = False
        for n, state, _ in ev.generations(rng, horizon):
            if state[t_idx] > 0:
                hit = True
                break
            if n == horizon and state.sum() > 0:
                unresolved += 1
        hits += hit
    return MCEstimate.from_counts(hits, trials, master_seed, unresolved=unresolved, radius=radius)


# ---------------------------------------------------------------------------
# subsets of T_d
# ---------------------------------------------------------------------------


def _is_prefix(a: tuple, b: tuple) -> bool:
    return len(a) <= len(b) and b[: len(a)] == a


class TreeSet:
    """Subset of ``T_d`` with the subtree queries needed for boundary certificates.

    ``meets_deep(z, depth)``: the subtree of ``z`` holds a member at depth ``>= depth``.
    ``status(z, depth_bound)``: ``'all'`` if the subtree of ``z`` is inside the
    set, ``'none'`` if it has no member at depth ``<= depth_bound``,
    ``'mixed'`` otherwise.
    """

    def __contains__(self, v) -> bool:
        raise NotImplementedError

    def meets_deep(self, z: tuple, depth: int) -> bool:
        raise NotImplementedError

    def status(self, z: tuple, depth_bound: int) -> str:
        raise NotImplementedError

    def as_subgraph(self, base: tuple = ()) -> SubgraphSpec:
        return SubgraphSpec(self.__contains__, base, name=type(self).__name__)

    def __or__(self, other: "TreeSet") -> "TreeSet":
        return UnionSet((self, other))


class FiniteTreeSet(TreeSet):
    def __init__(self, vertices):
        self.vertices = frozenset(tuple(v) for v in vertices)

    def __contains__(self, v) -> bool:
        return v in self.vertices

    def meets_deep(self, z, depth):
        return any(len(a) >= depth and _is_prefix(z, a) for a in self.vertices)

    def status(self, z, depth_bound):
        return MIXED if any(len(a) <= depth_bound and _is_prefix(z, a) for a in self.vertices) else NONE


class EmptySet(FiniteTreeSet):
    def __init__(self):
        super().__init__(())


class SubtreeSet(TreeSet):
    """All descendants of ``top``, ``top`` included."""

    def __init__(self, top: tuple):
        self.top = tuple(top)

    def __contains__(self, v) -> bool:
        return _is_prefix(self.top, v)

    def meets_deep(self, z, depth):
        return _is_prefix(self.top, z) or _is_prefix(z, self.top)

    def status(self, z, depth_bound):
        if _is_prefix(self.top, z):
            return ALL
        if _is_prefix(z, self.top) and len(self.top) <= depth_bound:
            return MIXED
        return NONE


class RaySet(TreeSet):
    """Vertices of the ray ``prefix`` followed by ``cycle`` repeated forever."""

    def __init__(self, prefix: tuple = (), cycle: tuple = (0,)):
        if not cycle:
            raise ValueError("cycle must be non-empty")
        self.prefix, self.cycle = tuple(prefix), tuple(cycle)

    def index(self, i: int) -> int:
        k = len(self.prefix)
        return self.prefix[i] if i < k else self.cycle[(i - k) % len(self.cycle)]

    def __contains__(self, v) -> bool:
        return all(c == self.index(i) for i, c in enumerate(v))

    def meets_deep(self, z, depth):
        return z in self

    def status(self, z, depth_bound):
        return MIXED if z in self else NONE


class UnionSet(TreeSet):
    def __init__(self, parts):
        self.parts = tuple(parts)

    def __contains__(self, v) -> bool:
        return any(v in p for p in self.parts)

    def meets_deep(self, z, depth):
        return any(p.meets_deep(z, depth) for p in self.parts)

    def status(self, z, depth_bound):
        st = [p.status(z, depth_bound) for p in self.parts]
        if ALL in st:
            return ALL
        return MIXED if MIXED in st else NONE


def bfs_index(d: int, y: tuple) -> int:
    """0-based position of ``y`` in the breadth-first enumeration of ``T_d`` minus the root."""
    L = len(y)
    if L == 0:
        raise ValueError("the root is not enumerated")
    b = d - 1
    before = d * (L - 1) if b == 1 else d * (b ** (L - 1) - 1) // (b - 1)
    rank = 0
    for c in y:
        rank = rank * b + c
    return before + rank


def bfs_vertex(d: int, i: int) -> tuple:
    L = 1
    while i >= d * (d - 1) ** (L - 1):
        i -= d * (d - 1) ** (L - 1)
        L += 1
    out = []
    for k in range(L):
        w = (d - 1) ** (L - 1 - k)
        out.append(i // w)
        i %= w
    return tuple(out)


class AEmptySet(TreeSet):
    """Sparse boundary-dense set ``{x_i}``.

    ``y_i`` runs through ``T_d`` minus the root in breadth-first order and
    ``x_i = y_i 0 0 ... 0`` has depth ``r_i = max(|y_i|, r0 + i*spacing)``.
    Every subtree contains some ``x_i``, while the visit probabilities
    ``a_{r_i}`` are summable.
    """

    def __init__(self, d: int, r0: int, spacing: int = 1, sum_bound: Optional[float] = None):
        self.d, self.r0, self.spacing, self.sum_bound = int(d), int(r0), int(spacing), sum_bound

    def depth_of(self, y: tuple) -> int:
        return max(len(y), self.r0 + bfs_index(self.d, y) * self.spacing)

    def point(self, i: int) -> tuple:
        y = bfs_vertex(self.d, i)
        return y + (0,) * (self.depth_of(y) - len(y))

    def points(self, max_depth: int) -> list:
        out, i = [], 0
        while self.r0 + i * self.spacing <= max_depth:
            x = self.point(i)
            if len(x) <= max_depth:
                out.append(x)
            i += 1
        return out

    def __contains__(self, v) -> bool:
        L = len(v)
        if L == 0:
            return False
        last = max((k for k, c in enumerate(v) if c != 0), default=-1)
        for j in range(max(1, last + 1), L + 1):
            r = self.depth_of(v[:j])
            if r == L:
                return True
            if self.r0 + bfs_index(self.d, v[:j]) * self.spacing > L:
                break
        return False

    def deep_witness(self, z: tuple, depth: int) -> tuple:
        y = z + (0,) * max(0, depth - len(z), 1 - len(z))
        return y + (0,) * (self.depth_of(y) - len(y))

    def meets_deep(self, z, depth):
        w = self.deep_witness(z, depth)
        return w in self and _is_prefix(z, w) and len(w) >= depth

    def status(self, z, depth_bound):
        # cheapest member below z: x(z) itself, or x(y) for a prefix y of z with z = y 0...0
        if len(z) >= 1 and self.depth_of(z) <= depth_bound:
            return MIXED
        if len(z) == 0:
            return MIXED if self.depth_of((0,)) <= depth_bound else NONE
        last = max((k for k, c in enumerate(z) if c != 0), default=-1)
        for j in range(max(1, last + 1), len(z)):
            r = self.depth_of(z[:j])
            if len(z) <= r <= depth_bound:
                return MIXED
        return NONE


class HullSet(TreeSet):
    """Vertices up to ``depth`` whose subtree meets ``A`` at depth ``>= depth``."""

    def __init__(self, A: TreeSet, depth: int):
        self.A, self.depth = A, int(depth)

    def __contains__(self, v) -> bool:
        return len(v) <= self.depth and self.A.meets_deep(v, self.depth)

    def meets_deep(self, z, depth):
        return depth <= self.depth and len(z) <= self.depth and self.A.meets_deep(z, self.depth)

    def status(self, z, depth_bound):
        return MIXED if z in self else NONE


def connected_hull(A: TreeSet, depth: int, base: tuple = ()) -> TreeSet:
    """Union of the root rays that meet ``A`` arbitrarily deep, truncated at ``depth``.

    When no such ray exists (``A`` has no member at depth ``>= depth``) the
    singleton ``{base}`` is returned.
    """
    if not A.meets_deep((), depth):
        return FiniteTreeSet([base])
    return HullSet(A, depth)


def boundary_certificate(A: TreeSet, d: int, D: int, work_depth: Optional[int] = None) -> frozenset:
    """Depth-``D`` vertices whose subtree meets ``A`` at depth ``>= work_depth`` (default ``D``)."""
    work = D if work_depth is None else work_depth
    return frozenset(z for z in TreeSpec.homogeneous(d).level(D) if A.meets_deep(z, work))


def construct_A_empty(d: int, solution: RecursionSolution, eps: float = 1e-3, spacing: int = 1) -> AEmptySet:
    """Smallest ``r0`` whose certified visit-probability sum is below ``eps``."""
    if not solution.decay_rate < 1:
        raise ValueError("decay-rate estimate must be < 1")
    r0 = 1
    while solution.tail_sum(r0, spacing) >= eps:
        r0 += 1
    return AEmptySet(d, r0, spacing, solution.tail_sum(r0, spacing))


def region_key(A: TreeSet, B: Optional[TreeSet], depth_bound: int):
    """Orbit key lumping every subtree on which membership in ``A`` and ``B`` is constant.

    A vertex whose ancestors (itself included) are all ``'mixed'`` is its own
    class ``('v', v)``; otherwise it belongs to ``('r', z, h)`` where ``z`` is
    its first non-mixed ancestor and ``h`` the height above ``z``.
    """
    sets = [s for s in (A, B) if s is not None]
    memo: dict = {}

    def uniform(z):
        return all(s.status(z, depth_bound) != MIXED for s in sets)

    def key(v):
        k = memo.get(v)
        if k is not None:
            return k
        # climb to the nearest memoised ancestor, then derive keys downwards
        chain = [v]
        while chain[-1] and chain[-1][:-1] not in memo:
            chain.append(chain[-1][:-1])
        top = chain[-1]
        if top:
            k = memo[top[:-1]]
        else:
            k = ("r", (), 0) if uniform(()) else ("v", ())
            memo[()] = k
            chain.pop()
        for w in reversed(chain):
            if k[0] == "r":
                k = ("r", k[1], k[2] + 1)
            else:
                k = ("r", w, 0) if uniform(w) else ("v", w)
            memo[w] = k
        return k

    return key


@dataclass
class SurvivalEstimate:
    in_A: MCEstimate
    in_A_avoiding_B: MCEstimate
    window: int
    max_last_visit: int
    visiting_trials: int

    def to_dict(self) -> dict:
        return {
            "in_A": self.in_A.to_dict(),
            "in_A_avoiding_B": self.in_A_avoiding_B.to_dict(),
            "window": self.window,
            "max_last_visit": self.max_last_visit,
            "visiting_trials": self.visiting_trials,
        }


def survival_without_visiting(
    d: int,
    law: OffspringLaw,
    x: tuple,
    A: TreeSet,
    B: Optional[TreeSet],
    horizon: int,
    cap: float,
    trials: int,
    master_seed: int,
    window: Optional[int] = None,
) -> SurvivalEstimate:
    """Frequencies of survival in ``A`` and of survival in ``A`` without ever visiting ``B``.

    Survival in ``A`` is read off a finite run as "``A`` occupied in some
    generation of the last ``window`` generations" (default ``horizon // 10``).
    A trial stopped by ``cap`` is judged on the generations before the stop.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    window = max(1, horizon // 10) if window is None else window
    tree = HomogeneousTree(d)
    key = region_key(A, B, len(x) + horizon)
    graph = ClassGraph(tree.kernel(), x, key=key)
    ev = Evolver(graph, law)
    flag_a: list = []
    flag_b: list = []
    by_root: dict = {}

    def flags(j):
        while len(flag_a) <= j:
            i = len(flag_a)
            k = graph.keys[i]
            # membership is constant on a lumped region, so read it at the region root
            v = k[1] if k[0] == "r" else graph.reps[i]
            f = by_root.get(v) if k[0] == "r" else None
            if f is None:
                f = (v in A, B is not None and v in B)
                if k[0] == "r":
                    by_root[v] = f
            flag_a.append(f[0])
            flag_b.append(f[1])
        return flag_a[j], flag_b[j]

    surv, surv_avoid, max_last, visiting = 0, 0, -1, 0
    for t in range(trials):
        rng = trial_rng(master_seed, t)
        last_a, seen_b = -1, False
        for n, state, _ in ev.generations(rng, horizon, cap):
            for j in state:
                fa, fb = flags(j)
                if fa:
                    last_a = n
                seen_b = seen_b or fb
        if last_a >= 0:
            visiting += 1
            max_last = max(max_last, last_a)
        ok = last_a > horizon - window
        surv += ok
        surv_avoid += ok and not seen_b
    return SurvivalEstimate(
        MCEstimate.from_counts(surv, trials, master_seed),
        MCEstimate.from_counts(surv_avoid, trials, master_seed),
        window,
        max_last,
        visiting,
    )
