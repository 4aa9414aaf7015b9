"""Lazily generated infinite graphs, transition kernels and their restrictions.

Vertices are plain hashable tuples whose encoding is canonical for the graph
family they belong to:

* homogeneous tree ``T_d``: a tuple of child indices read from the root ``()``.
  The root has ``d`` children (indices ``0..d-1``), every other vertex has
  ``d-1`` children (indices ``0..d-2``);
* Cartesian product: a pair ``(v1, v2)`` of factor vertices;
* free product of two groups: a reduced word, i.e. a tuple of syllables
  ``(factor, element)`` with alternating factors and no identity elements.

Nothing is ever materialised globally.  Exact computations walk finite balls
(:func:`distribution`, :func:`n_step_prob`), and large-depth computations run on
the orbit-class quotient built by :class:`ClassGraph`.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Callable, Hashable, Optional

import numpy as np

Vertex = Hashable
Row = list  # list[tuple[Vertex, float]]

STOCHASTIC = "stochastic"
SUBSTOCHASTIC = "substochastic"

ROW_TOL = 1e-12


class EncodingError(ValueError):
    """A vertex encoding is not valid for the graph family."""


class SubgraphError(ValueError):
    """A subgraph specification is inconsistent."""


class NormalizationError(ValueError):
    """A restricted kernel has a row that cannot be renormalised."""


# ---------------------------------------------------------------------------
# graph families
# ---------------------------------------------------------------------------


class HomogeneousTree:
    """The ``d``-regular tree with simple random walk."""

    def __init__(self, degree: int):
        if int(degree) != degree or degree < 2:
            raise EncodingError(f"tree degree must be an integer >= 2, got {degree!r}")
        self.degree = int(degree)
        self.root: tuple = ()

    def __repr__(self):
        return f"HomogeneousTree({self.degree})"

    def n_children(self, v: tuple) -> int:
        return self.degree if len(v) == 0 else self.degree - 1

    def validate(self, v) -> None:
        if not isinstance(v, tuple):
            raise EncodingError(f"tree vertex must be a tuple, got {v!r}")
        for k, c in enumerate(v):
            bound = self.degree if k == 0 else self.degree - 1
            if not isinstance(c, (int, np.integer)) or not 0 <= c < bound:
                raise EncodingError(f"invalid child index {c!r} at depth {k} in {v!r}")

    def adjacent(self, v: tuple) -> list:
        out = [v[:-1]] if v else []
        out.extend(v + (i,) for i in range(self.n_children(v)))
        return out

    def neighbors(self, v: tuple) -> Row:
        p = 1.0 / self.degree
        return [(w, p) for w in self.adjacent(v)]

    @staticmethod
    def distance(u: tuple, v: tuple) -> int:
        k = 0
        for a, b in zip(u, v):
            if a != b:
                break
            k += 1
        return len(u) + len(v) - 2 * k

    def orbit_key(self, base: tuple) -> Callable:
        # the stabiliser of ``base`` acts transitively on each sphere around it
        dist = self.distance
        return lambda v: dist(base, v)

    def geodesic_key(self, target: tuple) -> Callable:
        """Orbit key for the pointwise stabiliser of the root-to-``target`` geodesic."""
        def key(v):
            k = 0
            for a, b in zip(v, target):
                if a != b:
                    break
                k += 1
            return (k, len(v) - k)

        return key

    def kernel(self) -> "TransitionKernel":
        return TransitionKernel(
            neighbor_fn=self.neighbors,
            kind=STOCHASTIC,
            root=self.root,
            validate=self.validate,
            orbit_key=self.orbit_key,
            distance=self.distance,
            name=f"srw-tree-{self.degree}",
        )


class CartesianProduct:
    """Product of two homogeneous trees with kernel ``a1 P1 (x) I2 + a2 I1 (x) P2``."""

    def __init__(self, degree1: int, degree2: int, alpha1: float, alpha2: Optional[float] = None):
        if alpha2 is None:
            alpha2 = 1.0 - alpha1
        if alpha1 <= 0 or alpha2 <= 0 or abs(alpha1 + alpha2 - 1.0) > 1e-12:
            raise EncodingError(f"product weights must be positive and sum to 1, got {alpha1}, {alpha2}")
        self.factors = (HomogeneousTree(degree1), HomogeneousTree(degree2))
        self.alphas = (float(alpha1), float(alpha2))
        self.root = ((), ())

    def __repr__(self):
        d1, d2 = (f.degree for f in self.factors)
        return f"CartesianProduct({d1}, {d2}, {self.alphas[0]!r}, {self.alphas[1]!r})"

    def validate(self, v) -> None:
        if not (isinstance(v, tuple) and len(v) == 2):
            raise EncodingError(f"product vertex must be a pair, got {v!r}")
        self.factors[0].validate(v[0])
        self.factors[1].validate(v[1])

    def adjacent(self, v) -> list:
        v1, v2 = v
        return [(u1, v2) for u1 in self.factors[0].adjacent(v1)] + [
            (v1, u2) for u2 in self.factors[1].adjacent(v2)
        ]

    def neighbors(self, v) -> Row:
        v1, v2 = v
        a1, a2 = self.alphas
        out = [((u1, v2), a1 * p) for u1, p in self.factors[0].neighbors(v1)]
        out.extend(((v1, u2), a2 * p) for u2, p in self.factors[1].neighbors(v2))
        return out

    def distance(self, u, v) -> int:
        return HomogeneousTree.distance(u[0], v[0]) + HomogeneousTree.distance(u[1], v[1])

    def orbit_key(self, base) -> Callable:
        b1, b2 = base
        dist = HomogeneousTree.distance
        return lambda v: (dist(b1, v[0]), dist(b2, v[1]))

    def kernel(self) -> "TransitionKernel":
        return TransitionKernel(
            neighbor_fn=self.neighbors,
            kind=STOCHASTIC,
            root=self.root,
            validate=self.validate,
            orbit_key=self.orbit_key,
            distance=self.distance,
            name=repr(self),
        )


class CyclicGroup:
    """Z_k with generators ``{1, k-1}``; elements are ints ``0..k-1``."""

    def __init__(self, order: int):
        if int(order) != order or order < 2:
            raise EncodingError(f"cyclic group order must be >= 2, got {order!r}")
        self.order = int(order)
        self.identity = 0
        self.generators = [1] if self.order == 2 else [1, self.order - 1]

    def __repr__(self):
        return f"CyclicGroup({self.order})"

    def validate_element(self, a) -> None:
        if not isinstance(a, (int, np.integer)) or not 0 < a < self.order:
            raise EncodingError(f"{a!r} is not a non-identity element of Z_{self.order}")

    def mul(self, a, b):
        return (a + b) % self.order

    def inv(self, a):
        return (-a) % self.order

    def is_identity(self, a) -> bool:
        return a == 0

    def word_length(self, a) -> int:
        return min(a, self.order - a)

    def shape(self, a, uniform: bool):
        return a


class FreeGroup:
    """Free group of finite rank; elements are reduced tuples of letters ``+-1..+-r``."""

    def __init__(self, rank: int):
        if int(rank) != rank or rank < 1:
            raise EncodingError(f"free group rank must be >= 1, got {rank!r}")
        self.rank = int(rank)
        self.identity: tuple = ()
        self.generators = [(s * i,) for i in range(1, self.rank + 1) for s in (1, -1)]

    def __repr__(self):
        return f"FreeGroup({self.rank})"

    def validate_element(self, a) -> None:
        if not isinstance(a, tuple) or not a:
            raise EncodingError(f"{a!r} is not a non-identity free-group element")
        for k, x in enumerate(a):
            if not isinstance(x, (int, np.integer)) or x == 0 or abs(x) > self.rank:
                raise EncodingError(f"invalid letter {x!r} in {a!r}")
            if k and a[k - 1] == -x:
                raise EncodingError(f"free-group word {a!r} is not reduced")

    def mul(self, a: tuple, b: tuple) -> tuple:
        out = list(a)
        for x in b:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
        return tuple(out)

    def inv(self, a: tuple) -> tuple:
        return tuple(-x for x in reversed(a))

    def is_identity(self, a) -> bool:
        return len(a) == 0

    def word_length(self, a) -> int:
        return len(a)

    def shape(self, a, uniform: bool):
        # with uniform weights on the 2r generators the Cayley graph is T_{2r}
        return len(a) if uniform else a


class FreeProductGroup:
    """Free product ``G1 * G2`` with step law ``alpha mu1 + (1 - alpha) mu2``."""

    def __init__(self, factor1, factor2, alpha: float, mu1: Optional[dict] = None, mu2: Optional[dict] = None):
        if not 0 < alpha < 1:
            raise EncodingError(f"mixing weight must lie in (0, 1), got {alpha!r}")
        self.factors = (factor1, factor2)
        self.alpha = float(alpha)
        self.mus = (self._law(factor1, mu1), self._law(factor2, mu2))
        self.root: tuple = ()
        self._uniform = tuple(
            len(set(mu.values())) == 1 and len(mu) == len(f.generators) for f, mu in zip(self.factors, self.mus)
        )

    @staticmethod
    def _law(factor, mu):
        if mu is None:
            return {g: 1.0 / len(factor.generators) for g in factor.generators}
        mu = {g: float(p) for g, p in mu.items() if p > 0}
        for g in mu:
            if g not in factor.generators:
                raise EncodingError(f"{g!r} is not a generator of {factor!r}")
        if abs(sum(mu.values()) - 1.0) > 1e-12:
            raise EncodingError("step law must be a probability measure")
        return mu

    def __repr__(self):
        return f"FreeProductGroup({self.factors[0]!r}, {self.factors[1]!r}, alpha={self.alpha!r})"

    @property
    def weights(self) -> tuple:
        return (self.alpha, 1.0 - self.alpha)

    def validate(self, w) -> None:
        if not isinstance(w, tuple):
            raise EncodingError(f"free-product word must be a tuple, got {w!r}")
        prev = None
        for syl in w:
            if not (isinstance(syl, tuple) and len(syl) == 2 and syl[0] in (1, 2)):
                raise EncodingError(f"bad syllable {syl!r} in {w!r}")
            i, s = syl
            if i == prev:
                raise EncodingError(f"consecutive letters from factor {i} in {w!r}")
            self.factors[i - 1].validate_element(s)
            prev = i

    def mul(self, w: tuple, u: tuple) -> tuple:
        out = list(w)
        for i, s in u:
            if out and out[-1][0] == i:
                merged = self.factors[i - 1].mul(out.pop()[1], s)
                if not self.factors[i - 1].is_identity(merged):
                    out.append((i, merged))
            else:
                out.append((i, s))
        return tuple(out)

    def inv(self, w: tuple) -> tuple:
        return tuple((i, self.factors[i - 1].inv(s)) for i, s in reversed(w))

    def step(self, w: tuple, factor: int, g) -> tuple:
        return self.mul(w, ((factor, g),))

    def neighbors(self, w: tuple) -> Row:
        acc: dict = {}
        for i, (weight, mu) in enumerate(zip(self.weights, self.mus), start=1):
            for g, p in mu.items():
                y = self.step(w, i, g)
                acc[y] = acc.get(y, 0.0) + weight * p
        return list(acc.items())

    def adjacent(self, w: tuple) -> list:
        return [y for y, _ in self.neighbors(w)]

    def length(self, w: tuple) -> int:
        return sum(self.factors[i - 1].word_length(s) for i, s in w)

    def distance(self, u: tuple, v: tuple) -> int:
        return self.length(self.mul(self.inv(u), v))

    def shape(self, w: tuple) -> tuple:
        return tuple((i, self.factors[i - 1].shape(s, self._uniform[i - 1])) for i, s in w)

    def orbit_key(self, base: tuple) -> Callable:
        inv_base = self.inv(base)
        return lambda v: self.shape(self.mul(inv_base, v))

    def kernel(self) -> "TransitionKernel":
        return TransitionKernel(
            neighbor_fn=self.neighbors,
            kind=STOCHASTIC,
            root=self.root,
            validate=self.validate,
            orbit_key=self.orbit_key,
            distance=self.distance,
            name=repr(self),
        )


# ---------------------------------------------------------------------------
# kernels and subgraphs
# ---------------------------------------------------------------------------


def _accept(v) -> None:
    return None


@dataclass(frozen=True)
class TransitionKernel:
    """Nearest-neighbour transition kernel on a generated graph.

    ``orbit_key(base)`` returns a function mapping vertices to orbit labels of a
    kernel-preserving group fixing ``base``; the orbit of ``base`` itself must
    be ``{base}``.  ``distance`` must be a lower bound on the number of steps
    between two vertices.  Both are optional accelerations.
    """

    neighbor_fn: Callable[[Vertex], Row]
    kind: str = STOCHASTIC
    root: Vertex = ()
    validate: Callable[[Vertex], None] = _accept
    orbit_key: Optional[Callable[[Vertex], Callable]] = None
    distance: Optional[Callable[[Vertex, Vertex], int]] = None
    name: str = ""
    membership: Optional[Callable[[Vertex], bool]] = field(default=None, compare=False)


@dataclass(frozen=True)
class SubgraphSpec:
    """Subset ``U`` of the vertices, given by a membership predicate.

    ``lumpable`` declares that, for every base vertex inside ``U``, membership
    is constant on the orbit classes of the parent kernel's ``orbit_key``.
    """

    membership: Callable[[Vertex], bool]
    base_vertex: Vertex
    lumpable: bool = False
    name: str = ""

    def __contains__(self, v) -> bool:
        return bool(self.membership(v))


def whole_graph(kernel: TransitionKernel) -> SubgraphSpec:
    return SubgraphSpec(lambda v: True, kernel.root, lumpable=True, name="whole")


def neighbors(kernel: TransitionKernel, v: Vertex) -> Row:
    """Row of ``kernel`` at ``v`` as a list of ``(neighbor, probability)``."""
    kernel.validate(v)
    return kernel.neighbor_fn(v)


def row_sum(kernel: TransitionKernel, v: Vertex) -> float:
    return math.fsum(p for _, p in kernel.neighbor_fn(v))


def restrict_kernel(kernel: TransitionKernel, sub: SubgraphSpec) -> TransitionKernel:
    """Substochastic kernel ``P_U``: keep only transitions between members of ``U``."""
    if not sub.membership(sub.base_vertex):
        raise SubgraphError(f"base vertex {sub.base_vertex!r} is not a member of {sub.name or 'U'}")
    member = sub.membership
    inner = kernel.neighbor_fn

    def neighbor_fn(x):
        return [(y, p) for y, p in inner(x) if member(y)]

    if kernel.membership is not None:
        outer = kernel.membership
        joint = lambda v: outer(v) and member(v)
    else:
        joint = member
    return replace(
        kernel,
        neighbor_fn=neighbor_fn,
        kind=SUBSTOCHASTIC,
        root=sub.base_vertex,
        orbit_key=kernel.orbit_key if sub.lumpable else None,
        name=f"{kernel.name}|{sub.name or 'U'}",
        membership=joint,
    )


def normalize_kernel(pU: TransitionKernel) -> TransitionKernel:
    """Stay-conditioned kernel ``Q_U``: divide each row of ``P_U`` by its sum.

    Rows already summing to one are left unchanged.  A row with zero mass
    raises :class:`NormalizationError` when it is first evaluated; the row at
    the kernel root is checked immediately.
    """
    inner = pU.neighbor_fn

    def neighbor_fn(x):
        row = inner(x)
        delta = math.fsum(p for _, p in row)
        if delta <= 0.0:
            raise NormalizationError(f"vertex {x!r} has no neighbour inside U")
        if abs(delta - 1.0) <= ROW_TOL:
            return row
        return [(y, p / delta) for y, p in row]

    out = replace(pU, neighbor_fn=neighbor_fn, kind=STOCHASTIC, name=f"normalized({pU.name})")
    neighbor_fn(pU.root)
    return out


def check_row(kernel: TransitionKernel, v: Vertex, tol: float = ROW_TOL) -> float:
    """Validate the row invariants at ``v`` and return the row sum."""
    row = neighbors(kernel, v)
    for _, p in row:
        if not p > 0.0:
            raise ValueError(f"non-positive probability {p!r} in row of {v!r}")
    s = math.fsum(p for _, p in row)
    if s > 1.0 + tol:
        raise ValueError(f"row sum {s!r} exceeds 1 at {v!r}")
    if kernel.kind == STOCHASTIC and abs(s - 1.0) > tol:
        raise ValueError(f"stochastic kernel has row sum {s!r} at {v!r}")
    return s


# ---------------------------------------------------------------------------
# exact dynamic programming on balls
# ---------------------------------------------------------------------------


def distribution(kernel: TransitionKernel, x: Vertex, n: int) -> dict:
    """Exact law ``y -> p^(n)(x, y)`` by forward DP over the ball of radius ``n``."""
    kernel.validate(x)
    cur = {x: 1.0}
    for _ in range(n):
        nxt: dict = defaultdict(float)
        for v, mass in cur.items():
            for y, p in kernel.neighbor_fn(v):
                nxt[y] += mass * p
        cur = nxt
    return dict(cur)


def _pruned_prob(kernel: TransitionKernel, x: Vertex, y: Vertex, n: int) -> float:
    dist = kernel.distance
    if dist is not None and dist(x, y) > n:
        return 0.0
    cur = {x: 1.0}
    for k in range(n):
        budget = n - k - 1
        nxt: dict = defaultdict(float)
        for v, mass in cur.items():
            for w, p in kernel.neighbor_fn(v):
                if dist is None or dist(w, y) <= budget:
                    nxt[w] += mass * p
        cur = nxt
        if not cur:
            return 0.0
    return cur.get(y, 0.0)


def n_step_prob(kernel: TransitionKernel, x: Vertex, y: Vertex, n: int, method: str = "auto") -> float:
    """Exact ``n``-step transition probability ``p^(n)(x, y)``.

    ``method='exact'`` walks the (pruned) ball vertex by vertex; ``'lumped'``
    runs on the orbit classes around ``x``; ``'auto'`` uses the classes when
    the kernel has an orbit key.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    kernel.validate(x)
    kernel.validate(y)
    if method == "exact" or (method == "auto" and kernel.orbit_key is None):
        return _pruned_prob(kernel, x, y, n)
    if method not in ("auto", "lumped"):
        raise ValueError(f"unknown method {method!r}")
    graph = ClassGraph(kernel, x)
    graph.ensure_radius(n)
    j = graph.index.get(graph.key(y))
    if j is None:
        return 0.0
    logv = graph.log_masses(n)[-1]
    return math.exp(logv[j] - graph.log_size[j])


# ---------------------------------------------------------------------------
# orbit-class quotient
# ---------------------------------------------------------------------------


def _group_logsumexp(vals: np.ndarray, starts: np.ndarray, counts: np.ndarray) -> np.ndarray:
    m = np.maximum.reduceat(vals, starts)
    finite = np.isfinite(m)
    shift = np.where(finite, m, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.add.reduceat(np.exp(vals - np.repeat(shift, counts)), starts)
        out = np.where(finite, shift + np.log(s), -np.inf)
    return out


class ClassGraph:
    """Quotient of a kernel by an orbit partition around a base vertex.

    Classes are discovered lazily.  Class ``0`` is ``{base}``.  Each expanded
    class carries its row of class-to-class probabilities (computed from its
    representative) and ``log_size`` (log of the number of vertices in the
    class, obtained from edge counting on the undirected support graph).
    """

    def __init__(self, kernel: TransitionKernel, base: Vertex, key: Optional[Callable] = None):
        if key is None:
            key = kernel.orbit_key(base) if kernel.orbit_key is not None else (lambda v: v)
        self.kernel = kernel
        self.base = base
        self.key = key
        k0 = key(base)
        self.reps: list = [base]
        self.keys: list = [k0]
        self.index: dict = {k0: 0}
        self.depth: list = [0]
        self.log_size: list = [0.0]
        self.rows: list = [None]
        self._nbrs: dict = {}
        self._width = 0
        self._dst_pad = np.zeros((0, 0), dtype=np.int64)
        self._prob_pad = np.zeros((0, 1))
        self._padded = 0

    def __len__(self):
        return len(self.reps)

    def _neighbors(self, i: int) -> Row:
        row = self._nbrs.get(i)
        if row is None:
            row = self.kernel.neighbor_fn(self.reps[i])
            self._nbrs[i] = row
        return row

    def _add_class(self, k, rep, parent: int) -> int:
        j = len(self.reps)
        self.reps.append(rep)
        self.keys.append(k)
        self.index[k] = j
        self.depth.append(self.depth[parent] + 1)
        self.rows.append(None)
        key = self.key
        fwd = sum(1 for y, _ in self._neighbors(parent) if key(y) == k)
        back = sum(1 for y, _ in self._neighbors(j) if self.index.get(key(y)) == parent)
        self.log_size.append(self.log_size[parent] + math.log(fwd) - math.log(max(back, 1)))
        return j

    def expand(self, i: int) -> tuple:
        row = self.rows[i]
        if row is not None:
            return row
        acc: dict = {}
        key = self.key
        for y, p in self._neighbors(i):
            k = key(y)
            j = self.index.get(k)
            if j is None:
                j = self._add_class(k, y, i)
            acc[j] = acc.get(j, 0.0) + p
        keys = self.keys
        items = sorted(acc.items(), key=lambda kv: keys[kv[0]])
        row = (np.array([j for j, _ in items], dtype=np.int64), np.array([p for _, p in items], dtype=float))
        self.rows[i] = row
        self._nbrs.pop(i, None)
        return row

    def ensure_radius(self, radius: int) -> None:
        """Expand every class at depth ``< radius``."""
        i = 0
        while i < len(self.reps):
            if self.depth[i] < radius:
                self.expand(i)
            i += 1

    def edges(self, radius: int) -> tuple:
        src, dst, prob = [], [], []
        for i, row in enumerate(self.rows):
            if row is None or self.depth[i] >= radius:
                continue
            d, p = row
            src.append(np.full(len(d), i, dtype=np.int64))
            dst.append(d)
            prob.append(p)
        if not src:
            e = np.zeros(0, dtype=np.int64)
            return e, e, np.zeros(0)
        return np.concatenate(src), np.concatenate(dst), np.concatenate(prob)

    def log_masses(self, n: int, radius: Optional[int] = None) -> list:
        """Log class masses ``log sum_{v in c} p^(k)(base, v)`` for ``k = 0..n``."""
        if radius is None:
            radius = n
        self.ensure_radius(radius)
        src, dst, prob = self.edges(radius)
        order = np.argsort(dst, kind="stable")
        src, dst, prob = src[order], dst[order], prob[order]
        with np.errstate(divide="ignore"):
            logp = np.log(prob)
        ncls = len(self.reps)
        if len(dst):
            uniq, starts, counts = np.unique(dst, return_index=True, return_counts=True)
        logv = np.full(ncls, -np.inf)
        logv[0] = 0.0
        out = [logv]
        for _ in range(n):
            nxt = np.full(ncls, -np.inf)
            if len(dst):
                nxt[uniq] = _group_logsumexp(logv[src] + logp, starts, counts)
            logv = nxt
            out.append(logv)
        return out

    # -- padded rows for vectorised sampling ---------------------------------

    def padded_rows(self, idx: np.ndarray) -> tuple:
        """Destination indices ``(len(idx), W)`` and probabilities ``(len(idx), W + 1)``.

        The last probability column is the killing mass ``1 - row sum``; padded
        destinations point at class ``0`` with probability zero.
        """
        top = int(idx.max()) if len(idx) else -1
        while self._padded <= top:
            self._pad_next()
        return self._dst_pad[idx], self._prob_pad[idx]

    def _pad_next(self) -> None:
        i = self._padded
        d, p = self.expand(i)
        if len(d) > self._width:
            self._repad(len(d))
        if i >= self._dst_pad.shape[0]:
            cap = max(16, 2 * self._dst_pad.shape[0])
            dst = np.zeros((cap, self._width), dtype=np.int64)
            prob = np.zeros((cap, self._width + 1))
            dst[: self._padded] = self._dst_pad[: self._padded]
            prob[: self._padded] = self._prob_pad[: self._padded]
            self._dst_pad, self._prob_pad = dst, prob
        self._dst_pad[i, :] = 0
        self._prob_pad[i, :] = 0.0
        self._dst_pad[i, : len(d)] = d
        self._prob_pad[i, : len(d)] = p
        self._prob_pad[i, -1] = max(0.0, 1.0 - float(p.sum()))
        self._padded += 1

    def _repad(self, width: int) -> None:
        cap = max(16, self._dst_pad.shape[0])
        dst = np.zeros((cap, width), dtype=np.int64)
        prob = np.zeros((cap, width + 1))
        for i in range(self._padded):
            d, p = self.rows[i]
            dst[i, : len(d)] = d
            prob[i, : len(d)] = p
            prob[i, -1] = max(0.0, 1.0 - float(p.sum()))
        self._dst_pad, self._prob_pad, self._width = dst, prob, width


def ball(kernel: TransitionKernel, x: Vertex, radius: int) -> dict:
    """Vertices within ``radius`` steps of ``x`` mapped to their step distance."""
    seen = {x: 0}
    frontier = [x]
    for r in range(1, radius + 1):
        nxt = []
        for v in frontier:
            for y, _ in kernel.neighbor_fn(v):
                if y not in seen:
                    seen[y] = r
                    nxt.append(y)
        frontier = nxt
    return seen
