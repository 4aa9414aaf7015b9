"""Branching random walks and their induced versions on subgraphs.

Populations are evolved as counts, never as particle objects.  A generation is
a vector of counts over the classes of a :class:`ClassGraph`: single vertices
in general, or whole orbit classes around the start vertex when the subgraph
is declared lumpable.  Lumped graphs are numbered breadth-first up to the
horizon and use dense arrays; the rest use sparse dicts.  Projecting a BRW onto an orbit partition of
its kernel gives a multi-type BRW with the same class counts in law, so both
views produce the same total population and the same occupancy of the start
vertex (whose class is a singleton).

Random streams: trial ``t`` of a run seeded with ``master_seed`` uses
``numpy.random.default_rng(SeedSequence([master_seed, t]))``.  Occupied classes
are visited in index order (dense) or orbit-key order (sparse), so a trial's
outcome depends only on ``(master_seed, t)`` and the parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .kernel_core import (
    ClassGraph,
    SubgraphSpec,
    SubgraphError,
    TransitionKernel,
    Vertex,
    restrict_kernel,
    whole_graph,
)
from .spectral_lab import stay_log_series, uniform_stay_mass, _top_half_rate

EXTINCT = "extinct"
ALIVE = "alive_at_horizon"
CAP = "cap_exceeded"

# above this many expected children a class is evolved by its Gaussian approximation
_GAUSS_LIMIT = 1e6


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(trial)]))


# ---------------------------------------------------------------------------
# offspring laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OffspringLaw:
    """Offspring distribution.

    ``variant`` is one of ``'explicit_pmf'`` (finite support ``pmf``),
    ``'edge_breeding'`` (``P(n) = (lam d)^n / (1 + lam d)^(n+1)``) or
    ``'power_tail'`` (``P(n)`` proportional to ``n^-a (log n)^-b`` for ``n >= 2``,
    normalised over ``tail_support`` points).
    """

    variant: str
    pmf: tuple = ()
    lam: float = 0.0
    degree: int = 1
    exponent: float = 0.0
    log_exponent: float = 0.0
    tail_support: int = 200_000

    @classmethod
    def from_pmf(cls, pmf) -> "OffspringLaw":
        if isinstance(pmf, dict):
            top = max(pmf)
            pmf = [float(pmf.get(k, 0.0)) for k in range(top + 1)]
        pmf = tuple(float(p) for p in pmf)
        if any(p < 0 for p in pmf) or abs(math.fsum(pmf) - 1.0) > 1e-12:
            raise ValueError("pmf must be non-negative and sum to 1")
        return cls("explicit_pmf", pmf=pmf)

    @classmethod
    def point_mass(cls, k: int) -> "OffspringLaw":
        return cls.from_pmf({k: 1.0})

    @classmethod
    def edge_breeding(cls, lam: float, degree: int) -> "OffspringLaw":
        if lam <= 0:
            raise ValueError("lambda must be positive")
        return cls("edge_breeding", lam=float(lam), degree=int(degree))

    @classmethod
    def geometric(cls, mean: float) -> "OffspringLaw":
        """Edge-breeding law with ``lam * d = mean``."""
        return cls.edge_breeding(mean, 1)

    @classmethod
    def power_tail(cls, a: float, b: float, support: int = 200_000) -> "OffspringLaw":
        return cls("power_tail", exponent=float(a), log_exponent=float(b), tail_support=int(support))

    # -- distribution ---------------------------------------------------------

    @property
    def _ratio(self) -> float:
        ld = self.lam * self.degree
        return ld / (1.0 + ld)

    def _power_table(self) -> np.ndarray:
        n = np.arange(2, self.tail_support + 1, dtype=float)
        w = n ** -self.exponent * np.log(n) ** -self.log_exponent
        return np.concatenate([[0.0, 0.0], w / w.sum()])

    def prob(self, k: int) -> float:
        if k < 0:
            return 0.0
        if self.variant == "explicit_pmf":
            return self.pmf[k] if k < len(self.pmf) else 0.0
        if self.variant == "edge_breeding":
            q = self._ratio
            return (1.0 - q) * q**k
        table = self._power_table()
        return float(table[k]) if k < len(table) else 0.0

    @property
    def mean(self) -> float:
        if self.variant == "explicit_pmf":
            return math.fsum(k * p for k, p in enumerate(self.pmf))
        if self.variant == "edge_breeding":
            return self.lam * self.degree
        t = self._power_table()
        return float(np.dot(np.arange(len(t)), t))

    @property
    def variance(self) -> float:
        if self.variant == "explicit_pmf":
            m = self.mean
            return math.fsum((k - m) ** 2 * p for k, p in enumerate(self.pmf))
        if self.variant == "edge_breeding":
            m = self.mean
            return m * (1.0 + m)
        t = self._power_table()
        k = np.arange(len(t))
        return float(np.dot(k * k, t) - self.mean**2)

    def sample(self, rng: np.random.Generator) -> int:
        return int(self.sample_totals(np.array([1]), rng)[0])

    def sample_totals(self, counts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Total offspring of ``counts[i]`` independent parents, for each ``i``."""
        counts = np.asarray(counts, dtype=np.int64)
        out = np.zeros(len(counts), dtype=np.int64)
        live = counts > 0
        if not live.any():
            return out
        if self.variant == "edge_breeding":
            out[live] = rng.negative_binomial(counts[live], 1.0 - self._ratio)
        elif self.variant == "explicit_pmf":
            nz = [k for k, p in enumerate(self.pmf) if p > 0]
            if len(nz) == 1:
                out[live] = counts[live] * nz[0]
            else:
                draws = rng.multinomial(counts[live], np.asarray(self.pmf))
                out[live] = draws @ np.arange(len(self.pmf))
        else:
            t = self._power_table()
            draws = rng.multinomial(counts[live], t)
            out[live] = draws @ np.arange(len(t))
        return out


def sample_offspring(law: OffspringLaw, rng: np.random.Generator) -> int:
    return law.sample(rng)


@dataclass
class L2LogLCheck:
    partial_sum: float
    tail_bound: float
    status: str  # finite | infinite | indeterminate


def l2logl_check(law: OffspringLaw, truncation: int = 2000) -> L2LogLCheck:
    """Partial sum of ``E[L^2 log L]`` up to ``truncation`` plus a tail bound."""
    if law.variant == "explicit_pmf":
        s = math.fsum(p * k * k * math.log(k) for k, p in enumerate(law.pmf) if k >= 2)
        return L2LogLCheck(s, 0.0, "finite")
    if law.variant == "edge_breeding":
        q = law._ratio
        ks = np.arange(2, truncation + 1, dtype=float)
        s = float(np.sum((1.0 - q) * q**ks * ks * ks * np.log(ks)))
        # n^2 log n <= n^3 and the ratio of consecutive n^3 q^n terms is below r
        t = truncation + 1
        r = ((t + 1) / t) ** 3 * q
        if r >= 1.0:
            return L2LogLCheck(s, math.inf, "indeterminate")
        bound = (1.0 - q) * q**t * t**3 / (1.0 - r)
        return L2LogLCheck(s, bound, "finite")
    a, b = law.exponent, law.log_exponent
    t = law._power_table()
    ks = np.arange(2, min(truncation, len(t) - 1) + 1, dtype=float)
    s = float(np.sum(t[2 : len(ks) + 2] * ks * ks * np.log(ks)))
    # integral test on n^(2-a) (log n)^(1-b)
    if a < 3 or (a == 3 and b <= 2):
        return L2LogLCheck(s, math.inf, "infinite")
    return L2LogLCheck(s, math.nan, "indeterminate" if a == 3 else "finite")


# ---------------------------------------------------------------------------
# generations
# ---------------------------------------------------------------------------


@dataclass
class ParticleGeneration:
    counts: dict
    generation: int = 0
    cap_hit: bool = False

    @property
    def total(self) -> int:
        return int(sum(self.counts.values()))


def step_induced(
    gen: ParticleGeneration,
    P: TransitionKernel,
    U: Optional[SubgraphSpec],
    law: OffspringLaw,
    rng: np.random.Generator,
    cap: Optional[int] = None,
) -> ParticleGeneration:
    """One generation of the induced BRW at vertex level.

    Every particle at ``x`` has ``law``-many children, each placed at a
    ``P``-neighbour of ``x``; children landing outside ``U`` are discarded.
    If the new population exceeds ``cap`` it is truncated to ``cap`` particles
    by uniform thinning and ``cap_hit`` is set.
    """
    member = U.membership if U is not None else (lambda v: True)
    out: dict = {}
    for x in sorted(gen.counts):
        c = gen.counts[x]
        if c <= 0:
            continue
        k = int(law.sample_totals(np.array([c]), rng)[0])
        if k == 0:
            continue
        row = P.neighbor_fn(x)
        probs = np.array([p for _, p in row])
        placed = rng.multinomial(k, np.append(probs, max(0.0, 1.0 - probs.sum())))
        for (y, _), n in zip(row, placed[:-1]):
            if n and member(y):
                out[y] = out.get(y, 0) + int(n)
    cap_hit = False
    total = sum(out.values())
    if cap is not None and total > cap:
        cap_hit = True
        keys = sorted(out)
        kept = rng.multivariate_hypergeometric(np.array([out[k] for k in keys]), cap)
        out = {k: int(n) for k, n in zip(keys, kept) if n}
    return ParticleGeneration(out, gen.generation + 1, cap_hit or gen.cap_hit)


def _total(state) -> float:
    return state.sum() if isinstance(state, np.ndarray) else sum(state.values())


def _at(state, j: int) -> float:
    if isinstance(state, np.ndarray):
        return state[j] if j < len(state) else 0
    return state.get(j, 0)


class Evolver:
    """Vectorised count evolution on a :class:`ClassGraph`.

    With ``dense_radius`` the graph is expanded breadth-first up to that
    radius once, which fixes the class numbering independently of any
    trajectory, and counts are kept in dense arrays.  Otherwise counts are
    sparse dicts and occupied classes are processed in orbit-key order.
    """

    def __init__(self, graph: ClassGraph, law: OffspringLaw, dense_radius: Optional[int] = None):
        self.graph = graph
        self.law = law
        self.dense = dense_radius is not None
        if self.dense:
            graph.ensure_radius(dense_radius)
            inner = np.array([i for i in range(len(graph)) if graph.depth[i] < dense_radius], dtype=np.int64)
            graph.padded_rows(inner)
            self.size = len(graph)
            self._dst, self._prob = graph.padded_rows(np.arange(len(inner), dtype=np.int64))
            self.radius = dense_radius

    def _ordered(self, occ: dict) -> list:
        keys = self.graph.keys
        return sorted(occ, key=keys.__getitem__)

    def _rows(self, idx: np.ndarray) -> tuple:
        if self.dense:
            return self._dst[idx], self._prob[idx]
        # expand only the occupied classes; padding the whole prefix of the
        # class list would expand the graph breadth-first
        rows = [self.graph.expand(int(i)) for i in idx]
        w = max(len(d) for d, _ in rows)
        dst = np.zeros((len(rows), w), dtype=np.int64)
        prob = np.zeros((len(rows), w + 1))
        for r, (d, p) in enumerate(rows):
            dst[r, : len(d)] = d
            prob[r, : len(d)] = p
            prob[r, -1] = max(0.0, 1.0 - float(p.sum()))
        return dst, prob

    def _place(self, counts: np.ndarray, prob: np.ndarray, rng, mode: str) -> np.ndarray:
        law = self.law
        if mode == "exact":
            kids = law.sample_totals(counts.astype(np.int64), rng)
            return rng.multinomial(kids, prob)[:, :-1]
        m, var = law.mean, law.variance
        p = prob[:, :-1]
        lam = counts[:, None] * m * p
        placed = np.zeros_like(lam)
        small = (lam > 0.0) & (lam < _GAUSS_LIMIT)
        placed[small] = rng.poisson(lam[small])
        big = lam >= _GAUSS_LIMIT
        if big.any():
            cb, pb = np.broadcast_to(counts[:, None], p.shape)[big], p[big]
            sd = np.sqrt(cb * (pb * pb * var + m * pb * (1.0 - pb)))
            placed[big] = np.maximum(0.0, np.rint(rng.normal(lam[big], sd)))
        return placed

    def generations(
        self,
        rng: np.random.Generator,
        horizon: int,
        cap: float = math.inf,
        continue_after_cap: bool = False,
        start: Optional[dict] = None,
    ) -> Iterator[tuple]:
        """Yield ``(n, counts, mode)`` for ``n = 0..``; ``mode`` is ``'exact'`` or ``'approx'``.

        ``counts`` is a dense array or a sparse ``{class: count}`` dict.  The
        walk stops after extinction, after ``horizon`` generations, or once the
        total exceeds ``cap`` (that generation is yielded first) unless
        ``continue_after_cap``; from then on children are placed with
        Poisson/Gaussian approximations.
        """
        if self.dense and horizon > self.radius:
            raise ValueError(f"horizon {horizon} exceeds the prebuilt radius {self.radius}")
        start = {0: 1} if start is None else start
        mode = "exact"
        if self.dense:
            state = np.zeros(self.size, dtype=np.int64)
            for j, c in start.items():
                state[j] = c
        else:
            state = dict(start)
        yield 0, state, mode
        for n in range(1, horizon + 1):
            if self.dense:
                idx = np.flatnonzero(state)
                c = state[idx]
            else:
                idx = np.array(self._ordered(state), dtype=np.int64)
                c = np.array([state[i] for i in idx], dtype=np.int64 if mode == "exact" else float)
            dst, prob = self._rows(idx)
            placed = self._place(c, prob, rng, mode)
            if self.dense:
                new = np.bincount(dst.ravel(), weights=placed.ravel(), minlength=self.size)
                state = new.astype(np.int64) if mode == "exact" else new
                total = state.sum()
            else:
                mask = placed > 0
                d, v = dst[mask], placed[mask]
                uniq, inv = np.unique(d, return_inverse=True)
                if mode == "exact":
                    sums = np.zeros(len(uniq), dtype=np.int64)
                    np.add.at(sums, inv, v.astype(np.int64))
                    state = {int(k): int(x) for k, x in zip(uniq, sums)}
                else:
                    sums = np.bincount(inv, weights=v)
                    state = {int(k): float(x) for k, x in zip(uniq, sums)}
                total = sum(state.values())
            yield n, state, mode
            if total == 0:
                return
            if total > cap:
                if not continue_after_cap:
                    return
                if mode == "exact":
                    mode = "approx"
                    if self.dense:
                        state = state.astype(float)


@dataclass
class TrialOutcome:
    status: str
    extinct_at: Optional[int]
    local_visits: int
    population: list = field(repr=False)
    approx_from: Optional[int] = None

    @property
    def persisted(self) -> bool:
        return self.status in (ALIVE, CAP)


def make_evolver(
    P: TransitionKernel, U: Optional[SubgraphSpec], law: OffspringLaw, x: Vertex, horizon: int, lumped: bool = True
) -> Evolver:
    """Evolver for the induced BRW in ``U`` started at ``x``.

    Lumpable subgraphs get a dense, prebuilt orbit-class graph; everything
    else runs vertex by vertex.
    """
    if U is None:
        U = whole_graph(P)
    if not U.membership(x):
        raise SubgraphError(f"start vertex {x!r} is not in {U.name or 'U'}")
    pU = restrict_kernel(P, U)
    if lumped and pU.orbit_key is not None:
        return Evolver(ClassGraph(pU, x), law, dense_radius=horizon)
    return Evolver(ClassGraph(pU, x, key=lambda v: v), law)


def _run_trial(evolver: Evolver, rng, horizon: int, cap: float, continue_after_cap: bool) -> TrialOutcome:
    pop: list = []
    visits = 0
    status, extinct_at, approx_from = ALIVE, None, None
    capped = False
    for n, occ, mode in evolver.generations(rng, horizon, cap, continue_after_cap):
        if mode == "approx" and approx_from is None:
            approx_from = n
        total = _total(occ)
        pop.append(float(total) if mode == "approx" else int(total))
        if n > 0 and _at(occ, 0) > 0:
            visits += 1
        if total == 0:
            status, extinct_at = EXTINCT, n
            break
        if total > cap:
            capped = True
    if capped and status != EXTINCT:
        status = CAP
    return TrialOutcome(status, extinct_at, visits, pop, approx_from)


def simulate_induced(
    P: TransitionKernel,
    U: Optional[SubgraphSpec],
    law: OffspringLaw,
    x: Vertex,
    horizon: int,
    cap: float,
    rng: np.random.Generator,
    continue_after_cap: bool = False,
    lumped: bool = True,
) -> TrialOutcome:
    """Run the induced BRW from one particle at ``x`` until extinction, horizon or cap.

    ``local_visits`` counts the generations ``1..horizon`` in which ``x`` is
    occupied, so it never exceeds ``horizon``.  With ``continue_after_cap`` the run goes on to the horizon in
    the approximate large-population mode so that local visits can still be
    tracked; the status stays ``cap_exceeded`` unless the process dies out.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    evolver = make_evolver(P, U, law, x, horizon, lumped)
    return _run_trial(evolver, rng, horizon, cap, continue_after_cap)


@dataclass
class MCEstimate:
    successes: int
    trials: int
    estimate: float
    ci_low: float
    ci_high: float
    master_seed: int
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_counts(cls, successes: int, trials: int, master_seed: int, **extra) -> "MCEstimate":
        lo, hi = proportion_confint(successes, trials, alpha=0.05, method="wilson")
        return cls(successes, trials, successes / trials, float(lo), float(hi), master_seed, dict(extra))

    def to_dict(self) -> dict:
        return {
            "successes": self.successes,
            "trials": self.trials,
            "estimate": self.estimate,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "master_seed": self.master_seed,
            **self.extra,
        }


def run_trials(
    P: TransitionKernel,
    U: Optional[SubgraphSpec],
    law: OffspringLaw,
    x: Vertex,
    horizon: int,
    cap: float,
    trials: int,
    master_seed: int,
    continue_after_cap: bool = False,
    lumped: bool = True,
) -> list:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    evolver = make_evolver(P, U, law, x, horizon, lumped)
    return [
        _run_trial(evolver, trial_rng(master_seed, t), horizon, cap, continue_after_cap) for t in range(trials)
    ]


def persistence_probability(
    P: TransitionKernel,
    U: Optional[SubgraphSpec],
    law: OffspringLaw,
    x: Vertex,
    horizon: int,
    cap: float,
    trials: int,
    master_seed: int,
    local_threshold: int = 10,
    continue_after_cap: bool = False,
) -> MCEstimate:
    """Fraction of trials alive at the horizon or over the cap, with a Wilson 95% interval.

    ``extra`` holds the fraction of persisting trials whose local visits exceed
    ``local_threshold`` and the maximum local-visit count.
    """
    outcomes = run_trials(P, U, law, x, horizon, cap, trials, master_seed, continue_after_cap)
    return summarize_outcomes(outcomes, master_seed, local_threshold)


def summarize_outcomes(outcomes: list, master_seed: int, local_threshold: int = 10) -> MCEstimate:
    persisting = [o for o in outcomes if o.persisted]
    heavy = sum(1 for o in persisting if o.local_visits > local_threshold)
    extra = {
        "cap_exceeded": sum(1 for o in outcomes if o.status == CAP),
        "local_threshold": local_threshold,
        "local_heavy": heavy,
        "local_heavy_fraction": heavy / len(persisting) if persisting else 0.0,
        "max_local_visits": max((o.local_visits for o in outcomes), default=0),
    }
    return MCEstimate.from_counts(len(persisting), len(outcomes), master_seed, **extra)


def population_quantiles(outcomes: list, qs=(0.1, 0.5, 0.9)) -> list:
    """Per-generation quantiles of the population (extinct trials count as 0)."""
    H = max(len(o.population) for o in outcomes)
    rows = []
    for n in range(H):
        vals = np.array([o.population[n] if n < len(o.population) else 0 for o in outcomes], dtype=float)
        rows.append((n, *np.quantile(vals, qs)))
    return rows


# ---------------------------------------------------------------------------
# first-moment and martingale diagnostics
# ---------------------------------------------------------------------------


@dataclass
class GrowthCheck:
    rate: float
    m: float
    zeta: float
    log_mean: np.ndarray = field(repr=False)
    empirical_mean: Optional[np.ndarray] = field(default=None, repr=False)
    empirical_se: Optional[np.ndarray] = field(default=None, repr=False)


def mean_growth_check(
    P: TransitionKernel,
    U: SubgraphSpec,
    law: OffspringLaw,
    x: Vertex,
    n_max: int,
    trials: int = 0,
    master_seed: int = 0,
    sim_generations: int = 6,
) -> GrowthCheck:
    """Growth rate of ``E[U_n] = m^n P_x(E_n)`` by n-th root extrapolation.

    With ``trials > 0`` the first ``sim_generations`` means are also
    estimated by simulation (no cap).
    """
    m = law.mean
    log_stay = stay_log_series(P, U, x, n_max)
    steps = np.arange(1, n_max + 1)
    zeta = _top_half_rate(log_stay[1:], steps)
    log_mean = np.arange(n_max + 1) * math.log(m) + log_stay
    emp = se = None
    if trials:
        H = min(sim_generations, n_max)
        evolver = make_evolver(P, U, law, x, H)
        pops = np.zeros((trials, H + 1))
        for t in range(trials):
            for n, occ, _ in evolver.generations(trial_rng(master_seed, t), H):
                pops[t, n] = _total(occ)
        emp = pops.mean(axis=0)
        se = pops.std(axis=0, ddof=1) / math.sqrt(trials)
    return GrowthCheck(m * zeta, m, zeta, log_mean, emp, se)


@dataclass
class MartingaleCheck:
    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    growth: float
    used_trials: int
    excluded_cap: int

    @property
    def flat(self) -> bool:
        return bool(np.all((self.ci_low <= 1.0) & (1.0 <= self.ci_high)))


def ks_martingale_check(
    P: TransitionKernel,
    U: SubgraphSpec,
    law: OffspringLaw,
    x: Vertex,
    horizon: int,
    trials: int,
    master_seed: int,
    cap: float = 1e15,
) -> MartingaleCheck:
    """Means of ``W_n = U_n / (m zeta)^n`` with normal 95% intervals.

    ``zeta`` is the common stay mass of the rows of ``P_U`` (``U`` must look
    transitive on the explored ball).  Trials that exceed ``cap`` are excluded
    and counted.
    """
    pU = restrict_kernel(P, U)
    zeta = uniform_stay_mass(pU, x, min(horizon, 8))
    growth = law.mean * zeta
    if growth <= 1.0:
        raise ValueError(f"m * zeta = {growth:.6g} <= 1: the normalisation is not supercritical")
    evolver = make_evolver(P, U, law, x, horizon)
    rows, excluded = [], 0
    scale = growth ** np.arange(horizon + 1)
    for t in range(trials):
        pop = np.zeros(horizon + 1)
        over = False
        for n, occ, _ in evolver.generations(trial_rng(master_seed, t), horizon, cap):
            pop[n] = _total(occ)
            if pop[n] > cap:
                over = True
        if over:
            excluded += 1
            continue
        rows.append(pop / scale)
    W = np.array(rows)
    mean = W.mean(axis=0)
    half = 1.959963984540054 * W.std(axis=0, ddof=1) / math.sqrt(len(W))
    return MartingaleCheck(mean, mean - half, mean + half, growth, len(W), excluded)


# ---------------------------------------------------------------------------
# coupling of the induced and the unrestricted process
# ---------------------------------------------------------------------------


def simulate_coupled(
    P: TransitionKernel,
    U: SubgraphSpec,
    law: OffspringLaw,
    x: Vertex,
    horizon: int,
    rng: np.random.Generator,
    cap: float = 1e7,
) -> tuple:
    """Run the unrestricted BRW and tag the particles whose ancestry never left ``U``.

    Returns per-generation ``(induced, in_U)``: the tagged population, which is
    the induced process, and the total number of particles sitting in ``U``.
    """
    if not U.membership(x):
        raise SubgraphError(f"{x!r} is not in {U.name or 'U'}")
    key = P.orbit_key(x) if (U.lumpable and P.orbit_key is not None) else (lambda v: v)
    graph = ClassGraph(P, x, key=key)
    member_cache: dict = {}

    def member(j: int) -> bool:
        r = member_cache.get(j)
        if r is None:
            r = member_cache[j] = bool(U.membership(graph.reps[j]))
        return r

    tagged, free = {0: 1}, {}
    induced, in_U = [1], [1]
    evolver = Evolver(graph, law)
    for _ in range(horizon):
        new_t, new_f = {}, {}
        for occ, is_tagged in ((tagged, True), (free, False)):
            if not occ:
                continue
            idx = np.array(evolver._ordered(occ), dtype=np.int64)
            dst, prob = graph.padded_rows(idx)
            c = np.array([occ[i] for i in idx], dtype=np.int64)
            placed = rng.multinomial(law.sample_totals(c, rng), prob)[:, :-1]
            for d, v in zip(dst[placed > 0], placed[placed > 0]):
                d, v = int(d), int(v)
                if is_tagged and member(d):
                    new_t[d] = new_t.get(d, 0) + v
                else:
                    new_f[d] = new_f.get(d, 0) + v
        tagged, free = new_t, new_f
        induced.append(sum(tagged.values()))
        in_U.append(induced[-1] + sum(v for j, v in free.items() if member(j)))
        if induced[-1] + sum(free.values()) > cap or not (tagged or free):
            break
    return induced, in_U
