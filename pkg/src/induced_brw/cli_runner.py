"""Command-line runner: configs, seeded experiments and JSON/CSV reports.

Descriptors are short strings:

* family: ``tree:d=3``, ``product:d1=3,d2=100,alpha1=3/103``,
  ``freeprod:g1=cyclic:2,g2=free:2,alpha=0.3``;
* subgraph: ``whole``, ``fiber:2``, ``copy``, ``alternating``,
  ``pruned:levels=0-1-2``, ``pruned:all=12``, ``subtree:0.1``,
  ``gw:p=0.6,depth=8``;
* offspring law: ``geometric:mean=2``, ``edge:lam=0.34,d=3``,
  ``pmf:0.25,0.25,0.5``, ``point:2``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import sys
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np
import yaml

from . import __version__
from .brw_engine import OffspringLaw, persistence_probability, run_trials, summarize_outcomes, trial_rng
from .fbrw_check import (
    ContractError,
    ProjectionMap,
    check_projection,
    constant_projection,
    m1_threshold,
    quotient_threshold,
    refine_partition,
)
from .kernel_core import HomogeneousTree, NormalizationError, SubgraphError, SubgraphSpec, restrict_kernel
from .product_lab import (
    FreeProductSpec,
    ProductSpec,
    fiber_subgraph,
    free_product_kernel,
    free_product_thresholds,
    gamma2_copy,
    product_spectral_summary,
    transient_window,
)
from .spectral_lab import PeriodError, TransitivityError, diagonal_table, spectral_radius_estimate, spectral_summary, zeta_estimate
from .tree_lab import (
    ShootingError,
    SubtreeSet,
    TreeSpec,
    boundary_certificate,
    boundary_measure,
    connected_hull,
    construct_A_empty,
    edge_breeding_law,
    edge_breeding_regime,
    gw_boundary_profile,
    gw_percolate,
    prune_tree,
    retention_frequency,
    solve_extinction_recursion,
    survival_without_visiting,
)

SCHEMA_VERSION = "1"
DEFAULT_SEED = 20240917

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_SUITE = 4

NONLUMPED_DEPTH = 16
BALL_BUDGET = 200_000
STOCHASTIC = {"persist", "tree gw", "tree asets"}
NUMERIC_ERRORS = (ShootingError, NormalizationError, PeriodError, TransitivityError, ContractError, FloatingPointError)


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


# ---------------------------------------------------------------------------
# descriptors
# ---------------------------------------------------------------------------


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        return text


def parse_descriptor(desc: str) -> tuple:
    """``'name:k=v,k=v'`` -> ``('name', {k: v})``; bare values go under positional integer keys."""
    name, _, rest = desc.partition(":")
    params: dict = {}
    if rest:
        for i, item in enumerate(rest.split(",")):
            k, eq, v = item.partition("=")
            if eq:
                params[k.strip()] = _number(v.strip()) if ":" not in v else v.strip()
            else:
                params[i] = _number(k.strip())
    return name.strip(), params


@dataclass
class Family:
    name: str
    kernel: object
    root: tuple
    obj: object


def build_family(desc: str) -> Family:
    name, p = parse_descriptor(desc)
    try:
        if name == "tree":
            t = HomogeneousTree(p.get("d", 3))
            return Family(name, t.kernel(), t.root, t)
        if name == "product":
            spec = ProductSpec(int(p.get("d1", 3)), int(p.get("d2", 100)), float(p.get("alpha1", 3 / 103)), fiber=int(p.get("fiber", 2)))
            return Family(name, spec.kernel(), ((), ()), spec)
        if name == "freeprod":
            spec = FreeProductSpec(str(p.get("g1", "cyclic:2")), str(p.get("g2", "free:2")), float(p.get("alpha", 0.3)))
            return Family(name, free_product_kernel(spec), (), spec)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad family {desc!r}: {exc}") from None
    raise ConfigError(f"unknown family {name!r} in {desc!r}")


def _alternating(v) -> bool:
    return all(v[k] == 0 for k in range(1, len(v)) if k % 2 == 1)


def build_subgraph(desc: str, fam: Family, seed: Optional[int] = None) -> SubgraphSpec:
    name, p = parse_descriptor(desc or "whole")
    if name == "whole":
        return SubgraphSpec(lambda v: True, fam.root, lumpable=True, name="whole")
    if name == "fiber" and fam.name == "product":
        i = int(p.get(0, p.get("i", 2)))
        if i not in (1, 2):
            raise ConfigError(f"fiber index must be 1 or 2, got {i}")
        return fiber_subgraph(fam.obj, i)
    if name == "copy" and fam.name == "freeprod":
        return gamma2_copy(fam.obj)
    if fam.name == "tree":
        d = fam.obj.degree
        if name == "alternating":
            return SubgraphSpec(_alternating, (), name="alternating")
        if name == "pruned":
            if "all" in p:
                levels = range(int(p["all"]))
            else:
                levels = [int(x) for x in str(p.get("levels", "")).split("-") if x != ""]
            return prune_tree(d, levels).as_subgraph()
        if name == "subtree":
            top = tuple(int(x) for x in str(p.get(0, "")).split(".") if x != "")
            fam.obj.validate(top)
            return SubtreeSet(top).as_subgraph(top)
        if name == "gw":
            if seed is None:
                raise ConfigError("a GW subgraph needs --seed")
            real = gw_percolate(TreeSpec.homogeneous(d), float(p.get("p", 0.6)), int(p.get("depth", 8)), trial_rng(seed, 0))
            return real.as_subgraph()
    raise ConfigError(f"subgraph {desc!r} is not available for family {fam.name!r}")


def build_law(desc: str) -> OffspringLaw:
    name, p = parse_descriptor(desc)
    try:
        if name == "geometric":
            return OffspringLaw.geometric(float(p.get("mean", p.get(0))))
        if name == "edge":
            return edge_breeding_law(float(p["lam"]), int(p.get("d", 3)))
        if name == "pmf":
            return OffspringLaw.from_pmf([float(p[i]) for i in sorted(k for k in p if isinstance(k, int))])
        if name == "point":
            return OffspringLaw.point_mass(int(p.get(0, p.get("k", 2))))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad offspring law {desc!r}: {exc}") from None
    raise ConfigError(f"unknown offspring law {name!r}")


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    command: str
    family: str = "tree:d=3"
    subgraph: str = "whole"
    law: str = "geometric:mean=2"
    horizon: int = 200
    cap: float = 1e6
    trials: int = 1000
    depth: int = 1000
    seed: Optional[int] = None
    out: Optional[str] = None
    format: str = "json"
    params: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        for name in ("horizon", "trials", "depth"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not self.cap > 0:
            raise ConfigError(f"cap must be positive, got {self.cap!r}")
        if self.format not in ("json", "csv", "both"):
            raise ConfigError(f"format must be json, csv or both, got {self.format!r}")
        if self.command in STOCHASTIC and self.seed is None:
            raise ConfigError(f"{self.command!r} is stochastic and needs a seed")
        if self.seed is not None and (not isinstance(self.seed, int) or self.seed < 0):
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "command" not in data:
            raise ConfigError("config needs a command")
        return cls(**data)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"unreadable config: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        return cls.from_dict(data)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class ReportBundle:
    command: str
    config: ExperimentConfig
    results: dict
    csv_header: list = field(default_factory=list)
    csv_rows: list = field(default_factory=list)

    def report(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": self.config.to_dict(),
            "results": _jsonable(self.results),
            "versions": {"induced_brw": __version__, "numpy": np.__version__, "python": platform.python_version()},
        }

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.csv_header)
        for row in self.csv_rows:
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def load_schema() -> dict:
    return json.loads(resources.files("induced_brw").joinpath("schemas/report-v1.json").read_text())


def validate_report(report: dict) -> None:
    jsonschema.validate(report, load_schema())


def write_outputs(bundle: ReportBundle, out: Optional[str], fmt: str, stream=None) -> list:
    """Write ``<out>/<command>.json`` and/or ``.csv``; without ``out`` print JSON to ``stream``."""
    report = bundle.report()
    validate_report(report)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    stem = bundle.command.replace(" ", "_")
    written = []
    if out is None:
        (stream or sys.stdout).write(text if fmt != "csv" else bundle.csv_text())
        return written
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    if fmt in ("json", "both"):
        (path / f"{stem}.json").write_text(text)
        written.append(path / f"{stem}.json")
    if fmt in ("csv", "both"):
        (path / f"{stem}.csv").write_text(bundle.csv_text())
        written.append(path / f"{stem}.csv")
    return written


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_spectral(cfg: ExperimentConfig) -> ReportBundle:
    fam = build_family(cfg.family)
    U = build_subgraph(cfg.subgraph, fam, cfg.seed)
    x = U.base_vertex
    # without lumping the DP runs vertex by vertex, so keep its depth small
    n = cfg.depth if U.lumpable else min(cfg.depth, NONLUMPED_DEPTH)
    if cfg.subgraph in ("whole", "", None):
        rho = spectral_radius_estimate(fam.kernel, x, n)
        res = {"rho": rho.value, "rho_U": rho.value, "phi_U": rho.value, "zeta": 1.0, "m1": 1.0, "period": rho.period, "depth": n}
    else:
        s = spectral_summary(fam.kernel, U, x, n)
        z = zeta_estimate(fam.kernel, U, x, n)
        res = s.to_dict()
        res["zeta_direct"] = z.value
        res["zeta_underflow_depth"] = z.underflow_depth
        res["depth"] = n
    rows = diagonal_table(fam.kernel, U, x, min(n, int(cfg.params.get("table_rows", 200))))
    return ReportBundle("spectral", cfg, res, ["k", "p_U_kk", "stay_prob"], rows)


def _cmd_persist(cfg: ExperimentConfig) -> ReportBundle:
    fam = build_family(cfg.family)
    U = build_subgraph(cfg.subgraph, fam, cfg.seed)
    law = build_law(cfg.law)
    if law.mean <= 1:
        raise ConfigError(f"mean offspring must exceed 1, got {law.mean}")
    cont = bool(cfg.params.get("continue_after_cap", False))
    lt = int(cfg.params.get("local_threshold", 10))
    outcomes = run_trials(fam.kernel, U, law, U.base_vertex, cfg.horizon, cfg.cap, cfg.trials, cfg.seed, cont)
    est = summarize_outcomes(outcomes, cfg.seed, lt)
    rows = [
        (t, o.status, "" if o.extinct_at is None else o.extinct_at, o.local_visits, o.population[-1])
        for t, o in enumerate(outcomes)
    ]
    res = {"persistence": est.to_dict(), "mean_offspring": law.mean}
    return ReportBundle("persist", cfg, res, ["trial", "status", "extinct_at", "local_visits", "final_population"], rows)


def _projection(rule: str, fam: Family, pU, radius: int) -> ProjectionMap:
    if rule == "const":
        return constant_projection()
    if rule == "parity":
        return ProjectionMap(lambda v: len(v) % 2, (0, 1))
    if rule == "refine":
        return refine_partition(pU, radius)
    raise ConfigError(f"unknown labeling rule {rule!r}; use const, parity or refine")


def _default_radius(pU, x, budget: int = BALL_BUDGET) -> int:
    """Largest radius up to 4 whose ball, judged by the degree at ``x``, stays within ``budget``."""
    deg = max(len(pU.neighbor_fn(x)), 2)
    r = 4
    while r > 1 and deg**r > budget:
        r -= 1
    return r


def _cmd_fbrw(cfg: ExperimentConfig) -> ReportBundle:
    fam = build_family(cfg.family)
    U = build_subgraph(cfg.subgraph, fam, cfg.seed)
    pU = restrict_kernel(fam.kernel, U)
    radius = int(cfg.params.get("radius", _default_radius(pU, U.base_vertex)))
    g = _projection(str(cfg.params.get("labels", "const")), fam, pU, radius)
    check_r = radius if g.radius is None else max(g.radius - 1, 0)
    chk = check_projection(pU, g, check_r)
    res = {"is_fbrw": chk.passed, "status": chk.status, "radius": check_r, "type_count": chk.type_count}
    rows = []
    if chk.passed:
        Q = chk.matrix()
        res["quotient_matrix"] = Q
        res["m1_quotient"] = quotient_threshold(Q)
        rows = [(i, j, float(Q[i, j])) for i in range(Q.shape[0]) for j in range(Q.shape[1])]
    else:
        res["witness"] = [repr(w) for w in chk.witness] if chk.witness else None
    # without lumping the DP runs vertex by vertex, so keep its depth small
    m1_depth = int(cfg.params.get("m1_depth", cfg.depth if U.lumpable else min(cfg.depth, NONLUMPED_DEPTH)))
    res["m1"] = m1_threshold(pU, U.base_vertex, m1_depth)
    res["m1_depth"] = m1_depth
    return ReportBundle("fbrw", cfg, res, ["type", "target_type", "mass"], rows)


def _branching(text) -> TreeSpec:
    vals = [int(x) for x in str(text).split(",") if str(x).strip()]
    if not vals:
        raise ConfigError("branching needs at least one forward degree")
    return TreeSpec(tuple(vals[:-1]), vals[-1])


def _cmd_tree_gamma(cfg: ExperimentConfig) -> ReportBundle:
    spec = _branching(cfg.params.get("branching", "2"))
    rows = [(i, float(boundary_measure(spec, (0,) * i)), spec.level_size(i)) for i in range(cfg.depth + 1)]
    return ReportBundle("tree gamma", cfg, {"tree": asdict(spec), "depth": cfg.depth}, ["depth", "gamma", "level_size"], rows)


def _cmd_tree_gw(cfg: ExperimentConfig) -> ReportBundle:
    spec = _branching(cfg.params.get("branching", "2"))
    p = float(cfg.params.get("p", 0.8))
    prof = gw_boundary_profile(spec, p, cfg.depth, cfg.trials, cfg.seed)
    vertex = (0,) * min(cfg.depth, int(cfg.params.get("retention_depth", 6)))
    ret = retention_frequency(spec, p, vertex, cfg.trials, cfg.seed)
    rows = [(b.depth, b.mean, b.stderr, b.bound) for b in prof]
    res = {
        "boundary_mean": asdict(prof[-1]),
        "within_3sigma": all(b.within for b in prof),
        "retention": ret.to_dict(),
    }
    return ReportBundle("tree gw", cfg, res, ["depth", "gamma_hat_mean", "stderr", "bound"], rows)


def _cmd_tree_prune(cfg: ExperimentConfig) -> ReportBundle:
    d = int(cfg.params.get("d", 3))
    levels = [int(x) for x in str(cfg.params.get("levels", "")).split(",") if x.strip()]
    pt = prune_tree(d, levels)
    rows = [(D, str(pt.measure_certificate(D)), str(pt.bound(D))) for D in range(cfg.depth + 1)]
    ok = all(pt.measure_certificate(D) <= pt.bound(D) for D in range(cfg.depth + 1))
    return ReportBundle("tree prune", cfg, {"degree": d, "levels": levels, "certificate_within_bound": ok}, ["depth", "certificate", "bound"], rows)


def _cmd_tree_recursion(cfg: ExperimentConfig) -> ReportBundle:
    lam, d = float(cfg.params.get("lam", 0.34)), int(cfg.params.get("d", 3))
    sol = solve_extinction_recursion(lam, d, int(cfg.params.get("N", 60)))
    res = {
        "lam": lam,
        "d": d,
        "regime": edge_breeding_regime(lam, d).label,
        "a1": sol.a1,
        "decay_rate": sol.decay_rate,
        "epsilon": sol.epsilon,
        "residual_max": sol.residual_max,
        "strictly_decreasing": bool(np.all(np.diff(sol.a) < 0)),
    }
    return ReportBundle("tree recursion", cfg, res, ["n", "a_n"], [(n, float(a)) for n, a in enumerate(sol.a)])


def _cmd_tree_asets(cfg: ExperimentConfig) -> ReportBundle:
    lam, d = float(cfg.params.get("lam", 0.34)), int(cfg.params.get("d", 3))
    sol = solve_extinction_recursion(lam, d, int(cfg.params.get("N", 60)))
    A = construct_A_empty(d, sol, float(cfg.params.get("eps", 1e-3)))
    D = min(cfg.depth, int(cfg.params.get("cert_depth", 10)))
    rows = []
    for k in range(D + 1):
        cert = boundary_certificate(A, d, k)
        hull = connected_hull(A, k)
        rows.append((k, len(cert), d * (d - 1) ** (k - 1) if k else 1, int(boundary_certificate(hull, d, k) == cert)))
    sv = survival_without_visiting(d, edge_breeding_law(lam, d), (), A, None, cfg.horizon, cfg.cap, cfg.trials, cfg.seed)
    res = {"r0": A.r0, "sum_bound": A.sum_bound, "points": [".".join(map(str, x)) for x in A.points(A.r0 + 5)], "survival": sv.to_dict()}
    return ReportBundle("tree asets", cfg, res, ["depth", "certificate_size", "level_size", "hull_preserves"], rows)


def _cmd_product(cfg: ExperimentConfig) -> ReportBundle:
    fam = build_family(cfg.family if cfg.family.startswith("product") else "product:d1=3,d2=100,alpha1=3/103")
    spec = fam.obj
    s = product_spectral_summary(spec, depth=cfg.depth if cfg.params.get("dp", True) else None)
    res = s.to_dict()
    res["transient_window"] = {str(i): asdict(transient_window(spec, i)) | {"empty": transient_window(spec, i).empty} for i in (1, 2)}
    rows = [("phi_1", s.phi[0]), ("phi_2", s.phi[1]), ("rho_U1", s.rho_U[0]), ("rho_U2", s.rho_U[1]), ("rho_G", s.rho_G), ("inv_rho_G", s.inv_rho_G)]
    rows += [("m1_U1", s.m1[0]), ("m1_U2", s.m1[1]), ("recurrence_mean_U2", s.recurrence_mean[1])]
    return ReportBundle("product", cfg, res, ["quantity", "closed_form"], rows)


def _cmd_freeprod(cfg: ExperimentConfig) -> ReportBundle:
    fam = build_family(cfg.family if cfg.family.startswith("freeprod") else "freeprod:g1=cyclic:2,g2=free:2,alpha=0.3")
    th = free_product_thresholds(fam.obj, min(cfg.depth, 400))
    res = th.to_dict() | {"zeta_error": th.zeta_error, "general_m0_criterion": "not implemented"}
    return ReportBundle("freeprod", cfg, res, ["quantity", "value"], [("zeta", th.zeta), ("m0", th.m0), ("m1", th.m1), ("zeta_dp", th.zeta_dp)])


COMMANDS = {
    "spectral": _cmd_spectral,
    "persist": _cmd_persist,
    "fbrw": _cmd_fbrw,
    "tree gamma": _cmd_tree_gamma,
    "tree gw": _cmd_tree_gw,
    "tree prune": _cmd_tree_prune,
    "tree recursion": _cmd_tree_recursion,
    "tree asets": _cmd_tree_asets,
    "product": _cmd_product,
    "freeprod": _cmd_freeprod,
}


def run_experiment(config: ExperimentConfig) -> ReportBundle:
    config.validate()
    fn = COMMANDS.get(config.command)
    if fn is None:
        raise ConfigError(f"unknown command {config.command!r}")
    try:
        return fn(config)
    except SubgraphError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# reproduction suite
# ---------------------------------------------------------------------------


@dataclass
class SuiteRow:
    name: str
    value: float
    target: float
    tolerance: float
    passed: bool
    note: str = ""


def load_pinned() -> dict:
    return json.loads(resources.files("induced_brw").joinpath("data/pinned_mc.json").read_text())


def _row(name, value, target, tol, note="", rel=False) -> SuiteRow:
    err = abs(value - target) / abs(target) if rel else abs(value - target)
    return SuiteRow(name, float(value), float(target), tol, bool(err <= tol), note)


def _suite_closed_forms(seed):
    s = product_spectral_summary(ProductSpec(3, 100, 3 / 103, 100 / 103))
    inv = 1.0 / (3 / 103 * 2 * math.sqrt(2) / 3 + 100 / 103 * 2 * math.sqrt(99) / 100)
    return [
        _row("phi_U1", s.phi[0], 2 * math.sqrt(2) / 3, 1e-9),
        _row("phi_U2", s.phi[1], 2 * math.sqrt(99) / 100, 1e-9),
        _row("m1_U2", s.m1[1], 1.03, 1e-9),
        _row("inv_rho_G", s.inv_rho_G, inv, 1e-9),
        _row("inv_rho_G_approx", s.inv_rho_G, 4.5, 0.05, "stated to one decimal"),
        _row("recurrence_mean", s.recurrence_mean[1], 103**2 / (200 * math.sqrt(99)), 1e-9),
        _row("recurrence_mean_approx", s.recurrence_mean[1], 5.33, 0.005, "stated to two decimals"),
    ]


def _suite_fiber_thresholds(seed):
    spec = ProductSpec(3, 100, 3 / 103, 100 / 103)
    P = spec.kernel()
    out = []
    for i, target in ((2, 103 / 100), (1, 103 / 3)):
        U = fiber_subgraph(spec, i)
        out.append(_row(f"m1_threshold_U{i}", m1_threshold(restrict_kernel(P, U), U.base_vertex, 400), target, 1e-9, rel=True))
    return out


def _suite_edge_breeding(seed):
    a = edge_breeding_regime(0.3, 3).label == "global_extinction"
    b = edge_breeding_regime(0.34, 3).label == "global_survival_local_extinction"
    return [
        SuiteRow("edge_breeding_0.30", float(a), 1.0, 0.0, a, "global_extinction"),
        SuiteRow("edge_breeding_0.34", float(b), 1.0, 0.0, b, "global_survival_local_extinction"),
    ]


def _suite_gw_bound(seed):
    b = gw_boundary_profile(TreeSpec.constant(2), 0.8, 12, 2000, seed)[-1]
    return [SuiteRow("gw_boundary_depth12", b.mean, b.bound, 3 * b.stderr, b.within, "mean <= bound + 3 sigma")]


def _suite_recursion(seed):
    sol = solve_extinction_recursion(0.34, 3, 60)
    dec = bool(np.all(np.diff(sol.a) < 0))
    return [
        SuiteRow("recursion_residual", sol.residual_max, 0.0, 1e-10, sol.residual_max < 1e-10),
        SuiteRow("recursion_decreasing", float(dec), 1.0, 0.0, dec),
        SuiteRow("recursion_decay_rate", sol.decay_rate, 1.0, 0.0, sol.decay_rate < 1, "eventual geometric decay"),
    ]


def _suite_persistence_mc(seed):
    pins = load_pinned()["persistence"]
    spec = ProductSpec(3, 100, 3 / 103, 100 / 103)
    P, U = spec.kernel(), fiber_subgraph(spec, 2)
    out = []
    for entry in pins["entries"]:
        est = persistence_probability(
            P, U, OffspringLaw.geometric(entry["m"]), U.base_vertex, pins["horizon"], pins["cap"], pins["trials"], pins["seed"]
        )
        p0 = entry["estimate"]
        sigma = math.sqrt(max(p0 * (1 - p0), 1.0 / pins["trials"]) / pins["trials"])
        out.append(_row(f"persistence_m={entry['m']:.4g}", est.estimate, p0, 3 * sigma, "pinned seed, 3 sigma"))
    return out


def _suite_local_visits(seed):
    pins = load_pinned()["local_visits"]
    spec = ProductSpec(3, 100, 3 / 103, 100 / 103)
    P, U = spec.kernel(), fiber_subgraph(spec, 2)
    out = []
    for entry in pins["entries"]:
        est = persistence_probability(
            P, U, OffspringLaw.geometric(entry["m"]), U.base_vertex, pins["horizon"], pins["cap"], pins["trials"],
            pins["seed"], pins["local_threshold"], continue_after_cap=True,
        )
        f0, n = entry["local_heavy_fraction"], max(est.successes, 1)
        sigma = math.sqrt(max(f0 * (1 - f0), 1.0 / n) / n)
        out.append(_row(f"local_heavy_m={entry['m']:.4g}", est.extra["local_heavy_fraction"], f0, 3 * sigma, "pinned seed, 3 sigma"))
    return out


SUITE = {
    "closed_forms": _suite_closed_forms,
    "fiber_thresholds": _suite_fiber_thresholds,
    "edge_breeding": _suite_edge_breeding,
    "gw_bound": _suite_gw_bound,
    "recursion": _suite_recursion,
    "persistence_mc": _suite_persistence_mc,
    "local_visits": _suite_local_visits,
}


def reproduce_paper_tables(select: Optional[list] = None, seed: int = DEFAULT_SEED) -> list:
    """Run the selected reproduction entries (all when ``select`` is None) and return their rows."""
    names = list(SUITE) if select is None else list(select)
    unknown = [n for n in names if n not in SUITE]
    if unknown:
        raise ConfigError(f"unknown suite entries {unknown}; choose from {list(SUITE)}")
    rows: list = []
    for n in names:
        rows.extend(SUITE[n](seed))
    return rows


# ---------------------------------------------------------------------------
# argparse front end
# ---------------------------------------------------------------------------


GLOBAL_FLAGS = ("seed", "trials", "horizon", "cap", "depth", "out", "format")


def _global_parent() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    g.add_argument("--trials", type=int, default=argparse.SUPPRESS)
    g.add_argument("--horizon", type=int, default=argparse.SUPPRESS)
    g.add_argument("--cap", type=float, default=argparse.SUPPRESS)
    g.add_argument("--depth", type=int, default=argparse.SUPPRESS)
    g.add_argument("--out", default=argparse.SUPPRESS, help="output directory (stdout when omitted)")
    g.add_argument("--format", choices=("json", "csv", "both"), default=argparse.SUPPRESS)
    g.add_argument("--config", default=argparse.SUPPRESS, help="YAML experiment config")
    g.add_argument("--dump-config", action="store_true", default=argparse.SUPPRESS, help="print the resolved config and exit")
    return g


def build_parser() -> argparse.ArgumentParser:
    parent = _global_parent()
    ap = argparse.ArgumentParser(prog="induced-brw", description="Induced branching random walks: experiments and reports.", parents=[parent], allow_abbrev=False)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[parent], allow_abbrev=False, **kw)

    p = add("spectral", help="spectral radii, stay probabilities and thresholds")
    p.add_argument("--family", default=argparse.SUPPRESS)
    p.add_argument("--subgraph", default=argparse.SUPPRESS)

    p = add("persist", help="Monte Carlo persistence of the induced BRW")
    p.add_argument("--family", default=argparse.SUPPRESS)
    p.add_argument("--subgraph", default=argparse.SUPPRESS)
    p.add_argument("--law", default=argparse.SUPPRESS)
    p.add_argument("--m", type=float, help="shorthand for --law geometric:mean=M")
    p.add_argument("--continue-after-cap", action="store_true")
    p.add_argument("--local-threshold", type=int)

    p = add("fbrw", help="F-BRW check, quotient matrix and m1")
    p.add_argument("--family", default=argparse.SUPPRESS)
    p.add_argument("--subgraph", default=argparse.SUPPRESS)
    p.add_argument("--labels", choices=("const", "parity", "refine"))
    p.add_argument("--radius", type=int)

    t = add("tree", help="tree constructions")
    tsub = t.add_subparsers(dest="tree_command", required=True)
    q = tsub.add_parser("gamma", parents=[parent], allow_abbrev=False)
    q.add_argument("--branching")
    q = tsub.add_parser("gw", parents=[parent], allow_abbrev=False)
    q.add_argument("--branching")
    q.add_argument("--p", type=float)
    q = tsub.add_parser("prune", parents=[parent], allow_abbrev=False)
    q.add_argument("--d", type=int)
    q.add_argument("--levels")
    for name in ("recursion", "asets"):
        q = tsub.add_parser(name, parents=[parent], allow_abbrev=False)
        q.add_argument("--lam", type=float)
        q.add_argument("--d", type=int)
        q.add_argument("--N", type=int)
        if name == "asets":
            q.add_argument("--eps", type=float)
            q.add_argument("--cert-depth", type=int)

    p = add("product", help="Cartesian product closed forms and DP checks")
    p.add_argument("--family", default=argparse.SUPPRESS)
    p.add_argument("--no-dp", action="store_true")

    p = add("freeprod", help="free-product thresholds")
    p.add_argument("--family", default=argparse.SUPPRESS)

    p = add("reproduce", help="run the reproduction suite")
    p.add_argument("--select", help="comma-separated entries; empty string selects none")
    p.add_argument("--list", action="store_true")
    return ap


_PARAM_KEYS = ("continue_after_cap", "local_threshold", "labels", "radius", "branching", "p", "d", "levels", "lam", "N", "eps", "cert_depth")


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    cmd = ns.command if ns.command != "tree" else f"tree {ns.tree_command}"
    if getattr(ns, "config", None):
        try:
            cfg = ExperimentConfig.from_yaml(Path(ns.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        cfg.command = cmd
    else:
        cfg = ExperimentConfig(cmd)
        if cmd == "product":
            cfg.family = "product:d1=3,d2=100,alpha1=3/103"
            cfg.depth = 2000
        elif cmd == "freeprod":
            cfg.family = "freeprod:g1=cyclic:2,g2=free:2,alpha=0.3"
            cfg.depth = 200
        elif cmd in ("tree gamma", "tree gw", "tree prune"):
            cfg.depth = 12
        elif cmd == "tree asets":
            cfg.horizon = 300
    for name in GLOBAL_FLAGS + ("family", "subgraph", "law"):
        if hasattr(ns, name):
            setattr(cfg, name, getattr(ns, name))
    if getattr(ns, "m", None) is not None:
        cfg.law = f"geometric:mean={ns.m}"
    params = dict(cfg.params)
    for k in _PARAM_KEYS:
        v = getattr(ns, k, None)
        if v not in (None, False):
            params[k] = v
    if getattr(ns, "no_dp", False):
        params["dp"] = False
    cfg.params = params
    return cfg


def main(argv: Optional[list] = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if ns.command == "reproduce":
            if ns.list:
                print("\n".join(SUITE))
                return EXIT_OK
            select = None if ns.select is None else [s for s in ns.select.split(",") if s]
            rows = reproduce_paper_tables(select, getattr(ns, "seed", DEFAULT_SEED))
            if not rows:
                print("no suite entries selected")
            for r in rows:
                print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<28} value={r.value:.12g} target={r.target:.12g} tol={r.tolerance:.3g} {r.note}")
            failing = [r.name for r in rows if not r.passed]
            if failing:
                print("failing entries: " + ", ".join(failing), file=sys.stderr)
                return EXIT_SUITE
            return EXIT_OK
        cfg = config_from_args(ns)
        if getattr(ns, "dump_config", False):
            sys.stdout.write(cfg.validate().to_yaml())
            return EXIT_OK
        bundle = run_experiment(cfg)
        write_outputs(bundle, cfg.out, cfg.format)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # argument checks inside the library
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
