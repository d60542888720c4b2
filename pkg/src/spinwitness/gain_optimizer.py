"""Search for the gains that make a sum or product criterion most strongly violated.

The objective is the ratio ``lhs / rhs`` of a criterion (below one means a
violation).  It is invariant under a common rescaling of all gains, so the
first site's gains are pinned to ``h_1 = g_1 = 1``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from . import criteria as C
from .errors import DegenerateObjective, InvalidArgument

log = logging.getLogger(__name__)

TIE_TOL = 1e-9


@dataclass(frozen=True)
class OptimizationSpec:
    """What to minimize and how.

    ``symmetric=True`` uses gains ``h = (1, h, ..., h)`` and ``g = (1, g, ..., g)``;
    otherwise every gain except ``h_1 = g_1 = 1`` is free.
    """

    objective: str = "sum_ratio"
    criterion_id: str = "c1"
    symmetric: bool = True
    grid_range: tuple = (-1.2, 1.2)
    grid_points: int = 5
    tol: float = 1e-8
    maxiter: int = 5000
    extra_starts: tuple = ((0.0, 0.0),)

    def __post_init__(self):
        if self.objective not in ("sum_ratio", "product_ratio"):
            raise InvalidArgument(f"objective must be 'sum_ratio' or 'product_ratio', got {self.objective!r}")
        if not self.tol > 0:
            raise InvalidArgument("tol must be positive")
        if self.grid_points < 1:
            raise InvalidArgument("the multistart grid must be nonempty")
        lo, hi = self.grid_range
        if not lo <= hi:
            raise InvalidArgument("grid_range must be (low, high)")

    @property
    def mode(self):
        return "sum" if self.objective == "sum_ratio" else "product"


@dataclass
class OptimizationResult:
    gains: C.GainVector
    ratio: float
    params: np.ndarray
    start_ratios: list = field(default_factory=list)
    converged: bool = True

    @property
    def h(self):
        return self.gains.h[1]

    @property
    def g(self):
        return self.gains.g[1]


def _gains_from(params, N, symmetric):
    if symmetric:
        h, g = params
        return C.GainVector((1.0,) + (h,) * (N - 1), (1.0,) + (g,) * (N - 1))
    n = N - 1
    return C.GainVector((1.0,) + tuple(params[:n]), (1.0,) + tuple(params[n:]))


def ratio_objective(moments: C.MomentSet, gains: C.GainVector, mode="sum") -> float:
    """``lhs / rhs`` of the sum or product criterion (``inf`` when the bound vanishes)."""
    var_u = moments.variance(gains.h, np.zeros(moments.N))
    var_v = moments.variance(np.zeros(moments.N), gains.g)
    low = min(C.bound_sum_bipartition(moments, gains, p) for p in C.enumerate_bipartitions(moments.N))
    if mode == "sum":
        lhs, rhs = var_u + var_v, low
    else:
        lhs, rhs = math.sqrt(var_u * var_v), 0.5 * low
    if rhs <= 0:
        return math.inf
    return lhs / rhs


class _RatioEvaluator:
    """Vectorized ``lhs / rhs`` for one moment set (bipartition masks precomputed)."""

    def __init__(self, moments: C.MomentSet, mode):
        N = moments.N
        self.N, self.mode, self.c = N, mode, moments.scale
        self.CA = moments.cov[:N, :N]
        self.CB = moments.cov[N:, N:]
        self.mean = moments.mean
        parts = C.enumerate_bipartitions(N).partitions
        self.mask = np.zeros((len(parts), N))
        for row, (sub, _) in enumerate(parts):
            self.mask[row, list(sub)] = 1.0

    def __call__(self, h, g):
        var_u = max(float(h @ self.CA @ h), 0.0)
        var_v = max(float(g @ self.CB @ g), 0.0)
        hg = h * g * self.mean
        sub = self.mask @ hg
        low = self.c * float(np.min(np.abs(sub) + np.abs(hg.sum() - sub)))
        if self.mode == "sum":
            lhs, rhs = var_u + var_v, low
        else:
            lhs, rhs = math.sqrt(var_u * var_v), 0.5 * low
        return lhs / rhs if rhs > 0 else math.inf


def optimize_gains(moment_source: Callable, r, spec: OptimizationSpec = OptimizationSpec()) -> OptimizationResult:
    """Nelder-Mead from every point of a square grid (plus ``extra_starts``).

    Among finishing points whose ratio is within ``1e-9`` of the best the one
    with the smallest gain norm is returned, which selects the trivial gains
    ``h = g = 0`` when squeezing is absent and every choice gives ratio one.
    """
    moments = moment_source(r)
    N = moments.N
    mode = spec.mode
    dim = 2 if spec.symmetric else 2 * (N - 1)

    ev = _RatioEvaluator(moments, mode)

    def f(params):
        if spec.symmetric:
            h = np.array([1.0, *([params[0]] * (N - 1))])
            g = np.array([1.0, *([params[1]] * (N - 1))])
        else:
            h = np.concatenate([[1.0], params[:N - 1]])
            g = np.concatenate([[1.0], params[N - 1:]])
        val = ev(h, g)
        return val if math.isfinite(val) else 1e300

    axis = np.linspace(spec.grid_range[0], spec.grid_range[1], spec.grid_points)
    if spec.symmetric:
        starts = [np.array(p) for p in itertools.product(axis, repeat=2)]
        starts += [np.array(p, dtype=float) for p in spec.extra_starts]
    else:
        # symmetric grid points lifted to the full parameter space
        starts = [np.concatenate([np.full(N - 1, h), np.full(N - 1, g)])
                  for h, g in list(itertools.product(axis, repeat=2)) + list(spec.extra_starts)]
    start_vals = [f(s) for s in starts]
    if all(v >= 1e300 for v in start_vals):
        raise DegenerateObjective("the criterion bound vanishes at every multistart point")

    finals = []
    converged = True
    for s0, v0 in zip(starts, start_vals):
        res = minimize(f, s0, method="Nelder-Mead",
                       options={"xatol": spec.tol, "fatol": 1e-14, "maxiter": spec.maxiter * dim,
                                "maxfev": spec.maxiter * dim * 2})
        x, fx = (res.x, float(res.fun)) if res.fun <= v0 else (s0, v0)
        converged &= bool(res.success)
        finals.append((fx, x))
    best = min(fx for fx, _ in finals)
    # start points compete in the tie-break too, so a flat objective keeps its exact start
    candidates = finals + list(zip(start_vals, starts))
    close = [(float(np.linalg.norm(x)), fx, x) for fx, x in candidates if fx - best <= TIE_TOL]
    _, fx, x = min(close, key=lambda t: (t[0], t[1]))
    return OptimizationResult(_gains_from(x, N, spec.symmetric), fx, np.asarray(x), start_vals, converged)


_CRITERION_FN = {
    "c1": lambda m, g, ls: C.criterion1_sum(m, g, ls),
    "c3": lambda m, g, ls: C.criterion3_product(m, g, ls),
    "cv_sum": lambda m, g, ls: C.cv_criterion(m, g, "sum"),
    "cv_product": lambda m, g, ls: C.cv_criterion(m, g, "product"),
    "c6": lambda m, g, ls: C.criterion6to9_npartite(m, g, "sum", ls),
    "c7": lambda m, g, ls: C.criterion6to9_npartite(m, g, "product", ls),
    "c8": lambda m, g, ls: C.criterion6to9_npartite(m, g, "sum", ls),
    "c9": lambda m, g, ls: C.criterion6to9_npartite(m, g, "product", ls),
}


@dataclass
class SweepRow:
    r: float
    gains: C.GainVector
    ratio: float
    verdict: str
    result: OptimizationResult = field(repr=False, default=None)

    def to_record(self):
        return {"r": self.r, "h": self.gains.h[1], "g": self.gains.g[1], "ratio": self.ratio,
                "verdict": self.verdict}


def sweep(moment_source: Callable, r_values: Sequence, spec: OptimizationSpec = OptimizationSpec(),
          large_spin=False) -> list:
    """Optimize at each ``r``; logs a warning if the optimal ratio ever increases with ``r``."""
    if spec.criterion_id not in _CRITERION_FN:
        raise InvalidArgument(f"criterion {spec.criterion_id!r} has no gain-optimization form")
    rows = []
    for r in r_values:
        if not math.isfinite(r):
            raise InvalidArgument(f"r={r!r} is not finite")
        res = optimize_gains(moment_source, r, spec)
        verdict = _CRITERION_FN[spec.criterion_id](moment_source(r), res.gains, large_spin).verdict
        rows.append(SweepRow(float(r), res.gains, res.ratio, verdict, res))
    ordered = sorted(rows, key=lambda row: row.r)
    for a, b in zip(ordered, ordered[1:]):
        if b.ratio > a.ratio + 1e-9:
            log.warning("optimal ratio increases from %.6g at r=%g to %.6g at r=%g", a.ratio, a.r, b.ratio, b.r)
    return rows
