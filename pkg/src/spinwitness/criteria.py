"""Variance-based multipartite entanglement criteria.

Every criterion consumes a :class:`MomentSet`.  It describes ``N`` sites, each
carrying two measured components ``A_k`` and ``B_k`` and a third component
``C_k`` fixed by the commutator ``[A_k, B_k] = i c C_k``.  For spin systems
these are ``(J_x, J_y, J_z)``.  Other
systems map their observables onto the same roles (for example the Stokes
mapping uses ``(S_y, S_z, S_x)`` up to sign).  Gains ``h`` multiply the ``A``
block and gains ``g`` the ``B`` block:

    u = sum_k h_k A_k,      v = sum_k g_k B_k.

A bipartition ``(R, S)`` of the sites gives the separable bound

    c * ( |sum_{k in R} h_k g_k <C_k>| + |sum_{k in S} h_k g_k <C_k>| )

on ``Var(u) + Var(v)`` and half that bound on ``Delta u Delta v``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgument, MissingData

INCONCLUSIVE = "inconclusive"
FULL_INSEPARABILITY = "full_inseparability"
GENUINE = "genuine_entanglement"
VERDICTS = (INCONCLUSIVE, FULL_INSEPARABILITY, GENUINE)

TIE_TOL = 1e-12
PSD_TOL = 1e-9
# relative slack before a violation is declared, so that a state saturating a
# bound is not certified by rounding noise
VIOLATION_RTOL = 1e-10


def is_violation(lhs, rhs) -> bool:
    return lhs < rhs - VIOLATION_RTOL * max(1.0, abs(rhs))


# --------------------------------------------------------------------------
# data types


@dataclass(frozen=True, eq=False)
class MomentSet:
    """First and second moments of the measured components of ``N`` sites.

    ``cov`` is the symmetrized covariance matrix of ``(A_1..A_N, B_1..B_N)``.
    ``mean`` holds the signed ``<C_k>``; ``mean_var`` the optional ``Var(C_k)``
    used for the large-spin validity ratios.  ``constant_commutator`` marks
    systems whose commutator is a c-number (quadratures), for which the
    bipartition bound is the same in every component of a mixture.
    """

    mean: np.ndarray
    cov: np.ndarray
    scale: float = 1.0
    provenance: str = "exact"
    mean_var: Optional[np.ndarray] = None
    constant_commutator: bool = False
    labels: tuple = ("x", "y", "z")

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        N = mean.size
        if N < 1:
            raise InvalidArgument("a moment set needs at least one site")
        if cov.shape != (2 * N, 2 * N):
            raise InvalidArgument(f"covariance must be {2 * N}x{2 * N}, got {cov.shape}")
        if not np.all(np.isfinite(cov)) or not np.all(np.isfinite(mean)):
            raise InvalidArgument("moments must be finite")
        cov = 0.5 * (cov + cov.T)
        lam = np.linalg.eigvalsh(cov)[0] if N else 0.0
        if lam < -PSD_TOL * max(1.0, np.max(np.abs(cov))):
            raise InvalidArgument(f"covariance is not positive semidefinite (min eigenvalue {lam:.3g})")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if self.mean_var is not None:
            mv = np.asarray(self.mean_var, dtype=float).reshape(-1)
            if mv.size != N:
                raise InvalidArgument("mean_var must have one entry per site")
            object.__setattr__(self, "mean_var", mv)
        if not self.scale > 0:
            raise InvalidArgument("commutator scale must be positive")

    @property
    def N(self) -> int:
        return self.mean.size

    def variance(self, a_coeffs, b_coeffs) -> float:
        """``Var(sum a_k A_k + sum b_k B_k)``."""
        w = np.concatenate([np.asarray(a_coeffs, float), np.asarray(b_coeffs, float)])
        if w.size != 2 * self.N:
            raise InvalidArgument("coefficient vectors must have one entry per site")
        return float(max(w @ self.cov @ w, 0.0))

    def validity_ratios(self):
        if self.mean_var is None:
            return None
        with np.errstate(divide="ignore", invalid="ignore"):
            r = self.mean_var / np.abs(self.mean)
        return np.where(np.abs(self.mean) > 0, r, np.inf)

    def scaled(self, factor):
        """Same moments with the commutator scale multiplied by ``factor``."""
        return MomentSet(self.mean, self.cov, self.scale * factor, self.provenance,
                         self.mean_var, self.constant_commutator, self.labels)


@dataclass(frozen=True)
class GainVector:
    h: tuple
    g: tuple

    def __post_init__(self):
        h = tuple(float(v) for v in self.h)
        g = tuple(float(v) for v in self.g)
        if len(h) != len(g):
            raise InvalidArgument("h and g must have equal length")
        if not all(math.isfinite(v) for v in h + g):
            raise InvalidArgument("gains must be finite")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)

    @classmethod
    def unit(cls, N):
        return cls((1.0,) * N, (1.0,) * N)

    @classmethod
    def from_flat(cls, values):
        values = list(values)
        if len(values) % 2:
            raise InvalidArgument("flat gain list must hold h_1..h_N followed by g_1..g_N")
        n = len(values) // 2
        return cls(values[:n], values[n:])

    @property
    def N(self):
        return len(self.h)


@dataclass
class CriterionResult:
    criterion_id: str
    lhs: float
    rhs: float
    verdict: str = INCONCLUSIVE
    conditional: bool = False
    argmin_bipartitions: list = field(default_factory=list)
    validity: Optional[list] = None
    flags: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def violated(self) -> bool:
        return is_violation(self.lhs, self.rhs)

    def to_record(self) -> dict:
        rec = {
            "criterion_id": self.criterion_id,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "margin": float(self.margin),
            "verdict": self.verdict,
            "conditional": bool(self.conditional),
            "argmin_bipartitions": ";".join(format_partition(p) for p in self.argmin_bipartitions),
            "validity": "" if self.validity is None else ";".join(f"{v:.12g}" for v in self.validity),
        }
        for k, v in sorted(self.flags.items()):
            rec[k] = v
        return rec


# --------------------------------------------------------------------------
# bipartitions


@dataclass(frozen=True)
class BipartitionSet:
    N: int
    partitions: tuple

    def __len__(self):
        return len(self.partitions)

    def __iter__(self):
        return iter(self.partitions)


def enumerate_bipartitions(N) -> BipartitionSet:
    """All splits of sites ``0..N-1`` into two nonempty groups.

    Ordered by the size of the smaller group, then lexicographically; when both
    halves have equal size the half containing site 0 is listed first.
    """
    if int(N) != N or not 2 <= N <= 16:
        raise InvalidArgument(f"N={N!r} must be an integer in [2, 16]")
    N = int(N)
    sites = range(N)
    parts = []
    for size in range(1, N // 2 + 1):
        for sub in itertools.combinations(sites, size):
            rest = tuple(k for k in sites if k not in sub)
            if size == N - size and 0 not in sub:
                continue
            parts.append((sub, rest))
    return BipartitionSet(N, tuple(parts))


def format_partition(partition) -> str:
    sub, rest = partition
    return "".join(str(k + 1) for k in sub) + "|" + "".join(str(k + 1) for k in rest)


# --------------------------------------------------------------------------
# helpers


def _check_gains(moments: MomentSet, gains):
    if not isinstance(gains, GainVector):
        gains = GainVector(*gains)
    if gains.N != moments.N:
        raise InvalidArgument(f"gain vector has {gains.N} sites, moments have {moments.N}")
    return gains


def bound_sum_bipartition(moments: MomentSet, gains, partition) -> float:
    """``c`` times the bipartition bound ``S_B`` for ``Var(u) + Var(v)``."""
    gains = _check_gains(moments, gains)
    hg = np.asarray(gains.h) * np.asarray(gains.g) * moments.mean
    sub, rest = partition
    if set(sub) | set(rest) != set(range(moments.N)) or set(sub) & set(rest):
        raise InvalidArgument(f"{partition!r} is not a bipartition of {moments.N} sites")
    return moments.scale * (abs(hg[list(sub)].sum()) + abs(hg[list(rest)].sum()))


def _min_bound(moments, gains):
    bounds = [(bound_sum_bipartition(moments, gains, p), p)
              for p in enumerate_bipartitions(moments.N)]
    low = min(b for b, _ in bounds)
    return low, [p for b, p in bounds if b - low <= TIE_TOL]


def _conditional_verdict(moments, violated, large_spin):
    """Verdict for criteria whose genuine reading needs the large-spin regime."""
    ratios = moments.validity_ratios()
    validity = None if ratios is None else [float(r) for r in ratios]
    if not violated:
        return INCONCLUSIVE, False, validity
    if large_spin:
        if ratios is None:
            raise MissingData(
                "per-site Var(C_k) is required for a large-spin genuine-entanglement verdict"
            )
        if np.all(ratios <= 1 + TIE_TOL):
            return GENUINE, True, validity
    return FULL_INSEPARABILITY, False, validity


def _uv_variances(moments, gains):
    N = moments.N
    var_u = moments.variance(gains.h, np.zeros(N))
    var_v = moments.variance(np.zeros(N), gains.g)
    return var_u, var_v


# --------------------------------------------------------------------------
# sum and product criteria over all bipartitions


def criterion6to9_npartite(moments: MomentSet, gains, mode="sum", large_spin=False,
                           criterion_id=None) -> CriterionResult:
    """``Var(u)+Var(v)`` (or ``Delta u Delta v``) against the smallest bipartition bound.

    A violation excludes every fixed bipartition (full inseparability).  The
    genuine-entanglement reading is only granted when ``large_spin`` is asserted
    and every validity ratio ``Var(C_k)/|<C_k>|`` is at most one.
    """
    if moments.N < 3:
        raise InvalidArgument("N-partite criteria need at least 3 sites")
    if mode not in ("sum", "product"):
        raise InvalidArgument(f"mode must be 'sum' or 'product', got {mode!r}")
    gains = _check_gains(moments, gains)
    var_u, var_v = _uv_variances(moments, gains)
    low, argmin = _min_bound(moments, gains)
    if mode == "sum":
        lhs, rhs = var_u + var_v, low
    else:
        lhs, rhs = math.sqrt(var_u * var_v), 0.5 * low
    verdict, conditional, validity = _conditional_verdict(moments, is_violation(lhs, rhs), large_spin)
    if criterion_id is None:
        criterion_id = {"sum": "c6", "product": "c7"}[mode]
        if moments.N == 4:
            criterion_id = {"sum": "c8", "product": "c9"}[mode]
    return CriterionResult(criterion_id, lhs, rhs, verdict, conditional, argmin, validity)


def criterion1_sum(moments: MomentSet, gains, large_spin=False) -> CriterionResult:
    if moments.N != 3:
        raise InvalidArgument("criterion 1 is tripartite; use criterion6to9_npartite for other N")
    return criterion6to9_npartite(moments, gains, "sum", large_spin, criterion_id="c1")


def criterion3_product(moments: MomentSet, gains, large_spin=False) -> CriterionResult:
    if moments.N != 3:
        raise InvalidArgument("criterion 3 is tripartite; use criterion6to9_npartite for other N")
    return criterion6to9_npartite(moments, gains, "product", large_spin, criterion_id="c3")


def cv_criterion(moments: MomentSet, gains, mode="sum") -> CriterionResult:
    """Sum or product criterion for moments with a c-number commutator.

    When ``<C_k>`` is the same in every component of a mixture the smallest
    bipartition bound holds for biseparable mixtures too, so a violation
    certifies genuine entanglement with no large-spin condition.
    """
    if not moments.constant_commutator:
        raise InvalidArgument("cv criterion needs moments with a constant commutator")
    res = criterion6to9_npartite(moments, gains, mode, criterion_id=f"cv_{mode}")
    if res.violated:
        res.verdict = GENUINE
        res.conditional = False
    return res


# --------------------------------------------------------------------------
# van Loock-Furusawa sets


TRIPARTITE_PAIRS = ((0, 1), (1, 2), (0, 2))
FOURPARTITE_PAIRS = ((0, 1), (1, 2), (0, 2), (2, 3), (1, 3), (0, 3))


def _vlf_coeffs(N, pair, free_gains):
    i, j = pair
    if i == j or not (0 <= i < N and 0 <= j < N):
        raise InvalidArgument(f"invalid site pair {pair!r}")
    a = np.zeros(N)
    a[i], a[j] = 1.0, -1.0
    b = np.array(_free_gain_vector(N, pair, free_gains))
    b[i] = b[j] = 1.0
    return a, b


def _free_gain_vector(N, pair, free_gains):
    """Expand ``free_gains`` to a length-``N`` vector (entries at ``pair`` ignored).

    Accepts a full length-``N`` vector, a vector listing only the sites outside
    the pair, a single number, or ``None`` (all zero).
    """
    others = [k for k in range(N) if k not in pair]
    if free_gains is None:
        return [0.0] * N
    if np.isscalar(free_gains):
        out = [0.0] * N
        for k in others:
            out[k] = float(free_gains)
        return out
    fg = [float(v) for v in free_gains]
    if len(fg) == N:
        return fg
    if len(fg) == len(others):
        out = [0.0] * N
        for k, v in zip(others, fg):
            out[k] = v
        return out
    raise InvalidArgument(f"free gains {free_gains!r} do not match N={N}")


def vlf_parts(moments: MomentSet, pair, free_gains=None):
    """``(Var(A_i - A_j), Var(B_i + B_j + sum_k g_k B_k))`` for the pair ``(i, j)``."""
    a, b = _vlf_coeffs(moments.N, pair, free_gains)
    z = np.zeros(moments.N)
    return moments.variance(a, z), moments.variance(z, b)


def vlf_B(moments: MomentSet, pair, free_gains=None) -> float:
    x, y = vlf_parts(moments, pair, free_gains)
    return x + y


def vlf_S(moments: MomentSet, pair, free_gains=None) -> float:
    x, y = vlf_parts(moments, pair, free_gains)
    return math.sqrt(x * y)


def _free_for(pairs, free_gains, N):
    """One free-gain specification per pair.

    ``free_gains`` is either a length-``N`` vector read as the per-site gain
    ``g_k`` used wherever site ``k`` is outside the pair, or an explicit list
    with one entry per pair.
    """
    if free_gains is None or np.isscalar(free_gains):
        return [free_gains] * len(pairs)
    fg = list(free_gains)
    if len(fg) == len(pairs) and all(not np.isscalar(f) or f is None for f in fg):
        return fg
    if len(fg) == N:
        return [fg] * len(pairs)
    raise InvalidArgument(f"free gains {free_gains!r} do not match N={N}")


def _unconditional(cid, lhs, rhs, **flags):
    verdict = GENUINE if is_violation(lhs, rhs) else INCONCLUSIVE
    return CriterionResult(cid, lhs, rhs, verdict, False, flags=flags)


def criterion2_vlf_sum(moments: MomentSet, free_gains=None) -> CriterionResult:
    """``B_I + B_II + B_III >= c * sum_k |<C_k>|``, valid for arbitrary biseparable mixtures."""
    if moments.N != 3:
        raise InvalidArgument("criterion 2 needs N=3")
    frees = _free_for(TRIPARTITE_PAIRS, free_gains, 3)
    Bs = [vlf_B(moments, p, f) for p, f in zip(TRIPARTITE_PAIRS, frees)]
    rhs = moments.scale * float(np.sum(np.abs(moments.mean)))
    return _unconditional("c2", sum(Bs), rhs, B=";".join(f"{b:.12g}" for b in Bs))


# which pair-sums have a single-site bound, and which site bounds them
_TWO_TERM = {"I+II": ((0, 1), 1), "I+III": ((0, 2), 0), "II+III": ((1, 2), 2)}


def criterion2b_vlf_sum(moments: MomentSet, free_gains=None, variant="I+II") -> CriterionResult:
    """Two-term form: ``B_I + B_II >= c |<C_2>|`` (and the analogous variants)."""
    if moments.N != 3:
        raise InvalidArgument("criterion 2b needs N=3")
    if variant not in _TWO_TERM:
        raise InvalidArgument(f"unknown variant {variant!r}")
    (p, q), site = _TWO_TERM[variant]
    frees = _free_for(TRIPARTITE_PAIRS, free_gains, 3)
    lhs = vlf_B(moments, TRIPARTITE_PAIRS[p], frees[p]) + vlf_B(moments, TRIPARTITE_PAIRS[q], frees[q])
    rhs = moments.scale * abs(moments.mean[site])
    return _unconditional("c2b", lhs, rhs, variant=variant)


def criterion4_vlf_product(moments: MomentSet, free_gains=None) -> CriterionResult:
    """``S_I + S_II + S_III >= (c/2) sum_k |<C_k>|`` with ``S = Delta(...) Delta(...)``."""
    if moments.N != 3:
        raise InvalidArgument("criterion 4 needs N=3")
    frees = _free_for(TRIPARTITE_PAIRS, free_gains, 3)
    Ss = [vlf_S(moments, p, f) for p, f in zip(TRIPARTITE_PAIRS, frees)]
    rhs = 0.5 * moments.scale * float(np.sum(np.abs(moments.mean)))
    return _unconditional("c4", sum(Ss), rhs, S=";".join(f"{s:.12g}" for s in Ss))


def criterion4b_vlf_product(moments: MomentSet, free_gains=None, variant="I+II") -> CriterionResult:
    if moments.N != 3:
        raise InvalidArgument("criterion 4b needs N=3")
    if variant not in _TWO_TERM:
        raise InvalidArgument(f"unknown variant {variant!r}")
    (p, q), site = _TWO_TERM[variant]
    frees = _free_for(TRIPARTITE_PAIRS, free_gains, 3)
    lhs = vlf_S(moments, TRIPARTITE_PAIRS[p], frees[p]) + vlf_S(moments, TRIPARTITE_PAIRS[q], frees[q])
    rhs = 0.5 * moments.scale * abs(moments.mean[site])
    return _unconditional("c4b", lhs, rhs, variant=variant)


def any_two_tripartite(moments: MomentSet, free_gains=None) -> dict:
    """Full tripartite inseparability from any two violated pair inequalities.

    Each ``B_I, B_II, B_III`` has its own fixed bound
    ``c(|<C_i>| + |<C_j>|)`` for its pair; violating two of them rules out all
    three fixed bipartitions.
    """
    if moments.N != 3:
        raise InvalidArgument("the any-two test needs N=3")
    frees = _free_for(TRIPARTITE_PAIRS, free_gains, 3)
    c, m = moments.scale, np.abs(moments.mean)
    rows = []
    for p, f in zip(TRIPARTITE_PAIRS, frees):
        B = vlf_B(moments, p, f)
        bound = c * (m[p[0]] + m[p[1]])
        rows.append({"pair": p, "B": B, "bound": bound, "violated": is_violation(B, bound)})
    n = sum(bool(r["violated"]) for r in rows)
    return {"inequalities": rows, "n_violated": n, "full_inseparability": n >= 2}


def criterion10_fourpartite(moments: MomentSet, free_gains=None) -> CriterionResult:
    """``sum_{J=1}^{6} B_J >= c * sum_k |<C_k>|`` over the six site pairs of four sites.

    The result also carries the any-three test: each ``B_J`` compared with its
    own pair bound ``c(|<C_i>| + |<C_j>|)``; violating any three of the six
    rules out every fixed bipartition.
    """
    if moments.N != 4:
        raise InvalidArgument("criterion 10 needs N=4")
    frees = _free_for(FOURPARTITE_PAIRS, free_gains, 4)
    Bs = [vlf_B(moments, p, f) for p, f in zip(FOURPARTITE_PAIRS, frees)]
    c, m = moments.scale, np.abs(moments.mean)
    n_viol = sum(is_violation(B, c * (m[i] + m[j])) for B, (i, j) in zip(Bs, FOURPARTITE_PAIRS))
    rhs = c * float(np.sum(m))
    return _unconditional(
        "c10", sum(Bs), rhs,
        B=";".join(f"{b:.12g}" for b in Bs),
        pair_violations=int(n_viol),
        full_inseparability=bool(n_viol >= 3),
    )


# --------------------------------------------------------------------------
# two-cloud and split-cloud criteria


def fadel_bipartite(moments_AB: MomentSet, gains) -> CriterionResult:
    """``Delta(g_z A_A + A_B) Delta(g_y B_A + B_B) >= (c/2)(|g_z g_y||<C_A>| + |<C_B>|)``.

    The inequality holds for every separable two-party state, so a violation
    certifies entanglement between the parties.
    """
    if moments_AB.N != 2:
        raise InvalidArgument("the two-cloud criterion needs N=2")
    gz, gy = (float(v) for v in gains)
    var_u = moments_AB.variance([gz, 1.0], [0.0, 0.0])
    var_v = moments_AB.variance([0.0, 0.0], [gy, 1.0])
    m = moments_AB.mean
    lhs = math.sqrt(var_u * var_v)
    rhs = 0.5 * moments_AB.scale * (abs(gz * gy) * abs(m[0]) + abs(m[1]))
    verdict = GENUINE if is_violation(lhs, rhs) else INCONCLUSIVE
    return CriterionResult("fadel", lhs, rhs, verdict, False)


def criterion3_bec_split(moments_3clouds: MomentSet, gains, large_spin=False) -> CriterionResult:
    """Product criterion for clouds ``(A1, A2, B)`` with gains ``(g_z, g_z, 1)`` and ``(g_y, g_y, 1)``.

    The bound is the minimum over all three bipartitions of the clouds.  For
    ``g_z g_y > 0`` and positive cloud means it reduces to the parent
    two-cloud bound.
    """
    if moments_3clouds.N != 3:
        raise InvalidArgument("the split-cloud criterion needs three clouds")
    gz, gy = (float(v) for v in gains)
    gv = GainVector((gz, gz, 1.0), (gy, gy, 1.0))
    res = criterion6to9_npartite(moments_3clouds, gv, "product", large_spin, criterion_id="bec_split")
    return res


CRITERIA_IDS = ("c1", "c2", "c2b", "c3", "c4", "c4b", "c5", "c6", "c7", "c8", "c9", "c10",
                "cv_sum", "cv_product", "fadel", "bec_split")
