"""Covariance-matrix simulation of squeezed light through beam-splitter networks.

Convention: ``[X, P] = 2i`` so the vacuum has ``Var X = Var P = 1``.  Phase
space is ordered ``(X_0, P_0, X_1, P_1, ...)``; the symplectic form is
``Omega = diag([[0, 1], [-1, 0]], ...)`` and a physical covariance satisfies
``cov + i Omega >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .criteria import MomentSet
from .errors import DegenerateMeasurement, InvalidArgument

PHYS_TOL = 1e-9


def symplectic_form(n_modes):
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def xi(mode):
    return 2 * mode


def pi(mode):
    return 2 * mode + 1


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Mean vector and covariance of ``n_modes`` quadrature pairs.

    ``conditioned`` states (after a homodyne-like projection) may violate the
    uncertainty relation in the measured direction and skip that check.
    """

    n_modes: int
    mean: np.ndarray
    cov: np.ndarray
    conditioned: bool = False

    def __post_init__(self):
        n = int(self.n_modes)
        if n < 1:
            raise InvalidArgument("a Gaussian state needs at least one mode")
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        if mean.size != 2 * n or cov.shape != (2 * n, 2 * n):
            raise InvalidArgument(f"mean/cov sizes do not match {n} modes")
        if np.max(np.abs(cov - cov.T)) > 1e-12 * max(1.0, np.max(np.abs(cov))):
            raise InvalidArgument("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        object.__setattr__(self, "n_modes", n)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if not self.conditioned and not self.is_physical():
            raise InvalidArgument("covariance violates the uncertainty relation cov + i Omega >= 0")

    def is_physical(self, tol=PHYS_TOL) -> bool:
        M = self.cov + 1j * symplectic_form(self.n_modes)
        return bool(np.linalg.eigvalsh(M)[0] >= -tol * max(1.0, np.max(np.abs(self.cov))))

    def variance(self, coeffs) -> float:
        """Variance of ``sum_i w_i R_i`` with ``R`` the interleaved quadrature vector."""
        w = np.asarray(coeffs, dtype=float)
        if w.size != 2 * self.n_modes:
            raise InvalidArgument("coefficient vector must have length 2 * n_modes")
        return float(w @ self.cov @ w)

    def combination(self, x_coeffs=None, p_coeffs=None):
        """Interleaved coefficient vector for ``sum h_i X_i + sum g_i P_i``."""
        w = np.zeros(2 * self.n_modes)
        if x_coeffs is not None:
            w[0::2] = _check_len(x_coeffs, self.n_modes)
        if p_coeffs is not None:
            w[1::2] = _check_len(p_coeffs, self.n_modes)
        return w


def _check_len(c, n):
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.size != n:
        raise InvalidArgument(f"expected {n} coefficients, got {c.size}")
    return c


def vacuum(n_modes) -> GaussianState:
    if int(n_modes) != n_modes or n_modes < 1:
        raise InvalidArgument("n_modes must be a positive integer")
    n = int(n_modes)
    return GaussianState(n, np.zeros(2 * n), np.eye(2 * n))


def apply_symplectic(state: GaussianState, S) -> GaussianState:
    S = np.asarray(S, dtype=float)
    return GaussianState(state.n_modes, S @ state.mean, S @ state.cov @ S.T, state.conditioned)


def _check_mode(state, m):
    if int(m) != m or not 0 <= m < state.n_modes:
        raise InvalidArgument(f"mode {m!r} out of range for {state.n_modes} modes")
    return int(m)


def squeezer_matrix(n_modes, mode, r, quadrature="P"):
    S = np.eye(2 * n_modes)
    q = quadrature.upper()
    if q not in ("X", "P"):
        raise InvalidArgument(f"squeezed quadrature must be 'X' or 'P', got {quadrature!r}")
    sq, anti = (pi(mode), xi(mode)) if q == "P" else (xi(mode), pi(mode))
    S[sq, sq] = np.exp(-r)
    S[anti, anti] = np.exp(r)
    return S


def apply_squeezer(state: GaussianState, mode, r, quadrature="P") -> GaussianState:
    """Squeeze ``quadrature`` of ``mode``: its variance is multiplied by ``exp(-2r)``."""
    mode = _check_mode(state, mode)
    if not r >= 0:
        raise InvalidArgument("squeezing parameter r must be >= 0")
    return apply_symplectic(state, squeezer_matrix(state.n_modes, mode, r, quadrature))


def beamsplitter_matrix(n_modes, i, j, R, phase=0.0):
    """Real mixing ``a_i -> sqrt(R) a_i + sqrt(1-R) a_j``, ``a_j -> sqrt(1-R) a_i - sqrt(R) a_j``.

    A nonzero ``phase`` first rotates mode ``j`` by ``a_j -> exp(i phase) a_j``.
    """
    if i == j:
        raise InvalidArgument("beam splitter needs two distinct modes")
    if not 0 <= R <= 1:
        raise InvalidArgument(f"reflectivity R={R!r} must lie in [0, 1]")
    t, s = np.sqrt(R), np.sqrt(1 - R)
    S = np.eye(2 * n_modes)
    for q in (0, 1):
        a, b = 2 * i + q, 2 * j + q
        S[a, a], S[a, b] = t, s
        S[b, a], S[b, b] = s, -t
    if phase:
        rot = np.eye(2 * n_modes)
        c, sn = np.cos(phase), np.sin(phase)
        rot[xi(j), xi(j)], rot[xi(j), pi(j)] = c, -sn
        rot[pi(j), xi(j)], rot[pi(j), pi(j)] = sn, c
        S = S @ rot
    return S


def apply_beamsplitter(state: GaussianState, i, j, R, phase=0.0) -> GaussianState:
    i, j = _check_mode(state, i), _check_mode(state, j)
    return apply_symplectic(state, beamsplitter_matrix(state.n_modes, i, j, R, phase))


# --------------------------------------------------------------------------
# networks


@dataclass(frozen=True)
class Squeezer:
    mode: int
    r: float
    quadrature: str = "P"


@dataclass(frozen=True)
class BeamSplitter:
    i: int
    j: int
    R: float
    phase: float = 0.0


@dataclass(frozen=True)
class NetworkConfig:
    n_modes: int
    elements: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise InvalidArgument("n_modes must be a positive integer")
        for el in self.elements:
            modes = (el.mode,) if isinstance(el, Squeezer) else (el.i, el.j) if isinstance(el, BeamSplitter) else None
            if modes is None:
                raise InvalidArgument(f"unknown network element {el!r}")
            if any(not 0 <= m < self.n_modes for m in modes):
                raise InvalidArgument(f"element {el!r} refers to a mode outside 0..{self.n_modes - 1}")
            if isinstance(el, BeamSplitter):
                if el.i == el.j:
                    raise InvalidArgument(f"beam splitter {el!r} needs distinct modes")
                if not 0 <= el.R <= 1:
                    raise InvalidArgument(f"beam splitter reflectivity {el.R!r} outside [0, 1]")
            elif el.r < 0:
                raise InvalidArgument(f"squeezer {el!r} has negative r")
        object.__setattr__(self, "elements", tuple(self.elements))


def run_network(config: NetworkConfig) -> GaussianState:
    state = vacuum(config.n_modes)
    for el in config.elements:
        if isinstance(el, Squeezer):
            state = apply_squeezer(state, el.mode, el.r, el.quadrature)
        else:
            state = apply_beamsplitter(state, el.i, el.j, el.R, el.phase)
    return state


def cv_ghz_network(r) -> NetworkConfig:
    """Three squeezed inputs (P-squeezed mode 0, X-squeezed modes 1, 2) on R=1/3 then R=1/2."""
    return NetworkConfig(3, (
        Squeezer(0, r, "P"), Squeezer(1, r, "X"), Squeezer(2, r, "X"),
        BeamSplitter(0, 1, 1 / 3), BeamSplitter(1, 2, 1 / 2),
    ))


def cv_epr_network(r) -> NetworkConfig:
    """Two squeezed inputs and one vacuum, mixed on two balanced beam splitters."""
    return NetworkConfig(3, (
        Squeezer(0, r, "P"), Squeezer(1, r, "X"),
        BeamSplitter(0, 1, 1 / 2), BeamSplitter(1, 2, 1 / 2),
    ))


def single_squeezed_network(r, n_modes=3) -> NetworkConfig:
    """One P-squeezed input spread over ``n_modes`` by a beam-splitter chain.

    Reflectivities ``1/n, 1/(n-1), ..., 1/2`` give equal amplitude in every
    output (1/3, 1/2 for three modes; 1/4, 1/3, 1/2 for four).
    """
    if n_modes < 2:
        raise InvalidArgument("need at least two modes")
    els = [Squeezer(0, r, "P")]
    for k in range(n_modes - 1):
        els.append(BeamSplitter(k, k + 1, 1 / (n_modes - k)))
    return NetworkConfig(n_modes, tuple(els))


# --------------------------------------------------------------------------
# moments


def linear_combination_moments(state: GaussianState, x_coeffs, p_coeffs):
    """``(Var sum h_i X_i, Var sum g_i P_i)``."""
    u = state.combination(x_coeffs=x_coeffs)
    v = state.combination(p_coeffs=p_coeffs)
    return state.variance(u), state.variance(v)


def condition_on_measurement(state: GaussianState, measured_combination, outcome=0.0) -> GaussianState:
    """Gaussian update after observing ``w . R = outcome``.

    ``cov -> cov - cov w w^T cov / (w^T cov w)`` and the mean moves by linear
    regression on the outcome.
    """
    w = np.asarray(measured_combination, dtype=float).reshape(-1)
    if w.size != 2 * state.n_modes:
        raise InvalidArgument("measured combination must have length 2 * n_modes")
    cw = state.cov @ w
    var = float(w @ cw)
    if not var > 1e-14 * max(1.0, np.max(np.abs(state.cov))):
        raise DegenerateMeasurement("measured combination has zero variance")
    cov = state.cov - np.outer(cw, cw) / var
    mean = state.mean + cw * (outcome - w @ state.mean) / var
    return GaussianState(state.n_modes, mean, cov, conditioned=True)


def _sites(state, sites):
    sites = list(range(state.n_modes)) if sites is None else [int(s) for s in sites]
    for s in sites:
        _check_mode(state, s)
    return sites


def quadrature_moment_set(state: GaussianState, sites=None) -> MomentSet:
    """Criteria moments with ``A_k = X_k`` (gains h), ``B_k = P_k`` (gains g).

    ``[X, P] = 2i`` fixes ``c = 2`` and ``<C_k> = 1`` in every state.
    """
    sites = _sites(state, sites)
    idx = [xi(s) for s in sites] + [pi(s) for s in sites]
    N = len(sites)
    return MomentSet(np.ones(N), state.cov[np.ix_(idx, idx)], scale=2.0, provenance="quadrature",
                     mean_var=np.zeros(N), constant_commutator=True, labels=("X", "P", "1"))


def linearized_stokes_moments(state: GaussianState, sites=None, alpha_v=1.0) -> MomentSet:
    """Stokes moments of signal modes mixed with a bright vertically polarized field.

    Each site's horizontal mode carries the signal and the vertical mode a
    coherent amplitude ``i alpha_v``.  To leading order in ``alpha_v``:

        S_y,k = alpha_v P_k,   S_z,k = alpha_v X_k,
        <S_x,k> = -alpha_v^2,  Var(S_x,k) = alpha_v^2.

    Roles: ``A = S_y`` (gains h), ``B = S_z`` (gains g), ``C = S_x`` with
    ``[S_y, S_z] = 2i S_x``.
    """
    if not alpha_v > 0:
        raise InvalidArgument("alpha_v must be positive")
    sites = _sites(state, sites)
    idx = [pi(s) for s in sites] + [xi(s) for s in sites]
    N = len(sites)
    a2 = float(alpha_v) ** 2
    return MomentSet(-a2 * np.ones(N), a2 * state.cov[np.ix_(idx, idx)], scale=2.0,
                     provenance="linearized", mean_var=a2 * np.ones(N), labels=("Sy", "Sz", "Sx"))
