"""Named constructions of the optical and atomic systems the criteria are applied to.

Each builder returns a :class:`PresetResult` holding the criteria moments, the
underlying Gaussian state when there is one, and suggested default gains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import gaussian_engine as ge
from .criteria import GainVector, MomentSet
from .errors import InvalidArgument


@dataclass
class PresetResult:
    name: str
    moments: MomentSet
    state: Optional[ge.GaussianState] = None
    quadrature_moments: Optional[MomentSet] = None
    default_gains: Optional[GainVector] = None
    info: dict = field(default_factory=dict)

    def moments_for(self, criterion_id):
        """Moment set a criterion should read (quadrature moments for ``cv_*``)."""
        if criterion_id.startswith("cv_"):
            if self.quadrature_moments is None:
                raise InvalidArgument(f"preset {self.name!r} has no quadrature moments for {criterion_id}")
            return self.quadrature_moments
        return self.moments


def _param(params, name, default=None, kind=float, check=None, what=""):
    if name not in params:
        if default is None:
            raise InvalidArgument(f"missing parameter {name!r}")
        return default
    try:
        value = kind(params[name])
    except (TypeError, ValueError):
        raise InvalidArgument(f"parameter {name!r}={params[name]!r} is not a valid {kind.__name__}")
    if isinstance(value, float) and not math.isfinite(value):
        raise InvalidArgument(f"parameter {name!r} must be finite")
    if check is not None and not check(value):
        raise InvalidArgument(f"parameter {name!r}={value!r} out of range{what}")
    return value


def _r(params):
    return _param(params, "r", check=lambda v: v >= 0, what=" (r >= 0)")


def _alpha_v(params):
    return _param(params, "alpha_v", 1.0, check=lambda v: v > 0, what=" (alpha_v > 0)")


def _table_gains(h, g):
    return GainVector((1.0, h, h), (1.0, g, g))


# --------------------------------------------------------------------------
# optical networks


def cv_ghz(r, alpha_v=1.0) -> PresetResult:
    """Three-mode CV GHZ network, read out as linearized Stokes moments.

    Roles in the Stokes moments: ``A = S_y ~ alpha_v P`` takes gains ``h`` and
    ``B = S_z ~ alpha_v X`` takes gains ``g``.  The quadrature moments use the
    same assignment (``A = P``, ``B = X``).
    """
    state = ge.run_network(ge.cv_ghz_network(r))
    return PresetResult(
        "cv_ghz",
        ge.linearized_stokes_moments(state, alpha_v=alpha_v),
        state,
        _pq_moments(state),
        _table_gains(0.68, -0.40),
        {"r": r, "alpha_v": alpha_v},
    )


def cv_epr(r, alpha_v=1.0) -> PresetResult:
    """Two squeezed inputs and a vacuum on two balanced beam splitters."""
    state = ge.run_network(ge.cv_epr_network(r))
    return PresetResult(
        "cv_epr",
        ge.linearized_stokes_moments(state, alpha_v=alpha_v),
        state,
        _pq_moments(state),
        _table_gains(0.68, -0.68),
        {"r": r, "alpha_v": alpha_v},
    )


def _pq_moments(state):
    """Quadrature moments with ``A = P`` and ``B = X`` (constant commutator)."""
    m = ge.quadrature_moment_set(state)
    N = m.N
    perm = list(range(N, 2 * N)) + list(range(N))
    return MomentSet(m.mean, m.cov[np.ix_(perm, perm)], m.scale, m.provenance, m.mean_var,
                     True, ("P", "X", "1"))


def polarization_transfer(r, alpha_v=1.0, source="cv_ghz") -> PresetResult:
    """Stokes moments after mixing each signal mode with a bright vertical field."""
    builders = {"cv_ghz": cv_ghz, "cv_epr": cv_epr}
    if source not in builders:
        raise InvalidArgument(f"parameter 'source'={source!r} must be one of {sorted(builders)}")
    res = builders[source](r, alpha_v)
    res.name = "polarization_transfer"
    res.info["source"] = source
    return res


def single_squeezed(r, n_modes) -> PresetResult:
    """One P-squeezed input spread over ``n_modes`` outputs (quadrature moments ``A = X``, ``B = P``)."""
    state = ge.run_network(ge.single_squeezed_network(r, n_modes))
    m = ge.quadrature_moment_set(state)
    w = 1.0 / (n_modes - 1)
    gains = GainVector((1.0,) + (-w,) * (n_modes - 1), (1.0,) + (w,) * (n_modes - 1))
    return PresetResult(f"single_squeezed_{n_modes}", m, state, m, gains, {"r": r})


def single_squeezed_tripartite(r) -> PresetResult:
    res = single_squeezed(r, 3)
    res.name = "single_squeezed_tripartite"
    return res


def single_squeezed_fourpartite(r) -> PresetResult:
    res = single_squeezed(r, 4)
    res.name = "single_squeezed_fourpartite"
    return res


# --------------------------------------------------------------------------
# atomic ensembles probed by light


def atomic_ensemble_qnd(J_x, alpha, light_noise=1.0, mean_ratio=(1.0, -0.5, -0.5)) -> PresetResult:
    """Three spin ensembles entangled by two QND light pulses and conditioning.

    Each ensemble is a coherent spin state along x with ``<J_x,k> = J_x * mean_ratio[k]``,
    treated in the Holstein-Primakoff limit as one bosonic mode:

        J_z,k = sigma_k X_k,   J_y,k = -s_k sigma_k P_k,   sigma_k = sqrt(|J_x,k| / 2),

    with ``s_k`` the sign of ``J_x,k``, so ``Var J_z,k = Var J_y,k = |J_x,k|/2``.
    The first pulse writes ``alpha * sum J_z`` onto a light quadrature, the
    second writes ``alpha * sum J_y`` onto another, and both light outputs are
    measured.  With means summing to zero the two collective observables
    commute and each pulse leaves the other observable untouched.  The
    returned moments are conditioned on both outcomes.

    Roles: ``A = J_z``, ``B = J_y``, ``C = J_x`` with scale 1.
    """
    if not J_x > 0:
        raise InvalidArgument("parameter 'J_x' must be positive")
    if not alpha >= 0:
        raise InvalidArgument("parameter 'alpha' must be >= 0")
    if not light_noise > 0:
        raise InvalidArgument("parameter 'light_noise' must be positive")
    means = J_x * np.asarray(mean_ratio, dtype=float)
    if means.size != 3:
        raise InvalidArgument("mean_ratio needs three entries")
    sig = np.sqrt(np.abs(means) / 2)
    sgn = np.sign(means)
    # modes 0..2 atoms, 3 and 4 light
    cov0 = np.eye(10)
    cov0[6, 6] = cov0[7, 7] = cov0[8, 8] = cov0[9, 9] = light_noise
    state = ge.GaussianState(5, np.zeros(10), cov0, conditioned=light_noise < 1)
    L1, L2 = 3, 4
    X, P = ge.xi, ge.pi
    S1 = np.eye(10)
    for k in range(3):
        S1[X(L1), X(k)] += alpha * sig[k]
        S1[P(k), P(L1)] -= alpha * sig[k]
    d = -sgn * sig
    S2 = np.eye(10)
    for k in range(3):
        S2[X(L2), P(k)] += alpha * d[k]
        S2[X(k), P(L2)] += alpha * d[k]
    state = ge.apply_symplectic(ge.apply_symplectic(state, S1), S2)
    if alpha > 0:
        state = ge.condition_on_measurement(state, np.eye(10)[X(L1)])
        state = ge.condition_on_measurement(state, np.eye(10)[X(L2)])
    idx_a = [X(k) for k in range(3)]
    idx_b = [P(k) for k in range(3)]
    T = np.zeros((6, 10))
    for k in range(3):
        T[k, idx_a[k]] = sig[k]
        T[3 + k, idx_b[k]] = d[k]
    cov = T @ state.cov @ T.T
    moments = MomentSet(means, cov, scale=1.0, provenance="linearized", mean_var=np.zeros(3),
                        labels=("Jz", "Jy", "Jx"))
    return PresetResult("atomic_ensemble_qnd", moments, state, None, GainVector.unit(3),
                        {"J_x": J_x, "alpha": alpha, "light_noise": light_noise})


def atomic_qnd_closed_form(J_x, alpha, light_noise=1.0):
    """``Var(sum J_z | record) + Var(sum J_y | record)`` for the default mean ratio."""
    v = J_x  # Var(sum J_z) = sum |J_x,k| / 2 = J_x
    return 2 * v * light_noise / (light_noise + alpha ** 2 * v)


# --------------------------------------------------------------------------
# two clouds and cloud splitting


def two_cloud_epr(N, r) -> PresetResult:
    """Two spin clouds of ``N`` atoms each with EPR-correlated collective spins.

    Holstein-Primakoff picture of two clouds polarized along x: ``S_z = (sqrt(N)/2) X``,
    ``S_y = -(sqrt(N)/2) P`` for each cloud's mode.  The modes come from a
    P-squeezed and an X-squeezed vacuum mixed on a balanced beam splitter, so
    ``S_z,A - S_z,B`` and ``S_y,A + S_y,B`` are both squeezed.

    Roles: ``A = S_z``, ``B = S_y``, ``C = S_x``.  ``<S_x>`` and ``Var(S_x)``
    include the second-order number correction ``S_x = N/2 - a^dag a``.
    """
    if not N > 0:
        raise InvalidArgument("parameter 'N' must be positive")
    cfg = ge.NetworkConfig(2, (ge.Squeezer(0, r, "P"), ge.Squeezer(1, r, "X"), ge.BeamSplitter(0, 1, 0.5)))
    state = ge.run_network(cfg)
    c = math.sqrt(N) / 2
    T = np.zeros((4, 4))
    T[0, ge.xi(0)] = T[1, ge.xi(1)] = c
    T[2, ge.pi(0)] = T[3, ge.pi(1)] = -c
    cov = T @ state.cov @ T.T
    means, mvars = [], []
    for m in range(2):
        V = state.cov[2 * m:2 * m + 2, 2 * m:2 * m + 2]
        n_mean = (np.trace(V) - 2) / 4
        means.append(N / 2 - n_mean)
        mvars.append((np.trace(V @ V) - 2) / 8)
    moments = MomentSet(np.array(means), cov, 1.0, "linearized", np.array(mvars), labels=("Sz", "Sy", "Sx"))
    return PresetResult("two_cloud_epr", moments, state, None, None, {"N": N, "r": r, "N_A": N})


def split_cloud(parent: MomentSet, ratio, include_vacuum_terms=False, N_A=None) -> MomentSet:
    """Split cloud A of a two-cloud moment set into A1 (fraction ``ratio``) and A2.

    Every internal mode of A passes a beam splitter with a vacuum port, so
    ``O_A1 = t O_A + F`` and ``O_A2 = (1-t) O_A + G`` for each spin component,
    with ``F + G`` built from vacuum modes only.  Without vacuum terms the
    grouped sums ``O_A1 + O_A2`` reproduce the parent exactly.  With them each
    component of A1 and A2 gains the partition noise ``t(1-t) N_A / 4``, and
    A1 and A2 become anticorrelated by the same amount.
    """
    if not 0 < ratio < 1:
        raise InvalidArgument(f"split ratio {ratio!r} must lie in (0, 1)")
    if parent.N != 2:
        raise InvalidArgument("the parent moment set must describe two clouds")
    t = float(ratio)
    L = np.array([[t, 0.0], [1 - t, 0.0], [0.0, 1.0]])
    K = np.zeros((6, 4))
    K[:3, :2] = L
    K[3:, 2:] = L
    cov = K @ parent.cov @ K.T
    mean = L @ parent.mean
    mean_var = None
    if parent.mean_var is not None:
        mean_var = (L ** 2) @ parent.mean_var
    if include_vacuum_terms:
        if N_A is None:
            N_A = 2 * abs(parent.mean[0])
        if not N_A >= 0:
            raise InvalidArgument("N_A must be >= 0")
        q = t * (1 - t) * N_A / 4
        noise = np.array([[q, -q, 0.0], [-q, q, 0.0], [0.0, 0.0, 0.0]])
        cov[:3, :3] += noise
        cov[3:, 3:] += noise
        if mean_var is not None:
            mean_var = mean_var + np.array([q, q, 0.0])
    return MomentSet(mean, cov, parent.scale, parent.provenance, mean_var, parent.constant_commutator,
                     parent.labels)


def bec_split(N, r, ratio=0.5, include_vacuum_terms=False) -> PresetResult:
    parent = two_cloud_epr(N, r)
    m = split_cloud(parent.moments, ratio, include_vacuum_terms, N_A=N)
    return PresetResult("bec_split", m, parent.state, None, None,
                        {"N": N, "r": r, "ratio": ratio, "parent": parent.moments,
                         "include_vacuum_terms": include_vacuum_terms})


# --------------------------------------------------------------------------
# small qubit states


def qubit_state(kind) -> PresetResult:
    """Three-qubit GHZ or W state with exact spin-1/2 moments and its inference strategy."""
    from . import qudit_engine as qe

    if kind == "ghz":
        state, strategy = qe.ghz_state(3), qe.ghz_strategy()
    elif kind == "w":
        state, strategy = qe.w_state(), qe.w_strategy()
    else:
        raise InvalidArgument(f"unknown qubit state {kind!r}")
    return PresetResult(f"qubit_{kind}", qe.spin_moment_set(state), None, None, GainVector.unit(3),
                        {"qudit_state": state, "strategy": strategy})


# --------------------------------------------------------------------------
# registry


PRESETS = (
    "cv_ghz", "cv_epr", "single_squeezed_tripartite", "single_squeezed_fourpartite",
    "polarization_transfer", "atomic_ensemble_qnd", "bec_split", "qubit_ghz", "qubit_w",
)


@dataclass(frozen=True)
class PresetSpec:
    name: str
    parameters: dict = field(default_factory=dict)


def _flag(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(v)


def build(spec: PresetSpec) -> PresetResult:
    """Build a preset from a name and a parameter map (values may be strings)."""
    p = dict(spec.parameters)
    name = spec.name
    if name == "cv_ghz":
        return cv_ghz(_r(p), _alpha_v(p))
    if name == "cv_epr":
        return cv_epr(_r(p), _alpha_v(p))
    if name == "single_squeezed_tripartite":
        return single_squeezed_tripartite(_r(p))
    if name == "single_squeezed_fourpartite":
        return single_squeezed_fourpartite(_r(p))
    if name == "polarization_transfer":
        return polarization_transfer(_r(p), _alpha_v(p), str(p.get("source", "cv_ghz")))
    if name == "atomic_ensemble_qnd":
        return atomic_ensemble_qnd(
            _param(p, "J_x", 1000.0, check=lambda v: v > 0, what=" (J_x > 0)"),
            _param(p, "alpha", 0.1, check=lambda v: v >= 0, what=" (alpha >= 0)"),
            _param(p, "light_noise", 1.0, check=lambda v: v > 0, what=" (light_noise > 0)"),
        )
    if name == "bec_split":
        return bec_split(
            _param(p, "N", 1000.0, check=lambda v: v > 0, what=" (N > 0)"),
            _param(p, "r", 0.5, check=lambda v: v >= 0, what=" (r >= 0)"),
            _param(p, "ratio", 0.5, check=lambda v: 0 < v < 1, what=" (0 < ratio < 1)"),
            _param(p, "include_vacuum_terms", False, kind=_flag),
        )
    if name in ("qubit_ghz", "qubit_w"):
        return qubit_state(name.split("_")[1])
    raise InvalidArgument(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
