"""Exact pure/mixed states of a few qudits and inference-based criteria.

States are dense vectors or density matrices over the tensor product of the
subsystems (first subsystem is the most significant index, as in ``np.kron``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Sequence

import numpy as np

from .criteria import FULL_INSEPARABILITY, GENUINE, INCONCLUSIVE, CriterionResult, MomentSet, is_violation
from .errors import InvalidArgument
from .spin_algebra import OperatorSet, make_spin_operators, pauli_operators

STATE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CompositeState:
    dims: tuple
    data: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        data = np.asarray(self.data, dtype=complex)
        D = int(np.prod(dims))
        if any(d < 1 for d in dims):
            raise InvalidArgument("subsystem dimensions must be positive")
        if data.ndim == 1:
            if data.size != D:
                raise InvalidArgument(f"state length {data.size} != product of dims {D}")
            if abs(np.linalg.norm(data) - 1) > STATE_TOL:
                raise InvalidArgument("pure state is not normalized")
        elif data.ndim == 2:
            if data.shape != (D, D):
                raise InvalidArgument(f"density matrix shape {data.shape} != ({D}, {D})")
            if abs(np.trace(data) - 1) > STATE_TOL:
                raise InvalidArgument("density matrix does not have unit trace")
            if np.max(np.abs(data - data.conj().T)) > STATE_TOL:
                raise InvalidArgument("density matrix is not Hermitian")
            if np.linalg.eigvalsh(data)[0] < -STATE_TOL:
                raise InvalidArgument("density matrix is not positive semidefinite")
        else:
            raise InvalidArgument("state must be a vector or a square matrix")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "data", data)

    @property
    def is_pure(self):
        return self.data.ndim == 1

    @property
    def dim(self):
        return int(np.prod(self.dims))

    @property
    def n_sites(self):
        return len(self.dims)

    def density(self):
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def expect(self, op):
        if self.is_pure:
            return np.vdot(self.data, op @ self.data)
        return np.trace(op @ self.data)


def product_state(kets, dims=None) -> CompositeState:
    kets = [np.asarray(k, dtype=complex) for k in kets]
    kets = [k / np.linalg.norm(k) for k in kets]
    return CompositeState(tuple(k.size for k in kets), reduce(np.kron, kets))


def ghz_state(N) -> CompositeState:
    """``(|up...up> - |down...down>)/sqrt(2)`` on ``N`` qubits (``|up>`` = first basis vector)."""
    if int(N) != N or N < 2:
        raise InvalidArgument("GHZ state needs N >= 2")
    N = int(N)
    psi = np.zeros(2 ** N, dtype=complex)
    psi[0] = 1 / np.sqrt(2)
    psi[-1] = -1 / np.sqrt(2)
    return CompositeState((2,) * N, psi)


def w_state() -> CompositeState:
    """Equal superposition of the three single-up configurations of three qubits."""
    psi = np.zeros(8, dtype=complex)
    # up = index 0 per qubit, so "one up" means exactly one 0-bit
    for idx in (0b011, 0b101, 0b110):
        psi[idx] = 1 / np.sqrt(3)
    return CompositeState((2, 2, 2), psi)


def embed(op, site, dims):
    """Lift a local operator on ``site`` to the full tensor-product space."""
    if not 0 <= site < len(dims):
        raise InvalidArgument(f"site {site} out of range for {len(dims)} subsystems")
    op = np.asarray(op)
    if op.shape != (dims[site], dims[site]):
        raise InvalidArgument(f"operator shape {op.shape} does not match site dimension {dims[site]}")
    left = int(np.prod(dims[:site]))
    right = int(np.prod(dims[site + 1:]))
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


# --------------------------------------------------------------------------
# moments


@dataclass(frozen=True, eq=False)
class ObservableMoments:
    """Means and symmetrized covariance of a list of Hermitian observables."""

    means: np.ndarray
    cov: np.ndarray

    def variance(self, coeffs) -> float:
        c = np.asarray(coeffs, dtype=float)
        return float(c @ self.cov @ c)

    def mean_of(self, coeffs) -> float:
        return float(np.asarray(coeffs, dtype=float) @ self.means)


def moments(state: CompositeState, observables: Sequence) -> ObservableMoments:
    """Exact means and ``(<O_i O_j> + <O_j O_i>)/2 - <O_i><O_j>`` of the observables."""
    ops = [np.asarray(o) for o in observables]
    for o in ops:
        if o.shape != (state.dim, state.dim):
            raise InvalidArgument(f"observable shape {o.shape} does not match state dimension {state.dim}")
    if state.is_pure:
        vecs = np.array([o @ state.data for o in ops])
        means = np.real(vecs @ state.data.conj())
        second = np.real(vecs.conj() @ vecs.T)
    else:
        O = np.array(ops)
        Orho = O @ state.data
        means = np.real(np.einsum("iaa->i", Orho))
        # tr(O_i O_j rho) = sum_ab O_i[a, b] (O_j rho)[b, a]
        second = np.real(np.einsum("iab,jba->ij", O, Orho))
        second = 0.5 * (second + second.T)
    cov = second - np.outer(means, means)
    return ObservableMoments(means, 0.5 * (cov + cov.T))


def spin_moment_set(state: CompositeState, site_ops=None, components=("x", "y", "z")) -> MomentSet:
    """Criteria moments for qudit sites measured with a spin operator set.

    ``components`` names which local operators play the roles ``(A, B, C)``.
    By default each site uses the spin-``(d-1)/2`` matrices of its dimension.
    """
    if site_ops is None:
        site_ops = [make_spin_operators((d - 1) / 2) for d in state.dims]
    elif isinstance(site_ops, OperatorSet):
        site_ops = [site_ops] * state.n_sites
    if len(site_ops) != state.n_sites:
        raise InvalidArgument("one operator set per site is required")
    ca, cb, cc = components
    A = [embed(s[ca], k, state.dims) for k, s in enumerate(site_ops)]
    B = [embed(s[cb], k, state.dims) for k, s in enumerate(site_ops)]
    C = [embed(s[cc], k, state.dims) for k, s in enumerate(site_ops)]
    mo = moments(state, A + B)
    mc = moments(state, C)
    scales = {s.scale for s in site_ops}
    if len(scales) != 1:
        raise InvalidArgument("all sites must share one commutator scale")
    # a cyclic (A,B,C) keeps the commutator sign; an anticyclic one flips it,
    # which the criteria never see because only |<C>| enters the bounds
    return MomentSet(mc.means, mo.cov, scale=scales.pop(), provenance="exact",
                     mean_var=np.diag(mc.cov).copy(), labels=tuple(components))


# --------------------------------------------------------------------------
# inference observables


@dataclass(frozen=True, eq=False)
class InferenceObservable:
    """Classical relabeling of a product measurement on partner sites.

    ``relabel`` maps the tuple of eigenvalues observed at ``partner_sites``
    (in that order) to the inferred value.
    """

    target_site: int
    partner_sites: tuple
    local_bases: tuple
    relabel: Callable

    def __post_init__(self):
        ps = tuple(int(p) for p in self.partner_sites)
        if len(set(ps)) != len(ps):
            raise InvalidArgument("partner operators must act on distinct sites")
        if self.target_site in ps:
            raise InvalidArgument("target site must be disjoint from partner sites")
        if len(self.local_bases) != len(ps):
            raise InvalidArgument("one measurement operator per partner site is required")
        object.__setattr__(self, "partner_sites", ps)


def _spectral(op, tol=1e-9):
    """Distinct eigenvalues of a Hermitian matrix with their projectors."""
    w, v = np.linalg.eigh(op)
    groups = []
    for val, vec in zip(w, v.T):
        if groups and abs(groups[-1][0] - val) < tol:
            groups[-1][1].append(vec)
        else:
            groups.append([val, [vec]])
    out = []
    for val, vecs in groups:
        V = np.array(vecs).T
        out.append((float(np.round(val, 12)), V @ V.conj().T))
    return out


def inferred_operator(inf: InferenceObservable, dims) -> np.ndarray:
    """The Hermitian operator ``sum_o f(o) Pi_o`` on the full space."""
    spectra = [_spectral(op) for op in inf.local_bases]
    F = np.zeros((int(np.prod(dims)),) * 2, dtype=complex)
    for combo in itertools.product(*spectra):
        value = float(inf.relabel(tuple(val for val, _ in combo)))
        if value == 0.0:
            continue
        proj = reduce(np.matmul, [embed(P, s, dims) for (_, P), s in zip(combo, inf.partner_sites)])
        F += value * proj
    return F


def inference_variance(state: CompositeState, target_op, inf: InferenceObservable) -> float:
    """``Var(A - f)`` with ``A`` the target-site operator and ``f`` the inferred value."""
    if not 0 <= inf.target_site < state.n_sites or any(
        not 0 <= p < state.n_sites for p in inf.partner_sites
    ):
        raise InvalidArgument("inference sites out of range")
    A = embed(target_op, inf.target_site, state.dims)
    D = A - inferred_operator(inf, state.dims)
    m1 = np.real(state.expect(D))
    m2 = np.real(state.expect(D @ D))
    return float(max(m2 - m1 * m1, 0.0))


def _others(site, n=3):
    return tuple(k for k in range(n) if k != site)


def ghz_strategy(site_ops: OperatorSet = None):
    """Perfect-inference strategy for the GHZ state on components ``(z, x)``.

    ``z``: copy the first partner's outcome (all z outcomes agree).
    ``x``: minus the product of the partners' outcomes (the state is a
    ``-1`` eigenstate of the triple x product).
    """
    ops = site_ops or pauli_operators()
    strat = {}
    for k in range(3):
        p = _others(k)
        strat[k] = (
            InferenceObservable(k, p, (ops.z, ops.z), lambda o: o[0]),
            InferenceObservable(k, p, (ops.x, ops.x), lambda o: -o[0] * o[1]),
        )
    return strat


def w_strategy(site_ops: OperatorSet = None):
    """Inference strategy for the W state on components ``(z, x)``.

    ``z``: product of the partners' z outcomes (one excitation in total).
    ``x``: ``+1`` if both partners give ``+1``, ``-1`` if both give ``-1``,
    otherwise ``0``.
    """
    ops = site_ops or pauli_operators()

    def agree(o):
        return o[0] if o[0] == o[1] else 0.0

    strat = {}
    for k in range(3):
        p = _others(k)
        strat[k] = (
            InferenceObservable(k, p, (ops.z, ops.z), lambda o: o[0] * o[1]),
            InferenceObservable(k, p, (ops.x, ops.x), agree),
        )
    return strat


def criterion5_evaluate(state: CompositeState, strategy, C=1.0, components=("z", "x"),
                        site_ops: OperatorSet = None) -> CriterionResult:
    """Inference-variance criterion ``B_1 + B_2 + B_3 >= C``.

    ``B_k = Var(O_a,k - f_a) + Var(O_b,k - f_b)`` for the two chosen components
    ``(a, b)``; ``C`` is the planar bound for those components in the units of
    ``site_ops`` (Pauli by default, where ``C = 1``).  The sum falling below
    ``C`` certifies genuine tripartite entanglement; every ``B_k < C``
    certifies full tripartite inseparability.
    """
    if not C > 0:
        raise InvalidArgument("planar bound C must be positive")
    if state.n_sites != 3:
        raise InvalidArgument("the inference criterion is tripartite")
    ops = site_ops or pauli_operators()
    ca, cb = components
    Bs = []
    for k in range(3):
        inf_a, inf_b = strategy[k]
        if inf_a.target_site != k or inf_b.target_site != k:
            raise InvalidArgument(f"strategy entry {k} targets the wrong site")
        Bs.append(inference_variance(state, ops[ca], inf_a) + inference_variance(state, ops[cb], inf_b))
    total = float(sum(Bs))
    genuine = is_violation(total, C)
    full = all(is_violation(b, C) for b in Bs)
    verdict = GENUINE if genuine else (FULL_INSEPARABILITY if full else INCONCLUSIVE)
    return CriterionResult(
        "c5", total, float(C), verdict, False,
        flags={"B": ";".join(f"{b:.12g}" for b in Bs), "genuine": genuine, "full_inseparability": full},
        details={"B": Bs},
    )
