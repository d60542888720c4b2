"""Brute-force reference computations used to cross-check the main engines."""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidArgument
from .spin_algebra import _as_spin, make_spin_operators


# --------------------------------------------------------------------------
# planar bound by random search


def _batch_planar(psis, x, y):
    """Var(x)+Var(y) for each row of ``psis`` (unnormalized kets)."""
    psis = psis / np.linalg.norm(psis, axis=1, keepdims=True)
    total = np.zeros(len(psis))
    for M in (x, y):
        v = psis @ M.T
        m1 = np.real(np.sum(psis.conj() * v, axis=1))
        m2 = np.real(np.sum(v.conj() * v, axis=1))
        total += m2 - m1 ** 2
    return total


def brute_force_planar(J, n_samples=1_000_000, seed=0, n_refine=20, batch=100_000):
    """Estimate ``min Var(J_x)+Var(J_y)`` by random pure states plus local descent.

    Samples ``n_samples`` Gaussian-random kets, keeps the ``n_refine`` best and
    polishes each with BFGS over the real and imaginary amplitudes.  Returns
    ``(value, state)``.
    """
    J = _as_spin(J)
    ops = make_spin_operators(J)
    x, y = ops.x, ops.y
    d = ops.dim
    rng = np.random.default_rng(seed)
    keep_vals = np.empty(0)
    keep_states = np.empty((0, d), dtype=complex)
    done = 0
    while done < n_samples:
        m = min(batch, n_samples - done)
        psis = rng.normal(size=(m, d)) + 1j * rng.normal(size=(m, d))
        vals = _batch_planar(psis, x, y)
        idx = np.argsort(vals)[:n_refine]
        keep_vals = np.concatenate([keep_vals, vals[idx]])
        keep_states = np.concatenate([keep_states, psis[idx]])
        order = np.argsort(keep_vals)[:n_refine]
        keep_vals, keep_states = keep_vals[order], keep_states[order]
        done += m

    def f(params):
        psi = params[:d] + 1j * params[d:]
        return _batch_planar(psi[None, :], x, y)[0]

    best_val, best_psi = np.inf, None
    for psi0 in keep_states:
        res = minimize(f, np.concatenate([psi0.real, psi0.imag]), method="BFGS",
                       options={"gtol": 1e-12, "maxiter": 10_000})
        if res.fun < best_val:
            best_val = float(res.fun)
            psi = res.x[:d] + 1j * res.x[d:]
            best_psi = psi / np.linalg.norm(psi)
    return best_val, best_psi


# --------------------------------------------------------------------------
# truncated Fock-space simulation of Gaussian networks


LEAK_TOL = 1e-6


def _mode_apply(psi, mode, op):
    """Apply a single-mode matrix along tensor axis ``mode``."""
    out = np.tensordot(op, psi, axes=([1], [mode]))
    return np.moveaxis(out, 0, mode)


def _squeeze_unitary(r, quadrature, dim):
    """``exp(s r/2 (a^2 - a^dag^2))`` with ``s = +1`` squeezing X and ``-1`` squeezing P."""
    from scipy.linalg import expm

    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    s = 1.0 if quadrature.upper() == "X" else -1.0
    G = 0.5 * s * r * (a @ a - a.T @ a.T)
    return expm(G)


def _apply_squeezer(psi, mode, r, quadrature, cutoff, pad=60):
    big = cutoff + pad
    U = _squeeze_unitary(r, quadrature, big)
    # input has support below cutoff, so only the first `cutoff` columns matter
    out = _mode_apply(psi, mode, U[:, :cutoff])
    sl = [slice(None)] * out.ndim
    sl[mode] = slice(cutoff, None)
    leak = float(np.sum(np.abs(out[tuple(sl)]) ** 2))
    sl[mode] = slice(0, cutoff)
    return out[tuple(sl)], leak


def _bs_block(n_total, theta):
    """Two-mode mixing unitary on the block of fixed total photon number."""
    from scipy.linalg import expm

    d = n_total + 1
    # basis |k, n_total-k>, k = 0..n_total; generator a^dag b - a b^dag
    G = np.zeros((d, d))
    for k in range(n_total):
        # a^dag b |k, n-k> = sqrt((k+1)(n-k)) |k+1, n-k-1>
        amp = np.sqrt((k + 1) * (n_total - k))
        G[k + 1, k] += amp
        G[k, k + 1] -= amp
    return expm(theta * G)


def _apply_beamsplitter(psi, i, j, R, phase, cutoff):
    if phase:
        n = np.arange(cutoff)
        psi = _mode_apply(psi, j, np.diag(np.exp(1j * phase * n)))
    theta = np.arccos(np.sqrt(R))
    psi = np.moveaxis(psi, (i, j), (0, 1))
    shape = psi.shape
    flat = psi.reshape(cutoff, cutoff, -1)
    out = np.zeros((2 * cutoff - 1, 2 * cutoff - 1, flat.shape[2]), dtype=complex)
    for N in range(2 * cutoff - 1):
        ks = np.arange(max(0, N - cutoff + 1), min(N, cutoff - 1) + 1)
        U = _bs_block(N, theta)
        vec = flat[ks, N - ks, :]
        res = U[:, ks] @ vec
        kk = np.arange(N + 1)
        out[kk, N - kk, :] = res
    # parity phase on the second mode makes the transformation match the
    # det = -1 real mixing matrix of the covariance engine
    out *= ((-1.0) ** np.arange(2 * cutoff - 1))[None, :, None]
    leak = float(np.sum(np.abs(out) ** 2) - np.sum(np.abs(out[:cutoff, :cutoff]) ** 2))
    out = out[:cutoff, :cutoff].reshape(shape)
    return np.moveaxis(out, (0, 1), (i, j)), leak


def fock_simulate(config, cutoff=30, leak_tol=LEAK_TOL):
    """Truncated Fock state vector of ``config``'s output, shape ``(cutoff,) * n_modes``.

    Raises :class:`TruncationError` when the norm pushed above the cutoff
    exceeds ``leak_tol``.
    """
    from .errors import TruncationError
    from .gaussian_engine import Squeezer

    if cutoff < 2:
        raise InvalidArgument("cutoff must be at least 2")
    n = config.n_modes
    psi = np.zeros((cutoff,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    leaked = 0.0
    for el in config.elements:
        if isinstance(el, Squeezer):
            psi, leak = _apply_squeezer(psi, el.mode, el.r, el.quadrature, cutoff)
        else:
            psi, leak = _apply_beamsplitter(psi, el.i, el.j, el.R, el.phase, cutoff)
        leaked += leak
        if leaked > leak_tol:
            raise TruncationError(
                f"norm leakage {leaked:.3g} above cutoff {cutoff} exceeds {leak_tol:g}", leaked=leaked
            )
    return psi


def fock_quadrature_moments(psi):
    """Means and symmetrized covariance of ``(X_0, P_0, X_1, P_1, ...)`` by dense operators."""
    cutoff = psi.shape[0]
    n = psi.ndim
    a = np.diag(np.sqrt(np.arange(1, cutoff)), 1).astype(complex)
    X = a + a.conj().T
    P = -1j * (a - a.conj().T)
    vecs = []
    for m in range(n):
        vecs.append(_mode_apply(psi, m, X).ravel())
        vecs.append(_mode_apply(psi, m, P).ravel())
    V = np.array(vecs)
    flat = psi.ravel()
    means = np.real(V @ flat.conj())
    second = np.real(V.conj() @ V.T)
    cov = second - np.outer(means, means)
    return means, 0.5 * (cov + cov.T)


# --------------------------------------------------------------------------
# random biseparable states


def haar_ket(dim, rng):
    """Haar-random pure state: first column of the Q factor of a complex Ginibre matrix."""
    Z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    Q, R = np.linalg.qr(Z)
    Q = Q * (np.diag(R) / np.abs(np.diag(R)))
    return Q[:, 0]


def haar_unitary(dim, rng):
    Z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def _permute_to(rho_ordered, order, dims):
    """Reorder a density matrix over subsystems listed in ``order`` to natural order."""
    n = len(dims)
    d_ord = [dims[k] for k in order]
    T = rho_ordered.reshape(d_ord + d_ord)
    inv = np.argsort(order)
    T = T.transpose(list(inv) + [n + k for k in inv])
    D = int(np.prod(dims))
    return T.reshape(D, D)


def _product_term(partition, dims, rng):
    sub, rest = partition
    ka = haar_ket(int(np.prod([dims[k] for k in sub])), rng)
    kb = haar_ket(int(np.prod([dims[k] for k in rest])), rng)
    psi = np.kron(ka, kb)
    return _permute_to(np.outer(psi, psi.conj()), list(sub) + list(rest), dims)


class BiseparableSampler:
    """Random states ``sum_i p_i rho_i^(R_i) (x) rho_i^(S_i)`` with Haar-random pure factors.

    ``policy="fixed"`` keeps every term on ``partition``; ``policy="mixture"``
    draws each term's bipartition uniformly from all of them.  Weights are
    Dirichlet(1).
    """

    def __init__(self, N, dims=2, policy="mixture", mixture_size=3, partition=None, seed=0):
        from .criteria import enumerate_bipartitions

        if int(N) != N or N < 2:
            raise InvalidArgument("N must be an integer >= 2")
        self.N = int(N)
        self.dims = tuple([dims] * self.N if np.isscalar(dims) else dims)
        if len(self.dims) != self.N or any(d < 2 for d in self.dims):
            raise InvalidArgument("need one local dimension >= 2 per site")
        if policy not in ("fixed", "mixture"):
            raise InvalidArgument(f"unknown policy {policy!r}")
        if mixture_size < 1:
            raise InvalidArgument("mixture_size must be >= 1")
        self.policy = policy
        self.mixture_size = int(mixture_size)
        self.partitions = enumerate_bipartitions(self.N).partitions
        self.partition = partition
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def sample(self, rng=None):
        from .qudit_engine import CompositeState

        rng = self.rng if rng is None else rng
        weights = rng.dirichlet(np.ones(self.mixture_size))
        if self.policy == "fixed":
            part = self.partition
            if part is None:
                part = self.partitions[rng.integers(len(self.partitions))]
        D = int(np.prod(self.dims))
        rho = np.zeros((D, D), dtype=complex)
        for w in weights:
            p = part if self.policy == "fixed" else self.partitions[rng.integers(len(self.partitions))]
            rho += w * _product_term(p, self.dims, rng)
        rho = 0.5 * (rho + rho.conj().T)
        return CompositeState(self.dims, rho / np.real(np.trace(rho)))


def sample_biseparable(sampler: BiseparableSampler, rng=None):
    return sampler.sample(rng)


# --------------------------------------------------------------------------
# soundness scans


SOUNDNESS_TOL = 1e-8

# criterion id -> (number of sites, sampling policy)
# "fixed": each sample is a mixture on one bipartition (full-inseparability claims)
# "mixture": mixtures across all bipartitions (genuine-entanglement claims)
SOUNDNESS_SCOPE = {
    "c1": (3, "fixed"),
    "c2": (3, "mixture"),
    "c2b": (3, "mixture"),
    "c3": (3, "fixed"),
    "c4": (3, "mixture"),
    "c4b": (3, "mixture"),
    "c5": (3, "mixture"),
    "c6": (5, "fixed"),
    "c7": (5, "fixed"),
    "c8": (4, "fixed"),
    "c9": (4, "fixed"),
    "c10": (4, "mixture"),
    "fadel": (2, "mixture"),
    "bec_split": (3, "fixed"),
}


def _uniform_gains(rng, n, lo=-2.0, hi=2.0):
    return rng.uniform(lo, hi, size=n)


def _random_c5_strategy(rng, ops):
    from .qudit_engine import InferenceObservable

    strat = {}
    for k in range(3):
        partners = tuple(m for m in range(3) if m != k)
        pair = []
        for _ in range(2):
            bases = []
            for _ in partners:
                U = haar_unitary(2, rng)
                bases.append(U @ ops.z @ U.conj().T)
            table = {key: v for key, v in zip(
                ((1, 1), (1, -1), (-1, 1), (-1, -1)), rng.uniform(-2, 2, size=4))}
            pair.append(InferenceObservable(
                k, partners, tuple(bases),
                lambda o, t=table: t[(int(np.sign(o[0])), int(np.sign(o[1])))]))
        strat[k] = tuple(pair)
    return strat


def evaluate_on_state(criterion_id, state, rng):
    """Evaluate a criterion on ``state`` with gains and strategies drawn from ``rng``."""
    from . import criteria as C
    from .qudit_engine import criterion5_evaluate, spin_moment_set
    from .spin_algebra import pauli_operators

    N = state.n_sites
    if criterion_id == "c5":
        strat = _random_c5_strategy(rng, pauli_operators())
        return criterion5_evaluate(state, strat, C=1.0)
    m = spin_moment_set(state)
    if criterion_id in ("c1", "c3", "c6", "c7", "c8", "c9"):
        gains = C.GainVector(_uniform_gains(rng, N), _uniform_gains(rng, N))
        mode = "sum" if criterion_id in ("c1", "c6", "c8") else "product"
        return C.criterion6to9_npartite(m, gains, mode)
    if criterion_id in ("c2", "c4", "c10"):
        fn = {"c2": C.criterion2_vlf_sum, "c4": C.criterion4_vlf_product,
              "c10": C.criterion10_fourpartite}[criterion_id]
        return fn(m, list(_uniform_gains(rng, N)))
    if criterion_id in ("c2b", "c4b"):
        fn = C.criterion2b_vlf_sum if criterion_id == "c2b" else C.criterion4b_vlf_product
        variant = ("I+II", "I+III", "II+III")[rng.integers(3)]
        return fn(m, list(_uniform_gains(rng, N)), variant=variant)
    if criterion_id == "fadel":
        return C.fadel_bipartite(m, _uniform_gains(rng, 2))
    if criterion_id == "bec_split":
        return C.criterion3_bec_split(m, _uniform_gains(rng, 2))
    raise InvalidArgument(f"no soundness scan defined for criterion {criterion_id!r}")


class ScanResult:
    def __init__(self, criterion_id, worst_margin, trials, worst_trial):
        self.criterion_id = criterion_id
        self.worst_margin = worst_margin
        self.trials = trials
        self.worst_trial = worst_trial

    @property
    def passed(self):
        return self.worst_margin >= -SOUNDNESS_TOL

    def __repr__(self):
        return (f"ScanResult({self.criterion_id!r}, worst_margin={self.worst_margin:.3e}, "
                f"trials={self.trials}, passed={self.passed})")


def soundness_scan(criterion_id, sampler=None, gain_sampler=None, trials=2000, seed=0) -> ScanResult:
    """Smallest ``lhs - rhs`` of a criterion over random biseparable states.

    Trial ``t`` draws its state and gains from ``default_rng([seed, t])``, so
    each trial is reproducible on its own.  ``gain_sampler`` (optional) maps
    ``(rng, state)`` to a :class:`CriterionResult` and replaces the default
    gain/strategy draw.
    """
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    if sampler is None:
        if criterion_id not in SOUNDNESS_SCOPE:
            raise InvalidArgument(f"no default sampler for criterion {criterion_id!r}")
        N, policy = SOUNDNESS_SCOPE[criterion_id]
        sampler = BiseparableSampler(N, 2, policy=policy, mixture_size=3, seed=seed)
    evaluate = gain_sampler or (lambda rng, st: evaluate_on_state(criterion_id, st, rng))
    worst, worst_t = np.inf, -1
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        state = sampler.sample(rng)
        res = evaluate(rng, state)
        diff = float(res.lhs - res.rhs)
        if diff < worst:
            worst, worst_t = diff, t
    return ScanResult(criterion_id, worst, trials, worst_t)
