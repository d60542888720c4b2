"""Finite-dimensional spin, Schwinger and Stokes operator sets.

All matrices are dense ``complex128`` arrays.  Spin matrices use the basis
``|J, m>`` ordered ``m = J, J-1, ..., -J`` so that for ``J = 1/2`` the first
basis vector is spin-up and the set equals half the Pauli matrices.

Two-mode constructions (Schwinger, Stokes) live on the product Fock space
``|n_1> (x) |n_2>`` with ``n_i < n_max``.  They are exact only on the block of
total number ``n_1 + n_2 < n_max``; :attr:`OperatorSet.valid` marks that block.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import ConvergenceFailure, InvalidArgument

HERMITIAN_TOL = 1e-12
ALGEBRA_TOL = 1e-10


def _as_spin(J) -> Fraction:
    try:
        twice = Fraction(J) * 2
    except (TypeError, ValueError):
        raise InvalidArgument(f"spin J={J!r} is not a number")
    if twice.denominator != 1 or twice < 0:
        raise InvalidArgument(f"spin J={J!r} is not a nonnegative half-integer")
    return twice / 2


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """Three Hermitian matrices obeying ``[O_x, O_y] = i * scale * O_z``.

    ``valid`` is a boolean mask over basis states; ``None`` means the algebra
    holds on the whole space.
    """

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    scale: float = 1.0
    theta: float = 0.0
    valid: Optional[np.ndarray] = None
    label: str = "spin"
    J: Optional[Fraction] = None

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    @property
    def ops(self):
        return (self.x, self.y, self.z)

    def __getitem__(self, component):
        return {"x": self.x, "y": self.y, "z": self.z}[component]

    @property
    def truncated(self) -> bool:
        return self.valid is not None

    def _restrict(self, M):
        if self.valid is None:
            return M
        idx = np.flatnonzero(self.valid)
        return M[np.ix_(idx, idx)]

    def hermiticity_residual(self) -> float:
        return max(np.max(np.abs(M - M.conj().T)) for M in self.ops)

    def commutator_residual(self) -> float:
        """Largest max-norm violation of the three cyclic commutators on the valid block."""
        c = self.scale
        x, y, z = self.ops
        worst = 0.0
        for a, b, target in ((x, y, z), (y, z, x), (z, x, y)):
            R = a @ b - b @ a - 1j * c * target
            worst = max(worst, float(np.max(np.abs(self._restrict(R)))))
        return worst

    def casimir(self) -> np.ndarray:
        x, y, z = self.ops
        return x @ x + y @ y + z @ z

    def check_support(self, state, atol=1e-12):
        """Raise if ``state`` (ket or density matrix) has weight outside the valid block."""
        if self.valid is None:
            return
        state = np.asarray(state)
        bad = ~self.valid
        if state.ndim == 1:
            leak = float(np.sum(np.abs(state[bad]) ** 2))
        else:
            leak = float(np.real(np.trace(state)[()] - np.trace(self._restrict(state))))
        if leak > atol:
            raise InvalidArgument(
                f"state has weight {leak:.3g} outside the valid subspace of the "
                f"truncated {self.label} operators"
            )

    def expect(self, state):
        """Means of (x, y, z) in ``state``."""
        self.check_support(state)
        state = np.asarray(state)
        if state.ndim == 1:
            return np.array([np.real(np.vdot(state, M @ state)) for M in self.ops])
        return np.array([np.real(np.trace(M @ state)) for M in self.ops])

    def variances(self, state):
        self.check_support(state)
        state = np.asarray(state)
        out = []
        for M in self.ops:
            if state.ndim == 1:
                m1 = np.real(np.vdot(state, M @ state))
                m2 = np.real(np.vdot(state, M @ (M @ state)))
            else:
                m1 = np.real(np.trace(M @ state))
                m2 = np.real(np.trace(M @ M @ state))
            out.append(m2 - m1 * m1)
        return np.array(out)


def make_spin_operators(J) -> OperatorSet:
    J = _as_spin(J)
    j = float(J)
    m = j - np.arange(int(2 * J) + 1)
    # <m+1|J_+|m> = sqrt(j(j+1) - m(m+1))
    raise_elems = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    Jp = np.diag(raise_elems, k=1).astype(complex)
    Jm = Jp.conj().T
    Jx = 0.5 * (Jp + Jm)
    Jy = -0.5j * (Jp - Jm)
    Jz = np.diag(m).astype(complex)
    return OperatorSet(Jx, Jy, Jz, scale=1.0, label="spin", J=J)


def pauli_operators() -> OperatorSet:
    """Pauli matrices as an operator set with scale 2."""
    s = make_spin_operators(Fraction(1, 2))
    return OperatorSet(2 * s.x, 2 * s.y, 2 * s.z, scale=2.0, label="pauli", J=s.J)


def _ladder(n_max):
    return np.diag(np.sqrt(np.arange(1, n_max)), k=1).astype(complex)


def _two_mode(n_max):
    if int(n_max) != n_max or n_max < 1:
        raise InvalidArgument(f"Fock cutoff n_max={n_max!r} must be an integer >= 1")
    n_max = int(n_max)
    a = _ladder(n_max)
    eye = np.eye(n_max)
    a1 = np.kron(a, eye)
    a2 = np.kron(eye, a)
    n = np.arange(n_max)
    total = (n[:, None] + n[None, :]).ravel()
    return a1, a2, total < n_max


def make_schwinger_operators(n_max, theta=0.0) -> OperatorSet:
    """Collective spin of two bosonic modes ``a_+`` (first factor) and ``a_-``.

    ``J_x = (n_+ - n_-)/2``, ``J_y = (a_+^dag a_- e^{i theta} + h.c.)/2`` and
    ``J_z = (i a_-^dag a_+ e^{-i theta} - i a_+^dag a_- e^{i theta})/2``.
    """
    ap, am, valid = _two_mode(n_max)
    ph = np.exp(1j * theta)
    x = 0.5 * (ap.conj().T @ ap - am.conj().T @ am)
    y = 0.5 * (ap.conj().T @ am * ph + am.conj().T @ ap * np.conj(ph))
    z = 0.5 * (1j * am.conj().T @ ap * np.conj(ph) - 1j * ap.conj().T @ am * ph)
    return OperatorSet(x, y, z, scale=1.0, theta=theta, valid=valid, label="schwinger")


def make_stokes_operators(n_max, theta=0.0) -> OperatorSet:
    """Polarization Stokes operators of modes ``a_H`` (first factor) and ``a_V``."""
    aH, aV, valid = _two_mode(n_max)
    ph = np.exp(1j * theta)
    x = aH.conj().T @ aH - aV.conj().T @ aV
    y = aH.conj().T @ aV * ph + aV.conj().T @ aH * np.conj(ph)
    z = 1j * aV.conj().T @ aH * np.conj(ph) - 1j * aH.conj().T @ aV * ph
    return OperatorSet(x, y, z, scale=2.0, theta=theta, valid=valid, label="stokes")


# --------------------------------------------------------------------------
# planar uncertainty bound


@dataclass
class PlanarBoundResult:
    J: Fraction
    C_J: float
    minimizing_state: np.ndarray
    iterations: int
    residual: float
    units: str = "spin"
    starts: list = field(default_factory=list, repr=False)


def planar_variance_sum(psi, ops: OperatorSet) -> float:
    """``Var(O_x) + Var(O_y)`` of a normalized ket."""
    total = 0.0
    for M in (ops.x, ops.y):
        v = M @ psi
        m1 = np.real(np.vdot(psi, v))
        m2 = np.real(np.vdot(v, v))
        total += m2 - m1 * m1
    return float(total)


def _alternate(ops, a, b, tol, max_iter, damping):
    x, y = ops.x, ops.y
    base = x @ x + y @ y
    prev = np.inf
    psi = None
    for it in range(1, max_iter + 1):
        H = base - 2 * a * x - 2 * b * y
        _, vecs = np.linalg.eigh(H)
        psi = vecs[:, 0]
        ma = np.real(np.vdot(psi, x @ psi))
        mb = np.real(np.vdot(psi, y @ psi))
        val = planar_variance_sum(psi, ops)
        change = abs(prev - val)
        if change < tol:
            return val, psi, it, change, True, (ma, mb)
        prev = val
        a = damping * a + (1 - damping) * ma
        b = damping * b + (1 - damping) * mb
    return val, psi, max_iter, change, False, (ma, mb)


def _polish_radius(ops, rho0):
    """Refine the fixed point along the radial direction.

    ``min_psi Var(x)+Var(y) = min_{a,b} lambda_min(H(a,b)) + a^2 + b^2`` and the
    objective is invariant under rotations about z, so a one-dimensional
    search over ``a`` with ``b = 0`` suffices.
    """
    from scipy.optimize import minimize_scalar

    x, y = ops.x, ops.y
    base = x @ x + y @ y

    def g(a):
        return np.linalg.eigvalsh(base - 2 * a * x)[0] + a * a

    j = float(ops.J)
    lo, hi = max(0.0, rho0 - 0.25), min(j, rho0 + 0.25)
    res = minimize_scalar(g, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    _, vecs = np.linalg.eigh(base - 2 * res.x * x)
    return vecs[:, 0]


def planar_bound(J, tol=1e-10, units="spin", max_iter=500, damping=0.5) -> PlanarBoundResult:
    """Smallest ``Var(J_x) + Var(J_y)`` over all states of a spin-``J`` system.

    For fixed trial means ``(a, b)`` the optimal state is the ground vector of
    ``J_x^2 + J_y^2 - 2a J_x - 2b J_y``; the means are then moved (damped)
    toward that state's means and the step repeated.  Nine starts on the grid
    ``{-J, 0, J}^2`` are run and the lowest fixed point is kept, then polished
    by a radial line search.  The reported value is evaluated directly on the
    returned state, so it is always attained.

    ``units="pauli"`` reports the bound for ``sigma = 2 J`` (four times larger).
    """
    J = _as_spin(J)
    if J < Fraction(1, 2):
        raise InvalidArgument("planar bound needs J >= 1/2")
    if not tol > 0:
        raise InvalidArgument("tol must be positive")
    if units not in ("spin", "pauli"):
        raise InvalidArgument(f"unknown units {units!r}")
    ops = make_spin_operators(J)
    j = float(J)
    best = None
    starts = []
    for a0, b0 in itertools.product((-j, 0.0, j), repeat=2):
        run = _alternate(ops, a0, b0, tol, max_iter, damping)
        starts.append(((a0, b0), run[0], run[4]))
        if best is None or run[0] < best[0]:
            best = run
    val, psi, iters, resid, converged, (ma, mb) = best
    if not converged:
        raise ConvergenceFailure(
            f"planar bound for J={J} did not converge in {max_iter} iterations",
            best_value=val,
            residual=resid,
        )
    polished = _polish_radius(ops, float(np.hypot(ma, mb)))
    if planar_variance_sum(polished, ops) < val:
        psi = polished
    psi = psi / np.linalg.norm(psi)
    factor = 4.0 if units == "pauli" else 1.0
    return PlanarBoundResult(
        J=J,
        C_J=factor * planar_variance_sum(psi, ops),
        minimizing_state=psi,
        iterations=iters,
        residual=resid,
        units=units,
        starts=starts,
    )


def load_planar_golden() -> dict:
    """Brute-force reference values of ``C_J`` (spin units) shipped with the package, keyed by ``Fraction(J)``."""
    import json
    from importlib import resources

    text = resources.files("spinwitness").joinpath("data/planar_golden.json").read_text(encoding="utf-8")
    return {Fraction(row["J"]): float(row["C_J"]) for row in json.loads(text)["values"]}
