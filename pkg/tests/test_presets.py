import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy.linalg import expm

from spinwitness import criteria as C
from spinwitness import gaussian_engine as ge
from spinwitness import oracle
from spinwitness import presets as ps
from spinwitness.errors import InvalidArgument

TABLE_GHZ = C.GainVector((1, 0.68, 0.68), (1, -0.40, -0.40))
TABLE_EPR = C.GainVector((1, 0.68, 0.68), (1, -0.68, -0.68))


# optical presets ---------------------------------------------------------


def test_single_squeezed_tripartite_at_half():
    res = ps.single_squeezed_tripartite(0.5)
    out = C.cv_criterion(res.quadrature_moments, res.default_gains, "sum")
    # 3/2 + (4/3) e^{-1} + 1/6 from the network's own mode-output equations
    assert_allclose(out.lhs, 5 / 3 + 4 / 3 * np.exp(-1), atol=1e-12)
    assert_allclose(out.lhs, 2.1571725882, atol=1e-9)
    assert out.rhs == 2.0
    assert out.verdict == C.INCONCLUSIVE


def test_single_squeezed_tripartite_threshold_is_ln2():
    gains = ps.single_squeezed_tripartite(0.1).default_gains
    below = C.cv_criterion(ps.single_squeezed_tripartite(np.log(2) - 1e-6).moments, gains)
    above = C.cv_criterion(ps.single_squeezed_tripartite(np.log(2) + 1e-6).moments, gains)
    assert not below.violated and above.violated


def test_single_squeezed_tripartite_large_r_minimum():
    # the anti-squeezed X quadrature cancels in the combination, so moderate r keeps full precision
    res = ps.single_squeezed_tripartite(8.0)
    assert_allclose(C.cv_criterion(res.moments, res.default_gains).lhs, 10 / 6, atol=1e-6)


@pytest.mark.parametrize("r", [0.5, 1.0, 1.09, 1.11, 1.5, 3.0])
def test_single_squeezed_fourpartite_threshold(r):
    res = ps.single_squeezed_fourpartite(r)
    out = C.cv_criterion(res.moments, res.default_gains)
    assert_allclose(out.lhs, 5 / 3 + np.exp(-2 * r), atol=1e-12)
    assert out.violated == (r > np.log(3))


TABLE_ROWS = [
    ("cv_ghz", 0.25, 0.36, -0.27), ("cv_ghz", 0.5, 0.68, -0.40), ("cv_ghz", 0.75, 0.86, -0.46),
    ("cv_ghz", 1.0, 0.95, -0.49), ("cv_ghz", 1.5, 0.99, -0.50), ("cv_ghz", 2.0, 1.0, -0.50),
    ("cv_epr", 0.25, 0.33, -0.33), ("cv_epr", 0.5, 0.54, -0.54), ("cv_epr", 0.75, 0.64, -0.64),
    ("cv_epr", 1.0, 0.68, -0.68), ("cv_epr", 1.5, 0.70, -0.70), ("cv_epr", 2.0, 0.70, -0.70),
]


@pytest.mark.parametrize("name, r, h, g", TABLE_ROWS)
def test_cv_presets_violate_with_tabulated_gains(name, r, h, g):
    m = ps.build(ps.PresetSpec(name, {"r": r})).moments
    gains = C.GainVector((1, h, h), (1, g, g))
    assert C.criterion1_sum(m, gains).violated
    assert C.criterion3_product(m, gains).violated


@settings(max_examples=25, deadline=None)
@given(r=st.floats(0.01, 3.0))
def test_cv_ghz_violates_for_any_squeezing_with_small_gains(r):
    # gains h = tanh r, g = -h/2 follow the optimum from (0, 0) at r = 0 towards (1, -1/2)
    m = ps.cv_ghz(r).moments
    h = np.tanh(r)
    gains = C.GainVector((1, h, h), (1, -h / 2, -h / 2))
    assert C.criterion1_sum(m, gains).violated


def test_cv_presets_saturate_at_zero_squeezing():
    for build, gains in ((ps.cv_ghz, TABLE_GHZ), (ps.cv_epr, TABLE_EPR)):
        res = C.criterion1_sum(build(0.0).moments, gains)
        assert res.verdict == C.INCONCLUSIVE


@settings(max_examples=25, deadline=None)
@given(r=st.floats(0.0, 2.5), alpha_v=st.floats(0.1, 30.0), source=st.sampled_from(["cv_ghz", "cv_epr"]))
def test_polarization_transfer_ratio_identity(r, alpha_v, source):
    res = ps.polarization_transfer(r, alpha_v, source)
    gains = TABLE_GHZ if source == "cv_ghz" else TABLE_EPR
    stokes = C.criterion1_sum(res.moments, gains)
    quad = C.cv_criterion(res.quadrature_moments, gains)
    assert_allclose(stokes.lhs / stokes.rhs, quad.lhs / quad.rhs, rtol=1e-12)


def test_polarization_transfer_rejects_unknown_source():
    with pytest.raises(InvalidArgument):
        ps.polarization_transfer(0.5, 1.0, "w_state")


# atomic ensembles --------------------------------------------------------


@pytest.mark.parametrize("J_x, alpha", [(1000.0, 0.1), (50.0, 0.5), (1e4, 0.02)])
def test_atomic_qnd_matches_closed_form(J_x, alpha):
    res = ps.atomic_ensemble_qnd(J_x, alpha)
    m = res.moments
    assert_allclose(m.mean, [J_x, -J_x / 2, -J_x / 2], rtol=1e-15)
    out = C.criterion1_sum(m, C.GainVector.unit(3))
    assert_allclose(out.lhs, ps.atomic_qnd_closed_form(J_x, alpha), rtol=1e-10)
    assert_allclose(out.lhs, 2 * J_x / (1 + alpha ** 2 * J_x), rtol=1e-10)


def test_atomic_qnd_bound_and_verdict():
    J_x = 1000.0
    out = C.criterion1_sum(ps.atomic_ensemble_qnd(J_x, 0.1).moments, C.GainVector.unit(3), large_spin=True)
    # smallest bipartition bound is the split 2|13: |J_x/2| + |J_x - J_x/2| = J_x
    assert_allclose(out.rhs, J_x, rtol=1e-15)
    assert [C.format_partition(p) for p in out.argmin_bipartitions] == ["2|13", "3|12"]
    assert out.lhs < 2 * J_x
    assert out.verdict == C.GENUINE and out.conditional


def test_atomic_qnd_without_coupling_is_shot_noise():
    out = C.criterion1_sum(ps.atomic_ensemble_qnd(100.0, 0.0).moments, C.GainVector.unit(3))
    assert_allclose(out.lhs, 200.0, rtol=1e-14)
    assert out.verdict == C.INCONCLUSIVE


def test_atomic_qnd_monotone_in_coupling():
    alphas = np.linspace(0, 1, 21)
    lhs = [C.criterion1_sum(ps.atomic_ensemble_qnd(200.0, a).moments, C.GainVector.unit(3)).lhs for a in alphas]
    assert np.all(np.diff(lhs) <= 1e-12)


def test_atomic_qnd_validation():
    with pytest.raises(InvalidArgument):
        ps.atomic_ensemble_qnd(-1.0, 0.1)
    with pytest.raises(InvalidArgument):
        ps.atomic_ensemble_qnd(10.0, -0.1)


# two clouds and splitting ------------------------------------------------


@pytest.mark.parametrize("r", [0.0, 0.5, 1.0])
def test_two_cloud_moments(r):
    N = 1000.0
    m = ps.two_cloud_epr(N, r).moments
    # each output mode has covariance cosh(2r) I, so <n> = sinh(r)^2
    assert_allclose(m.mean, N / 2 - np.sinh(r) ** 2, rtol=1e-14)
    res = C.fadel_bipartite(m, (-1.0, 1.0))
    assert_allclose(res.lhs, N * np.exp(-2 * r) / 2, rtol=1e-12)
    assert_allclose(res.rhs, N / 2 - np.sinh(r) ** 2, rtol=1e-12)
    assert res.violated == (r > 0)


def test_two_cloud_mean_number_matches_fock():
    r = 0.5
    cfg = ge.NetworkConfig(2, (ge.Squeezer(0, r, "P"), ge.Squeezer(1, r, "X"), ge.BeamSplitter(0, 1, 0.5)))
    _, cov = oracle.fock_quadrature_moments(oracle.fock_simulate(cfg, cutoff=30))
    n_mean = (cov[0, 0] + cov[1, 1] - 2) / 4
    assert_allclose(n_mean, np.sinh(r) ** 2, atol=1e-6)


@pytest.mark.parametrize("ratio", [0.5, 0.2, 0.7])
def test_split_cloud_grouped_sums_reproduce_parent(ratio):
    parent = ps.two_cloud_epr(400.0, 0.8).moments
    split = ps.split_cloud(parent, ratio)
    for gz, gy in [(-1.0, 1.0), (0.4, 2.0), (1.0, 1.0)]:
        assert_allclose(split.variance([gz, gz, 1], [0, 0, 0]), parent.variance([gz, 1], [0, 0]), rtol=1e-13)
        assert_allclose(split.variance([0, 0, 0], [gy, gy, 1]), parent.variance([0, 0], [gy, 1]), rtol=1e-13)
    assert_allclose(split.mean[0] + split.mean[1], parent.mean[0], rtol=1e-15)
    assert_allclose(split.mean[2], parent.mean[1], rtol=0)


def test_split_cloud_signs_stay_positive():
    split = ps.split_cloud(ps.two_cloud_epr(100.0, 1.0).moments, 0.5)
    assert split.mean[0] > 0 and split.mean[1] > 0


def test_split_cloud_ratio_range():
    parent = ps.two_cloud_epr(10.0, 0.1).moments
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(InvalidArgument):
            ps.split_cloud(parent, bad)


def _exact_split(psi_A, n_atoms, t):
    """Split a fixed-number two-mode cloud state on vacuum-fed beam splitters, exactly.

    Modes: 0 = A+, 1 = A-, 2 = vacuum partner of A+, 3 = vacuum partner of A-.
    Mode 0 (and 1) keep amplitude sqrt(t); modes 2, 3 become the second part.
    """
    cut = n_atoms + 1
    a = np.diag(np.sqrt(np.arange(1, cut)), 1)
    eye = np.eye(cut)

    def mode_op(M, k):
        mats = [eye] * 4
        mats[k] = M
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out

    ann = [mode_op(a, k) for k in range(4)]
    theta = np.arccos(np.sqrt(t))
    U = expm(theta * (ann[0].T @ ann[2] - ann[2].T @ ann[0])) @ expm(theta * (ann[1].T @ ann[3] - ann[3].T @ ann[1]))
    vac = np.zeros(cut * cut)
    vac[0] = 1
    psi = U @ np.kron(psi_A, vac)

    def spin(p, m):
        ap, am = ann[p], ann[m]
        x = 0.5 * (ap.T @ ap - am.T @ am)
        y = 0.5 * (ap.T @ am + am.T @ ap)
        z = 0.5 * (1j * am.T @ ap - 1j * ap.T @ am)
        return x, y, z

    return psi, spin(0, 1), spin(2, 3), spin


@pytest.mark.parametrize("t", [0.5, 0.3])
def test_partition_noise_matches_exact_beam_splitter_model(t):
    n_atoms = 4
    rng = np.random.default_rng(11)
    cut = n_atoms + 1
    # random state with exactly n_atoms bosons in the two internal modes of cloud A
    psi_A = np.zeros(cut * cut, dtype=complex)
    for k in range(n_atoms + 1):
        psi_A[k * cut + (n_atoms - k)] = rng.normal() + 1j * rng.normal()
    psi_A /= np.linalg.norm(psi_A)

    psi, (x1, y1, z1), (x2, y2, z2), _ = _exact_split(psi_A, n_atoms, t)

    def ev(op, state):
        return np.real(np.vdot(state, op @ state))

    def cov(a, b, state):
        return ev(0.5 * (a @ b + b @ a), state) - ev(a, state) * ev(b, state)

    # parent moments (cloud A only, cloud B a dummy uncorrelated site)
    from spinwitness.spin_algebra import make_schwinger_operators
    sw = make_schwinger_operators(cut)
    vecA = psi_A
    A, B, Cx = sw.z, sw.y, sw.x
    pc = np.zeros((4, 4))
    pc[0, 0], pc[2, 2], pc[0, 2] = cov(A, A, vecA), cov(B, B, vecA), cov(A, B, vecA)
    pc[2, 0] = pc[0, 2]
    pc[1, 1] = pc[3, 3] = 1.0
    parent = C.MomentSet([ev(Cx, vecA), 1.0], pc, mean_var=[cov(Cx, Cx, vecA), 0.0])
    split = ps.split_cloud(parent, t, include_vacuum_terms=True, N_A=n_atoms)

    exact_cov = np.array([[cov(p, q, psi) for q in (z1, z2, y1, y2)] for p in (z1, z2, y1, y2)])
    idx = [0, 1, 3, 4]
    assert_allclose(split.cov[np.ix_(idx, idx)], exact_cov, atol=1e-12)
    assert_allclose(split.mean[:2], [ev(x1, psi), ev(x2, psi)], atol=1e-12)
    assert_allclose(split.mean_var[:2], [cov(x1, x1, psi), cov(x2, x2, psi)], atol=1e-12)


def test_partition_noise_default_atom_number():
    parent = ps.two_cloud_epr(200.0, 0.5).moments
    a = ps.split_cloud(parent, 0.5, include_vacuum_terms=True)
    b = ps.split_cloud(parent, 0.5, include_vacuum_terms=True, N_A=2 * parent.mean[0])
    assert_allclose(a.cov, b.cov, rtol=0)


def test_bec_split_positive_gain_product_inherits_parent_bound():
    res = ps.bec_split(1000.0, 0.5)
    parent = res.info["parent"]
    for gz, gy in [(1.0, 1.0), (0.5, 2.0)]:
        fadel = C.fadel_bipartite(parent, (gz, gy))
        split = C.criterion3_bec_split(res.moments, (gz, gy))
        assert_allclose(split.rhs, fadel.rhs, rtol=1e-14)
        assert_allclose(split.lhs, fadel.lhs, rtol=1e-12)
        assert split.violated == fadel.violated


def test_bec_split_negative_gain_product_lowers_bound():
    res = ps.bec_split(1000.0, 0.5)
    parent = res.info["parent"]
    fadel = C.fadel_bipartite(parent, (-1.0, 1.0))
    split = C.criterion3_bec_split(res.moments, (-1.0, 1.0))
    assert split.rhs < fadel.rhs
    assert fadel.violated and split.violated


def test_bec_split_partition_noise_cancels_in_grouped_sums():
    clean = ps.bec_split(1000.0, 0.5).moments
    noisy = ps.bec_split(1000.0, 0.5, include_vacuum_terms=True).moments
    q = 0.25 * 1000 / 4
    assert_allclose(np.diag(noisy.cov) - np.diag(clean.cov), [q, q, 0, q, q, 0], rtol=1e-12)
    a = C.criterion3_bec_split(clean, (-1.0, 1.0))
    b = C.criterion3_bec_split(noisy, (-1.0, 1.0))
    assert_allclose(b.lhs, a.lhs, rtol=1e-12)
    assert np.all(np.asarray(b.validity[:2]) > np.asarray(a.validity[:2]))


# registry ----------------------------------------------------------------


@pytest.mark.parametrize("name", ps.PRESETS)
def test_build_every_preset(name):
    res = ps.build(ps.PresetSpec(name, {"r": "0.4"}))
    assert res.moments.N >= 2


def test_build_errors_name_parameter():
    with pytest.raises(InvalidArgument, match="r"):
        ps.build(ps.PresetSpec("cv_ghz", {}))
    with pytest.raises(InvalidArgument, match="alpha_v"):
        ps.build(ps.PresetSpec("cv_ghz", {"r": 0.1, "alpha_v": "-1"}))
    with pytest.raises(InvalidArgument, match="unknown preset"):
        ps.build(ps.PresetSpec("nope", {}))
    with pytest.raises(InvalidArgument, match="ratio"):
        ps.build(ps.PresetSpec("bec_split", {"ratio": 1.5}))
