from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose

from spinwitness import criteria as C
from spinwitness import gaussian_engine as ge
from spinwitness import oracle
from spinwitness import presets as ps
from spinwitness.errors import InvalidArgument, TruncationError
from spinwitness.qudit_engine import criterion5_evaluate, ghz_state, ghz_strategy
from spinwitness.spin_algebra import planar_bound


def partial_trace_keep(rho, keep, dims):
    n = len(dims)
    T = rho.reshape(list(dims) * 2)
    drop = [k for k in range(n) if k not in keep]
    for k in sorted(drop, reverse=True):
        T = np.trace(T, axis1=k, axis2=k + T.ndim // 2)
    d = int(np.prod([dims[k] for k in keep]))
    return T.reshape(d, d)


# planar brute force ------------------------------------------------------


@pytest.mark.parametrize("J", [Fraction(1, 2), 1, Fraction(3, 2), 2])
def test_brute_force_planar_matches_solver(J):
    value, psi = oracle.brute_force_planar(J, n_samples=5000, n_refine=5)
    assert_allclose(value, planar_bound(J).C_J, atol=1e-6)
    assert_allclose(np.linalg.norm(psi), 1.0, atol=1e-12)


def test_brute_force_planar_is_seeded():
    a = oracle.brute_force_planar(1, n_samples=2000, n_refine=2, seed=3)
    b = oracle.brute_force_planar(1, n_samples=2000, n_refine=2, seed=3)
    assert a[0] == b[0]


# Fock simulation ---------------------------------------------------------


def test_fock_truncation_error_reports_leakage():
    cfg = ge.NetworkConfig(1, (ge.Squeezer(0, 2.0, "P"),))
    with pytest.raises(TruncationError) as err:
        oracle.fock_simulate(cfg, cutoff=8)
    assert err.value.leaked > oracle.LEAK_TOL


def test_fock_rejects_tiny_cutoff():
    with pytest.raises(InvalidArgument):
        oracle.fock_simulate(ge.NetworkConfig(1, ()), cutoff=1)


def test_fock_state_stays_normalized():
    psi = oracle.fock_simulate(ge.cv_ghz_network(0.3), cutoff=25)
    assert_allclose(np.linalg.norm(psi), 1.0, atol=1e-6)


# biseparable sampler -----------------------------------------------------


def test_fixed_single_term_sample_is_product():
    part = ((0,), (1, 2))
    s = oracle.BiseparableSampler(3, policy="fixed", mixture_size=1, partition=part)
    rho = s.sample(np.random.default_rng(1)).density()
    ra = partial_trace_keep(rho, [0], (2, 2, 2))
    rbc = partial_trace_keep(rho, [1, 2], (2, 2, 2))
    assert_allclose(rho, np.kron(ra, rbc), atol=1e-12)


@pytest.mark.parametrize("policy", ["fixed", "mixture"])
def test_samples_are_density_matrices(policy):
    s = oracle.BiseparableSampler(4, policy=policy, mixture_size=4)
    rng = np.random.default_rng(11)
    for _ in range(10):
        rho = s.sample(rng).density()
        assert_allclose(np.trace(rho), 1.0, atol=1e-12)
        assert_allclose(rho, rho.conj().T, atol=1e-14)
        assert np.linalg.eigvalsh(rho)[0] > -1e-12


def test_sampler_is_seed_deterministic():
    a = oracle.BiseparableSampler(3, seed=5).sample().density()
    b = oracle.BiseparableSampler(3, seed=5).sample().density()
    assert_allclose(a, b, atol=0)


def test_mixed_local_dimensions():
    s = oracle.BiseparableSampler(3, dims=(2, 3, 2))
    st = s.sample(np.random.default_rng(0))
    assert st.dims == (2, 3, 2)


@pytest.mark.parametrize("kwargs", [{"N": 1}, {"N": 3, "policy": "any"}, {"N": 3, "mixture_size": 0},
                                    {"N": 3, "dims": (2, 2)}])
def test_sampler_validation(kwargs):
    with pytest.raises(InvalidArgument):
        oracle.BiseparableSampler(**kwargs)


# soundness scans ---------------------------------------------------------


@pytest.mark.parametrize("cid", sorted(oracle.SOUNDNESS_SCOPE))
def test_short_soundness_scan(cid):
    res = oracle.soundness_scan(cid, trials=60, seed=2)
    assert res.passed, res
    assert 0 <= res.worst_trial < 60


def test_scan_trial_is_reproducible_alone():
    full = oracle.soundness_scan("c1", trials=30, seed=4)
    t = full.worst_trial
    sampler = oracle.BiseparableSampler(3, policy="fixed", mixture_size=3, seed=4)
    rng = np.random.default_rng([4, t])
    res = oracle.evaluate_on_state("c1", sampler.sample(rng), rng)
    assert_allclose(res.lhs - res.rhs, full.worst_margin, atol=0)


def test_scan_flags_ghz_with_its_strategy():
    # negative control: an entangled input with a matched strategy must fail the scan
    class GhzSource:
        def sample(self, rng):
            return ghz_state(3)

    res = oracle.soundness_scan("c5", sampler=GhzSource(), trials=3,
                                gain_sampler=lambda rng, st: criterion5_evaluate(st, ghz_strategy(), C=1.0))
    assert not res.passed
    assert_allclose(res.worst_margin, -1.0, atol=1e-12)


def test_scan_flags_squeezed_moments():
    # negative control on the sum criterion: squeezed CV moments at tabulated gains
    m = ps.cv_ghz(1.0).moments
    gains = C.GainVector((1, 0.95, 0.95), (1, -0.49, -0.49))
    res = oracle.soundness_scan("c1", trials=2, gain_sampler=lambda rng, st: C.criterion1_sum(m, gains))
    assert not res.passed


def test_scan_rejects_bad_arguments():
    with pytest.raises(InvalidArgument):
        oracle.soundness_scan("c1", trials=0)
    with pytest.raises(InvalidArgument):
        oracle.soundness_scan("nope", trials=1)
    with pytest.raises(InvalidArgument):
        oracle.evaluate_on_state("nope", ghz_state(3), np.random.default_rng(0))
