import math

import numpy as np
import pytest

from qdiv.channels import amplitude_damping, apply, cq_phi, depolarizing, fixed_point, pauli
from qdiv.errors import NotPrimitive
from qdiv.funcs import KAPPA_BKM, KAPPA_MAX, KAPPA_MIN, ks
from qdiv.markov import convergence_trace, lower_start, mixing_time_bound
from qdiv.opcore import bloch_state, random_state

KAPPAS = [KAPPA_MAX, KAPPA_MIN, KAPPA_BKM, ks(0.3)]


@pytest.mark.parametrize("kappa", KAPPAS, ids=str)
def test_depolarizing_trajectory(kappa):
    w0 = np.array([0.3, -0.4, 0.5])
    rep = convergence_trace(depolarizing(0.5), bloch_state(w0), kappa, n_max=30)
    assert rep.eta == pytest.approx(0.25, abs=1e-12)
    assert rep.M == 1
    # trace distance between qubit states is the Bloch distance
    for row in rep.trajectory:
        assert row["trace_dist"] == pytest.approx(0.5 ** row["n"] * np.linalg.norm(w0), abs=1e-12)
    assert rep.within_envelopes()


def test_depolarizing_upper_envelope_value():
    w0 = np.array([0.0, 0.0, 0.6])
    rep = convergence_trace(depolarizing(0.5), bloch_state(w0), KAPPA_MAX, n_max=5)
    # ||rho0 - I/2||^2 at I/2 is Tr X^2 / (1/2) = 2 * |w0|^2 / 2
    base = math.sqrt(2 * 0.36 / 2)
    for row in rep.trajectory:
        assert row["upper_env"] == pytest.approx(0.25 ** (row["n"] / 2) * base, rel=1e-12)


def test_fixed_point_start():
    ch = cq_phi(0.6, 0.6)
    pi = fixed_point(ch)
    rep = convergence_trace(ch, pi, KAPPA_BKM, n_max=5)
    for row in rep.trajectory:
        assert row["trace_dist"] < 1e-12
        assert row["upper_env"] < 1e-6


@pytest.mark.parametrize("kappa", KAPPAS, ids=str)
@pytest.mark.parametrize("seed", range(3))
def test_cq_phi_within_envelopes(kappa, seed):
    ch = cq_phi(0.6, 0.6)
    rep = convergence_trace(ch, random_state(2, 2, seed), kappa, n_max=50)
    assert rep.within_envelopes(1e-9)
    assert rep.eta_check <= rep.eta + 1e-12
    pi = rep.fixed_point.matrix
    assert np.linalg.norm(apply(ch, pi) - pi) <= 1e-10
    assert rep.M == 2
    assert rep.trajectory[0]["lower_env"] is None and rep.trajectory[2]["lower_env"] is not None


def test_pauli_within_envelopes():
    rep = convergence_trace(pauli(0.1, 0.05, 0.2), random_state(2, 2, 9), KAPPA_BKM, n_max=40)
    assert rep.within_envelopes()
    assert lower_start(pauli(0.1, 0.05, 0.2)) == 1


def test_not_primitive():
    with pytest.raises(NotPrimitive):
        convergence_trace(amplitude_damping(0.3), np.eye(2) / 2, KAPPA_MAX)
    with pytest.raises(NotPrimitive):
        mixing_time_bound(amplitude_damping(0.3), KAPPA_MAX, 0.1)


def test_mixing_time_depolarizing():
    mt = mixing_time_bound(depolarizing(0.5), KAPPA_BKM, 0.01)
    assert mt.t == math.ceil(math.log(40000) / math.log(4)) == 8
    assert mt.eta == pytest.approx(0.25)
    assert mt.lambda_min == pytest.approx(0.5)
    assert mt.verified and mt.worst_distance <= 0.01
    assert int(mt) == 8
    assert "fixed point" in mt.lambda_min_reading


def test_mixing_time_cq_phi():
    mt = mixing_time_bound(cq_phi(0.6, 0.6), KAPPA_BKM, 0.05)
    assert mt.verified
    assert mt.worst_distance <= 0.05


def test_mixing_time_rejects_bad_delta():
    with pytest.raises(ValueError):
        mixing_time_bound(depolarizing(0.5), KAPPA_MAX, 1.5)
