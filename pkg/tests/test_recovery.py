import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, linalg

from conftest import random_channel
from qdiv.channels import apply, compose, dephasing, identity, replacer
from qdiv.divergences import standard_f_div
from qdiv.errors import SupportViolation
from qdiv.funcs import KAPPA_BKM, XLOGX
from qdiv.opcore import random_state
from qdiv.recovery import (
    beta0,
    fidelity,
    petz_apply,
    sufficiency_report,
    universal_apply,
    universal_nodes,
)

seeds = st.integers(0, 2**32 - 1)


def uhlmann_oracle(rho, sigma):
    r = linalg.sqrtm(rho)
    return float(np.trace(linalg.sqrtm(r @ sigma @ r)).real)


# Petz maps


@given(seeds, st.floats(-3, 3))
def test_petz_fixes_reference(seed, t):
    ch = random_channel(2, 2, 2, seed)
    gamma = random_state(2, 2, seed + 1).matrix
    np.testing.assert_allclose(petz_apply(gamma, ch, t, apply(ch, gamma)), gamma, atol=1e-9)


def test_petz_identity_channel():
    gamma = random_state(2, 2, 3).matrix
    A = random_state(2, 2, 4).matrix - np.eye(2) / 2
    np.testing.assert_allclose(petz_apply(gamma, identity(2), 0.0, A), A, atol=1e-12)


@given(seeds)
def test_petz_trace_and_hermiticity(seed):
    ch = random_channel(2, 3, 2, seed)
    gamma = random_state(2, 2, seed + 1).matrix
    A = random_state(3, 3, seed + 2).matrix
    out = petz_apply(gamma, ch, 1.0, A)
    np.testing.assert_allclose(out, out.conj().T, atol=1e-12)
    assert np.trace(out).real == pytest.approx(np.trace(A).real, abs=1e-8)


def test_petz_support_violation():
    ch = dephasing(0.3)
    gamma = np.diag([1.0, 0.0])
    with pytest.raises(SupportViolation):
        petz_apply(gamma, ch, 0.0, np.eye(2) / 2)


# universal map


def test_beta0_normalization():
    total = integrate.quad(beta0, -np.inf, np.inf)[0]
    assert total == pytest.approx(1, abs=1e-10)
    T = 8.0
    _, w = universal_nodes(T)
    window = integrate.quad(beta0, -T, T, epsabs=1e-14)[0]
    assert w.sum() == pytest.approx(window, abs=1e-9)
    assert w.sum() >= 1 - 2 * math.exp(-math.pi * T)
    assert 1 - w.sum() < 3e-11


@given(seeds)
def test_universal_fixes_reference(seed):
    ch = random_channel(2, 2, 2, seed)
    gamma = random_state(2, 2, seed + 1).matrix
    np.testing.assert_allclose(universal_apply(gamma, ch, apply(ch, gamma)), gamma, atol=1e-7)


def test_universal_trace_and_quadrature_convergence():
    ch = random_channel(2, 2, 2, 5)
    gamma = random_state(2, 2, 6).matrix
    A = apply(ch, random_state(2, 2, 7).matrix)
    out = universal_apply(gamma, ch, A)
    assert np.trace(out).real == pytest.approx(1, abs=1e-7)
    np.testing.assert_allclose(out, out.conj().T, atol=1e-12)
    finer = universal_apply(gamma, ch, A, nodes=400)
    assert np.max(np.abs(finer - out)) < 1e-8


# fidelity


def test_fidelity_examples():
    rho = random_state(2, 2, 1).matrix
    assert fidelity(rho, rho) == pytest.approx(1, abs=1e-10)
    assert fidelity(np.diag([1.0, 0]), np.diag([0, 1.0])) == pytest.approx(0, abs=1e-12)
    assert fidelity(np.eye(2) / 2, np.diag([1.0, 0])) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


@given(seeds, st.integers(2, 3))
def test_fidelity_matches_uhlmann(seed, d):
    r, s = random_state(d, d, seed).matrix, random_state(d, d, seed + 1).matrix
    assert fidelity(r, s) == pytest.approx(uhlmann_oracle(r, s), abs=1e-8)


# sufficiency chain


def test_sufficiency_identity():
    rho, gamma = random_state(2, 2, 1), random_state(2, 2, 2)
    rep = sufficiency_report(identity(2), rho, gamma)
    assert rep["drop"] == pytest.approx(0, abs=1e-12)
    assert rep["neg2logF"] == pytest.approx(0, abs=1e-7)
    assert rep["l1sq"] == pytest.approx(0, abs=1e-12)
    assert rep["chain_ok"]


def test_sufficiency_replacer():
    rho, gamma = random_state(2, 2, 3), random_state(2, 2, 4)
    rep = sufficiency_report(replacer(gamma.matrix), rho, gamma)
    assert rep["drop"] == pytest.approx(standard_f_div(XLOGX, rho, gamma).value, abs=1e-10)
    # the replacer recovers gamma itself
    assert rep["fidelity"] == pytest.approx(fidelity(rho, gamma), abs=1e-8)
    assert rep["chain_ok"]
    assert rep["l1sq_half"] == pytest.approx(rep["l1sq"] / 4)


@pytest.mark.parametrize("seed", range(6))
def test_sufficiency_dephasing_chain(seed):
    rho, gamma = random_state(2, 2, seed), random_state(2, 2, seed + 10)
    rep = sufficiency_report(dephasing(0.3), rho, gamma)
    assert rep["chain_ok"]
    assert rep["drop"] >= rep["neg2logF"] - 1e-6


@given(seeds)
def test_sufficiency_chain_random_channels(seed):
    ch = random_channel(2, 2, 2, seed)
    rho, gamma = random_state(2, 2, seed + 1), random_state(2, 2, seed + 2)
    rep = sufficiency_report(ch, rho, gamma)
    assert rep["chain_ok"]
    rep2 = sufficiency_report(compose(ch, identity(2)), rho, gamma)
    assert rep2["drop"] == pytest.approx(rep["drop"], abs=1e-10)


def test_sufficiency_kappa_variant_and_support():
    rho, gamma = random_state(2, 2, 5), random_state(2, 2, 6)
    rep = sufficiency_report(dephasing(0.3), rho, gamma, kappa=KAPPA_BKM)
    assert rep["chain_ok"] is None and rep["drop"] >= -1e-12
    with pytest.raises(SupportViolation):
        sufficiency_report(dephasing(0.3), np.eye(2) / 2, np.diag([1.0, 0.0]))
