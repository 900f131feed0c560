import math

import numpy as np
import pytest

from qdiv.certificates import (
    DEFAULT_EPS,
    equality_check,
    find_witness_pair,
    image_expansion,
    inequivalence_scan,
    no_rdpi_witness,
    primitive_expansion_certificate,
)
from qdiv.channels import (
    amplitude_damping,
    apply,
    cq_phi,
    dephasing,
    depolarizing,
    erasure,
    iterate,
    pauli,
    unitary,
)
from qdiv.coefficients import CERTIFIED_LOWER, riem_rel_expansion
from qdiv.errors import DimMismatch, MTooSmall, NotPrimitive, PurityPreserving
from qdiv.funcs import KAPPA_BKM, KAPPA_MAX, KAPPA_MIN, SQUARE, XLOGX, fs
from qdiv.opcore import bloch_state


def support_contained(ch, P, psi, tol=1e-9):
    w, V = np.linalg.eigh(apply(ch, P))
    Vs = V[:, w > 1e-8]
    out = apply(ch, np.outer(psi, psi.conj()))
    resid = out - Vs @ Vs.conj().T @ out @ Vs @ Vs.conj().T
    return np.linalg.norm(resid) < tol


def bloch_grid_lambda(ch, which, n=121):
    th, ph = np.meshgrid(np.linspace(0, np.pi, n), np.linspace(0, 2 * np.pi, 2 * n))
    ws = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], -1).reshape(-1, 3)
    vals = [np.linalg.eigvalsh(apply(ch, bloch_state(w))) for w in ws]
    return min(v[0] for v in vals) if which == "min" else max(v[-1] for v in vals)


# no reverse DPI witness


@pytest.mark.parametrize("f", [XLOGX, SQUARE, fs(0.5)], ids=str)
def test_witness_depolarizing(f):
    ch = depolarizing(0.5)
    wf = no_rdpi_witness(ch, f)
    assert support_contained(ch, wf.P_A, wf.psi)
    assert abs(np.vdot(wf.psi, wf.P_A @ wf.psi)) < 1e-12
    assert wf.ratio_at(1e-3) < 0.15 * wf.ratio_at(1e-2)
    assert wf.fit["in_exponent"] == pytest.approx(1, abs=0.1)
    assert wf.fit["out_exponent"] == pytest.approx(2, abs=0.1)
    assert wf.fit["in_slope"] > 0
    ins = [row["in_over_eps"] for row in wf.table]
    assert ins[-1] > 0.5 * ins[0]
    for row in wf.table:
        assert row["D_out_std"] <= row["D_out_max"] + 1e-12


def test_witness_square_slope_positive():
    # for f = square the input divergence per eps tends to f(0+) + f'(1) - f(1) = 1
    wf = no_rdpi_witness(depolarizing(0.5), SQUARE)
    assert wf.table[-1]["in_over_eps"] == pytest.approx(1, rel=1e-3)


def test_witness_other_channels():
    for ch in (amplitude_damping(0.3), dephasing(0.4), cq_phi(0.6, 0.6)):
        wf = no_rdpi_witness(ch, XLOGX)
        assert support_contained(ch, wf.P_A, wf.psi)
        # cq_phi can give identical outputs, so the ratio may vanish outright
        small, mid = wf.ratio_at(DEFAULT_EPS[-1]), wf.ratio_at(DEFAULT_EPS[2])
        assert small < 1e-12 or small < 0.15 * mid


def test_witness_errors():
    with pytest.raises(PurityPreserving):
        no_rdpi_witness(unitary(np.array([[0, 1], [1, 0]])), XLOGX)
    with pytest.raises(DimMismatch):
        no_rdpi_witness(erasure(0.3), XLOGX)


def test_find_witness_pair_qutrit():
    ch = depolarizing(0.3, 3)
    P, psi = find_witness_pair(ch)
    assert support_contained(ch, P, psi)


# primitive certificates


def test_certificate_depolarizing():
    ch = depolarizing(0.5)
    with pytest.raises(MTooSmall):
        primitive_expansion_certificate(ch, KAPPA_BKM, m=1)
    cert = primitive_expansion_certificate(ch, KAPPA_BKM, m=2)
    assert cert.direction == CERTIFIED_LOWER
    # lambda_min(N) = p/2, lambda_max(N^2) = 1 - (1 - (1-p)^2)/2, eta2 = 1 - p
    assert cert.value == pytest.approx(0.25 / 0.625 * 0.25, abs=1e-10)


@pytest.mark.parametrize("ch", [cq_phi(0.6, 0.6), pauli(0.1, 0.1, 0.1)], ids=lambda c: c.name)
def test_certificate_components_against_oracles(ch):
    cert = primitive_expansion_certificate(ch, KAPPA_MAX, m=2)
    dg = cert.diagnostics
    assert dg["lambda_min"] <= bloch_grid_lambda(ch, "min") + 1e-9
    assert dg["lambda_min"] == pytest.approx(bloch_grid_lambda(ch, "min"), abs=1e-3)
    assert dg["lambda_max"] == pytest.approx(bloch_grid_lambda(iterate(ch, 2), "max"), abs=1e-3)
    T = ch.transfer[1:, 1:]
    s = np.linalg.svd(T, compute_uv=False)
    eta2 = min(x for x in s if x > 1e-12)
    assert dg["eta2"] == pytest.approx(eta2, abs=1e-10)
    assert cert.value == pytest.approx(dg["lambda_min"] / dg["lambda_max"] * dg["eta2"] ** 2, rel=1e-12)
    assert cert.value > 0
    again = primitive_expansion_certificate(ch, KAPPA_MAX, m=2)
    assert again.value == pytest.approx(cert.value, abs=1e-8)


@pytest.mark.parametrize("kappa", [KAPPA_MAX, KAPPA_BKM, KAPPA_MIN], ids=str)
def test_certificate_below_sampled_coefficient(kappa):
    for ch in (cq_phi(0.6, 0.6), pauli(0.1, 0.1, 0.1), depolarizing(0.9)):
        cert = primitive_expansion_certificate(ch, kappa, m=2)
        est = riem_rel_expansion(kappa, iterate(ch, 2), ch, budget="tiny")
        assert cert.value <= est.value + 1e-12


def test_certificate_not_primitive():
    with pytest.raises(NotPrimitive):
        primitive_expansion_certificate(amplitude_damping(0.3), KAPPA_MAX)
    with pytest.raises(NotPrimitive):
        primitive_expansion_certificate(dephasing(0.3), KAPPA_MAX)


def test_certificate_auto_m():
    cert = primitive_expansion_certificate(depolarizing(0.5), KAPPA_MAX)
    assert cert.witness["m"] == 2


def test_image_expansion_pauli():
    # Pauli(p, p, p) acts as (1 - 4p) times the identity on traceless parts
    for kap in (KAPPA_MAX, KAPPA_BKM):
        assert image_expansion(pauli(0.1, 0.1, 0.1), kap).value == pytest.approx(0.36, abs=1e-12)


# equality and inequivalence


def test_equality_check_square():
    out = equality_check(SQUARE, dephasing(0.5), dephasing(0.25), budget="tiny")
    assert out["verdict"] == "consistent_with_equality"
    assert out["gap"] <= 1e-3


def test_equality_check_never_claims_inequality():
    out = equality_check(fs(0.99), cq_phi(0.5, 0.5), depolarizing(0.1), budget="tiny", tol=0.0)
    assert out["verdict"] in ("consistent_with_equality", "inconclusive")


def test_inequivalence_scan_columns():
    rows = inequivalence_scan(KAPPA_MIN, [0.05, 0.4], budget="tiny")
    for r in rows:
        assert r["normalized"] == pytest.approx(1, abs=1e-4)
    rows = inequivalence_scan(KAPPA_MAX, [0.05, 0.4], budget="tiny")
    assert rows[0]["normalized"] > 5 * rows[1]["normalized"]
    rows = inequivalence_scan(KAPPA_BKM, [0.05, 0.4], budget="tiny")
    for r in rows:
        tau = math.sqrt(1 - r["alpha"] ** 2)
        assert r["normalized"] == pytest.approx(math.log((1 + tau) / (1 - tau)) / (2 * tau), rel=1e-8)
    with pytest.raises(ValueError):
        inequivalence_scan(KAPPA_MIN, [1.0])
