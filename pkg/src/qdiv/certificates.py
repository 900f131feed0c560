"""Executable witnesses: no reverse DPI, primitive-channel certificates, scans."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import funcs
from .channels import Channel, apply, identity, is_primitive, iterate, lambda_extremes, purity_preserving
from .coefficients import (
    CERTIFIED_LOWER,
    CoefficientEstimate,
    div_rel_expansion,
    riem_coeff_fixed_ref,
    riem_rel_expansion,
    schatten2_rel_expansion,
    transfer_image,
)
from .divergences import maximal_f_div, standard_f_div
from .errors import DimMismatch, MTooSmall, NotPrimitive, NoWitnessFound, PurityPreserving
from .funcs import FSpec, KappaSpec
from .opcore import random_unitary

DEFAULT_EPS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4)
SUPPORT_TOL = 1e-8


@dataclass
class WitnessFamily:
    P_A: np.ndarray
    psi: np.ndarray
    epsilon_grid: list
    table: list = field(default_factory=list)
    fit: dict = field(default_factory=dict)

    def ratio_at(self, eps: float) -> float:
        for row in self.table:
            if math.isclose(row["eps"], eps, rel_tol=1e-12):
                return row["ratio"]
        raise KeyError(eps)


def _support_projector(A: np.ndarray, tol: float = SUPPORT_TOL) -> np.ndarray:
    w, V = np.linalg.eigh((A + A.conj().T) / 2)
    Vs = V[:, w > tol * max(1.0, w[-1])]
    return Vs @ Vs.conj().T


def _contained(ch: Channel, P: np.ndarray, psi: np.ndarray) -> bool:
    Pi = _support_projector(apply(ch, P))
    out = apply(ch, np.outer(psi, psi.conj()))
    Q = np.eye(Pi.shape[0]) - Pi
    return float(np.linalg.norm(Q @ out @ Q)) <= SUPPORT_TOL


def _frames(d: int, draws: int, seed: int):
    yield np.eye(d, dtype=complex)
    yield np.eye(d, dtype=complex)[:, ::-1]
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        yield random_unitary(d, rng.integers(2**63))


def find_witness_pair(ch: Channel, draws: int = 256, seed: int = 0):
    """Projector P_A and a unit psi orthogonal to it with supp N(psi) in supp N(P_A)."""
    d = ch.d_in
    for U in _frames(d, draws, seed):
        for k in range(d - 1, 0, -1):
            P = U[:, :k] @ U[:, :k].conj().T
            for j in range(k, d):
                psi = U[:, j]
                if _contained(ch, P, psi):
                    return P, psi
    raise NoWitnessFound("no projector/vector pair satisfied the support condition")


def _loglog(eps: np.ndarray, vals: np.ndarray):
    keep = vals > 0
    if keep.sum() < 2:
        return math.nan, math.nan
    k, c = np.polyfit(np.log(eps[keep]), np.log(vals[keep]), 1)
    return float(k), float(math.exp(c))


def no_rdpi_witness(ch: Channel, f: FSpec, eps_grid: Sequence[float] = DEFAULT_EPS, seed: int = 0) -> WitnessFamily:
    """Pairs whose input divergence is of order eps while the output is o(eps).

    rho_eps = (1 - eps^2) rho_bar + eps^2 psi and gamma_eps = (1 - eps) rho_bar
    + eps psi, with rho_bar the normalized projector. The output divergence
    is bounded by the maximal f-divergence, which is what the ratio column
    uses; the standard value is reported alongside.
    """
    if ch.d_out > ch.d_in:
        raise DimMismatch("witness construction needs d_out <= d_in")
    if purity_preserving(ch, seed=seed):
        raise PurityPreserving("channel maps pure states to pure states")
    P, psi = find_witness_pair(ch, seed=seed)
    rho_bar = P / np.trace(P).real
    Psi = np.outer(psi, psi.conj())
    table = []
    for eps in eps_grid:
        r = (1 - eps**2) * rho_bar + eps**2 * Psi
        g = (1 - eps) * rho_bar + eps * Psi
        d_in = standard_f_div(f, r, g).value
        Nr, Ng = apply(ch, r), apply(ch, g)
        out_std = standard_f_div(f, Nr, Ng).value
        out_max = maximal_f_div(f, Nr, Ng).value
        table.append(
            {
                "eps": eps,
                "D_in": d_in,
                "D_out_std": out_std,
                "D_out_max": out_max,
                "ratio": out_max / d_in if d_in > 0 else math.inf,
                "in_over_eps": d_in / eps,
                "out_over_eps": out_max / eps,
            }
        )
    e = np.array([row["eps"] for row in table])
    k_in, c_in = _loglog(e, np.array([row["D_in"] for row in table]))
    k_out, c_out = _loglog(e, np.array([row["D_out_max"] for row in table]))
    fit = {"in_exponent": k_in, "in_slope": c_in, "out_exponent": k_out, "out_slope": c_out}
    return WitnessFamily(P, psi, list(eps_grid), table, fit)


def primitive_expansion_certificate(ch: Channel, kappa: KappaSpec, m: int | None = None, tol: float = 1e-9) -> CoefficientEstimate:
    """Positive lower bound on the kappa-expansion of N^m relative to N^(m-1).

    lower = lambda_min(N^(m-1)) / lambda_max(N^m) * eta2^2, where eta2 is
    the Schatten-2 relative expansion (a ratio of norms). Without ``m`` the
    smallest admissible power is used. The exact fixed-reference coefficient
    on Im N^(m-1) is included in the diagnostics for comparison.
    """
    cert = is_primitive(ch)
    if not cert.primitive:
        raise NotPrimitive(cert.reason)
    if m is None:
        m = cert.full_rank_power + 1
    if m < 1:
        raise MTooSmall("m must be at least 1")
    prev = iterate(ch, m - 1)
    cur = iterate(ch, m)
    ext_prev = lambda_extremes(prev)
    ext_cur = lambda_extremes(cur)
    if ext_prev.lambda_min <= tol:
        raise MTooSmall(f"N^{m - 1} has rank-deficient outputs; try a larger m")
    eta2 = schatten2_rel_expansion(cur, prev).value
    lower = ext_prev.lambda_min / ext_cur.lambda_max * eta2**2
    sub = transfer_image(ch, m - 1)
    exact = riem_coeff_fixed_ref(kappa, ch, cert.fixed_point, mode="inf", subspace=sub).value
    return CoefficientEstimate(
        lower,
        CERTIFIED_LOWER,
        {"m": m},
        {
            "lambda_min": ext_prev.lambda_min,
            "lambda_max": ext_cur.lambda_max,
            "eta2": eta2,
            "lambda_direction": "heuristic",
            "fixed_ref_on_image": exact,
            "full_rank_power": cert.full_rank_power,
        },
    )


def image_expansion(ch: Channel, kappa: KappaSpec, ref=None) -> CoefficientEstimate:
    """Exact kappa-expansion of N on Im N at a fixed point (default I/d)."""
    ref = np.eye(ch.d_in) / ch.d_in if ref is None else ref
    return riem_coeff_fixed_ref(kappa, ch, ref, mode="inf", subspace=transfer_image(ch, 1))


def equality_check(f: FSpec, N: Channel, M: Channel, budget="medium", seed: int = 0, tol: float = 1e-3) -> dict:
    """Compare divergence and Riemannian relative expansion estimates.

    Both searches share the budget; the Riemannian witness seeds the
    divergence search. Sampling never proves inequality, so a large gap is
    reported as inconclusive.
    """
    kappa = funcs.induced_kappa(f)
    riem = riem_rel_expansion(kappa, N, M, mode="inf", budget=budget, seed=seed)
    div = div_rel_expansion(f, N, M, mode="inf", budget=budget, seed=seed, extra_bases=[riem.witness["rho"]])
    gap = abs(div.value - riem.value)
    verdict = "consistent_with_equality" if gap <= tol else "inconclusive"
    return {"div_est": div.value, "riem_est": riem.value, "gap": gap, "verdict": verdict, "div": div, "riem": riem}


def inequivalence_scan(kappa: KappaSpec, alpha_grid: Sequence[float], budget="small", seed: int = 0) -> list:
    """Contraction of the cq family with tau = sqrt(1 - alpha^2), normalized by alpha^2."""
    from .channels import cq_phi

    rows = []
    for a in alpha_grid:
        if not 0 < a < 1:
            raise ValueError("alpha must lie in (0, 1)")
        ch = cq_phi(a, math.sqrt(1 - a * a))
        est = riem_rel_expansion(kappa, ch, identity(2), mode="sup", budget=budget, seed=seed)
        rows.append({"alpha": a, "eta": est.value, "normalized": est.value / a**2, "direction": est.direction})
    return rows
