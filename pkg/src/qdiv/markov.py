"""Convergence envelopes and mixing times for primitive channels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channels import Channel, apply, is_primitive, iterate, lambda_extremes
from .coefficients import riem_coeff_fixed_ref, transfer_image
from .divergences import chi2_seminorm
from .errors import EtaIsOne, NotPrimitive
from .funcs import KappaSpec
from .opcore import DensityOperator, as_state, random_state, trace_norm

LAMBDA_MIN_READING = "smallest eigenvalue of the fixed point"


@dataclass
class ConvergenceReport:
    fixed_point: DensityOperator
    eta: float
    eta_check: float
    M: int
    trajectory: list = field(default_factory=list)
    t_mix_bound: int | None = None
    notes: dict = field(default_factory=dict)

    def within_envelopes(self, tol: float = 1e-9) -> bool:
        for row in self.trajectory:
            if row["trace_dist"] > row["upper_env"] + tol:
                return False
            lo = row["lower_env"]
            if lo is not None and row["trace_dist"] < lo - tol:
                return False
        return True


def _primitive(ch: Channel):
    cert = is_primitive(ch)
    if not cert.primitive:
        raise NotPrimitive(cert.reason)
    return cert


def lower_start(ch: Channel, tol: float = 1e-6, max_power: int | None = None) -> int:
    """Smallest m >= 1 with full-rank outputs of N^m and stable transfer rank."""
    d = ch.d_in
    max_power = 2 * (d * d - d + 1) if max_power is None else max_power
    for m in range(1, max_power + 1):
        if lambda_extremes(iterate(ch, m), restarts=8).lambda_min <= tol:
            continue
        if transfer_image(ch, m).shape[1] == transfer_image(ch, m - 1).shape[1]:
            return m
    raise NotPrimitive("no admissible starting power found")


def _kappa_dist(kappa: KappaSpec, ref: DensityOperator, A: np.ndarray) -> float:
    return math.sqrt(chi2_seminorm(kappa, ref, A - ref.matrix).value)


def convergence_trace(ch: Channel, rho0, kappa: KappaSpec, n_max: int = 50, M: int | None = None) -> ConvergenceReport:
    """Trace distances to the fixed point with upper and lower envelopes.

    upper(n) = eta^(n/2) ||rho0 - pi||, valid for n >= 0.
    lower(n) = min(lambda_min(N^n), lambda_min(pi))^(1/2) eta_check^((n-M+1)/2)
    ||N^(M-1) rho0 - pi|| for n >= M. The lambda_min(N^n) search is
    heuristic, so it is clipped by the fixed point's smallest eigenvalue,
    which is always a valid factor.
    """
    cert = _primitive(ch)
    pi = cert.fixed_point
    rho0 = as_state(rho0).matrix
    eta = riem_coeff_fixed_ref(kappa, ch, pi, mode="sup").value
    M = lower_start(ch) if M is None else M
    eta_check = riem_coeff_fixed_ref(kappa, ch, pi, mode="inf", subspace=transfer_image(ch, M - 1)).value
    base = _kappa_dist(kappa, pi, rho0)
    rho_M1 = apply(iterate(ch, M - 1), rho0)
    base_low = _kappa_dist(kappa, pi, rho_M1)
    rows = []
    rho = rho0
    power = iterate(ch, 0)
    for n in range(n_max + 1):
        if n:
            rho = apply(ch, rho)
            power = iterate(ch, n)
        lower = None
        if n >= M:
            lam = min(lambda_extremes(power, restarts=4).lambda_min, pi.min_eig)
            lower = math.sqrt(lam) * eta_check ** ((n - M + 1) / 2) * base_low
        rows.append(
            {
                "n": n,
                "trace_dist": trace_norm(rho - pi.matrix),
                "upper_env": eta ** (n / 2) * base,
                "lower_env": lower,
            }
        )
    return ConvergenceReport(pi, eta, eta_check, M, rows, notes={"lambda_min": LAMBDA_MIN_READING})


class MixingTimeBound(NamedTuple):
    t: int
    eta: float
    lambda_min: float
    verified: bool | None
    worst_distance: float | None
    lambda_min_reading: str = LAMBDA_MIN_READING

    def __int__(self):
        return self.t


def mixing_time_bound(
    ch: Channel, kappa: KappaSpec, delta: float, check: bool = True, samples: int = 64, seed: int = 0
) -> MixingTimeBound:
    """Steps t after which every input is within delta of the fixed point in trace norm.

    t = ceil(log(2 / (delta^2 lambda_min)) / log(1 / eta)), or 0 when the
    logarithm is not positive. With ``check`` the bound is tested on random
    inputs.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    cert = _primitive(ch)
    pi = cert.fixed_point
    eta = riem_coeff_fixed_ref(kappa, ch, pi, mode="sup").value
    if eta >= 1 - 1e-12:
        raise EtaIsOne("contraction coefficient is 1; no mixing bound")
    lam = pi.min_eig
    num = math.log(2 / (delta**2 * lam))
    t = 0 if num <= 0 else (math.ceil(num / math.log(1 / eta)) if eta > 0 else 1)
    verified = worst = None
    if check:
        rng = np.random.default_rng(seed)
        Nt = iterate(ch, t)
        worst = 0.0
        for _ in range(samples):
            r = random_state(ch.d_in, seed=rng.integers(2**63)).matrix
            worst = max(worst, trace_norm(apply(Nt, r) - pi.matrix))
        verified = worst <= delta
    return MixingTimeBound(t, eta, lam, verified, worst)
