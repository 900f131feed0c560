"""Classical, standard, and maximal f-divergences and chi-square semi-norms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import funcs
from .errors import (
    GridLeavesStateSpace,
    PureStateBase,
    SupportMismatch,
    ValidationError,
)
from .funcs import FSpec, KappaSpec
from .opcore import ZERO_TOL, DensityOperator, as_state, bloch_state, make_tangent

SUPPORT_TOL = 1e-8


@dataclass(frozen=True)
class DivergenceValue:
    value: float
    terms_skipped: int = 0

    def __float__(self):
        return float(self.value)

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)


def classical_f_div(f: FSpec, p, q) -> DivergenceValue:
    """sum_y q(y) f(p(y)/q(y)) over a common support."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ValidationError("p and q must be vectors of equal length")
    for v in (p, q):
        if np.any(v < 0) or abs(v.sum() - 1) > 1e-10:
            raise ValidationError("arguments must be probability vectors")
    supp_p, supp_q = p > 0, q > 0
    if np.any(supp_p != supp_q):
        raise SupportMismatch("p and q have different supports")
    mask = supp_q
    value = float(np.sum(q[mask] * np.asarray(funcs.eval_f_centered(f, p[mask] / q[mask]))))
    return DivergenceValue(value, int(np.sum(~mask)))


def _supported(rho: DensityOperator):
    sp = rho.spectral
    keep = sp.values > ZERO_TOL
    return sp.values[keep], sp.vectors[:, keep]


def _check_equal_support(rho: DensityOperator, gamma: DensityOperator):
    if rho.support_rank != gamma.support_rank or (
        np.max(np.abs(rho.support - gamma.support)) > SUPPORT_TOL
    ):
        raise SupportMismatch("arguments must have equal support")


def _std_div_eig(f: FSpec, a, U, b, V) -> float:
    """Spectral sum over eigenvector pairs; clustered eigenvalues make this
    identical to the projector form sum_{a,b} b f(a/b) Tr P_a Q_b."""
    overlap = np.abs(U.conj().T @ V) ** 2
    ratio = a[:, None] / b[None, :]
    terms = b[None, :] * np.asarray(funcs.eval_f_centered(f, ratio)) * overlap
    return float(np.sum(terms))


def standard_f_div(f: FSpec, rho, gamma) -> DivergenceValue:
    """Standard (Petz-type) f-divergence via the relative modular operator.

    Both states must have equal support; pairs of zero eigenvalues are
    dropped and counted in ``terms_skipped``.
    """
    rho, gamma = as_state(rho), as_state(gamma)
    _check_equal_support(rho, gamma)
    a, U = _supported(rho)
    b, V = _supported(gamma)
    value = _std_div_eig(f, a, U, b, V)
    skipped = (rho.dim - rho.support_rank) ** 2
    return DivergenceValue(max(value, 0.0), skipped)


def maximal_f_div(f: FSpec, rho, gamma) -> DivergenceValue:
    """Maximal f-divergence Tr gamma f(gamma^-1/2 rho gamma^-1/2) on supp gamma."""
    rho, gamma = as_state(rho), as_state(gamma)
    _check_equal_support(rho, gamma)
    b, V = _supported(gamma)
    R = V.conj().T @ rho.matrix @ V
    Binv = 1 / np.sqrt(b)
    Mx = Binv[:, None] * R * Binv[None, :]
    m, W = np.linalg.eigh((Mx + Mx.conj().T) / 2)
    m = np.clip(m, ZERO_TOL, None)
    weights = (np.abs(W) ** 2 * b[:, None]).sum(axis=0)
    value = float(np.sum(weights * np.asarray(funcs.eval_f_centered(f, m))))
    return DivergenceValue(max(value, 0.0), (rho.dim - rho.support_rank) ** 2)


def kappa_weights(kappa: KappaSpec, lam: np.ndarray) -> np.ndarray:
    """W[k, l] = kappa(lam_k/lam_l)/lam_l on supported pairs, 0 elsewhere."""
    keep = lam > ZERO_TOL
    W = np.zeros((lam.size, lam.size))
    ls = lam[keep]
    W[np.ix_(keep, keep)] = np.asarray(funcs.eval_kappa(kappa, ls[:, None] / ls[None, :])) / ls[None, :]
    return W


def _chi2_eig(kappa: KappaSpec, lam, vecs, X) -> float:
    Xt = vecs.conj().T @ X @ vecs
    return float(np.sum(np.abs(Xt) ** 2 * kappa_weights(kappa, lam)))


def chi2_seminorm(kappa: KappaSpec, rho, X) -> DivergenceValue:
    """Riemannian semi-norm sum_{a,b} b^-1 kappa(a/b) Tr X P_a X P_b."""
    rho = as_state(rho)
    X = make_tangent(rho, X).matrix
    sp = rho.spectral
    value = _chi2_eig(kappa, sp.values, sp.vectors, X)
    return DivergenceValue(max(value, 0.0), (rho.dim - rho.support_rank) ** 2)


# Qubit closed form ---------------------------------------------------------


def _gauss_legendre(n: int, lo: float, hi: float):
    x, w = np.polynomial.legendre.leggauss(n)
    return (hi - lo) / 2 * x + (hi + lo) / 2, (hi - lo) / 2 * w


def h_s(s, x):
    """(1+s)^2 (1-x) / ((1+s)^2 (1-x) + 4 s x)."""
    s = np.asarray(s, dtype=float)
    num = (1 + s) ** 2 * (1 - x)
    den = num + 4 * s * x
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / den, 1.0)


def _bkm_h_nodes(x: float, n: int = 64):
    # h_s changes on the scale s ~ (1 - x); split [0, 1] geometrically so a
    # fixed 64-node rule resolves that layer for states close to pure.
    edges = [0.0] + [10.0**k for k in range(-12, 1)]
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        t, w = _gauss_legendre(n, lo, hi)
        nodes.append(t)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def h_value(kappa: KappaSpec, x: float) -> float:
    """h(x) = integral h_s(x) dm(s) for the kernel's mixing measure m."""
    meas = funcs.kappa_measure(kappa)
    total = sum(w * float(h_s(s, x)) for w, s in meas.atoms)
    if meas.density is not None:
        s, w = _bkm_h_nodes(x)
        total += float(np.sum(w * meas.density(s) * h_s(s, x)))
    return total


def qubit_chi2_closed_form(kappa: KappaSpec, w, y) -> DivergenceValue:
    """Closed-form semi-norm at rho = (I + w.sigma)/2 for X = y.sigma/sqrt(2).

    ``y`` are the coordinates of X in the orthonormal Pauli basis
    sigma_k/sqrt(2). The value is 2|y|^2/(1-|w|^2) (h + (1-h) cos^2 theta)
    with h = h(|w|^2) and theta the angle between w and y.
    """
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = float(w @ w)
    if r2 > 1 + 1e-12:
        raise ValidationError("Bloch vector outside the unit ball")
    funcs.kappa_measure(kappa)  # raises UnknownMeasure early
    yy = float(y @ y)
    if yy == 0:
        return DivergenceValue(0.0)
    if r2 >= 1 - 1e-15:
        if not kappa.bounded:
            raise PureStateBase("pure base state with an unbounded kernel")
        raise PureStateBase("closed form needs |w| < 1")
    cos2 = 0.0 if r2 == 0 else float(w @ y) ** 2 / (r2 * yy)
    h = h_value(kappa, r2)
    return DivergenceValue(2 * yy / (1 - r2) * (h + (1 - h) * cos2))


def qubit_tangent(y) -> np.ndarray:
    """The tangent y.sigma/sqrt(2) matching :func:`qubit_chi2_closed_form`."""
    from .opcore import PAULIS

    return sum(c * P for c, P in zip(np.asarray(y, dtype=float), PAULIS)) / np.sqrt(2)


# Local behaviour -----------------------------------------------------------


def _richardson(eps: np.ndarray, vals: np.ndarray) -> float:
    """Neville extrapolation of a smooth function of eps to eps = 0."""
    eps = list(eps)
    table = list(vals)
    n = len(table)
    for k in range(1, n):
        for i in range(n - k):
            table[i] = (eps[i + k] * table[i] - eps[i] * table[i + 1]) / (eps[i + k] - eps[i])
    return float(table[0])


def second_order_limit(f: FSpec, rho, X, eps_grid: Sequence[float] | None = None) -> float:
    """Extrapolated limit of 2 eps^-2 D_f(rho || rho + eps X) as eps -> 0."""
    rho = as_state(rho)
    X = make_tangent(rho, X).matrix
    if not np.any(np.abs(X) > 0):
        return 0.0
    if eps_grid is None:
        scale = rho.min_eig if rho.support_rank == rho.dim else _support_min(rho)
        xnorm = np.max(np.abs(np.linalg.eigvalsh(X)))
        base = 0.05 * scale / xnorm
        eps_grid = [base / 2**k for k in range(5)]
    eps_grid = np.asarray(eps_grid, dtype=float)
    a, U = _supported(rho)
    vals = []
    for e in eps_grid:
        g = rho.matrix + e * X
        lam, V = np.linalg.eigh(g)
        keep = lam > ZERO_TOL
        if np.any(lam < -ZERO_TOL) or keep.sum() != rho.support_rank:
            raise GridLeavesStateSpace(f"rho + {e:g} X is not a state with the same support")
        vals.append(2 * _std_div_eig(f, a, U, lam[keep], V[:, keep]) / e**2)
    return _richardson(eps_grid, np.asarray(vals))


def _support_min(rho: DensityOperator) -> float:
    v = rho.spectral.values
    return float(v[v > ZERO_TOL].min())


# Integral relations --------------------------------------------------------


def _chi2_batch(kappa: KappaSpec, bases: np.ndarray, X: np.ndarray) -> np.ndarray:
    """||X||^2_{kappa, base} for a stack of full-rank bases."""
    lam, V = np.linalg.eigh(bases)
    Xt = np.einsum("nki,kl,nlj->nij", V.conj(), X, V)
    lam = np.clip(lam, ZERO_TOL, None)
    ratio = lam[:, :, None] / lam[:, None, :]
    W = np.asarray(funcs.eval_kappa(kappa, ratio)) / lam[:, None, :]
    return np.sum(np.abs(Xt) ** 2 * W, axis=(1, 2))


def relative_entropy_integral(rho, gamma, nodes: int = 200) -> float:
    """Nested quadrature of int_0^1 int_0^s ||rho - gamma||^2_{BKM, rho_t} dt ds.

    rho_t = (1 - t) gamma + t rho; equals the relative entropy D(rho||gamma).
    """
    R = np.asarray(as_state(rho).matrix)
    G = np.asarray(as_state(gamma).matrix)
    X = R - G
    x, w = np.polynomial.legendre.leggauss(nodes)
    s = (x + 1) / 2
    ws = w / 2
    # inner nodes t = s * (x + 1)/2 for each outer s
    t = s[:, None] * (x[None, :] + 1) / 2
    wt = s[:, None] * w[None, :] / 2
    bases = (1 - t.ravel())[:, None, None] * G + t.ravel()[:, None, None] * R
    vals = _chi2_batch(funcs.KAPPA_BKM, bases, X).reshape(t.shape)
    return float(np.sum(ws[:, None] * wt * vals))


def classical_integral_relation(f: FSpec, p, q, kappa: KappaSpec | None = None, nodes: int = 200) -> float:
    """Rebuild D_f(p||q) from chi-square semi-norms along the segment to q.

    D_f = c ||p-q||^2_q + int_[1,inf) (r^2+1)/r^2 ||p-q||^2_{q + (p-q)/r} dmu(r),
    where mu is the measure of f transported to r = 1 + s and reweighted by
    r/(r^2+1). Diagonal states are used so any kernel gives the same norms.
    """
    kappa = funcs.KAPPA_MAX if kappa is None else kappa
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    rep = funcs.f_representation(f)
    X = np.diag(p - q).astype(complex)
    Q = np.diag(q).astype(complex)

    def norm_at(r):
        r = np.atleast_1d(r)
        bases = np.array([np.diag(q + (p - q) / ri).astype(complex) for ri in r])
        return _chi2_batch(kappa, bases, X)

    total = rep.c * _chi2_batch(kappa, Q[None], X)[0]
    for weight, s in rep.atoms:
        r = 1 + s
        mu = r / (r**2 + 1) * weight
        total += (r**2 + 1) / r**2 * mu * norm_at(r)[0]
    if rep.density is not None:
        # substitute r = 1/u, u in (0, 1]
        x, w = np.polynomial.legendre.leggauss(nodes)
        u = (x + 1) / 2
        wu = w / 2
        r = 1 / u
        dmu = r / (r**2 + 1) * rep.density(r - 1) * r**2  # dr = r^2 du
        total += float(np.sum(wu * (r**2 + 1) / r**2 * dmu * norm_at(r)))
    return float(total)


def bloch_pair(w, y):
    """(rho, X) for Bloch vector w and Pauli-basis coordinates y."""
    return bloch_state(w), qubit_tangent(y)


__all__ = [
    "DivergenceValue",
    "classical_f_div",
    "standard_f_div",
    "maximal_f_div",
    "chi2_seminorm",
    "kappa_weights",
    "qubit_chi2_closed_form",
    "qubit_tangent",
    "h_s",
    "h_value",
    "second_order_limit",
    "relative_entropy_integral",
    "classical_integral_relation",
]
