"""Petz-type recovery maps, fidelity, and approximate-sufficiency chains."""

from __future__ import annotations

import math

import numpy as np

from .channels import Channel, adjoint_apply, apply
from .divergences import chi2_seminorm, standard_f_div
from .errors import SupportViolation
from .funcs import XLOGX, KappaSpec
from .opcore import as_state, sqrtm_psd, trace_norm

SUPPORT_TOL = 1e-10
DEFAULT_T = 8.0
DEFAULT_NODES = 200


def _powers(A: np.ndarray, p: complex, tol: float = SUPPORT_TOL):
    """A^p on supp A (zero elsewhere) and the support projector."""
    w, V = np.linalg.eigh((A + A.conj().T) / 2)
    keep = w > tol
    ws, Vs = w[keep], V[:, keep]
    return (Vs * ws.astype(complex) ** p) @ Vs.conj().T, Vs @ Vs.conj().T


def _check_support(A: np.ndarray, P: np.ndarray, what: str) -> None:
    Q = np.eye(P.shape[0]) - P
    if np.linalg.norm(Q @ A) > 1e-8 * max(1.0, np.linalg.norm(A)):
        raise SupportViolation(f"{what} is not supported on supp N(gamma)")


def petz_apply(gamma, ch: Channel, t: float, A) -> np.ndarray:
    """Rotated Petz map at angle t for reference gamma, applied to A."""
    g = as_state(gamma).matrix
    A = np.asarray(A, dtype=complex)
    Ng = apply(ch, g)
    inner_l, P = _powers(Ng, -0.5 + 1j * t)
    _check_support(A, P, "argument")
    inner_r = _powers(Ng, -0.5 - 1j * t)[0]
    outer_l = _powers(g, 0.5 - 1j * t)[0]
    outer_r = _powers(g, 0.5 + 1j * t)[0]
    out = outer_l @ adjoint_apply(ch, inner_l @ A @ inner_r) @ outer_r
    return (out + out.conj().T) / 2


def beta0(t):
    """Probability density pi / (2 (cosh(pi t) + 1)) on the real line."""
    e = np.exp(-np.pi * np.abs(np.asarray(t, dtype=float)))
    return np.pi * e / (1 + e) ** 2


def universal_nodes(T: float = DEFAULT_T, nodes: int = DEFAULT_NODES):
    """Gauss-Legendre nodes on [-T, T] and weights times beta0."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    return T * x, T * w * beta0(T * x)


def universal_apply(gamma, ch: Channel, A, T: float = DEFAULT_T, nodes: int = DEFAULT_NODES) -> np.ndarray:
    """Average of rotated Petz maps R^{t/2} against beta0.

    The truncated mass (at most 2 exp(-pi T) short of 1) is divided out so
    the result stays trace preserving on the support.
    """
    ts, ws = universal_nodes(T, nodes)
    out = sum(w * petz_apply(gamma, ch, t / 2, A) for t, w in zip(ts, ws))
    return out / ws.sum()


def fidelity(rho, sigma) -> float:
    """||sqrt(rho) sqrt(sigma)||_1."""
    r = sqrtm_psd(as_state(rho).matrix)
    s = sqrtm_psd(as_state(sigma).matrix)
    return float(min(np.linalg.svd(r @ s, compute_uv=False).sum(), 1.0))


def sufficiency_report(ch: Channel, rho, gamma, kappa: KappaSpec | None = None, tol: float = 1e-6, **quad) -> dict:
    """Divergence drop under N against recovery quality of the universal map.

    With ``kappa`` unset the drop is in relative entropy (natural log) and
    chain_ok checks drop >= -2 ln F - tol. With a kernel the drop is in the
    chi^2 semi-norm of rho - gamma and no inequality is asserted. The trace
    distance is reported both as ||.||_1^2 and (||.||_1 / 2)^2.
    """
    rho, gamma = as_state(rho), as_state(gamma)
    Ng = apply(ch, gamma.matrix)
    Nr = apply(ch, rho.matrix)
    P = _powers(gamma.matrix, 1.0)[1]
    _check_support(rho.matrix, P, "rho")
    rec = universal_apply(gamma, ch, Nr, **quad)
    F = fidelity(rho, _as_psd_state(rec))
    neg2logF = -2 * math.log(F) if F > 0 else math.inf
    l1 = trace_norm(rho.matrix - rec)
    report = {
        "neg2logF": neg2logF,
        "l1sq": l1**2,
        "l1sq_half": (l1 / 2) ** 2,
        "fidelity": F,
    }
    if kappa is None:
        drop = standard_f_div(XLOGX, rho, gamma).value - standard_f_div(XLOGX, Nr, Ng).value
        report.update(drop=drop, measure="relative_entropy", chain_ok=bool(drop >= neg2logF - tol))
    else:
        X = rho.matrix - gamma.matrix
        drop = chi2_seminorm(kappa, gamma, X).value - chi2_seminorm(kappa, Ng, apply(ch, X)).value
        report.update(drop=drop, measure=f"chi2[{kappa}]", chain_ok=None)
    return report


def _as_psd_state(A: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh((A + A.conj().T) / 2)
    w = np.clip(w, 0, None)
    return (V * (w / w.sum())) @ V.conj().T
