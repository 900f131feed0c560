"""Contraction, expansion, and relative expansion coefficients.

For a fixed base state the Riemannian ratio ||N(X)||^2 / ||M(X)||^2 is a
ratio of two quadratic forms in X, so its extreme value over tangents is a
generalized eigenvalue. Estimators that also optimize over the base state
(or over pairs of states, for divergences) do so heuristically; the
``direction`` field of every :class:`CoefficientEstimate` records what kind
of bound the reported value is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from . import funcs
from .channels import Channel, apply, identity, iterate, lambda_extremes
from .divergences import kappa_weights
from .errors import (
    DegenerateSubspace,
    DimMismatch,
    HypothesisFailed,
    NotAFixedPoint,
    SingularBase,
    UnboundedKernel,
    ValidationError,
)
from .funcs import FSpec, KappaSpec
from .opcore import ZERO_TOL, as_state, hermitian_basis, random_pure, random_state

EXACT = "exact"
UPPER_OF_INF = "upper_bound_of_inf"
LOWER_OF_SUP = "lower_bound_of_sup"
CERTIFIED_LOWER = "certified_lower"

#: Probes are skipped when an output state's condition number exceeds this;
#: beyond it the quadratic forms cannot be resolved in double precision.
COND_LIMIT = 1e9


@dataclass
class CoefficientEstimate:
    value: float
    direction: str
    witness: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class Budget:
    """Search budget for the sampling estimators.

    ``refine_best`` candidates each get ``nm_restarts`` chained Nelder-Mead
    runs, so the default spends 16 local refinements on the best 8 probes.
    """

    n_random: int = 512
    n_boundary: int = 64
    deltas: tuple = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    refine_best: int = 8
    nm_restarts: int = 2
    nm_maxiter: int = 400
    eps_grid: tuple = (1e-1, 1e-2, 1e-3, 1e-4)
    tol: float = 1e-4

    @classmethod
    def preset(cls, name: str) -> "Budget":
        presets = {
            "tiny": cls(n_random=32, n_boundary=12, refine_best=2, nm_restarts=1, nm_maxiter=150),
            "small": cls(n_random=128, n_boundary=32, refine_best=4, nm_restarts=2, nm_maxiter=250),
            "medium": cls(),
            "large": cls(n_random=2048, n_boundary=256, refine_best=16, nm_restarts=3, nm_maxiter=1000),
        }
        if name not in presets:
            raise ValidationError(f"unknown budget {name!r}; choose from {sorted(presets)}")
        return presets[name]


def _budget(b) -> Budget:
    if b is None:
        return Budget()
    if isinstance(b, str):
        return Budget.preset(b)
    return b


# Quadratic forms -------------------------------------------------------------


def tangent_basis(rho) -> np.ndarray:
    """Orthonormal basis of traceless Hermitian matrices supported on supp rho."""
    rho = as_state(rho)
    V = rho.support_vectors
    r = V.shape[1]
    local = hermitian_basis(r)[1:]
    return np.einsum("ai,kij,bj->kab", V, local, V.conj())


def _form(kappa: KappaSpec, base: np.ndarray, mats: np.ndarray) -> np.ndarray:
    """Q[i, j] = <mats_i, mats_j>_{kappa, base} (real part)."""
    lam, V = np.linalg.eigh(base)
    W = kappa_weights(kappa, lam)
    Mt = np.einsum("ai,kab,bj->kij", V.conj(), mats, V)
    Q = np.einsum("ikl,jkl,kl->ij", Mt.conj(), Mt, W).real
    return (Q + Q.T) / 2


def riem_quadratic_form(kappa: KappaSpec, base, basis: np.ndarray | None = None) -> np.ndarray:
    """Gram matrix of the semi-norm at ``base`` on a tangent basis.

    For a full-rank base the default basis is the traceless part of
    :func:`qdiv.opcore.hermitian_basis`; otherwise it is
    :func:`tangent_basis`, which stays inside the support.
    """
    base = as_state(base)
    full = base.support_rank == base.dim
    if not full and not kappa.bounded:
        raise SingularBase("unbounded kernel at a rank-deficient base")
    if basis is None:
        basis = hermitian_basis(base.dim)[1:] if full else tangent_basis(base)
    return _form(kappa, base.matrix, np.asarray(basis))


def _extreme_ratio(A: np.ndarray, B: np.ndarray, mode: str, rtol: float = 1e-10):
    """Extreme of x'Ax / x'Bx over x with x'Bx > 0 or x'Ax > 0.

    Directions killed by both forms are excluded. For the infimum, directions
    in the null space of B may be added freely, so the numerator is reduced
    to its Schur complement on the range of B. Returns (value, x).
    """
    n = A.shape[0]
    if n == 0:
        raise DegenerateSubspace("empty coordinate space")
    scale = max(np.max(np.abs(A)), np.max(np.abs(B)), 1e-300)
    bvals, U = np.linalg.eigh(B)
    rng = bvals > rtol * scale
    Ur, Un = U[:, rng], U[:, ~rng]
    if Ur.shape[1] == 0:
        if np.max(np.abs(A)) <= rtol * scale:
            raise DegenerateSubspace("both forms vanish on the whole space")
        # denominator vanishes identically
        x = np.linalg.eigh(A)[1][:, -1]
        return (math.inf, x) if mode == "sup" else (math.inf, x)
    Arr = Ur.T @ A @ Ur
    Brr = np.diag(bvals[rng])
    if Un.shape[1]:
        Ann = Un.T @ A @ Un
        Anr = Un.T @ A @ Ur
        ann_max = np.max(np.abs(np.linalg.eigvalsh(Ann))) if Ann.size else 0.0
        if mode == "sup":
            if ann_max > rtol * scale:
                x = Un @ np.linalg.eigh(Ann)[1][:, -1]
                return math.inf, x
        else:
            pinv = np.linalg.pinv(Ann, rcond=rtol, hermitian=True)
            Arr = Arr - Anr.T @ pinv @ Anr
    Arr = (Arr + Arr.T) / 2
    vals, vecs = scipy.linalg.eigh(Arr, Brr)
    idx = -1 if mode == "sup" else 0
    xr = vecs[:, idx]
    x = Ur @ xr
    if mode != "sup" and Un.shape[1]:
        Ann = Un.T @ A @ Un
        Anr = Un.T @ A @ Ur
        x = x - Un @ (np.linalg.pinv(Ann, rcond=rtol, hermitian=True) @ (Anr @ xr))
    return float(max(vals[idx], 0.0)), x


def _traceless_block(ch: Channel) -> np.ndarray:
    return ch.transfer[1:, 1:]


def riem_coeff_fixed_ref(
    kappa: KappaSpec,
    ch: Channel,
    ref,
    mode: str = "sup",
    subspace: np.ndarray | None = None,
) -> CoefficientEstimate:
    """Extreme ratio ||N(Y)||^2 / ||Y||^2 at a fixed full-rank reference.

    ``subspace`` holds column vectors in traceless coordinates (for example
    the image of a power of the transfer matrix); the extreme is taken over
    their span.
    """
    ref = as_state(ref)
    if ch.d_in != ch.d_out or ch.d_in != ref.dim:
        raise DimMismatch("channel and reference dimensions differ")
    if np.linalg.norm(apply(ch, ref.matrix) - ref.matrix) > 1e-9:
        raise NotAFixedPoint("reference state is not fixed by the channel")
    if ref.support_rank < ref.dim:
        raise SingularBase("reference state must be full rank")
    basis = ch.basis_in[1:]
    Q = _form(kappa, ref.matrix, basis)
    T = _traceless_block(ch)
    A = T.T @ Q @ T
    B = Q
    S = None
    if subspace is not None:
        S = scipy.linalg.orth(np.asarray(subspace, dtype=float))
        if S.shape[1] == 0:
            raise DegenerateSubspace("subspace is trivial")
        A = S.T @ A @ S
        B = S.T @ B @ S
    value, x = _extreme_ratio(A, B, mode)
    coords = S @ x if S is not None else x
    X = np.einsum("k,kab->ab", coords, basis)
    return CoefficientEstimate(value, EXACT, {"ref": ref.matrix, "tangent": X}, {"mode": mode})


def transfer_image(ch: Channel, power: int) -> np.ndarray:
    """Orthonormal columns spanning the image of the traceless transfer block^power."""
    T = _traceless_block(ch)
    P = np.linalg.matrix_power(T, power) if power > 0 else np.eye(T.shape[0])
    return scipy.linalg.orth(P, rcond=1e-10)


def schatten2_rel_expansion(N: Channel, M: Channel) -> CoefficientEstimate:
    """inf ||N(rho) - N(gamma)||_2 / ||M(rho) - M(gamma)||_2 over state pairs.

    Differences of states span the traceless space, so this is the square
    root of the smallest generalized eigenvalue of the Gram forms.
    """
    if N.d_in != M.d_in:
        raise DimMismatch("channels need equal input dimension")
    TN = N.transfer[:, 1:]
    TM = M.transfer[:, 1:]
    value, x = _extreme_ratio(TN.T @ TN, TM.T @ TM, "inf")
    X = np.einsum("k,kab->ab", x, N.basis_in[1:])
    return CoefficientEstimate(math.sqrt(value), EXACT, {"tangent": X}, {})


# Riemannian relative expansion -------------------------------------------------


class _RiemProblem:
    """Inner problem: exact extreme over tangents at a full-rank base state."""

    def __init__(self, kappa: KappaSpec, N: Channel, M: Channel, mode: str):
        if N.d_in != M.d_in:
            raise DimMismatch("channels need equal input dimension")
        self.kappa, self.N, self.M, self.mode = kappa, N, M, mode
        self.d = N.d_in
        self.basis = N.basis_in[1:]
        self.imgN = N.images[1:]
        self.imgM = M.images[1:]
        self.skipped = 0

    def evaluate(self, rho: np.ndarray):
        """(value, tangent, cond) or None when the probe is skipped."""
        outs = []
        for ch in (self.N, self.M):
            out = apply(ch, rho)
            out = (out + out.conj().T) / 2
            lam = np.linalg.eigvalsh(out)
            cond = lam[-1] / max(lam[0], 1e-300)
            if cond > COND_LIMIT:
                self.skipped += 1
                return None
            outs.append(out)
        A = _form(self.kappa, outs[0], self.imgN)
        B = _form(self.kappa, outs[1], self.imgM)
        try:
            value, x = _extreme_ratio(A, B, self.mode)
        except DegenerateSubspace:
            self.skipped += 1
            return None
        lam_in = np.linalg.eigvalsh(rho)
        cond_in = lam_in[-1] / max(lam_in[0], 1e-300)
        return value, np.einsum("k,kab->ab", x, self.basis), cond_in


def _rho_from_params(theta: np.ndarray, d: int) -> np.ndarray:
    A = (theta[: d * d] + 1j * theta[d * d:]).reshape(d, d)
    R = A @ A.conj().T
    return R / np.trace(R).real


def _params_from_rho(rho: np.ndarray) -> np.ndarray:
    lam, V = np.linalg.eigh(rho)
    A = (V * np.sqrt(np.clip(lam, 0, None))) @ V.conj().T
    return np.concatenate([A.real.ravel(), A.imag.ravel()])


def _boundary_states(d: int, budget: Budget, rng) -> list:
    per = max(1, budget.n_boundary // len(budget.deltas))
    out = []
    for _ in range(per):
        psi = random_pure(d, rng.integers(2**63))
        P = np.outer(psi, psi.conj())
        for delta in budget.deltas:
            out.append((1 - delta) * P + delta * np.eye(d) / d)
    return out


def _base_states(d: int, budget: Budget, seed, extra=()) -> list:
    """Maximally mixed state, extras, random states, boundary families.

    Random and boundary probes come from separate streams, so a larger
    budget only adds probes to those of a smaller one.
    """
    rng_rand = np.random.default_rng([seed, 0])
    rng_bdry = np.random.default_rng([seed, 1])
    states = [np.eye(d, dtype=complex) / d]
    states += [np.asarray(as_state(e).matrix) for e in extra]
    states += [random_state(d, d, rng_rand.integers(2**63)).matrix for _ in range(budget.n_random)]
    states += _boundary_states(d, budget, rng_bdry)
    return states


class _Tracker:
    """Running best value with smallest-condition-number tie-breaking."""

    def __init__(self, mode: str):
        self.sign = 1.0 if mode == "inf" else -1.0
        self.best = None
        self.evals = 0
        self.history: list = []

    def offer(self, value: float, cond: float, payload) -> None:
        self.evals += 1
        key = self.sign * value
        if self.best is None:
            self.best = (key, cond, value, payload)
            return
        bkey, bcond = self.best[0], self.best[1]
        if key < bkey - 1e-12 * max(1.0, abs(bkey)) or (abs(key - bkey) <= 1e-12 * max(1.0, abs(bkey)) and cond < bcond):
            self.best = (key, cond, value, payload)


def riem_rel_expansion(
    kappa: KappaSpec,
    N: Channel,
    M: Channel,
    mode: str = "inf",
    budget=None,
    seed: int = 0,
    extra_bases: Sequence = (),
) -> CoefficientEstimate:
    """Estimate inf (or sup) over states and tangents of ||N X||^2/||M X||^2.

    Base states are sampled (Hilbert-Schmidt random, the maximally mixed
    state, and near-pure boundary families), the best ones are refined by
    Nelder-Mead, and at every base the optimum over tangents is exact.
    """
    budget = _budget(budget)
    prob = _RiemProblem(kappa, N, M, mode)
    track = _Tracker(mode)
    d = prob.d
    probes = []
    for rho in _base_states(d, budget, seed, extra_bases):
        res = prob.evaluate(rho)
        if res is None:
            continue
        value, X, cond = res
        track.offer(value, cond, (rho, X))
        probes.append((track.sign * value, cond, rho))
    n_sampled = track.evals
    probes.sort(key=lambda p: (p[0], p[1]))
    converged = 0
    for _, _, rho0 in probes[: budget.refine_best]:
        theta = _params_from_rho(rho0)

        def objective(th):
            rho = _rho_from_params(th, d)
            res = prob.evaluate(rho)
            if res is None:
                return math.inf
            value, X, cond = res
            track.offer(value, cond, (rho, X))
            return track.sign * value

        for _ in range(budget.nm_restarts):
            out = scipy.optimize.minimize(
                objective,
                theta,
                method="Nelder-Mead",
                options={"maxiter": budget.nm_maxiter, "xatol": 1e-10, "fatol": 1e-13, "adaptive": True},
            )
            theta = out.x
            converged += int(out.success)
    if track.best is None:
        raise SingularBase("every probe was skipped")
    _, cond, value, (rho, X) = track.best
    direction = UPPER_OF_INF if mode == "inf" else LOWER_OF_SUP
    return CoefficientEstimate(
        value,
        direction,
        {"rho": rho, "tangent": X},
        {
            "samples": n_sampled,
            "evaluations": track.evals,
            "skipped": prob.skipped,
            "refinements": budget.refine_best * budget.nm_restarts,
            "converged": converged,
            "witness_cond": cond,
        },
    )


def riem_contraction(kappa: KappaSpec, ch: Channel, **kw) -> CoefficientEstimate:
    """sup over states and tangents of ||N X||^2_{N rho} / ||X||^2_rho."""
    return riem_rel_expansion(kappa, ch, identity(ch.d_in), mode="sup", **kw)


def riem_ratio(kappa: KappaSpec, N: Channel, M: Channel, rho, X) -> float:
    """||N X||^2_{kappa, N rho} / ||M X||^2_{kappa, M rho} for one tangent."""
    from .divergences import chi2_seminorm

    rho = as_state(rho)
    X = np.asarray(X)
    num = chi2_seminorm(kappa, apply(N, rho.matrix), apply(N, X)).value
    den = chi2_seminorm(kappa, apply(M, rho.matrix), apply(M, X)).value
    return num / den if den > 0 else math.inf


# Divergence relative expansion ------------------------------------------------


def _div_fast(f: FSpec, R: np.ndarray, G: np.ndarray) -> float:
    a, U = np.linalg.eigh((R + R.conj().T) / 2)
    b, V = np.linalg.eigh((G + G.conj().T) / 2)
    ka, kb = a > ZERO_TOL, b > ZERO_TOL
    if ka.sum() != kb.sum():
        return math.nan
    a, U, b, V = a[ka], U[:, ka], b[kb], V[:, kb]
    overlap = np.abs(U.conj().T @ V) ** 2
    terms = b[None, :] * np.asarray(funcs.eval_f_centered(f, a[:, None] / b[None, :])) * overlap
    return float(np.sum(terms))


class _DivProblem:
    def __init__(self, f: FSpec, N: Channel, M: Channel, mode: str):
        if N.d_in != M.d_in:
            raise DimMismatch("channels need equal input dimension")
        self.f, self.N, self.M, self.mode = f, N, M, mode
        self.skipped = 0

    def evaluate(self, R: np.ndarray, G: np.ndarray):
        num = _div_fast(self.f, apply(self.N, R), apply(self.N, G))
        den = _div_fast(self.f, apply(self.M, R), apply(self.M, G))
        if not (den > 1e-14) or not np.isfinite(num):
            self.skipped += 1
            return None
        lam = np.linalg.eigvalsh(R)
        return num / den, lam[-1] / max(lam[0], 1e-300)


def div_rel_expansion(
    f: FSpec,
    N: Channel,
    M: Channel,
    mode: str = "inf",
    budget=None,
    seed: int = 0,
    extra_bases: Sequence = (),
) -> CoefficientEstimate:
    """Estimate inf (or sup) over equal-support pairs of D_f(N.||N.)/D_f(M.||M.).

    Probes: random full-rank pairs; collinear pairs rho + eps X along the
    optimal Riemannian tangent for the induced kernel (these approach the
    local limit); near-pure boundary bases; then Nelder-Mead on the pair.
    """
    budget = _budget(budget)
    prob = _DivProblem(f, N, M, mode)
    riem = _RiemProblem(funcs.induced_kappa(f), N, M, mode)
    track = _Tracker(mode)
    d = N.d_in
    rng = np.random.default_rng(seed + 7919)
    probes = []

    def offer(R, G):
        res = prob.evaluate(R, G)
        if res is None:
            return
        value, cond = res
        track.offer(value, cond, (R, G))
        probes.append((track.sign * value, cond, R, G))

    for _ in range(budget.n_random):
        R = random_state(d, d, rng.integers(2**63)).matrix
        G = random_state(d, d, rng.integers(2**63)).matrix
        offer(R, G)
    # Near-pure states along the extras' top eigenvector: the local limit is
    # often approached only at the boundary, in the direction of a seed.
    extra = []
    for e in extra_bases:
        E = np.asarray(as_state(e).matrix)
        top = np.linalg.eigh(E)[1][:, -1]
        P = np.outer(top, top.conj())
        extra.append(E)
        extra += [(1 - delta) * P + delta * np.eye(d) / d for delta in budget.deltas]
    bases = _base_states(d, replace(budget, n_random=max(budget.n_random // 4, 1)), seed, extra)
    for R in bases:
        res = riem.evaluate(R)
        if res is None:
            continue
        X = res[1]
        lam_min = np.linalg.eigvalsh(R)[0]
        xn = np.max(np.abs(np.linalg.eigvalsh(X)))
        if xn == 0:
            continue
        for eps in budget.eps_grid:
            step = eps * lam_min / xn
            if step * xn < 1e-9:
                continue
            offer(R, R + step * X)
    n_sampled = track.evals
    probes.sort(key=lambda p: (p[0], p[1]))
    converged = 0
    for _, _, R0, G0 in probes[: budget.refine_best]:
        theta = np.concatenate([_params_from_rho(R0), _params_from_rho(G0)])
        half = theta.size // 2

        def objective(th):
            R = _rho_from_params(th[:half], d)
            G = _rho_from_params(th[half:], d)
            res = prob.evaluate(R, G)
            if res is None:
                return math.inf
            value, cond = res
            track.offer(value, cond, (R, G))
            return track.sign * value

        for _ in range(budget.nm_restarts):
            out = scipy.optimize.minimize(
                objective,
                theta,
                method="Nelder-Mead",
                options={"maxiter": budget.nm_maxiter, "xatol": 1e-10, "fatol": 1e-13, "adaptive": True},
            )
            theta = out.x
            converged += int(out.success)
    if track.best is None:
        raise ValidationError("no admissible pair was found")
    _, cond, value, (R, G) = track.best
    direction = UPPER_OF_INF if mode == "inf" else LOWER_OF_SUP
    return CoefficientEstimate(
        value,
        direction,
        {"rho": R, "gamma": G},
        {
            "samples": n_sampled,
            "evaluations": track.evals,
            "skipped": prob.skipped + riem.skipped,
            "refinements": budget.refine_best * budget.nm_restarts,
            "converged": converged,
            "witness_cond": cond,
        },
    )


def div_contraction(f: FSpec, ch: Channel, **kw) -> CoefficientEstimate:
    return div_rel_expansion(f, ch, identity(ch.d_in), mode="sup", **kw)


def div_ratio(f: FSpec, N: Channel, M: Channel, rho, gamma) -> float:
    from .divergences import standard_f_div

    rho, gamma = as_state(rho).matrix, as_state(gamma).matrix
    num = standard_f_div(f, apply(N, rho), apply(N, gamma)).value
    den = standard_f_div(f, apply(M, rho), apply(M, gamma)).value
    return num / den if den > 0 else math.inf


# Closed-form bounds ---------------------------------------------------------------


class EquivalenceBounds(NamedTuple):
    """Coefficient-level constants: alpha * eta_g <= eta_f <= beta * eta_g.

    ``pointwise`` carries the underlying pointwise ratio bounds
    (lo <= D_f / D_g <= hi, or the kernel analogue) where they exist.
    """

    alpha: float
    beta: float
    pointwise: tuple | None = None


def _from_pointwise(lo: float, hi: float) -> EquivalenceBounds:
    return EquivalenceBounds(lo / hi, hi / lo, (lo, hi))


def equivalence_bounds(kind: str, **args) -> EquivalenceBounds:
    """Equivalence constants between two coefficient families.

    kinds and arguments:
      inheritance(a, b, gamma, delta)
      bounded_divergences(f, g)
      bounded_metrics(kappa_f, kappa_g)
      strictly_positive_riem(kappa, lam)
      strictly_positive_div(f, lam)
      schatten2_sandwich(lambda_min_M, lambda_max_N, lambda_max_M, lambda_min_N)
    """
    if kind == "inheritance":
        a, b, g, dl = (float(args[k]) for k in ("a", "b", "gamma", "delta"))
        if min(a, b, g, dl) <= 0:
            raise ValidationError("inheritance constants must be positive")
        return EquivalenceBounds(a * a * g / (b * b), min(b * b * dl / (a * a), 1.0))
    if kind == "bounded_metrics":
        kf, kg = args["kappa_f"], args["kappa_g"]
        zf, zg = funcs.kappa_zero_limit(kf), funcs.kappa_zero_limit(kg)
        if math.isinf(zf) or math.isinf(zg):
            raise UnboundedKernel("both kernels need a finite limit at 0")
        return _from_pointwise(2 / zg, zf / 2)
    if kind == "bounded_divergences":
        f, g = args["f"], args["g"]
        lf, lg = funcs.f_limits(f), funcs.f_limits(g)
        ends_f = (lf.f0 + funcs.f_prime_one(f), lf.fprime_inf - funcs.f_prime_one(f))
        ends_g = (lg.f0 + funcs.f_prime_one(g), lg.fprime_inf - funcs.f_prime_one(g))
        if not all(math.isfinite(v) for v in ends_f + ends_g):
            raise UnboundedKernel("both functions need finite f(0+) and f'(inf)")
        x = np.logspace(-8, 8, 4001)
        ratio = np.asarray(funcs.nu_f(f, x)) / np.asarray(funcs.nu_f(g, x))
        cands = list(ratio) + [ends_f[0] / ends_g[0], ends_f[1] / ends_g[1], lf.fpp1 / lg.fpp1]
        return _from_pointwise(float(min(cands)), float(max(cands)))
    if kind == "strictly_positive_riem":
        kappa, lam = args["kappa"], float(args["lam"])
        if not 0 < lam <= 1:
            raise ValidationError("lam must lie in (0, 1]")
        k = float(funcs.eval_kappa(kappa, 1 / lam))
        return EquivalenceBounds(k, 1 / k, (k, 1.0))
    if kind == "strictly_positive_div":
        f, lam = args["f"], float(args["lam"])
        if not 0 < lam < 1:
            raise ValidationError("lam must lie in (0, 1)")
        r = float(funcs.nu_f(f, 1 / lam)) / float(funcs.nu_f(f, lam))
        lo, hi = min(r, 1 / r), max(r, 1 / r)
        return EquivalenceBounds(lo, hi)
    if kind == "schatten2_sandwich":
        a = float(args["lambda_min_M"]) / float(args["lambda_max_N"])
        lmn = float(args["lambda_min_N"])
        b = math.inf if lmn == 0 else float(args["lambda_max_M"]) / lmn
        return EquivalenceBounds(a, b)
    raise ValidationError(f"unknown equivalence kind {kind!r}")


def schatten2_sandwich(N: Channel, M: Channel) -> EquivalenceBounds:
    """Sandwich constants from the channels' output eigenvalue extremes."""
    eN, eM = lambda_extremes(N), lambda_extremes(M)
    return equivalence_bounds(
        "schatten2_sandwich",
        lambda_min_M=eM.lambda_min,
        lambda_max_N=eN.lambda_max,
        lambda_max_M=eM.lambda_max,
        lambda_min_N=eN.lambda_min,
    )


class FamilyBound(NamedTuple):
    bound: float
    hypotheses_ok: bool
    details: dict


def _psd(A: np.ndarray, tol: float = 1e-10) -> bool:
    return bool(np.linalg.eigvalsh((A + A.conj().T) / 2)[0] >= -tol)


def _in_X(G: np.ndarray, tol: float = 1e-10) -> bool:
    """PSD, unit diagonal, entry moduli at most 1, and not the identity."""
    G = np.asarray(G)
    d = G.shape[0]
    return bool(
        _psd(G, tol)
        and np.all(np.abs(G) <= 1 + tol)
        and np.all(np.abs(np.diag(G) - 1) <= tol)
        and np.max(np.abs(G - np.eye(d))) > tol
    )


def family_lower_bounds(kind: str, strict: bool = False, **args) -> FamilyBound:
    """Analytic lower bounds on kappa-relative expansion for channel families.

    kinds: dephasing(p1, p2), amplitude_damping(g1, g2),
    generalized_dephasing(Gamma, Gamma_prime, eps). The bound is always
    returned; ``hypotheses_ok`` flags whether the preconditions hold, and
    ``strict`` turns a failed check into :class:`HypothesisFailed`.
    """
    fb = _family_bound(kind, args)
    if strict and not fb.hypotheses_ok:
        raise HypothesisFailed(f"{kind}: hypotheses do not hold ({fb.details})")
    return fb


def _family_bound(kind: str, args: dict) -> FamilyBound:
    if kind == "dephasing":
        p1, p2 = float(args["p1"]), float(args["p2"])
        ok = 0 <= p2 < p1 < 1
        bound = ((1 - p1) / (1 - p2)) ** 2 * min(1.0, p2 * (2 - p2) / (p1 * (2 - p1)))
        return FamilyBound(bound, ok, {"kappa": "max"})
    if kind == "amplitude_damping":
        g1, g2 = float(args["g1"]), float(args["g2"])
        ok = 0 <= g2 < g1 < 1
        bound = (1 - g1) / (1 - g2) * min(1.0, g2 / g1)
        return FamilyBound(bound, ok, {"kappa": "max"})
    if kind == "generalized_dephasing":
        G = np.asarray(args["Gamma"], dtype=complex)
        Gp = np.asarray(args["Gamma_prime"], dtype=complex)
        eps = float(args["eps"])
        with np.errstate(divide="ignore", invalid="ignore"):
            Ghat = np.where(np.abs(Gp) > 0, (Gp - (1 - eps) * G) / (eps * Gp), 0.0)
        checks = {
            "eps_range": 0 < eps < 0.5,
            "Gamma_in_X": _in_X(G),
            "Gamma_prime_in_X": _in_X(Gp),
            "lower_order": _psd(Gp - (1 - eps) * G),
            "upper_order": _psd((1 + eps) * G - Gp),
            "Gamma_hat_in_X": _in_X(Ghat),
        }
        bound = (1 - 2 * eps) * (1 - eps) / ((1 + 2 * eps) * (1 + eps))
        return FamilyBound(bound, all(checks.values()), {"checks": checks, "Gamma_hat": Ghat})
    raise ValidationError(f"unknown family {kind!r}")


def min_full_rank_power(ch: Channel, tol: float = 1e-6, max_power: int | None = None) -> int:
    """Smallest m >= 1 with lambda_min(N^m) > tol."""
    d = ch.d_in
    max_power = 2 * (d * d - d + 1) if max_power is None else max_power
    for m in range(1, max_power + 1):
        if lambda_extremes(iterate(ch, m), restarts=8).lambda_min > tol:
            return m
    raise ValidationError("no power of the channel has full-rank outputs")
