"""Quantum channels: named families, representations, and spectral analysis.

A :class:`Channel` stores Kraus operators, the Choi matrix
``J = sum_ij |i><j| (x) N(|i><j|)`` (input factor first), and the real
transfer matrix ``T[i, j] = Tr(B_i N(B_j))`` on the orthonormal Hermitian
bases of :func:`qdiv.opcore.hermitian_basis`. Row/column 0 is the identity
direction, so the traceless block is ``T[1:, 1:]``. For qubits
``T[1:, 1:]`` is the Bloch matrix and ``T[1:, 0]`` the Bloch shift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, NamedTuple

import numpy as np

from .errors import BadParameter, DimMismatch, NoFixedPoint, NotCPTP, ValidationError
from .opcore import (
    PAULIS,
    ZERO_TOL,
    DensityOperator,
    hermitian,
    hermitian_basis,
    random_pure,
    validate_density,
)

CHANNEL_KINDS = (
    "identity",
    "dephasing",
    "amplitude_damping",
    "cq_phi",
    "pauli",
    "generalized_dephasing",
    "erasure",
    "depolarizing",
    "replacer",
    "unitary",
    "kraus",
    "bloch",
)


@dataclass(frozen=True)
class ChannelSpec:
    kind: str
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise ValidationError(f"unknown channel kind {self.kind!r}")

    @classmethod
    def from_dict(cls, obj) -> "ChannelSpec":
        from .opcore import matrix_from_json

        if not isinstance(obj, dict) or "kind" not in obj:
            raise ValidationError("channel spec must be an object with a 'kind' field")
        kind = obj["kind"]
        allowed = {
            "identity": {"d"},
            "dephasing": {"p"},
            "amplitude_damping": {"g"},
            "cq_phi": {"alpha", "tau"},
            "pauli": {"px", "py", "pz"},
            "generalized_dephasing": {"Gamma"},
            "erasure": {"nu", "d"},
            "depolarizing": {"p", "d"},
            "replacer": {"sigma", "d_in"},
            "unitary": {"U"},
            "kraus": {"kraus"},
            "bloch": {"T", "t"},
        }
        if kind not in allowed:
            raise ValidationError(f"unknown channel kind {kind!r}")
        params = {k: v for k, v in obj.items() if k != "kind"}
        extra = set(params) - allowed[kind]
        if extra:
            raise ValidationError(f"unknown field(s) for {kind}: {sorted(extra)}")
        for key in ("Gamma", "sigma", "U"):
            if key in params and isinstance(params[key], dict):
                params[key] = matrix_from_json(params[key])
        if "kraus" in params:
            params["kraus"] = [matrix_from_json(k) if isinstance(k, dict) else k for k in params["kraus"]]
        return cls(kind, params)


@dataclass(frozen=True, eq=False)
class Channel:
    d_in: int
    d_out: int
    kraus: np.ndarray = field(repr=False)
    name: str = "channel"

    @cached_property
    def choi(self) -> np.ndarray:
        vs = np.array([K.T.reshape(-1) for K in self.kraus])
        return vs.T @ vs.conj()

    @cached_property
    def basis_in(self) -> np.ndarray:
        return hermitian_basis(self.d_in)

    @cached_property
    def basis_out(self) -> np.ndarray:
        return hermitian_basis(self.d_out)

    @cached_property
    def transfer(self) -> np.ndarray:
        outs = apply_stack(self, self.basis_in)
        return np.einsum("iab,jab->ij", self.basis_out.conj(), outs).real

    @cached_property
    def images(self) -> np.ndarray:
        """N(B_j) for the input basis, shape (d_in^2, d_out, d_out)."""
        return apply_stack(self, self.basis_in)

    @property
    def bloch(self):
        if self.d_in != 2 or self.d_out != 2:
            raise DimMismatch("Bloch form exists only for qubit channels")
        T = self.transfer
        return T[1:, 1:].copy(), T[1:, 0].copy()

    def __call__(self, A):
        return apply(self, A)


# Construction ---------------------------------------------------------------


def _check_tp(kraus: np.ndarray, tol: float = 1e-10):
    S = np.einsum("kai,kaj->ij", kraus.conj(), kraus)
    if np.max(np.abs(S - np.eye(S.shape[0]))) > tol:
        raise NotCPTP("Kraus operators are not trace preserving")


def kraus_from_choi(J: np.ndarray, d_in: int, d_out: int, tol: float = 1e-10) -> np.ndarray:
    J = (J + J.conj().T) / 2
    vals, vecs = np.linalg.eigh(J)
    if vals[0] < -tol * max(1.0, vals[-1]):
        raise NotCPTP(f"Choi matrix has negative eigenvalue {vals[0]:.3e}")
    keep = vals > tol * max(1.0, vals[-1])
    ks = [np.sqrt(v) * vecs[:, i].reshape(d_in, d_out).T for i, v in zip(np.where(keep)[0], vals[keep])]
    if not ks:
        raise NotCPTP("Choi matrix is zero")
    return np.array(ks)


def channel_from_kraus(kraus, name="kraus") -> Channel:
    K = np.array([np.asarray(k, dtype=complex) for k in kraus])
    if K.ndim != 3:
        raise ValidationError("Kraus operators must be a list of equal-shape matrices")
    _check_tp(K)
    return Channel(d_in=K.shape[2], d_out=K.shape[1], kraus=K, name=name)


def channel_from_transfer(T: np.ndarray, d_in: int, d_out: int, name="transfer") -> Channel:
    """Channel with the given transfer matrix; its Choi matrix gates acceptance."""
    T = np.asarray(T, dtype=float)
    if T.shape != (d_out**2, d_in**2):
        raise DimMismatch(f"transfer must be {(d_out**2, d_in**2)}, got {T.shape}")
    bi, bo = hermitian_basis(d_in), hermitian_basis(d_out)
    J = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for i in range(d_in):
        for j in range(d_in):
            E = np.zeros((d_in, d_in), dtype=complex)
            E[i, j] = 1
            # E = sum_k <B_k, E> B_k; extend the real transfer complex-linearly
            c = np.einsum("kab,ab->k", bi.conj(), E)
            out = np.einsum("k,kab->ab", T @ c, bo)
            J[i * d_out:(i + 1) * d_out, j * d_out:(j + 1) * d_out] = out
    kraus = kraus_from_choi(J, d_in, d_out)
    ch = Channel(d_in, d_out, kraus, name)
    _check_tp(kraus, tol=1e-9)
    return ch


def bloch_channel(T, t, name="bloch") -> Channel:
    T = np.asarray(T, dtype=float)
    t = np.asarray(t, dtype=float)
    if T.shape != (3, 3) or t.shape != (3,):
        raise BadParameter("bloch needs a 3x3 T and a 3-vector t")
    full = np.zeros((4, 4))
    full[0, 0] = 1
    full[1:, 1:] = T
    full[1:, 0] = t
    return channel_from_transfer(full, 2, 2, name)


def _in_unit(x, name):
    if not 0 <= x <= 1:
        raise BadParameter(f"{name} must lie in [0, 1], got {x}")
    return float(x)


def build_channel(spec: ChannelSpec | Mapping) -> Channel:
    """Compile a declarative spec into a :class:`Channel`."""
    if not isinstance(spec, ChannelSpec):
        spec = ChannelSpec.from_dict(dict(spec))
    k, P = spec.kind, dict(spec.params)
    try:
        if k == "identity":
            return identity(int(P.get("d", 2)))
        if k == "dephasing":
            p = _in_unit(P["p"], "p")
            K = [np.sqrt(1 - p / 2) * np.eye(2), np.sqrt(p / 2) * PAULIS[2]]
            return channel_from_kraus(K, f"dephasing({p:g})")
        if k == "amplitude_damping":
            g = _in_unit(P["g"], "g")
            K0 = np.array([[1, 0], [0, np.sqrt(1 - g)]])
            K1 = np.array([[0, np.sqrt(g)], [0, 0]])
            return channel_from_kraus([K0, K1], f"amplitude_damping({g:g})")
        if k == "cq_phi":
            a, tau = float(P["alpha"]), float(P["tau"])
            if a * a + tau * tau > 1 + 1e-12:
                raise BadParameter("cq_phi requires alpha^2 + tau^2 <= 1")
            return bloch_channel(np.diag([a, 0, 0]), [0, 0, tau], f"cq_phi({a:g},{tau:g})")
        if k == "pauli":
            px, py, pz = (float(P[n]) for n in ("px", "py", "pz"))
            if min(px, py, pz) < 0 or px + py + pz > 1 + 1e-12:
                raise BadParameter("pauli weights must be >= 0 with sum <= 1")
            p0 = max(1 - px - py - pz, 0.0)
            K = [np.sqrt(p0) * np.eye(2)] + [np.sqrt(q) * S for q, S in zip((px, py, pz), PAULIS)]
            return channel_from_kraus(K, f"pauli({px:g},{py:g},{pz:g})")
        if k == "generalized_dephasing":
            G = hermitian(P["Gamma"], tol=1e-10)
            if np.max(np.abs(np.diag(G) - 1)) > 1e-10:
                raise BadParameter("Gamma must have unit diagonal")
            vals, vecs = np.linalg.eigh(G)
            if vals[0] < -1e-10:
                raise BadParameter("Gamma must be positive semidefinite")
            K = [np.sqrt(max(v, 0)) * np.diag(vecs[:, i].conj()) for i, v in enumerate(vals) if v > 1e-14]
            return channel_from_kraus(K, "generalized_dephasing")
        if k == "erasure":
            nu = _in_unit(P["nu"], "nu")
            return erasure(nu, int(P.get("d", 2)))
        if k == "depolarizing":
            p = _in_unit(P["p"], "p")
            return depolarizing(p, int(P.get("d", 2)))
        if k == "replacer":
            sigma = validate_density(P["sigma"])
            return replacer(sigma, int(P.get("d_in", sigma.dim)))
        if k == "unitary":
            U = np.asarray(P["U"], dtype=complex)
            if np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) > 1e-10:
                raise BadParameter("U is not unitary")
            return channel_from_kraus([U], "unitary")
        if k == "kraus":
            return channel_from_kraus(P["kraus"])
        if k == "bloch":
            return bloch_channel(P["T"], P["t"])
    except KeyError as exc:
        raise BadParameter(f"missing parameter {exc.args[0]!r} for {k}") from None
    raise ValidationError(f"unknown channel kind {k!r}")  # pragma: no cover


def identity(d: int = 2) -> Channel:
    return Channel(d, d, np.eye(d, dtype=complex)[None], "identity")


def dephasing(p: float) -> Channel:
    return build_channel(ChannelSpec("dephasing", {"p": p}))


def amplitude_damping(g: float) -> Channel:
    return build_channel(ChannelSpec("amplitude_damping", {"g": g}))


def cq_phi(alpha: float, tau: float) -> Channel:
    return build_channel(ChannelSpec("cq_phi", {"alpha": alpha, "tau": tau}))


def pauli(px: float, py: float, pz: float) -> Channel:
    return build_channel(ChannelSpec("pauli", {"px": px, "py": py, "pz": pz}))


def generalized_dephasing(Gamma) -> Channel:
    return build_channel(ChannelSpec("generalized_dephasing", {"Gamma": Gamma}))


def unitary(U) -> Channel:
    return build_channel(ChannelSpec("unitary", {"U": U}))


def erasure(nu: float, d: int = 2) -> Channel:
    """rho -> (1-nu) rho (+) nu |e><e| with the flag |e> as basis vector d."""
    V = np.zeros((d + 1, d), dtype=complex)
    V[:d, :d] = np.eye(d)
    K = [np.sqrt(1 - nu) * V]
    for i in range(d):
        E = np.zeros((d + 1, d), dtype=complex)
        E[d, i] = np.sqrt(nu)
        K.append(E)
    return channel_from_kraus(K, f"erasure({nu:g})")


def depolarizing(p: float, d: int = 2) -> Channel:
    """rho -> (1-p) rho + p Tr(rho) I/d."""
    T = np.zeros((d * d, d * d))
    T[0, 0] = 1
    T[1:, 1:] = (1 - p) * np.eye(d * d - 1)
    return channel_from_transfer(T, d, d, f"depolarizing({p:g})")


def replacer(sigma, d_in: int | None = None) -> Channel:
    sigma = validate_density(sigma)
    d_in = sigma.dim if d_in is None else d_in
    sp = sigma.spectral
    K = []
    for lam, v in zip(sp.values, sp.vectors.T):
        if lam <= ZERO_TOL:
            continue
        for i in range(d_in):
            E = np.zeros((sigma.dim, d_in), dtype=complex)
            E[:, i] = np.sqrt(lam) * v
            K.append(E)
    return channel_from_kraus(K, "replacer")


# Application ---------------------------------------------------------------


def apply(ch: Channel, A) -> np.ndarray:
    """N(A) = sum_k K A K*."""
    A = np.asarray(A, dtype=complex)
    if A.shape != (ch.d_in, ch.d_in):
        raise DimMismatch(f"input must be {ch.d_in}x{ch.d_in}, got {A.shape}")
    K = ch.kraus
    out = np.einsum("kab,bc,kdc->ad", K, A, K.conj())
    return out


def apply_stack(ch: Channel, As: np.ndarray) -> np.ndarray:
    K = ch.kraus
    return np.einsum("kab,nbc,kdc->nad", K, As, K.conj())


def adjoint_apply(ch: Channel, A) -> np.ndarray:
    """Heisenberg-picture map sum_k K* A K."""
    A = np.asarray(A, dtype=complex)
    if A.shape != (ch.d_out, ch.d_out):
        raise DimMismatch(f"input must be {ch.d_out}x{ch.d_out}, got {A.shape}")
    K = ch.kraus
    return np.einsum("kba,bc,kcd->ad", K.conj(), A, K)


def apply_state(ch: Channel, rho) -> DensityOperator:
    return validate_density(apply(ch, np.asarray(rho)), tol=1e-8)


def compose(outer: Channel, inner: Channel) -> Channel:
    """outer o inner, with the Kraus set compressed through the Choi matrix."""
    if outer.d_in != inner.d_out:
        raise DimMismatch("outer input dimension must match inner output dimension")
    K = np.einsum("iab,jbc->ijac", outer.kraus, inner.kraus).reshape(-1, outer.d_out, inner.d_in)
    if K.shape[0] > inner.d_in * outer.d_out:
        tmp = Channel(inner.d_in, outer.d_out, K)
        K = kraus_from_choi(tmp.choi, inner.d_in, outer.d_out)
    return Channel(inner.d_in, outer.d_out, K, f"{outer.name}*{inner.name}")


def iterate(ch: Channel, n: int) -> Channel:
    """n-fold composition; n = 0 gives the identity."""
    if ch.d_in != ch.d_out:
        raise DimMismatch("iteration needs equal input and output dimensions")
    if n < 0:
        raise ValidationError("n must be nonnegative")
    result = identity(ch.d_in)
    power = ch
    while n:
        if n & 1:
            result = power if result.name == "identity" else compose(power, result)
        n >>= 1
        if n:
            power = compose(power, power)
    return result


# Fixed points and spectra --------------------------------------------------


def fixed_points(ch: Channel, tol: float = 1e-9) -> list:
    """States spanning the fixed-point set (from the eigenvalue-1 eigenspace)."""
    if ch.d_in != ch.d_out:
        raise DimMismatch("fixed points need equal input and output dimensions")
    T = ch.transfer
    _, sv, vh = np.linalg.svd(T - np.eye(T.shape[0]))
    space = vh[sv < max(tol, 1e-12)].T
    if space.shape[1] == 0:
        raise NoFixedPoint("transfer matrix has no eigenvalue 1")
    basis = ch.basis_in
    # The fixed space of a trace-preserving positive map is closed under
    # taking positive and negative parts of Hermitian elements.
    states = []
    for col in space.T:
        H = np.einsum("k,kab->ab", col, basis)
        vals_h, vecs_h = np.linalg.eigh(H)
        for part in (np.clip(vals_h, 0, None), np.clip(-vals_h, 0, None)):
            if part.sum() > 1e-9:
                S = (vecs_h * part) @ vecs_h.conj().T
                S = S / np.trace(S).real
                if np.max(np.abs(apply(ch, S) - S)) < 1e-7:
                    states.append(S)
    picked: list = []
    coords = []
    for S in states:
        c = np.einsum("kab,ab->k", basis.conj(), S).real
        trial = np.array(coords + [c])
        if np.linalg.matrix_rank(trial, tol=1e-7) == len(trial):
            coords.append(c)
            picked.append(validate_density(S, tol=1e-8))
        if len(picked) == space.shape[1]:
            break
    if not picked:
        raise NoFixedPoint("no fixed state could be extracted")
    return picked


def fixed_point(ch: Channel) -> DensityOperator:
    """The unique fixed state; raises if the fixed space is degenerate."""
    pts = fixed_points(ch)
    if len(pts) != 1:
        raise ValidationError(f"fixed-point space has dimension {len(pts)}")
    M = pts[0].matrix
    # polish by power iteration on the transfer matrix
    for _ in range(3):
        M = apply(ch, M)
        M = (M + M.conj().T) / 2
        M = M / np.trace(M).real
    return validate_density(M, tol=1e-8)


class PrimitivityCertificate(NamedTuple):
    primitive: bool
    fixed_point: DensityOperator | None
    fixed_space_dim: int
    fixed_min_eig: float
    second_modulus: float
    full_rank_power: int | None
    reason: str


def is_primitive(ch: Channel, tol: float = 1e-9) -> PrimitivityCertificate:
    """Unique full-rank fixed point and no other peripheral eigenvalue."""
    if ch.d_in != ch.d_out:
        return PrimitivityCertificate(False, None, 0, 0.0, 1.0, None, "dimensions differ")
    vals = np.linalg.eigvals(ch.transfer)
    order = np.argsort(-np.abs(vals))
    vals = vals[order]
    n_one = int(np.sum(np.abs(vals - 1) < 1e-8))
    second = float(np.abs(vals[1])) if vals.size > 1 else 0.0
    pts = fixed_points(ch)
    fp = pts[0] if len(pts) == 1 else None
    min_eig = fp.min_eig if fp is not None else 0.0
    if len(pts) != 1 or n_one != 1:
        return PrimitivityCertificate(False, fp, len(pts), min_eig, second, None, "fixed point not unique")
    if min_eig <= tol:
        return PrimitivityCertificate(False, fp, 1, min_eig, second, None, "fixed point not full rank")
    if second > 1 - tol:
        return PrimitivityCertificate(False, fp, 1, min_eig, second, None, "peripheral eigenvalue besides 1")
    d = ch.d_in
    m_found = None
    for m in range(1, 2 * (d * d - d + 1) + 1):
        if lambda_extremes(iterate(ch, m), restarts=8).lambda_min > tol:
            m_found = m
            break
    return PrimitivityCertificate(True, fp, 1, min_eig, second, m_found, "ok")


class LambdaExtremes(NamedTuple):
    lambda_min: float
    lambda_max: float
    witness_min: np.ndarray
    witness_max: np.ndarray
    direction_min: str
    direction_max: str


def _alternate(ch: Channel, psi: np.ndarray, lowest: bool, iters: int = 200):
    """Coordinate ascent/descent of <phi|N(psi psi*)|phi> over unit psi, phi."""
    pick = 0 if lowest else -1
    prev = None
    for _ in range(iters):
        out = apply(ch, np.outer(psi, psi.conj()))
        w, V = np.linalg.eigh((out + out.conj().T) / 2)
        phi = V[:, pick]
        back = adjoint_apply(ch, np.outer(phi, phi.conj()))
        w2, V2 = np.linalg.eigh((back + back.conj().T) / 2)
        psi = V2[:, pick]
        val = w2[pick]
        if prev is not None and abs(val - prev) < 1e-15:
            break
        prev = val
    out = apply(ch, np.outer(psi, psi.conj()))
    val = np.linalg.eigvalsh((out + out.conj().T) / 2)[pick]
    return float(val), psi


def _bloch_grid(step_deg: float = 2.0):
    th = np.deg2rad(np.arange(0, 180 + step_deg / 2, step_deg))
    ph = np.deg2rad(np.arange(0, 360, step_deg))
    TH, PH = np.meshgrid(th, ph)
    return np.stack([np.sin(TH) * np.cos(PH), np.sin(TH) * np.sin(PH), np.cos(TH)], axis=-1).reshape(-1, 3)


def _pure_from_bloch(n) -> np.ndarray:
    theta = np.arccos(np.clip(n[2], -1, 1))
    phi = np.arctan2(n[1], n[0])
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def lambda_extremes(ch: Channel, restarts: int = 32, seed: int = 0) -> LambdaExtremes:
    """Smallest and largest output eigenvalue over input states.

    The output's smallest eigenvalue is concave in the input and its largest
    convex, so both extremes are attained on pure inputs; the search runs
    over pure states by alternating eigenvector updates from many starts
    (plus a 2-degree Bloch-sphere grid for qubit inputs). The minimum found
    is an upper bound on the true minimum, the maximum a lower bound.
    """
    rng = np.random.default_rng(seed)
    starts = [random_pure(ch.d_in, rng.integers(2**63)) for _ in range(restarts)]
    starts += [np.eye(ch.d_in)[i].astype(complex) for i in range(ch.d_in)]
    if ch.d_in == 2 and ch.d_out == 2:
        T, t = ch.bloch
        grid = _bloch_grid()
        r = np.linalg.norm(grid @ T.T + t, axis=1)
        starts.append(_pure_from_bloch(grid[np.argmax(r)]))
        starts.append(_pure_from_bloch(grid[np.argmin(r)]))
    best_min, best_max = (np.inf, None), (-np.inf, None)
    for psi in starts:
        v, p = _alternate(ch, psi, lowest=True)
        if v < best_min[0]:
            best_min = (v, p)
        v, p = _alternate(ch, psi, lowest=False)
        if v > best_max[0]:
            best_max = (v, p)
    lo = max(best_min[0], 0.0)
    return LambdaExtremes(lo, best_max[0], best_min[1], best_max[1], "upper_bound_of_inf", "lower_bound_of_sup")


def purity_preserving(ch: Channel, samples: int = 64, seed: int = 0, tol: float = 1e-9) -> bool:
    """True when every sampled pure input has a pure output."""
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        psi = random_pure(ch.d_in, rng.integers(2**63))
        out = apply(ch, np.outer(psi, psi.conj()))
        if abs(np.trace(out @ out).real - 1) > tol:
            return False
    return True
