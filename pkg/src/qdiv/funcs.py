"""Operator convex functions f and monotone kernels kappa.

An :class:`FSpec` describes a convex f with f(1) = 0 and f''(1) > 0; a
:class:`KappaSpec` describes an operator monotone decreasing kernel with
kappa(1) = 1 and x*kappa(x) = kappa(1/x). Both are small immutable records
with vectorized evaluators.

Besides pointwise values, every named f carries its Stieltjes-type
representation

    f(x) = f'(1)(x - 1) + c (x - 1)^2 + sum_j w_j (x - 1)^2 / (x + s_j)
           + integral_0^inf (x - 1)^2 / (x + s) mu(s) ds,

returned by :func:`f_representation`, and every named kernel its mixing
measure over the extreme kernels kappa_s (:func:`kappa_measure`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, UnknownMeasure, ValidationError

INF = math.inf
_SERIES_RADIUS = 1e-6

F_KINDS = ("xlogx", "neglog", "square", "square_transpose", "fs", "conical", "custom")
KAPPA_KINDS = ("max", "bkm", "min", "ks", "alpha", "mixture", "custom")


@dataclass(frozen=True)
class FSpec:
    kind: str
    s: float | None = None
    alpha: float | None = None
    beta: float | None = None
    base: str | None = None
    func: Callable | None = field(default=None, compare=False, repr=False)
    fp1: float | None = None
    fpp1: float | None = None
    f0: float | None = None
    fprime_inf: float | None = None

    def __post_init__(self):
        if self.kind not in F_KINDS:
            raise ValidationError(f"unknown f kind {self.kind!r}")
        if self.kind == "fs" and not (self.s is not None and 0 <= self.s <= 1):
            raise ValidationError("fs requires s in [0, 1]")
        if self.kind == "conical":
            if self.base not in ("square", "xlogx"):
                raise ValidationError("conical base must be 'square' or 'xlogx'")
            if self.alpha is None or self.beta is None or self.alpha < 0 or self.beta < 0:
                raise ValidationError("conical requires alpha >= 0 and beta >= 0")
            if self.alpha + self.beta <= 0:
                raise ValidationError("conical requires alpha + beta > 0")
        if self.kind == "custom":
            if self.func is None or self.fp1 is None or self.fpp1 is None:
                raise ValidationError("custom f needs func, fp1 and fpp1")
            if self.fpp1 <= 0:
                raise ValidationError("custom f needs fpp1 > 0")

    def __call__(self, x):
        return eval_f(self, x)

    def to_dict(self) -> dict:
        if self.kind == "custom":
            raise ValidationError("custom f specs are not serializable")
        out = {"kind": self.kind}
        if self.kind == "fs":
            out["s"] = self.s
        if self.kind == "conical":
            out.update(alpha=self.alpha, beta=self.beta, base=self.base)
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "FSpec":
        if isinstance(obj, str):
            obj = {"kind": obj}
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ValidationError("f spec must be an object with a 'kind' field")
        allowed = {"kind", "s", "alpha", "beta", "base"}
        extra = set(obj) - allowed
        if extra:
            raise ValidationError(f"unknown f field(s): {sorted(extra)}")
        return cls(**obj)

    def __str__(self):
        if self.kind == "fs":
            return f"fs({self.s:g})"
        if self.kind == "conical":
            return f"conical({self.alpha:g},{self.beta:g},{self.base})"
        return self.kind


@dataclass(frozen=True)
class KappaSpec:
    kind: str
    s: float | None = None
    a: float | None = None
    weights: tuple = ()
    func: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KAPPA_KINDS:
            raise ValidationError(f"unknown kappa kind {self.kind!r}")
        if self.kind == "ks" and not (self.s is not None and 0 <= self.s <= 1):
            raise ValidationError("ks requires s in [0, 1]")
        if self.kind == "alpha" and not (self.a is not None and -1 < self.a < 0):
            raise ValidationError("alpha kernel requires a in (-1, 0)")
        if self.kind == "mixture":
            ws = tuple((float(w), float(s)) for w, s in self.weights)
            object.__setattr__(self, "weights", ws)
            if not ws or any(w < 0 or not 0 <= s <= 1 for w, s in ws):
                raise ValidationError("mixture needs (weight >= 0, s in [0,1]) pairs")
            if abs(sum(w for w, _ in ws) - 1) > 1e-10:
                raise ValidationError("mixture weights must sum to 1")
        if self.kind == "custom" and self.func is None:
            raise ValidationError("custom kappa needs func")

    def __call__(self, x):
        return eval_kappa(self, x)

    @property
    def bounded(self) -> bool:
        return math.isfinite(kappa_zero_limit(self))

    def to_dict(self) -> dict:
        if self.kind == "custom":
            raise ValidationError("custom kappa specs are not serializable")
        out = {"kind": self.kind}
        if self.kind == "ks":
            out["s"] = self.s
        if self.kind == "alpha":
            out["a"] = self.a
        if self.kind == "mixture":
            out["weights"] = [list(p) for p in self.weights]
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "KappaSpec":
        if isinstance(obj, str):
            obj = {"kind": obj}
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ValidationError("kappa spec must be an object with a 'kind' field")
        allowed = {"kind", "s", "a", "weights"}
        extra = set(obj) - allowed
        if extra:
            raise ValidationError(f"unknown kappa field(s): {sorted(extra)}")
        obj = dict(obj)
        if "weights" in obj:
            obj["weights"] = tuple(tuple(p) for p in obj["weights"])
        return cls(**obj)

    def __str__(self):
        if self.kind == "ks":
            return f"ks({self.s:g})"
        if self.kind == "alpha":
            return f"alpha({self.a:g})"
        return self.kind


# Named constructors -------------------------------------------------------

XLOGX = FSpec("xlogx")
NEGLOG = FSpec("neglog")
SQUARE = FSpec("square")
SQUARE_TRANSPOSE = FSpec("square_transpose")

KAPPA_MAX = KappaSpec("max")
KAPPA_MIN = KappaSpec("min")
KAPPA_BKM = KappaSpec("bkm")


def fs(s: float) -> FSpec:
    return FSpec("fs", s=float(s))


def conical(alpha: float, beta: float, base: str) -> FSpec:
    return FSpec("conical", alpha=float(alpha), beta=float(beta), base=base)


def custom_f(func, fp1, fpp1, f0=None, fprime_inf=None) -> FSpec:
    """Wrap a user-supplied f; checks f(1) = 0 and f''(1) by finite differences."""
    spec = FSpec("custom", func=func, fp1=float(fp1), fpp1=float(fpp1), f0=f0, fprime_inf=fprime_inf)
    if abs(float(func(1.0))) > 1e-12:
        raise ValidationError("custom f must vanish at 1")
    h = 1e-4
    fd = (float(func(1 + h)) - 2 * float(func(1.0)) + float(func(1 - h))) / h**2
    if abs(fd - fpp1) > 1e-6 * abs(fpp1) + 1e-6:
        raise ValidationError(f"declared f''(1) = {fpp1} but finite difference gives {fd}")
    return spec


def ks(s: float) -> KappaSpec:
    return KappaSpec("ks", s=float(s))


def kappa_alpha(a: float) -> KappaSpec:
    return KappaSpec("alpha", a=float(a))


def mixture(pairs) -> KappaSpec:
    return KappaSpec("mixture", weights=tuple(tuple(p) for p in pairs))


# Evaluation ---------------------------------------------------------------


def _positive(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("argument must be strictly positive")
    return x


def _xlogx(x):
    return x * np.log(x)


def _neglog(x):
    return -np.log(x)


def _square(x):
    return (x - 1) ** 2


def _square_t(x):
    return (x - 1) ** 2 / x


def _ks(s, x):
    if s == 0:
        return (x + 1) / (2 * x)
    return (1 + s) / 2 * (1 / (x + s) + 1 / (s * x + 1))


def _ret(val, x):
    return float(val) if np.ndim(x) == 0 else val


def eval_f(f: FSpec, x):
    """Evaluate f pointwise (scalar or array)."""
    xa = _positive(x)
    k = f.kind
    if k == "xlogx":
        v = _xlogx(xa)
    elif k == "neglog":
        v = _neglog(xa)
    elif k == "square":
        v = _square(xa)
    elif k == "square_transpose":
        v = _square_t(xa)
    elif k == "fs":
        v = (xa - 1) ** 2 * _ks(f.s, xa)
    elif k == "conical":
        b = _xlogx if f.base == "xlogx" else _square
        bt = _neglog if f.base == "xlogx" else _square_t
        v = f.alpha * b(xa) + f.beta * bt(xa)
    else:
        v = np.vectorize(lambda t: float(f.func(t)))(xa)
    return _ret(v, x)


class FLimits(NamedTuple):
    f0: float
    fprime_inf: float
    fpp1: float


_BASE_LIMITS = {
    "xlogx": (0.0, INF, 1.0, 1.0),
    "neglog": (INF, 0.0, 1.0, -1.0),
    "square": (1.0, INF, 2.0, 0.0),
    "square_transpose": (INF, 1.0, 2.0, 0.0),
}


def _mul(a, b):
    # 0 * inf = 0 for nonnegative limit arithmetic
    return 0.0 if a == 0 else a * b


def f_limits(f: FSpec) -> FLimits:
    """f(0+), lim f(x)/x at infinity, and f''(1)."""
    k = f.kind
    if k in _BASE_LIMITS:
        f0, fi, fpp, _ = _BASE_LIMITS[k]
        return FLimits(f0, fi, fpp)
    if k == "fs":
        lim = INF if f.s == 0 else (1 + f.s) ** 2 / (2 * f.s)
        return FLimits(lim, lim, 2.0)
    if k == "conical":
        b0, bi, bpp, _ = _BASE_LIMITS[f.base]
        f0 = _mul(f.alpha, b0) + _mul(f.beta, bi)
        fi = _mul(f.alpha, bi) + _mul(f.beta, b0)
        return FLimits(f0, fi, (f.alpha + f.beta) * bpp)
    f0 = f.f0 if f.f0 is not None else float(f.func(1e-300))
    fi = f.fprime_inf if f.fprime_inf is not None else float(f.func(1e300)) / 1e300
    return FLimits(f0, fi, f.fpp1)


def f_prime_one(f: FSpec) -> float:
    k = f.kind
    if k in _BASE_LIMITS:
        return _BASE_LIMITS[k][3]
    if k == "fs":
        return 0.0
    if k == "conical":
        d = _BASE_LIMITS[f.base][3]
        return f.alpha * d - f.beta * d
    return f.fp1


def fpp1(f: FSpec) -> float:
    return f_limits(f).fpp1


_SERIES_U = 0.1
_SERIES_K = np.arange(2, 22)


def _centered_log_parts(x):
    """x log x - (x-1) and (x-1) - log x, by power series in u = x-1 near 1."""
    u = x - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        a = x * np.log(x) - u
        b = u - np.log(x)
    near = np.abs(u) < _SERIES_U
    if np.any(near):
        un = u[near]
        pw = (-un[..., None]) ** _SERIES_K
        a[near] = np.sum(pw / (_SERIES_K * (_SERIES_K - 1)), axis=-1)
        b[near] = np.sum(pw / _SERIES_K, axis=-1)
    return a, b


def eval_f_centered(f: FSpec, x):
    """f(x) - f'(1)(x - 1): same divergence, nonnegative, no cancellation."""
    xa = np.atleast_1d(_positive(x))
    k = f.kind
    if k in ("xlogx", "neglog") or (k == "conical" and f.base == "xlogx"):
        a, b = _centered_log_parts(xa)
        if k == "xlogx":
            v = a
        elif k == "neglog":
            v = b
        else:
            v = f.alpha * a + f.beta * b
    else:
        v = np.asarray(eval_f(f, xa)) - f_prime_one(f) * (xa - 1)
    return float(v[0]) if np.ndim(x) == 0 else v.reshape(np.shape(x))


_TRANSPOSE = {
    "xlogx": "neglog",
    "neglog": "xlogx",
    "square": "square_transpose",
    "square_transpose": "square",
}


def transpose_f(f: FSpec) -> FSpec:
    """The transpose x f(1/x)."""
    if f.kind in _TRANSPOSE:
        return FSpec(_TRANSPOSE[f.kind])
    if f.kind == "fs":
        return f
    if f.kind == "conical":
        return conical(f.beta, f.alpha, f.base)
    lim = f_limits(f)
    g = f.func
    return FSpec(
        "custom",
        func=lambda x: x * g(1 / x),
        fp1=-f.fp1,
        fpp1=f.fpp1,
        f0=lim.fprime_inf,
        fprime_inf=lim.f0,
    )


def symmetrize_f(f: FSpec) -> FSpec:
    """(f + transpose f)/f''(1), normalized to second derivative 2 at 1."""
    if f.kind in ("xlogx", "neglog"):
        return conical(1.0, 1.0, "xlogx")
    if f.kind in ("square", "square_transpose"):
        return conical(0.5, 0.5, "square")
    if f.kind == "fs":
        return f
    if f.kind == "conical":
        c = 1.0 / _BASE_LIMITS[f.base][2]
        return conical(c, c, f.base)
    g, c = f.func, f.fpp1
    return FSpec(
        "custom",
        func=lambda x: (g(x) + x * g(1 / x)) / c,
        fp1=0.0,
        fpp1=2.0,
    )


def induced_kappa(f: FSpec) -> KappaSpec:
    """kappa_f(x) = (f + transpose f)(x) / (f''(1) (x-1)^2)."""
    if f.kind in ("xlogx", "neglog"):
        return KAPPA_BKM
    if f.kind in ("square", "square_transpose"):
        return KAPPA_MAX
    if f.kind == "fs":
        return ks(f.s)
    if f.kind == "conical":
        return KAPPA_BKM if f.base == "xlogx" else KAPPA_MAX
    g, c = f.func, f.fpp1

    def kap(x):
        if abs(x - 1) < 1e-4:
            # symmetric part is even in log x to second order
            return 1.0
        return (g(x) + x * g(1 / x)) / (c * (x - 1) ** 2)

    return KappaSpec("custom", func=kap)


def _bkm(x):
    u = x - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.log(x) / u
    near = np.abs(u) < _SERIES_RADIUS
    return np.where(near, 1 - u / 2 + u**2 / 3, v)


def eval_kappa(kappa: KappaSpec, x):
    """Evaluate a kernel pointwise (scalar or array)."""
    xa = _positive(x)
    k = kappa.kind
    if k == "max":
        v = (xa + 1) / (2 * xa)
    elif k == "min":
        v = 2 / (xa + 1)
    elif k == "bkm":
        v = _bkm(xa)
    elif k == "ks":
        v = _ks(kappa.s, xa)
    elif k == "alpha":
        # symmetrized power kernel; same quadratic form as x**a
        v = (xa**kappa.a + xa ** (-1 - kappa.a)) / 2
    elif k == "mixture":
        v = sum(w * _ks(s, xa) for w, s in kappa.weights)
    else:
        v = np.vectorize(lambda t: float(kappa.func(t)))(xa)
    return _ret(v, x)


def kappa_zero_limit(kappa: KappaSpec) -> float:
    """kappa(0+), possibly infinite."""
    k = kappa.kind
    if k in ("max", "bkm", "alpha"):
        return INF
    if k == "min":
        return 2.0
    if k == "ks":
        return INF if kappa.s == 0 else (1 + kappa.s) ** 2 / (2 * kappa.s)
    if k == "mixture":
        if any(w > 0 and s == 0 for w, s in kappa.weights):
            return INF
        return sum(w * (1 + s) ** 2 / (2 * s) for w, s in kappa.weights if w > 0)
    v = float(kappa.func(1e-12))
    return INF if v > 1e10 else v


# Measures -----------------------------------------------------------------


class KappaMeasure(NamedTuple):
    """Mixing measure over kappa_s: point masses plus an optional density on [0, 1]."""

    atoms: tuple
    density: Callable | None


def kappa_measure(kappa: KappaSpec) -> KappaMeasure:
    k = kappa.kind
    if k == "max":
        return KappaMeasure(((1.0, 0.0),), None)
    if k == "min":
        return KappaMeasure(((1.0, 1.0),), None)
    if k == "ks":
        return KappaMeasure(((1.0, kappa.s),), None)
    if k == "mixture":
        return KappaMeasure(kappa.weights, None)
    if k == "bkm":
        return KappaMeasure((), lambda s: 2.0 / (1.0 + s) ** 2)
    raise UnknownMeasure(f"no mixing measure known for kernel {kappa}")


class FRepresentation(NamedTuple):
    """f(x) = fp1 (x-1) + c (x-1)^2 + sum w (x-1)^2/(x+s) + int density(s) (x-1)^2/(x+s) ds."""

    fp1: float
    c: float
    atoms: tuple
    density: Callable | None


def _scale_rep(rep: FRepresentation, a: float) -> FRepresentation:
    dens = None if rep.density is None else (lambda s, d=rep.density: a * d(s))
    return FRepresentation(a * rep.fp1, a * rep.c, tuple((a * w, s) for w, s in rep.atoms), dens)


def _add_rep(r1: FRepresentation, r2: FRepresentation) -> FRepresentation:
    if r1.density is None or r2.density is None:
        dens = r1.density or r2.density
    else:
        dens = lambda s: r1.density(s) + r2.density(s)
    return FRepresentation(r1.fp1 + r2.fp1, r1.c + r2.c, r1.atoms + r2.atoms, dens)


def f_representation(f: FSpec) -> FRepresentation:
    """Linear, quadratic, and Stieltjes parts of f for the named kinds."""
    k = f.kind
    if k == "xlogx":
        return FRepresentation(1.0, 0.0, (), lambda s: s / (1.0 + s) ** 2)
    if k == "neglog":
        return FRepresentation(-1.0, 0.0, (), lambda s: 1.0 / (1.0 + s) ** 2)
    if k == "square":
        return FRepresentation(0.0, 1.0, (), None)
    if k == "square_transpose":
        return FRepresentation(0.0, 0.0, ((1.0, 0.0),), None)
    if k == "fs":
        s = f.s
        if s == 0:
            return FRepresentation(0.0, 0.5, ((0.5, 0.0),), None)
        return FRepresentation(0.0, 0.0, (((1 + s) / 2, s), ((1 + s) / (2 * s), 1 / s)), None)
    if k == "conical":
        b = f_representation(FSpec(f.base))
        bt = f_representation(FSpec(_TRANSPOSE[f.base]))
        return _add_rep(_scale_rep(b, f.alpha), _scale_rep(bt, f.beta))
    raise UnknownMeasure("custom f has no stored representation")


def nu_f(f: FSpec, x):
    """(f(x) - f'(1)(x-1)) / (x-1)^2, with the limit f''(1)/2 at 1."""
    xa = _positive(x)
    u = xa - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.asarray(eval_f_centered(f, xa)) / u**2
    v = np.where(np.abs(u) < 1e-5, fpp1(f) / 2, v)
    return _ret(v, x)
