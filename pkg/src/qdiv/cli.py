"""Command-line front end.

Every subcommand reads its inputs from flags or from a JSON config file
(``--config``) whose keys are the flag names with dashes replaced by
underscores; unknown keys are rejected. Channels, functions and kernels
accept inline JSON, a path to a JSON file, or the shorthand
``kind:key=value,key=value`` (for example ``dephasing:p=0.5``).

Exit codes: 0 success, 1 suite tolerance failure, 2 invalid input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, certificates, coefficients, divergences, funcs, markov, recovery
from .channels import ChannelSpec, build_channel, dephasing, amplitude_damping, fixed_point, identity
from .errors import NumericalError, ValidationError
from .funcs import FSpec, KappaSpec
from .opcore import bloch_state, matrix_from_json, matrix_to_json, validate_density

SIG = 12


# Input parsing ---------------------------------------------------------------


def _load_json(text: str, what: str):
    path = Path(text)
    if not text.lstrip().startswith(("{", "[")) and path.is_file():
        text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{what}: not valid JSON ({exc.msg} at line {exc.lineno} column {exc.colno})") from None


def _scalar(v: str):
    try:
        return int(v)
    except ValueError:
        try:
            return float(v)
        except ValueError:
            return v


def _spec_obj(text, what: str):
    """Shorthand, JSON object, or file path to a dict with a 'kind' field."""
    if isinstance(text, dict):
        return text
    text = str(text)
    if text.lstrip().startswith("{") or Path(text).is_file():
        return _load_json(text, what)
    kind, _, rest = text.partition(":")
    obj = {"kind": kind}
    for item in filter(None, rest.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise ValidationError(f"{what}: expected key=value, got {item!r}")
        obj[key.strip()] = _scalar(val.strip())
    return obj


def parse_channel(text, what: str = "channel"):
    obj = _spec_obj(text, what)
    try:
        return build_channel(ChannelSpec.from_dict(obj))
    except (ValidationError, ValueError) as exc:
        raise ValidationError(f"{what}: {exc}") from None


def parse_f(text, what: str = "f") -> FSpec:
    try:
        return FSpec.from_dict(_spec_obj(text, what))
    except (ValidationError, TypeError) as exc:
        raise ValidationError(f"{what}: {exc}") from None


def parse_kappa(text, what: str = "kappa") -> KappaSpec:
    try:
        return KappaSpec.from_dict(_spec_obj(text, what))
    except (ValidationError, TypeError) as exc:
        raise ValidationError(f"{what}: {exc}") from None


def parse_matrix(text, what: str) -> np.ndarray:
    """Matrix JSON {"re", "im"}, a nested real list, or {"bloch": [x, y, z]}."""
    obj = text if isinstance(text, (dict, list)) else _load_json(str(text), what)
    try:
        if isinstance(obj, dict) and "bloch" in obj:
            return np.asarray(bloch_state(obj["bloch"]), dtype=complex)
        if isinstance(obj, dict):
            return matrix_from_json(obj)
        return np.asarray(obj, dtype=complex)
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"{what}: {exc}") from None


def parse_state(text, what: str):
    return validate_density(parse_matrix(text, what))


# Output --------------------------------------------------------------------------


def _round(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if not math.isfinite(x) else float(f"{x:.{SIG}g}")
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.ndarray):
        if x.ndim == 2 and x.shape[0] == x.shape[1]:
            return _round(matrix_to_json(x))
        return [_round(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {str(k): _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if isinstance(x, complex):
        return _round([x.real, x.imag])
    return x


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{SIG}g}"
    if isinstance(x, (dict, list)):
        return json.dumps(_round(x), sort_keys=True)
    return str(x)


def _config_hash(args: argparse.Namespace) -> str:
    keep = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "func", "threads")}
    blob = json.dumps(keep, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _provenance(args) -> dict:
    return {
        "command": args.command,
        "config_hash": _config_hash(args),
        "seed": getattr(args, "seed", None),
        "version": __version__,
    }


def emit(args, payload=None, rows=None, columns=None) -> None:
    """Write JSON (payload plus provenance) or CSV (rows) to --out or stdout."""
    fmt = args.format or ("csv" if rows is not None and payload is None else "json")
    if fmt == "csv":
        if rows is None:
            rows = [{k: v for k, v in payload.items()}]
            columns = list(rows[0])
        buf = io.StringIO()
        buf.write(f"# qdiv {args.command} config_hash={_config_hash(args)} seed={getattr(args, 'seed', None)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])
        text = buf.getvalue()
    else:
        body = dict(payload or {})
        if rows is not None:
            body["rows"] = rows
        body["provenance"] = _provenance(args)
        text = json.dumps(_round(body), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _threads(args) -> int:
    env = os.environ.get("QDIV_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"QDIV_THREADS must be an integer, got {env!r}") from None
    return args.threads or os.cpu_count() or 1


def _pmap(args, fn, items):
    """Map over items with a thread pool; results keep input order."""
    n = _threads(args)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _need(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise ValidationError(f"missing required option --{name.replace('_', '-')}")


def _estimate_dict(est: coefficients.CoefficientEstimate) -> dict:
    return {"value": est.value, "direction": est.direction, "witness": est.witness, "diagnostics": est.diagnostics}


# Subcommands -----------------------------------------------------------------------


def cmd_div(args) -> int:
    _need(args, "f", "rho", "gamma")
    f = parse_f(args.f)
    rho, gamma = parse_state(args.rho, "rho"), parse_state(args.gamma, "gamma")
    fn = divergences.maximal_f_div if args.type == "maximal" else divergences.standard_f_div
    res = fn(f, rho, gamma)
    emit(args, {"value": res.value, "terms_skipped": res.terms_skipped, "f": str(f), "type": args.type})
    return 0


def cmd_chi2(args) -> int:
    _need(args, "kappa", "rho", "X")
    kappa = parse_kappa(args.kappa)
    rho = parse_state(args.rho, "rho")
    X = parse_matrix(args.X, "X")
    res = divergences.chi2_seminorm(kappa, rho, X)
    emit(args, {"value": res.value, "terms_skipped": res.terms_skipped, "kappa": str(kappa)})
    return 0


def cmd_coeff(args) -> int:
    _need(args, "N")
    N = parse_channel(args.N, "N")
    M = parse_channel(args.M, "M") if args.M is not None else identity(N.d_in)
    est = args.estimator
    if est == "schatten2":
        res = coefficients.schatten2_rel_expansion(N, M)
    elif est == "fixed-ref":
        _need(args, "kappa")
        ref = parse_state(args.ref, "ref") if args.ref is not None else fixed_point(N)
        res = coefficients.riem_coeff_fixed_ref(parse_kappa(args.kappa), N, ref, mode=args.mode)
    elif est == "riem":
        _need(args, "kappa")
        res = coefficients.riem_rel_expansion(parse_kappa(args.kappa), N, M, args.mode, args.budget, args.seed)
    else:
        _need(args, "f")
        res = coefficients.div_rel_expansion(parse_f(args.f), N, M, args.mode, args.budget, args.seed)
    emit(args, _estimate_dict(res) | {"estimator": est, "mode": args.mode})
    return 0


CERT_COLUMNS = ["parameter", "value", "direction", "components"]


def cmd_certify(args) -> int:
    rows = []
    if args.type == "primitive":
        _need(args, "channel", "kappa")
        ch = parse_channel(args.channel)
        res = certificates.primitive_expansion_certificate(ch, parse_kappa(args.kappa), args.m)
        rows.append({"parameter": res.witness["m"], "value": res.value, "direction": res.direction, "components": res.diagnostics})
    elif args.type == "image":
        _need(args, "channel", "kappa")
        res = certificates.image_expansion(parse_channel(args.channel), parse_kappa(args.kappa))
        rows.append({"parameter": "image", "value": res.value, "direction": res.direction, "components": {}})
    elif args.type == "scan":
        _need(args, "kappa")
        kappa = parse_kappa(args.kappa)
        alphas = args.alphas or [0.05, 0.1, 0.2, 0.4]
        scan = _pmap(args, lambda a: certificates.inequivalence_scan(kappa, [a], args.budget, args.seed)[0], alphas)
        for r in scan:
            rows.append({"parameter": r["alpha"], "value": r["normalized"], "direction": r["direction"], "components": {"eta": r["eta"]}})
    else:
        _need(args, "f", "N", "M")
        r = certificates.equality_check(parse_f(args.f), parse_channel(args.N, "N"), parse_channel(args.M, "M"), args.budget, args.seed)
        rows.append(
            {
                "parameter": str(parse_f(args.f)),
                "value": r["gap"],
                "direction": r["verdict"],
                "components": {"div_est": r["div_est"], "riem_est": r["riem_est"]},
            }
        )
    emit(args, rows=rows, columns=CERT_COLUMNS)
    return 0


def cmd_witness(args) -> int:
    _need(args, "channel", "f")
    eps = args.eps or list(certificates.DEFAULT_EPS)
    fam = certificates.no_rdpi_witness(parse_channel(args.channel), parse_f(args.f), eps, seed=args.seed)
    rows = [
        {
            "parameter": r["eps"],
            "value": r["ratio"],
            "direction": "output_over_input",
            "components": {k: r[k] for k in ("D_in", "D_out_std", "D_out_max")},
        }
        for r in fam.table
    ]
    if args.format == "json":
        emit(args, {"P_A": fam.P_A, "psi": fam.psi, "fit": fam.fit}, rows=rows)
    else:
        emit(args, rows=rows, columns=CERT_COLUMNS)
    return 0


def cmd_recover(args) -> int:
    _need(args, "channel", "rho", "gamma")
    kappa = parse_kappa(args.kappa) if args.kappa is not None else None
    rep = recovery.sufficiency_report(parse_channel(args.channel), parse_state(args.rho, "rho"), parse_state(args.gamma, "gamma"), kappa)
    emit(args, rep)
    return 0


def cmd_markov(args) -> int:
    _need(args, "channel", "rho0", "kappa")
    ch = parse_channel(args.channel)
    kappa = parse_kappa(args.kappa)
    rep = markov.convergence_trace(ch, parse_state(args.rho0, "rho0"), kappa, args.n_max, args.M)
    rows = [
        {"n": r["n"], "dist": r["trace_dist"], "upper": r["upper_env"], "lower": r["lower_env"]}
        for r in rep.trajectory
    ]
    payload = None
    if args.format == "json" or args.delta is not None:
        payload = {"eta": rep.eta, "eta_check": rep.eta_check, "M": rep.M, "fixed_point": rep.fixed_point.matrix, **rep.notes}
        if args.delta is not None:
            mt = markov.mixing_time_bound(ch, kappa, args.delta, seed=args.seed)
            payload["t_mix_bound"] = mt.t
            payload["t_mix_verified"] = mt.verified
    if args.format == "csv" or payload is None:
        emit(args, rows=rows, columns=["n", "dist", "upper", "lower"])
    else:
        emit(args, payload, rows=rows)
    return 0


EQUALITY_FS = ("xlogx", "neglog", "square", "square_transpose", "conical:alpha=1,beta=2,base=xlogx")


def _suite_equality(args):
    N, M = dephasing(0.5), dephasing(0.25)
    tol = args.tol if args.tol is not None else 1e-3

    def one(spec):
        r = certificates.equality_check(parse_f(spec), N, M, args.budget, args.seed, tol=tol)
        return {"f": str(parse_f(spec)), "div_est": r["div_est"], "riem_est": r["riem_est"], "gap": r["gap"], "verdict": r["verdict"]}

    rows = _pmap(args, one, list(EQUALITY_FS))
    return rows, ["f", "div_est", "riem_est", "gap", "verdict"], all(r["gap"] <= tol for r in rows)


def _suite_inequivalence(args):
    alphas = args.alphas or [0.05, 0.1, 0.2, 0.4]
    jobs = [(k, a) for k in ("min", "bkm", "max") for a in alphas]

    def one(job):
        k, a = job
        r = certificates.inequivalence_scan(KappaSpec(k), [a], args.budget, args.seed)[0]
        return {"kappa": k, "alpha": a, "eta": r["eta"], "normalized": r["normalized"]}

    rows = _pmap(args, one, jobs)
    col = {k: {r["alpha"]: r["normalized"] for r in rows if r["kappa"] == k} for k in ("min", "bkm", "max")}
    lo, hi = min(alphas), max(alphas)
    ok = all(0.99 <= v <= 1.01 for v in col["min"].values())
    ok &= col["bkm"][lo] > 5 * col["bkm"][hi] and col["max"][lo] > 5 * col["max"][hi]
    return rows, ["kappa", "alpha", "eta", "normalized"], ok


def _suite_lower_bounds(args):
    cases = [
        ("dephasing", dephasing(0.5), dephasing(0.25), coefficients.family_lower_bounds("dephasing", p1=0.5, p2=0.25)),
        ("amplitude_damping", amplitude_damping(0.5), amplitude_damping(0.25), coefficients.family_lower_bounds("amplitude_damping", g1=0.5, g2=0.25)),
    ]

    def one(case):
        name, N, M, fb = case
        est = coefficients.riem_rel_expansion(funcs.KAPPA_MAX, N, M, "inf", args.budget, args.seed)
        return {"family": name, "estimate": est.value, "bound": fb.bound, "ok": est.value >= fb.bound - 1e-6}

    rows = _pmap(args, one, cases)
    return rows, ["family", "estimate", "bound", "ok"], all(r["ok"] for r in rows)


SUITES = {"equality": _suite_equality, "inequivalence": _suite_inequivalence, "lower_bounds": _suite_lower_bounds}


def cmd_suite(args) -> int:
    rows, columns, ok = SUITES[args.name](args)
    if args.format == "json":
        emit(args, {"name": args.name, "passed": ok}, rows=rows)
    else:
        emit(args, rows=rows, columns=columns)
    return 0 if ok else 1


# Parser ----------------------------------------------------------------------------


def _floats(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qdiv", description="Quantum f-divergences, Riemannian semi-norms and expansion coefficients.")
    p.add_argument("--version", action="version", version=f"qdiv {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option values (keys are option names with underscores)")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), help="output format")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, help="worker threads (QDIV_THREADS overrides)")
    common.add_argument("--budget", default="medium", help="tiny, small, medium or large")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("div", parents=[common], help="standard or maximal f-divergence; CSV columns: value, terms_skipped, f, type")
    s.add_argument("--f")
    s.add_argument("--rho")
    s.add_argument("--gamma")
    s.add_argument("--type", choices=("standard", "maximal"), default="standard")
    s.set_defaults(func=cmd_div)

    s = sub.add_parser("chi2", parents=[common], help="Riemannian semi-norm ||X||^2 at rho; CSV columns: value, terms_skipped, kappa")
    s.add_argument("--kappa")
    s.add_argument("--rho")
    s.add_argument("--X")
    s.set_defaults(func=cmd_chi2)

    s = sub.add_parser("coeff", parents=[common], help="contraction/expansion coefficient estimates; CSV columns: value, direction, witness, diagnostics, estimator, mode",
    )
    s.add_argument("--estimator", choices=("riem", "div", "fixed-ref", "schatten2"), default="riem")
    s.add_argument("--N")
    s.add_argument("--M", help="comparison channel (default identity)")
    s.add_argument("--f")
    s.add_argument("--kappa")
    s.add_argument("--ref", help="reference state for fixed-ref (default fixed point)")
    s.add_argument("--mode", choices=("inf", "sup"), default="inf")
    s.set_defaults(func=cmd_coeff)

    s = sub.add_parser(
        "certify",
        parents=[common],
        help="certificates and scans; CSV columns: parameter, value, direction, components",
    )
    s.add_argument("--type", choices=("primitive", "image", "scan", "equality"), default="primitive")
    s.add_argument("--channel")
    s.add_argument("--kappa")
    s.add_argument("--f")
    s.add_argument("--N")
    s.add_argument("--M")
    s.add_argument("--m", type=int)
    s.add_argument("--alphas", type=_floats)
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser(
        "witness",
        parents=[common],
        help="no-reverse-DPI family; CSV columns: parameter (eps), value (ratio), direction, components",
    )
    s.add_argument("--channel")
    s.add_argument("--f")
    s.add_argument("--eps", type=_floats)
    s.set_defaults(func=cmd_witness)

    s = sub.add_parser("recover", parents=[common], help="approximate-sufficiency report for the universal recovery map; CSV columns: neg2logF, l1sq, l1sq_half, fidelity, drop, measure, chain_ok",
    )
    s.add_argument("--channel")
    s.add_argument("--rho")
    s.add_argument("--gamma")
    s.add_argument("--kappa", help="report a chi^2 drop instead of relative entropy")
    s.set_defaults(func=cmd_recover)

    s = sub.add_parser("markov", parents=[common], help="trajectory and envelopes; CSV columns: n, dist, upper, lower")
    s.add_argument("--channel")
    s.add_argument("--rho0")
    s.add_argument("--kappa")
    s.add_argument("--n-max", type=int, default=50)
    s.add_argument("--M", type=int, help="start of the lower envelope (default automatic)")
    s.add_argument("--delta", type=float, help="also compute a mixing-time bound")
    s.set_defaults(func=cmd_markov)

    s = sub.add_parser("suite", parents=[common], help="aggregated checks, exit 0 iff all pass; CSV columns: equality f, div_est, riem_est, gap, verdict; inequivalence kappa, alpha, eta, normalized; lower_bounds family, estimate, bound, ok",
    )
    s.add_argument("--name", choices=sorted(SUITES), required=True)
    s.add_argument("--alphas", type=_floats)
    s.add_argument("--tol", type=float)
    s.set_defaults(func=cmd_suite)
    return p


def _apply_config(args: argparse.Namespace) -> None:
    if not args.config:
        return
    cfg = _load_json(args.config, "config")
    if not isinstance(cfg, dict):
        raise ValidationError("config: expected a JSON object")
    cmd = cfg.pop("command", args.command)
    if cmd != args.command:
        raise ValidationError(f"config: command {cmd!r} does not match subcommand {args.command!r}")
    known = set(vars(args)) - {"func", "config", "command"}
    for key, value in cfg.items():
        if key not in known:
            raise ValidationError(f"config: unknown field {key!r}")
        setattr(args, key, value)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        if isinstance(args.budget, str):
            coefficients.Budget.preset(args.budget)
        return args.func(args)
    except (ValidationError, ValueError, TypeError) as exc:
        print(f"qdiv: error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"qdiv: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
