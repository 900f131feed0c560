"""Riemannian semi-norms of a qubit tangent as the base state moves toward the boundary.

Prints one row per Bloch radius with the spectral value for each kernel and
the difference to the closed form.
"""
import numpy as np

from qdiv.divergences import chi2_seminorm, qubit_chi2_closed_form, qubit_tangent
from qdiv.funcs import KAPPA_BKM, KAPPA_MAX, KAPPA_MIN, ks
from qdiv.opcore import bloch_state

KAPPAS = {"max": KAPPA_MAX, "bkm": KAPPA_BKM, "ks(0.3)": ks(0.3), "min": KAPPA_MIN}


def main():
    y = np.array([1.0, 0.0, 0.5])
    X = qubit_tangent(y)
    print(f"{'r':>6} " + " ".join(f"{k:>12}" for k in KAPPAS) + f" {'max |diff|':>11}")
    for r in (0.0, 0.5, 0.9, 0.99, 0.999):
        w = np.array([0.0, 0.0, r])
        vals, diff = [], 0.0
        for kappa in KAPPAS.values():
            v = chi2_seminorm(kappa, bloch_state(w), X).value
            diff = max(diff, abs(v - qubit_chi2_closed_form(kappa, w, y).value))
            vals.append(v)
        print(f"{r:6.3f} " + " ".join(f"{v:12.6f}" for v in vals) + f" {diff:11.1e}")


if __name__ == "__main__":
    main()
