"""Trace-distance trajectory of a primitive qubit channel between its envelopes."""
import numpy as np

from qdiv.channels import cq_phi
from qdiv.funcs import KAPPA_BKM
from qdiv.markov import convergence_trace, mixing_time_bound
from qdiv.opcore import bloch_state


def main():
    ch = cq_phi(0.6, 0.6)
    rep = convergence_trace(ch, bloch_state(np.array([0.3, -0.2, 0.9])), KAPPA_BKM, n_max=20)
    print(f"eta = {rep.eta:.6f}, lower envelope from n = {rep.M}")
    print(f"{'n':>3} {'lower':>12} {'distance':>12} {'upper':>12}")
    for row in rep.trajectory:
        lo = "-" if row["lower_env"] is None else f"{row['lower_env']:.3e}"
        print(f"{row['n']:3d} {lo:>12} {row['trace_dist']:12.3e} {row['upper_env']:12.3e}")
    print("within envelopes:", rep.within_envelopes())
    mt = mixing_time_bound(ch, KAPPA_BKM, 0.01)
    print(f"mixing time bound for delta = 0.01: {mt.t} (verified: {mt.verified})")


if __name__ == "__main__":
    main()
