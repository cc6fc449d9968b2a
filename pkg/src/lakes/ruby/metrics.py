"""Lake-size estimates from stabilizer expectation values.

The stabilizer Hamiltonian H_stab = sum_v (1+G_v)/2 + sum_p (1-W_p)/2 counts
e and m defects; its energy density epsilon bounds the minimum circuit depth
needed to prepare the state, D_min = 1/sqrt(epsilon), and the lake size is
the corresponding lightcone L_lake = 2a * D_min.  The e-defect density alone
gives the average distance between e excitations, L_e = 2a / sqrt(n_e).
"""

import numpy as np


def lake_metrics(psi, ops, lat):
    """epsilon, D_min, L_lake, n_e, L_e for a state on the lattice basis."""
    n_q = lat.n_sites
    eps = float(ops.h_stab.expectation(psi).real) / n_q
    cap = float(np.sqrt(n_q))
    if eps <= 0.0:
        d_min = cap
    else:
        d_min = min(1.0 / np.sqrt(eps), cap)
    g = float(ops.g_avg.expectation(psi).real)
    n_e = (1.0 + g) / 2.0
    two_a = 2.0 * lat.a
    l_e = two_a / np.sqrt(n_e) if n_e > 0 else float("inf")
    return {
        "epsilon": eps,
        "d_min": float(d_min),
        "l_lake": float(two_a * d_min),
        "n_e": float(n_e),
        "l_e": float(l_e),
    }
