"""Regenerate tests/frozen.json from the independent oracles.

Run from the repository root: python3 tests/make_frozen.py
"""

import json
from pathlib import Path

import mpmath as mp
import numpy as np

import oracles


def main():
    out = {}
    out["haar_n2"] = {str(p): float(oracles.haar_n2_mp(p)) for p in (0.2, 0.5, 0.8, 1.0)}
    out["subspace_avg"] = {
        f"{k},{p},{c}": float(oracles.subspace_avg_mp(k, p, c))
        for k in (1, 2, 3)
        for p in (0.05, 0.2, 0.4, 0.6)
        for c in (0.0, 0.1, 0.3, 0.7)
    }
    out["c0_hypergeometric"] = {f"{k},{p}": float(oracles.c0_hypergeometric_mp(k, p)) for k in (2, 3, 5) for p in (0.4, 0.6, 0.9)}
    out["two_level_rho00_0.2_p_0.3"] = oracles.two_level_pipeline(0.2, 0.3)
    # ideal subspace span(e0, e1) in C^4, noise along e0 / e2, ideal state sqrt(a) e0 + sqrt(1-a) e1
    n, p, c, a = 4, 0.2, 0.3, 0.5
    basis = np.eye(n, 2, dtype=complex)
    noise = np.zeros(n, complex)
    noise[0], noise[2] = np.sqrt(c), np.sqrt(1 - c)
    psi = np.zeros(n, complex)
    psi[0], psi[1] = np.sqrt(a), np.sqrt(1 - a)
    out["subspace_exact_4_2_0.2_0.3_0.5"] = oracles.pipeline_fidelity(basis, noise, p, psi)
    out["gibbs_diag012_beta1"] = [float(x) for x in np.exp(-np.arange(3.0)) / np.exp(-np.arange(3.0)).sum()]
    Path(__file__).with_name("frozen.json").write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
