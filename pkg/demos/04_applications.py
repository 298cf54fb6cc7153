"""
Magic states and ground states
==============================

Two uses of a single-state denoiser: purifying qutrit magic states, compared
against a five-to-one distillation round, and pulling the ground state out
of a thermal state.
"""

import numpy as np

from qdenoise import applications as ap

p_ae = 0.02
target = 1 - 2 * p_ae / 3
print("p_in    distillation copies   denoiser copies")
for p_in in (0.01, 0.05, 0.1, 0.2, 0.23, 0.25, 0.5):
    msd = ap.msd_expected_copies(ap.DEFAULT_MSD_MAP, p_in, target)
    den = ap.denoiser_expected_copies(p_in, p_ae, 3)
    print(f"{p_in:.2f}    {msd.expected_copies:>18.6g}   {den.expected_copies:.4f}")
print(f"denoiser output fidelity {den.achieved_fidelity:.5f}")

# %%
rng = np.random.default_rng(3)
g = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
h = (g + g.conj().T) / 2
for beta in (0.1, 1.0, 10.0):
    res = ap.cool_gibbs(h, beta)
    print(f"beta={beta:5}: ground-state fidelity {res.fidelity_vs_exact:.12f}, success {res.success_probability:.4f}")
