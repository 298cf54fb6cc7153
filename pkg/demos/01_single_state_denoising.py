"""
Denoising a single qudit state
==============================

A K=1 denoiser trained on the noisy state itself keeps its dominant
eigenvector.  Under depolarizing noise that eigenvector is the ideal state,
so the output fidelity is 1 and the only price is the rejected fraction.
"""

import numpy as np

from qdenoise import channels as ch
from qdenoise import denoiser as dn
from qdenoise import qstate as qs
from qdenoise import analytics as an

rng = np.random.default_rng(0)
n = 5
s = qs.Subspace.standard(n, 1)

print(" p     bare F   denoised F   success   1-p(1-1/N)")
for p in np.arange(0, 10) / 10:
    chan = ch.depolarizing(p, n)
    d, _ = dn.train_population(dn.ensemble_state(chan, s), 1)
    bare, fid, g = dn.sample_fidelities(d, chan, s, 100, rng)
    print(f"{p:.1f}   {bare.mean():.4f}   {fid.mean():.6f}     {g.mean():.4f}    {1 - p * (1 - 1 / n):.4f}")

# %%
# The adversarial case is a pure noise state tilted toward the ideal state.
# Below p = 1/2 the fidelity never drops under the worst-case curve, and the
# tilted state sits exactly on it.
psi, d2 = np.eye(3, dtype=complex)[0], np.eye(3, dtype=complex)[1]
for p in (0.1, 0.3, 0.45):
    chi = an.worst_case_noise_state(psi, d2, p)
    rho = (1 - p) * qs.ket_to_dm(psi) + p * qs.ket_to_dm(chi)
    d, _ = dn.train_population(rho, 1)
    out = dn.denoise(d, rho)
    print(f"p={p}: worst case {an.worst_case_fidelity(p):.6f}, achieved {qs.fidelity(out.state, psi):.6f}")
