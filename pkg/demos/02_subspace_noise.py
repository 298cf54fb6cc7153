"""
Protecting a K-dimensional subspace
===================================

Ideal states live in a random K-dimensional subspace.  Noise is a fixed pure
state whose weight inside that subspace is c.  The population-trained
denoiser then leaves a small error that grows like c p at small p, and the
exact average follows from a one-dimensional integral.
"""

import numpy as np

from qdenoise import analytics as an
from qdenoise import channels as ch
from qdenoise import denoiser as dn
from qdenoise import qstate as qs

rng = np.random.default_rng(1)
n, k, c = 6, 3, 0.4
s = qs.random_subspace(n, k, rng)
noise = np.sqrt(c) * s.basis[:, 0] + np.sqrt(1 - c) * s.complement()[:, 0]

print(" p      MC F              exact    Taylor   bare")
for p in (0.02, 0.05, 0.1, 0.2, 0.4):
    chan = ch.fixed_state_mix(p, qs.ket_to_dm(noise))
    d, _ = dn.train_population(dn.ensemble_state(chan, s), k)
    est = dn.average_fidelity_mc(d, chan, s, 5000, rng)
    prm = an.SubspaceNoiseParams(n, k, p, c)
    tay = an.subspace_taylor(prm)
    mark = "" if tay.valid else "*"
    print(f"{p:.2f}   {est.mean:.5f}+-{est.stderr:.5f}   {an.subspace_avg_fidelity(prm):.5f}  "
          f"{tay.value:.5f}{mark}  {an.bare_fidelity(prm):.5f}")
print("* outside the expansion's range")

# %%
# Denoising beats doing nothing only below a break-even noise level.
for kk in (2, 5, 10):
    print(f"K={kk}, c=0.5: break-even p = {an.breakeven_p(kk, 0.5):.4f}")
