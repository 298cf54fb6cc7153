"""
Population versus fidelity training
===================================

Population training only sees the averaged noisy state.  Fidelity training
also sees the ideal states and adjusts separate encoder and decoder meshes,
which pays off when the noise is not unitarily invariant.  It takes tens of
seconds.
"""

import numpy as np

from qdenoise import channels as ch
from qdenoise import denoiser as dn
from qdenoise import qstate as qs

rng = np.random.default_rng(2)
n, k = 4, 3
s = qs.random_subspace(n, k, rng)

for p in (0.1, 0.3):
    chan = ch.amplitude_damping(p, n)
    kets = qs.sample_in_subspace_batch(s, 128, rng)
    pairs = list(zip(kets, chan(qs.ket_to_dm(kets))))
    fid_d, rep = dn.train_fidelity(pairs, n, k, dn.OptimizerConfig(restarts=4), rng)
    pop_d, _ = dn.train_population(dn.ensemble_state(chan, s), k)
    f_fid = dn.average_fidelity_mc(fid_d, chan, s, 4000, rng)
    f_pop = dn.average_fidelity_mc(pop_d, chan, s, 4000, rng)
    print(f"amplitude damping p={p}: population {f_pop.mean:.4f}, fidelity-trained {f_fid.mean:.4f} "
          f"(success {f_fid.mean_success:.3f}, {rep.iterations} BFGS steps)")

# %%
# For N >= 2K an explicit construction removes a fixed pure noise state
# entirely, at acceptance (1-p)(1-c).
s2 = qs.random_subspace(4, 2, rng)
noise = 0.5 * s2.basis[:, 0] + np.sqrt(0.75) * s2.complement()[:, 1]
d, ideal_success = dn.build_perfect_denoiser(s2, noise)
chan = ch.fixed_state_mix(0.7, qs.ket_to_dm(noise))
est = dn.average_fidelity_mc(d, chan, s2, 1000, rng)
print(f"perfect denoiser: F = {est.mean:.12f}, success {est.mean_success:.4f} vs {(1 - 0.7) * ideal_success:.4f}")
