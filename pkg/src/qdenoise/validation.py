"""Seeded invariant checks across all modules, run by ``qdenoise validate``.

Each check returns (passed, detail).  Channel constructors are looked up
through an injectable factory table so tests can feed in a deliberately
broken channel and confirm the failure is reported.
"""

from __future__ import annotations

import sys
from typing import Callable, NamedTuple

import numpy as np

from . import analytics as an
from . import applications as ap
from . import channels as ch
from . import denoiser as dn
from . import mesh
from . import qstate as qs

DEFAULT_FACTORIES: dict[str, Callable] = {
    "depolarizing": ch.depolarizing,
    "dit_flip": ch.dit_flip,
    "phase_flip": ch.phase_flip,
    "dit_phase_flip": ch.dit_phase_flip,
    "amplitude_damping": ch.amplitude_damping,
}


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _kraus_sum(chan) -> np.ndarray:
    ops = np.asarray(chan.kraus())
    return np.einsum("kji,kjl->il", ops.conj(), ops)


def check_completeness(rng, factories):
    worst = 0.0
    for name, make in factories.items():
        for n in range(2, 6):
            for p in (0.0, 0.25, 0.5, 0.75, 1.0):
                s = _kraus_sum(make(p, n))
                worst = max(worst, float(np.abs(s - np.eye(n)).max()))
    return worst <= 1e-10, f"max |sum M^dag M - I| = {worst:.2e}"


def check_trace_preservation(rng, factories):
    worst = 0.0
    for name, make in factories.items():
        for n in (2, 3, 5):
            chan = make(0.3, n)
            rho = qs.random_density_matrix(n, rng)
            out = chan(rho)
            worst = max(worst, abs(np.trace(out).real - 1), float(np.abs(out - out.conj().T).max()))
    return worst <= 1e-12, f"max trace/Hermiticity error = {worst:.2e}"


def check_eigen_reconstruction(rng, factories):
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 9))
        rho = qs.random_density_matrix(n, rng)
        worst = max(worst, float(np.abs(qs.eigen_decompose(rho).reconstruct() - rho).max()))
    return worst <= 1e-10, f"max reconstruction error = {worst:.2e}"


def check_mesh_round_trip(rng, factories):
    worst = 0.0
    for n in range(1, 9):
        for _ in range(5):
            u = qs.haar_random_unitary(n, rng)
            worst = max(worst, float(np.linalg.norm(mesh.unitary_from_mesh(mesh.mesh_from_unitary(u)) - u)))
    return worst <= 1e-8, f"max Frobenius error = {worst:.2e}"


def check_depolarizing_perfect(rng, factories):
    n, s = 5, qs.Subspace.standard(5, 1)
    worst = 0.0
    for p in np.arange(1, 10) / 10:
        chan = factories["depolarizing"](p, n)
        d, _ = dn.train_population(dn.ensemble_state(chan, s), 1)
        est = dn.average_fidelity_mc(d, chan, s, 200, rng)
        worst = max(worst, abs(est.mean - 1), abs(est.mean_success - (1 - p * (1 - 1 / n))))
    return worst <= 1e-6, f"max deviation = {worst:.2e}"


def check_quenched_identity(rng, factories):
    s = qs.random_subspace(5, 3, rng)
    val = dn.quenched_fidelity(s.projector, s, ch.identity_channel(5))
    return abs(val - 1) <= 1e-12, f"quenched(identity) = {val:.15f}"


def check_quenched_flip(rng, factories):
    worst = 0.0
    for k in (1, 3):
        s = qs.random_subspace(4, k, rng)
        chan = factories["dit_flip"](0.3, 4)
        d, _ = dn.train_population(dn.ensemble_state(chan, s), k)
        q = dn.quenched_fidelity(d.operator, s, chan)
        est = dn.average_fidelity_mc(d, chan, s, 4000, rng)
        worst = max(worst, abs(q - est.mean))
    return worst <= 0.05, f"max |quenched - MC| = {worst:.4f}"


def check_perfect_denoiser(rng, factories):
    worst = 0.0
    for _ in range(20):
        k = int(rng.integers(1, 3))
        s = qs.random_subspace(2 * k, k, rng)
        c = rng.uniform(0, 0.9)
        noise = np.sqrt(c) * s.basis @ qs.haar_random_state(k, rng) + np.sqrt(1 - c) * s.complement() @ qs.haar_random_state(k, rng)
        d, _ = dn.build_perfect_denoiser(s, noise)
        chan = ch.fixed_state_mix(rng.uniform(0, 0.95), qs.ket_to_dm(noise))
        est = dn.average_fidelity_mc(d, chan, s, 50, rng)
        worst = max(worst, abs(est.mean - 1), float(np.linalg.norm((d.encoder @ noise)[:k])))
    return worst <= 1e-9, f"max fidelity/rejection error = {worst:.2e}"


def check_worst_case(rng, factories):
    psi, d2 = np.eye(3, dtype=complex)[0], np.eye(3, dtype=complex)[1]
    worst = 0.0
    for p in (0.05, 0.1, 0.2, 0.3, 0.4, 0.49):
        chi = an.worst_case_noise_state(psi, d2, p)
        _, fid = an.two_level_exact(p, an.TwoLevelNoise.pure(abs(np.vdot(psi, chi)) ** 2))
        worst = max(worst, abs(fid - an.worst_case_fidelity(p)))
    return worst <= 1e-9, f"max saturation gap = {worst:.2e}"


def check_haar_n2(rng, factories):
    worst = max(abs(an.haar_noise_avg_fidelity_exact_n2(p) - an.haar_noise_avg_fidelity_quad(2, p)) for p in (0.1, 0.3, 0.5, 0.7, 0.9))
    ok = worst <= 1e-9 and abs(an.haar_noise_avg_fidelity_exact_n2(0.5) - 5 / 6) <= 1e-15
    return ok, f"max |closed form - quadrature| = {worst:.2e}"


def check_subspace_closed_form(rng, factories):
    worst = 0.0
    for k in (2, 3, 4):
        for c in (0.1, 0.5):
            for p in (0.05, 0.3, 0.7):
                prm = an.SubspaceNoiseParams(6, k, p, c)
                worst = max(worst, abs(an.subspace_avg_fidelity_closed(prm) - an.subspace_avg_fidelity(prm)))
    return worst <= 1e-7, f"max |closed form - quadrature| = {worst:.2e}"


def check_davis_kahan(rng, factories):
    bad = 0
    for _ in range(100):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, min(3, n - 1) + 1))
        res = an.davis_kahan_check(qs.random_density_matrix(n, rng), qs.random_subspace(n, k, rng), rng.uniform(0, 0.3))
        bad += res.holds is False
    return bad == 0, f"violations = {bad}"


def check_msd(rng, factories):
    worst = max(ap.denoiser_expected_copies(p, 0.02, 3).expected_copies for p in np.linspace(0, 1, 101))
    inf = ap.msd_expected_copies(ap.DEFAULT_MSD_MAP, 0.233, 1 - 0.04 / 3).infinite
    return worst <= 3 + 1e-12 and inf, f"max denoiser copies = {worst:.6f}, threshold diverges = {inf}"


def check_cooling(rng, factories):
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 7))
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = (g + g.conj().T) / 2
        res = ap.cool_gibbs(h, 1.0)
        e = np.linalg.eigvalsh(h)
        w = np.exp(-(e - e[0]))
        worst = max(worst, abs(res.fidelity_vs_exact - 1), abs(res.success_probability - w[0] / w.sum()))
    return worst <= 1e-9, f"max deviation = {worst:.2e}"


def check_coherent_fock(rng, factories):
    worst = 0.0
    for _ in range(20):
        u = qs.haar_random_unitary(5, rng)
        pops = mesh.single_photon_populations(u, 0)
        alpha = complex(*rng.standard_normal(2))
        worst = max(worst, float(np.abs(mesh.coherent_intensities(u, 0, alpha) - abs(alpha) ** 2 * pops).max()))
    return worst <= 1e-12, f"max intensity mismatch = {worst:.2e}"


CHECKS: list[tuple[str, Callable]] = [
    ("channel completeness", check_completeness),
    ("trace and Hermiticity preservation", check_trace_preservation),
    ("eigendecomposition reconstruction", check_eigen_reconstruction),
    ("mesh round trip", check_mesh_round_trip),
    ("depolarizing K=1 perfect denoising", check_depolarizing_perfect),
    ("quenched formula on identity channel", check_quenched_identity),
    ("quenched formula vs Monte Carlo (dit flip)", check_quenched_flip),
    ("perfect denoiser construction", check_perfect_denoiser),
    ("worst-case bound saturation", check_worst_case),
    ("Haar-noise N=2 average", check_haar_n2),
    ("subspace closed form vs quadrature", check_subspace_closed_form),
    ("Davis-Kahan inequality", check_davis_kahan),
    ("distillation vs denoiser cost", check_msd),
    ("Gibbs cooling", check_cooling),
    ("coherent/single-photon equivalence", check_coherent_fock),
]


def run_checks(seed: int = 0, factories: dict[str, Callable] | None = None) -> list[CheckResult]:
    """Run every check with its own generator derived from ``seed``."""
    table = dict(DEFAULT_FACTORIES)
    table.update(factories or {})
    results = []
    for idx, (name, fn) in enumerate(CHECKS):
        rng = np.random.default_rng([seed, idx])
        try:
            passed, detail = fn(rng, table)
        except Exception as exc:  # a crash is reported as a failure of that invariant
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(passed), detail))
    return results


def report(results: list[CheckResult], out=None) -> int:
    out = out or sys.stdout
    width = max(len(r.name) for r in results)
    for r in results:
        out.write(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}\n")
    failed = [r.name for r in results if not r.passed]
    out.write(f"{len(results) - len(failed)}/{len(results)} checks passed\n")
    if failed:
        out.write("failed: " + ", ".join(failed) + "\n")
    return 1 if failed else 0
