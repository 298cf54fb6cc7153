"""Closed-form fidelities, bounds and expansions for the population-trained denoiser.

These are used as oracles against Monte Carlo runs of the full pipeline.
Everything here is a numeric transcription; expansions return an
:class:`Expansion` carrying a flag for whether the inputs sit inside the
regime where the truncation is trustworthy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .qstate import DimensionError, Subspace, dominant_projector, haar_random_states

__all__ = [
    "Expansion",
    "MonteCarloEstimate",
    "DavisKahanResult",
    "QuadratureError",
    "TwoLevelNoise",
    "SubspaceNoiseParams",
    "worst_case_fidelity",
    "worst_case_noise_state",
    "two_level_exact",
    "haar_noise_avg_fidelity",
    "haar_noise_avg_fidelity_exact_n2",
    "haar_noise_avg_fidelity_quad",
    "small_p_expansion_haar",
    "subspace_eigen_overlaps",
    "subspace_exact_fidelity",
    "subspace_avg_fidelity",
    "subspace_avg_fidelity_quad",
    "subspace_avg_fidelity_closed",
    "subspace_avg_fidelity_c0",
    "subspace_approx_fidelity",
    "subspace_taylor",
    "hyp2f1_series",
    "bare_fidelity",
    "bare_fidelity_alternative",
    "breakeven_p",
    "davis_kahan_check",
]


class Expansion(NamedTuple):
    value: float
    valid: bool  # inputs inside the documented small-parameter regime


class MonteCarloEstimate(NamedTuple):
    mean: float
    stderr: float


class DavisKahanResult(NamedTuple):
    lhs: float
    rhs_appendix: float
    rhs_main: float
    holds: bool | None  # None when the eigengap condition fails


class QuadratureError(RuntimeError):
    pass


def _check_p(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise probability must lie in [0, 1], got {p!r}")
    return p


# ---------------------------------------------------------------------------
# Single ideal state


def worst_case_fidelity(p: float) -> float:
    """Sharp lower bound on the K=1 denoised fidelity over all noise states."""
    p = _check_p(p)
    if p > 0.5:
        return 0.0
    r = p / (1.0 - p)
    return 0.5 * (1.0 + np.sqrt(max(1.0 - r * r, 0.0)))


def worst_case_noise_state(psi: np.ndarray, d2: np.ndarray, p: float) -> np.ndarray:
    """Pure noise state that attains :func:`worst_case_fidelity`.

    ``d2`` must be a unit vector orthogonal to ``psi``.  For p >= 1/2 the
    orthogonal state ``d2`` itself is returned (the denoiser then locks onto
    it and the fidelity drops to 0; p = 1/2 is the degenerate crossing).
    """
    p = _check_p(p)
    psi = np.asarray(psi, dtype=complex)
    d2 = np.asarray(d2, dtype=complex)
    if abs(np.vdot(psi, d2)) > 1e-10:
        raise ValueError("d2 must be orthogonal to psi")
    if p >= 0.5:
        return d2.copy()
    delta = p / (1.0 - p)
    return np.sqrt((1 - delta) / 2) * psi + np.sqrt((1 + delta) / 2) * d2


@dataclass(frozen=True)
class TwoLevelNoise:
    """Noise state restricted to span(psi, psi_perp): [[rho00, rho01], [rho01*, 1-rho00]]."""

    rho00: float
    rho01: complex = 0.0

    def __post_init__(self):
        if not 0.0 <= self.rho00 <= 1.0:
            raise ValueError(f"rho00 must lie in [0, 1], got {self.rho00!r}")
        if abs(self.rho01) ** 2 > self.rho00 * (1 - self.rho00) + 1e-12:
            raise ValueError("|rho01|^2 exceeds rho00 (1 - rho00): not a density matrix")

    @classmethod
    def pure(cls, rho00: float) -> "TwoLevelNoise":
        """Pure noise with overlap ``rho00`` (maximal coherence)."""
        return cls(rho00, np.sqrt(rho00 * (1 - rho00)))


def _two_level(p, rho00, r2):
    # vectorized core: r2 = |rho01|^2
    p = np.asarray(p, dtype=float)
    a = p * (1 - np.asarray(rho00, dtype=float))
    g = 1 - 2 * a
    q = p * p * np.asarray(r2, dtype=float)
    disc = np.sqrt(g * g + 4 * q)
    lam = 0.5 * (1 + disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        # lam - a = (g + disc)/2, rewritten to avoid cancellation when g < 0
        x = np.where(g >= 0, 0.5 * (g + disc), 2 * q / (disc - g))
        fid = x * x / (x * x + q)
    fid = np.where(q > 0, fid, np.where(g > 0, 1.0, np.where(g < 0, 0.0, 0.5)))
    return lam, fid


def two_level_exact(p: float, noise: TwoLevelNoise) -> tuple[float, float]:
    """(largest eigenvalue of the noisy ensemble, denoised fidelity) for K = 1.

    When the top eigenvalue is exactly degenerate (incoherent noise at
    p (1 - rho00) = 1/2) the fidelity is averaged over the degenerate pair, 1/2.
    """
    p = _check_p(p)
    lam, fid = _two_level(p, noise.rho00, abs(noise.rho01) ** 2)
    return float(lam), float(fid)


def haar_noise_avg_fidelity(n: int, p: float, n_samples: int, rng: np.random.Generator) -> MonteCarloEstimate:
    """Monte Carlo average of the K=1 denoised fidelity over Haar-random pure noise states."""
    p = _check_p(p)
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    if n < 2:
        raise DimensionError("Haar-noise averages need N >= 2")
    noise = haar_random_states(n, n_samples, rng)
    x = np.abs(noise[:, 0]) ** 2  # ideal state taken as |0> by unitary invariance
    _, fid = _two_level(p, x, x * (1 - x))
    return MonteCarloEstimate(float(fid.mean()), float(fid.std(ddof=1) / np.sqrt(n_samples)))


def haar_noise_avg_fidelity_exact_n2(p: float) -> float:
    p = _check_p(p)
    if p <= 0.5:
        return (6 + p * (5 * p - 12)) / (6 * (p - 1) ** 2)
    return (2 + p) / (6 * p)


def haar_noise_avg_fidelity_quad(n: int, p: float) -> float:
    """Same average by quadrature over the overlap x = |<psi|psi_noise>|^2.

    For Haar noise in dimension N the overlap has density (N-1)(1-x)^(N-2).
    """
    p = _check_p(p)
    if n < 2:
        raise DimensionError("Haar-noise averages need N >= 2")

    def f(x):
        return (n - 1) * (1 - x) ** (n - 2) * _two_level(p, x, x * (1 - x))[1]

    points = [1 - 1 / (2 * p)] if p > 0.5 else None
    val, err = integrate.quad(f, 0.0, 1.0, points=points, epsabs=1e-10, limit=200)
    return float(val)


def small_p_expansion_haar(n: int, p: float) -> Expansion:
    """Second-order Haar-noise average; trusted for p well below (N+2)/(4N)."""
    p = float(p)
    val = 1 - (n - 1) * p * p / (n * (n + 1))
    return Expansion(val, bool(p < 0.1 * (n + 2) / (4 * n)))


# ---------------------------------------------------------------------------
# Subspace with pure noise


@dataclass(frozen=True)
class SubspaceNoiseParams:
    """Pure noise with overlap ``c`` = tr(rho_noise Pi_K) on a K-dim ideal subspace of C^N."""

    n: int
    k: int
    p: float
    c: float

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise DimensionError(f"need 1 <= K <= N, got K={self.k}, N={self.n}")
        _check_p(self.p)
        if not 0.0 <= self.c <= 1.0:
            raise ValueError(f"overlap c must lie in [0, 1], got {self.c!r}")


def subspace_eigen_overlaps(params: SubspaceNoiseParams) -> tuple[float, float]:
    """(beta, gamma) for the dominant eigenvector mixing the ideal and noise directions.

    beta = |<xi|lambda_+>|^2 and gamma = |<lambda_+|psi_noise>|^2, where xi is
    the normalized projection of the noise onto the subspace.  At c = 0 the
    dominant direction switches from xi to the noise itself at p = 1/(K+1).
    """
    k, p, c = params.k, params.p, params.c
    a = (1 - p) / k + p * c
    b = p * np.sqrt(c * (1 - c))
    d = p * (1 - c)
    h = 0.5 * (a - d)
    if b == 0.0:
        if c == 0.0 and h <= 0:
            return 0.0, 1.0
        return 1.0, c
    s = np.hypot(h, b)
    t = b / (h + s) if h >= 0 else (s - h) / b  # ratio of eigenvector components
    norm = 1 + t * t
    return 1 / norm, (np.sqrt(c) + np.sqrt(1 - c) * t) ** 2 / norm


def _subspace_fid(alpha, p, beta, gamma):
    u = alpha * beta + 1 - alpha
    return ((1 - p) * u * u + p * alpha * beta * gamma) / ((1 - p) * u + p * gamma)


def subspace_exact_fidelity(params: SubspaceNoiseParams, alpha: float) -> float:
    """Denoised fidelity of an ideal state with overlap ``alpha`` on xi."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    beta, gamma = subspace_eigen_overlaps(params)
    return float(_subspace_fid(alpha, params.p, beta, gamma))


def subspace_avg_fidelity_quad(params: SubspaceNoiseParams) -> float:
    """Haar average over ideal states by adaptive quadrature (abs tol 1e-8).

    alpha = |<xi|psi>|^2 has density (K-1)(1-alpha)^(K-2) on [0, 1].
    """
    k, p = params.k, params.p
    beta, gamma = subspace_eigen_overlaps(params)
    if k == 1:
        return float(_subspace_fid(1.0, p, beta, gamma))

    def f(x):
        return (k - 1) * (1 - x) ** (k - 2) * _subspace_fid(x, p, beta, gamma)

    val, err, info = integrate.quad(f, 0.0, 1.0, epsabs=1e-8, limit=200, full_output=True)[:3]
    if err > 1e-6 or not np.isfinite(val):
        raise QuadratureError(
            f"quadrature did not converge for {params}: value={val!r}, error estimate={err:.3e}, "
            f"subintervals={info.get('last')}"
        )
    return float(val)


def hyp2f1_series(a: float, b: float, c: float, z: float, tol: float = 1e-14, max_terms: int = 1_000_000) -> float:
    """Gauss hypergeometric 2F1(a, b; c; z) by its power series, for 0 <= z < 1."""
    if not 0.0 <= z < 1.0:
        raise ValueError(f"series only used for z in [0, 1), got {z!r}")
    total = term = 1.0
    for m in range(max_terms):
        term *= (a + m) * (b + m) / ((c + m) * (m + 1)) * z
        total += term
        if abs(term) <= tol * abs(total):
            return total
    raise QuadratureError(f"2F1 series did not converge in {max_terms} terms at z={z!r}")


def subspace_avg_fidelity_c0(k: int, p: float) -> float:
    """Haar-average fidelity when the noise is orthogonal to the ideal subspace.

    Perfect below p = 1/(K+1); above it the denoiser keeps the noise
    direction and the average is (K-1)/(K+1) (1-p) 2F1(1, 1; K+2; 1-p).
    """
    p = _check_p(p)
    if p < 1 / (k + 1):
        return 1.0
    if k == 1 or p == 1.0:
        return 0.0
    return (k - 1) / (k + 1) * (1 - p) * hyp2f1_series(1, 1, k + 2, 1 - p)


def subspace_avg_fidelity_closed(params: SubspaceNoiseParams) -> float:
    """Closed-form Haar average (partial fractions in alpha), valid when beta < 1."""
    k, p = params.k, params.p
    beta, gamma = subspace_eigen_overlaps(params)
    big_a = (1 - p) * beta + p * gamma
    big_b = (1 - p) * (1 - beta)
    if big_b <= 1e-14 or p == 0.0:
        raise ValueError("closed form needs beta < 1 and p > 0; use the quadrature")
    if k == 1:
        return float(beta)
    z = big_b / (big_a + big_b)
    f21 = hyp2f1_series(1, 1, k, z)
    return float(1 - (1 - beta) / k - p * gamma / big_b + p * gamma * big_a / (big_b * (big_a + big_b)) * f21)


def subspace_avg_fidelity(params: SubspaceNoiseParams, cross_check: float = 1e-6) -> float:
    """Haar-average denoised fidelity for pure subspace noise.

    Uses quadrature in general.  For c = 0 the hypergeometric expression is
    returned after checking it against the quadrature.
    """
    quad = subspace_avg_fidelity_quad(params)
    if params.c != 0.0:
        return quad
    exact = subspace_avg_fidelity_c0(params.k, params.p)
    if abs(exact - quad) > cross_check:
        raise QuadratureError(
            f"c=0 closed form {exact!r} disagrees with quadrature {quad!r} for {params}"
        )
    return exact


def subspace_approx_fidelity(p: float, rho_noise: np.ndarray, s: Subspace) -> float:
    """Compact approximate Haar average for fixed-state noise, built from D_K."""
    p = _check_p(p)
    k = s.dim_sub
    pi = s.projector
    rho_s = (1 - p) * pi / k + p * np.asarray(rho_noise)
    dk, _ = dominant_projector(rho_s, k)
    pd = pi @ dk
    num = (1 - p) / (k + 1) * (np.trace(pd).real ** 2 + np.trace(pd @ pd).real) + p * np.trace(pd @ rho_noise @ dk).real
    den = (1 - p) * np.trace(pd).real + k * p * np.trace(dk @ rho_noise).real
    return float(num / den)


def subspace_taylor(params: SubspaceNoiseParams) -> Expansion:
    """Second-order small-p average fidelity.

    Trusted while the noise weight is small next to the ideal eigenvalue
    gap, K p / (1 - p) < 0.25.
    """
    k, p, c = params.k, params.p, params.c
    val = 1 - (k - 1) / k * c * p - (k * (3 * k - 1) - 1) / k * c * (1 - c) * p * p
    valid = p < 1.0 and k * p / (1 - p) < 0.25
    return Expansion(float(val), bool(valid))


def bare_fidelity(params: SubspaceNoiseParams) -> float:
    """Average undenoised fidelity 1 - p (1 - c/K) (uses E|<psi|psi_noise>|^2 = c/K)."""
    return 1 - params.p * (1 - params.c / params.k)


def bare_fidelity_alternative(params: SubspaceNoiseParams) -> float:
    """Alternative baseline 1 - (1 - 2c/(K(K+1))) p, kept for comparison with simulation."""
    k = params.k
    return 1 - (1 - 2 * params.c / (k * (k + 1))) * params.p


def breakeven_p(k: int, c: float) -> float:
    """Largest p for which the second-order denoised fidelity beats :func:`bare_fidelity_alternative`."""
    if k < 1:
        raise DimensionError("K must be >= 1")
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"overlap c must lie in [0, 1], got {c!r}")
    if c == 0.0:
        return 1.0
    den = c * (1 - c) * (k + 1) * (k * (3 * k - 1) - 1)
    if den == 0.0:
        return 1.0
    val = (k * (k + 1) - c * (k * k + 1)) / den
    return float(min(max(val, 0.0), 1.0))


def davis_kahan_check(rho_noise: np.ndarray, s: Subspace, p: float) -> DavisKahanResult:
    """Compare the dominant-eigenspace rotation with two perturbation bounds.

    lhs = ||Pi_K - D_K||_F for rho_S = (1-p) Pi_K / K + p rho_noise.
    """
    p = _check_p(p)
    rho_noise = np.asarray(rho_noise, dtype=complex)
    k = s.dim_sub
    pi = s.projector
    dk, _ = dominant_projector((1 - p) * pi / k + p * rho_noise, k)
    lhs = float(np.linalg.norm(pi - dk))
    nu1 = float(np.linalg.eigvalsh(rho_noise)[-1])
    delta = (1 - p) / k - p * nu1
    rhs_main = float(np.sqrt(2 * np.sqrt(2) * k * p / (1 - p))) if p < 1 else float("inf")
    if delta <= 0:
        return DavisKahanResult(lhs, float("nan"), rhs_main, None)
    rhs_app = float(np.sqrt(2) * p * np.linalg.norm(rho_noise) / delta)
    return DavisKahanResult(lhs, rhs_app, rhs_main, bool(lhs <= rhs_app + 1e-9))
