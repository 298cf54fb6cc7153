"""The autoencoder denoiser: encode, project onto K latent modes, decode.

Population training is solved in closed form (rotate the K dominant
eigenvectors of the noisy ensemble onto the latent modes).  Fidelity
training optimizes separate encoder/decoder meshes numerically.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from . import mesh
from .qstate import (
    DimensionError,
    Subspace,
    check_unitary,
    eigen_decompose,
    haar_random_unitary,
    ket_to_dm,
    sample_in_subspace_batch,
)

__all__ = [
    "Denoiser",
    "DenoiseOutcome",
    "TrainReport",
    "OptimizerConfig",
    "FidelityEstimate",
    "UnsupportedDimensionError",
    "DegenerateNoiseError",
    "latent_projector",
    "denoise",
    "ensemble_state",
    "train_population",
    "sample_fidelities",
    "average_fidelity_mc",
    "train_fidelity",
    "fidelity_cost",
    "quenched_fidelity",
    "build_perfect_denoiser",
    "noisy_ae_model",
    "noisy_denoise_simulate",
]

# Success probabilities at or below this are treated as "never accepted".
ZERO_SUCCESS = 1e-12


class UnsupportedDimensionError(DimensionError):
    pass


class DegenerateNoiseError(ValueError):
    pass


def latent_projector(n: int, k: int) -> np.ndarray:
    """P_K = I_K (+) 0_{N-K}."""
    if not 1 <= k <= n:
        raise DimensionError(f"need 1 <= K <= N, got K={k}, N={n}")
    return np.diag(np.r_[np.ones(k), np.zeros(n - k)]).astype(complex)


def _encode_pairs(u: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in u.ravel()]


def _decode_pairs(pairs, n: int) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.shape != (n * n, 2):
        raise ValueError(f"expected {n * n} [re, im] pairs, got shape {arr.shape}")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(n, n)


@dataclass(frozen=True)
class Denoiser:
    encoder: np.ndarray
    decoder: np.ndarray
    k: int

    def __post_init__(self):
        enc = check_unitary(self.encoder)
        dec = check_unitary(self.decoder)
        if enc.shape != dec.shape:
            raise DimensionError("encoder and decoder dimensions differ")
        if not 1 <= self.k <= enc.shape[0]:
            raise DimensionError(f"latent dimension K={self.k} invalid for N={enc.shape[0]}")
        object.__setattr__(self, "encoder", enc)
        object.__setattr__(self, "decoder", dec)

    @property
    def n(self) -> int:
        return self.encoder.shape[0]

    @property
    def projector(self) -> np.ndarray:
        return latent_projector(self.n, self.k)

    @property
    def operator(self) -> np.ndarray:
        """B = U_d P_K U_e (unnormalized Kraus operator of the accepted branch)."""
        return self.decoder[:, :self.k] @ self.encoder[:self.k, :]

    def __call__(self, rho: np.ndarray) -> "DenoiseOutcome":
        return denoise(self, rho)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "encoder": _encode_pairs(self.encoder),
            "decoder": _encode_pairs(self.decoder),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Denoiser":
        n = int(d["n"])
        return cls(_decode_pairs(d["encoder"], n), _decode_pairs(d["decoder"], n), int(d["k"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Denoiser":
        return cls.from_dict(json.loads(text))


class DenoiseOutcome(NamedTuple):
    state: np.ndarray | None  # None when the projection (almost) never succeeds
    success_probability: float


class TrainReport(NamedTuple):
    cost: float
    iterations: int
    converged: bool


class FidelityEstimate(NamedTuple):
    mean: float
    stderr: float
    mean_success: float


@dataclass
class OptimizerConfig:
    """Knobs for fidelity training.

    The first restart is warm-started from the population-trained denoiser;
    the remaining ones from Haar-random encoder/decoder pairs.
    """

    restarts: int = 8
    fd_step: float = 1e-5
    gtol: float = 1e-7
    maxiter: int = 2000
    tolerance: float = 1e-9
    n_train: int = 128
    threads: int = 1


def denoise(d: Denoiser, rho_in: np.ndarray) -> DenoiseOutcome:
    rho_in = np.asarray(rho_in, dtype=complex)
    if rho_in.shape != (d.n, d.n):
        raise DimensionError(f"denoiser acts on dimension {d.n}, got state of shape {rho_in.shape}")
    a = d.encoder[:d.k, :]
    latent = a @ rho_in @ a.conj().T
    g = float(np.trace(latent).real)
    if g <= ZERO_SUCCESS:
        return DenoiseOutcome(None, g)
    w = d.decoder[:, :d.k]
    out = w @ latent @ w.conj().T / g
    return DenoiseOutcome(0.5 * (out + out.conj().T), g)


def _batch_fidelity(enc: np.ndarray, dec: np.ndarray, k: int, kets: np.ndarray, rhos: np.ndarray):
    """Per-sample denoised fidelity and success probability.

    Rejected samples (success <= ZERO_SUCCESS) score fidelity 0.
    """
    a = enc[:k, :]
    latent = a @ rhos @ a.conj().T
    g = np.trace(latent, axis1=-2, axis2=-1).real
    w = kets @ dec[:, :k].conj()  # rows: (U_d^dag psi) restricted to latent modes
    num = np.einsum("mi,mij,mj->m", w.conj(), latent, w).real
    fid = np.where(g > ZERO_SUCCESS, num / np.where(g > ZERO_SUCCESS, g, 1.0), 0.0)
    return fid, g


def ensemble_state(channel, s: Subspace) -> np.ndarray:
    """rho_S = E_psi[channel(|psi><psi|)] = channel(Pi_K / K) by linearity."""
    return channel(s.projector / s.dim_sub)


def train_population(rho_s: np.ndarray, k: int) -> tuple[Denoiser, TrainReport]:
    """Closed-form optimum of the latent-population cost.

    The encoder sends the j-th dominant eigenvector of ``rho_s`` to basis
    vector j-1; the decoder is its inverse.
    """
    rho_s = np.asarray(rho_s, dtype=complex)
    n = rho_s.shape[0]
    if not 1 <= k <= n:
        raise DimensionError(f"need 1 <= K <= N, got K={k}, N={n}")
    ed = eigen_decompose(rho_s)
    enc = ed.eigenvectors.conj().T
    cost = 1.0 - float(np.sum(ed.eigenvalues[:k]))
    return Denoiser(enc, ed.eigenvectors, k), TrainReport(cost, 1, True)


def sample_fidelities(d: Denoiser, channel, s: Subspace, n_samples: int, rng: np.random.Generator):
    """Draw ideal states in ``s`` and return (bare, denoised, success) arrays."""
    if channel.dim != d.n or s.dim_full != d.n:
        raise DimensionError("channel, subspace and denoiser dimensions must agree")
    kets = sample_in_subspace_batch(s, n_samples, rng)
    rhos = channel(ket_to_dm(kets))
    bare = np.einsum("mi,mij,mj->m", kets.conj(), rhos, kets).real
    fid, g = _batch_fidelity(d.encoder, d.decoder, d.k, kets, rhos)
    return bare, fid, g


def average_fidelity_mc(
    d: Denoiser, channel, s: Subspace, n_samples: int, rng: np.random.Generator
) -> FidelityEstimate:
    """Monte Carlo estimate of the average denoised fidelity over Haar states in ``s``."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    _, fid, g = sample_fidelities(d, channel, s, n_samples, rng)
    return FidelityEstimate(float(fid.mean()), float(fid.std(ddof=1) / np.sqrt(n_samples)), float(g.mean()))


# ---------------------------------------------------------------------------
# Fidelity training


def fidelity_cost(x: np.ndarray, n: int, k: int, kets: np.ndarray, rhos: np.ndarray) -> float:
    """1 - mean denoised fidelity for encoder/decoder mesh parameters ``x``."""
    half = x.size // 2
    enc = mesh._unitary_from_vector(n, x[:half])
    dec = mesh._unitary_from_vector(n, x[half:])
    fid, _ = _batch_fidelity(enc, dec, k, kets, rhos)
    return 1.0 - float(fid.mean())


def _central_grad(f, x: np.ndarray, h: float) -> np.ndarray:
    g = np.empty_like(x)
    xp = x.copy()
    for i in range(x.size):
        xi = x[i]
        xp[i] = xi + h
        fp = f(xp)
        xp[i] = xi - h
        fm = f(xp)
        xp[i] = xi
        g[i] = (fp - fm) / (2 * h)
    return g


def _mesh_vector(u: np.ndarray) -> np.ndarray:
    return mesh.mesh_from_unitary(u).to_vector()


def train_fidelity(
    training_set: Sequence[tuple[np.ndarray, np.ndarray]],
    n: int,
    k: int,
    opt: OptimizerConfig | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[Denoiser, TrainReport]:
    """Fit encoder and decoder meshes to maximize the mean denoised fidelity.

    ``training_set`` holds (ideal ket, noisy density matrix) pairs.  Uses
    BFGS on central finite-difference gradients with multiple restarts; the
    best restart wins (ties go to the lower restart index).
    """
    opt = opt or OptimizerConfig()
    if len(training_set) == 0:
        raise ValueError("training set is empty")
    if rng is None:
        raise ValueError("train_fidelity needs an explicit rng")
    kets = np.array([np.asarray(t[0], dtype=complex) for t in training_set])
    rhos = np.array([np.asarray(t[1], dtype=complex) for t in training_set])
    if kets.shape[1:] != (n,) or rhos.shape[1:] != (n, n):
        raise DimensionError(f"training states must have dimension {n}")
    if not 1 <= k <= n:
        raise DimensionError(f"need 1 <= K <= N, got K={k}, N={n}")

    pop, _ = train_population(rhos.mean(axis=0), k)
    starts = [np.concatenate([_mesh_vector(pop.encoder), _mesh_vector(pop.decoder)])]
    for _ in range(max(opt.restarts, 1) - 1):
        starts.append(
            np.concatenate([_mesh_vector(haar_random_unitary(n, rng)), _mesh_vector(haar_random_unitary(n, rng))])
        )

    def cost(x):
        val = fidelity_cost(x, n, k, kets, rhos)
        if not np.isfinite(val):
            raise FloatingPointError(f"non-finite training cost {val!r}")
        return val

    def run(x0):
        res = scipy.optimize.minimize(
            cost,
            x0,
            jac=lambda x: _central_grad(cost, x, opt.fd_step),
            method="BFGS",
            options={"gtol": opt.gtol, "maxiter": opt.maxiter},
        )
        return float(res.fun), res.x, int(res.nit)

    if opt.threads > 1:
        with ThreadPoolExecutor(max_workers=opt.threads) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(x0) for x0 in starts]

    best = min(range(len(results)), key=lambda i: (results[i][0], i))
    best_cost, best_x, nit = results[best]
    prior = min((r[0] for r in results[:-1]), default=np.inf)
    converged = bool(prior - best_cost < opt.tolerance) if len(results) > 1 else True
    half = best_x.size // 2
    den = Denoiser(
        mesh._unitary_from_vector(n, best_x[:half]),
        mesh._unitary_from_vector(n, best_x[half:]),
        k,
    )
    return den, TrainReport(min(max(best_cost, 0.0), 1.0), nit, converged)


# ---------------------------------------------------------------------------
# Analytical approximations and constructions


def _kraus_ops(channel) -> np.ndarray:
    if hasattr(channel, "kraus"):
        return np.asarray(channel.kraus())
    return np.asarray(channel)


def quenched_fidelity(b: np.ndarray, s: Subspace, channel) -> float:
    """Haar-average numerator and denominator of the fidelity separately.

    ``b`` is U_d P_K U_e (the dominant projector D_K for population
    training); ``channel`` is anything with Kraus operators.
    """
    ops = _kraus_ops(channel)
    b = np.asarray(b)
    pi = s.projector
    k = s.dim_sub
    if ops.shape[1:] != b.shape or b.shape != pi.shape:
        raise DimensionError("operator, channel and subspace dimensions must agree")
    bm = b @ ops  # (n_ops, N, N)
    pbm = pi @ bm
    tr = np.trace(pbm, axis1=-2, axis2=-1)
    num = np.sum(np.abs(tr) ** 2) + np.sum(np.abs(pbm @ pi) ** 2)
    den = (k + 1) * np.sum(np.abs(bm @ pi) ** 2)
    if den <= 1e-300:
        raise ZeroDivisionError("channel followed by the denoiser annihilates the ideal subspace")
    return float(num / den)


def _orthonormal_completion(first: np.ndarray, span: np.ndarray) -> np.ndarray:
    """Columns spanning span(span) orthogonal to unit vector ``first`` (which lies in it)."""
    coords = span.conj().T @ first
    rest = scipy.linalg.null_space(coords.conj()[None, :])
    return span @ rest


def build_perfect_denoiser(
    s: Subspace, psi_noise: np.ndarray, coherent: np.ndarray | None = None
) -> tuple[Denoiser, float]:
    """Explicit denoiser that rejects a fixed pure noise state exactly.

    Works for noise ``rho -> (1-p) V rho V^dag + p |psi_noise><psi_noise|``
    whenever N >= 2K.  The encoder sends ``psi_noise`` to a redundant mode
    and compresses the (rotated) ideal subspace losslessly up to a factor
    sqrt(1-c); the decoder maps the latent modes back and undoes ``V``.

    Returns the denoiser and 1 - c, the acceptance probability of the ideal
    branch (so a noisy input is accepted with probability (1-p)(1-c)).
    """
    n, k = s.dim_full, s.dim_sub
    if n < 2 * k:
        raise UnsupportedDimensionError(f"perfect denoising needs N >= 2K, got N={n}, K={k}")
    psi_noise = np.asarray(psi_noise, dtype=complex)
    psi_noise = psi_noise / np.linalg.norm(psi_noise)
    basis = s.basis if coherent is None else np.asarray(coherent) @ s.basis
    sub = Subspace(basis)
    pi = sub.projector
    inside = pi @ psi_noise
    outside = psi_noise - inside
    c = float(np.vdot(inside, inside).real)
    if c >= 1.0 - 1e-12:
        raise DegenerateNoiseError("noise state lies inside the ideal subspace (c = 1)")
    phi1 = inside / np.sqrt(c) if c > 1e-24 else basis[:, 0]
    perp1 = outside / np.linalg.norm(outside)
    ideal = np.column_stack([phi1, _orthonormal_completion(phi1, basis)])
    comp = np.column_stack([perp1, _orthonormal_completion(perp1, sub.complement())])
    noise_perp = np.sqrt(1 - c) * phi1 - np.sqrt(c) * perp1

    e = np.eye(n)
    u1 = np.outer(e[n - 1], psi_noise.conj()) + np.outer(e[0], noise_perp.conj())
    for j in range(1, k):
        u1 += np.outer(e[j], ideal[:, j].conj())
    for j in range(2, n - k + 1):
        u1 += np.outer(e[j + k - 2], comp[:, j - 1].conj())

    u2 = np.zeros((n, n))
    u2[0, 0] = 1.0
    for j in range(1, k):
        m = j + k - 1
        u2[j, j], u2[m, j] = np.sqrt(1 - c), np.sqrt(c)
        u2[j, m], u2[m, m] = np.sqrt(c), -np.sqrt(1 - c)
    for j in range(2 * k - 1, n):
        u2[j, j] = 1.0

    dec = np.zeros((n, n), dtype=complex)
    dec[:, :k] = ideal
    dec[:, k:] = comp
    if coherent is not None:
        dec = np.asarray(coherent).conj().T @ dec
    return Denoiser(u2 @ u1, dec, k), 1.0 - c


def noisy_ae_model(p_ae: float, p_in: float, n: int) -> tuple[float, float]:
    """Closed-form (success probability, fidelity) for K=1 depolarizing input
    passed through an encoder and decoder that each depolarize with ``p_ae``."""
    p_denoise = (1 - p_ae) * (1 - p_in) + (p_in + p_ae * (1 - p_in)) / n
    return p_denoise, 1 - (n - 1) * p_ae / n


def noisy_denoise_simulate(d: Denoiser, p_ae: float, rho_in: np.ndarray) -> DenoiseOutcome:
    """Exact density-matrix run with depolarizing noise after encoder and decoder."""
    rho_in = np.asarray(rho_in, dtype=complex)
    n = d.n
    if rho_in.shape != (n, n):
        raise DimensionError(f"denoiser acts on dimension {n}, got state of shape {rho_in.shape}")
    if not 0 <= p_ae <= 1:
        raise ValueError("p_ae must lie in [0, 1]")
    r = d.encoder @ rho_in @ d.encoder.conj().T
    r = (1 - p_ae) * r + p_ae * np.trace(r).real * np.eye(n) / n
    latent = r[:d.k, :d.k]
    g = float(np.trace(latent).real)
    if g <= ZERO_SUCCESS:
        return DenoiseOutcome(None, g)
    w = d.decoder[:, :d.k]
    out = w @ latent @ w.conj().T / g
    out = (1 - p_ae) * out + p_ae * np.eye(n) / n
    return DenoiseOutcome(0.5 * (out + out.conj().T), g)
