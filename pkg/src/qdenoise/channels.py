"""Noise channels on a single qudit.

Three representations are used:

* :class:`KrausChannel` -- an explicit operator-sum map.
* :class:`FixedStateChannel` -- ``rho -> (1-p) V rho V^dag + p rho_noise``,
  kept in affine form because its Kraus form needs N^2 operators.
* :class:`UnitaryMixture` -- a probabilistic mixture of unitaries, the way
  noise is injected on the photonic chip.

Every channel is a callable acting on a density matrix (or a stack of them
along leading axes) and exposes ``kraus()`` for formulas that need explicit
operators.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .qstate import DimensionError, check_density_matrix, eigen_decompose

__all__ = [
    "KrausChannel",
    "FixedStateChannel",
    "UnitaryMixture",
    "apply",
    "apply_mixture",
    "identity_channel",
    "fixed_state_mix",
    "depolarizing",
    "weyl",
    "dit_flip",
    "phase_flip",
    "dit_phase_flip",
    "amplitude_damping",
    "gaussian_phase",
    "gaussian_dephasing",
    "gibbs_state",
    "make_channel",
    "CHANNEL_KINDS",
]


def _check_prob(p: float, name: str = "p") -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0 or np.isnan(p):
        raise ValueError(f"{name} must lie in [0, 1], got {p!r}")
    return p


def _check_rho_dim(rho: np.ndarray, n: int) -> None:
    if rho.shape[-2:] != (n, n):
        raise DimensionError(f"channel acts on dimension {n}, got state of shape {rho.shape}")


class KrausChannel:
    """Operator-sum channel ``rho -> sum_n M_n rho M_n^dag``."""

    def __init__(self, operators, check: bool = True, atol: float = 1e-10):
        ops = np.array([np.asarray(m, dtype=complex) for m in operators])
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2] or len(ops) == 0:
            raise DimensionError("Kraus operators must be a non-empty list of square matrices")
        ops.setflags(write=False)
        self.operators = ops
        if check:
            err = self.completeness_error()
            if err > atol:
                raise ValueError(f"Kraus operators are not trace preserving (error {err:.3e})")

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    def completeness_error(self) -> float:
        s = np.einsum("nji,njk->ik", self.operators.conj(), self.operators)
        return float(np.linalg.norm(s - np.eye(self.dim)))

    def kraus(self) -> np.ndarray:
        return self.operators

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        _check_rho_dim(rho, self.dim)
        out = np.zeros(np.broadcast_shapes(rho.shape, self.operators.shape[1:]), dtype=complex)
        for m in self.operators:
            out += m @ rho @ m.conj().T
        return out

    def __repr__(self):
        return f"KrausChannel(dim={self.dim}, n_ops={len(self.operators)})"


class FixedStateChannel:
    """Replace the state by ``noise`` with probability ``p``.

    With ``unitary`` set, the surviving branch is rotated by it first,
    ``rho -> (1-p) V rho V^dag + p noise``.
    """

    def __init__(self, p: float, noise: np.ndarray, unitary: np.ndarray | None = None):
        self.p = _check_prob(p)
        self.noise = check_density_matrix(noise, atol=1e-10)
        self.unitary = None if unitary is None else np.asarray(unitary, dtype=complex)
        if self.unitary is not None and self.unitary.shape != self.noise.shape:
            raise DimensionError("coherent unitary and noise state dimensions differ")

    @property
    def dim(self) -> int:
        return self.noise.shape[0]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        _check_rho_dim(rho, self.dim)
        if self.unitary is not None:
            rho = self.unitary @ rho @ self.unitary.conj().T
        tr = np.trace(rho, axis1=-2, axis2=-1)[..., None, None]
        return (1.0 - self.p) * rho + self.p * tr * self.noise

    def kraus(self) -> np.ndarray:
        """Explicit Kraus form.

        Survivor branch sqrt(1-p) V; replacement branch sqrt(p w_i) |chi_i><j|
        over the eigenpairs (w_i, chi_i) of the noise state and all basis j.
        """
        n = self.dim
        v = np.eye(n, dtype=complex) if self.unitary is None else self.unitary
        ops = [np.sqrt(1.0 - self.p) * v]
        if self.p > 0:
            ed = eigen_decompose(self.noise)
            for w, chi in zip(ed.eigenvalues, ed.eigenvectors.T):
                if w <= 1e-15:
                    continue
                amp = np.sqrt(self.p * w)
                for j in range(n):
                    op = np.zeros((n, n), dtype=complex)
                    op[:, j] = amp * chi
                    ops.append(op)
        return np.array(ops)

    def to_kraus(self) -> KrausChannel:
        return KrausChannel(self.kraus())


class UnitaryMixture:
    """``rho -> sum_k p_k V_k rho V_k^dag``."""

    def __init__(self, probabilities, unitaries):
        probs = np.asarray(probabilities, dtype=float)
        us = np.array([np.asarray(u, dtype=complex) for u in unitaries])
        if probs.ndim != 1 or len(probs) != len(us) or len(us) == 0:
            raise ValueError("need one probability per unitary")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"branch probabilities must be >= 0 and sum to 1, got sum {probs.sum()!r}")
        self.probabilities = probs
        self.unitaries = us

    @property
    def dim(self) -> int:
        return self.unitaries.shape[1]

    @property
    def branches(self):
        return list(zip(self.probabilities, self.unitaries))

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        _check_rho_dim(rho, self.dim)
        out = np.zeros(np.broadcast_shapes(rho.shape, self.unitaries.shape[1:]), dtype=complex)
        for pk, v in zip(self.probabilities, self.unitaries):
            out += pk * (v @ rho @ v.conj().T)
        return out

    def kraus(self) -> np.ndarray:
        return np.sqrt(self.probabilities)[:, None, None] * self.unitaries

    def to_kraus(self) -> KrausChannel:
        return KrausChannel(self.kraus())


def apply(ch, rho: np.ndarray) -> np.ndarray:
    return ch(rho)


def apply_mixture(mix: UnitaryMixture, rho: np.ndarray) -> np.ndarray:
    return mix(rho)


def identity_channel(n: int) -> KrausChannel:
    return KrausChannel([np.eye(n)])


def fixed_state_mix(p: float, noise: np.ndarray, unitary: np.ndarray | None = None) -> FixedStateChannel:
    return FixedStateChannel(p, noise, unitary)


def depolarizing(p: float, n: int) -> FixedStateChannel:
    return FixedStateChannel(p, np.eye(n) / n)


def weyl(m: int, n: int, dim: int) -> np.ndarray:
    """W_mn = sum_j w^(j m) |j><j + n mod N|, w = exp(2 pi i / N)."""
    if not (0 <= m < dim and 0 <= n < dim):
        raise ValueError(f"Weyl indices ({m}, {n}) out of range for N={dim}")
    j = np.arange(dim)
    w = np.zeros((dim, dim), dtype=complex)
    w[j, (j + n) % dim] = np.exp(2j * np.pi * j * m / dim)
    return w


def _flip_check(p: float, n: int) -> float:
    p = _check_prob(p)
    if n < 2:
        raise DimensionError("flip channels need N >= 2")
    return p


def dit_flip(p: float, n: int) -> KrausChannel:
    p = _flip_check(p, n)
    ops = [np.sqrt(1 - p) * np.eye(n)]
    if p > 0:
        ops += [np.sqrt(p / (n - 1)) * weyl(0, j, n) for j in range(1, n)]
    return KrausChannel(ops)


def phase_flip(p: float, n: int) -> KrausChannel:
    p = _flip_check(p, n)
    ops = [np.sqrt(1 - p) * np.eye(n)]
    if p > 0:
        ops += [np.sqrt(p / (n - 1)) * weyl(j, 0, n) for j in range(1, n)]
    return KrausChannel(ops)


def dit_phase_flip(p: float, n: int) -> KrausChannel:
    p = _flip_check(p, n)
    ops = [np.sqrt(1 - p) * np.eye(n)]
    if p > 0:
        amp = np.sqrt(p) / (n - 1)
        ops += [amp * weyl(a, b, n) for a in range(1, n) for b in range(1, n)]
    return KrausChannel(ops)


def amplitude_damping(p: float, n: int) -> KrausChannel:
    p = _check_prob(p)
    e0 = np.diag([1.0] + [np.sqrt(1 - p)] * (n - 1)).astype(complex)
    ops = [e0]
    if p > 0:
        for j in range(1, n):
            e = np.zeros((n, n), dtype=complex)
            e[0, j] = np.sqrt(p)
            ops.append(e)
    return KrausChannel(ops)


def gaussian_phase(sigma: float, n: int, n_samples: int, rng: np.random.Generator) -> UnitaryMixture:
    """Empirical thermal noise: equiprobable random diagonal phase unitaries.

    Each branch is diag(exp(i theta_j)) with theta_j ~ Normal(0, sigma^2)
    drawn independently per mode.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma!r}")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    theta = sigma * rng.standard_normal((n_samples, n))
    us = np.zeros((n_samples, n, n), dtype=complex)
    idx = np.arange(n)
    us[:, idx, idx] = np.exp(1j * theta)
    return UnitaryMixture(np.full(n_samples, 1.0 / n_samples), us)


def gaussian_dephasing(sigma: float, n: int) -> KrausChannel:
    """Infinite-sample limit of :func:`gaussian_phase`.

    Off-diagonal entries shrink by exp(-sigma^2).  The Kraus form comes from
    the spectral decomposition of the (PSD) Schur multiplier.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma!r}")
    damp = np.exp(-sigma**2)
    c = np.full((n, n), damp) + (1 - damp) * np.eye(n)
    w, v = np.linalg.eigh(c)
    ops = [np.diag(np.sqrt(wi) * v[:, i]) for i, wi in enumerate(w) if wi > 1e-14]
    return KrausChannel(ops)


def gibbs_state(h: np.ndarray, beta: float) -> np.ndarray:
    """exp(-beta H) / Z, built from the eigendecomposition of H."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError(f"Hamiltonian must be square, got shape {h.shape}")
    dev = np.max(np.abs(h - h.conj().T))
    if dev > 1e-10:
        raise ValueError(f"Hamiltonian is not Hermitian (max deviation {dev:.3e})")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    e, v = scipy.linalg.eigh(0.5 * (h + h.conj().T))
    # shift by the ground energy so exp() cannot overflow
    w = np.exp(-beta * (e - e[0]))
    w /= w.sum()
    return (v * w) @ v.conj().T


CHANNEL_KINDS = (
    "identity",
    "depolarizing",
    "dit_flip",
    "phase_flip",
    "dit_phase_flip",
    "amplitude_damping",
    "gaussian_phase",
    "dephasing",
)


def make_channel(kind: str, n: int, rng: np.random.Generator | None = None, **params):
    """Build a channel from a kind tag and keyword parameters.

    ``p`` is the noise probability for the probabilistic channels, ``sigma``
    the phase standard deviation for ``gaussian_phase``/``dephasing``
    (``gaussian_phase`` also takes ``n_samples`` and needs ``rng``).
    """
    if kind == "identity":
        return identity_channel(n)
    if kind in ("depolarizing", "dit_flip", "phase_flip", "dit_phase_flip", "amplitude_damping"):
        if "p" not in params:
            raise ValueError(f"channel '{kind}' requires parameter 'p'")
        ctor = {
            "depolarizing": depolarizing,
            "dit_flip": dit_flip,
            "phase_flip": phase_flip,
            "dit_phase_flip": dit_phase_flip,
            "amplitude_damping": amplitude_damping,
        }[kind]
        return ctor(params["p"], n)
    if kind == "gaussian_phase":
        if rng is None:
            raise ValueError("gaussian_phase needs an rng")
        return gaussian_phase(params.get("sigma", 0.0), n, int(params.get("n_samples", 1000)), rng)
    if kind == "dephasing":
        return gaussian_dephasing(params.get("sigma", 0.0), n)
    raise ValueError(f"unknown channel kind {kind!r}; expected one of {CHANNEL_KINDS}")

