"""Qudit states, Haar sampling, fidelity and spectral primitives.

States are plain numpy arrays: a pure state is a length-N complex vector and
a density matrix an N x N complex array.  Most functions also accept stacks
of states along leading axes so Monte Carlo loops can stay vectorized.

All randomness comes from an explicit :class:`numpy.random.Generator`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "DimensionError",
    "Subspace",
    "EigenDecomposition",
    "as_rng",
    "phase_fix",
    "check_pure_state",
    "check_density_matrix",
    "check_unitary",
    "dagger",
    "ket_to_dm",
    "haar_random_state",
    "haar_random_states",
    "haar_random_unitary",
    "random_subspace",
    "sample_in_subspace",
    "sample_in_subspace_batch",
    "random_density_matrix",
    "fidelity",
    "eigen_decompose",
    "dominant_projector",
]

# Eigenvalues closer than this are treated as degenerate.
TIE_TOL = 1e-10
# Smallest modulus counted as a "nonzero" component when fixing global phase.
PHASE_TOL = 1e-10


class DimensionError(ValueError):
    """Raised for invalid or mismatched Hilbert-space dimensions."""


def as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def ket_to_dm(psi: np.ndarray) -> np.ndarray:
    """|psi><psi| for a single ket or a stack of kets."""
    psi = np.asarray(psi)
    return psi[..., :, None] * np.conj(psi[..., None, :])


def phase_fix(vecs: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the first nonzero entry is real positive.

    Works on a single vector, or on the columns of a matrix when ``vecs`` is
    2-D (the layout used for eigenvector matrices and subspace bases).
    """
    vecs = np.array(vecs, dtype=complex)
    if vecs.ndim == 1:
        nz = np.flatnonzero(np.abs(vecs) > PHASE_TOL)
        if nz.size:
            lead = vecs[nz[0]]
            vecs = vecs * (np.abs(lead) / lead)
        return vecs
    for j in range(vecs.shape[1]):
        vecs[:, j] = phase_fix(vecs[:, j])
    return vecs


def _phase_fix_rows(vecs: np.ndarray) -> np.ndarray:
    # Batched variant for stacks of kets (..., N).
    mask = np.abs(vecs) > PHASE_TOL
    first = np.argmax(mask, axis=-1)
    lead = np.take_along_axis(vecs, first[..., None], axis=-1)
    lead = np.where(np.abs(lead) > PHASE_TOL, lead, 1.0)
    return vecs * (np.abs(lead) / lead)


def check_pure_state(psi: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise DimensionError(f"pure state must be a vector, got shape {psi.shape}")
    norm2 = float(np.vdot(psi, psi).real)
    if abs(norm2 - 1.0) > atol:
        raise ValueError(f"state is not normalized: |psi|^2 = {norm2!r}")
    return psi


def check_density_matrix(rho: np.ndarray, atol: float = 1e-12, psd_tol: float = 1e-10) -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity; return ``rho``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
    if herm > atol:
        raise ValueError(f"density matrix is not Hermitian (max deviation {herm:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > atol:
        raise ValueError(f"density matrix trace is {tr!r}, expected 1")
    lam_min = np.linalg.eigvalsh(rho).min()
    if lam_min < -psd_tol:
        raise ValueError(f"density matrix has negative eigenvalue {lam_min:.3e}")
    return rho


def check_unitary(u: np.ndarray, atol: float = 1e-10) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError(f"unitary must be square, got shape {u.shape}")
    err = np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]))
    if err > atol:
        raise ValueError(f"matrix is not unitary (||U^dag U - I||_F = {err:.3e})")
    return u


def _check_dim(n: int, name: str = "N") -> int:
    if int(n) != n or n < 1:
        raise DimensionError(f"{name} must be a positive integer, got {n!r}")
    return int(n)


# ---------------------------------------------------------------------------
# Haar sampling


def haar_random_states(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` Haar-random kets of dimension ``n``, shape ``(size, n)``."""
    n = _check_dim(n)
    z = rng.standard_normal((size, n)) + 1j * rng.standard_normal((size, n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return _phase_fix_rows(z)


def haar_random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    """A Haar-random pure state of dimension ``n`` (phase-fixed)."""
    return haar_random_states(n, 1, rng)[0]


def haar_random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary: QR of a Ginibre matrix with the R-diagonal phases removed."""
    n = _check_dim(n)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


@dataclass(frozen=True)
class Subspace:
    """K-dimensional subspace of C^N given by an orthonormal basis (N x K)."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim != 2 or b.shape[1] > b.shape[0] or b.shape[1] < 1:
            raise DimensionError(f"basis must be N x K with 1 <= K <= N, got {b.shape}")
        err = np.linalg.norm(b.conj().T @ b - np.eye(b.shape[1]))
        if err > 1e-10:
            raise ValueError(f"basis columns are not orthonormal (error {err:.3e})")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def dim_full(self) -> int:
        return self.basis.shape[0]

    @property
    def dim_sub(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def complement(self) -> np.ndarray:
        """Orthonormal basis (N x (N-K)) of the orthogonal complement."""
        q, _ = np.linalg.qr(np.hstack([self.basis, np.eye(self.dim_full)]))
        comp = q[:, self.dim_sub:self.dim_full]
        # QR of [B | I] gives a valid completion; re-orthogonalize against B for safety.
        comp = comp - self.basis @ (self.basis.conj().T @ comp)
        q2, _ = np.linalg.qr(comp)
        return q2

    @classmethod
    def standard(cls, n: int, k: int) -> "Subspace":
        """Span of the first ``k`` computational basis vectors."""
        return cls(np.eye(n, k, dtype=complex))


def random_subspace(n: int, k: int, rng: np.random.Generator) -> Subspace:
    n = _check_dim(n)
    k = _check_dim(k, "K")
    if k > n:
        raise DimensionError(f"K={k} exceeds N={n}")
    return Subspace(haar_random_unitary(n, rng)[:, :k])


def sample_in_subspace_batch(s: Subspace, size: int, rng: np.random.Generator) -> np.ndarray:
    coeffs = haar_random_states(s.dim_sub, size, rng)
    return _phase_fix_rows(coeffs @ s.basis.T)


def sample_in_subspace(s: Subspace, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure state inside ``s``."""
    return sample_in_subspace_batch(s, 1, rng)[0]


def random_density_matrix(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random mixed state from the induced (Hilbert-Schmidt for rank=n) measure."""
    n = _check_dim(n)
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


# ---------------------------------------------------------------------------
# Fidelity and spectra


def fidelity(rho: np.ndarray, psi: np.ndarray) -> float | np.ndarray:
    """<psi|rho|psi>; broadcasts over stacks of states."""
    rho = np.asarray(rho)
    psi = np.asarray(psi)
    if rho.shape[-1] != psi.shape[-1] or rho.shape[-2] != psi.shape[-1]:
        raise DimensionError(f"dimension mismatch: rho {rho.shape} vs psi {psi.shape}")
    val = np.einsum("...i,...ij,...j->...", np.conj(psi), rho, psi)
    val = np.real(val)
    return float(val) if np.ndim(val) == 0 else val


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # column j pairs with eigenvalues[j]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _canonical_basis(q: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis for span(q).

    Projects e_0, e_1, ... in order onto the span and keeps each residual
    that survives Gram-Schmidt, so the result only depends on the subspace,
    not on which eigenvectors the LAPACK driver happened to return.
    """
    n, d = q.shape
    proj = q @ q.conj().T
    out = []
    for i in range(n):
        v = proj[:, i].copy()
        for u in out:
            v -= u * np.vdot(u, v)
        nrm2 = np.vdot(v, v).real
        if nrm2 < 1e-6:
            continue
        v /= np.sqrt(nrm2)
        # one re-orthogonalization pass
        for u in out:
            v -= u * np.vdot(u, v)
        v /= np.linalg.norm(v)
        out.append(v)
        if len(out) == d:
            break
    return np.stack(out, axis=1)


def eigen_decompose(rho: np.ndarray, herm_tol: float = 1e-10) -> EigenDecomposition:
    """Eigenpairs of a Hermitian matrix sorted by descending eigenvalue.

    Degenerate clusters (neighbouring gaps below ``TIE_TOL``) get the
    canonical basis from :func:`_canonical_basis`; every eigenvector is then
    phase-fixed.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {rho.shape}")
    dev = np.max(np.abs(rho - rho.conj().T))
    if dev > herm_tol:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    n = w.size
    i = 0
    while i < n:
        j = i + 1
        while j < n and w[j - 1] - w[j] < TIE_TOL:
            j += 1
        if j - i > 1:
            v[:, i:j] = _canonical_basis(v[:, i:j])
        i = j
    return EigenDecomposition(w, phase_fix(v))


def dominant_projector(rho: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    """Projector onto the ``k`` leading eigenvectors and their eigenvalue mass."""
    rho = np.asarray(rho)
    n = rho.shape[-1]
    k = _check_dim(k, "K")
    if k > n:
        raise DimensionError(f"K={k} exceeds N={n}")
    ed = eigen_decompose(rho)
    v = ed.eigenvectors[:, :k]
    return v @ v.conj().T, float(np.sum(ed.eigenvalues[:k]))
