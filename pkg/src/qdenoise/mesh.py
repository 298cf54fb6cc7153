"""Rectangular MZI-mesh parameterization of N x N unitaries.

Block convention (fixed for the whole package): an MZI on adjacent modes
(m, m+1) with angles (theta, phi) acts as

    T(theta, phi) = [[exp(i phi) cos(theta), -sin(theta)],
                     [exp(i phi) sin(theta),  cos(theta)]]

and is the identity at theta = phi = 0.  A mesh applies its blocks in list
order (layer by layer) followed by a diagonal of output phases:

    U = diag(exp(i output_phases)) @ T_last @ ... @ T_first

:func:`mesh_from_unitary` uses the Clements nulling scheme, so the layout
has N(N-1)/2 blocks in N layers.  Branches: theta in [0, pi/2],
phi in (-pi, pi]; when theta == 0 the block is canonicalized to phi = 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .qstate import DimensionError, check_unitary

__all__ = [
    "MZIBlock",
    "MeshParams",
    "mzi",
    "mesh_layout",
    "unitary_from_mesh",
    "mesh_from_unitary",
    "single_photon_populations",
    "coherent_intensities",
    "compute_uncompute_fidelity",
]


@dataclass(frozen=True)
class MZIBlock:
    layer: int
    mode: int  # acts on (mode, mode + 1)
    theta: float
    phi: float


@dataclass(frozen=True)
class MeshParams:
    dim: int
    blocks: tuple[MZIBlock, ...]
    output_phases: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "output_phases", np.asarray(self.output_phases, dtype=float))
        _validate_layout(self)

    def to_vector(self) -> np.ndarray:
        """Flat parameter vector: thetas, then phis, then output phases."""
        th = [b.theta for b in self.blocks]
        ph = [b.phi for b in self.blocks]
        return np.concatenate([th, ph, self.output_phases])

    @classmethod
    def from_vector(cls, dim: int, x: np.ndarray) -> "MeshParams":
        layout = mesh_layout(dim)
        nb = len(layout)
        x = np.asarray(x, dtype=float)
        if x.shape != (2 * nb + dim,):
            raise ValueError(f"expected {2 * nb + dim} parameters for N={dim}, got {x.shape}")
        blocks = [MZIBlock(l, m, x[i], x[nb + i]) for i, (l, m) in enumerate(layout)]
        return cls(dim, blocks, x[2 * nb:])

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "blocks": [
                {"layer": b.layer, "modes": [b.mode, b.mode + 1], "theta": b.theta, "phi": b.phi}
                for b in self.blocks
            ],
            "output_phases": [float(x) for x in self.output_phases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MeshParams":
        blocks = []
        for rec in d["blocks"]:
            i, j = rec["modes"]
            if j != i + 1:
                raise ValueError(f"block modes must be adjacent, got {rec['modes']}")
            blocks.append(MZIBlock(int(rec["layer"]), int(i), float(rec["theta"]), float(rec["phi"])))
        return cls(int(d["dim"]), blocks, d["output_phases"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "MeshParams":
        return cls.from_dict(json.loads(text))


def _validate_layout(params: MeshParams) -> None:
    n = params.dim
    if n < 1:
        raise DimensionError("mesh dimension must be positive")
    if len(params.blocks) != n * (n - 1) // 2:
        raise ValueError(f"mesh of dimension {n} needs {n * (n - 1) // 2} blocks, got {len(params.blocks)}")
    if params.output_phases.shape != (n,):
        raise ValueError(f"need {n} output phases, got shape {params.output_phases.shape}")
    used: dict[int, set] = {}
    last_layer = -1
    for b in params.blocks:
        if not 0 <= b.mode < n - 1:
            raise ValueError(f"block on modes ({b.mode}, {b.mode + 1}) out of range for N={n}")
        if b.layer < last_layer:
            raise ValueError("blocks must be listed in non-decreasing layer order")
        last_layer = b.layer
        modes = used.setdefault(b.layer, set())
        if b.mode in modes or b.mode + 1 in modes:
            raise ValueError(f"blocks overlap on layer {b.layer}")
        modes.update((b.mode, b.mode + 1))


def mzi(theta: float, phi: float) -> np.ndarray:
    c, s, e = np.cos(theta), np.sin(theta), np.exp(1j * phi)
    return np.array([[e * c, -s], [e * s, c]])


def _wrap(phi: float) -> float:
    # map to (-pi, pi]
    w = -((-phi + np.pi) % (2 * np.pi) - np.pi)
    return float(w)


def _schedule(modes: list[int], n: int) -> list[tuple[int, int]]:
    """ASAP layer assignment preserving dependencies; returned in layer order."""
    depth = [-1] * n
    tagged = []
    for idx, m in enumerate(modes):
        layer = max(depth[m], depth[m + 1]) + 1
        depth[m] = depth[m + 1] = layer
        tagged.append((layer, idx, m))
    tagged.sort()
    return [(layer, idx) for layer, idx, _ in tagged]


def _clements_order(n: int) -> tuple[list[tuple[str, int, int, int]], list[int]]:
    """Nulling sequence and the application-order list of block modes.

    Each nulling step is (side, row, col, mode): 'R' nulls U[row, col] by
    right-multiplying T^dag on columns (mode, mode+1); 'L' nulls it by
    left-multiplying T on rows (mode, mode+1).
    """
    steps = []
    for i in range(n - 1):
        for j in range(i + 1):
            if i % 2 == 0:
                r, c = n - 1 - j, i - j
                steps.append(("R", r, c, c))
            else:
                r, c = n - 1 - i + j, j
                steps.append(("L", r, c, r - 1))
    rights = [s[3] for s in steps if s[0] == "R"]
    lefts = [s[3] for s in steps if s[0] == "L"]
    # U = D' T'_1 ... T'_k R_k ... R_1: apply R_1..R_k, then T'_k..T'_1.
    app_modes = rights + lefts[::-1]
    return steps, app_modes


@lru_cache(maxsize=None)
def mesh_layout(n: int) -> tuple[tuple[int, int], ...]:
    """(layer, mode) of every block, in the order stored in :class:`MeshParams`."""
    _, app_modes = _clements_order(n)
    return tuple((layer, app_modes[idx]) for layer, idx in _schedule(app_modes, n))


def unitary_from_mesh(params: MeshParams) -> np.ndarray:
    n = params.dim
    u = np.eye(n, dtype=complex)
    for b in params.blocks:
        t = mzi(b.theta, b.phi)
        u[b.mode:b.mode + 2, :] = t @ u[b.mode:b.mode + 2, :]
    return np.exp(1j * params.output_phases)[:, None] * u


def _unitary_from_vector(n: int, x: np.ndarray) -> np.ndarray:
    # Fast path used inside optimizers; skips dataclass construction.
    layout = mesh_layout(n)
    nb = len(layout)
    th, ph, out = x[:nb], x[nb:2 * nb], x[2 * nb:]
    c, s, e = np.cos(th), np.sin(th), np.exp(1j * ph)
    u = np.eye(n, dtype=complex)
    for i, (_, m) in enumerate(layout):
        r0 = u[m].copy()
        r1 = u[m + 1]
        u[m] = e[i] * c[i] * r0 - s[i] * r1
        u[m + 1] = e[i] * s[i] * r0 + c[i] * r1
    return np.exp(1j * out)[:, None] * u


def mesh_from_unitary(u: np.ndarray, atol: float = 1e-10) -> MeshParams:
    """Clements decomposition of ``u`` into the rectangular mesh."""
    u = check_unitary(u, atol=atol).copy()
    n = u.shape[0]
    steps, app_modes = _clements_order(n)
    tiny = 1e-14
    rights, lefts = [], []
    for side, r, c, m in steps:
        if side == "R":
            a, b = u[r, m], u[r, m + 1]  # null a
            if abs(a) <= tiny:
                theta, phi = 0.0, 0.0
            else:
                theta = float(np.arctan2(abs(a), abs(b)))
                phi = _wrap(np.angle(a) - np.angle(b)) if abs(b) > tiny else _wrap(np.angle(a))
            u[:, m:m + 2] = u[:, m:m + 2] @ mzi(theta, phi).conj().T
            rights.append((theta, phi))
        else:
            a, b = u[r, c], u[r - 1, c]  # null a (lower row) against b
            if abs(a) <= tiny:
                theta, phi = 0.0, 0.0
            else:
                theta = float(np.arctan2(abs(a), abs(b)))
                phi = _wrap(np.pi + np.angle(a) - np.angle(b)) if abs(b) > tiny else _wrap(np.pi + np.angle(a))
            u[m:m + 2, :] = mzi(theta, phi) @ u[m:m + 2, :]
            lefts.append((theta, phi, m))
    # u is now diagonal: D = L U R^dag, so U = L^dag D R.  Commute each
    # T^dag through D, innermost (last nulled) first.
    d = np.diag(u).copy()
    moved = []
    for theta, phi, m in reversed(lefts):
        d1, d2 = d[m], d[m + 1]
        if theta == 0.0:
            d[m] = np.exp(-1j * phi) * d1
            moved.append((0.0, 0.0))
        else:
            d[m] = -np.exp(-1j * phi) * d2
            moved.append((theta, _wrap(np.pi + np.angle(d1) - np.angle(d2))))
    # ``moved`` lists T'_k ... T'_1, which is exactly application order after the rights.
    params_app = rights + moved
    order = _schedule(app_modes, n)
    blocks = [MZIBlock(layer, app_modes[idx], *params_app[idx]) for layer, idx in order]
    return MeshParams(n, blocks, np.angle(d))


def _check_mode(u: np.ndarray, mode: int) -> None:
    if not 0 <= mode < u.shape[0]:
        raise DimensionError(f"input mode {mode} out of range for N={u.shape[0]}")


def single_photon_populations(u: np.ndarray, input_mode: int) -> np.ndarray:
    """Mean photon number per output mode for one photon in ``input_mode``.

    Uses the creation-operator convention a_k^dag -> sum_l U_kl a_l^dag, so
    the populations are the squared moduli of row ``input_mode``.
    """
    u = np.asarray(u)
    _check_mode(u, input_mode)
    amps = u[input_mode, :]
    return np.abs(amps) ** 2


def coherent_intensities(u: np.ndarray, input_mode: int, alpha: complex) -> np.ndarray:
    """Output intensities for a coherent state |alpha> in ``input_mode``.

    A displaced vacuum stays a product of coherent states with amplitudes
    alpha * U[input_mode, l]; the intensity of each is |amplitude|^2.
    """
    u = np.asarray(u)
    _check_mode(u, input_mode)
    beta = alpha * u[input_mode, :]
    return (beta * np.conj(beta)).real


def compute_uncompute_fidelity(t: np.ndarray, rho: np.ndarray) -> float:
    """<0| T^dag rho T |0>, the fidelity of ``rho`` against T|0>."""
    t = np.asarray(t)
    rho = np.asarray(rho)
    if t.shape != rho.shape:
        raise DimensionError(f"dimension mismatch: T {t.shape} vs rho {rho.shape}")
    col = t[:, 0]
    return float(np.real(np.conj(col) @ rho @ col))
