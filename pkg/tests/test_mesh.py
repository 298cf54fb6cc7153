import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdenoise import mesh
from qdenoise import qstate as qs


def test_identity_mesh():
    layout = mesh.mesh_layout(4)
    params = mesh.MeshParams(4, [mesh.MZIBlock(l, m, 0.0, 0.0) for l, m in layout], np.zeros(4))
    assert np.allclose(mesh.unitary_from_mesh(params), np.eye(4))


def test_single_block_unitary():
    for theta in np.linspace(0, np.pi / 2, 7):
        for phi in np.linspace(-np.pi, np.pi, 5):
            u = mesh.mzi(theta, phi)
            assert np.allclose(np.linalg.norm(u, axis=0), 1)
            assert np.abs(u.conj().T @ u - np.eye(2)).max() < 1e-14


def test_layout_shape():
    for n in range(1, 9):
        layout = mesh.mesh_layout(n)
        assert len(layout) == n * (n - 1) // 2
        assert max((l for l, _ in layout), default=-1) < n
    assert mesh.mesh_layout(4) == ((0, 0), (0, 2), (1, 1), (2, 0), (2, 2), (3, 1))


def test_round_trip_haar(rng):
    for n in range(1, 9):
        for _ in range(125):
            u = qs.haar_random_unitary(n, rng)
            back = mesh.unitary_from_mesh(mesh.mesh_from_unitary(u))
            assert np.linalg.norm(back - u) < 1e-8


def test_round_trip_large(rng):
    for n in (10, 12):
        u = qs.haar_random_unitary(n, rng)
        assert np.linalg.norm(mesh.unitary_from_mesh(mesh.mesh_from_unitary(u)) - u) < 1e-8


def test_canonical_forms():
    p = mesh.mesh_from_unitary(np.eye(5))
    assert all(b.theta == 0 and b.phi == 0 for b in p.blocks)
    assert np.allclose(p.output_phases, 0)
    phases = np.array([0.3, -1.2, 2.0, 0.0])
    p = mesh.mesh_from_unitary(np.diag(np.exp(1j * phases)))
    assert all(b.theta == 0 for b in p.blocks)
    assert np.allclose(p.output_phases, phases)


def test_branch_conventions(rng):
    p = mesh.mesh_from_unitary(qs.haar_random_unitary(6, rng))
    for b in p.blocks:
        assert 0 <= b.theta <= np.pi / 2
        assert -np.pi < b.phi <= np.pi


def test_rejects_non_unitary():
    with pytest.raises(ValueError):
        mesh.mesh_from_unitary(np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_malformed_layout():
    with pytest.raises(ValueError):
        mesh.MeshParams(3, [mesh.MZIBlock(0, 0, 0.1, 0.1)], np.zeros(3))
    with pytest.raises(ValueError):
        mesh.MeshParams(3, [mesh.MZIBlock(0, 0, 0, 0), mesh.MZIBlock(0, 1, 0, 0), mesh.MZIBlock(1, 0, 0, 0)], np.zeros(3))


def test_json_round_trip(rng):
    p = mesh.mesh_from_unitary(qs.haar_random_unitary(5, rng))
    q = mesh.MeshParams.from_json(p.to_json())
    assert np.allclose(mesh.unitary_from_mesh(q), mesh.unitary_from_mesh(p), atol=1e-14)
    assert q.to_dict() == p.to_dict()


def test_vector_fast_path(rng):
    p = mesh.mesh_from_unitary(qs.haar_random_unitary(5, rng))
    x = p.to_vector()
    assert np.allclose(mesh._unitary_from_vector(5, x), mesh.unitary_from_mesh(p), atol=1e-14)
    assert np.allclose(mesh.MeshParams.from_vector(5, x).to_vector(), x)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 6), seed=st.integers(0, 2**32 - 1))
def test_parameter_round_trip(n, seed):
    # generic parameters inside the branch ranges come back unchanged
    rng = np.random.default_rng(seed)
    nb = n * (n - 1) // 2
    x = np.concatenate([rng.uniform(0.05, np.pi / 2 - 0.05, nb), rng.uniform(-3.0, 3.0, nb), rng.uniform(-3.0, 3.0, n)])
    u = mesh._unitary_from_vector(n, x)
    assert np.allclose(mesh.mesh_from_unitary(u).to_vector(), x, atol=1e-8)


def test_photon_populations(rng):
    pops = mesh.single_photon_populations(np.eye(4), 0)
    assert np.allclose(pops, [1, 0, 0, 0])
    u = qs.haar_random_unitary(5, rng)
    assert abs(mesh.single_photon_populations(u, 2).sum() - 1) < 1e-12
    with pytest.raises(qs.DimensionError):
        mesh.single_photon_populations(u, 5)


def test_coherent_intensities(rng):
    u = qs.haar_random_unitary(5, rng)
    assert np.allclose(mesh.coherent_intensities(u, 1, 0.0), 0)
    alpha = np.exp(0.4j)
    assert np.abs(mesh.coherent_intensities(u, 1, alpha) - mesh.single_photon_populations(u, 1)).max() < 1e-12
    assert np.allclose(mesh.coherent_intensities(np.eye(3), 0, 2.0), [4, 0, 0])


def test_compute_uncompute(rng):
    t = qs.haar_random_unitary(4, rng)
    col = t[:, 0]
    assert abs(mesh.compute_uncompute_fidelity(t, np.outer(col, col.conj())) - 1) < 1e-12
    assert abs(mesh.compute_uncompute_fidelity(t, np.eye(4) / 4) - 0.25) < 1e-12
    rho = qs.random_density_matrix(4, rng)
    assert abs(mesh.compute_uncompute_fidelity(t, rho) - qs.fidelity(rho, col)) < 1e-12
    with pytest.raises(qs.DimensionError):
        mesh.compute_uncompute_fidelity(t, np.eye(3) / 3)
