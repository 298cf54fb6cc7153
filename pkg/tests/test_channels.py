import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdenoise import channels as ch
from qdenoise import qstate as qs

KRAUS_FACTORIES = [ch.dit_flip, ch.phase_flip, ch.dit_phase_flip, ch.amplitude_damping, ch.depolarizing]


def completeness(chan):
    ops = chan.kraus()
    return np.einsum("kji,kjl->il", ops.conj(), ops)


def test_identity_channel(rng):
    rho = qs.random_density_matrix(3, rng)
    assert np.allclose(ch.apply(ch.identity_channel(3), rho), rho, atol=1e-15)


def test_depolarizing_examples(rng):
    rho = qs.random_density_matrix(4, rng)
    assert np.allclose(ch.depolarizing(1.0, 4)(rho), np.eye(4) / 4, atol=1e-12)
    assert np.allclose(ch.depolarizing(0.0, 4)(rho), rho, atol=1e-15)
    psi = qs.haar_random_state(5, rng)
    assert abs(qs.fidelity(ch.depolarizing(0.5, 5)(qs.ket_to_dm(psi)), psi) - 0.6) < 1e-12


def test_fixed_state_mix(rng):
    noise = qs.random_density_matrix(3, rng)
    rho = qs.random_density_matrix(3, rng)
    assert np.allclose(ch.fixed_state_mix(0.0, noise)(rho), rho)
    assert np.allclose(ch.fixed_state_mix(1.0, noise)(rho), noise)
    psi = qs.haar_random_state(3, rng)
    out = ch.fixed_state_mix(0.4, np.eye(3) / 3)(qs.ket_to_dm(psi))
    assert abs(qs.fidelity(out, psi) - (0.6 + 0.4 / 3)) < 1e-12
    with pytest.raises(ValueError):
        ch.fixed_state_mix(1.2, noise)


def test_fixed_state_kraus_form_matches_affine(rng):
    noise = qs.random_density_matrix(4, rng, rank=2)
    v = qs.haar_random_unitary(4, rng)
    chan = ch.fixed_state_mix(0.3, noise, v)
    rho = qs.random_density_matrix(4, rng)
    assert np.allclose(chan.to_kraus()(rho), chan(rho), atol=1e-12)
    assert np.allclose(completeness(chan), np.eye(4), atol=1e-12)


def test_dit_flip_qubit_example():
    out = ch.dit_flip(0.3, 2)(np.diag([1.0, 0.0]).astype(complex))
    assert np.allclose(out, np.diag([0.7, 0.3]), atol=1e-15)


def test_amplitude_damping_examples(rng):
    out = ch.amplitude_damping(0.4, 2)(np.diag([0.0, 1.0]).astype(complex))
    assert np.allclose(out, np.diag([0.4, 0.6]), atol=1e-15)
    rho = qs.random_density_matrix(4, rng)
    ground = np.zeros((4, 4))
    ground[0, 0] = 1
    assert np.allclose(ch.amplitude_damping(1.0, 4)(rho), ground, atol=1e-12)
    assert np.allclose(ch.amplitude_damping(0.0, 4)(rho), rho, atol=1e-15)


def test_weyl_operators():
    assert np.allclose(ch.weyl(0, 0, 3), np.eye(3))
    assert np.allclose(ch.weyl(0, 1, 2), [[0, 1], [1, 0]])
    assert np.allclose(ch.weyl(1, 0, 2), [[1, 0], [0, -1]])
    for n in range(1, 8):
        for m in range(n):
            for k in range(n):
                w = ch.weyl(m, k, n)
                assert np.abs(w @ w.conj().T - np.eye(n)).max() < 1e-12
    with pytest.raises(ValueError):
        ch.weyl(3, 0, 3)


@pytest.mark.parametrize("make", [ch.dit_flip, ch.phase_flip, ch.dit_phase_flip])
def test_flip_channels(make):
    assert len(make(0.0, 3).kraus()) == 1
    for n in range(2, 8):
        for p in (0.0, 0.3, 1.0):
            assert np.abs(completeness(make(p, n)) - np.eye(n)).max() < 1e-12
    with pytest.raises(qs.DimensionError):
        make(0.2, 1)


def test_phase_flip_keeps_populations(rng):
    rho = qs.random_density_matrix(5, rng)
    out = ch.phase_flip(0.7, 5)(rho)
    assert np.allclose(np.diag(out), np.diag(rho), atol=1e-14)


def test_gaussian_phase(rng):
    assert all(np.allclose(u, np.eye(3)) for _, u in ch.gaussian_phase(0.0, 3, 5, rng).branches)
    rho = qs.random_density_matrix(3, rng)
    sigma = 0.6
    out = ch.gaussian_phase(sigma, 3, 200_000, rng)(rho)
    assert np.allclose(np.diag(out), np.diag(rho), atol=1e-14)
    off = ~np.eye(3, dtype=bool)
    assert np.abs(out[off] - np.exp(-sigma**2) * rho[off]).max() < 5e-3
    assert np.allclose(ch.gaussian_dephasing(sigma, 3)(rho)[off], np.exp(-sigma**2) * rho[off], atol=1e-12)
    with pytest.raises(ValueError):
        ch.gaussian_phase(-0.1, 3, 5, rng)


def test_unitary_mixture(rng):
    rho = qs.random_density_matrix(3, rng)
    u = qs.haar_random_unitary(3, rng)
    assert np.allclose(ch.apply_mixture(ch.UnitaryMixture([1.0], [u]), rho), u @ rho @ u.conj().T)
    assert np.allclose(ch.UnitaryMixture([0.5, 0.5], [np.eye(3), np.eye(3)])(rho), rho)
    mix = ch.gaussian_phase(0.8, 3, 7, rng)
    assert np.abs(ch.apply(mix.to_kraus(), rho) - mix(rho)).max() < 1e-12
    with pytest.raises(ValueError):
        ch.UnitaryMixture([0.5, 0.6], [np.eye(2), np.eye(2)])


def test_gibbs_state():
    assert np.allclose(ch.gibbs_state(np.diag([0.0, 1.0, 5.0]), 0.0), np.eye(3) / 3)
    cold = ch.gibbs_state(np.diag([0.0, 1.0]), 60.0)
    assert abs(cold[0, 0] - 1) < 1e-20
    pops = np.exp(-np.arange(3.0))
    assert np.allclose(np.diag(ch.gibbs_state(np.diag([0.0, 1.0, 2.0]), 1.0)), pops / pops.sum(), atol=1e-15)
    with pytest.raises(ValueError):
        ch.gibbs_state(np.array([[0, 1], [0, 0]]), 1.0)


def test_gibbs_commutes_with_hamiltonian(rng):
    for _ in range(20):
        n = int(rng.integers(2, 8))
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = (g + g.conj().T) / 2
        rho = ch.gibbs_state(h, rng.uniform(0, 3))
        assert np.abs(rho @ h - h @ rho).max() < 1e-10


def test_completeness_sweep():
    for make in KRAUS_FACTORIES:
        for n in range(2, 9):
            for p in (0, 0.25, 0.5, 0.75, 1):
                assert np.abs(completeness(make(p, n)) - np.eye(n)).max() < 1e-10


def test_kraus_channel_rejects_incomplete():
    with pytest.raises(ValueError):
        ch.KrausChannel([0.5 * np.eye(2)])


def test_dimension_mismatch(rng):
    with pytest.raises(qs.DimensionError):
        ch.dit_flip(0.2, 3)(np.eye(2) / 2)


def test_make_channel():
    assert isinstance(ch.make_channel("dit_flip", 3, p=0.1), ch.KrausChannel)
    with pytest.raises(ValueError):
        ch.make_channel("dit_flip", 3)
    with pytest.raises(ValueError):
        ch.make_channel("warp", 3, p=0.1)


@settings(max_examples=60, deadline=None)
@given(
    idx=st.integers(0, len(KRAUS_FACTORIES) - 1),
    n=st.integers(2, 6),
    p=st.floats(0, 1),
    seed=st.integers(0, 2**32 - 1),
)
def test_channels_map_states_to_states(idx, n, p, seed):
    rho = qs.random_density_matrix(n, np.random.default_rng(seed))
    out = KRAUS_FACTORIES[idx](p, n)(rho)
    assert abs(np.trace(out).real - 1) < 1e-12
    assert np.abs(out - out.conj().T).max() < 1e-12
    assert np.linalg.eigvalsh(out).min() > -1e-10
