"""Post-selected autoencoder denoising of qudit states.

Submodules: ``qstate`` (states, Haar sampling, spectra), ``channels``
(noise models), ``denoiser`` (training and denoising), ``analytics``
(closed-form oracles), ``applications`` (distillation cost, cooling),
``mesh`` (MZI-mesh parameterization) and ``cli``.
"""

__version__ = "0.1.0"

from .qstate import (
    DimensionError,
    Subspace,
    dominant_projector,
    eigen_decompose,
    fidelity,
    haar_random_state,
    haar_random_unitary,
    random_subspace,
    sample_in_subspace,
)
from .channels import (
    KrausChannel,
    UnitaryMixture,
    amplitude_damping,
    depolarizing,
    dit_flip,
    dit_phase_flip,
    fixed_state_mix,
    gaussian_phase,
    gibbs_state,
    make_channel,
    phase_flip,
)
from .denoiser import (
    Denoiser,
    OptimizerConfig,
    average_fidelity_mc,
    build_perfect_denoiser,
    denoise,
    ensemble_state,
    quenched_fidelity,
    train_fidelity,
    train_population,
)
from .mesh import MeshParams, mesh_from_unitary, unitary_from_mesh
