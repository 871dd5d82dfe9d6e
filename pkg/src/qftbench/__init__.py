"""Benchmark quantum annealers with the two-point-measurement fluctuation theorem."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CapacityError,
    ChannelError,
    DegeneracyError,
    EmbeddingError,
    IngestError,
    QFTBenchError,
    ValidationError,
)
from .model import (  # noqa: E402
    AnnealSchedule,
    ChainSpec,
    Observable,
    build_hamiltonian,
    build_omega_final,
    build_omega_initial,
    default_schedule,
    ground_state,
    spectral_decompose,
)
from .noise import NoiseModel, apply_channel, is_unital, kraus_for  # noqa: E402
from .dynamics import (  # noqa: E402
    AnnealMap,
    EvolutionConfig,
    evolve_channel,
    evolve_unitary,
    evolve_unitary_sweep,
    steps_for,
)
from .archive import ShotArchive, ingest  # noqa: E402
from .tpm import (  # noqa: E402
    WorkDistribution,
    efficacy,
    exponential_average,
    ideal_distribution,
    post_measurement_state,
    sample_shots,
    simulate_anneal,
    transition_matrix,
    work_distribution,
)
from .bench import (  # noqa: E402
    Thresholds,
    adiabatic_threshold,
    analyze_archive,
    empirical_distribution,
    final_energy,
    ft_estimate,
    kink_statistics,
    verdicts,
)
from .chimera import build_chimera, random_chain, validate_embedding  # noqa: E402

__all__ = [
    "AnnealMap",
    "AnnealSchedule",
    "CapacityError",
    "ChainSpec",
    "ChannelError",
    "DegeneracyError",
    "EmbeddingError",
    "EvolutionConfig",
    "IngestError",
    "NoiseModel",
    "Observable",
    "QFTBenchError",
    "ShotArchive",
    "Thresholds",
    "ValidationError",
    "WorkDistribution",
    "adiabatic_threshold",
    "analyze_archive",
    "apply_channel",
    "build_chimera",
    "build_hamiltonian",
    "build_omega_final",
    "build_omega_initial",
    "default_schedule",
    "efficacy",
    "empirical_distribution",
    "evolve_channel",
    "evolve_unitary",
    "evolve_unitary_sweep",
    "exponential_average",
    "final_energy",
    "ft_estimate",
    "ground_state",
    "ideal_distribution",
    "ingest",
    "is_unital",
    "kink_statistics",
    "kraus_for",
    "post_measurement_state",
    "random_chain",
    "sample_shots",
    "simulate_anneal",
    "spectral_decompose",
    "steps_for",
    "transition_matrix",
    "validate_embedding",
    "verdicts",
    "work_distribution",
]
