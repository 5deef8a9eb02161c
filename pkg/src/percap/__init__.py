"""percap: pattern capacity of classical and continuous-variable quantum perceptrons.

Analytic capacity formulas from the replica-symmetric sphere calculation,
desk-scale Monte Carlo feasibility experiments, a Gaussian circuit
simulator for the homodyne perceptron, and Gardner-volume estimators.
"""

from .capacity import (
    SaddlePoint,
    TheoryParams,
    capacity_from_saddle,
    classical_capacity,
    effective_stability,
    free_energy,
    quantum_capacity,
    saddle_overlap,
)
from .errors import (
    ConvergenceError,
    DegenerateWeightError,
    DivergedError,
    DomainError,
    MonotonicityError,
    NumericalFailureError,
    PercapError,
    StageFailureError,
)
from .percep import (
    PatternSet,
    WeightVector,
    classify_classical,
    classify_quantum,
    empirical_capacity,
    generate_patterns,
    is_satisfiable,
    max_stability,
    quantum_feasible,
    reliability,
    stabilities,
    xor_patterns,
)
from .qsim import GaussianState, encode, homodyne_sample, run_perceptron_circuit
from .rng import stream, substream_seed
from .volume import (
    VolumeEstimate,
    hit_or_miss,
    log_c_n,
    sample_sphere,
    self_averaging_probe,
    sequential_volume,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "SaddlePoint",
    "TheoryParams",
    "capacity_from_saddle",
    "classical_capacity",
    "effective_stability",
    "free_energy",
    "quantum_capacity",
    "saddle_overlap",
    "PercapError",
    "DomainError",
    "DivergedError",
    "ConvergenceError",
    "NumericalFailureError",
    "StageFailureError",
    "DegenerateWeightError",
    "MonotonicityError",
    "PatternSet",
    "WeightVector",
    "classify_classical",
    "classify_quantum",
    "empirical_capacity",
    "generate_patterns",
    "is_satisfiable",
    "max_stability",
    "quantum_feasible",
    "reliability",
    "stabilities",
    "xor_patterns",
    "GaussianState",
    "encode",
    "homodyne_sample",
    "run_perceptron_circuit",
    "stream",
    "substream_seed",
    "VolumeEstimate",
    "hit_or_miss",
    "log_c_n",
    "sample_sphere",
    "self_averaging_probe",
    "sequential_volume",
]
