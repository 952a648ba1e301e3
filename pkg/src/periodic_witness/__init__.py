"""Entanglement witness for photon pairs measured with periodic slit masks."""

from ._version import __version__
from .bound import BoundResult, bound_bracket
from .correlate import (CountMatrix, Permutation, WitnessStatistics, best_permutation,
                        mutual_predictability, poisson_errors, witness_value)
from .errors import (ConvergenceError, ParameterError, ParseError, ResolutionError,
                     UndefinedStatisticsError, UnitError, WitnessError)
from .jointdist import JointMatrix, mask_joint_matrix, rectangle_probability
from .masks import MaskSpec, mask_index
from .model import (DetectionModel, Domain, OpticalSetup, SincApprox, SourceParams,
                    build_detection_model, joint_pdf, separable_model)
from .montecarlo import SimConfig, sample_pairs, simulate_counts
from .witness import WitnessResult, evaluate_witness, scan_grid

__all__ = [
    "__version__", "BoundResult", "bound_bracket", "CountMatrix", "Permutation",
    "WitnessStatistics", "best_permutation", "mutual_predictability", "poisson_errors",
    "witness_value", "ConvergenceError", "ParameterError", "ParseError", "ResolutionError",
    "UndefinedStatisticsError", "UnitError", "WitnessError", "JointMatrix", "mask_joint_matrix",
    "rectangle_probability", "MaskSpec", "mask_index", "DetectionModel", "Domain", "OpticalSetup",
    "SincApprox", "SourceParams", "build_detection_model", "joint_pdf", "separable_model",
    "SimConfig", "sample_pairs", "simulate_counts", "WitnessResult", "evaluate_witness", "scan_grid",
]
