"""Model checking of continuous stochastic logic over quantum CTMCs."""
from .csl import ModelFormula, PathFormula, Verdict, check, parse, sat_set, to_text
from .expm import ExpmCache, ExpmOptions, expm
from .measure import (
    CylinderSpec,
    CylinderStep,
    MeasureResult,
    QuadratureOptions,
    UntilSpec,
    cylinder_measure,
    phase_integral,
    until_measure,
)
from .model import (
    InstantaneousDescription,
    JumpOperator,
    QuantumCtmc,
    adapted_governing_matrix,
    apollonian_gen1,
    embed_classical,
    extract_id,
    governing_matrix,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "ModelFormula",
    "PathFormula",
    "Verdict",
    "check",
    "parse",
    "sat_set",
    "to_text",
    "ExpmCache",
    "ExpmOptions",
    "expm",
    "CylinderSpec",
    "CylinderStep",
    "MeasureResult",
    "QuadratureOptions",
    "UntilSpec",
    "cylinder_measure",
    "phase_integral",
    "until_measure",
    "InstantaneousDescription",
    "JumpOperator",
    "QuantumCtmc",
    "adapted_governing_matrix",
    "apollonian_gen1",
    "embed_classical",
    "extract_id",
    "governing_matrix",
    "validate",
]
