"""Classical dipole emission near a diamond surface facing a planar mirror."""
from ._backend import BACKEND
from .collection import (
    CollectionGeometry,
    EnhancementMap,
    collected_power,
    enhancement,
    enhancement_map,
    normalized_model_enhancement,
)
from .dipole import (
    GEOMETRIC_WEIGHTS,
    REPORTED_WEIGHTS,
    DecayRates,
    EmitterEnvironment,
    OrientationWeights,
    angular_pattern,
    mirror_environment,
    orientation_weights,
    total_decay,
)
from .exceptions import NVMirrorError
from .materials import IDEAL_MIRROR, OpticalMaterial, air, complex_index, diamond, silver
from .pipeline import enhancement_from_scan, estimate_d0, fringe_maxima
from .stratified import Layer, LayerStack, stack_reflection, stack_transmission

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CollectionGeometry",
    "EnhancementMap",
    "collected_power",
    "enhancement",
    "enhancement_map",
    "normalized_model_enhancement",
    "GEOMETRIC_WEIGHTS",
    "REPORTED_WEIGHTS",
    "DecayRates",
    "EmitterEnvironment",
    "OrientationWeights",
    "angular_pattern",
    "mirror_environment",
    "orientation_weights",
    "total_decay",
    "NVMirrorError",
    "IDEAL_MIRROR",
    "OpticalMaterial",
    "air",
    "complex_index",
    "diamond",
    "silver",
    "enhancement_from_scan",
    "estimate_d0",
    "fringe_maxima",
    "Layer",
    "LayerStack",
    "stack_reflection",
    "stack_transmission",
]
