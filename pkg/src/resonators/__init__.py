"""Subwavelength resonances of arrays of nearly touching spheres."""

__version__ = "0.1.0"

from .geometry import Arrangement, Kind, Resonator, TangencyGraph, build_arrangement, gap_regions, tangency_graph
from .capacitance import (CapacitanceMatrix, CapacitanceModel, GeneralizedCapacitanceMatrix, Provenance,
                          average_capacity, generalized, leading_model, realize)
from .spectra import (ClosedFormSpectrum, EigenPair, chain_eigenvalues, chain_eigenvector, charpoly,
                      dense_eigen, distinct_count, grid_eigenvalues, localization_check, nonuniform_chain3,
                      ring_eigenbasis, ring_eigenvalues)
from .frequencies import (PhysicalParams, ResonantFrequency, epsilon_of_delta, imaginary_parts,
                          resonant_frequencies, span_and_count)
from .modes import ModeProfile, Rate, gap_blowup, mode_profiles, resolve_ring_mixing

__all__ = [
    "Arrangement", "Kind", "Resonator", "TangencyGraph", "build_arrangement", "gap_regions", "tangency_graph",
    "CapacitanceMatrix", "CapacitanceModel", "GeneralizedCapacitanceMatrix", "Provenance",
    "average_capacity", "generalized", "leading_model", "realize",
    "ClosedFormSpectrum", "EigenPair", "chain_eigenvalues", "chain_eigenvector", "charpoly", "dense_eigen",
    "distinct_count", "grid_eigenvalues", "localization_check", "nonuniform_chain3", "ring_eigenbasis",
    "ring_eigenvalues",
    "PhysicalParams", "ResonantFrequency", "epsilon_of_delta", "imaginary_parts", "resonant_frequencies",
    "span_and_count",
    "ModeProfile", "Rate", "gap_blowup", "mode_profiles", "resolve_ring_mixing",
]
