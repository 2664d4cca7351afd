"""Interacting two-particle quantum walks, their bound pairs and the
lattice-gas automaton that contains them."""

from .errors import (ClearanceError, ConstraintError, DomainError, EigenConditionError, NotUnitaryError,
                     SingularDefectError, SpectralProximityError, WalkError)
from .evolution import (Lattice, StepOperator, TwoParticleState, build_interacting_step, evolve,
                        joint_distribution, singlet_state_at_origin)
from .molecule import (BoundStateRecord, DispersionPoint, InteractionPhase, asymptotic_distribution,
                       bound_state, capture_probability, dispersion, eta, group_velocity, integrated_capture,
                       max_speed, molecule_coin, norm_squared, pole_v1)
from .qca import CellCoin, GasState, bose_collision_step, qca_step, sector_projection
from .spectral import (DefectOperator, SpectrumTable, band_gap, check_unitarity_lemma, compute_R,
                       defect_coin_for, eigenvector_from_defect, ring_spectrum)
from .walk import UnitaryCoin, WalkSymbol, coin_shift_walk, hadamard_walk, two_particle_symbol

__all__ = [
    "ClearanceError", "ConstraintError", "DomainError", "EigenConditionError", "NotUnitaryError",
    "SingularDefectError", "SpectralProximityError", "WalkError", "Lattice", "StepOperator",
    "TwoParticleState", "build_interacting_step", "evolve", "joint_distribution", "singlet_state_at_origin",
    "BoundStateRecord", "DispersionPoint", "InteractionPhase", "asymptotic_distribution", "bound_state",
    "capture_probability", "dispersion", "eta", "group_velocity", "integrated_capture", "max_speed",
    "molecule_coin", "norm_squared", "pole_v1", "CellCoin", "GasState", "bose_collision_step", "qca_step",
    "sector_projection", "DefectOperator", "SpectrumTable", "band_gap", "check_unitarity_lemma", "compute_R",
    "defect_coin_for", "eigenvector_from_defect", "ring_spectrum", "UnitaryCoin", "WalkSymbol",
    "coin_shift_walk", "hadamard_walk", "two_particle_symbol",
]
