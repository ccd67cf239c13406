"""Numerical thermodynamic formalism for expanding-on-average circle maps.

Transfer operators on uniform grids, equilibrium states, projective cone
contraction, correlation decay and stability of pressure and density.
"""
from types import ModuleType as _ModuleType

from ._version import __version__
from .cones import (
    ConeParams,
    contraction_check,
    cone_membership,
    cone_membership_Cr,
    diameter_bound,
    theta_kappa,
    theta_plus,
    verify_invariance,
)
from .dynamics import (
    CircleMap,
    CoverSpec,
    PotentialSpec,
    build_partition_P,
    eval_map,
    inverse_branches,
    make_doubling,
    make_manneville_pomeau,
    make_pitchfork_perturbed,
    make_potential_constant,
    make_potential_fourier,
    make_potential_geometric,
    make_shifted_doubling,
)
from .errors import ConfigError, NumericFailure, ThermogapError
from .hypotheses import HypothesisReport, check_hypotheses
from .operator import (
    ConvergenceReport,
    GridFunction,
    SpectralSolution,
    TransferMatrix,
    apply_operator,
    build_matrix,
    pressure,
    solve,
    solve_spectrum,
)
from .stability import (
    PerturbationMeasure,
    SweepTable,
    lip_discontinuity_demo,
    paired_preimages,
    pressure_density_sweep,
    random_stability_sweep,
)
from .statistics import CltResult, CorrelationSeries, clt_empirical, clt_variance, correlation

__all__ = sorted(name for name, obj in globals().items()
                 if not name.startswith("_") and not isinstance(obj, _ModuleType)) + ["__version__"]
