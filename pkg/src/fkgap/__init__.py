"""Numerical toolkit for Frenkel-Kontorova chains on quasi-periodic media.

Two complementary routes to equilibria and their phonon spectra:

* hull-function route: smooth sheared equilibria parameterized by a hull
  function on a torus, with Diophantine and nondegeneracy diagnostics and
  truncation quotients certifying a gapless spectrum;
* anti-integrable route: equilibria pinned near the zero set of the
  on-site gradient at strong coupling, with a certified uniform spectral
  gap.

Windowed Hessians, a tridiagonal Sturm bisection eigensolver, and a dense
Jacobi cross-check connect the two.
"""

from .errors import (
    CapacityError,
    ConvergenceError,
    DegeneracyError,
    PreconditionError,
    SchemaError,
)
from .model import (
    Clamped,
    Configuration,
    FrequencyModule,
    InteractionPotential,
    Lagrangian,
    QuasiPeriodicPotential,
    WellPotential,
    cosine_well,
    energy_window,
    eval_potential,
    interaction_bound_K,
    quadratic_interaction,
    quadratic_quartic_interaction,
    scalar_fk_lagrangian,
    trig_polynomial_well,
)
from .spectral import (
    DENSE_LIMIT,
    HessianWindow,
    SpectralExtrema,
    householder_tridiagonalize,
    jacobi_eigen_dense,
    spectral_extrema,
    sturm_count,
    sturm_eigen_tridiagonal,
)
from .hull import (
    DiophantineReport,
    HullFunction,
    NondegeneracyReport,
    diophantine_check,
    hull_newton_solve,
    hull_residual,
    nondegeneracy_report,
    representatives,
    sample_configuration,
    sliding_mode,
    torus_grid,
)
from .phonon import (
    AiGapBound,
    EDGE_TOLERANCE,
    GapReport,
    GapRow,
    QuotientRow,
    ai_gap_bound,
    assemble_hessian_window,
    gap_sweep,
    kam_eta_bound,
    kam_truncation_data,
    kam_truncation_quotient,
)
from .equilibrium import (
    AiSolveReport,
    AubryCertificate,
    PointSet,
    SeparableLattice,
    ai_threshold,
    anti_integrable_solve,
    check_aubry_criterion,
    newton_solve_window,
    residual,
    residual_sup,
    uniqueness_probe,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ConvergenceError",
    "DegeneracyError",
    "PreconditionError",
    "SchemaError",
    "Clamped",
    "Configuration",
    "FrequencyModule",
    "InteractionPotential",
    "Lagrangian",
    "QuasiPeriodicPotential",
    "WellPotential",
    "cosine_well",
    "energy_window",
    "eval_potential",
    "interaction_bound_K",
    "quadratic_interaction",
    "quadratic_quartic_interaction",
    "scalar_fk_lagrangian",
    "trig_polynomial_well",
    "DENSE_LIMIT",
    "HessianWindow",
    "SpectralExtrema",
    "householder_tridiagonalize",
    "jacobi_eigen_dense",
    "spectral_extrema",
    "sturm_count",
    "sturm_eigen_tridiagonal",
    "DiophantineReport",
    "HullFunction",
    "NondegeneracyReport",
    "diophantine_check",
    "hull_newton_solve",
    "hull_residual",
    "nondegeneracy_report",
    "representatives",
    "sample_configuration",
    "sliding_mode",
    "torus_grid",
    "AiGapBound",
    "EDGE_TOLERANCE",
    "GapReport",
    "GapRow",
    "QuotientRow",
    "ai_gap_bound",
    "assemble_hessian_window",
    "gap_sweep",
    "kam_eta_bound",
    "kam_truncation_data",
    "kam_truncation_quotient",
    "AiSolveReport",
    "AubryCertificate",
    "PointSet",
    "SeparableLattice",
    "ai_threshold",
    "anti_integrable_solve",
    "check_aubry_criterion",
    "newton_solve_window",
    "residual",
    "residual_sup",
    "uniqueness_probe",
]
