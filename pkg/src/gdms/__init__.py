"""Spectral numerics for linear graph directed Markov systems over free groups.

The package computes exponents of convergence, pressure functions, transfer
and skew-operator spectral radii, random-walk spectra, and fractal dimension
estimates for linear systems associated to F_d and quotients F_d / N,
exhibiting numerically how amenability of the quotient governs the dimension
of radial limit sets.
"""

from .errors import (
    CapExceededError,
    ConfigError,
    ConvergenceError,
    GdmsError,
    InconsistentReportError,
    LayoutInfeasibleError,
)
from .groups import (
    Ball,
    FinitePermQuotient,
    FreeAbelianQuotient,
    FreeQuotient,
    Letter,
    QuotientGroup,
    ReducedWord,
    alphabet,
    ball,
    concat_reduce,
    kappa,
    quotient_from_config,
    reduce_word,
    word,
)
from .kernel import (
    DeltaKernelResult,
    InducedSystem,
    KernelCountTable,
    KernelPressureEstimate,
    delta_kernel,
    divergence_check,
    induced_bowen_root,
    induced_loops,
    kernel_connector,
    kernel_counts,
    kernel_pressure,
)
from .pressure import (
    GibbsMeasure,
    LinearGdmsSpec,
    SpectralData,
    TransferMatrix,
    bowen_root,
    ergodic_weight,
    gibbs_measure,
    is_admissible,
    log_partition_sums,
    log_weight,
    poincare_partial,
    pressure,
    pressure_curve,
    spectral_data,
    transfer_matrix,
)
from .render import (
    BoxCountResult,
    GeometricRealization,
    PointCloud,
    attractor_points,
    auto_layout,
    box_counting,
    render_image,
    write_pgm,
)
from .skew import (
    DichotomyReport,
    SkewOperator,
    SymmetryReport,
    amenability_report,
    build_skew_operator,
    check_asymptotic_symmetry,
    skew_spectral_radius,
)
from .walks import (
    CayleyBallGraph,
    IsoperimetricReport,
    WalkLadder,
    cayley_ball,
    isoperimetric_scan,
    srw_spectral_radius,
)

__version__ = "0.1.0"
