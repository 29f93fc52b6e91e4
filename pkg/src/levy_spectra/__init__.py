"""Random-operator spectral statistics at desk scale.

Builds finite-volume lattice Hamiltonians with projection-coupled
disorder, counts eigenvalues in volume-rescaled energy windows, runs
reproducible Monte Carlo campaigns over realizations, and fits the
resulting count distributions with compound Poisson laws.
"""

from .compound import (
    BlockSumFit,
    DegenerateInput,
    LevyWeights,
    ZeroMean,
    block_sum_estimator,
    char_fn_distance,
    characteristic_fn,
    default_t_grid,
    empirical_characteristic_fn,
    fit_report,
    fit_weights,
    panjer_pmf,
    poisson_index,
)
from .counting import (
    DENSE_ORDER_CAP,
    EnergyWindow,
    Inertia,
    OrderTooLarge,
    PivotBreakdown,
    count_in,
    count_leq,
    eigenvalues_dense,
    ldl_inertia,
    negative_flags,
)
from .engine import (
    BandwidthTooSmall,
    BlockRun,
    BlockScheme,
    EmpiricalPMF,
    LineFit,
    ScalingRow,
    ScalingTable,
    default_block_half_side,
    estimate_dos,
    estimate_ids,
    feasible_block_half_sides,
    fit_line,
    minami_scan,
    pmf_csv_text,
    pmf_record,
    run_eta_blocks,
    run_xi,
    wegner_scan,
    wilson_interval,
)
from .lattice import (
    DimensionMismatch,
    DisorderLaw,
    DisorderSample,
    LatticeBox,
    ModelSpec,
    PiecewiseLinearLaw,
    SymBandMatrix,
    TilingError,
    UniformLaw,
    Variant,
    build_hamiltonian,
    effective_sides,
    group_count,
    hopping_offsets,
    law_from_config,
    matrix_order,
    model_from_config,
    owner_map,
    projection_blocks,
    sample_disorder,
)

__version__ = "0.1.0"

__all__ = [
    "BandwidthTooSmall",
    "BlockRun",
    "BlockScheme",
    "BlockSumFit",
    "DENSE_ORDER_CAP",
    "DegenerateInput",
    "DimensionMismatch",
    "DisorderLaw",
    "DisorderSample",
    "EmpiricalPMF",
    "EnergyWindow",
    "Inertia",
    "LatticeBox",
    "LevyWeights",
    "LineFit",
    "ModelSpec",
    "OrderTooLarge",
    "PiecewiseLinearLaw",
    "PivotBreakdown",
    "ScalingRow",
    "ScalingTable",
    "SymBandMatrix",
    "TilingError",
    "UniformLaw",
    "Variant",
    "ZeroMean",
    "block_sum_estimator",
    "build_hamiltonian",
    "char_fn_distance",
    "characteristic_fn",
    "count_in",
    "count_leq",
    "default_block_half_side",
    "default_t_grid",
    "effective_sides",
    "eigenvalues_dense",
    "empirical_characteristic_fn",
    "estimate_dos",
    "estimate_ids",
    "feasible_block_half_sides",
    "fit_line",
    "fit_report",
    "fit_weights",
    "group_count",
    "hopping_offsets",
    "law_from_config",
    "ldl_inertia",
    "matrix_order",
    "minami_scan",
    "model_from_config",
    "negative_flags",
    "owner_map",
    "panjer_pmf",
    "pmf_csv_text",
    "pmf_record",
    "poisson_index",
    "projection_blocks",
    "run_eta_blocks",
    "run_xi",
    "sample_disorder",
    "wegner_scan",
    "wilson_interval",
]
