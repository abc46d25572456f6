"""Invariants, minimal 1-forms and spectral bands of magnetic Laplacians
on periodic discrete graphs, computed through their finite fundamental
graphs."""

from .errors import (
    AlphaOutOfRangeError,
    BadIndexLengthError,
    BadMultipliersError,
    BadParamsError,
    CheckFailedError,
    DimensionMismatchError,
    DisconnectedGraphError,
    FluxImageNotFullLatticeError,
    FluxMismatchError,
    GraphDataError,
    GridTooCoarseError,
    InconsistentEmbeddingError,
    LocalizationViolatedError,
    MagspecError,
    MeasureBoundViolatedError,
    NoIndependentSubsetError,
    NotHermitianError,
    NotMinimalError,
    OpenPathError,
    SandwichViolatedError,
    TreeCountExceedsCapError,
)
from .fiber_operator import (
    FiberMatrix,
    GaugeWeights,
    count_nontrivial_exponents,
    fiber_matrix,
    fiber_stack,
    gauge_weights,
    matrix_to_json_pairs,
    perturbation_matrix,
    phase_perturbation_bound,
    split_fiber,
    support_degrees,
    theta0_reduction,
    zero_phase_form,
)
from .forms_cycles import (
    FluxTable,
    InvariantReport,
    SpanningTreeBasis,
    enumerate_spanning_trees,
    flux,
    flux_table,
    integer_determinant,
    integer_rank,
    invariants,
    lattice_image_check,
    minimal_form,
    minimal_pair,
    smith_normal_form,
    spanning_tree_count,
)
from .graph_model import (
    Edge,
    FundamentalGraph,
    OneForm,
    PeriodicEmbedding,
    ValidationReport,
    coordinate_form,
    dump_graph_json,
    generate,
    graph_from_dict,
    graph_to_dict,
    load_graph_json,
    reduce_angle,
    reduce_angles,
    validate,
)
from .inverse_builder import (
    SupercellSpec,
    build_periodic,
    coprime_fluxes,
    default_embedding,
    harper_model,
    supercell,
)
from .spectral import (
    BandSpectrum,
    LocalizationReport,
    PerturbationBounds,
    band_sweep,
    default_grid_n,
    eigenvalue_lipschitz_bound,
    eigenvalue_table,
    hermitian_eigenvalues,
    sy_sunada_check,
    theta_grid,
    union_measure,
    verify_band_localization,
    verify_gauge_equivalence,
    verify_perturbation,
    verify_positive_splitting,
)

__version__ = "0.1.0"
