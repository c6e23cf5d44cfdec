"""Torsion statistics of random simplicial complexes.

Submodules split by concern: `simplicial` (face combinatorics),
`homology` (exact and modular linear algebra), `groups` (finite abelian
group laws), `lmprocess` (the one-face-at-a-time random complex),
`qtrees` (rationally acyclic 2-complexes and their sampler), `shadow`
(cores, shadows, first-passage coincidence), `harness` (seeded batches
and tables), `cli` (command line).
"""

from .groups import (
    TRIVIAL_GROUP,
    AbelianGroup,
    GroupDistribution,
    PGroup,
    aut_order,
    cl_distribution,
    cl_normalizer,
    expected_phases,
    format_group,
    group_order,
    lambda_distribution,
    log_order,
    parse_group,
    sylow,
    tv_distance,
)
from .harness import (
    ExperimentConfig,
    TrialRecord,
    derive_seed,
    read_records,
    run_experiment,
    summarize,
    write_records,
    write_summary_csv,
)
from .homology import (
    HomologySummary,
    ModRankStream,
    SmithForm,
    SparseIntMatrix,
    betti_mod_q,
    integer_homology,
    smith_normal_form,
)
from .lmprocess import (
    BurstRecord,
    LTResult,
    ProcessTrace,
    burst_analysis,
    c_d_solve,
    c_value,
    find_jump_points,
    lt_search,
    m_star,
    quadratic_fit,
    predict,
    sample_trace,
    t_c_solve,
    torsion_sequence,
)
from .qtrees import (
    MixingTimeoutError,
    TwoTree,
    enumerate_qacyclic,
    initial_tree,
    is_qacyclic,
    kalai_sum,
    sample_tree,
)
from .shadow import (
    CoreComplex,
    HittingReport,
    core,
    giant_check,
    giant_threshold,
    hitting_time_experiment,
    shadow,
    shadow_size,
)
from .simplicial import (
    ComplexState,
    boundary_matrix,
    enumerate_faces,
    face_degrees,
    format_faces,
    parse_faces,
    read_faces,
    write_faces,
)

__version__ = "0.1.0"
