"""crt-forest: random-tree simulation and goodness-of-fit testing.

Samplers for conditioned Galton-Watson, birth-death, coalescent, and
sequential Poisson binary trees; Dyck-path coding; least-common-ancestor
subtree extraction; chi-square/F/permutation tests with a Monte-Carlo
calibration harness; agglomerative clustering of scalar data into
dendrograms that feed the same tests.
"""

from .clustering import Dendrogram, HeterogeneitySummary, agglomerate, heterogeneity_summary
from .distributions import (
    RngStream,
    as_generator,
    chi2_quantile,
    f_quantile,
    sample_gamma,
    sample_offspring,
    sample_rayleigh,
)
from .dyck import DyckPath, dyck_decode, dyck_encode
from .errors import (
    CrtForestError,
    DegenerateSample,
    DomainError,
    EmptySelection,
    InfeasibleSize,
    InsufficientData,
    MalformedNewick,
    MalformedPath,
    NotStrictBinary,
    NotTiltable,
    RejectionBudgetExceeded,
    TooManyLeavesRequested,
    UnknownVertex,
)
from .generators import (
    BranchLengthSpec,
    GWDraw,
    OffspringSpec,
    assemble_tree,
    parse_lengths,
    parse_offspring,
    rotate_to_tree,
    sample_birth_death,
    sample_cgw,
    sample_coalescent,
    sample_degree_sequence,
    sample_gw_unconditioned,
    sample_poisson_binary,
    tilt_to_critical,
)
from .harness import ExperimentConfig, make_tree_sampler, run_calibration
from .inference import (
    TestReport,
    TreeSummary,
    VarianceEstimate,
    estimate_sigma2_distance,
    estimate_sigma2_ltree,
    log_density_binary,
    log_density_ltree,
    one_sample_binary_test,
    one_sample_dyck_test,
    one_sample_ltree_test,
    permutation_two_sample,
    summarize_tree,
    summarize_trees,
    two_sample_binary_test,
    two_sample_dyck_test,
    two_sample_ltree_test,
)
from .newick import from_newick, read_newick_file, to_newick, write_newick_file
from .trees import (
    LeafSelection,
    Tree,
    choose_leaves,
    ltree_extract,
    ltree_total_length,
    random_vertex_distance,
)

__version__ = "0.1.0"
