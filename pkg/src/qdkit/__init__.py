"""Quality-diversity optimization toolkit.

Grid archives with improvement semantics, analytic benchmark domains with
exact gradients, a ranking-driven CMA-ES, derivative-free and
gradient-arborescence schedulers, and a multi-trial experiment harness.
"""

from .archive import (
    AddResult,
    AddStatus,
    ArchiveConfig,
    ArchiveMetrics,
    Elite,
    GridArchive,
    cell_index,
    load_archive_csv,
)
from .cma_es import CmaEs
from .domains import (
    ArmDomain,
    BatchEvaluation,
    Domain,
    DomainSpec,
    Evaluation,
    LinearProjectionDomain,
    arm_eval,
    clip,
    clip_grad,
    lp_eval,
    make_domain,
    transform_objective,
)
from .exceptions import (
    ConfigError,
    DegenerateStateError,
    EmptyArchiveError,
    EvaluationError,
    IoError,
    QdkitError,
    UsageError,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    attainment_curve,
    heatmap_export,
    run_experiment,
    run_trial,
)
from .schedulers import (
    ALGORITHM_NAMES,
    AlgorithmConfig,
    RankedBatch,
    Scheduler,
    improvement_rank,
    j2_rank_oracle,
    make_algorithm_config,
    make_scheduler,
)
from .variation import (
    AdamState,
    adam_step,
    arborescence_step,
    ascent_step,
    gaussian_perturb,
    iso_line_dd,
    normalize_gradient,
)

__version__ = "0.1.0"
