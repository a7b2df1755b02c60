"""Evidential-uncertainty calculus with class-cardinality auditing.

Vacuity (K / total Dirichlet strength) depends on the evaluated class
count, so detection scores computed over different class counts for the
ID and OOD sides are not comparable: expanding only the OOD side inflates
AUROC/AUPR without any change in model predictions. This package provides
the per-record uncertainty math, from-scratch detection and calibration
metrics, the experiments that expose the inflation artefact, and a CLI
that refuses mismatched comparisons unless explicitly overridden.
"""

from .dirichlet import (
    DirichletState,
    EvidenceRecord,
    Group,
    UncertaintyScores,
    append_classes,
    dirichlet_state,
    evidence_to_alpha,
    expected_probabilities,
    invariance_concentration,
    max_probability,
    normalized_entropy,
    remove_class,
    uncertainty_scores,
    vacuity,
)
from .experiments import (
    INVARIANCE_EVIDENCE,
    MIXED,
    AuditReport,
    CardinalityMismatchError,
    ExpansionMode,
    ExpansionRun,
    ExpansionSpec,
    Metric,
    Orientation,
    RestrictionResult,
    Verdict,
    audit_cardinality,
    mismatch_warning,
    run_expansion_experiment,
    run_restriction_experiment,
    score_group,
    score_record,
)
from .losses import (
    adjusted_alpha,
    edl_mse_loss,
    ib_info_loss,
    kl_to_uniform,
    softplus_evidence,
)
from .metrics import (
    DetectionResult,
    ScoredSample,
    accuracy,
    aupr,
    aupr_baseline,
    aupr_reference,
    auroc,
    auroc_bruteforce,
    ece,
    evaluate_detection,
    nll,
)
from .records import RecordParseError, parse_records, record_to_dict, serialize_records
from .special import digamma, log_gamma, trigamma
from .synthetic import (
    PopulationParams,
    generate_evidence_population,
    generate_toy_classification,
    overlap_population_params,
    stream_rng,
)
from .toy import (
    LossBreakdown,
    RbfFeaturizer,
    ToyModelGrads,
    ToyModelParams,
    ToyTrainConfig,
    ToyTrainResult,
    TrainingDiverged,
    TrainingMode,
    far_probe_points,
    init_params,
    loss_gradient,
    predict_alpha,
    total_loss,
    train_toy,
)

__version__ = "0.1.0"
