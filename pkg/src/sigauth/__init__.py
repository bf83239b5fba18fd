"""Dynamic-signature authentication at desk scale.

Synthetic sensor-stream capture, partition-parallel PCA, five full-batch
neural network trainers (sequential and ensemble-distributed), FAR/FRR/EER
evaluation, a file-backed enroll/verify template store, and a cloud cost
model.  The `sigauth` console script exposes the whole pipeline.
"""

from .ablation import AblationConfig, AblationRow, ablate, excluded_channel, write_ablation
from .costs import CostParams, cloud_cost, format_usd, scaling_table, total_cost, vm_hours
from .errors import *  # noqa: F401,F403  (error taxonomy is re-exported wholesale)
from .metrics import (
    ConfusionCounts,
    EvalReport,
    RocCurve,
    SpeedupRecord,
    confusion_at,
    eer,
    evaluate,
    far,
    frr,
    roc,
    speedup,
    write_roc,
)
from .network import (
    GlobalModel,
    Network,
    ensemble_score,
    ensemble_scores,
    forward,
    init_network,
    load_model,
    save_model,
    score,
    score_any,
    scores,
)
from .pca import (
    CovarianceAccumulator,
    PcaModel,
    correlation,
    cov_map,
    cov_reduce,
    covariance,
    dist_preprocess,
    load_pca,
    pca_fit,
    pca_project,
    pca_reconstruct,
    preprocess,
    resolve_k,
    save_pca,
    scale_vector,
)
from .pipeline import (
    BenchReport,
    EnrollConfig,
    Fingerprint,
    TemplateRecord,
    TemplateStore,
    VerifyDecision,
    bench,
    enroll,
    store_load,
    store_save,
    verify,
    write_speedup,
)
from .samples import (
    CHANNELS,
    FORGED,
    GENUINE,
    N_CHANNELS,
    Dataset,
    FeatureMask,
    RawSignatureSample,
    flatten,
    resample,
    stratified_split,
    vectorize,
)
from .synth import (
    GenConfig,
    UserProfile,
    gen_dataset,
    gen_profile,
    gen_sample,
    read_dataset,
    template_curve,
    user_ids,
    write_dataset,
)
from .trainers import (
    LmState,
    LmStepResult,
    TrainerConfig,
    TrainResult,
    dist_train_sample,
    encode_targets,
    gradient,
    jacobian,
    lm_step,
    residual,
    rprop_update,
    train,
    train_sample,
)

__version__ = "0.1.0"
