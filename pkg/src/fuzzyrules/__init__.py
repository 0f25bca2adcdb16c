"""Rule-learning recommender toolkit built on layered fuzzy logic networks.

Train a network whose AND/OR nodes are differentiable product t-norms, rank
candidates with its fuzzy output, then threshold the weights to read the
model back as crisp, human-readable boolean rules.
"""
from .logic import LayerKind, tnorm_and, tnorm_not, tnorm_or, weighted_input, weights_from_params
from .network import NetworkSpec, NetworkState, init_params, network_forward
from .rules import (
    And,
    Atom,
    Const,
    Not,
    Or,
    RuleNode,
    Span,
    WeightedRule,
    eval_rule,
    eval_rule_batch,
    extract_rule,
    extract_weighted_rules,
    parse_rule,
    render,
    rule_complexity,
    simplify,
)
from .fuzzify import AtomInfo, AtomVocabulary, Fuzzifier
from .training import (
    OptimizerState,
    TrainConfig,
    TrainResult,
    adamw_step,
    backward,
    bce_loss,
    dso_penalty,
    l1_penalty,
    mse_loss,
    negative_sample,
    train,
)
from .metrics import (
    MetricReport,
    SweepRow,
    impression_auc,
    impression_mrr,
    impression_ndcg,
    kendall_tau_b,
    ranking_report,
    threshold_sweep,
)
from .data import (
    Dataset,
    DatasetSchema,
    Impression,
    SyntheticConfig,
    assemble_split,
    load_dataset,
    synthesize,
    temporal_split,
    write_dataset,
)
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .estimator import FuzzyNetworkClassifier
from .errors import ConfigError, DataError

__version__ = "0.1.0"
