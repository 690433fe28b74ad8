"""Feature attributions (Integrated Gradients, Baseline Shapley) and
monotonicity-axiom auditing."""

from .attribution import (
    BSHAP,
    IG,
    METHODS,
    AttributionResult,
    IGConfig,
    attribute,
    attribute_batch,
    baseline_shapley,
    completeness_gap,
    integrated_gradients,
    normalize,
)
from .audit import (
    AIM,
    ASPM,
    AWPM,
    AXIOMS,
    DIM,
    AxiomCheckConfig,
    AxiomVerdict,
    Certificate,
    audit_matrix,
    check_aim,
    check_aspm,
    check_awpm,
    check_dim,
    grid_audit,
)
from .core import FeatureSpace, ModelHandle, MonotoneSpec, Point, evaluate, get_model, gradient, path_point, register
from .data import Dataset, gen_synthetic, ground_truth_score, ingest_csv, split
from .errors import MonoAttrError
from .models import AdditiveMonotoneModel, TrainConfig, auc, build_model, certify_constraints, predict, train
from .report import ReportDocument, emit_report
from .verify import ProbeConfig, check_individual, check_strong_pairwise, check_weak_pairwise
from .zoo import get_example, oracle_attribution

__version__ = "0.1.0"
