"""Rejection odds: pre-experimental design ratios and post-experimental Bayes factors."""

from .design import (
    PowerResult,
    RejectionReport,
    compute_power,
    design_report,
    pre_odds,
    r_to_d,
    rejection_boundary,
    rejection_ratio,
    solve_alpha,
    solve_sample_size,
)
from .evidence import (
    EvidenceReport,
    bayes_factor,
    bf_bound,
    empirical_bayes_all,
    empirical_bayes_nonincreasing,
    evidence_report,
    intrinsic_prior,
    post_odds,
)
from .mathcore import Quadrature, RngContract
from .models import (
    EmpiricalBayesAll,
    EmpiricalBayesNonincreasing,
    GridWeight,
    Intrinsic,
    NormalPrior,
    PointMass,
    TestModel,
    UniformInterval,
)

__version__ = "0.1.0"
