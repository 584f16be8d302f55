"""Context-specific Markov network structure learning.

Learns canonical models (one instantiated graph per observed context) with a
grow-shrink strategy driven by chi-square tests over an ADTree, plus the full
evaluation pipeline: synthetic two-context generators, a single-graph
baseline, pseudo-likelihood weight fitting, and exact KL scoring.
"""

from .dataset import Context, Dataset, VariableSchema, load_csv, save_csv, unique_rows
from .counts import ContingencyTable, CountIndex, build_index, contingency, count
from .indep import TestResult, chi_square, conditional_independent, context_independent
from .structures import (
    CanonicalGraph,
    CanonicalModel,
    Feature,
    UGraph,
    encodes_context_independence,
    generate_features,
    induce_graph,
    markov_blanket,
    maximal_cliques,
)
from .learners import LearnerConfig, LearnerStats, csgs, gs_pass, gsmn
from .model import (
    GroundTruth,
    LogLinearModel,
    fit_weights,
    kl_divergence,
    log_score,
    partition,
    pll_gradient,
    pseudo_log_likelihood,
    sample,
    synth_model,
)

__version__ = "0.1.0"
