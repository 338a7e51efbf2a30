"""Link prediction with latent feature-feature interaction matrices."""

from .errors import DataFormatError, DomainError, FeatnetError, InfeasibleSamplingError
from .estimators import (AddOne, EstimatorConfig, Examples, FitDiagnostics, Floor,
                         LabeledExample, LlamaConfig, SkippedExample,
                         build_example_sequence, fit, hinge_loss, llama_fit, llama_step,
                         naive_estimate, pa_mistake_bound, perceptron_fit, radius_sq)
from .evaluation import (EvalReport, FoldAssignment, PrCurve, ScoredPair, ScoredPairs,
                         aupr, build_test_pairs, cross_validate, explainability,
                         induce_training, pr_curve, pr_curve_arrays, score_pairs,
                         split_folds)
from .model import (ExpClipped, FeatureAssignment, FeatureGraph, InteractionMatrix,
                    Sigmoid, Step, activate, column_normalize, link_probability,
                    row_normalize, score)
from .synthgen import (FAMILIES, GraphFamilySpec, IbpParams, WDistribution,
                       generate_family, ibp_sample, realize_graph, sample_w)

__version__ = "0.1.0"
