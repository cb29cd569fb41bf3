from .acquisition import AcquisitionResult, expected_improvement, propose_next
from .gp_surrogate import (FittedGP, KernelSpec, condition, fit, kernel_eval,
        kernel_matrix, log_marginal_likelihood, predict, predict_batch)
from .optimizer import (OptimizationHistory, Trial, bo_minimize, incumbent_curve,
        latin_hypercube, random_search_minimize)
from .searchspace import ParamSpec, SearchSpace
