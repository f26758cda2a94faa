"""Multi-objective Bayesian optimization with copula-based CDF indicators."""

from .acquisition import (AcquisitionScores, AcquisitionSpec, botied_v1, botied_v2, nehvi, nparego,
                          random_select)
from .core import Dataset, Observation, ParetoFront, dominates, pareto_front, set_weakly_dominates, weakly_dominates
from .indicators import CdfEstimator, IndicatorValue, cdf_indicator, greedy_topk, hv_improvement, hypervolume
from .surrogate import GaussianProcessModel, KernelSpec, PosteriorSamples, fit_gp, posterior, sample_posterior

__version__ = "0.1.0"
