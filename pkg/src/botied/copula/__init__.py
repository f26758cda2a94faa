"""Copula estimation: rank transforms, pair copulas and vines."""

from .bivariate import FAMILIES, BivariateCopula, KdeGrid, bivariate_cdf, fit_bivariate
from .pit import EmpiricalMargins, PseudoObservations, kendall_tau, pit_transform
from .vine import (
    Edge,
    VineCopula,
    VineError,
    VineStructure,
    VineTemplate,
    fit_vine,
    load_vine,
    load_vine_template,
    save_vine,
    vine_cdf,
    vine_sample,
)

__all__ = [
    "FAMILIES", "BivariateCopula", "KdeGrid", "bivariate_cdf", "fit_bivariate",
    "EmpiricalMargins", "PseudoObservations", "kendall_tau", "pit_transform",
    "Edge", "VineCopula", "VineError", "VineStructure", "VineTemplate", "fit_vine",
    "load_vine", "load_vine_template", "save_vine", "vine_cdf", "vine_sample",
]
