"""Ergodicity toolkit for two-neighbour binary PCA.

Closed-form criterion evaluation, boundary random-walk laws and Monte
Carlo, envelope simulation, the refined rule-1000 analysis, and sweeps.
"""

from .params import (BState, ConditionReport, DegenerateDenominatorError,
                     DerivedParams, ParamQuad, Side, asymptotic_increment_bound,
                     bisect_crossover, boundary_chain, ca_with_error,
                     condition_check, derive, favourable_state,
                     flip_conjugate, gamma_table, mean_increment,
                     stationary_solve)

__all__ = [
    "BState", "ConditionReport", "DegenerateDenominatorError",
    "DerivedParams", "ParamQuad", "Side", "asymptotic_increment_bound",
    "bisect_crossover", "boundary_chain", "ca_with_error", "condition_check",
    "derive", "favourable_state", "flip_conjugate", "gamma_table",
    "mean_increment", "stationary_solve",
]

__version__ = "0.1.0"
