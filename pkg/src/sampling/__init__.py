"""Samplers: propagator monomials, site pinning, product-state output and the tree walk.

Import order matters: each module only depends on the ones above it.
"""

from .monomial_sampler import MonomialSample, sample_f_k, sample_propagator
from .pinning import Configuration, pin_step, run_pinning, run_separability
from .stabilizer_output import ProductState, sample_state
from .tree_walk import WalkParams, run_walk, sample_gibbs_state

__all__ = [
    "MonomialSample",
    "sample_f_k",
    "sample_propagator",
    "Configuration",
    "pin_step",
    "run_pinning",
    "run_separability",
    "ProductState",
    "sample_state",
    "WalkParams",
    "run_walk",
    "sample_gibbs_state",
]
