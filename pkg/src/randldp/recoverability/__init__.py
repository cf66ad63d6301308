"""Keys that let the data owner recover inputs from privatized outputs."""

from .factorize import bipartite_edge_coloring, factorize_symmetric
from .hr import HRParams, hr_construct, hr_entropy_bounds, hr_mechanism, hr_output_sets, hr_params
from .keys import OptimalKeySpec, optimal_key, reduce_key, storage_savings, trim_key, two_level_key
from .tsample import TSampleMechanism, audit_database_dp, t_sample_mechanism
from .xor import EveEstimate, XorRecMechanism, build_xor_rec, eve_estimate, recover

__all__ = [
    "EveEstimate",
    "HRParams",
    "OptimalKeySpec",
    "TSampleMechanism",
    "XorRecMechanism",
    "audit_database_dp",
    "bipartite_edge_coloring",
    "build_xor_rec",
    "eve_estimate",
    "factorize_symmetric",
    "hr_construct",
    "hr_entropy_bounds",
    "hr_mechanism",
    "hr_output_sets",
    "hr_params",
    "optimal_key",
    "recover",
    "reduce_key",
    "storage_savings",
    "t_sample_mechanism",
    "trim_key",
    "two_level_key",
]
