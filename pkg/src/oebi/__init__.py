"""Seed selection for benefit-weighted influence under a rival cascade."""
from .errors import DegenerateProfileError, GraphTooLargeError, OEBIError, ParseError, ValidationError
from .graph import (BenefitProfile, SocialNetwork, generate_benefit_profile, load_edge_list, load_snapshot,
                    load_weights, preferential_network, random_network, save_snapshot)
from .diffusion import exact_f, monte_carlo_f, reachable_set, sample_realization, sigma
from .ris import RRCollection, confidence_bounds, estimate_f, estimate_w, estimate_z, sample_collection
from .solver import SolverConfig, SolverReport, greedy, modular_modular

__version__ = "0.1.0"
