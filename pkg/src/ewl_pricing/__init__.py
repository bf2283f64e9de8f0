"""Demand learning and pricing for the airline single-leg problem."""

from .booking_history import HistoryWindow, SellDateRecord
from .estimator import EstimationResult, estimate_phi, fisher_information, log_likelihood, sigma_bound
from .fare_demand import DemandParams, FareStructure, frat5_from_phi, greedy_fare, phi_from_frat5
from .market_simulator import EpisodeConfig, EpisodeResult, run_episode
from .policy_optimizer import (
    ObjectiveContext,
    PricingPolicy,
    greedy_policy,
    maximize_unified,
    random_policy,
    unified_objective,
)

__all__ = [
    "DemandParams", "EpisodeConfig", "EpisodeResult", "EstimationResult", "FareStructure",
    "HistoryWindow", "ObjectiveContext", "PricingPolicy", "SellDateRecord", "estimate_phi",
    "fisher_information", "frat5_from_phi", "greedy_fare", "greedy_policy", "log_likelihood",
    "maximize_unified", "phi_from_frat5", "random_policy", "run_episode", "sigma_bound",
    "unified_objective",
]
