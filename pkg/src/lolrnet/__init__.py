"""Interbank network analytics.

Models a system of banks with mutual liabilities, ranks them by systemic
importance, computes closed-form optimal last-resort lending rates under
terminal survival-probability constraints, and verifies the closed forms by
Monte Carlo simulation of the controlled dynamics.
"""

from .config import (NetworkConfig, case_study_path, load_config,
                     printed_google_path, write_config)
from .control import (ControlDecision, ControlProblem, Region, classify,
                      network_decision, no_action_threshold, rho,
                      survival_probability, switching_rate, value_function)
from .errors import (ConfigError, ConfigParseError, ConfigValidationError,
                     ConvergenceError, DegenerateNetworkError, LolrnetError,
                     SchemaVersionError)
from .network import (ClearingResult, FinancialNetwork, GraphMatrices,
                      build_graph_matrices, clearing_vector, default_boundary,
                      net_liability_matrix, relative_liabilities,
                      total_obligations)
from .ranking import (QPolicy, RankingResult, RankThresholdsPolicy,
                      RankWeights, UniformPolicy,
                      assign_survival_probabilities, edge_weights,
                      google_matrix, net_positions, perron_rank, rank_network,
                      series_rank)
from .simulate import (SimConfig, SimReport, estimate_cost, gbm_step,
                       simulate_network)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # network
    "FinancialNetwork", "GraphMatrices", "ClearingResult",
    "total_obligations", "relative_liabilities", "clearing_vector",
    "net_liability_matrix", "default_boundary", "build_graph_matrices",
    # ranking
    "RankWeights", "UniformPolicy", "RankThresholdsPolicy", "QPolicy",
    "RankingResult", "net_positions", "edge_weights", "google_matrix",
    "perron_rank", "series_rank", "assign_survival_probabilities",
    "rank_network",
    # control
    "Region", "ControlProblem", "ControlDecision", "rho",
    "survival_probability", "switching_rate", "no_action_threshold",
    "classify", "value_function", "network_decision",
    # simulate
    "SimConfig", "SimReport", "gbm_step", "simulate_network", "estimate_cost",
    # config
    "NetworkConfig", "load_config", "write_config", "case_study_path",
    "printed_google_path",
    # errors
    "LolrnetError", "ConfigError", "ConfigParseError", "SchemaVersionError",
    "ConfigValidationError", "ConvergenceError", "DegenerateNetworkError",
]
