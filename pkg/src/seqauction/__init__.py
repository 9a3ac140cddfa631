"""Learning revenue models of sequential auctions and optimising the selling order."""

from .auction import (AgentProfile, AuctionTrace, BiddingRegime, InvalidOrderingError, ItemMultiset,
                      ItemType, generate_items, generate_population, relevance_check, run_auction,
                      smart_bid)
from .blackbox import best_first_search
from .features import Dataset, FeatureRow, FeatureSchema, PrefixState, prefix_features, trace_to_rows
from .regressors import (LinearModel, RegressionTree, evaluate_ordering, fit_lasso, fit_models,
                         fit_tree, predict, r_squared)
from .whitebox import compute_bounds, encode, lp_text, solve, write_lp

__version__ = "0.1.0"

__all__ = [
    "AgentProfile", "AuctionTrace", "BiddingRegime", "InvalidOrderingError", "ItemMultiset",
    "ItemType", "generate_items", "generate_population", "relevance_check", "run_auction",
    "smart_bid", "best_first_search", "Dataset", "FeatureRow", "FeatureSchema", "PrefixState",
    "prefix_features", "trace_to_rows", "LinearModel", "RegressionTree", "evaluate_ordering",
    "fit_lasso", "fit_models", "fit_tree", "predict", "r_squared", "compute_bounds", "encode",
    "lp_text", "solve", "write_lp",
]
