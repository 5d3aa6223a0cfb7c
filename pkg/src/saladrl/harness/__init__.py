"""Experiment driver: training, evaluation, aggregation and interactive play."""
from .config import AGENTS, RunConfig
from .evaluate import EvalSummary, evaluate
from .metrics import HEADER, MetricsRow, aggregate, moving_average, read_metrics
from .play import play
from .train import greedy_fraction, resolve_level, train, train_seed

__all__ = ["AGENTS", "RunConfig", "EvalSummary", "evaluate", "HEADER", "MetricsRow", "aggregate",
           "moving_average", "read_metrics", "play", "greedy_fraction", "resolve_level", "train", "train_seed"]
