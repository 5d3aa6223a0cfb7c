"""Learners: tabular baselines, the recurrent score-contextualised agent, gating and update rules."""
from .classifier import HistoryFeatures, LogisticAdmissibility
from .config import AgentConfig
from .encoders import ENCODERS, LookInventoryEncoder, MemorylessEncoder, WindowEncoder, make_encoder
from .gating import (GATINGS, ConstantEstimator, GatingScheme, OracleEstimator, build_gated_set, gate, oracle_allowed,
                     select_action)
from .heads import ScoreHeadMap
from .recurrent import RecurrentAgent
from .tabular import TabularAgent, TabularQ
from .updates import acqlh_delta, cql_delta, cqlh_delta, q_learning_delta, td_target

__all__ = [
    "HistoryFeatures", "LogisticAdmissibility", "AgentConfig", "ENCODERS", "LookInventoryEncoder",
    "MemorylessEncoder", "WindowEncoder", "make_encoder", "GATINGS", "ConstantEstimator", "GatingScheme",
    "OracleEstimator", "oracle_allowed", "build_gated_set", "gate", "select_action", "ScoreHeadMap", "RecurrentAgent",
    "TabularAgent", "TabularQ", "acqlh_delta", "cql_delta", "cqlh_delta", "q_learning_delta", "td_target",
]
