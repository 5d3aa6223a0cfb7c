"""A small neural toolkit with hand-written gradients."""
from .backend import USE_NUMBA, backend_name
from .layers import LSTM, MLP, Embedding, bce_with_logits, sigmoid
from .network import ArchitectureConfig, QNetwork, TextEncoder, Vocabulary
from .params import NonFiniteError, ParamStore, adam_step, load_params, save_params

__all__ = ["USE_NUMBA", "backend_name", "LSTM", "MLP", "Embedding", "bce_with_logits", "sigmoid",
           "ArchitectureConfig", "QNetwork", "TextEncoder", "Vocabulary", "NonFiniteError", "ParamStore",
           "adam_step", "load_params", "save_params"]
