"""Translation-invariant visual memory for online interestingness scoring."""
from .encoder import EncoderSpec, encode, load_features, write_features
from .estimators import FilterBankEncoder, VisualMemory
from .memory import MemoryBank, ReadResult, init_memory, read, restore, snapshot, write
from .metrics import LabeledSequence, auc_op, evaluate, online_precision
from .numerics import circular_shift, cosine_similarity, max_corr_similarity
from .pipeline import density_map, online_step, run_online, short_term_learn

__all__ = [
    "EncoderSpec", "encode", "load_features", "write_features",
    "FilterBankEncoder", "VisualMemory",
    "MemoryBank", "ReadResult", "init_memory", "read", "restore", "snapshot", "write",
    "LabeledSequence", "auc_op", "evaluate", "online_precision",
    "circular_shift", "cosine_similarity", "max_corr_similarity",
    "density_map", "online_step", "run_online", "short_term_learn",
]
__version__ = "0.1.0"
