"""Recovery of binary spike trains from decimated AR(1) measurements."""
from ._backend import BACKEND
from .analysis import block_error_prob, error_bound, noise_budget, q_function, snr_condition, train_error_prob
from .codebook import Codebook, build_codebook, load_codebook, min_gap, save_codebook
from .decoder import DecodeReport, decode_block_exact, decode_block_nn, decode_train, estimate_amplitude, estimate_counts
from .errors import BinspikeError
from .metrics import count_error, match_spikes
from .model import ArModel, SpikeTrain, Trace, measure, simulate

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ArModel",
    "BinspikeError",
    "Codebook",
    "DecodeReport",
    "SpikeTrain",
    "Trace",
    "block_error_prob",
    "build_codebook",
    "count_error",
    "decode_block_exact",
    "decode_block_nn",
    "decode_train",
    "error_bound",
    "estimate_amplitude",
    "estimate_counts",
    "load_codebook",
    "match_spikes",
    "measure",
    "min_gap",
    "noise_budget",
    "q_function",
    "save_codebook",
    "simulate",
    "snr_condition",
    "train_error_prob",
]
