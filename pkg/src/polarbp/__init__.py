"""Polar codes with belief-propagation decoding and CSFG freezing."""

from .bp_core import (
    LLR_CAP,
    DecodeOutcome,
    MessageState,
    StopReason,
    decode_baseline,
    decode_gmatrix,
)
from .channel import ChannelConfig, modulate_bpsk, transmit_awgn, trial_rng
from .csfg import decode_csfg
from .polar_code import (
    PolarCodeSpec,
    construct_frozen_set,
    encode,
    load_frozen_set,
    polar_transform,
    save_frozen_set,
)

DECODERS = {
    "baseline": decode_baseline,
    "gmatrix": decode_gmatrix,
    "csfg": decode_csfg,
}

__all__ = [
    "DECODERS",
    "LLR_CAP",
    "ChannelConfig",
    "DecodeOutcome",
    "MessageState",
    "PolarCodeSpec",
    "StopReason",
    "construct_frozen_set",
    "decode_baseline",
    "decode_csfg",
    "decode_gmatrix",
    "encode",
    "load_frozen_set",
    "modulate_bpsk",
    "polar_transform",
    "save_frozen_set",
    "transmit_awgn",
    "trial_rng",
]
