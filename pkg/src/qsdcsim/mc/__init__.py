"""Pulse-level Monte Carlo simulation of the interference protocol."""
from .backend import HAVE_COMPILED, get_kernel
from .campaign import CHUNK_ROUNDS, run_campaign, run_truth_campaign
from .records import (
    CODING,
    MULTI,
    PulseRecord,
    SiftResult,
    SimReport,
    estimate_parameters,
    interfere_and_detect,
    interfere_and_detect_fock,
    misalignment_shift,
    prepare_round,
    sift,
)

__all__ = [
    "CODING",
    "MULTI",
    "CHUNK_ROUNDS",
    "HAVE_COMPILED",
    "PulseRecord",
    "SiftResult",
    "SimReport",
    "estimate_parameters",
    "get_kernel",
    "interfere_and_detect",
    "interfere_and_detect_fock",
    "misalignment_shift",
    "prepare_round",
    "run_campaign",
    "run_truth_campaign",
    "sift",
]
