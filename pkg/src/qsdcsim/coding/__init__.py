"""Secure frame coding: FEC codecs, wiretap coset coding, frame pipeline."""
from .codecs import (
    Codec,
    CodingError,
    DecodeResult,
    IdentityCodec,
    RepetitionCodec,
    SparseLinearCodec,
    random_bits,
    xor_bits,
)
from .frames import (
    BitChannel,
    FrameReport,
    PipelineResult,
    PoolUnderflowError,
    QuantumLinkChannel,
    RateCheck,
    SstsPool,
    SyntheticChannel,
    check_rate_conditions,
    disclose_and_unmask,
    mask,
    precode,
    run_frame_pipeline,
    ssts_decrypt,
    ssts_encrypt,
    unmask,
)
from .wiretap import FrameConfig, coset_dimension, secure_decode, secure_encode

__all__ = [
    "BitChannel",
    "Codec",
    "CodingError",
    "DecodeResult",
    "FrameConfig",
    "FrameReport",
    "IdentityCodec",
    "PipelineResult",
    "PoolUnderflowError",
    "QuantumLinkChannel",
    "RateCheck",
    "RepetitionCodec",
    "SparseLinearCodec",
    "SstsPool",
    "SyntheticChannel",
    "check_rate_conditions",
    "coset_dimension",
    "disclose_and_unmask",
    "mask",
    "precode",
    "random_bits",
    "run_frame_pipeline",
    "secure_decode",
    "secure_encode",
    "ssts_decrypt",
    "ssts_encrypt",
    "unmask",
    "xor_bits",
]
