"""Secure (wiretap) coding: seeded coset binning over a sparse linear code.

A frame's k_i message bits are padded with fresh random bits up to the
reliability code's dimension k1 = floor(r_i * n_ci); the systematic
encoder then maps every message to a coset of the padding subcode, the
canonical wiretap construction.  The code itself is rebuilt from the
public seed on both ends; the padding bits never need to be shared.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .codecs import CodingError, DecodeResult, SparseLinearCodec

__all__ = ["FrameConfig", "secure_encode", "secure_decode", "coset_dimension"]


@dataclass(frozen=True)
class FrameConfig:
    """Per-frame secure-coding geometry."""

    k_i: int          # secure-input (message) length, bits
    n_ci: int         # coded block length, bits
    r_i: float        # secure-coding rate
    frame_index: int

    def __post_init__(self) -> None:
        if not 0 < self.k_i <= self.n_ci:
            raise CodingError(f"need 0 < k_i <= n_ci, got k_i={self.k_i}, n_ci={self.n_ci}")
        if not 0.0 < self.r_i <= 1.0:
            raise CodingError(f"need 0 < r_i <= 1, got r_i={self.r_i}")
        if self.frame_index < 1:
            raise CodingError(f"frame_index must be >= 1, got {self.frame_index}")


def coset_dimension(cfg: FrameConfig) -> int:
    """Dimension k1 = floor(r_i * n_ci) of the reliability code."""
    return int(cfg.r_i * cfg.n_ci + 1e-9)


def _build_code(cfg: FrameConfig, seed: int) -> SparseLinearCodec:
    k1 = coset_dimension(cfg)
    if cfg.k_i > k1:
        raise CodingError(
            f"rate violation: k_i={cfg.k_i} exceeds n_ci*r_i={k1} (frame {cfg.frame_index})"
        )
    if k1 >= cfg.n_ci:
        raise CodingError(f"r_i={cfg.r_i} leaves no parity bits at n_ci={cfg.n_ci}")
    code_seed, _ = _derive_seeds(seed, cfg.frame_index)
    return SparseLinearCodec(n=cfg.n_ci, k=k1, seed=code_seed)


def _derive_seeds(seed: int, frame_index: int) -> Tuple[int, int]:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(frame_index,))
    code_ss, pad_ss = ss.spawn(2)
    return int(code_ss.generate_state(1)[0]), int(pad_ss.generate_state(1)[0])


def secure_encode(x: np.ndarray, cfg: FrameConfig, seed: int) -> np.ndarray:
    """Encode k_i message bits into an n_ci-bit block at rate r_i.

    Raises CodingError when k_i exceeds the code dimension n_ci*r_i.
    """
    x = np.asarray(x, dtype=np.uint8)
    if x.size != cfg.k_i:
        raise CodingError(f"expected {cfg.k_i} message bits, got {x.size}")
    code = _build_code(cfg, seed)
    _, pad_seed = _derive_seeds(seed, cfg.frame_index)
    padding = np.random.default_rng(pad_seed).integers(
        0, 2, size=code.k - cfg.k_i, dtype=np.uint8
    )
    return code.encode(np.concatenate([x, padding]))


def secure_decode(
    received: np.ndarray,
    cfg: FrameConfig,
    seed: int,
    erasures: Optional[np.ndarray] = None,
) -> DecodeResult:
    """Invert secure_encode from a noisy/erased block.

    Returns the recovered k_i message bits with the decoder's syndrome
    verdict; channels past the code's correction capability yield
    ok=False rather than silent corruption.
    """
    code = _build_code(cfg, seed)
    res = code.decode(received, erasures=erasures)
    return DecodeResult(bits=res.bits[: cfg.k_i], ok=res.ok)
