"""Frame-based secure transmission pipeline.

Messages are one-time-pad encrypted against the shared secret pool,
FEC-precoded, carved into frames, wiretap-coded at the per-frame rate,
masked with local randomness, and sent over an abstract bit channel.
Decoding runs position disclosure, unmasking, secure decoding and the
final pool decryption.  Frame i is admitted only when the rate
conditions k_i/n_ci <= r_i - I(A:E) and r_i < I(A:B) hold with the
previous frame's estimates; the first frame always carries random bits
and bootstraps the pool.
"""
from __future__ import annotations

import math
import zlib
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..params import SystemParams, system_transmittance
from ..rates import binary_entropy, z_error
from .codecs import Codec, CodingError, IdentityCodec, random_bits, xor_bits
from .wiretap import FrameConfig, secure_encode, _build_code

__all__ = [
    "PoolUnderflowError",
    "SstsPool",
    "RateCheck",
    "check_rate_conditions",
    "ssts_encrypt",
    "ssts_decrypt",
    "precode",
    "mask",
    "unmask",
    "disclose_and_unmask",
    "BitChannel",
    "SyntheticChannel",
    "QuantumLinkChannel",
    "FrameReport",
    "PipelineResult",
    "run_frame_pipeline",
]


class PoolUnderflowError(RuntimeError):
    """Raised when more secret bits are requested than the pool holds."""


class SstsPool:
    """Ordered buffer of shared secret bits with a consumption counter."""

    def __init__(self, bits: Optional[np.ndarray] = None):
        self._bits = np.asarray(bits, dtype=np.uint8) if bits is not None else np.zeros(0, np.uint8)
        self.consumed_count = 0

    def __len__(self) -> int:
        return int(self._bits.size)

    def add(self, bits: np.ndarray) -> None:
        self._bits = np.concatenate([self._bits, np.asarray(bits, dtype=np.uint8)])

    def extract(self, k: int) -> np.ndarray:
        if k < 0:
            raise ValueError(f"cannot extract {k} bits")
        if k > self._bits.size:
            raise PoolUnderflowError(
                f"pool holds {self._bits.size} bits, {k} requested; "
                f"pause data frames and replenish"
            )
        out, self._bits = self._bits[:k].copy(), self._bits[k:]
        self.consumed_count += k
        return out

    def matches(self, other: "SstsPool") -> bool:
        return (
            self.consumed_count == other.consumed_count
            and self._bits.size == other._bits.size
            and bool(np.all(self._bits == other._bits))
        )


@dataclass(frozen=True)
class RateCheck:
    """Outcome of the per-frame admission conditions."""

    accepted: bool
    reasons: Tuple[str, ...]      # subset of {"security", "reliability"}
    security_margin: float        # (r_i - I_AE) - k_i/n_ci
    reliability_margin: float     # I_AB - r_i


def check_rate_conditions(cfg: FrameConfig, i_ab_prev: float, i_ae_prev: float) -> RateCheck:
    """Admit a frame iff k_i/n_ci <= r_i - I(A:E) and r_i < I(A:B).

    The first reason flags the secrecy budget, the second reliability.
    """
    if i_ab_prev is None or i_ae_prev is None:
        raise ValueError("previous-frame estimates are required (frame 1 bootstraps without)")
    sec_margin = (cfg.r_i - i_ae_prev) - cfg.k_i / cfg.n_ci
    rel_margin = i_ab_prev - cfg.r_i
    reasons = []
    if sec_margin < 0.0:
        reasons.append("security")
    if rel_margin <= 0.0:
        reasons.append("reliability")
    return RateCheck(
        accepted=not reasons,
        reasons=tuple(reasons),
        security_margin=sec_margin,
        reliability_margin=rel_margin,
    )


def ssts_encrypt(message: np.ndarray, pool: SstsPool) -> np.ndarray:
    """One-time-pad encrypt: Y = M xor S, consuming |M| pool bits."""
    message = np.asarray(message, dtype=np.uint8)
    s = pool.extract(message.size)
    return xor_bits(message, s)


def ssts_decrypt(y: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Invert ssts_encrypt given the same secret bits."""
    return xor_bits(y, s)


def precode(y: np.ndarray, fec: Codec) -> np.ndarray:
    """Forward-error-correction precoding of the encrypted message."""
    return fec.encode(np.asarray(y, dtype=np.uint8))


def mask(z: np.ndarray, rng_seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Draw fresh local random bits L and return (C = Z xor L, L)."""
    z = np.asarray(z, dtype=np.uint8)
    l_bits = random_bits(np.random.default_rng(rng_seed), z.size)
    return xor_bits(z, l_bits), l_bits


def unmask(c: np.ndarray, l_bits: np.ndarray) -> np.ndarray:
    return xor_bits(c, l_bits)


def disclose_and_unmask(
    received_positions: np.ndarray,
    l_bits: np.ndarray,
    c_received: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """Recover Z at the disclosed positions; the rest become erasures.

    ``c_received`` is the receiver's full-length view of the masked
    block (values outside the disclosed positions are ignored).
    Returns (z_values, erasure_mask), both full length.
    """
    l_bits = np.asarray(l_bits, dtype=np.uint8)
    c_received = np.asarray(c_received, dtype=np.uint8)
    if l_bits.size != c_received.size:
        raise CodingError("mask and received block lengths differ")
    pos = np.asarray(received_positions, dtype=np.int64)
    if pos.size and (pos.min() < 0 or pos.max() >= l_bits.size):
        raise CodingError("disclosed position out of range")
    z = np.zeros(l_bits.size, dtype=np.uint8)
    erased = np.ones(l_bits.size, dtype=bool)
    z[pos] = c_received[pos] ^ l_bits[pos]
    erased[pos] = False
    return z, erased


# --- bit channels ------------------------------------------------------------

class BitChannel(ABC):
    """Per-bit delivery/error transport with a phase-error proxy.

    ``nominal_ez`` feeds the eavesdropper-information term of the rate
    conditions; classical test channels set it directly, the quantum
    link computes it from the analytic phase-error rate.
    """

    nominal_ez: float = 0.0

    @abstractmethod
    def transmit(
        self, bits: np.ndarray, rng: np.random.Generator
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Send bits; return (delivered_mask, received_values)."""


class SyntheticChannel(BitChannel):
    """Independent per-bit delivery with a binary-symmetric flip."""

    def __init__(self, delivery_prob: float = 1.0, flip_prob: float = 0.0, ez: float = 0.0):
        if not 0.0 <= delivery_prob <= 1.0 or not 0.0 <= flip_prob <= 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
        self.delivery_prob = delivery_prob
        self.flip_prob = flip_prob
        self.nominal_ez = ez

    def transmit(self, bits, rng):
        bits = np.asarray(bits, dtype=np.uint8)
        delivered = rng.random(bits.size) < self.delivery_prob
        flips = (rng.random(bits.size) < self.flip_prob).astype(np.uint8)
        return delivered, bits ^ flips


class QuantumLinkChannel(BitChannel):
    """Bit transport over the simulated interference link.

    Each codeword bit drives the sender's coding-mode pulses and is
    retransmitted until a round yields a valid one-click detection with
    both parties in coding mode, mirroring the repeat-until-complete
    transmission of the protocol.  The receiver infers the bit from
    which detector fired relative to its own random bit.
    """

    def __init__(
        self,
        params: SystemParams,
        d: float,
        misalignment: str = "offset",
        max_attempts_per_bit: int = 100_000,
    ):
        from ..mc.records import interfere_and_detect, prepare_round, CODING  # local import

        self._prepare = prepare_round
        self._detect = interfere_and_detect
        self._coding = CODING
        self.params = params
        self.d = d
        self.misalignment = misalignment
        self.max_attempts = max_attempts_per_bit
        eta = system_transmittance(params, d)
        self.nominal_ez = z_error(
            params.u, eta, params.p_d, include_vacuum=params.include_vacuum
        )
        self.rounds_used = 0

    def transmit(self, bits, rng):
        bits = np.asarray(bits, dtype=np.uint8)
        delivered = np.zeros(bits.size, dtype=bool)
        values = np.zeros(bits.size, dtype=np.uint8)
        for i in range(bits.size):
            for _ in range(self.max_attempts):
                self.rounds_used += 1
                rec = self._prepare(self.params, rng, bit_source=lambda b=int(bits[i]): b)
                self._detect(rec, self.params, self.d, rng, self.misalignment)
                if rec.mode_a != self._coding:
                    continue  # sender idled in multi-intensity mode this round
                if rec.mode_b != self._coding:
                    continue  # mode mismatch, bit lost this round
                if rec.click_c == rec.click_d:
                    continue  # no-click or double-click round
                delivered[i] = True
                values[i] = rec.bit_b if rec.click_c else 1 - rec.bit_b
                break
            else:
                raise RuntimeError(f"no valid detection for bit {i} "
                                   f"after {self.max_attempts} rounds")
        return delivered, values


# --- pipeline ----------------------------------------------------------------

@dataclass
class FrameReport:
    index: int
    kind: str                      # "random" or "data"
    cfg: FrameConfig
    accepted: bool
    reject_reasons: Tuple[str, ...]
    delivered: int = 0
    sacrificed: int = 0
    ex_hat: Optional[float] = None
    i_ab: Optional[float] = None
    i_ae: Optional[float] = None
    decode_ok: bool = False
    extracted: int = 0

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["cfg"] = {"k_i": self.cfg.k_i, "n_ci": self.cfg.n_ci,
                    "r_i": self.cfg.r_i, "frame_index": self.cfg.frame_index}
        d["reject_reasons"] = list(self.reject_reasons)
        return d


@dataclass
class PipelineResult:
    status: str                    # "ok", "refused", "decode_failed", "stalled"
    decoded: Optional[np.ndarray]
    message_recovered: Optional[bool]
    frames: List[FrameReport] = field(default_factory=list)
    pools_equal: bool = True
    pool_size: int = 0
    failed_frame: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "message_recovered": self.message_recovered,
            "pools_equal": self.pools_equal,
            "pool_size": self.pool_size,
            "failed_frame": self.failed_frame,
            "frames": [f.to_dict() for f in self.frames],
        }


def _frame_seed(seed: int, frame_index: int, label: str) -> int:
    tag = zlib.crc32(label.encode("ascii"))
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(frame_index, tag))
    return int(ss.generate_state(1)[0])


def _run_one_frame(
    cfg: FrameConfig,
    x: np.ndarray,
    channel: BitChannel,
    rng: np.random.Generator,
    seed: int,
    sacrifice_frac: float,
    f: float,
    alice_pool: SstsPool,
    bob_pool: SstsPool,
    kind: str,
) -> Tuple[FrameReport, Optional[np.ndarray], Tuple[float, float]]:
    """Transport one admitted frame; returns (report, x_hat, estimates)."""
    z = secure_encode(x, cfg, seed)
    c, l_bits = mask(z, _frame_seed(seed, cfg.frame_index, "mask"))
    delivered, values = channel.transmit(c, rng)
    positions = np.nonzero(delivered)[0]

    sac_rng = np.random.default_rng(_frame_seed(seed, cfg.frame_index, "sacrifice"))
    perm = sac_rng.permutation(positions.size)
    n_sac = int(round(sacrifice_frac * positions.size))
    sac_pos = positions[perm[:n_sac]]
    kept_pos = positions[perm[n_sac:]]

    # QBER estimate: the sender publishes Z at the sacrificed positions
    if n_sac > 0:
        z_bob = values[sac_pos] ^ l_bits[sac_pos]
        ex_hat = float(np.mean(z_bob != z[sac_pos]))
    else:
        ex_hat = 0.0

    z_vals, erased = disclose_and_unmask(kept_pos, l_bits, values)
    code = _build_code(cfg, seed)
    full = code.decode(z_vals, erasures=erased)
    x_hat = full.bits[: cfg.k_i]

    q_hat = positions.size / cfg.n_ci
    i_ab = q_hat * (1.0 - f * binary_entropy(min(max(ex_hat, 0.0), 1.0)))
    i_ae = q_hat * binary_entropy(min(max(channel.nominal_ez, 0.0), 1.0))

    # pool extraction from the corrected masked block at public positions
    extracted = 0
    post = check_rate_conditions(cfg, i_ab, i_ae)
    if post.accepted and full.ok:
        budget = int(cfg.n_ci * (cfg.r_i - i_ae))
        take = min(budget, kept_pos.size)
        if take > 0:
            ext_rng = np.random.default_rng(_frame_seed(seed, cfg.frame_index, "extract"))
            order = ext_rng.permutation(kept_pos.size)
            ext_pos = kept_pos[order[:take]]
            alice_pool.add(c[ext_pos])
            z_corrected = code.encode(full.bits)
            bob_pool.add(z_corrected[ext_pos] ^ l_bits[ext_pos])
            extracted = take

    report = FrameReport(
        index=cfg.frame_index, kind=kind, cfg=cfg,
        accepted=True, reject_reasons=(),
        delivered=int(positions.size), sacrificed=n_sac,
        ex_hat=ex_hat, i_ab=i_ab, i_ae=i_ae,
        decode_ok=bool(full.ok), extracted=extracted,
    )
    return report, x_hat, (i_ab, i_ae)


def run_frame_pipeline(
    message: np.ndarray,
    channel: BitChannel,
    k_i: int,
    n_ci: int,
    r_i: float,
    seed: int,
    fec: Optional[Codec] = None,
    f: float = 1.2,
    sacrifice_frac: float = 0.1,
    max_frames: int = 10_000,
    pools: Optional[Tuple[SstsPool, SstsPool]] = None,
) -> PipelineResult:
    """Run the full frame pipeline for ``message`` over ``channel``.

    Random-number frames replenish the pool until it covers the
    message; the message is then pad-encrypted, precoded with ``fec``,
    framed, and transported.  Any rate-condition rejection stops the
    pipeline before the offending frame is transmitted.
    """
    message = np.asarray(message, dtype=np.uint8)
    fec = fec or IdentityCodec()
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0xC0DE,)))
    alice_pool, bob_pool = pools if pools is not None else (SstsPool(), SstsPool())

    result = PipelineResult(status="ok", decoded=None, message_recovered=None)
    if message.size == 0:
        result.decoded = message.copy()
        result.message_recovered = True
        result.pools_equal = alice_pool.matches(bob_pool)
        result.pool_size = len(alice_pool)
        return result

    frame_index = 0
    estimates: Optional[Tuple[float, float]] = None

    def admit(cfg: FrameConfig, kind: str) -> Optional[FrameReport]:
        """Rate-condition gate; frame 1 bootstraps without estimates."""
        if cfg.frame_index == 1:
            return None
        check = check_rate_conditions(cfg, estimates[0], estimates[1])
        if check.accepted:
            return None
        return FrameReport(index=cfg.frame_index, kind=kind, cfg=cfg,
                           accepted=False, reject_reasons=check.reasons)

    # replenish the pool with random-number frames; frame 1 is always one
    dry_frames = 0
    while len(alice_pool) < message.size or frame_index == 0:
        frame_index += 1
        if frame_index > max_frames:
            result.status = "stalled"
            result.failed_frame = frame_index
            break
        cfg = FrameConfig(k_i=k_i, n_ci=n_ci, r_i=r_i, frame_index=frame_index)
        refusal = admit(cfg, "random")
        if refusal is not None:
            result.frames.append(refusal)
            result.status = "refused"
            result.failed_frame = frame_index
            break
        x = random_bits(rng, k_i)
        report, _, estimates = _run_one_frame(
            cfg, x, channel, rng, seed, sacrifice_frac, f, alice_pool, bob_pool, "random"
        )
        result.frames.append(report)
        dry_frames = dry_frames + 1 if report.extracted == 0 else 0
        if dry_frames >= 3 and len(alice_pool) < message.size:
            # the channel estimates leave no secrecy budget to extract from
            result.status = "stalled"
            result.failed_frame = frame_index
            break

    if result.status == "ok":
        s_alice = alice_pool.extract(message.size)
        s_bob = bob_pool.extract(message.size)
        y = xor_bits(message, s_alice)
        x_stream = precode(y, fec)
        n_chunks = math.ceil(x_stream.size / k_i)
        x_hat = np.zeros(n_chunks * k_i, dtype=np.uint8)
        for j in range(n_chunks):
            frame_index += 1
            cfg = FrameConfig(k_i=k_i, n_ci=n_ci, r_i=r_i, frame_index=frame_index)
            refusal = admit(cfg, "data")
            if refusal is not None:
                result.frames.append(refusal)
                result.status = "refused"
                result.failed_frame = frame_index
                break
            chunk = np.zeros(k_i, dtype=np.uint8)
            part = x_stream[j * k_i : (j + 1) * k_i]
            chunk[: part.size] = part
            report, chunk_hat, estimates = _run_one_frame(
                cfg, chunk, channel, rng, seed, sacrifice_frac, f,
                alice_pool, bob_pool, "data",
            )
            result.frames.append(report)
            if not report.decode_ok:
                result.status = "decode_failed"
                result.failed_frame = frame_index
                break
            x_hat[j * k_i : (j + 1) * k_i] = chunk_hat
        if result.status == "ok":
            post = fec.decode(x_hat[: x_stream.size])
            y_hat = post.bits[: y.size]
            result.decoded = ssts_decrypt(y_hat, s_bob)
            result.message_recovered = bool(np.array_equal(result.decoded, message))
            if not post.ok:
                result.status = "decode_failed" if not result.message_recovered else "ok"

    result.pools_equal = alice_pool.matches(bob_pool)
    result.pool_size = len(alice_pool)
    return result
