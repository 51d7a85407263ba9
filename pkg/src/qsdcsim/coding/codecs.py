"""Pluggable forward-error-correction codecs.

Bits are numpy uint8 arrays of 0/1.  Three desk-scale codecs ship:
identity, repetition-with-majority-vote, and a seeded sparse systematic
linear block code decoded by normalized min-sum message passing (handles
both flips and erasures).
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "CodingError",
    "DecodeResult",
    "Codec",
    "IdentityCodec",
    "RepetitionCodec",
    "SparseLinearCodec",
    "random_bits",
    "xor_bits",
]


class CodingError(ValueError):
    """Raised for rate/length violations in the coding layer."""


def random_bits(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2, size=n, dtype=np.uint8)


def xor_bits(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise CodingError(f"length mismatch: {a.shape} vs {b.shape}")
    return (a.astype(np.uint8) ^ b.astype(np.uint8)).astype(np.uint8)


@dataclass
class DecodeResult:
    bits: np.ndarray
    ok: bool


class Codec(ABC):
    """Encode/decode interface shared by the precoder and tests."""

    name: str = "codec"

    @property
    @abstractmethod
    def rate(self) -> float:
        """Information bits per coded bit."""

    @abstractmethod
    def encode(self, info: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def decode(self, received: np.ndarray, erasures: Optional[np.ndarray] = None) -> DecodeResult: ...


class IdentityCodec(Codec):
    """Rate-1 pass-through; decoding fails on any erasure."""

    name = "identity"

    @property
    def rate(self) -> float:
        return 1.0

    def encode(self, info: np.ndarray) -> np.ndarray:
        return np.asarray(info, dtype=np.uint8).copy()

    def decode(self, received: np.ndarray, erasures: Optional[np.ndarray] = None) -> DecodeResult:
        bits = np.asarray(received, dtype=np.uint8).copy()
        ok = erasures is None or not bool(np.any(erasures))
        return DecodeResult(bits=bits, ok=ok)


class RepetitionCodec(Codec):
    """Each bit repeated ``copies`` times, decoded by majority vote.

    Erased copies are dropped from the vote; a position with every copy
    erased decodes to 0 with ok=False.  Voting ties resolve to 0.
    """

    name = "repetition"

    def __init__(self, copies: int = 3):
        if copies < 1:
            raise CodingError(f"copies must be >= 1, got {copies}")
        self.copies = copies

    @property
    def rate(self) -> float:
        return 1.0 / self.copies

    def encode(self, info: np.ndarray) -> np.ndarray:
        return np.repeat(np.asarray(info, dtype=np.uint8), self.copies)

    def decode(self, received: np.ndarray, erasures: Optional[np.ndarray] = None) -> DecodeResult:
        received = np.asarray(received, dtype=np.uint8)
        if received.size % self.copies != 0:
            raise CodingError(f"coded length {received.size} not a multiple of {self.copies}")
        groups = received.reshape(-1, self.copies).astype(np.int64)
        if erasures is None:
            ones = groups.sum(axis=1)
            counted = np.full(groups.shape[0], self.copies, dtype=np.int64)
        else:
            keep = ~np.asarray(erasures, dtype=bool).reshape(-1, self.copies)
            ones = (groups * keep).sum(axis=1)
            counted = keep.sum(axis=1)
        bits = (2 * ones > counted).astype(np.uint8)
        return DecodeResult(bits=bits, ok=bool(np.all(counted > 0)))


class SparseLinearCodec(Codec):
    """Seeded sparse systematic linear block code with min-sum decoding.

    The parity-check matrix is [A | S]: A holds ``col_weight`` random
    check rows per information column, S is an invertible bidiagonal
    staircase over the parity columns, so encoding is a prefix-xor of
    A v.  Decoding runs normalized min-sum over the check graph with
    hard channel inputs (erasures enter as zero log-likelihood) and
    stops on a satisfied syndrome.
    """

    name = "sparse-linear"

    def __init__(
        self,
        n: int,
        k: int,
        seed: int,
        col_weight: int = 3,
        max_iters: int = 60,
        normalization: float = 0.75,
    ):
        if not 0 < k < n:
            raise CodingError(f"need 0 < k < n, got k={k}, n={n}")
        m = n - k
        if col_weight < 2 or col_weight > m:
            raise CodingError(f"col_weight {col_weight} out of range for m={m}")
        self.n, self.k, self.m = n, k, m
        self.seed = seed
        self.max_iters = max_iters
        self.normalization = normalization

        rng = np.random.default_rng(np.random.SeedSequence(seed))
        # information-column edges: col_weight distinct checks per column
        info_checks = np.empty((k, col_weight), dtype=np.int64)
        for j in range(k):
            info_checks[j] = rng.choice(m, size=col_weight, replace=False)
        info_vars = np.repeat(np.arange(k, dtype=np.int64), col_weight)
        info_chks = info_checks.reshape(-1)
        # staircase edges: parity column i sits on checks i and i+1
        stair_vars = [np.arange(m, dtype=np.int64) + k, np.arange(m - 1, dtype=np.int64) + k]
        stair_chks = [np.arange(m, dtype=np.int64), np.arange(1, m, dtype=np.int64)]
        self.edge_var = np.concatenate([info_vars, *stair_vars])
        self.edge_chk = np.concatenate([info_chks, *stair_chks])
        order = np.argsort(self.edge_chk, kind="stable")
        self.edge_var = self.edge_var[order]
        self.edge_chk = self.edge_chk[order]
        # per-check edge segments (edges sorted by check index)
        self._chk_start = np.searchsorted(self.edge_chk, np.arange(m))
        self._chk_count = np.diff(np.append(self._chk_start, self.edge_chk.size))
        self._info_rows = info_checks

    @property
    def rate(self) -> float:
        return self.k / self.n

    def encode(self, info: np.ndarray) -> np.ndarray:
        info = np.asarray(info, dtype=np.uint8)
        if info.size != self.k:
            raise CodingError(f"expected {self.k} information bits, got {info.size}")
        active = np.nonzero(info)[0]
        syn = (np.bincount(self._info_rows[active].ravel(), minlength=self.m) % 2).astype(np.uint8)
        parity = np.bitwise_xor.accumulate(syn)
        return np.concatenate([info, parity])

    def decode(self, received: np.ndarray, erasures: Optional[np.ndarray] = None) -> DecodeResult:
        received = np.asarray(received, dtype=np.uint8)
        if received.size != self.n:
            raise CodingError(f"expected {self.n} coded bits, got {received.size}")
        llr = (1.0 - 2.0 * received.astype(np.float64))  # +1 for 0, -1 for 1
        if erasures is not None:
            llr[np.asarray(erasures, dtype=bool)] = 0.0

        ev, ec = self.edge_var, self.edge_chk
        msg_cv = np.zeros(ev.size, dtype=np.float64)
        hard = received.copy()
        ok = self._syndrome_ok(hard)
        it = 0
        while not ok and it < self.max_iters:
            it += 1
            # variable -> check: posterior minus the incoming edge message
            acc = np.bincount(ev, weights=msg_cv, minlength=self.n)
            msg_vc = llr[ev] + acc[ev] - msg_cv
            # check -> variable: normalized min-sum with self-exclusion
            sign = np.where(msg_vc < 0.0, -1.0, 1.0)
            mag = np.abs(msg_vc)
            tot_sign = np.ones(self.m)
            np.multiply.at(tot_sign, ec, sign)
            m1, m1_arg, m2 = _segment_two_smallest(mag, ec, self.m)
            out_mag = np.where(np.arange(ev.size) == m1_arg[ec], m2[ec], m1[ec])
            # degree-1 checks yield an empty exclusion set (+inf); saturate
            out_mag = np.minimum(out_mag, _LLR_CAP)
            msg_cv = self.normalization * tot_sign[ec] * sign * out_mag
            post = llr + np.bincount(ev, weights=msg_cv, minlength=self.n)
            hard = (post < 0.0).astype(np.uint8)
            ok = self._syndrome_ok(hard)
        return DecodeResult(bits=hard[: self.k], ok=ok)

    def _syndrome_ok(self, word: np.ndarray) -> bool:
        par = np.bincount(self.edge_chk, weights=word[self.edge_var].astype(np.float64),
                          minlength=self.m)
        return bool(np.all(par.astype(np.int64) % 2 == 0))


_LLR_CAP = 100.0


def _segment_two_smallest(values: np.ndarray, seg: np.ndarray, n_seg: int):
    """Per-segment smallest value, its (global) edge index, and runner-up.

    ``seg`` must be sorted ascending.  Returns (m1, m1_arg, m2) arrays of
    length n_seg; segments with a single edge get m2 = +inf.
    """
    idx = np.arange(values.size)
    m1 = np.full(n_seg, np.inf)
    np.minimum.at(m1, seg, values)
    # first edge achieving the per-segment minimum
    is_min = values == m1[seg]
    m1_arg = np.full(n_seg, values.size, dtype=np.int64)
    np.minimum.at(m1_arg, seg[is_min], idx[is_min])
    masked = np.where(idx == m1_arg[seg], np.inf, values)
    m2 = np.full(n_seg, np.inf)
    np.minimum.at(m2, seg, masked)
    return m1, m1_arg, m2
