"""Record-level reference implementation of the pulse simulation.

One :class:`PulseRecord` per protocol round.  This path is the readable
reference for the chunked kernels in ``_kernel_numpy`` / ``_kernel``:
it consumes the per-round uniform draws in exactly the same order
(mode_a, mode_b, choice_a, choice_b, phase_a, phase_b, jitter,
detector_c, detector_d), so a campaign built on either path from the
same seeded generator produces identical outcomes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..params import SystemParams, system_transmittance

__all__ = [
    "CODING",
    "MULTI",
    "PulseRecord",
    "SiftResult",
    "SimReport",
    "misalignment_shift",
    "prepare_round",
    "interfere_and_detect",
    "interfere_and_detect_fock",
    "sift",
    "estimate_parameters",
]

CODING = 0
MULTI = 1

# intensity indices in multi mode; 2 is the vacuum decoy
DECOY_LABELS = ("nu1", "nu2", "vac")


@dataclass
class PulseRecord:
    """Choices and outcomes of one protocol round."""

    mode_a: int
    mode_b: int
    bit_a: Optional[int]          # coding mode only
    bit_b: Optional[int]
    intensity_a: float
    intensity_b: float
    phase_a: float
    phase_b: float
    intensity_idx_a: int          # 0=nu1, 1=nu2, 2=vacuum, -1=coding
    intensity_idx_b: int
    phase_slice_a: Optional[int]  # multi mode only
    phase_slice_b: Optional[int]
    n_slices: int = 16
    jitter_draw: float = 0.5      # uniform reserved for the jitter model
    click_c: Optional[bool] = None
    click_d: Optional[bool] = None
    photon_n: Optional[int] = None  # set only by the Fock-sampling detector


@dataclass
class SiftResult:
    """Partitioned records plus the denominators needed for estimation."""

    coding_kept: List[PulseRecord]
    decoy_kept: List[PulseRecord]
    discarded: List[PulseRecord]
    n_rounds: int = 0
    n_coding_coding: int = 0
    n_multi_multi: int = 0
    n_mixed: int = 0
    # per intensity index: matched multi/multi pairs regardless of clicks
    n_decoy_pairs: Dict[int, int] = field(default_factory=dict)


@dataclass
class SimReport:
    """Aggregated campaign statistics with binomial standard errors."""

    n_pulses: int
    kept_coding: int
    q_hat: Optional[float]
    q_se: Optional[float]
    ex_hat: Optional[float]
    ex_se: Optional[float]
    yields_hat: Dict[str, Optional[float]]
    seed: Optional[int]
    shards: int = 1
    backend: str = "records"
    distance_km: Optional[float] = None
    n_coding_coding: int = 0
    n_errors: int = 0
    mode_match_hat: Optional[float] = None
    counts: Dict[str, int] = field(default_factory=dict)
    truth_yields: Optional[Dict[int, Tuple[int, int]]] = None
    params_digest: Optional[str] = None

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        if self.truth_yields is not None:
            out["truth_yields"] = {str(k): list(v) for k, v in self.truth_yields.items()}
        return out


def misalignment_shift(params: SystemParams, mode: str) -> Tuple[float, float]:
    """Return (fixed_offset, jitter_halfwidth) for the phase mismatch model.

    ``"offset"``: a constant shift delta_r with sin^2(delta_r/2) equal to
    the configured misalignment weight.  ``"jitter"``: a zero-mean uniform
    shift on [-w, w] whose expected sin^2(./2) equals the same weight.
    ``"none"`` disables the mismatch entirely.
    """
    if mode == "none":
        return 0.0, 0.0
    s2 = params.misalignment_sin2
    if mode == "offset":
        return 2.0 * math.asin(math.sqrt(s2)), 0.0
    if mode == "jitter":
        return 0.0, _jitter_halfwidth(s2)
    raise ValueError(f"unknown misalignment mode {mode!r}")


def _jitter_halfwidth(s2: float) -> float:
    """Solve (1 - sin(w)/w) / 2 = s2 for w on (0, pi]."""
    if s2 <= 0.0:
        return 0.0
    from scipy.optimize import brentq

    target = lambda w: 0.5 * (1.0 - math.sin(w) / w) - s2
    return float(brentq(target, 1e-9, math.pi))


def prepare_round(
    params: SystemParams,
    rng: np.random.Generator,
    bit_source: Optional[Callable[[], int]] = None,
) -> PulseRecord:
    """Draw one round of mode / bit / intensity / phase choices.

    Seven uniforms are consumed in a fixed order regardless of the
    branch taken, so the draw stream stays aligned with the vectorized
    kernels.  When ``bit_source`` is given, Alice's coding bit comes
    from it (codeword-driven operation) instead of the uniform draw.
    """
    u = rng.random(7)
    multi_a = u[0] < params.p_multi
    multi_b = u[1] < params.p_multi
    m = params.phase_slices

    if multi_a:
        idx_a = min(int(u[2] * 3.0), 2)
        int_a = (params.nu1, params.nu2, 0.0)[idx_a]
        phase_a = 2.0 * math.pi * u[4]
        rec_a = (None, int_a, phase_a, idx_a, int(u[4] * m))
    else:
        bit = bit_source() if bit_source is not None else (1 if u[2] < 0.5 else 0)
        rec_a = (bit, params.u, math.pi * bit, -1, None)

    if multi_b:
        idx_b = min(int(u[3] * 3.0), 2)
        int_b = (params.nu1, params.nu2, 0.0)[idx_b]
        phase_b = 2.0 * math.pi * u[5]
        rec_b = (None, int_b, phase_b, idx_b, int(u[5] * m))
    else:
        bit = 1 if u[3] < 0.5 else 0
        rec_b = (bit, params.u, math.pi * bit, -1, None)

    return PulseRecord(
        mode_a=MULTI if multi_a else CODING,
        mode_b=MULTI if multi_b else CODING,
        bit_a=rec_a[0], bit_b=rec_b[0],
        intensity_a=rec_a[1], intensity_b=rec_b[1],
        phase_a=rec_a[2], phase_b=rec_b[2],
        intensity_idx_a=rec_a[3], intensity_idx_b=rec_b[3],
        phase_slice_a=rec_a[4], phase_slice_b=rec_b[4],
        n_slices=m,
        jitter_draw=u[6],
    )


def interfere_and_detect(
    pulse: PulseRecord,
    params: SystemParams,
    d: float,
    rng: np.random.Generator,
    misalignment: str = "offset",
) -> Tuple[bool, bool]:
    """Simulate the beam-splitter outputs and threshold detection.

    Detector-side means mu_C/D = eta (Ia + Ib +/- 2 sqrt(Ia Ib) cos D)/2
    with D = phase_b - phase_a plus the misalignment shift; each detector
    clicks independently with probability 1 - (1 - p_d) e^(-mu).
    """
    eta = system_transmittance(params, d)
    offset, halfwidth = misalignment_shift(params, misalignment)
    u = rng.random(2)
    mis = offset + halfwidth * (2.0 * pulse.jitter_draw - 1.0)
    delta = (pulse.phase_b - pulse.phase_a) + mis
    s = pulse.intensity_a + pulse.intensity_b
    cross = 2.0 * math.sqrt(pulse.intensity_a * pulse.intensity_b) * math.cos(delta)
    mu_c = max(0.5 * eta * (s + cross), 0.0)
    mu_d = max(0.5 * eta * (s - cross), 0.0)
    p_c = 1.0 - (1.0 - params.p_d) * math.exp(-mu_c)
    p_d_click = 1.0 - (1.0 - params.p_d) * math.exp(-mu_d)
    pulse.click_c = bool(u[0] < p_c)
    pulse.click_d = bool(u[1] < p_d_click)
    return pulse.click_c, pulse.click_d


def interfere_and_detect_fock(
    pulse: PulseRecord,
    params: SystemParams,
    d: float,
    rng: np.random.Generator,
    misalignment: str = "offset",
) -> Tuple[bool, bool]:
    """Detection via explicit photon-number sampling, tagging the record.

    Equivalent in distribution to :func:`interfere_and_detect` for
    equal-intensity rounds: the total photon number is Poisson with the
    combined pre-loss intensity, each photon independently survives with
    probability eta and lands on D0 with probability cos^2(D/2).  Used
    for per-photon-number yield validation; restricted to rounds where
    both intensities are equal.
    """
    if pulse.intensity_a != pulse.intensity_b:
        raise ValueError("Fock-sampling detection requires equal intensities")
    eta = system_transmittance(params, d)
    offset, halfwidth = misalignment_shift(params, misalignment)
    mis = offset + halfwidth * (2.0 * pulse.jitter_draw - 1.0)
    delta = (pulse.phase_b - pulse.phase_a) + mis
    n = int(rng.poisson(pulse.intensity_a + pulse.intensity_b))
    detected = int(rng.binomial(n, eta)) if n > 0 else 0
    at_c = int(rng.binomial(detected, math.cos(delta / 2.0) ** 2)) if detected > 0 else 0
    at_d = detected - at_c
    dark = rng.random(2)
    pulse.photon_n = n
    pulse.click_c = bool(at_c > 0 or dark[0] < params.p_d)
    pulse.click_d = bool(at_d > 0 or dark[1] < params.p_d)
    return pulse.click_c, pulse.click_d


def sift(records: Sequence[PulseRecord]) -> SiftResult:
    """Partition completed records per the protocol's sifting rules.

    Kept coding rounds: both parties in coding mode with exactly one
    click.  Kept decoy rounds: both in multi mode, one click, equal
    intensities and phase slices equal or opposite.  Everything else is
    discarded.  Pair denominators (regardless of clicks) are tallied for
    the per-intensity click-rate estimates.
    """
    res = SiftResult(coding_kept=[], decoy_kept=[], discarded=[],
                     n_decoy_pairs={0: 0, 1: 0, 2: 0})
    for rec in records:
        if rec.click_c is None or rec.click_d is None:
            raise ValueError("sift requires completed records (clicks set)")
        res.n_rounds += 1
        one_click = rec.click_c != rec.click_d
        if rec.mode_a == CODING and rec.mode_b == CODING:
            res.n_coding_coding += 1
            (res.coding_kept if one_click else res.discarded).append(rec)
        elif rec.mode_a == MULTI and rec.mode_b == MULTI:
            res.n_multi_multi += 1
            matched = rec.intensity_idx_a == rec.intensity_idx_b and _slices_match(rec)
            if matched:
                res.n_decoy_pairs[rec.intensity_idx_a] += 1
            if matched and one_click:
                res.decoy_kept.append(rec)
            else:
                res.discarded.append(rec)
        else:
            res.n_mixed += 1
            res.discarded.append(rec)
    return res


def _slices_match(rec: PulseRecord) -> bool:
    diff = (rec.phase_slice_a - rec.phase_slice_b) % rec.n_slices
    return diff == 0 or diff == rec.n_slices // 2


def estimate_parameters(sifted: SiftResult, truth_access: bool = False) -> SimReport:
    """Empirical gain, X-basis QBER and decoy click rates from sifted sets.

    Statistics over empty denominators are reported as None rather than
    zero.  With ``truth_access`` the kept coding records must carry
    photon-number tags (from the Fock-sampling detector); per-photon
    yields are then tabulated as {n: (rounds, one_click_rounds)}.
    """
    n_cc = sifted.n_coding_coding
    kept = len(sifted.coding_kept)
    q_hat, q_se = _binomial(kept, n_cc)

    errors = sum(1 for r in sifted.coding_kept if _is_error(r))
    ex_hat, ex_se = _binomial(errors, kept)

    yields: Dict[str, Optional[float]] = {}
    per_idx_clicks = {0: 0, 1: 0, 2: 0}
    for rec in sifted.decoy_kept:
        per_idx_clicks[rec.intensity_idx_a] += 1
    for idx, label in enumerate(DECOY_LABELS):
        rate, _ = _binomial(per_idx_clicks[idx], sifted.n_decoy_pairs.get(idx, 0))
        yields[label] = rate

    truth: Optional[Dict[int, Tuple[int, int]]] = None
    if truth_access:
        truth = {}
        for rec in sifted.coding_kept + sifted.discarded:
            if rec.photon_n is None:
                continue
            tot, clk = truth.get(rec.photon_n, (0, 0))
            one = rec.click_c != rec.click_d
            truth[rec.photon_n] = (tot + 1, clk + (1 if one else 0))
        if not truth:
            raise ValueError("truth_access set but no records carry photon tags")

    matched = sifted.n_coding_coding + sifted.n_multi_multi
    return SimReport(
        n_pulses=sifted.n_rounds,
        kept_coding=kept,
        q_hat=q_hat, q_se=q_se,
        ex_hat=ex_hat, ex_se=ex_se,
        yields_hat=yields,
        seed=None,
        n_coding_coding=n_cc,
        n_errors=errors,
        mode_match_hat=(matched / sifted.n_rounds) if sifted.n_rounds else None,
        counts={
            "coding_coding": n_cc,
            "multi_multi": sifted.n_multi_multi,
            "mixed": sifted.n_mixed,
            "decoy_pairs_nu1": sifted.n_decoy_pairs.get(0, 0),
            "decoy_pairs_nu2": sifted.n_decoy_pairs.get(1, 0),
            "decoy_pairs_vac": sifted.n_decoy_pairs.get(2, 0),
        },
        truth_yields=truth,
    )


def _is_error(rec: PulseRecord) -> bool:
    bits_equal = rec.bit_a == rec.bit_b
    return (bits_equal and rec.click_d) or (not bits_equal and rec.click_c)


def _binomial(k: int, n: int) -> Tuple[Optional[float], Optional[float]]:
    if n <= 0:
        return None, None
    p = k / n
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / n)
