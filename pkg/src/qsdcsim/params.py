"""Physical and protocol parameters plus the fiber loss model.

Every other module takes a :class:`SystemParams` instance as its single
source of truth for a run.  Instances are immutable and safe to share
across threads.
"""
from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass
from typing import Union

__all__ = [
    "SystemParams",
    "InvalidParameterError",
    "channel_transmittance",
    "system_transmittance",
    "mode_match_rate",
    "load_config",
    "dump_config",
]


class InvalidParameterError(ValueError):
    """Raised when a physical or protocol parameter is out of range."""


DELTA_MODELS = ("probability", "angle")


@dataclass(frozen=True)
class SystemParams:
    """All physical and protocol constants for one run.

    Attributes:
        zeta: fiber attenuation coefficient, dB/km.
        eta_d: detector efficiency, in [0, 1].
        p_d: dark-count probability per pulse per detector, in [0, 1).
        delta_mis: misalignment parameter.  Interpretation depends on
            ``delta_model``: with ``"probability"`` (default) it is used
            directly as the effective sin^2(delta/2) error weight; with
            ``"angle"`` it is a phase mismatch in radians and
            sin^2(delta_mis/2) is used instead.
        f: forward-coding inefficiency, >= 1.
        u: signal intensity (mean photon number per party), > 0.
        p_multi: probability of choosing the multi-intensity mode, (0, 1).
        nu1, nu2: decoy intensities, u >> nu1 > nu2 > 0.
        phase_slices: number of phase slices for decoy phase matching.
        e_d: intrinsic detector error rate (comparison protocols).
        e_0: background error rate (comparison protocols).
        include_vacuum: whether the n=0 (dark-count-only) term enters the
            phase-error series.  Default False; see the calibration notes
            in the README.
        delta_model: "probability" or "angle", see ``delta_mis``.
        mdi_effective_eta: if True (default), the MDI comparison formulas
            are evaluated with the effective transmittance eta_d*eta_c in
            place of the bare channel transmittance.
    """

    zeta: float = 0.2
    eta_d: float = 0.15
    p_d: float = 8e-8
    delta_mis: float = 0.015
    f: float = 1.2
    u: float = 0.046
    p_multi: float = 0.01
    nu1: float = 0.01
    nu2: float = 0.001
    phase_slices: int = 16
    e_d: float = 0.013
    e_0: float = 0.5
    include_vacuum: bool = False
    delta_model: str = "probability"
    mdi_effective_eta: bool = True

    def __post_init__(self) -> None:
        if self.zeta < 0:
            raise InvalidParameterError(f"zeta must be >= 0 dB/km, got {self.zeta}")
        if not 0.0 <= self.eta_d <= 1.0:
            raise InvalidParameterError(f"eta_d must be in [0, 1], got {self.eta_d}")
        if not 0.0 <= self.p_d < 1.0:
            raise InvalidParameterError(f"p_d must be in [0, 1), got {self.p_d}")
        if not 0.0 <= self.delta_mis <= 1.0:
            raise InvalidParameterError(f"delta_mis must be in [0, 1], got {self.delta_mis}")
        if self.f < 1.0:
            raise InvalidParameterError(f"f must be >= 1, got {self.f}")
        if self.u <= 0.0:
            raise InvalidParameterError(f"u must be > 0, got {self.u}")
        if not 0.0 < self.p_multi < 1.0:
            raise InvalidParameterError(f"p_multi must be in (0, 1), got {self.p_multi}")
        if not self.u > self.nu1 > self.nu2 > 0.0:
            raise InvalidParameterError(
                f"decoy intensities must satisfy u > nu1 > nu2 > 0, "
                f"got u={self.u}, nu1={self.nu1}, nu2={self.nu2}"
            )
        if self.phase_slices < 2 or self.phase_slices % 2 != 0:
            raise InvalidParameterError(
                f"phase_slices must be an even integer >= 2, got {self.phase_slices}"
            )
        if not 0.0 <= self.e_d <= 1.0:
            raise InvalidParameterError(f"e_d must be in [0, 1], got {self.e_d}")
        if not 0.0 <= self.e_0 <= 1.0:
            raise InvalidParameterError(f"e_0 must be in [0, 1], got {self.e_0}")
        if self.delta_model not in DELTA_MODELS:
            raise InvalidParameterError(
                f"delta_model must be one of {DELTA_MODELS}, got {self.delta_model!r}"
            )

    @property
    def misalignment_sin2(self) -> float:
        """Effective sin^2(delta/2) used wherever the error model needs it."""
        if self.delta_model == "angle":
            return math.sin(self.delta_mis / 2.0) ** 2
        return self.delta_mis

    @property
    def mode_match(self) -> float:
        """Mode matching rate q = 1 - 2p(1-p) for this parameter set."""
        return mode_match_rate(self.p_multi)

    def replace(self, **changes) -> "SystemParams":
        """Return a copy with the given fields replaced."""
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def channel_transmittance(zeta: float, d: float) -> float:
    """Fiber transmittance 10^(-zeta*d/10) over a span of d km.

    Strictly decreasing and multiplicative in d.
    """
    if d < 0:
        raise InvalidParameterError(f"distance must be >= 0 km, got {d}")
    if zeta < 0:
        raise InvalidParameterError(f"zeta must be >= 0 dB/km, got {zeta}")
    return 10.0 ** (-zeta * d / 10.0)


def system_transmittance(params: SystemParams, d: float) -> float:
    """Per-arm transmittance eta = eta_d * sqrt(eta_c(d)).

    ``d`` is the total end-to-end distance; the measurement node sits at
    d/2, so each arm sees sqrt(eta_c).  Detector efficiency is folded in.
    """
    return params.eta_d * math.sqrt(channel_transmittance(params.zeta, d))


def mode_match_rate(p: float) -> float:
    """Probability 1 - 2p(1-p) that both parties pick the same mode."""
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"mode probability must be in [0, 1], got {p}")
    return 1.0 - 2.0 * p * (1.0 - p)


# --- flat key=value config files -------------------------------------------

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SystemParams)}


def _parse_value(key: str, raw: str) -> Union[float, int, bool, str]:
    ftype = _FIELD_TYPES[key]
    raw = raw.strip()
    if ftype == "bool":
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise InvalidParameterError(f"config key {key}: invalid boolean {raw!r}")
    if ftype == "int":
        return int(raw)
    if ftype == "float":
        return float(raw)
    return raw


def load_config(path: Union[str, os.PathLike], **overrides) -> SystemParams:
    """Load a SystemParams from a flat ``key = value`` text file.

    Keys match the field names; '#' starts a comment; missing keys keep
    their defaults.  Keyword overrides win over file values.
    """
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidParameterError(
                    f"{path}:{lineno}: expected 'key = value', got {line!r}"
                )
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in _FIELD_TYPES:
                raise InvalidParameterError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _parse_value(key, raw)
    values.update(overrides)
    return SystemParams(**values)


def dump_config(params: SystemParams, path: Union[str, os.PathLike]) -> None:
    """Write ``params`` as a flat key=value file readable by load_config."""
    lines = [f"{k} = {v}" for k, v in params.to_dict().items()]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
