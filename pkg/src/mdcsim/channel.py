"""Nakagami-m channel realizations and the link-quality weight derived from them.

Channel gains are amplitudes; ``gain**2`` is relative channel power with mean
``omega``. Lower fading parameter ``m`` means a deeper-fading, worse link.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _require_positive(name: str, value) -> None:
    if isinstance(value, (int, float)):
        bad = not value > 0
    else:
        bad = bool(np.any(np.asarray(value) <= 0))
    if bad:
        raise ValueError(f"{name} must be > 0, got {value!r}")


def nakagami_pdf(x: float, m: float, omega: float = 1.0) -> float:
    """Density of the Nakagami-m amplitude distribution at ``x``.

    f(x) = 2 m^m / (Gamma(m) omega^m) * x^(2m-1) * exp(-m x^2 / omega)
    """
    _require_positive("m", m)
    _require_positive("omega", omega)
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x!r}")
    if x == 0:
        # x^(2m-1) diverges for m < 1/2 and is 1 at m = 1/2
        if m < 0.5:
            return math.inf
        if m > 0.5:
            return 0.0
    log_f = (
        math.log(2.0)
        + m * math.log(m)
        - math.lgamma(m)
        - m * math.log(omega)
        - m * x * x / omega
    )
    if x > 0:
        log_f += (2.0 * m - 1.0) * math.log(x)
    return math.exp(log_f)


def nakagami_sample(rng: np.random.Generator, m, omega=1.0, size=None):
    """Draw Nakagami(m, omega) amplitudes as sqrt(Gamma(shape=m, scale=omega/m)).

    ``m`` and ``omega`` broadcast, so one call can cover every interface of a slot.
    """
    _require_positive("m", m)
    _require_positive("omega", omega)
    m = np.asarray(m, dtype=float)
    power = rng.gamma(shape=m, scale=np.asarray(omega, dtype=float) / m, size=size)
    out = np.sqrt(power)
    return float(out) if out.ndim == 0 else out


def sample_fading_parameter(rng: np.random.Generator, low: float, high: float, size=None):
    """Uniform draw of the fading parameter on [low, high]."""
    if low <= 0:
        raise ValueError(f"low must be > 0, got {low!r}")
    if low > high:
        raise ValueError(f"low ({low!r}) must not exceed high ({high!r})")
    if low == high:
        return low if size is None else np.full(size, float(low))
    out = rng.uniform(low, high, size=size)
    return float(out) if size is None else out


def link_weight(m: float, k: float = 1.0) -> float:
    """Link-quality weight w = k * m."""
    _require_positive("m", m)
    _require_positive("k", k)
    return k * m


def service_success_probability(gain: float, reference_gain: float) -> float:
    """Per-packet delivery probability: min(1, gain^2 / reference_gain^2)."""
    if gain < 0:
        raise ValueError(f"gain must be >= 0, got {gain!r}")
    _require_positive("reference_gain", reference_gain)
    return min(1.0, (gain * gain) / (reference_gain * reference_gain))


@dataclass
class FadingChannel:
    """Per-interface channel state, refreshed once per slot."""

    fading_m: float = 1.0
    spread_omega: float = 1.0
    proportionality_k: float = 1.0
    current_gain: float = 1.0

    def __post_init__(self) -> None:
        _require_positive("fading_m", self.fading_m)
        _require_positive("spread_omega", self.spread_omega)
        _require_positive("proportionality_k", self.proportionality_k)
        if self.current_gain < 0:
            raise ValueError("current_gain must be >= 0")

    @property
    def weight(self) -> float:
        return link_weight(self.fading_m, self.proportionality_k)

    def resample(self, rng: np.random.Generator, m_low: float, m_high: float) -> None:
        self.fading_m = sample_fading_parameter(rng, m_low, m_high)
        self.current_gain = nakagami_sample(rng, self.fading_m, self.spread_omega)
