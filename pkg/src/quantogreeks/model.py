"""Market model primitives: futures legs, step volatility curves, weight tuning functions.

Both futures are driftless lognormal diffusions under the pricing measure.
Volatility curves and tuning functions are piecewise constant, so every
covariance integral the engine needs has an exact closed form.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

ELLIPTICITY_FLOOR = 1e-6
TUNING_INTEGRAL_TOL = 1e-12


class CorrelationMode(Enum):
    """How the energy-temperature correlation enters the joint law.

    PAYOFF_MIXING: both futures are driven by independent Brownian motions;
    the correlation enters through the payoff, whose temperature argument is
    rho * F_E(T) + sqrt(1 - rho^2) * F_I(T).

    SDE_MIXING: the temperature futures itself is driven by a rho-mix of the
    energy driver and an independent driver, and the payoff reads F_I(T)
    directly.
    """

    PAYOFF_MIXING = "payoff_mixing"
    SDE_MIXING = "sde_mixing"


def _check_step_shape(times, values, horizon, what: str) -> None:
    if len(times) == 0 or len(times) != len(values):
        raise ValueError(f"{what}: need one value per segment start")
    if not all(math.isfinite(t) for t in times) or not all(math.isfinite(v) for v in values):
        raise ValueError(f"{what}: non-finite entry")
    if times[0] != 0.0:
        raise ValueError(f"{what}: first segment must start at t=0")
    if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
        raise ValueError(f"{what}: segment starts must be strictly increasing")
    if not (math.isfinite(horizon) and horizon > 0.0):
        raise ValueError(f"{what}: horizon must be positive")
    if times[-1] >= horizon:
        raise ValueError(f"{what}: last segment starts at or beyond the horizon")


@dataclass(frozen=True)
class VolatilityCurve:
    """Right-continuous piecewise-constant volatility sigma(t) on [0, horizon).

    ``times`` are the segment start points (first one 0.0), ``sigmas`` the
    per-segment values in vol-per-sqrt-year. Value bounds (positivity,
    ellipticity floor) are checked by ``validate_model``, not here, so that
    deliberately degenerate curves can be constructed and flagged.
    """

    times: tuple[float, ...]
    sigmas: tuple[float, ...]
    horizon: float

    def __post_init__(self):
        _check_step_shape(self.times, self.sigmas, self.horizon, "volatility curve")

    @classmethod
    def constant(cls, sigma: float, horizon: float) -> "VolatilityCurve":
        return cls((0.0,), (float(sigma),), float(horizon))

    @classmethod
    def from_segments(cls, segments, horizon: float) -> "VolatilityCurve":
        """Build from ``[(t_start, sigma), ...]`` pairs."""
        ts = tuple(float(t) for t, _ in segments)
        vs = tuple(float(s) for _, s in segments)
        return cls(ts, vs, float(horizon))

    def value_at(self, t: float) -> float:
        idx = bisect.bisect_right(self.times, t) - 1
        return self.sigmas[max(idx, 0)]

    def values_on_grid(self, t: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(np.asarray(self.times), t, side="right") - 1
        return np.asarray(self.sigmas)[np.maximum(idx, 0)]


@dataclass(frozen=True)
class TuningFunction:
    """Piecewise-constant weight function a(t) on [0, horizon].

    Weight estimators stay non-degenerate exactly when a integrates to one
    over the fixing interval; ``validate_model`` enforces that within
    ``TUNING_INTEGRAL_TOL``.
    """

    times: tuple[float, ...]
    values: tuple[float, ...]
    horizon: float

    def __post_init__(self):
        _check_step_shape(self.times, self.values, self.horizon, "tuning function")

    @classmethod
    def uniform(cls, horizon: float) -> "TuningFunction":
        """The default a(t) = 1/horizon."""
        return cls((0.0,), (1.0 / float(horizon),), float(horizon))

    @classmethod
    def from_segments(cls, segments, horizon: float) -> "TuningFunction":
        ts = tuple(float(t) for t, _ in segments)
        vs = tuple(float(v) for _, v in segments)
        return cls(ts, vs, float(horizon))

    def value_at(self, t: float) -> float:
        idx = bisect.bisect_right(self.times, t) - 1
        return self.values[max(idx, 0)]

    def values_on_grid(self, t: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(np.asarray(self.times), t, side="right") - 1
        return np.asarray(self.values)[np.maximum(idx, 0)]

    def integral(self) -> float:
        edges = list(self.times) + [self.horizon]
        return float(sum(v * (t1 - t0) for v, t0, t1 in zip(self.values, edges, edges[1:])))


@dataclass(frozen=True)
class FuturesSpec:
    """Initial futures level plus the delivery window it settles against.

    The delivery window [delivery_start, delivery_end] is carried as contract
    metadata; the dynamics only see the fixing horizon delivery_end.
    """

    f0: float
    delivery_start: float
    delivery_end: float


@dataclass(frozen=True)
class MarketModel:
    """Two-leg futures market: energy and temperature-index legs plus correlation."""

    energy: FuturesSpec
    energy_vol: VolatilityCurve
    temperature: FuturesSpec
    temperature_vol: VolatilityCurve
    rho: float
    rate: float = 0.0
    correlation_mode: CorrelationMode = CorrelationMode.PAYOFF_MIXING

    @property
    def horizon(self) -> float:
        return self.energy.delivery_end

    def with_f0(self, energy: float | None = None, temperature: float | None = None) -> "MarketModel":
        """Copy with bumped initial futures levels (used by finite differences)."""
        m = self
        if energy is not None:
            m = replace(m, energy=replace(m.energy, f0=float(energy)))
        if temperature is not None:
            m = replace(m, temperature=replace(m.temperature, f0=float(temperature)))
        return m


@dataclass
class ValidationReport:
    """Outcome of ``validate_model``: empty violation list means acceptable."""

    violations: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations


def _segment_edges(step, lo: float, hi: float) -> list[float]:
    pts = sorted({lo, hi} | {t for t in step.times if lo < t < hi})
    return pts


def _union_edges(lo: float, hi: float, *steps) -> list[float]:
    pts = {lo, hi}
    for s in steps:
        pts.update(t for t in s.times if lo < t < hi)
    return sorted(pts)


def integrated_variance(curve: VolatilityCurve, s: float, t: float) -> float:
    """Exact integral of sigma(u)^2 over [s, t] for a piecewise-constant curve."""
    if s > t:
        raise ValueError(f"integration bounds reversed: s={s} > t={t}")
    if s < 0.0 or t > curve.horizon:
        raise ValueError(f"[{s}, {t}] not inside [0, {curve.horizon}]")
    if s == t:
        return 0.0
    edges = _segment_edges(curve, s, t)
    return float(sum(curve.value_at(a) ** 2 * (b - a) for a, b in zip(edges, edges[1:])))


def integrated_covariance(curve_a: VolatilityCurve, curve_b: VolatilityCurve, s: float, t: float) -> float:
    """Exact integral of sigma_a(u) * sigma_b(u) over [s, t]."""
    if s > t:
        raise ValueError(f"integration bounds reversed: s={s} > t={t}")
    if s == t:
        return 0.0
    edges = _union_edges(s, t, curve_a, curve_b)
    return float(
        sum(curve_a.value_at(a) * curve_b.value_at(a) * (b - a) for a, b in zip(edges, edges[1:]))
    )


def weight_kernel_moments(curve: VolatilityCurve, a: TuningFunction) -> tuple[float, float, float]:
    """Covariance integrals of the Gaussian pair (int sigma dW, int a/sigma dW).

    Returns ``(v_aa, v_as, v_ss)`` over the shared horizon:

        v_aa = int a(t)^2 / sigma(t)^2 dt     variance of the weight integral
        v_as = int a(t) dt                    cross-covariance (1 for unit-integral a)
        v_ss = int sigma(t)^2 dt              log-return variance
    """
    if curve.horizon != a.horizon:
        raise ValueError("curve and tuning function must share the horizon")
    if any(s <= 0.0 for s in curve.sigmas):
        raise ValueError("weight kernel moments require strictly positive volatility")
    edges = _union_edges(0.0, curve.horizon, curve, a)
    v_aa = v_as = v_ss = 0.0
    for lo, hi in zip(edges, edges[1:]):
        sig = curve.value_at(lo)
        av = a.value_at(lo)
        dt = hi - lo
        v_aa += (av / sig) ** 2 * dt
        v_as += av * dt
        v_ss += sig**2 * dt
    return float(v_aa), float(v_as), float(v_ss)


def weight_cross_moment(curve_e: VolatilityCurve, curve_i: VolatilityCurve, a: TuningFunction) -> float:
    """Exact integral of a(t)^2 / (sigma_E(t) * sigma_I(t)) over the horizon."""
    if curve_e.horizon != curve_i.horizon or curve_e.horizon != a.horizon:
        raise ValueError("curves and tuning function must share the horizon")
    if any(s <= 0.0 for s in curve_e.sigmas) or any(s <= 0.0 for s in curve_i.sigmas):
        raise ValueError("weight cross moment requires strictly positive volatility")
    edges = _union_edges(0.0, a.horizon, curve_e, curve_i, a)
    total = 0.0
    for lo, hi in zip(edges, edges[1:]):
        total += a.value_at(lo) ** 2 / (curve_e.value_at(lo) * curve_i.value_at(lo)) * (hi - lo)
    return float(total)


def _check_leg(report: ValidationReport, name: str, spec: FuturesSpec, vol: VolatilityCurve,
               horizon: float, eta: float) -> None:
    if not (math.isfinite(spec.f0) and spec.f0 > 0.0):
        report.violations.append(f"{name}: initial futures level must be positive, got {spec.f0}")
    if not (0.0 < spec.delivery_start <= spec.delivery_end):
        report.violations.append(
            f"{name}: delivery window must satisfy 0 < start <= end, got "
            f"[{spec.delivery_start}, {spec.delivery_end}]"
        )
    if spec.delivery_end != horizon:
        report.violations.append(f"{name}: delivery end {spec.delivery_end} differs from model horizon {horizon}")
    if vol.horizon != horizon:
        report.violations.append(f"{name}: volatility curve horizon {vol.horizon} differs from model horizon {horizon}")
    for t0, sig in zip(vol.times, vol.sigmas):
        if sig < eta:
            report.violations.append(
                f"{name}: volatility {sig} on segment starting t={t0} is below the floor "
                f"eta={eta} (uniform ellipticity condition violated)"
            )


def validate_model(model: MarketModel, tuning: TuningFunction | None = None,
                   eta: float = ELLIPTICITY_FLOOR) -> ValidationReport:
    """Check every model invariant and report violations without raising.

    ``eta`` is the uniform ellipticity floor: each volatility segment must sit
    at or above it. Pass ``tuning`` to also check unit-integral membership.
    """
    report = ValidationReport()
    horizon = model.horizon
    _check_leg(report, "energy", model.energy, model.energy_vol, horizon, eta)
    _check_leg(report, "temperature", model.temperature, model.temperature_vol, horizon, eta)
    if not (math.isfinite(model.rho) and abs(model.rho) < 1.0):
        report.violations.append(f"correlation rho must lie in (-1, 1), got {model.rho}")
    if not math.isfinite(model.rate):
        report.violations.append(f"risk-free rate must be finite, got {model.rate}")
    if tuning is not None:
        if tuning.horizon != horizon:
            report.violations.append(
                f"tuning function horizon {tuning.horizon} differs from model horizon {horizon}"
            )
        else:
            integral = tuning.integral()
            if abs(integral - 1.0) > TUNING_INTEGRAL_TOL:
                report.violations.append(
                    f"tuning function integrates to {integral!r}, not 1 "
                    f"(unit-integral weight family violated)"
                )
    return report
