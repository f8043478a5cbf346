"""Joint sampling of terminal futures values and the stochastic integrals behind hedge weights.

Draws are generated in fixed-size blocks from a counter-based Philox stream
keyed by the seed, so sample i never depends on how many samples are requested
or on how the blocks are scheduled across threads. Within a block all eight
Gaussian accumulators are exact linear combinations of per-segment Brownian
increments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .model import CorrelationMode, MarketModel, TuningFunction

BLOCK_SIZE = 1 << 16

_KEY_MASK = (1 << 128) - 1


@dataclass(frozen=True)
class SimScheme:
    """Sampling scheme: exact terminal law, or log-Euler paths on a uniform grid."""

    kind: str  # "exact" | "euler"
    steps: int = 0

    @classmethod
    def exact(cls) -> "SimScheme":
        return cls("exact", 0)

    @classmethod
    def log_euler(cls, steps: int) -> "SimScheme":
        return cls("euler", int(steps))

    @classmethod
    def parse(cls, text: str) -> "SimScheme":
        """Parse ``exact`` or ``euler:STEPS``."""
        if text == "exact":
            return cls.exact()
        if text.startswith("euler:"):
            return cls.log_euler(int(text.split(":", 1)[1]))
        raise ValueError(f"unknown scheme {text!r}; expected 'exact' or 'euler:STEPS'")

    def label(self) -> str:
        return "exact" if self.kind == "exact" else f"euler:{self.steps}"


@dataclass(frozen=True)
class SimConfig:
    n_samples: int
    seed: int
    antithetic: bool = False
    scheme: SimScheme = field(default_factory=SimScheme.exact)


@dataclass(frozen=True)
class SampleDraw:
    """A batch of joint draws, one array entry per sample.

    fE_T, fI_T      terminal futures levels
    gE, gI          log-return drivers: int sigma_E dW_E and int sigma_I dW~_I
    iE, iI          weight integrals: int a/sigma_E dW_E and int a/sigma_I dW~_I
    wE_T, wI_tilde_T  terminal Brownian values W_E(T), W~_I(T)
    iE_cross        int a/sigma_E dW~_I (energy weight kernel on the independent driver)
    gI_cross        int sigma_I dW_E (temperature vol on the energy driver)
    """

    fE_T: np.ndarray
    fI_T: np.ndarray
    gE: np.ndarray
    gI: np.ndarray
    iE: np.ndarray
    iI: np.ndarray
    wE_T: np.ndarray
    wI_tilde_T: np.ndarray
    iE_cross: np.ndarray
    gI_cross: np.ndarray

    def __len__(self) -> int:
        return len(self.fE_T)


def _check_config(cfg: SimConfig) -> None:
    if cfg.n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {cfg.n_samples}")
    if cfg.scheme.kind not in ("exact", "euler"):
        raise ValueError(f"unknown scheme kind {cfg.scheme.kind!r}")
    if cfg.scheme.kind == "euler" and cfg.scheme.steps < 1:
        raise ValueError(f"log-Euler scheme needs steps >= 1, got {cfg.scheme.steps}")
    if cfg.antithetic and cfg.n_samples % 2 != 0:
        raise ValueError("antithetic sampling pairs draws, so n_samples must be even")


@dataclass(frozen=True)
class _Plan:
    """Per-run constants: the time grid and the coefficient vectors on it."""

    f0E: float
    f0I: float
    rho: float
    sq1mr2: float
    mode: CorrelationMode
    sqrt_dt: np.ndarray
    sigE: np.ndarray
    sigI: np.ndarray
    kernE: np.ndarray  # a/sigma_E, zeroed on degenerate segments
    kernI: np.ndarray
    driftE: float  # -1/2 int sigma_E^2 on this grid
    driftI: float


def _coefficients(model: MarketModel, tuning: TuningFunction, t_left: np.ndarray,
                  dt: np.ndarray) -> _Plan:
    sigE = model.energy_vol.values_on_grid(t_left)
    sigI = model.temperature_vol.values_on_grid(t_left)
    av = tuning.values_on_grid(t_left)
    # Degenerate (zero-vol) segments are flagged by validation; keep the
    # martingale part usable by dropping their weight-kernel contribution.
    kernE = np.where(sigE > 0.0, av / np.where(sigE > 0.0, sigE, 1.0), 0.0)
    kernI = np.where(sigI > 0.0, av / np.where(sigI > 0.0, sigI, 1.0), 0.0)
    rho = model.rho
    return _Plan(
        f0E=model.energy.f0,
        f0I=model.temperature.f0,
        rho=rho,
        sq1mr2=float(np.sqrt(1.0 - rho * rho)),
        mode=model.correlation_mode,
        sqrt_dt=np.sqrt(dt),
        sigE=sigE,
        sigI=sigI,
        kernE=kernE,
        kernI=kernI,
        driftE=-0.5 * float(np.dot(sigE * sigE, dt)),
        driftI=-0.5 * float(np.dot(sigI * sigI, dt)),
    )


def _build_plan(model: MarketModel, tuning: TuningFunction, scheme: SimScheme) -> _Plan:
    horizon = model.horizon
    if tuning.horizon != horizon:
        raise ValueError("tuning function horizon must match the model horizon")
    if scheme.kind == "exact":
        pts = {0.0, horizon}
        for step in (model.energy_vol, model.temperature_vol, tuning):
            pts.update(t for t in step.times if 0.0 < t < horizon)
        edges = np.array(sorted(pts))
        t_left = edges[:-1]
        dt = np.diff(edges)
    else:
        edges = np.linspace(0.0, horizon, scheme.steps + 1)
        t_left = edges[:-1]
        dt = np.full(scheme.steps, horizon / scheme.steps)
    return _coefficients(model, tuning, t_left, dt)


def _block_generator(seed: int, block: int) -> np.random.Generator:
    bitgen = np.random.Philox(key=seed & _KEY_MASK, counter=block << 128)
    return np.random.Generator(bitgen)


def block_count(n_samples: int) -> int:
    return (n_samples + BLOCK_SIZE - 1) // BLOCK_SIZE


def _interleave_negated(x: np.ndarray) -> np.ndarray:
    out = np.empty(2 * len(x))
    out[0::2] = x
    out[1::2] = -x
    return out


def _draw_block(plan: _Plan, cfg: SimConfig, block: int) -> SampleDraw:
    start = block * BLOCK_SIZE
    count = min(BLOCK_SIZE, cfg.n_samples - start)
    base = count // 2 if cfg.antithetic else count
    gen = _block_generator(cfg.seed, block)
    z = gen.standard_normal((base, len(plan.sqrt_dt), 2))
    dwE = z[:, :, 0] * plan.sqrt_dt
    dwI = z[:, :, 1] * plan.sqrt_dt

    gE = dwE @ plan.sigE
    iE = dwE @ plan.kernE
    wE = dwE.sum(axis=1)
    gI_cross = dwE @ plan.sigI
    gI = dwI @ plan.sigI
    iI = dwI @ plan.kernI
    wI = dwI.sum(axis=1)
    iE_cross = dwI @ plan.kernE

    if cfg.antithetic:
        gE, iE, wE, gI_cross = map(_interleave_negated, (gE, iE, wE, gI_cross))
        gI, iI, wI, iE_cross = map(_interleave_negated, (gI, iI, wI, iE_cross))

    fE = plan.f0E * np.exp(plan.driftE + gE)
    if plan.mode is CorrelationMode.SDE_MIXING:
        stoch_I = plan.rho * gI_cross + plan.sq1mr2 * gI
    else:
        stoch_I = gI
    fI = plan.f0I * np.exp(plan.driftI + stoch_I)

    return SampleDraw(fE, fI, gE, gI, iE, iI, wE, wI, iE_cross, gI_cross)


def sample_block(model: MarketModel, tuning: TuningFunction, cfg: SimConfig,
                 block: int) -> SampleDraw:
    """Draw one block of samples; pure in (model, tuning, cfg, block)."""
    _check_config(cfg)
    if not 0 <= block < block_count(cfg.n_samples):
        raise ValueError(f"block {block} out of range")
    return _draw_block(_build_plan(model, tuning, cfg.scheme), cfg, block)


def iter_sample_blocks(model: MarketModel, tuning: TuningFunction,
                       cfg: SimConfig) -> Iterator[SampleDraw]:
    """Stream the sample blocks in index order."""
    _check_config(cfg)
    plan = _build_plan(model, tuning, cfg.scheme)
    for block in range(block_count(cfg.n_samples)):
        yield _draw_block(plan, cfg, block)


def _concatenate(blocks: list[SampleDraw]) -> SampleDraw:
    if len(blocks) == 1:
        return blocks[0]
    fields_cat = [
        np.concatenate([getattr(b, name) for b in blocks])
        for name in ("fE_T", "fI_T", "gE", "gI", "iE", "iI", "wE_T", "wI_tilde_T",
                     "iE_cross", "gI_cross")
    ]
    return SampleDraw(*fields_cat)


def draw_samples(model: MarketModel, tuning: TuningFunction, cfg: SimConfig) -> SampleDraw:
    """All requested samples as one batch, regardless of scheme."""
    return _concatenate(list(iter_sample_blocks(model, tuning, cfg)))


def sample_terminal(model: MarketModel, tuning: TuningFunction, cfg: SimConfig) -> SampleDraw:
    """Exact-terminal sampling: the joint Gaussian law carries no time-stepping bias."""
    if cfg.scheme.kind != "exact":
        raise ValueError("sample_terminal requires the exact scheme")
    return draw_samples(model, tuning, cfg)


def sample_paths_log_euler(model: MarketModel, tuning: TuningFunction, cfg: SimConfig) -> SampleDraw:
    """Log-Euler sampling on a uniform grid with left-point Ito accumulators.

    Converges in law to ``sample_terminal`` as the step count grows; with
    constant coefficients a single step already matches the terminal law.
    """
    if cfg.scheme.kind != "euler":
        raise ValueError("sample_paths_log_euler requires a log-Euler scheme")
    return draw_samples(model, tuning, cfg)


def antithetic_pair(draw: SampleDraw, model: MarketModel) -> SampleDraw:
    """Mirror a batch: negate every Gaussian and rebuild the terminal prices.

    The per-draw drift is recovered from the stored prices, so the pairing is
    consistent for both sampling schemes.
    """
    driftE = np.log(draw.fE_T / model.energy.f0) - draw.gE
    if model.correlation_mode is CorrelationMode.SDE_MIXING:
        sq1mr2 = np.sqrt(1.0 - model.rho * model.rho)
        stoch_I = model.rho * draw.gI_cross + sq1mr2 * draw.gI
    else:
        stoch_I = draw.gI
    driftI = np.log(draw.fI_T / model.temperature.f0) - stoch_I
    fE = model.energy.f0 * np.exp(driftE - draw.gE)
    fI = model.temperature.f0 * np.exp(driftI - stoch_I)
    return SampleDraw(
        fE, fI, -draw.gE, -draw.gI, -draw.iE, -draw.iI, -draw.wE_T, -draw.wI_tilde_T,
        -draw.iE_cross, -draw.gI_cross,
    )
