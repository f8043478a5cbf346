import pytest

from quantogreeks import FuturesSpec, MarketModel, TuningFunction, VolatilityCurve
from quantogreeks.model import CorrelationMode


def make_model(f0E=100.0, f0I=100.0, sigE=0.2, sigI=0.2, rho=0.0, horizon=1.0,
               rate=0.0, mode=CorrelationMode.PAYOFF_MIXING):
    return MarketModel(
        energy=FuturesSpec(f0E, horizon, horizon),
        energy_vol=VolatilityCurve.constant(sigE, horizon),
        temperature=FuturesSpec(f0I, horizon, horizon),
        temperature_vol=VolatilityCurve.constant(sigI, horizon),
        rho=rho,
        rate=rate,
        correlation_mode=mode,
    )


@pytest.fixture
def atm_model():
    """Symmetric at-the-money setup: f0 = k = 100, sigma = 0.2, T = 1, rho = 0."""
    return make_model()


@pytest.fixture
def uniform_tuning():
    return TuningFunction.uniform(1.0)
