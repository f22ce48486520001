"""Shared fixtures: shipped potentials and cached Gibbs tables.

Table construction is the slow part of the suite, so tables are built once
per session at the resolution the experiments use.
"""

import numpy as np
import pytest

from gradchain import Harmonic, HarmonicCosine, PowerAlpha, TemperatureProfile
from gradchain.gibbs import build_table

# the standard protocol used throughout: gamma = 1, T(x) = 1 + 0.5 x,
# tension 0 -> 0.5 via smoothstep over t1 = 0.1, horizon 0.25
STD_GAMMA = 1.0
STD_TAU0 = 0.0
STD_TAU1 = 0.5
STD_T1 = 0.1
STD_HORIZON = 0.25


def std_profile():
    return TemperatureProfile.linear_T(1.0, 1.5)


@pytest.fixture(scope="session")
def harmonic():
    return Harmonic()


@pytest.fixture(scope="session")
def harmonic_cosine():
    return HarmonicCosine()


@pytest.fixture(scope="session")
def power_alpha():
    return PowerAlpha(alpha=1.5)


@pytest.fixture(scope="session", params=["harmonic", "harmonic-cosine", "power-alpha"])
def any_potential(request, harmonic, harmonic_cosine, power_alpha):
    return {
        "harmonic": harmonic,
        "harmonic-cosine": harmonic_cosine,
        "power-alpha": power_alpha,
    }[request.param]


def _table_betas():
    """Betas covering the standard profile at the resolutions the unit tests
    use (exact cell/site values avoid cross-beta interpolation error), plus a
    spread of generic betas."""
    prof = std_profile()
    return np.unique(
        np.concatenate(
            [
                prof.cell_betas(64),
                prof.site_betas(16),
                np.linspace(0.45, 2.1, 9),
                [0.75, 0.8, 1.0],
            ]
        )
    )


@pytest.fixture(scope="session")
def harmonic_table(harmonic):
    return build_table(harmonic, _table_betas(), -1.1, 1.1, n_tau=41)


@pytest.fixture(scope="session")
def harmonic_cosine_table(harmonic_cosine):
    return build_table(harmonic_cosine, _table_betas(), -1.1, 1.1, n_tau=41)
