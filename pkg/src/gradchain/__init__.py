"""Oscillator chain in a thermal gradient.

Microscopic Langevin chain dynamics under diffusive rescaling, the nonlinear
strain-diffusion equation it converges to, the associated non-equilibrium
thermodynamics (work, excess heat, free energy, Clausius inequality,
quasi-static limit), and an exact Gaussian oracle for entropy and Fisher
information bounds in the harmonic case.
"""

__version__ = "0.1.0"

from gradchain.potentials import (
    Harmonic,
    HarmonicCosine,
    PowerAlpha,
    check_admissible,
    make_potential,
)
from gradchain.profiles import TemperatureProfile, TensionSchedule
from gradchain import gibbs, microsim, pde, hypoco, harness, oracles

__all__ = [
    "Harmonic",
    "HarmonicCosine",
    "PowerAlpha",
    "make_potential",
    "check_admissible",
    "TemperatureProfile",
    "TensionSchedule",
    "gibbs",
    "microsim",
    "pde",
    "hypoco",
    "harness",
    "oracles",
    "__version__",
]
