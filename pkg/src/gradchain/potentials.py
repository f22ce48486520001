"""Interaction potentials for the oscillator chain.

A potential family is admissible when

  (i)   V is smooth, V >= 0, and V(r)/|r| -> infinity,
  (ii)  sup_r |V''(r)| <= c2,
  (iii) V'(r)^2 <= c1 (1 + V(r)).

Condition (ii) excludes quartic-type springs; growth like |r|^alpha with
1 < alpha <= 2 is allowed and realised by the ``power-alpha`` family.
Each shipped family declares certified constants (c0, c1, c2) and
``check_admissible`` re-derives empirical values on a sampling grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Potential",
    "Harmonic",
    "HarmonicCosine",
    "PowerAlpha",
    "AdmissibilityReport",
    "make_potential",
    "check_admissible",
    "default_grid",
]


def _validate_input(r):
    arr = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("potential evaluated at non-finite displacement")
    return arr


class Potential:
    """Base class: pair potential V with first and second derivatives.

    Instances are immutable parameter records; all evaluation methods accept
    scalars or arrays and are safe for unrestricted concurrent use.
    """

    kind = "abstract"

    #: certified constants for |V'| <= c0 + c2 |r|, V'^2 <= c1 (1 + V),
    #: |V''| <= c2
    c0 = np.inf
    c1 = np.inf
    c2 = np.inf

    @property
    def params(self) -> dict:
        return {}

    def v(self, r):
        """V(r)."""
        return self._v(_validate_input(r))

    def dv(self, r):
        """V'(r)."""
        return self._dv(_validate_input(r))

    def d2v(self, r):
        """V''(r)."""
        return self._d2v(_validate_input(r))

    # raw variants skip input validation; used in integrator hot loops where
    # blow-up is detected separately
    def _v(self, r):
        raise NotImplementedError

    def _dv(self, r):
        raise NotImplementedError

    def _d2v(self, r):
        raise NotImplementedError

    def __repr__(self):
        ps = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{type(self).__name__}({ps})"


class Harmonic(Potential):
    """V(r) = r^2 / 2.  Closed-form thermostatics; the exactly solvable case."""

    kind = "harmonic"
    c0 = 0.0
    c1 = 2.0
    c2 = 1.0

    def _v(self, r):
        return 0.5 * r * r

    def _dv(self, r):
        return r

    def _d2v(self, r):
        return np.ones_like(r)


class HarmonicCosine(Potential):
    """V(r) = r^2/2 + cos(r) - 1.  Anharmonic, V'' in [0, 2]."""

    kind = "harmonic-cosine"
    c0 = 1.0
    # sup of V'^2 / (1 + V) is ~3.1 (attained near |r| ~ 4.2)
    c1 = 3.5
    c2 = 2.0

    def _v(self, r):
        return 0.5 * r * r + np.cos(r) - 1.0

    def _dv(self, r):
        return r - np.sin(r)

    def _d2v(self, r):
        return 1.0 - np.cos(r)


class PowerAlpha(Potential):
    """V(r) = (1 + r^2)^(alpha/2) - 1 with 1 < alpha <= 2.

    Grows like |r|^alpha, so it realises the minimal admissible growth.
    Values alpha > 2 are constructible for negative testing but fail the
    bounded-V'' check.
    """

    kind = "power-alpha"

    def __init__(self, alpha: float):
        if not alpha > 1.0:
            raise ValueError(f"power-alpha requires alpha > 1, got {alpha}")
        self.alpha = float(alpha)
        self.c0 = 0.0
        self.c1 = self.alpha**2
        # certified only for alpha <= 2; the grid scan refutes larger alpha
        self.c2 = self.alpha

    @property
    def params(self):
        return {"alpha": self.alpha}

    def _v(self, r):
        return (1.0 + r * r) ** (0.5 * self.alpha) - 1.0

    def _dv(self, r):
        a = self.alpha
        return a * r * (1.0 + r * r) ** (0.5 * a - 1.0)

    def _d2v(self, r):
        a = self.alpha
        r2 = r * r
        return a * (1.0 + r2) ** (0.5 * a - 2.0) * (1.0 + (a - 1.0) * r2)


_FAMILIES = {
    Harmonic.kind: Harmonic,
    HarmonicCosine.kind: HarmonicCosine,
    PowerAlpha.kind: PowerAlpha,
}


def make_potential(name: str, **params) -> Potential:
    """Construct a potential family by name, e.g. from a config file."""
    try:
        cls = _FAMILIES[name]
    except KeyError:
        raise ValueError(
            f"unknown potential {name!r}; available: {sorted(_FAMILIES)}"
        ) from None
    return cls(**params)


def default_grid(r_max: float = 1.0e4, n_core: int = 20001) -> np.ndarray:
    """Sampling grid for admissibility checks: dense core plus log-spaced tails
    out to +-r_max."""
    core = np.linspace(-50.0, 50.0, n_core)
    tail = np.geomspace(50.0, r_max, 200)
    return np.unique(np.concatenate([core, tail, -tail]))


@dataclass(frozen=True)
class AdmissibilityReport:
    """Empirical admissibility certificate on a sampling grid.

    ``c1_hat``/``c2_hat`` are the tightest constants observed on the grid;
    ``passed`` aggregates all individual conditions against the declared
    constants.  Failures are reported, never raised.
    """

    kind: str
    v_nonnegative: bool
    c1_hat: float
    c2_hat: float
    c1_ok: bool
    c2_ok: bool
    growth_ratios: tuple
    growth_ok: bool

    @property
    def passed(self) -> bool:
        return self.v_nonnegative and self.c1_ok and self.c2_ok and self.growth_ok

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{self.kind}: {verdict} "
            f"(c1_hat={self.c1_hat:.6g} c2_hat={self.c2_hat:.6g} "
            f"nonneg={self.v_nonnegative} growth={self.growth_ok})"
        )


def check_admissible(pot: Potential, grid=None) -> AdmissibilityReport:
    """Certify conditions (i)-(iii) empirically on a grid.

    The grid must span at least [-1e4, 1e4]; superlinear growth is witnessed
    by V(r)/|r| strictly increasing along |r| = 10, 10^2, 10^3, 10^4.
    """
    if grid is None:
        grid = default_grid()
    grid = np.asarray(grid, dtype=float)
    if grid.min() > -1.0e4 or grid.max() < 1.0e4:
        raise ValueError("admissibility grid must span at least [-1e4, 1e4]")

    v = pot.v(grid)
    dv = pot.dv(grid)
    d2v = pot.d2v(grid)

    v_nonneg = bool(np.all(v >= -1e-12))
    c2_hat = float(np.max(np.abs(d2v)))
    c1_hat = float(np.max(dv**2 / (1.0 + v)))
    tol = 1.0 + 1e-9
    c2_ok = c2_hat <= pot.c2 * tol
    c1_ok = c1_hat <= pot.c1 * tol

    probes = np.array([10.0, 1.0e2, 1.0e3, 1.0e4])
    ratios = []
    growth_ok = True
    for sign in (1.0, -1.0):
        ratio = pot.v(sign * probes) / probes
        ratios.append(tuple(float(x) for x in ratio))
        growth_ok = growth_ok and bool(np.all(np.diff(ratio) > 0))

    return AdmissibilityReport(
        kind=pot.kind,
        v_nonnegative=v_nonneg,
        c1_hat=c1_hat,
        c2_hat=c2_hat,
        c1_ok=c1_ok,
        c2_ok=c2_ok,
        growth_ratios=tuple(ratios),
        growth_ok=growth_ok,
    )
