"""Temperature profiles on [0, 1] and time-dependent boundary tension.

The bath temperature enters as beta(x) = 1/T(x), smooth and bounded away
from zero; site i of an n-chain couples to beta(i/n).  The boundary tension
follows a schedule with bounded value and rate (the C1 cubic smoothstep is
the default transition shape).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TemperatureProfile", "TensionSchedule"]


@dataclass(frozen=True)
class TemperatureProfile:
    """beta(x) = 1/T(x) with T affine in x; covers the constant,
    linear-in-T and linear-in-beta families from the config schema."""

    kind: str
    a: float
    b: float

    @staticmethod
    def constant(T: float) -> "TemperatureProfile":
        return TemperatureProfile("constant", 1.0 / T, 0.0)

    @staticmethod
    def linear_T(T0: float, T1: float) -> "TemperatureProfile":
        """T(x) = T0 + (T1 - T0) x."""
        if min(T0, T1) <= 0:
            raise ValueError("temperatures must be positive")
        return TemperatureProfile("linear-T", T0, T1 - T0)

    @staticmethod
    def linear_beta(beta0: float, beta1: float) -> "TemperatureProfile":
        """beta(x) = beta0 + (beta1 - beta0) x."""
        if min(beta0, beta1) <= 0:
            raise ValueError("beta endpoints must be positive")
        return TemperatureProfile("linear-beta", beta0, beta1 - beta0)

    @staticmethod
    def from_config(cfg: dict) -> "TemperatureProfile":
        kind = cfg["kind"]
        if kind == "constant":
            return TemperatureProfile.constant(cfg["T"])
        if kind == "linear-T":
            return TemperatureProfile.linear_T(cfg["T0"], cfg["T1"])
        if kind == "linear-beta":
            return TemperatureProfile.linear_beta(cfg["beta0"], cfg["beta1"])
        raise ValueError(f"unknown temperature profile kind {kind!r}")

    def temperature(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear-beta":
            return 1.0 / (self.a + self.b * x)
        if self.kind == "constant":
            return np.full_like(x, 1.0 / self.a)
        return self.a + self.b * x

    def beta(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear-beta":
            return self.a + self.b * x
        if self.kind == "constant":
            return np.full_like(x, self.a)
        return 1.0 / (self.a + self.b * x)

    def site_betas(self, n: int) -> np.ndarray:
        """beta_i = beta(i/n), i = 1..n."""
        return self.beta(np.arange(1, n + 1) / n)

    def cell_betas(self, M: int) -> np.ndarray:
        """beta at the M cell centres (j - 1/2)/M."""
        return self.beta((np.arange(M) + 0.5) / M)

    def beta_min(self) -> float:
        return float(min(self.beta(0.0), self.beta(1.0)))

    def to_config(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "T": 1.0 / self.a}
        if self.kind == "linear-T":
            return {"kind": "linear-T", "T0": self.a, "T1": self.a + self.b}
        return {"kind": "linear-beta", "beta0": self.a, "beta1": self.a + self.b}


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def _dsmoothstep(u):
    inside = (u > 0.0) & (u < 1.0)
    return np.where(inside, 6.0 * u * (1.0 - u), 0.0)


@dataclass(frozen=True)
class TensionSchedule:
    """Boundary tension tau_bar(t).

    ``smoothstep`` ramps from tau0 to tau1 over [t_start, t_start + t1] with
    the C1 cubic s(u) = 3u^2 - 2u^3, so sup(|tau_bar| + |tau_bar'|) is finite.
    """

    kind: str
    tau0: float
    tau1: float = 0.0
    t1: float = 0.0
    t_start: float = 0.0

    @staticmethod
    def constant(tau: float) -> "TensionSchedule":
        return TensionSchedule("constant", tau)

    @staticmethod
    def smoothstep(tau0: float, tau1: float, t1: float, t_start: float = 0.0):
        if t1 <= 0:
            raise ValueError("transition time t1 must be positive")
        return TensionSchedule("smoothstep", tau0, tau1, t1, t_start)

    @staticmethod
    def from_config(cfg: dict) -> "TensionSchedule":
        if cfg["kind"] == "constant":
            return TensionSchedule.constant(cfg["tau"])
        if cfg["kind"] == "smoothstep":
            return TensionSchedule.smoothstep(
                cfg["tau0"], cfg["tau1"], cfg["t1"], cfg.get("t_start", 0.0)
            )
        raise ValueError(f"unknown schedule kind {cfg['kind']!r}")

    def tau(self, t):
        if self.kind == "constant":
            return self.tau0 if np.isscalar(t) else np.full_like(np.asarray(t, float), self.tau0)
        u = (np.asarray(t, dtype=float) - self.t_start) / self.t1
        out = self.tau0 + (self.tau1 - self.tau0) * _smoothstep(u)
        return float(out) if np.isscalar(t) else out

    def dtau(self, t):
        if self.kind == "constant":
            return 0.0 if np.isscalar(t) else np.zeros_like(np.asarray(t, float))
        u = (np.asarray(t, dtype=float) - self.t_start) / self.t1
        out = (self.tau1 - self.tau0) * _dsmoothstep(u) / self.t1
        return float(out) if np.isscalar(t) else out

    def k_bound(self) -> float:
        """sup_t (|tau_bar| + |tau_bar'|)."""
        if self.kind == "constant":
            return abs(self.tau0)
        rate = 1.5 * abs(self.tau1 - self.tau0) / self.t1
        return max(abs(self.tau0), abs(self.tau1)) + rate

    def tau_range(self):
        lo = min(self.tau0, self.tau1 if self.kind == "smoothstep" else self.tau0)
        hi = max(self.tau0, self.tau1 if self.kind == "smoothstep" else self.tau0)
        return lo, hi

    def rescaled(self, eps: float) -> "TensionSchedule":
        """Schedule slowed by 1/eps (quasi-static driving in physical time)."""
        if self.kind == "constant":
            return self
        return TensionSchedule(
            "smoothstep", self.tau0, self.tau1, self.t1 / eps, self.t_start / eps
        )

    def to_config(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "tau": self.tau0}
        return {
            "kind": "smoothstep",
            "tau0": self.tau0,
            "tau1": self.tau1,
            "t1": self.t1,
            "t_start": self.t_start,
        }
