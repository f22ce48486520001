"""Single-site Gibbs thermostatics.

For a potential V, tension tau and inverse temperature beta the single-site
tilted Gibbs measure is  exp(-beta (V(r) - tau r)) dr  times a Maxwellian in
the velocity.  This module computes

  G(tau, beta)   log-partition function (Gibbs potential),
  r(tau, beta)   equilibrium mean stretch  <r>,
  tau(r, beta)   the inverse map (tension at prescribed stretch),
  F(r, beta)     free energy, Legendre transform of G/beta,
  u(tau, beta)   mean energy  1/(2 beta) + <V>,
  S(r, beta)     thermodynamic entropy  beta (u - F),

by adaptive quadrature and safeguarded root finding, plus a cached
interpolation table (``GibbsTable``/``CellThermo``) for PDE flux evaluation.

Quadrature and inversion are pure and reentrant; a built table is immutable
and safe for concurrent reads.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "GibbsQuadratureError",
    "TensionInversionError",
    "TableRangeError",
    "gibbs_potential",
    "log_ztilde",
    "mean_stretch",
    "stretch_variance",
    "mean_energy",
    "tension",
    "free_energy",
    "entropy",
    "inverse_cdf_grid",
    "GibbsTable",
    "build_table",
    "CellThermo",
]


class GibbsQuadratureError(RuntimeError):
    pass


class TensionInversionError(RuntimeError):
    pass


class TableRangeError(LookupError):
    """Query outside the tabulated (tau, beta) range; rebuild the table."""


# ---------------------------------------------------------------------------
# quadrature core

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)

# integration domain is extended until the integrand at the endpoints is
# suppressed by this many e-foldings relative to its maximum
_TAIL_LOG_DROP = 40.0


def _support_interval(pot, tau, beta):
    """Symmetric interval [-L, L] whose endpoints carry integrand values below
    exp(-40) times the maximum.  L is doubled on failure."""
    L = 8.0 + 2.0 * abs(tau) + 8.0 / np.sqrt(beta)
    for _ in range(60):
        grid = np.linspace(-L, L, 2049)
        lw = -beta * (pot.v(grid) - tau * grid)
        m = lw.max()
        if lw[0] <= m - _TAIL_LOG_DROP and lw[-1] <= m - _TAIL_LOG_DROP:
            return L
        L *= 2.0
    raise GibbsQuadratureError(
        f"could not bracket Gibbs integrand support (tau={tau}, beta={beta})"
    )


def _panels(L, n_panels):
    edges = np.linspace(-L, L, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    x = (mid[:, None] + half * _GL_X[None, :]).ravel()
    w = np.broadcast_to(half * _GL_W, (n_panels, _GL_X.size)).ravel()
    return x, w


def _moments(pot, tau, beta, rtol=1e-13, max_panels=1024):
    """Adaptive composite Gauss-Legendre evaluation of the tilted single-site
    measure.  Returns (log ztilde, <r>, Var r, <V>).

    ztilde = int exp(-beta (V - tau r)) dr.  Panel count is doubled until two
    consecutive refinements agree to ``rtol``.
    """
    tau = float(tau)
    beta = float(beta)
    if not (np.isfinite(tau) and np.isfinite(beta)):
        raise ValueError("tau and beta must be finite")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")

    L = _support_interval(pot, tau, beta)
    prev = None
    n_panels = 8
    while n_panels <= max_panels:
        x, w = _panels(L, n_panels)
        lw = -beta * (pot.v(x) - tau * x)
        m = lw.max()
        ew = w * np.exp(lw - m)
        z = ew.sum()
        log_z = m + np.log(z)
        r1 = (ew @ x) / z
        r2 = (ew @ (x * x)) / z
        v1 = (ew @ pot.v(x)) / z
        cur = (log_z, r1, r2, v1)
        if prev is not None:
            ok = all(
                abs(a - b) <= rtol * (1.0 + abs(a)) for a, b in zip(cur, prev)
            )
            if ok:
                var = r2 - r1 * r1
                return log_z, r1, max(var, 0.0), v1
        prev = cur
        n_panels *= 2
    raise GibbsQuadratureError(
        f"quadrature did not converge (tau={tau}, beta={beta}, L={L}, "
        f"last={prev})"
    )


def log_ztilde(pot, tau, beta):
    """log int exp(-beta (V(r) - tau r)) dr  (configurational part only)."""
    return _moments(pot, tau, beta)[0]


def gibbs_potential(pot, tau, beta):
    """Gibbs potential G(tau, beta) = log [ sqrt(2 pi / beta) ztilde ]."""
    lz = log_ztilde(pot, tau, beta)
    return 0.5 * np.log(2.0 * np.pi / beta) + lz


def mean_stretch(pot, tau, beta):
    """Equilibrium mean stretch <r> under the tilted measure.

    Computed as a direct quadrature average, not by differencing G.
    """
    return _moments(pot, tau, beta)[1]


def stretch_variance(pot, tau, beta):
    """Var(r) under the tilted measure; equals beta^-1 d<r>/dtau."""
    return _moments(pot, tau, beta)[2]


def mean_energy(pot, tau, beta):
    """u(tau, beta) = 1/(2 beta) + <V> (kinetic plus configurational)."""
    return 0.5 / beta + _moments(pot, tau, beta)[3]


_TAU_CAP = 1.0e6


def tension(pot, r, beta, tol=1e-11, max_iter=200):
    """Unique tau with mean_stretch(tau, beta) = r.

    Monotone bracket expansion followed by Newton steps (derivative
    beta * Var(r)) safeguarded by bisection.  Terminates when
    |<r>(tau) - r| <= tol (absolute; spec tolerance is 1e-10).
    """
    r = float(r)
    if not np.isfinite(r):
        raise ValueError("target stretch must be finite")

    def _stretch(tau_probe):
        # quadrature breakdown at extreme tension is a bracket failure
        try:
            return mean_stretch(pot, tau_probe, beta)
        except GibbsQuadratureError as err:
            raise TensionInversionError(
                f"bracket expansion failed at tau={tau_probe}: {err}"
            ) from err

    lo, hi = -1.0, 1.0
    f_lo = _stretch(lo) - r
    while f_lo > 0:
        lo *= 2.0
        if abs(lo) > _TAU_CAP:
            raise TensionInversionError(f"bracket expansion failed at tau={lo}")
        f_lo = _stretch(lo) - r
    f_hi = _stretch(hi) - r
    while f_hi < 0:
        hi *= 2.0
        if abs(hi) > _TAU_CAP:
            raise TensionInversionError(f"bracket expansion failed at tau={hi}")
        f_hi = _stretch(hi) - r

    tau = 0.5 * (lo + hi)
    for _ in range(max_iter):
        _, r1, var, _ = _moments(pot, tau, beta)
        f = r1 - r
        if abs(f) <= tol:
            return tau
        if f > 0:
            hi = tau
        else:
            lo = tau
        step_ok = var > 0
        if step_ok:
            nxt = tau - f / (beta * var)
            step_ok = lo < nxt < hi
        tau = nxt if step_ok else 0.5 * (lo + hi)
    raise TensionInversionError(
        f"tension inversion stalled at tau={tau} (residual {f:.3e})"
    )


def free_energy(pot, r, beta):
    """F(r, beta) = tau* r - G(tau*, beta) / beta with tau* = tension(r, beta)."""
    tau_star = tension(pot, r, beta)
    return tau_star * r - gibbs_potential(pot, tau_star, beta) / beta


def entropy(pot, r, beta):
    """Thermodynamic entropy S(r, beta) = beta (u(tau*, beta) - F(r, beta)).

    This is the quantity entering the quasi-static heat formula
    Q = int beta^-1 Delta S dx.
    """
    tau_star = tension(pot, r, beta)
    u = mean_energy(pot, tau_star, beta)
    f = tau_star * r - gibbs_potential(pot, tau_star, beta) / beta
    return beta * (u - f)


def inverse_cdf_grid(pot, tau, beta, n_points=4097):
    """(grid, cdf) arrays for inverse-CDF sampling of the stretch marginal."""
    L = _support_interval(pot, tau, beta)
    grid = np.linspace(-L, L, n_points)
    lw = -beta * (pot.v(grid) - tau * grid)
    w = np.exp(lw - lw.max())
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]))])
    cdf /= cdf[-1]
    return grid, cdf


# ---------------------------------------------------------------------------
# cached table

@dataclass(frozen=True)
class GibbsTable:
    """Thermostatic functions cached on a (beta, tau) grid.

    Interpolation is cubic along tau within each beta row and linear across
    beta rows.  Strict monotonicity of the mean stretch in tau (strict
    convexity of G) is verified at build time.
    """

    pot: object
    beta_grid: np.ndarray          # (B,) sorted
    tau_grid: np.ndarray           # (K,) sorted
    G: np.ndarray                  # (B, K)
    r_mean: np.ndarray             # (B, K)
    u: np.ndarray                  # (B, K)
    _splines: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not np.all(np.diff(self.r_mean, axis=1) > 0):
            raise ValueError("tabulated mean stretch is not strictly increasing in tau")
        for name, vals in (("G", self.G), ("r", self.r_mean), ("u", self.u)):
            self._splines[name] = [
                CubicSpline(self.tau_grid, vals[b]) for b in range(len(self.beta_grid))
            ]

    # -- range handling ---------------------------------------------------
    def _beta_weights(self, beta):
        bg = self.beta_grid
        if beta < bg[0] - 1e-12 or beta > bg[-1] + 1e-12:
            raise TableRangeError(
                f"beta={beta} outside table range [{bg[0]}, {bg[-1]}]; rebuild"
            )
        if len(bg) == 1:
            return 0, 0, 0.0
        j = int(np.clip(np.searchsorted(bg, beta) - 1, 0, len(bg) - 2))
        w = (beta - bg[j]) / (bg[j + 1] - bg[j])
        return j, j + 1, float(np.clip(w, 0.0, 1.0))

    def _check_tau(self, tau):
        tg = self.tau_grid
        tau = np.asarray(tau, dtype=float)
        if np.any(tau < tg[0] - 1e-12) or np.any(tau > tg[-1] + 1e-12):
            raise TableRangeError(
                f"tau outside table range [{tg[0]}, {tg[-1]}]; rebuild"
            )
        return tau

    def _interp(self, name, tau, beta):
        tau = self._check_tau(tau)
        j0, j1, w = self._beta_weights(beta)
        sp = self._splines[name]
        lo = sp[j0](tau)
        if w == 0.0:
            return lo
        return (1.0 - w) * lo + w * sp[j1](tau)

    # -- public queries ----------------------------------------------------
    def g_interp(self, tau, beta):
        return self._interp("G", tau, beta)

    def r_interp(self, tau, beta):
        return self._interp("r", tau, beta)

    def u_interp(self, tau, beta):
        return self._interp("u", tau, beta)

    def to_csv(self, path_or_file):
        """Emit the raw table as CSV (columns beta, tau, G, r_mean, u)."""
        own = isinstance(path_or_file, (str, bytes))
        fh = open(path_or_file, "w") if own else path_or_file
        try:
            fh.write("beta,tau,G,r_mean,u\n")
            for b, beta in enumerate(self.beta_grid):
                for k, tau in enumerate(self.tau_grid):
                    fh.write(
                        f"{beta:.17g},{tau:.17g},{self.G[b, k]:.17g},"
                        f"{self.r_mean[b, k]:.17g},{self.u[b, k]:.17g}\n"
                    )
        finally:
            if own:
                fh.close()

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


def build_table(pot, betas, tau_min, tau_max, n_tau=41, margin=1.5) -> GibbsTable:
    """Tabulate (G, r, u) on the given beta values and a tau grid.

    The requested tau range is widened by ``margin`` about its centre so the
    table covers the tensions visited by a PDE solve with headroom.
    """
    betas = np.unique(np.asarray(betas, dtype=float))
    c = 0.5 * (tau_min + tau_max)
    h = 0.5 * (tau_max - tau_min) * margin + 1e-9
    tau_grid = np.linspace(c - h, c + h, n_tau)

    B, K = len(betas), n_tau
    G = np.empty((B, K))
    r = np.empty((B, K))
    u = np.empty((B, K))
    for b, beta in enumerate(betas):
        for k, tau in enumerate(tau_grid):
            lz, r1, _, v1 = _moments(pot, tau, beta)
            G[b, k] = 0.5 * np.log(2.0 * np.pi / beta) + lz
            r[b, k] = r1
            u[b, k] = 0.5 / beta + v1
    return GibbsTable(pot=pot, beta_grid=betas, tau_grid=tau_grid, G=G, r_mean=r, u=u)


# ---------------------------------------------------------------------------
# per-cell constitutive evaluators for the PDE

class _BatchPoly:
    """Piecewise polynomials, one per row, on shared segment counts.

    ``breaks`` has shape (M, K); ``coefs`` has shape (M, D, K-1) with the
    highest power first (scipy convention).  Evaluation takes one abscissa
    per row.
    """

    def __init__(self, breaks, coefs):
        self.breaks = breaks
        self.coefs = coefs

    def _segments(self, x):
        K = self.breaks.shape[1]
        seg = np.clip((x[:, None] >= self.breaks).sum(axis=1) - 1, 0, K - 2)
        t = x - self.breaks[np.arange(len(x)), seg]
        return seg, t

    def __call__(self, x):
        seg, t = self._segments(x)
        rows = np.arange(len(x))
        out = self.coefs[rows, 0, seg].copy()
        for d in range(1, self.coefs.shape[1]):
            out = out * t + self.coefs[rows, d, seg]
        return out

    def derivative(self):
        D = self.coefs.shape[1]
        pw = np.arange(D - 1, 0, -1).reshape(1, -1, 1)
        return _BatchPoly(self.breaks, self.coefs[:, :-1, :] * pw)

    def antiderivative(self, anchor_idx, anchor_values):
        """Segment-wise antiderivative with constants fixed so that the value
        at breakpoint ``anchor_idx`` equals ``anchor_values`` per row."""
        M, D, S = self.coefs.shape
        pw = np.arange(D, 0, -1).reshape(1, -1, 1)
        anti = np.concatenate(
            [self.coefs / pw, np.zeros((M, 1, S))], axis=1
        )
        # value of each segment's antiderivative at its right edge
        dt = np.diff(self.breaks, axis=1)  # (M, S)
        right = np.zeros((M, S))
        for d in range(D + 1):
            right = right * dt + anti[:, d, :]
        # cumulative values at breakpoints, zero at the left end
        knots = np.concatenate(
            [np.zeros((M, 1)), np.cumsum(right, axis=1)], axis=1
        )  # (M, K)
        shift = anchor_values - knots[np.arange(M), anchor_idx]
        anti[:, -1, :] = knots[:, :-1] + shift[:, None]
        return _BatchPoly(self.breaks, anti)


class CellThermo:
    """Tension, free energy, mean energy and entropy as functions of strain
    at a fixed vector of cell temperatures, interpolated from a GibbsTable.

    The free energy is the exact antiderivative of the interpolated tension
    spline, so dF/dr = tau(r) holds identically and the discrete free-energy
    balance of the PDE ledger closes to time-integration accuracy.
    """

    def __init__(self, table: GibbsTable, betas):
        betas = np.asarray(betas, dtype=float)
        self.betas = betas
        self.table = table
        M = len(betas)
        K = len(table.tau_grid)
        tau_grid = table.tau_grid

        r_nodes = np.empty((M, K))
        g_nodes = np.empty((M, K))
        u_nodes = np.empty((M, K))
        for j, beta in enumerate(betas):
            b0, b1, w = table._beta_weights(beta)
            r_nodes[j] = (1 - w) * table.r_mean[b0] + w * table.r_mean[b1]
            g_nodes[j] = (1 - w) * table.G[b0] + w * table.G[b1]
            u_nodes[j] = (1 - w) * table.u[b0] + w * table.u[b1]

        tau_c = np.empty((M, 4, K - 1))
        u_c = np.empty((M, 4, K - 1))
        for j in range(M):
            tau_c[j] = CubicSpline(r_nodes[j], tau_grid).c
            u_c[j] = CubicSpline(r_nodes[j], u_nodes[j]).c

        self.r_nodes = r_nodes
        self._tau = _BatchPoly(r_nodes, tau_c)
        self._dtau = self._tau.derivative()
        self._u = _BatchPoly(r_nodes, u_c)

        mid = K // 2
        anchor_F = tau_grid[mid] * r_nodes[:, mid] - g_nodes[:, mid] / betas
        self._F = self._tau.antiderivative(
            np.full(M, mid), anchor_F
        )

    def _check_range(self, r):
        lo = self.r_nodes[:, 0]
        hi = self.r_nodes[:, -1]
        if np.any(r < lo) or np.any(r > hi):
            j = int(np.argmax((r < lo) | (r > hi)))
            raise TableRangeError(
                f"strain {r[j]:.6g} at cell {j} outside table range "
                f"[{lo[j]:.6g}, {hi[j]:.6g}]; rebuild with wider tau range"
            )

    def tau(self, r):
        """Tension tau(r_j, beta_j) per cell."""
        r = np.asarray(r, dtype=float)
        self._check_range(r)
        return self._tau(r)

    def dtau_dr(self, r):
        r = np.asarray(r, dtype=float)
        self._check_range(r)
        return self._dtau(r)

    def free_energy(self, r):
        r = np.asarray(r, dtype=float)
        self._check_range(r)
        return self._F(r)

    def mean_energy(self, r):
        r = np.asarray(r, dtype=float)
        self._check_range(r)
        return self._u(r)

    def entropy(self, r):
        return self.betas * (self.mean_energy(r) - self.free_energy(r))

    def stretch_at(self, tau):
        """Stationary strain profile r_j = r(tau, beta_j) at uniform tension."""
        tau_arr = np.full(len(self.betas), float(tau))
        self.table._check_tau(tau_arr)
        # invert the per-cell spline by bisection on the monotone tau map
        lo = self.r_nodes[:, 0].copy()
        hi = self.r_nodes[:, -1].copy()
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            above = self._tau(mid) > tau_arr
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        return 0.5 * (lo + hi)

    def max_dtau_dr(self):
        """Upper bound for d tau / d r over the tabulated range (CFL input)."""
        dc = self._dtau.coefs
        dt = np.diff(self.r_nodes, axis=1)
        best = 0.0
        for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
            t = frac * dt
            val = dc[:, 0, :].copy()
            for d in range(1, dc.shape[1]):
                val = val * t + dc[:, d, :]
            best = max(best, float(val.max()))
        return best
