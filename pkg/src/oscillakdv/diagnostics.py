"""Norms and conserved quantities on the periodic grid.

Integrals in x are rectangle sums (spectrally accurate for periodic data),
integrals in t are trapezoid sums over the snapshot times, and every
``L^inf`` reduction is a maximum over the discrete mesh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .errors import ConfigurationError, InsufficientDataError
from .spectral import Field, airy_symbol, spectral_derivative

INF = math.inf


@dataclass(frozen=True)
class NormSpec:
    """Which norm to take of a trajectory (or of a trajectory difference).

    ``h_s`` and ``l2`` are sup-in-time norms; ``mixed`` is ``L_x^p L_T^q``
    of the ``derivative_order``-th derivative; ``strichartz_5_10`` is
    ``L_x^5 L_T^10`` of the field itself.
    """

    kind: Literal["h_s", "mixed", "xt_full", "yt_full", "l2", "strichartz_5_10"]
    s: float = 1.0
    p: float = 2.0
    q: float = 2.0
    derivative_order: int = 0

    def __post_init__(self):
        if self.kind not in ("h_s", "mixed", "xt_full", "yt_full", "l2", "strichartz_5_10"):
            raise ConfigurationError([("norm.kind", f"unknown norm {self.kind!r}")])
        if self.kind == "mixed" and not (1 <= self.p <= INF and 1 <= self.q <= INF):
            raise ConfigurationError([("norm", "p and q must lie in [1, inf]")])
        if self.s < 0:
            raise ConfigurationError([("norm.s", "must be non-negative")])

    @classmethod
    def h1(cls) -> "NormSpec":
        return cls("h_s", s=1.0)

    @classmethod
    def xt(cls) -> "NormSpec":
        return cls("xt_full")

    @classmethod
    def mixed_pq(cls, p, q, derivative_order=0) -> "NormSpec":
        return cls("mixed", p=p, q=q, derivative_order=derivative_order)


def mass(u: Field) -> float:
    """Discrete ``int u^2 dx``."""
    v = u.values
    return float(np.dot(v, v) * u.grid.dx)


def energy(u: Field, lam: float, k: int) -> float:
    """``int (u_x^2 / 2 - lam u^{k+2} / (k+2)) dx``, derivative taken spectrally."""
    ux = spectral_derivative(u, 1).values
    v = u.values
    with np.errstate(over="ignore", invalid="ignore"):
        pot = np.sum(v ** (k + 2)) / (k + 2)
    return float((0.5 * np.dot(ux, ux) - lam * pot) * u.grid.dx)


def sobolev_norm(u: Field, s: float) -> float:
    """``(sum_kappa (1 + kappa^2)^s |u_hat|^2)^(1/2)``."""
    c = u.coeffs
    w = (1.0 + u.grid.wavenumbers ** 2) ** s
    return float(math.sqrt(np.sum(w * (c.real ** 2 + c.imag ** 2))))


# ---------------------------------------------------------------------------
# space-time norms


def _derivative_stack(values: np.ndarray, grid, order: int) -> np.ndarray:
    """Apply ``d^order/dx^order`` to each row (Nyquist zeroed)."""
    if order == 0:
        return values
    mult = (1j * grid.wavenumbers) ** order
    mult[grid.n // 2] = 0.0
    return np.fft.ifft(np.fft.fft(values, axis=1) * mult, axis=1).real


def _time_reduce(absf: np.ndarray, times: np.ndarray, q: float) -> np.ndarray:
    if q == INF:
        return absf.max(axis=0)
    if len(times) < 2:
        raise InsufficientDataError("finite-q time norm needs at least two snapshots")
    return np.trapezoid(absf ** q, times, axis=0)  # returns integral of |f|^q


def mixed_norm_array(values: np.ndarray, times: np.ndarray, dx: float,
                     p: float, q: float) -> float:
    """``L_x^p L_T^q`` of samples ``values[t_index, x_index]``."""
    absf = np.abs(values)
    inner = _time_reduce(absf, times, q)
    if q != INF:
        # inner holds int |f|^q dt; raise to p/q below (or 1/q for p = inf)
        if p == INF:
            return float(inner.max() ** (1.0 / q))
        return float((np.sum(inner ** (p / q)) * dx) ** (1.0 / p))
    if p == INF:
        return float(inner.max())
    return float((np.sum(inner ** p) * dx) ** (1.0 / p))


def _traj_arrays(traj):
    times = traj.times
    values = traj.values()
    return times, values


def mixed_norm(traj, p: float, q: float, derivative_order: int = 0) -> float:
    """``|| d^j f ||_{L_x^p L_T^q}`` over the trajectory's snapshot mesh."""
    times, values = _traj_arrays(traj)
    if q != INF and len(times) < 2:
        raise InsufficientDataError("finite-q time norm needs at least two snapshots")
    vals = _derivative_stack(values, traj.grid, derivative_order)
    return mixed_norm_array(vals, times, traj.grid.dx, p, q)


def sup_sobolev(traj, s: float = 1.0) -> float:
    """``L_T^inf H^s``: max over snapshots."""
    return max(sobolev_norm(f, s) for _, f in traj.snapshots)


XT_COMPONENTS = (
    "Linf_T_H1",
    "dx_Linf_x_L2_T",
    "dxx_Linf_x_L2_T",
    "L5_x_L10_T",
    "dx_L5_x_L10_T",
    "dx_L20_x_L5/2_T",
    "L4_x_Linf_T",
)


def xt_components(traj) -> dict:
    """The seven summands of the X_T norm, keyed by :data:`XT_COMPONENTS`."""
    times, values = _traj_arrays(traj)
    if len(times) < 2:
        raise InsufficientDataError("X_T norm needs at least two snapshots")
    g = traj.grid
    d1 = _derivative_stack(values, g, 1)
    d2 = _derivative_stack(values, g, 2)
    dx = g.dx
    parts = [
        sup_sobolev(traj, 1.0),
        mixed_norm_array(d1, times, dx, INF, 2),
        mixed_norm_array(d2, times, dx, INF, 2),
        mixed_norm_array(values, times, dx, 5, 10),
        mixed_norm_array(d1, times, dx, 5, 10),
        mixed_norm_array(d1, times, dx, 20, 2.5),
        mixed_norm_array(values, times, dx, 4, INF),
    ]
    return dict(zip(XT_COMPONENTS, parts))


def xt_norm(traj) -> float:
    return float(sum(xt_components(traj).values()))


def yt_norm(traj) -> float:
    """``||f_x||_{L^2_x L^2_T} + ||f||_{L^2_x L^2_T}``."""
    return mixed_norm(traj, 2, 2, 1) + mixed_norm(traj, 2, 2, 0)


def norm_of(traj, norm: NormSpec) -> float:
    k = norm.kind
    if k == "h_s":
        return sup_sobolev(traj, norm.s)
    if k == "l2":
        return sup_sobolev(traj, 0.0)
    if k == "mixed":
        return mixed_norm(traj, norm.p, norm.q, norm.derivative_order)
    if k == "xt_full":
        return xt_norm(traj)
    if k == "yt_full":
        return yt_norm(traj)
    return mixed_norm(traj, 5, 10, 0)


def difference_trajectory(traj_a, traj_b):
    """Snapshot-wise ``a - b``; both must share grid and snapshot times."""
    from .dynamics import RunStatus, Trajectory

    if traj_a.grid != traj_b.grid:
        raise ConfigurationError([("grid", "trajectories live on different grids")])
    ta, tb = traj_a.times, traj_b.times
    if ta.shape != tb.shape or not np.array_equal(ta, tb):
        raise ConfigurationError([("snapshot_times", "trajectories have different snapshot meshes")])
    snaps = [(t, Field(traj_a.grid, fa.values - fb.values, False))
             for (t, fa), (_, fb) in zip(traj_a.snapshots, traj_b.snapshots)]
    return Trajectory(traj_a.grid, snaps, [], RunStatus("completed", float(ta[-1])),
                      traj_a.k, 0.0)


def traj_diff(traj_a, traj_b, norm: NormSpec) -> float:
    return norm_of(difference_trajectory(traj_a, traj_b), norm)


# ---------------------------------------------------------------------------
# Strichartz tail of the Airy flow


def _significant_wavenumber(phi: Field, rtol: float = 1e-10) -> float:
    """Smallest |kappa| beyond which the spectrum holds < rtol of the mass."""
    c = phi.coeffs
    kap = np.abs(phi.grid.wavenumbers)
    order = np.argsort(kap)
    e = (c.real ** 2 + c.imag ** 2)[order]
    total = e.sum()
    if total == 0:
        return 0.0
    tail = total - np.cumsum(e)
    i = int(np.argmax(tail <= rtol * total))
    return float(kap[order][i])


def strichartz_tail(phi: Field, T: float, horizon: float,
                    n_times: Optional[int] = None, chunk: int = 512) -> float:
    """``|| S(t) phi ||_{L_x^5 L_t^10}`` over ``t in (T, horizon)``.

    The time mesh is uniform; by default its spacing resolves the fastest
    significant Airy phase ``kappa^3 t`` at 0.5 rad per point, with at least
    2001 points. Accumulation is chunked so long horizons stay in memory.
    """
    if not horizon > T:
        raise ValueError("horizon must exceed T")
    c = phi.coeffs
    if not np.any(c):
        return 0.0
    if n_times is None:
        kmax = _significant_wavenumber(phi)
        dt_mesh = 0.5 / max(kmax ** 3, 1e-12)
        n_times = max(2001, int(math.ceil((horizon - T) / dt_mesh)) + 1)
    times = np.linspace(T, horizon, n_times)
    g = phi.grid
    sym = airy_symbol(g)
    scale = g.n / math.sqrt(g.domain_length)
    acc = np.zeros(g.n)
    w = np.full(n_times, times[1] - times[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    for start in range(0, n_times, chunk):
        ts = times[start:start + chunk]
        spec = c[None, :] * np.exp(1j * sym[None, :] * ts[:, None]) * scale
        u = np.fft.ifft(spec, axis=1).real
        acc += (w[start:start + chunk, None] * np.abs(u) ** 10).sum(axis=0)
    return float((np.sum(acc ** 0.5) * g.dx) ** 0.2)


def strichartz_certificate(phi: Field, T: float, horizon: float) -> dict:
    """Tail value at ``horizon`` plus the value with the window halved.

    The relative gap between the two is the reported horizon sensitivity.
    """
    full = strichartz_tail(phi, T, horizon)
    half_h = T + 0.5 * (horizon - T)
    half = strichartz_tail(phi, T, half_h)
    sens = 0.0 if full == 0 else abs(full - half) / full
    return {"T": T, "horizon": horizon, "value": full,
            "value_half_window": half, "horizon_sensitivity": sens}
