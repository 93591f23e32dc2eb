"""Time integration of u_t + u_xxx + g(omega (t + t0)) (u^{k+1})_x = 0.

Both steppers work on the Duhamel form: the Airy part is applied through
its exact Fourier multiplier exp(i kappa^3 h) and only the nonlinear term
is discretized.

* ``if_rk4``: classical RK4 on w(tau) = S(-tau) u(tau).
* ``etdrk4``: Cox-Matthews exponential time differencing, phi-function
  coefficients from a 32-point contour average.

Internally the state is the raw (unnormalized) ``rfft`` of the samples;
:class:`~oscillakdv.spectral.Field` objects are only built for snapshots.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Literal, NamedTuple, Optional

import numpy as np

from .errors import ConfigurationError
from .forcing import CoefficientSpec, eval_coefficient, mean
from .spectral import DealiasPolicy, Field, Grid1D

log = logging.getLogger(__name__)

SCHEMES = ("if_rk4", "etdrk4")
EDGE_WARN = 1e-10
STEPS_PER_OSCILLATION = 20
CONTOUR_POINTS = 32


@dataclass(frozen=True)
class SolverConfig:
    k: int = 5
    scheme: Literal["if_rk4", "etdrk4"] = "if_rk4"
    dt: float = 1e-3
    t_end: float = 1.0
    dealias: Optional[DealiasPolicy] = None
    snapshot_times: tuple = ()
    blowup_h1_factor: float = 10.0
    blowup_amp_max: float = 1e6
    conserve_check_every: int = 10

    def __post_init__(self):
        if self.dealias is None:
            object.__setattr__(self, "dealias", DealiasPolicy.exact(max(int(self.k), 1)))
        object.__setattr__(self, "snapshot_times",
                           tuple(float(t) for t in self.snapshot_times))
        problems = self.problems()
        if problems:
            raise ConfigurationError(problems)

    def problems(self) -> list:
        p = []
        if isinstance(self.k, bool) or not isinstance(self.k, int) or self.k < 1:
            p.append(("solver.k", f"must be an integer >= 1, got {self.k!r}"))
        if self.scheme not in SCHEMES:
            p.append(("solver.scheme", f"must be one of {SCHEMES}, got {self.scheme!r}"))
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            p.append(("solver.t_end", f"must be positive, got {self.t_end!r}"))
        if not self.dt > 0:
            p.append(("solver.dt", f"must be positive, got {self.dt!r}"))
        elif self.t_end > 0 and self.dt > self.t_end:
            p.append(("solver.dt", f"dt={self.dt} exceeds t_end={self.t_end}"))
        ts = self.snapshot_times
        if any(b <= a for a, b in zip(ts, ts[1:])):
            p.append(("solver.snapshot_times", "must be strictly increasing"))
        if ts and (ts[0] < 0 or ts[-1] > self.t_end):
            p.append(("solver.snapshot_times", f"must lie in [0, t_end={self.t_end}]"))
        if not self.blowup_h1_factor > 0:
            p.append(("solver.blowup_h1_factor", "must be positive"))
        if not self.blowup_amp_max > 0:
            p.append(("solver.blowup_amp_max", "must be positive"))
        if (isinstance(self.conserve_check_every, bool)
                or not isinstance(self.conserve_check_every, int)
                or self.conserve_check_every < 1):
            p.append(("solver.conserve_check_every", "must be a positive integer"))
        return p

    @property
    def output_times(self) -> tuple:
        """Snapshot schedule including 0 and ``t_end``."""
        ts = sorted(set(self.snapshot_times) | {0.0, float(self.t_end)})
        return tuple(ts)

    def with_uniform_snapshots(self, count: int) -> "SolverConfig":
        ts = np.linspace(0.0, self.t_end, count)
        return replace(self, snapshot_times=tuple(ts))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dealias"] = {"kind": self.dealias.kind, "k": self.dealias.k}
        d["snapshot_times"] = list(self.snapshot_times)
        return d


def existence_time(phi: Field, spec: CoefficientSpec, k: int, C: float = 1.0) -> float:
    """Local-existence heuristic ``T = C / (A^2 ||phi||_{H^1}^{2k})``, ``A = ||g||_inf``.

    Returns ``inf`` for zero data or a zero coefficient.
    """
    from .diagnostics import sobolev_norm

    A = spec.sup_norm
    h1 = sobolev_norm(phi, 1.0)
    denom = A * A * h1 ** (2 * k)
    return math.inf if denom == 0 else C / denom


class ScalarRecord(NamedTuple):
    t: float
    mass: float
    energy: float
    h1_norm: float
    g_value: float


@dataclass(frozen=True)
class RunStatus:
    kind: Literal["completed", "blowup_detected", "nan_detected", "interrupted"]
    t: Optional[float] = None
    reason: str = ""

    @property
    def completed(self) -> bool:
        return self.kind == "completed"

    def __str__(self):
        return self.kind if self.t is None else f"{self.kind}({self.t:.6g})"


@dataclass
class Trajectory:
    """Snapshots ``(t, Field)`` plus scalar diagnostics and a final status."""

    grid: Grid1D
    snapshots: list
    scalars: list
    status: RunStatus
    k: int = 5
    coefficient_mean: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.snapshots])

    def values(self) -> np.ndarray:
        """Physical samples stacked as ``(n_snapshots, n)``."""
        return np.array([f.values for _, f in self.snapshots])

    def field_at(self, i: int) -> Field:
        return self.snapshots[i][1]

    def final(self) -> Field:
        return self.snapshots[-1][1]

    def mass_drift(self) -> float:
        """Largest relative deviation of the recorded mass from its initial value."""
        m = np.array([r.mass for r in self.scalars])
        if m.size == 0 or m[0] == 0:
            return 0.0
        return float(np.max(np.abs(m - m[0])) / m[0])

    def energy_drift(self) -> float:
        e = np.array([r.energy for r in self.scalars])
        if e.size == 0 or e[0] == 0:
            return 0.0
        return float(np.max(np.abs(e - e[0])) / abs(e[0]))

    def blowup_time(self) -> Optional[float]:
        return self.status.t if self.status.kind == "blowup_detected" else None


# ---------------------------------------------------------------------------
# Raw spectral machinery


def _raw_to_field(grid: Grid1D, uh: np.ndarray) -> Field:
    return Field(grid, np.fft.irfft(uh, grid.n), False)


def _h1_raw(grid: Grid1D, uh: np.ndarray) -> float:
    """H^1 norm from raw rfft coefficients."""
    w = np.full(uh.shape, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    kap = grid.rwavenumbers
    s = np.sum(w * (1.0 + kap * kap) * (uh.real ** 2 + uh.imag ** 2))
    return math.sqrt(s * grid.domain_length) / grid.n


def _phi_contour(z: np.ndarray, h: float):
    """ETDRK4 coefficients for diagonal linear part ``z = L h``.

    Averages the phi-function expressions over a circle of radius 1 around
    each ``z`` so small ``|z|`` does not suffer cancellation.
    """
    r = np.exp(2j * np.pi * (np.arange(1, CONTOUR_POINTS + 1) - 0.5) / CONTOUR_POINTS)
    zc = z[:, None] + r[None, :]
    ez = np.exp(zc)
    ez2 = np.exp(zc / 2.0)
    zc2 = zc * zc
    zc3 = zc2 * zc
    q = h * np.mean((ez2 - 1.0) / zc, axis=1)
    f1 = h * np.mean((-4.0 - zc + ez * (4.0 - 3.0 * zc + zc2)) / zc3, axis=1)
    f2 = h * np.mean((2.0 + zc + ez * (zc - 2.0)) / zc3, axis=1)
    f3 = h * np.mean((-4.0 - 3.0 * zc - zc2 + ez * (4.0 - zc)) / zc3, axis=1)
    return q, f1, f2, f3


class Stepper:
    """Single-step integrator for one (grid, coefficient, config) triple.

    Multipliers for each distinct step size are cached; the cache never
    changes the values produced, so runs stay bitwise reproducible.
    """

    def __init__(self, grid: Grid1D, spec: CoefficientSpec, cfg: SolverConfig):
        self.grid = grid
        self.spec = spec
        self.cfg = cfg
        n = grid.n
        kap = grid.rwavenumbers.copy()
        kap[-1] = 0.0  # Nyquist: odd operators act as zero
        self.ik = 1j * kap
        self.lin = 1j * kap ** 3
        self.mask = cfg.dealias.rmask(n)
        self.ik_masked = self.ik * self.mask
        self.power = cfg.k + 1
        self._cache: dict = {}
        if cfg.dealias.kind == "two_thirds" and cfg.k > 1:
            log.warning("two_thirds dealiasing aliases a degree-%d product; "
                        "use the exact mask for production runs", cfg.k + 1)

    def g(self, t: float) -> float:
        return eval_coefficient(self.spec, t)

    def tendency(self, uh: np.ndarray, t: float) -> np.ndarray:
        """N(u, t) = -g * P d/dx (P u)^{k+1} in raw rfft form."""
        g = self.g(t)
        if g == 0.0:
            return np.zeros_like(uh)
        u = np.fft.irfft(uh * self.mask, self.grid.n)
        with np.errstate(over="ignore", invalid="ignore"):
            p = u ** self.power
            return (-g) * self.ik_masked * np.fft.rfft(p)

    def _coeffs(self, h: float):
        c = self._cache.get(h)
        if c is None:
            if self.cfg.scheme == "if_rk4":
                c = (np.exp(self.lin * (h / 2.0)), np.exp(self.lin * h))
            else:
                e_half = np.exp(self.lin * (h / 2.0))
                e_full = np.exp(self.lin * h)
                c = (e_half, e_full) + _phi_contour(self.lin * h, h)
            self._cache[h] = c
        return c

    def step(self, uh: np.ndarray, t: float, h: float) -> np.ndarray:
        if self.cfg.scheme == "if_rk4":
            return self._if_rk4(uh, t, h)
        return self._etdrk4(uh, t, h)

    def _if_rk4(self, uh, t, h):
        e, e2 = self._coeffs(h)
        N = self.tendency
        k1 = N(uh, t)
        k2 = N(e * (uh + (h / 2.0) * k1), t + h / 2.0)
        k3 = N(e * uh + (h / 2.0) * k2, t + h / 2.0)
        k4 = N(e2 * uh + h * (e * k3), t + h)
        return e2 * uh + (h / 6.0) * (e2 * k1 + 2.0 * (e * (k2 + k3)) + k4)

    def _etdrk4(self, uh, t, h):
        e, e2, q, f1, f2, f3 = self._coeffs(h)
        N = self.tendency
        nu = N(uh, t)
        a = e * uh + q * nu
        na = N(a, t + h / 2.0)
        b = e * uh + q * na
        nb = N(b, t + h / 2.0)
        c = e * a + q * (2.0 * nb - nu)
        nc = N(c, t + h)
        return e2 * uh + f1 * nu + 2.0 * (f2 * (na + nb)) + f3 * nc


def effective_dt(spec: CoefficientSpec, cfg: SolverConfig) -> float:
    """``min(dt, period / (|omega| * 20))`` for oscillating coefficients."""
    if spec.is_constant or spec.omega == 0:
        return cfg.dt
    return min(cfg.dt, spec.period / (abs(spec.omega) * STEPS_PER_OSCILLATION))


def _segment_steps(a: float, b: float, h: float) -> int:
    return max(1, int(math.ceil((b - a) / h - 1e-9)))


# ---------------------------------------------------------------------------
# Public operations


def nonlinear_tendency(u: Field, t: float, spec: CoefficientSpec, cfg: SolverConfig) -> Field:
    """Dealiased ``-g(omega (t + t0)) d/dx (u^{k+1})`` as a spectral Field."""
    st = Stepper(u.grid, spec, cfg)
    nh = st.tendency(np.fft.rfft(u.values), t)
    return Field(u.grid, _normalized(u.grid, np.fft.irfft(nh, u.grid.n)), True)


def _normalized(grid: Grid1D, values: np.ndarray) -> np.ndarray:
    return np.fft.fft(values) * (math.sqrt(grid.domain_length) / grid.n)


def step(u: Field, t: float, spec: CoefficientSpec, cfg: SolverConfig) -> Field:
    """Advance ``u`` from ``t`` by one step of size ``effective_dt(spec, cfg)``.

    The result has the representation of the input.
    """
    st = Stepper(u.grid, spec, cfg)
    out = _raw_to_field(u.grid, st.step(np.fft.rfft(u.values), t, effective_dt(spec, cfg)))
    return Field(u.grid, _normalized(u.grid, out.data), True) if u.is_spectral else out


def detect_blowup(u: Field, initial_h1: float, cfg: SolverConfig) -> bool:
    """True when ``||u||_{H^1} > factor * initial_h1`` or ``max|u| > amp_max``."""
    from .diagnostics import sobolev_norm

    if initial_h1 > 0 and sobolev_norm(u, 1.0) > cfg.blowup_h1_factor * initial_h1:
        return True
    return bool(np.max(np.abs(u.values)) > cfg.blowup_amp_max)


@dataclass
class Checkpoint:
    """Everything needed to continue a run bit-for-bit."""

    state: np.ndarray  # raw rfft coefficients
    t: float
    segment: int
    step_in_segment: int
    step_count: int
    initial_h1: float
    snapshots: list = field(default_factory=list)
    scalars: list = field(default_factory=list)
    digest: str = ""

    def save(self, path) -> None:
        times = np.array([t for t, _ in self.snapshots])
        vals = np.array([f.data for _, f in self.snapshots]).reshape(len(self.snapshots), -1)
        np.savez(
            path,
            state=self.state,
            meta=np.array(json.dumps({
                "t": self.t, "segment": self.segment,
                "step_in_segment": self.step_in_segment,
                "step_count": self.step_count, "initial_h1": self.initial_h1,
                "digest": self.digest,
            })),
            snap_times=times,
            snap_values=vals,
            scalars=np.array([tuple(r) for r in self.scalars]).reshape(-1, 5),
        )

    @classmethod
    def load(cls, path, grid: Grid1D) -> "Checkpoint":
        with np.load(path) as z:
            meta = json.loads(str(z["meta"]))
            snaps = [(float(t), Field(grid, v.copy(), False))
                     for t, v in zip(z["snap_times"], z["snap_values"])]
            scalars = [ScalarRecord(*map(float, row)) for row in z["scalars"]]
            return cls(state=z["state"].copy(), snapshots=snaps, scalars=scalars, **meta)


def run_digest(phi: Field, spec: CoefficientSpec, cfg: SolverConfig) -> str:
    h = hashlib.sha256()
    h.update(json.dumps({"grid": phi.grid.key(), "coef": spec.to_dict(),
                         "cfg": cfg.to_dict()}, sort_keys=True).encode())
    h.update(np.ascontiguousarray(phi.values).tobytes())
    return h.hexdigest()[:16]


def _scalar_record(grid: Grid1D, uh: np.ndarray, t: float, lam: float, k: int,
                   g: float) -> ScalarRecord:
    from .diagnostics import energy, mass

    f = _raw_to_field(grid, uh)
    return ScalarRecord(t, mass(f), energy(f, lam, k), _h1_raw(grid, uh), g)


def evolve(
    phi: Field,
    spec: CoefficientSpec,
    cfg: SolverConfig,
    *,
    checkpoint_path=None,
    checkpoint_every: int = 0,
    resume: Optional[Checkpoint] = None,
    on_step: Optional[Callable[[int, float], None]] = None,
) -> Trajectory:
    """Integrate from ``phi`` at t=0 to ``cfg.t_end``.

    Snapshots are taken at ``cfg.output_times``; each interval between
    consecutive snapshot times is split into equal steps no longer than
    ``effective_dt``, so snapshots land exactly without interpolation. The
    run stops early with ``blowup_detected`` or ``nan_detected`` status.

    ``checkpoint_path``/``checkpoint_every`` write a :class:`Checkpoint`
    every that many steps; passing one back as ``resume`` continues the run
    and reproduces the uninterrupted trajectory bitwise.
    """
    grid = phi.grid
    u0 = phi.values
    edge = max(abs(u0[0]), abs(u0[-1]))
    if edge > EDGE_WARN:
        log.warning("initial datum is %.3g at the box edge; periodization error "
                    "may be significant", edge)
    stepper = Stepper(grid, spec, cfg)
    lam = mean(spec)
    times = cfg.output_times
    h_max = effective_dt(spec, cfg)
    every = cfg.conserve_check_every
    digest = run_digest(phi, spec, cfg)

    if resume is not None:
        if resume.digest and resume.digest != digest:
            raise ConfigurationError([("resume", "checkpoint was written by a different run")])
        uh = resume.state.copy()
        t = resume.t
        seg0, i0, nstep = resume.segment, resume.step_in_segment, resume.step_count
        h1_0 = resume.initial_h1
        snapshots = list(resume.snapshots)
        scalars = list(resume.scalars)
    else:
        uh = np.fft.rfft(u0)
        t = 0.0
        seg0, i0, nstep = 0, 0, 0
        h1_0 = _h1_raw(grid, uh)
        snapshots = [(0.0, Field(grid, u0.copy(), False))]
        scalars = [_scalar_record(grid, uh, 0.0, lam, cfg.k, stepper.g(0.0))]

    def finish(status: RunStatus) -> Trajectory:
        return Trajectory(grid, snapshots, scalars, status, cfg.k, lam)

    for seg in range(seg0, len(times) - 1):
        a, b = times[seg], times[seg + 1]
        m = _segment_steps(a, b, h_max)
        h = (b - a) / m
        start = i0 if seg == seg0 else 0
        for i in range(start, m):
            if checkpoint_path is not None and checkpoint_every and nstep % checkpoint_every == 0 \
                    and nstep > 0 and not (resume is not None and nstep == resume.step_count):
                Checkpoint(uh, t, seg, i, nstep, h1_0, snapshots, scalars, digest) \
                    .save(checkpoint_path)
            if on_step is not None:
                on_step(nstep, t)
            uh = stepper.step(uh, t, h)
            t = b if i == m - 1 else a + (i + 1) * h
            nstep += 1
            if not np.all(np.isfinite(uh)):
                return finish(RunStatus("nan_detected", t, "non-finite spectral state"))
            h1 = _h1_raw(grid, uh)
            amp = float(np.max(np.abs(np.fft.irfft(uh, grid.n))))
            if nstep % every == 0 or (h1_0 > 0 and h1 > cfg.blowup_h1_factor * h1_0) \
                    or amp > cfg.blowup_amp_max:
                scalars.append(_scalar_record(grid, uh, t, lam, cfg.k, stepper.g(t)))
            if h1_0 > 0 and h1 > cfg.blowup_h1_factor * h1_0:
                snapshots.append((t, _raw_to_field(grid, uh)))
                return finish(RunStatus("blowup_detected", t,
                                        f"H1 norm {h1:.4g} exceeds {cfg.blowup_h1_factor}x initial"))
            if amp > cfg.blowup_amp_max:
                snapshots.append((t, _raw_to_field(grid, uh)))
                return finish(RunStatus("blowup_detected", t,
                                        f"amplitude {amp:.4g} exceeds {cfg.blowup_amp_max:g}"))
        snapshots.append((b, _raw_to_field(grid, uh)))
        if nstep % every != 0:
            scalars.append(_scalar_record(grid, uh, t, lam, cfg.k, stepper.g(t)))
    return finish(RunStatus("completed", cfg.t_end))
