"""Periodic nonlinearity coefficients g and their means.

A :class:`CoefficientSpec` evaluates ``g(omega * (t + t0))`` at solver time
``t``. The argument is reduced modulo the period before the variant's
profile is applied.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigurationError

VARIANTS = ("constant", "cosine", "cos_squared", "step_example", "tabulated")

# Interval endpoints of the step profile are matched with this relative slack
# so that e.g. omega * (1/omega) == 0.9999999999999999 still counts as 1.
_EDGE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class CoefficientSpec:
    """Periodic coefficient ``g`` with frequency ``omega`` and phase ``t0``.

    Variants
    --------
    constant
        ``g = value``.
    cosine, cos_squared
        ``cos(2 pi s / period)`` and its square.
    step_example
        Piecewise constant, mean zero: 1 on ``[0, eps] U [period - eps, period)``,
        0 on ``[1, 1 + eps]`` and ``-2 eps / (period - 3 eps)`` elsewhere.
    tabulated
        Periodic linear interpolation of equally spaced ``samples`` on
        ``[0, period)``.
    """

    variant: str
    omega: float = 0.0
    t0: float = 0.0
    period: float = 2.0 * math.pi
    value: float = 1.0
    eps: float = 0.0
    samples: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        problems = validate_coefficient(self)
        if problems:
            raise ConfigurationError(problems)
        if self.samples is not None and not isinstance(self.samples, tuple):
            object.__setattr__(self, "samples", tuple(float(v) for v in self.samples))

    # constructors -----------------------------------------------------------
    @classmethod
    def constant(cls, value: float, **kw) -> "CoefficientSpec":
        return cls("constant", value=float(value), **kw)

    @classmethod
    def cosine(cls, omega: float = 0.0, t0: float = 0.0, period: float = 2 * math.pi):
        return cls("cosine", omega=omega, t0=t0, period=period)

    @classmethod
    def cos_squared(cls, omega: float = 0.0, t0: float = 0.0, period: float = 2 * math.pi):
        return cls("cos_squared", omega=omega, t0=t0, period=period)

    @classmethod
    def step_example(cls, eps: float, period: float, omega: float = 0.0, t0: float = 0.0):
        return cls("step_example", omega=omega, t0=t0, period=period, eps=eps)

    @classmethod
    def tabulated(cls, samples, period: float, omega: float = 0.0, t0: float = 0.0):
        return cls("tabulated", omega=omega, t0=t0, period=period,
                   samples=tuple(float(v) for v in samples))

    def with_phase(self, omega: Optional[float] = None, t0: Optional[float] = None):
        return replace(self,
                       omega=self.omega if omega is None else float(omega),
                       t0=self.t0 if t0 is None else float(t0))

    # properties -------------------------------------------------------------
    @property
    def is_constant(self) -> bool:
        return self.variant == "constant"

    @property
    def step_rest_value(self) -> float:
        return -2.0 * self.eps / (self.period - 3.0 * self.eps)

    @property
    def sup_norm(self) -> float:
        """``A = ||g||_inf``."""
        if self.variant == "constant":
            return abs(self.value)
        if self.variant in ("cosine", "cos_squared"):
            return 1.0
        if self.variant == "step_example":
            return max(1.0, abs(self.step_rest_value))
        return float(np.max(np.abs(self.samples)))

    def to_dict(self) -> dict:
        d = {"variant": self.variant, "omega": self.omega, "t0": self.t0,
             "period": self.period}
        if self.variant == "constant":
            d["value"] = self.value
        elif self.variant == "step_example":
            d["eps"] = self.eps
        elif self.variant == "tabulated":
            d["samples"] = list(self.samples)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, CoefficientSpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.digest())

    # evaluation -------------------------------------------------------------
    def profile(self, s: float) -> float:
        """``g(s)`` for an already reduced or unreduced argument ``s``."""
        v = self.variant
        if v == "constant":
            return self.value
        L = self.period
        s = math.fmod(s, L)
        if s < 0:
            s += L
        if v == "cosine":
            return math.cos(2.0 * math.pi * s / L)
        if v == "cos_squared":
            return math.cos(2.0 * math.pi * s / L) ** 2
        if v == "step_example":
            return self._step(s)
        return self._interp(s)

    def _step(self, s: float) -> float:
        L, eps = self.period, self.eps
        tol = _EDGE_RTOL * max(1.0, abs(s), L)
        if s <= eps + tol or s >= L - eps - tol:
            return 1.0
        if 1.0 - tol <= s <= 1.0 + eps + tol:
            return 0.0
        return self.step_rest_value

    def _interp(self, s: float) -> float:
        vals = self.samples
        m = len(vals)
        pos = s / self.period * m
        i = int(math.floor(pos)) % m
        frac = pos - math.floor(pos)
        return (1.0 - frac) * vals[i] + frac * vals[(i + 1) % m]

    def __call__(self, t: float) -> float:
        return eval_coefficient(self, t)


def validate_coefficient(spec: CoefficientSpec) -> list:
    problems = []
    if spec.variant not in VARIANTS:
        problems.append(("coefficient.variant",
                         f"unknown variant {spec.variant!r}; expected one of {VARIANTS}"))
        return problems
    for name in ("omega", "t0", "period", "value", "eps"):
        val = getattr(spec, name)
        if not isinstance(val, (int, float)) or not math.isfinite(val):
            problems.append((f"coefficient.{name}", f"must be a finite number, got {val!r}"))
    if problems:
        return problems
    if spec.period <= 0:
        problems.append(("coefficient.period", f"must be positive, got {spec.period}"))
    if spec.variant == "step_example":
        L, eps = spec.period, spec.eps
        if not L > 1:
            problems.append(("coefficient.period", f"step_example needs period > 1, got {L}"))
        if not (0 < eps < (L - 1) / 2):
            problems.append(("coefficient.eps", f"need 0 < eps < (period - 1)/2, got {eps}"))
        if not eps < 1:
            problems.append(("coefficient.eps",
                             f"need eps < 1 so that [0, eps] and [1, 1 + eps] are disjoint, got {eps}"))
    if spec.variant == "tabulated":
        if spec.samples is None or len(spec.samples) < 2:
            problems.append(("coefficient.samples", "need at least two samples"))
        elif not all(math.isfinite(float(v)) for v in spec.samples):
            problems.append(("coefficient.samples", "samples must be finite"))
    return problems


def mean(spec: CoefficientSpec) -> float:
    """Mean of ``g`` over one period.

    Closed form for the built-in variants; periodic trapezoid quadrature of
    the interpolant (at least 10**4 nodes) for tabulated data.
    """
    v = spec.variant
    if v == "constant":
        return spec.value
    if v == "cosine":
        return 0.0
    if v == "cos_squared":
        return 0.5
    if v == "step_example":
        return 0.0
    m = len(spec.samples)
    nodes = max(10_000, m)
    nodes = m * (-(-nodes // m))  # multiple of m, so every sample is a node
    s = np.linspace(0.0, spec.period, nodes + 1)
    vals = np.array([spec.profile(si) for si in s[:-1]] + [spec.samples[0]])
    return float(np.trapezoid(vals, s) / spec.period)


def eval_coefficient(spec: CoefficientSpec, t: float) -> float:
    """Return ``g(omega * (t + t0))`` at solver time ``t``."""
    if spec.variant == "constant":
        return spec.value
    return spec.profile(spec.omega * (t + spec.t0))

