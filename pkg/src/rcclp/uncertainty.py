"""Interval-uncertain constraint sets, sampling, and randomized verification."""
from __future__ import annotations

import decimal
import enum
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .lp_core import FEAS_TOL, ConstraintSet


@dataclass(frozen=True)
class ProbabilisticLevels:
    """Per-agent accuracy ``epsilon`` and confidence ``delta``.

    ``delta == 1`` is accepted; it just drops the confidence term of the
    sample bound.
    """

    epsilon: float
    delta: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")


def _sample_bound_decimal(k: int, eps: float, delta: float) -> decimal.Decimal:
    with decimal.localcontext() as ctx:
        ctx.prec = 50
        one = decimal.Decimal(1)
        num = decimal.Decimal("2.3") + decimal.Decimal("1.1") * decimal.Decimal(k).ln() - decimal.Decimal(delta).ln()
        den = -(one - decimal.Decimal(eps)).ln()
        return num / den


def sample_size(k: int, levels: ProbabilisticLevels) -> int:
    """Smallest integer ``M`` with ``M >= (2.3 + 1.1 ln k + ln 1/delta) / ln(1/(1-eps))``."""
    if k < 1:
        raise ValueError("verification counter k must be >= 1")
    rhs = (2.3 + 1.1 * math.log(k) - math.log(levels.delta)) / -math.log1p(-levels.epsilon)
    nearest = round(rhs)
    if abs(rhs - nearest) <= 1e-9 * max(1.0, rhs):
        # too close to an integer for double precision to settle the ceiling
        return int(_sample_bound_decimal(k, levels.epsilon, levels.delta).to_integral_value(decimal.ROUND_CEILING))
    return int(math.ceil(rhs))


class UniformBox:
    """Entrywise uniform perturbations on ``[-radius, radius]``.

    ``draw(rng, radius, K)`` must consume the stream sequentially, so that
    drawing ``K1`` then ``K2`` samples equals drawing ``K1 + K2`` at once.
    """

    def draw(self, rng: np.random.Generator, radius: np.ndarray, count: int) -> np.ndarray:
        u = rng.random((count,) + radius.shape)
        return -radius + (2.0 * radius) * u


UNIFORM = UniformBox()


@dataclass(frozen=True, eq=False)
class UncertainConstraintSet:
    """Rows ``(nominal[r] + q[r]) . theta <= rhs[r]`` with ``|q[r, j]| <= radius[r, j]``."""

    nominal: np.ndarray
    radius: np.ndarray
    rhs: np.ndarray
    owner: int = 0
    distribution: UniformBox = field(default=UNIFORM, repr=False)

    def __post_init__(self):
        nominal = np.ascontiguousarray(self.nominal, dtype=float)
        radius = np.asarray(self.radius, dtype=float)
        if radius.ndim == 0:
            radius = np.full(nominal.shape, float(radius))
        radius = np.ascontiguousarray(radius)
        rhs = np.ascontiguousarray(self.rhs, dtype=float)
        if nominal.ndim != 2:
            raise ValueError("nominal matrix must be 2-D")
        m, d = nominal.shape
        if m < d:
            raise ValueError(f"need at least d={d} constraints, got {m}")
        if radius.shape != (m, d) or rhs.shape != (m,):
            raise ValueError("radius/rhs shapes do not match the nominal matrix")
        if (radius < 0).any():
            raise ValueError("radius entries must be non-negative")
        if not (np.isfinite(nominal).all() and np.isfinite(radius).all() and np.isfinite(rhs).all()):
            raise ValueError("non-finite uncertain-set data")
        for arr in (nominal, radius, rhs):
            arr.flags.writeable = False
        object.__setattr__(self, "nominal", nominal)
        object.__setattr__(self, "radius", radius)
        object.__setattr__(self, "rhs", rhs)

    @property
    def m(self) -> int:
        return self.nominal.shape[0]

    @property
    def dim(self) -> int:
        return self.nominal.shape[1]


def draw_sample(uset: UncertainConstraintSet, rng: np.random.Generator) -> np.ndarray:
    return uset.distribution.draw(rng, uset.radius, 1)[0]


def sample_tag(q: np.ndarray) -> str:
    if not np.any(q):
        return "nominal"
    return hashlib.blake2b(np.ascontiguousarray(q, dtype=float).tobytes(), digest_size=8).hexdigest()


def instantiate(uset: UncertainConstraintSet, q: np.ndarray | None = None) -> ConstraintSet:
    """The deterministic constraint set at perturbation ``q`` (nominal when ``q`` is None or zero)."""
    if q is None:
        q = np.zeros_like(uset.nominal)
    q = np.asarray(q, dtype=float)
    if q.shape != uset.nominal.shape:
        raise ValueError(f"sample shape {q.shape} != {uset.nominal.shape}")
    tag = sample_tag(q)
    ids = [(uset.owner, r, tag) for r in range(uset.m)]
    return ConstraintSet(uset.nominal + q, uset.rhs.copy(), ids, uset.dim, check=False)


class Outcome(str, enum.Enum):
    VERIFIED = "verified"
    VIOLATED = "violated"


@dataclass(frozen=True)
class VerificationResult:
    outcome: Outcome
    samples_used: int
    certificate: ConstraintSet | None = None
    sample: np.ndarray | None = None

    @property
    def violated(self) -> bool:
        return self.outcome is Outcome.VIOLATED


def verify(theta, uset: UncertainConstraintSet, k: int, levels: ProbabilisticLevels,
           rng: np.random.Generator, chunk: int = 256) -> VerificationResult:
    """Monte Carlo check of ``theta`` against ``sample_size(k)`` fresh samples.

    Stops at the first violating sample. The stream is left positioned right
    after that sample, exactly as if samples had been drawn one at a time.
    """
    theta = np.ascontiguousarray(theta, dtype=float)
    if not np.isfinite(theta).all():
        raise ValueError("theta must be finite")
    total = sample_size(k, levels)
    drawn = 0
    while drawn < total:
        count = min(chunk, total - drawn)
        state = rng.bit_generator.state
        Q = uset.distribution.draw(rng, uset.radius, count)
        hit = kernels.first_violation(uset.nominal, uset.rhs, theta, Q, FEAS_TOL)
        if hit >= 0:
            rng.bit_generator.state = state
            q = uset.distribution.draw(rng, uset.radius, hit + 1)[hit]
            return VerificationResult(Outcome.VIOLATED, drawn + hit + 1, instantiate(uset, q), q)
        drawn += count
    return VerificationResult(Outcome.VERIFIED, total)
