"""Dense LP primitive returning an optimal point together with its basis.

Constraints are halfspaces ``a.theta <= b`` carrying a stable id. Every LP is
solved inside a finite bounding box so it can never be unbounded; box rows use
reserved ids and never enter a returned basis (``LpOutcome.box_active`` says
whether the box was binding instead).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Tuple

import numpy as np

from . import kernels

HalfspaceId = Tuple[int, int, str]

BOX_OWNER = 2**31
FEAS_TOL = 1e-9
PIVOT_TOL = 1e-10


class InfeasibleLP(RuntimeError):
    """A merged constraint collection has an empty feasible region."""


@dataclass(frozen=True, eq=False)
class Halfspace:
    normal: np.ndarray
    offset: float
    id: HalfspaceId


class ConstraintSet:
    """Ordered collection of halfspaces with unique ids, stored row-wise.

    ``A[r] . theta <= b[r]`` is the halfspace tagged ``ids[r]``.
    """

    __slots__ = ("A", "b", "ids", "dim")

    def __init__(self, A, b, ids: Sequence[HalfspaceId], dim: int | None = None, *, check: bool = True):
        conv = np.array if check else np.asarray
        A = conv(A, dtype=float)
        b = conv(b, dtype=float)
        if A.ndim == 1 and A.size == 0:
            A = A.reshape(0, dim or 0)
        if dim is None:
            dim = A.shape[1]
        ids = tuple(ids)
        if check:
            if A.ndim != 2 or A.shape[1] != dim:
                raise ValueError(f"normals must have shape (m, {dim}), got {A.shape}")
            if b.shape != (A.shape[0],) or len(ids) != A.shape[0]:
                raise ValueError("normals, offsets and ids disagree in length")
            if not (np.isfinite(A).all() and np.isfinite(b).all()):
                raise ValueError("non-finite constraint data")
            if A.shape[0] and not np.any(A != 0.0, axis=1).all():
                raise ValueError("zero normal vector")
            if len(set(ids)) != len(ids):
                raise ValueError("duplicate halfspace ids")
        A.flags.writeable = False
        b.flags.writeable = False
        self.A = A
        self.b = b
        self.ids = ids
        self.dim = int(dim)

    @classmethod
    def empty(cls, dim: int) -> "ConstraintSet":
        return cls(np.zeros((0, dim)), np.zeros(0), (), dim)

    @classmethod
    def from_halfspaces(cls, halfspaces: Iterable[Halfspace], dim: int) -> "ConstraintSet":
        hs = list(halfspaces)
        if not hs:
            return cls.empty(dim)
        return cls(np.array([h.normal for h in hs], dtype=float), [h.offset for h in hs], [h.id for h in hs], dim)

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self) -> Iterator[Halfspace]:
        for r, hid in enumerate(self.ids):
            yield Halfspace(self.A[r].copy(), float(self.b[r]), hid)

    def __repr__(self) -> str:
        return f"ConstraintSet(m={len(self)}, d={self.dim})"

    def take(self, rows) -> "ConstraintSet":
        rows = np.asarray(rows, dtype=np.intp)
        return ConstraintSet(self.A[rows], self.b[rows], [self.ids[r] for r in rows], self.dim, check=False)

    def without(self, hid: HalfspaceId) -> "ConstraintSet":
        return self.take([r for r, x in enumerate(self.ids) if x != hid])

    def id_set(self) -> frozenset:
        return frozenset(self.ids)


Basis = ConstraintSet


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box ``lower <= theta_j <= upper`` applied to every LP."""

    lower: float = -1e6
    upper: float = 1e6

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper) and self.lower < self.upper):
            raise ValueError("bounding box must be finite and non-empty")

    def halfspaces(self, dim: int) -> ConstraintSet:
        eye = np.eye(dim)
        A = np.vstack([eye, -eye])
        b = np.concatenate([np.full(dim, self.upper), np.full(dim, -self.lower)])
        ids = [(BOX_OWNER, j, "box") for j in range(2 * dim)]
        return ConstraintSet(A, b, ids, dim, check=False)


DEFAULT_BOX = BoundingBox()


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    UNBOUNDED = "unbounded"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class LpOutcome:
    status: LpStatus
    point: np.ndarray | None = None
    basis: ConstraintSet | None = None
    cost: float | None = None
    box_active: bool = False
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _solve_sorted(A, b, c, box: BoundingBox):
    """Run the simplex kernel on rows already in pivot-priority order.

    Returns ``(status, theta, row_multipliers, iterations)`` where the
    multipliers cover the ``len(b)`` input rows followed by the ``2d`` box rows.
    """
    m, d = A.shape
    eye = np.eye(d)
    G = np.vstack([A, eye, -eye])
    h = np.concatenate([b, np.full(d, box.upper), np.full(d, -box.lower)])
    # box rows give a dual-feasible start: upper face where c_j <= 0, lower otherwise
    basis0 = np.array([m + j if c[j] <= 0.0 else m + d + j for j in range(d)], dtype=np.int64)
    max_iter = 50 * (m + 2 * d) + 1000
    status, basis, y, theta, iters = kernels.dual_simplex(G, h, c, basis0, PIVOT_TOL, max_iter)
    if status == kernels.ITERATION_LIMIT:
        raise RuntimeError(f"simplex iteration limit reached (m={m}, d={d})")
    mult = np.zeros(m + 2 * d)
    if status == kernels.OPTIMAL:
        mult[basis] = y
    return status, theta, mult, iters


def solve_lp(H: ConstraintSet, c, box: BoundingBox = DEFAULT_BOX) -> LpOutcome:
    """Minimize ``c.theta`` over ``H`` intersected with ``box``.

    Rows are pivoted in id order (Bland's rule), so identical inputs give
    bit-identical outputs. The basis holds the rows of ``H`` with a strictly
    positive multiplier at the optimum.
    """
    c = np.asarray(c, dtype=float)
    if c.shape != (H.dim,):
        raise ValueError(f"objective has shape {c.shape}, expected ({H.dim},)")
    if not np.isfinite(c).all():
        raise ValueError("objective must be finite")
    order = sorted(range(len(H)), key=H.ids.__getitem__)
    Hs = H.take(order) if order != list(range(len(H))) else H
    status, theta, mult, iters = _solve_sorted(Hs.A, Hs.b, c, box)
    if status == kernels.INFEASIBLE:
        return LpOutcome(LpStatus.INFEASIBLE, iterations=iters)
    m = len(Hs)
    ytol = PIVOT_TOL * max(1.0, float(np.abs(mult).max(initial=0.0)))
    active = mult > ytol
    rows = np.flatnonzero(active)
    if rows.size == H.dim:
        # re-derive the vertex from id-ordered rows so an unchanged basis
        # always reproduces a bit-identical point
        G = np.vstack([Hs.A, np.eye(H.dim), -np.eye(H.dim)])[rows]
        h = np.concatenate([Hs.b, np.full(H.dim, box.upper), np.full(H.dim, -box.lower)])[rows]
        theta = np.linalg.solve(G, h)
    basis = Hs.take(rows[rows < m])
    theta = np.array(theta, dtype=float)
    return LpOutcome(
        LpStatus.OPTIMAL,
        point=theta,
        basis=basis,
        cost=float(c @ theta),
        box_active=bool(active[m:].any()),
        iterations=int(iters),
    )


def cost_of(H: ConstraintSet, c, box: BoundingBox = DEFAULT_BOX) -> float:
    """Optimal cost over ``H`` and ``box``; ``inf`` when infeasible."""
    out = solve_lp(H, c, box)
    return out.cost if out.optimal else math.inf


def is_feasible(point, H: ConstraintSet, tol: float = FEAS_TOL) -> bool:
    """Closed-halfspace membership with a relative tolerance per row."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    if len(H) == 0:
        return True
    point = np.asarray(point, dtype=float)
    lhs = H.A @ point
    scale = np.maximum(np.maximum(1.0, np.abs(H.b)), np.linalg.norm(H.A, axis=1) * np.linalg.norm(point))
    return bool(np.all(lhs <= H.b + tol * scale))


def merge(sets: Sequence[ConstraintSet]) -> ConstraintSet:
    """Union of constraint sets, deduplicated by id and sorted by id."""
    sets = [s for s in sets if s is not None]
    if not sets:
        raise ValueError("merge needs at least one set")
    dim = sets[0].dim
    rows: dict = {}
    for s in sets:
        if s.dim != dim:
            raise ValueError(f"dimension mismatch: {s.dim} != {dim}")
        for r, hid in enumerate(s.ids):
            if hid not in rows:
                rows[hid] = (s, r)
    if not rows:
        return ConstraintSet.empty(dim)
    keys = sorted(rows)
    A = np.empty((len(keys), dim))
    b = np.empty(len(keys))
    for i, hid in enumerate(keys):
        s, r = rows[hid]
        A[i] = s.A[r]
        b[i] = s.b[r]
    return ConstraintSet(A, b, keys, dim, check=False)
