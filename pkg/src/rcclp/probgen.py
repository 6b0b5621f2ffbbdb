"""Random uncertain-LP instances that are feasible by construction.

Nominal rows are standard Gaussian with right-hand side equal to the row's
Euclidean norm, so every nominal row is tangent to the unit ball and the
origin is feasible. The objective is standard Gaussian and shared.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np

from .lp_core import DEFAULT_BOX, BoundingBox
from .uncertainty import UncertainConstraintSet

FORMAT_TAG = "rcclp-instance 1"


@dataclass(frozen=True)
class InstanceSpec:
    n: int
    m: int
    d: int
    radius: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        if self.m < self.d:
            raise ValueError(f"m={self.m} must be >= d={self.d}")
        if self.radius < 0:
            raise ValueError("radius must be non-negative")


@dataclass(frozen=True, eq=False)
class Instance:
    c: np.ndarray
    sets: tuple
    box: BoundingBox = field(default=DEFAULT_BOX)

    @property
    def n(self) -> int:
        return len(self.sets)

    @property
    def d(self) -> int:
        return self.c.shape[0]

    def same_as(self, other: "Instance") -> bool:
        if self.n != other.n or self.box != other.box or not np.array_equal(self.c, other.c):
            return False
        return all(
            np.array_equal(a.nominal, b.nominal) and np.array_equal(a.radius, b.radius)
            and np.array_equal(a.rhs, b.rhs) and a.owner == b.owner
            for a, b in zip(self.sets, other.sets)
        )


def generate(spec: InstanceSpec, box: BoundingBox = DEFAULT_BOX) -> Instance:
    rng = np.random.default_rng(spec.seed)
    c = rng.standard_normal(spec.d)
    sets = []
    for i in range(spec.n):
        A0 = rng.standard_normal((spec.m, spec.d))
        b = np.linalg.norm(A0, axis=1)
        sets.append(UncertainConstraintSet(A0, np.full((spec.m, spec.d), float(spec.radius)), b, owner=i))
    return Instance(c, tuple(sets), box)


def feasibility_margin(instance: Instance, theta) -> float:
    """Smallest slack ``b - a.theta`` over every nominal row of every agent."""
    theta = np.asarray(theta, dtype=float)
    return float(min((s.rhs - s.nominal @ theta).min() for s in instance.sets))


# --------------------------------------------------------------------------
# text format
#
#   rcclp-instance 1
#   n <agents>
#   d <dimension>
#   box <lower> <upper>
#   c
#   <d numbers>
#   agent <owner> m <rows>
#   nominal            followed by m lines of d numbers
#   radius             followed by m lines of d numbers
#   rhs                followed by m lines of 1 number
#   ... one agent block per agent ...
#   end
# --------------------------------------------------------------------------


class InstanceFormatError(ValueError):
    pass


def _fmt(row) -> str:
    return " ".join(repr(float(x)) for x in np.atleast_1d(row))


def write_instance(instance: Instance, out: TextIO) -> None:
    out.write(f"{FORMAT_TAG}\n")
    out.write(f"n {instance.n}\nd {instance.d}\n")
    out.write(f"box {instance.box.lower!r} {instance.box.upper!r}\n")
    out.write(f"c\n{_fmt(instance.c)}\n")
    for s in instance.sets:
        out.write(f"agent {s.owner} m {s.m}\n")
        out.write("nominal\n")
        out.writelines(_fmt(row) + "\n" for row in s.nominal)
        out.write("radius\n")
        out.writelines(_fmt(row) + "\n" for row in s.radius)
        out.write("rhs\n")
        out.writelines(repr(float(x)) + "\n" for x in s.rhs)
    out.write("end\n")


def save_instance(instance: Instance, path) -> None:
    with open(path, "w") as fh:
        write_instance(instance, fh)


class _Lines:
    def __init__(self, text: str, source: str):
        self.lines = [ln.strip() for ln in text.splitlines()]
        self.pos = 0
        self.source = source

    def next(self) -> tuple[int, str]:
        while self.pos < len(self.lines):
            self.pos += 1
            line = self.lines[self.pos - 1]
            if line and not line.startswith("#"):
                return self.pos, line
        raise InstanceFormatError(f"{self.source}: unexpected end of file")

    def fail(self, lineno, msg):
        raise InstanceFormatError(f"{self.source}:{lineno}: {msg}")

    def keyword(self, word, nargs):
        lineno, line = self.next()
        parts = line.split()
        if parts[0] != word or len(parts) != nargs + 1:
            self.fail(lineno, f"expected '{word}' with {nargs} value(s), got {line!r}")
        return lineno, parts[1:]

    def numbers(self, count):
        lineno, line = self.next()
        try:
            vals = [float(x) for x in line.split()]
        except ValueError:
            self.fail(lineno, f"malformed number in {line!r}")
        if len(vals) != count:
            self.fail(lineno, f"expected {count} numbers, got {len(vals)}")
        return vals

    def integer(self, lineno, text, what):
        try:
            return int(text)
        except ValueError:
            self.fail(lineno, f"{what} must be an integer, got {text!r}")


def parse_instance(text: str, source: str = "<instance>") -> Instance:
    rd = _Lines(text, source)
    lineno, line = rd.next()
    if line != FORMAT_TAG:
        rd.fail(lineno, f"missing header {FORMAT_TAG!r}")
    ln, (nv,) = rd.keyword("n", 1)
    n = rd.integer(ln, nv, "n")
    ln, (dv,) = rd.keyword("d", 1)
    d = rd.integer(ln, dv, "d")
    ln, bv = rd.keyword("box", 2)
    try:
        box = BoundingBox(float(bv[0]), float(bv[1]))
    except ValueError as exc:
        rd.fail(ln, f"bad box: {exc}")
    rd.keyword("c", 0)
    c = np.array(rd.numbers(d))
    sets = []
    for _ in range(n):
        ln, parts = rd.keyword("agent", 3)
        if parts[1] != "m":
            rd.fail(ln, "expected 'agent <owner> m <rows>'")
        owner = rd.integer(ln, parts[0], "agent owner")
        m = rd.integer(ln, parts[2], "m")
        rd.keyword("nominal", 0)
        A0 = np.array([rd.numbers(d) for _ in range(m)]).reshape(m, d)
        rd.keyword("radius", 0)
        R = np.array([rd.numbers(d) for _ in range(m)]).reshape(m, d)
        rd.keyword("rhs", 0)
        b = np.array([rd.numbers(1)[0] for _ in range(m)])
        try:
            sets.append(UncertainConstraintSet(A0, R, b, owner=owner))
        except ValueError as exc:
            rd.fail(ln, f"agent {owner}: {exc}")
    rd.keyword("end", 0)
    return Instance(c, tuple(sets), box)


def load_instance(path) -> Instance:
    return parse_instance(Path(path).read_text(), str(path))
