"""Explicit Runge-Kutta schemes as Butcher tableaus.

A tableau holds the stage matrix ``a`` (strictly lower triangular for
explicit schemes), the weights ``h`` and the nodes ``c``. Built-ins cover
stages 1 through 4: forward Euler, the midpoint rule, Kutta's third-order
rule and the classic fourth-order scheme.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ButcherTableau", "euler", "midpoint", "kutta3", "rk4", "get_tableau"]


@dataclass(frozen=True)
class ButcherTableau:
    """Coefficients of an explicit Runge-Kutta scheme.

    a: stage matrix, shape [q, q], strictly lower triangular
    h: stage weights, shape [q], must sum to 1
    c: stage nodes, shape [q]; c[0] = 0 and row sums of a reproduce c
    name: label used in logs and checkpoints
    """

    a: np.ndarray
    h: np.ndarray
    c: np.ndarray
    name: str = field(default="custom")

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        h = np.asarray(self.h, dtype=np.float64)
        c = np.asarray(self.c, dtype=np.float64)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "c", c)
        q = h.shape[0]
        if a.shape != (q, q) or c.shape != (q,):
            raise ValueError(f"inconsistent tableau shapes: a{a.shape} h{h.shape} c{c.shape}")
        if np.any(np.triu(a) != 0.0):
            raise ValueError("tableau is not explicit: a has entries on or above the diagonal")
        if abs(h.sum() - 1.0) > 1e-12:
            raise ValueError(f"tableau weights sum to {h.sum()!r}, expected 1")
        if c[0] != 0.0:
            raise ValueError("first node must be 0 for an explicit scheme")
        if np.max(np.abs(a.sum(axis=1) - c)) > 1e-12:
            raise ValueError("row sums of a must equal the nodes c")

    @property
    def stage(self) -> int:
        return self.h.shape[0]

    def to_meta(self) -> dict:
        return {
            "name": self.name,
            "a": self.a.tolist(),
            "h": self.h.tolist(),
            "c": self.c.tolist(),
        }

    @classmethod
    def from_meta(cls, meta: dict) -> "ButcherTableau":
        return cls(
            a=np.asarray(meta["a"]),
            h=np.asarray(meta["h"]),
            c=np.asarray(meta["c"]),
            name=meta.get("name", "custom"),
        )


def euler() -> ButcherTableau:
    """Forward Euler, stage 1, order 1."""
    return ButcherTableau(a=np.zeros((1, 1)), h=np.array([1.0]), c=np.array([0.0]),
                          name="euler")


def midpoint() -> ButcherTableau:
    """Explicit midpoint rule, stage 2, order 2."""
    a = np.array([[0.0, 0.0], [0.5, 0.0]])
    return ButcherTableau(a=a, h=np.array([0.0, 1.0]), c=np.array([0.0, 0.5]),
                          name="midpoint")


def kutta3() -> ButcherTableau:
    """Kutta's third-order rule, stage 3."""
    a = np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [-1.0, 2.0, 0.0]])
    h = np.array([1.0, 4.0, 1.0]) / 6.0
    return ButcherTableau(a=a, h=h, c=np.array([0.0, 0.5, 1.0]), name="kutta3")


def rk4() -> ButcherTableau:
    """The classic fourth-order scheme, stage 4."""
    a = np.zeros((4, 4))
    a[1, 0] = 0.5
    a[2, 1] = 0.5
    a[3, 2] = 1.0
    h = np.array([1.0, 2.0, 2.0, 1.0]) / 6.0
    return ButcherTableau(a=a, h=h, c=np.array([0.0, 0.5, 0.5, 1.0]), name="rk4")


_BUILTIN = {1: euler, 2: midpoint, 3: kutta3, 4: rk4}


def get_tableau(stage: int) -> ButcherTableau:
    """Built-in tableau for a given stage count (1 to 4)."""
    try:
        return _BUILTIN[int(stage)]()
    except KeyError:
        raise ValueError(f"no built-in tableau with stage {stage}; use 1..4") from None
