"""Analytic toy objectives with known structure.

The three indicator functions are cheap stand-ins for a trained network's
"did it reach the goal" outcome: the first has two symmetric inputs under
different sampling laws, the second hides two inputs whose joint value
matters while neither matters alone, the third makes one input relevant
only on part of the domain, mimicking a conditional hyperparameter.
Interval boundaries are closed so ties land inside; that is measure-zero
but keeps tests deterministic.
"""

from __future__ import annotations

import numpy as np

from ..harness import STATUS_OK, Trial
from ..space import SearchSpace, SpaceError, continuous_param, integer_param

__all__ = [
    "example1",
    "example2",
    "example3",
    "runge",
    "branin",
    "Example1Objective",
    "Example2Objective",
    "Example3Objective",
    "QuadraticObjective",
    "BraninObjective",
    "ThreeTermObjective",
]


def _check_box(name, value, lo, hi):
    if not (lo <= value <= hi):
        raise SpaceError(f"{name}={value!r} outside [{lo}, {hi}]")


def example1(x1: float, x2: float) -> int:
    """1 iff both inputs fall in [0, 1]; domain [0, 2]^2."""
    _check_box("x1", x1, 0, 2)
    _check_box("x2", x2, 0, 2)
    return int(x1 <= 1 and x2 <= 1)


def example2(x1, x2, x3, x4=0.0, x5=0.0) -> int:
    """Two goal cells whose membership depends on (x2, x3) jointly.

    x4 and x5 are accepted and ignored; they act as dummy variables.
    """
    for name, v in (("x1", x1), ("x2", x2), ("x3", x3), ("x4", x4), ("x5", x5)):
        _check_box(name, v, 0, 2)
    if x1 <= 1 and 1 <= x2 <= 2 and x3 <= 1:
        return 1
    if x1 <= 1 and x2 <= 1 and 1 <= x3 <= 2:
        return 1
    return 0


def example3(x1, x2, x3, t: float, rng: np.random.Generator) -> int:
    """Coin flip on x2 <= t, x3-gated success on x2 >= t, else 0.

    x3 only matters on the x2 >= t slice; t controls how much of the sample
    actually exercises it.  The x2 <= t branch wins ties at x2 == t.
    """
    for name, v in (("x1", x1), ("x2", x2), ("x3", x3)):
        _check_box(name, v, 0, 2)
    _check_box("t", t, 0, 2)
    if x1 <= 1 and x2 <= t:
        return int(rng.random() < 0.5)
    if x1 <= 1 and x2 >= t and x3 <= 1:
        return 1
    return 0


def runge(x):
    """r(x) = 1 / (1 + 15 x^2), the classic hard-to-interpolate bump."""
    x = np.asarray(x, dtype=float)
    out = 1.0 / (1.0 + 15.0 * x * x)
    return float(out) if out.ndim == 0 else out


def branin(a: float, b: float) -> float:
    """Branin-Hoo on the unit square (inputs rescaled internally)."""
    x = 15.0 * a - 5.0
    y = 15.0 * b
    return float(
        (y - 5.1 * x * x / (4 * np.pi**2) + 5.0 * x / np.pi - 6.0) ** 2
        + 10.0 * (1.0 - 1.0 / (8 * np.pi)) * np.cos(x)
        + 10.0
    )


def _unit_box_space(names, lo=0.0, hi=2.0) -> SearchSpace:
    return SearchSpace(tuple(continuous_param(n, lo, hi) for n in names))


class Example1Objective:
    """Error = 1 - example1(x1, x2)."""

    name = "example1"

    def __init__(self):
        self.space = _unit_box_space(("x1", "x2"))

    def evaluate(self, config: dict, seed: int) -> Trial:
        f = example1(config["x1"], config["x2"])
        return Trial(dict(config), 1.0 - f, STATUS_OK, int(seed))


class Example2Objective:
    """Error = 1 - example2(x1..x5); x4, x5 are dummies."""

    name = "example2"

    def __init__(self):
        self.space = _unit_box_space(("x1", "x2", "x3", "x4", "x5"))

    def evaluate(self, config: dict, seed: int) -> Trial:
        f = example2(*(config[k] for k in ("x1", "x2", "x3", "x4", "x5")))
        return Trial(dict(config), 1.0 - f, STATUS_OK, int(seed))


class Example3Objective:
    """Error = 1 - example3(x1, x2, x3); the coin flip is seeded per trial."""

    name = "example3"

    def __init__(self, t: float = 1.0):
        self.t = float(t)
        self.space = _unit_box_space(("x1", "x2", "x3"))

    def evaluate(self, config: dict, seed: int) -> Trial:
        rng = np.random.default_rng(int(seed))
        f = example3(config["x1"], config["x2"], config["x3"], self.t, rng)
        return Trial(dict(config), 1.0 - f, STATUS_OK, int(seed))


class QuadraticObjective:
    """Error = (x - 0.3)^2 on [0, 1]; argmin known exactly."""

    name = "quadratic1d"

    def __init__(self):
        self.space = SearchSpace((continuous_param("x", 0.0, 1.0),))

    def evaluate(self, config: dict, seed: int) -> Trial:
        return Trial(dict(config), (config["x"] - 0.3) ** 2, STATUS_OK, int(seed))


class BraninObjective:
    name = "branin"

    def __init__(self):
        self.space = SearchSpace(
            (continuous_param("a", 0.0, 1.0), continuous_param("b", 0.0, 1.0))
        )

    def evaluate(self, config: dict, seed: int) -> Trial:
        return Trial(dict(config), branin(config["a"], config["b"]), STATUS_OK, int(seed))


class ThreeTermObjective:
    """One dominant input, one mild input, one integer cost knob.

    error = (x1 - 0.7)^2 + 0.01 (x2 - 0.2)^2 + 0.001 (x3 - 1) / 9.
    x3 only nudges the error, so a sensible pipeline should fix it low for
    speed and spend its budget on x1, then x2.
    """

    name = "three_term"

    def __init__(self):
        self.space = SearchSpace(
            (
                continuous_param("x1", 0.0, 1.0),
                continuous_param("x2", 0.0, 1.0),
                integer_param("x3", 1, 10),
            )
        )

    def evaluate(self, config: dict, seed: int) -> Trial:
        err = (
            (config["x1"] - 0.7) ** 2
            + 0.01 * (config["x2"] - 0.2) ** 2
            + 0.001 * (config["x3"] - 1) / 9.0
        )
        return Trial(dict(config), err, STATUS_OK, int(seed))
