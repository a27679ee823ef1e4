"""Constellation construction, random symbol frames, and symbol moments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import SUPPORTED_CONSTELLATIONS, ScenarioConfig


@dataclass(frozen=True)
class Constellation:
    """Unit-average-power symbol alphabet with zero first and second moments."""

    label: str
    points: np.ndarray = field(repr=False)

    @property
    def order(self) -> int:
        return len(self.points)


def make_constellation(label: str) -> Constellation:
    """Build QPSK or a square QAM grid normalized to unit average power."""
    if label not in SUPPORTED_CONSTELLATIONS:
        raise ValueError(
            f"unsupported constellation {label!r}; choose one of "
            f"{', '.join(SUPPORTED_CONSTELLATIONS)}"
        )
    order = 4 if label == "QPSK" else int(label.removesuffix("QAM"))
    side = int(round(math.sqrt(order)))
    levels = np.arange(side) * 2.0 - (side - 1)
    re, im = np.meshgrid(levels, levels, indexing="ij")
    points = (re + 1j * im).ravel()
    points = points / np.sqrt(np.mean(np.abs(points) ** 2))
    return Constellation(label=label, points=points)


def mu4(c: Constellation) -> float:
    """Fourth moment E{|s|^4} of the alphabet (1 for constant-modulus)."""
    return float(np.mean(np.abs(c.points) ** 4))


def gen_frame(cfg: ScenarioConfig, c: Constellation, rng: np.random.Generator) -> np.ndarray:
    """Draw an N x M frame of i.i.d. uniform symbols (rows = subcarriers)."""
    idx = rng.integers(0, c.order, size=(cfg.N, cfg.M))
    return c.points[idx]


def frame_to_csv(S: np.ndarray, path) -> None:
    """Dump a frame for debugging: row = subcarrier, column = symbol, complex as re+imj."""
    with open(path, "w") as fh:
        for row in S:
            fh.write(",".join(format(z, "") for z in row) + "\n")
