"""Toom's rule on a two-dimensional torus.

Axis convention: ``grid[i, j]`` with ``i`` the east coordinate and ``j``
the north coordinate, so the eastern neighbour of ``(i, j)`` is
``(i+1, j)`` and the northern one is ``(i, j+1)``.  The new value of a cell
is the majority of itself, its northern and its eastern neighbour.

All functions accept a batch of grids, i.e. arrays whose last two axes are
the torus, so independent trials can be stepped together.
"""

from __future__ import annotations

import numpy as np


def toom_step(grid: np.ndarray) -> np.ndarray:
    g = np.asarray(grid, dtype=np.uint8)
    east = np.roll(g, -1, axis=-2)
    north = np.roll(g, -1, axis=-1)
    return ((g & east) | (g & north) | (east & north)).astype(np.uint8)


def triangle_island(m: int, n: int, corner=(0, 0)) -> np.ndarray:
    """All-zero ``m x m`` grid with ones on ``{x, y >= 0, x + y < n}`` shifted to ``corner``.

    The legs run east and north from the corner; under Toom's rule the
    island is eaten from its hypotenuse and disappears in exactly ``n``
    steps.
    """
    g = np.zeros((m, m), dtype=np.uint8)
    ci, cj = corner
    for x in range(n):
        for y in range(n - x):
            g[(ci + x) % m, (cj + y) % m] = 1
    return g


def erosion_time(grid: np.ndarray, limit: int = 10_000) -> int | None:
    """Number of noise-free steps until the grid is all zero (None if not within ``limit``)."""
    g = np.asarray(grid, dtype=np.uint8)
    for t in range(limit + 1):
        if not g.any():
            return t
        g = toom_step(g)
    return None


def toom_noisy_step(grids: np.ndarray, eps: float, rngs) -> tuple[np.ndarray, np.ndarray]:
    """One Toom step for a batch of grids followed by independent flips.

    On a binary alphabet the uniform-wrong adversary is the complement, so a
    fault flips the rule's value.  ``rngs`` holds one generator per grid.
    Returns the new batch and the boolean fault mask.
    """
    new = toom_step(grids)
    faults = np.empty(new.shape, dtype=bool)
    for k, rng in enumerate(rngs):
        faults[k] = rng.random(new.shape[1:]) < eps
    return new ^ faults.astype(np.uint8), faults
