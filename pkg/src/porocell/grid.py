"""Square periodic grid on the unit cell Y = (0,1)^2.

Scalar node fields are (n, n) arrays indexed [i, j] for the node at
(i*h, j*h); index n wraps to index 0, so storage holds one period.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform n-by-n node grid with spacing h = 1/n tiling the unit cell."""

    n: int

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"grid needs n >= 4, got {self.n}")

    @property
    def n_x(self) -> int:
        return self.n

    @property
    def n_y(self) -> int:
        return self.n

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def d(self) -> int:
        return 2

    def axis_coords(self) -> np.ndarray:
        """Node coordinates along one axis: 0, h, ..., (n-1)h."""
        return np.arange(self.n) * self.h

    def node_mesh(self):
        """Node coordinate arrays X, Y of shape (n, n), indexed [i, j]."""
        c = self.axis_coords()
        return np.meshgrid(c, c, indexing="ij")
