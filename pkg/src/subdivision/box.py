"""
Axis-aligned boxes and their faces.
"""

import itertools
from dataclasses import dataclass
from typing import List

import numpy as np


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box [lower_1, upper_1] x ... x [lower_n, upper_n]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError(f"Box bounds must be matching vectors, got {lower.shape} and {upper.shape}")
        if np.any(lower >= upper):
            raise ValueError(f"Box needs lower < upper in every coordinate, got {lower} and {upper}")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @classmethod
    def unit(cls, n: int) -> 'Box':
        """The unit cube [0,1]^n."""
        return cls(np.zeros(n), np.ones(n))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def centroid(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, point, tol: float = 0.0) -> bool:
        point = np.asarray(point, dtype=float)
        return bool(np.all(point >= self.lower - tol) and np.all(point <= self.upper + tol))

    def corners(self) -> np.ndarray:
        """All 2^n corners, one per row."""
        return np.array(list(itertools.product(*zip(self.lower, self.upper))))

    def face_grid(self, axis: int, upper_side: bool, points_per_axis: int) -> np.ndarray:
        """
        Uniform sample of one face of the box.

        Args:
            axis: Coordinate held fixed on the face
            upper_side: True for the face x_axis = upper, False for x_axis = lower
            points_per_axis: Grid resolution along every free coordinate

        Returns:
            Array of shape (points_per_axis^(n-1), n)
        """
        axes = []
        for j in range(self.dim):
            if j == axis:
                axes.append(np.array([self.upper[j] if upper_side else self.lower[j]]))
            else:
                axes.append(np.linspace(self.lower[j], self.upper[j], points_per_axis))
        mesh = np.meshgrid(*axes, indexing='ij')
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def subdivide(self) -> List['Box']:
        """Split every coordinate through the centroid into 2^n sub-boxes.

        Sub-boxes are ordered like itertools.product over (lower half, upper half)
        per coordinate, first coordinate slowest.
        """
        mid = self.centroid
        halves = [((self.lower[j], mid[j]), (mid[j], self.upper[j])) for j in range(self.dim)]
        boxes = []
        for choice in itertools.product(*halves):
            boxes.append(Box([lo for lo, _ in choice], [hi for _, hi in choice]))
        return boxes

    def to_dict(self) -> dict:
        return {'lower': self.lower.tolist(), 'upper': self.upper.tolist()}

    def __repr__(self) -> str:
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"
