"""
Face-sign certification and centroid-subdivision refinement.

Maps handed to this module are vectorized: they take an (m, n) array of
points and return an (m, n) array of values. NaN values mark points outside
the map's domain and are skipped by the face checks.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Tuple

import numpy as np

from src.subdivision.box import Box

logger = logging.getLogger(__name__)

SIGN_TOLERANCE = 1e-12
DEFAULT_GRID = 9

VectorMap = Callable[[np.ndarray], np.ndarray]


class SubdivisionError(Exception):
    """Base exception for the subdivision engine."""
    pass


class NotCertified(SubdivisionError):
    """The starting box does not pass the face-sign check."""
    pass


class LostTrack(SubdivisionError):
    """No sub-box certifies and the residual fallback is disabled."""
    pass


class EpsOutOfRange(SubdivisionError):
    """Volume threshold outside (0, 1)."""
    pass


@dataclass(frozen=True)
class FaceCertificate:
    """Sampled face-sign verdicts for every coordinate of a box.

    verdicts[i] is (lower face passes, upper face passes) under the recorded
    orientation: +1 means f_i <= 0 on the lower face and >= 0 on the upper
    face, -1 the reverse, 0 neither. The certificate is heuristic because
    faces are sampled on a grid, not covered.
    """

    verdicts: List[Tuple[bool, bool]]
    orientation: List[int]
    grid_points_per_axis: int
    certified: bool
    heuristic: bool = True


@dataclass(frozen=True, eq=False)
class RefinementResult:
    box: Box
    iterations: int
    uncertified_steps: int = 0
    step_log: List[dict] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.uncertified_steps == 0


def evaluate(f: VectorMap, points: np.ndarray) -> np.ndarray:
    values = np.asarray(f(np.atleast_2d(points)), dtype=float)
    return values.reshape(len(points), -1)


def _face_signs(values: np.ndarray) -> Tuple[bool, bool, bool]:
    """(has finite samples, all <= tol, all >= -tol) over the finite samples."""
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return False, False, False
    return True, bool(np.all(finite <= SIGN_TOLERANCE)), bool(np.all(finite >= -SIGN_TOLERANCE))


def check_faces(f: VectorMap, box: Box, grid_points_per_axis: int = DEFAULT_GRID) -> FaceCertificate:
    """
    Sample the Poincare-Miranda face conditions of a map on a box.

    Coordinate i passes when f_i <= 1e-12 on one of its two faces and
    f_i >= -1e-12 on the opposite face; which face carries which sign is
    recorded per coordinate.

    Args:
        f: Vectorized map (m, n) -> (m, n)
        box: Box to check
        grid_points_per_axis: Samples per free coordinate on each face (>= 2)

    Returns:
        FaceCertificate
    """
    if grid_points_per_axis < 2:
        raise ValueError(f"Grid needs at least 2 points per axis, got {grid_points_per_axis}")

    verdicts = []
    orientation = []
    for i in range(box.dim):
        lower_values = evaluate(f, box.face_grid(i, False, grid_points_per_axis))[:, i]
        upper_values = evaluate(f, box.face_grid(i, True, grid_points_per_axis))[:, i]
        lower_ok, lower_nonpos, lower_nonneg = _face_signs(lower_values)
        upper_ok, upper_nonpos, upper_nonneg = _face_signs(upper_values)

        standard = (lower_ok and lower_nonpos, upper_ok and upper_nonneg)
        flipped = (lower_ok and lower_nonneg, upper_ok and upper_nonpos)
        if all(standard):
            verdicts.append(standard)
            orientation.append(1)
        elif all(flipped):
            verdicts.append(flipped)
            orientation.append(-1)
        else:
            verdicts.append(standard)
            orientation.append(0)

    certified = all(o != 0 for o in orientation)
    return FaceCertificate(
        verdicts=verdicts,
        orientation=orientation,
        grid_points_per_axis=grid_points_per_axis,
        certified=certified,
    )


def centroid_residual(f: VectorMap, box: Box) -> float:
    """Infinity norm of f at the box centroid (inf when undefined there)."""
    values = evaluate(f, box.centroid[np.newaxis, :])[0]
    if not np.all(np.isfinite(values)):
        return math.inf
    return float(np.max(np.abs(values)))


def iterations_needed(eps: float, n: int) -> int:
    """
    Number of centroid subdivisions that bring the unit cube below a volume.

    Args:
        eps: Volume threshold, 0 < eps < 1
        n: Dimension (>= 1)

    Returns:
        ceil(ln(eps) / (n ln(0.5)))

    Raises:
        EpsOutOfRange: If eps is not in (0, 1)
    """
    if not 0.0 < eps < 1.0:
        raise EpsOutOfRange(f"eps must lie in (0, 1), got {eps}")
    if n < 1:
        raise ValueError(f"Dimension must be >= 1, got {n}")
    # log2 is exact on powers of two, so 2^-12 in 4 dimensions gives 3, not 4
    return int(math.ceil(-math.log2(eps) / n))


def refine(f: VectorMap, box0: Box, eps_volume: float,
           grid_points_per_axis: int = DEFAULT_GRID, fallback: bool = True) -> RefinementResult:
    """
    Shrink a certified box around a zero by repeated centroid subdivision.

    At each step every coordinate is halved, giving 2^n sub-boxes, and
    the one whose faces certify becomes active. When several certify, or
    none does and `fallback` is set, the sub-box with the smallest centroid
    residual is chosen (first in subdivision order on ties) and the step is
    counted as uncertified. Refinement stops once the volume is <= eps_volume.

    Args:
        f: Vectorized map (m, n) -> (m, n)
        box0: Starting box; must certify
        eps_volume: Volume threshold (> 0)
        grid_points_per_axis: Face sampling resolution
        fallback: Allow residual-based selection when no sub-box certifies

    Returns:
        RefinementResult with the final active box

    Raises:
        NotCertified: If box0 fails the face check
        LostTrack: If no sub-box certifies and fallback is False
        EpsOutOfRange: If eps_volume <= 0
    """
    if eps_volume <= 0:
        raise EpsOutOfRange(f"eps must be positive, got {eps_volume}")

    initial = check_faces(f, box0, grid_points_per_axis)
    if not initial.certified:
        failing = [i for i, o in enumerate(initial.orientation) if o == 0]
        raise NotCertified(f"Starting box {box0} fails the face check on coordinates {failing}")

    box = box0
    iterations = 0
    uncertified = 0
    step_log = []
    while box.volume > eps_volume:
        candidates = box.subdivide()
        certified = [k for k, sub in enumerate(candidates)
                     if check_faces(f, sub, grid_points_per_axis).certified]

        if len(certified) == 1:
            chosen = certified[0]
            reason = 'certified'
        else:
            pool = certified
            reason = 'ambiguous'
            if not certified:
                if not fallback:
                    raise LostTrack(f"No sub-box of {box} certifies at step {iterations + 1}")
                pool = list(range(len(candidates)))
                reason = 'residual'
            residuals = [centroid_residual(f, candidates[k]) for k in pool]
            chosen = pool[int(np.argmin(residuals))]
            uncertified += 1
            logger.warning(
                f"Step {iterations + 1}: {len(certified)} certified sub-boxes, "
                f"picked #{chosen} by centroid residual"
            )

        box = candidates[chosen]
        iterations += 1
        step_log.append({'step': iterations, 'chosen': chosen, 'reason': reason,
                         'certified_count': len(certified)})
        logger.debug(f"Step {iterations}: active box {box} (volume {box.volume:.3e})")

    logger.info(f"Refinement finished after {iterations} steps, volume {box.volume:.3e}, "
                f"{uncertified} uncertified steps")
    return RefinementResult(box=box, iterations=iterations, uncertified_steps=uncertified,
                            step_log=step_log)
