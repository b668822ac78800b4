"""Transmit array geometry: movable rectangular sub-arrays inside disjoint frames.

The base station carries a grid of ``n_rf_h x n_rf_v`` uniform planar
sub-arrays, each with ``n_h x n_v`` antennas rigidly attached to a movable
center point. Frames tile the plane with pitch equal to the frame size, so
sub-arrays can never collide; the admissible region for each center is the
frame shrunk by the largest antenna offset per axis.

All positions are 2-D points in meters. Sub-arrays are indexed row-major as
(1,1), (1,2), ..., with the second index fastest; antennas within a
sub-array follow the same convention.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConfigurationError",
    "ArrayGeometry",
    "default_offsets",
    "frame_centers",
]


class ConfigurationError(ValueError):
    """Invalid scenario, geometry, or experiment configuration."""


def default_offsets(n_h, n_v, wavelength):
    """Half-wavelength antenna grid centered on the sub-array center.

    Returns an (n_h * n_v, 2) array of offsets in meters, row-major with the
    second antenna index fastest. Row 1 sits at the largest y offset, matching
    the usual top-left-first drawing of a planar array.
    """
    spacing = wavelength / 2.0
    xs = (np.arange(1, n_v + 1) - (n_v + 1) / 2.0) * spacing
    ys = ((n_h + 1) / 2.0 - np.arange(1, n_h + 1)) * spacing
    offsets = np.empty((n_h * n_v, 2))
    offsets[:, 0] = np.tile(xs, n_h)
    offsets[:, 1] = np.repeat(ys, n_v)
    return offsets


@dataclass(frozen=True)
class ArrayGeometry:
    """Immutable description of the sub-array grid.

    Attributes
    ----------
    n_rf_h, n_rf_v : int
        Sub-array counts along the two axes; each sub-array feeds one RF chain.
    n_h, n_v : int
        Antennas per sub-array along the two axes.
    wavelength : float
        Carrier wavelength in meters.
    delta : ndarray, shape (n_h * n_v, 2)
        Antenna offsets relative to the sub-array center, meters.
    frame_size : float
        Side length of the square frame confining each sub-array, meters.
    frame_origins : ndarray, shape (n_subarrays, 2)
        Lower-left corner of each frame, row-major sub-array order.
    region_bounds : ndarray, shape (n_subarrays, 2, 2)
        Per sub-array [[xmin, xmax], [ymin, ymax]] for the center point.
    """

    n_rf_h: int
    n_rf_v: int
    n_h: int
    n_v: int
    wavelength: float
    delta: np.ndarray
    frame_size: float
    frame_origins: np.ndarray
    region_bounds: np.ndarray

    @property
    def n_subarrays(self):
        return self.n_rf_h * self.n_rf_v

    @property
    def per_subarray(self):
        return self.n_h * self.n_v

    @property
    def n_antennas(self):
        return self.n_subarrays * self.per_subarray

    @property
    def frame_centers(self):
        return self.frame_origins + self.frame_size / 2.0

    def subarray_index(self, m, n):
        """Flat row-major index of sub-array (m, n), both 1-based."""
        return (m - 1) * self.n_rf_v + (n - 1)

    def region_contains(self, index, point):
        """Exact rectangle containment test for a candidate center."""
        lo = self.region_bounds[index, :, 0]
        hi = self.region_bounds[index, :, 1]
        return bool(np.all(point >= lo) and np.all(point <= hi))

    def validate_centers(self, centers):
        centers = np.asarray(centers, dtype=float)
        if centers.shape != (self.n_subarrays, 2):
            raise ConfigurationError(
                f"expected {self.n_subarrays} centers, got shape {centers.shape}"
            )
        for idx in range(self.n_subarrays):
            if not self.region_contains(idx, centers[idx]):
                raise ConfigurationError(
                    f"center {centers[idx]} outside region of sub-array {idx}"
                )
        return centers

    @classmethod
    def build(cls, n_rf_h, n_rf_v, n_h, n_v, wavelength, frame_size, delta=None):
        """Construct a geometry with frames tiled at pitch ``frame_size``.

        The assembly is centered on the origin. ``delta`` defaults to a
        half-wavelength grid; the frame must be large enough that the shrunk
        region is non-empty (a single point is allowed, which pins the
        sub-array and disables movement).
        """
        if min(n_rf_h, n_rf_v, n_h, n_v) < 1:
            raise ConfigurationError("array dimensions must be positive")
        if wavelength <= 0 or frame_size <= 0:
            raise ConfigurationError("wavelength and frame size must be positive")
        if delta is None:
            delta = default_offsets(n_h, n_v, wavelength)
        delta = np.asarray(delta, dtype=float)
        if delta.shape != (n_h * n_v, 2):
            raise ConfigurationError(
                f"delta must have shape ({n_h * n_v}, 2), got {delta.shape}"
            )
        margin = np.max(np.abs(delta), axis=0)
        if np.any(2.0 * margin > frame_size * (1 + 1e-12)):
            raise ConfigurationError(
                "antenna offsets exceed the frame: need frame_size >= 2*max|delta|"
            )

        n_sub = n_rf_h * n_rf_v
        origins = np.empty((n_sub, 2))
        x0 = -n_rf_h * frame_size / 2.0
        y0 = -n_rf_v * frame_size / 2.0
        for m in range(n_rf_h):
            for n in range(n_rf_v):
                origins[m * n_rf_v + n] = (x0 + m * frame_size, y0 + n * frame_size)

        bounds = np.empty((n_sub, 2, 2))
        bounds[:, 0, 0] = origins[:, 0] + margin[0]
        bounds[:, 0, 1] = origins[:, 0] + frame_size - margin[0]
        bounds[:, 1, 0] = origins[:, 1] + margin[1]
        bounds[:, 1, 1] = origins[:, 1] + frame_size - margin[1]
        # Guard against sign flips from roundoff when the region degenerates.
        bounds[:, :, 1] = np.maximum(bounds[:, :, 1], bounds[:, :, 0])

        return cls(
            n_rf_h=n_rf_h,
            n_rf_v=n_rf_v,
            n_h=n_h,
            n_v=n_v,
            wavelength=float(wavelength),
            delta=delta,
            frame_size=float(frame_size),
            frame_origins=origins,
            region_bounds=bounds,
        )


def frame_centers(geometry):
    """Initial (and FPA) sub-array centers: the frame midpoints."""
    return geometry.frame_centers.copy()
