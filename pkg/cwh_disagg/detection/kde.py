# coding=utf-8
# Copyright 2026 The cwh_disagg Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""One-dimensional Gaussian kernel density estimation and valley search.

Both thresholding steps of the detector use the same recipe: a Gaussian KDE
with Scott's rule bandwidth evaluated on an even grid, whose valleys separate
power populations.
"""

import dataclasses
import enum
from typing import Optional, Sequence

from cwh_disagg.timeseries import load_curve
import numpy as np
from scipy import integrate
from scipy import signal
from scipy import stats

EmptyInputError = load_curve.EmptyInputError

DEFAULT_GRID_POINTS = 512
MIN_GRID_POINTS = 64
# Grid padding on each side of the sample range, in bandwidths.
DEFAULT_PAD_BANDWIDTHS = 4.0


class DegenerateSampleError(ValueError):
  """Raised when a bandwidth cannot be estimated from the samples."""


class MinimumStrategy(str, enum.Enum):
  """How `lowest_local_minimum` ranks valleys."""
  # Valley with the smallest density value.
  DENSITY = 'density'
  # Valley with the smallest abscissa.
  ABSCISSA = 'abscissa'


@dataclasses.dataclass(frozen=True, eq=False)
class DensityEstimate:
  """Gaussian KDE evaluated on an even grid.

  Attributes:
    samples: Samples the estimate was built from (kW).
    bandwidth: Kernel standard deviation (kW).
    grid: Evenly spaced evaluation points (kW).
    density: Density at each grid point.
  """
  samples: np.ndarray
  bandwidth: float
  grid: np.ndarray
  density: np.ndarray

  def integral(self) -> float:
    return float(integrate.trapezoid(self.density, self.grid))

  def argmax(self, low: float = -np.inf, high: float = np.inf) -> Optional[int]:
    """Grid index of the highest density within [low, high], if any."""
    inside = np.flatnonzero((self.grid >= low) & (self.grid <= high))
    if not inside.size:
      return None
    return int(inside[np.argmax(self.density[inside])])


def scott_bandwidth(samples: Sequence[float] | np.ndarray) -> float:
  """Scott's rule for one dimension: sample std times n^(-1/5).

  Args:
    samples: Sample values.

  Returns:
    The bandwidth.

  Raises:
    DegenerateSampleError: with fewer than 2 samples or zero variance.
  """
  samples = np.asarray(samples, dtype=np.float64)
  if samples.size < 2:
    raise DegenerateSampleError(
        f'Need at least 2 samples for a bandwidth, got {samples.size}')
  sigma = float(np.std(samples, ddof=1))
  # Rounding noise around a single value is no spread either.
  scale = max(1.0, float(np.abs(samples).max()))
  if np.ptp(samples) == 0 or not sigma > 1e-12 * scale:
    raise DegenerateSampleError('Samples have zero variance')
  return sigma * samples.size**(-1 / 5)


def evaluate_density(
    samples: Sequence[float] | np.ndarray,
    bandwidth: float,
    grid_points: int = DEFAULT_GRID_POINTS,
    pad_bandwidths: float = DEFAULT_PAD_BANDWIDTHS,
) -> DensityEstimate:
  """Evaluates a Gaussian KDE on [min - pad*h, max + pad*h].

  Args:
    samples: Sample values.
    bandwidth: Kernel standard deviation, > 0.
    grid_points: Number of evaluation points, >= 64.
    pad_bandwidths: Grid padding beyond the sample range, in bandwidths.

  Returns:
    The density estimate.

  Raises:
    EmptyInputError: if there are no samples.
  """
  samples = np.asarray(samples, dtype=np.float64)
  if not samples.size:
    raise EmptyInputError('Cannot estimate a density without samples')
  if not bandwidth > 0:
    raise ValueError(f'Bandwidth must be > 0, got {bandwidth}')
  if grid_points < MIN_GRID_POINTS:
    raise ValueError(
        f'Need at least {MIN_GRID_POINTS} grid points, got {grid_points}')
  pad = pad_bandwidths * bandwidth
  grid = np.linspace(samples.min() - pad, samples.max() + pad, grid_points)
  kernels = stats.norm.pdf((grid[:, np.newaxis] - samples) / bandwidth)
  density = kernels.mean(axis=1) / bandwidth
  return DensityEstimate(samples, float(bandwidth), grid, density)


def local_minima(
    est: DensityEstimate,
    max_depth_ratio: Optional[float] = None,
) -> tuple[np.ndarray, np.ndarray]:
  """All interior valleys of the density.

  A valley is a grid point, or a flat run of grid points, strictly lower than
  its neighbours on both sides. Flat runs are collapsed to their midpoint.

  Args:
    est: Density estimate.
    max_depth_ratio: When set, only valleys whose density is at most this
      fraction of the lower of the two maxima flanking them are kept.

  Returns:
    (abscissas, densities) of the valleys, by increasing abscissa.
  """
  valleys, props = signal.find_peaks(-est.density, plateau_size=1)
  if max_depth_ratio is not None and valleys.size:
    prominences = signal.peak_prominences(-est.density, valleys)[0]
    flank = est.density[valleys] + prominences
    keep = est.density[valleys] <= max_depth_ratio * flank
    valleys = valleys[keep]
    props = {k: v[keep] for k, v in props.items()}
  left = props['left_edges']
  right = props['right_edges']
  abscissas = (est.grid[left] + est.grid[right]) / 2
  return abscissas, est.density[valleys]


def first_local_minimum(
    est: DensityEstimate,
    max_depth_ratio: Optional[float] = None,
) -> Optional[float]:
  """Abscissa of the leftmost valley, or None for a unimodal density."""
  abscissas, _ = local_minima(est, max_depth_ratio)
  if not abscissas.size:
    return None
  return float(abscissas[0])


def lowest_local_minimum(
    est: DensityEstimate,
    strategy: MinimumStrategy | str = MinimumStrategy.DENSITY,
    below: Optional[float] = None,
    max_depth_ratio: Optional[float] = None,
) -> Optional[float]:
  """Abscissa of the lowest valley, or None for a unimodal density.

  Args:
    est: Density estimate.
    strategy: Rank valleys by density value (deepest valley) or by abscissa.
    below: Only consider valleys strictly below this abscissa.
    max_depth_ratio: Shallowness filter, see `local_minima`.

  Returns:
    The selected valley abscissa, if any.
  """
  abscissas, densities = local_minima(est, max_depth_ratio)
  if below is not None:
    keep = abscissas < below
    abscissas, densities = abscissas[keep], densities[keep]
  if not abscissas.size:
    return None
  if MinimumStrategy(strategy) == MinimumStrategy.ABSCISSA:
    return float(abscissas[0])
  # np.argmin returns the first of equal minima, i.e. the leftmost valley.
  return float(abscissas[np.argmin(densities)])
