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
"""Configuration of the detection pipeline."""

import dataclasses
import enum
from typing import Any, Optional

from cwh_disagg.common import utils
from cwh_disagg.detection import kde as kde_lib
from cwh_disagg.timeseries import load_curve
import dataclasses_json
import pandas as pd


class ClusterBound(str, enum.Enum):
  """Which density valley bounds the device cluster from below."""
  # Lowest valley of the whole density of aligned spike powers.
  LOWEST_MINIMUM = 'lowest_minimum'
  # Lowest valley below the highest density peak inside the expected range.
  # Keeps the device cluster when a few aligned spikes lie above it.
  BELOW_MODE = 'below_mode'


@dataclasses.dataclass(frozen=True)
class KdeConfig(dataclasses_json.DataClassJsonMixin):
  """Grid used to evaluate every density estimate."""

  # Number of evenly spaced evaluation points, at least 64.
  grid_points: int = kde_lib.DEFAULT_GRID_POINTS

  # Padding of the grid beyond the sample range, in bandwidths.
  pad_bandwidths: float = kde_lib.DEFAULT_PAD_BANDWIDTHS


@dataclasses.dataclass(frozen=True)
class DetectionConfig(dataclasses_json.DataClassJsonMixin):
  """Parameters of the two-step detector, with the built-in defaults."""

  # Length of the observations thresholded independently, in days.
  window_days: float = 7.0

  kde: KdeConfig = dataclasses.field(default_factory=KdeConfig)

  # Observations with fewer present values are skipped.
  min_present_values: int = 48

  # Power range in kW in which the device cluster must form.
  expected_low_kw: float = 0.8
  expected_high_kw: float = 5.0

  # Minimum number of aligned spikes in the cluster. When unset, one spike
  # per `days_per_detection` days of data is required, and never fewer than
  # `min_support_floor`.
  min_support: Optional[int] = None
  days_per_detection: int = 6
  min_support_floor: int = 3

  # Ranking of density valleys when bounding the cluster: 'density' picks the
  # deepest valley, 'abscissa' the leftmost one.
  minimum_strategy: str = kde_lib.MinimumStrategy.DENSITY.value

  # Valley bounding the cluster from below, see ClusterBound.
  cluster_bound: str = ClusterBound.LOWEST_MINIMUM.value

  # Valleys whose density exceeds this fraction of the lower of their two
  # flanking density maxima are ignored by both steps. None keeps every valley.
  valley_depth_ratio: Optional[float] = 0.5

  # Spikes whose start is at most this many minutes away from an off-peak
  # start count as aligned.
  alignment_tolerance_min: float = 0.0

  # Eligibility gate applied by batch processing.
  min_samples_per_month: int = load_curve.MIN_SAMPLES_PER_MONTH

  def __post_init__(self):
    if not 0 < self.expected_low_kw < self.expected_high_kw:
      raise ValueError(
          'Expected range must satisfy 0 < low < high, got '
          f'{self.expected_low_kw}:{self.expected_high_kw}')
    if self.window_days <= 0:
      raise ValueError(f'window_days must be > 0, got {self.window_days}')
    if self.alignment_tolerance_min < 0:
      raise ValueError('alignment_tolerance_min must be >= 0')
    if self.valley_depth_ratio is not None and not (
        0 < self.valley_depth_ratio <= 1):
      raise ValueError('valley_depth_ratio must be in (0, 1]')
    kde_lib.MinimumStrategy(self.minimum_strategy)
    ClusterBound(self.cluster_bound)

  @property
  def expected_range(self) -> tuple[float, float]:
    return (self.expected_low_kw, self.expected_high_kw)

  def min_support_for(self, duration: pd.Timedelta) -> int:
    """Cluster support required for a curve spanning `duration`."""
    if self.min_support is not None:
      return self.min_support
    days = int(duration / pd.Timedelta(days=1))
    return max(self.min_support_floor, days // self.days_per_detection)


def parse_expected_range(text: str) -> tuple[float, float]:
  """Parses 'LOW:HIGH' in kW."""
  try:
    low, high = (float(v) for v in text.split(':'))
  except ValueError as e:
    raise ValueError(f'Expected LOW:HIGH in kW, got {text!r}') from e
  return low, high


def resolve(
    base: DetectionConfig,
    *overrides: dict[str, Any],
) -> DetectionConfig:
  """Applies override mappings in order, later ones winning.

  Nested KdeConfig fields are given as a nested mapping; None values leave the
  field unchanged.

  Args:
    base: Configuration to start from.
    *overrides: Field overrides, lowest precedence first.

  Returns:
    The resolved, validated configuration.
  """
  config = base
  for o in overrides:
    if o:
      config = utils.update_dataclass(config, o)
  return config
