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
"""Water heater detection from off-peak aligned spikes.

A cumulative water heater switches on when off-peak hours begin, so its spikes
start exactly at an off-peak start and share one power level. Aligned spikes
are pooled over the whole curve; a cluster of their peak powers inside the
expected device range marks a detection, and every aligned spike in the
cluster band is attributed to the device.
"""

import dataclasses
from typing import Optional, Sequence

from absl import logging
from cwh_disagg.common import utils
from cwh_disagg.detection import config as config_lib
from cwh_disagg.detection import detector
from cwh_disagg.detection import kde
from cwh_disagg.timeseries import load_curve
from cwh_disagg.timeseries import schedule as schedule_lib
import numpy as np
from scipy import signal


@dataclasses.dataclass(frozen=True)
class PowerCluster(utils.NPDataClassJsonMixin):
  """Power band of the detected device.

  Attributes:
    low_kw: Lower edge of the band.
    high_kw: Upper edge of the band.
    mode_kw: Density peak of aligned spike powers inside the band.
    support: Number of aligned spikes inside the band.
  """
  low_kw: float
  high_kw: float
  mode_kw: float
  support: int

  def contains(self, power_kw: float) -> bool:
    return self.low_kw <= power_kw <= self.high_kw


@dataclasses.dataclass(frozen=True)
class DetectionResult(utils.NPDataClassJsonMixin):
  """Outcome of detection for one household."""
  household_id: str
  found: bool
  cluster: Optional[PowerCluster] = None
  cwh_spikes: list[detector.Spike] = dataclasses.field(default_factory=list)
  other_spikes: list[detector.Spike] = dataclasses.field(default_factory=list)
  thresholds: list[detector.ObservationThreshold] = dataclasses.field(
      default_factory=list)
  # Sampling step of the analysed curve, in minutes.
  step_min: float = 30.0
  config: Optional[config_lib.DetectionConfig] = None


def is_aligned(spike: detector.Spike, tolerance_min: float = 0.0) -> bool:
  return abs(spike.offset_min) <= tolerance_min


def filter_aligned(
    spikes: Sequence[detector.Spike],
    tolerance_min: float = 0.0,
) -> list[detector.Spike]:
  """Spikes starting at an off-peak start, within `tolerance_min`."""
  return [s for s in spikes if is_aligned(s, tolerance_min)]


def find_power_cluster(
    aligned: Sequence[detector.Spike],
    expected: tuple[float, float] = (0.8, 5.0),
    min_support: int = 3,
    kde_config: config_lib.KdeConfig = config_lib.KdeConfig(),
    strategy: kde.MinimumStrategy | str = kde.MinimumStrategy.DENSITY,
    max_depth_ratio: Optional[float] = 0.5,
    bound: config_lib.ClusterBound | str = (
        config_lib.ClusterBound.LOWEST_MINIMUM),
) -> Optional[PowerCluster]:
  """Finds the cluster of aligned spike powers inside the expected range.

  The band runs from the lowest density valley, or the low edge of the
  expected range if higher, to the high edge of the range. The mode is the
  density maximum inside the band and must lie strictly inside it.

  With `ClusterBound.BELOW_MODE` the mode is picked first, as the highest
  density peak inside the expected range, and only valleys below it may bound
  the band.

  Args:
    aligned: Off-peak aligned spikes.
    expected: (low, high) power range of the device in kW.
    min_support: Minimum number of spikes inside the band.
    kde_config: Density evaluation grid.
    strategy: How to rank valleys.
    max_depth_ratio: Valleys shallower than this are ignored, see
      `kde.local_minima`.
    bound: Which valley bounds the band from below.

  Returns:
    The cluster, or None if no cluster with enough support forms inside the
    expected range.
  """
  low_expected, high_expected = expected
  if not low_expected < high_expected:
    raise ValueError(f'Empty expected range {expected}')
  bound = config_lib.ClusterBound(bound)
  powers = np.array([s.peak_power_kw for s in aligned], dtype=np.float64)
  if powers.size < max(min_support, 1):
    return None

  try:
    bandwidth = kde.scott_bandwidth(powers)
  except kde.DegenerateSampleError:
    # All aligned spikes share one power level.
    mode = float(np.median(powers))
    if not low_expected < mode < high_expected:
      return None
    return PowerCluster(low_expected, high_expected, mode, int(powers.size))

  est = kde.evaluate_density(powers, bandwidth, kde_config.grid_points,
                             kde_config.pad_bandwidths)
  if bound == config_lib.ClusterBound.BELOW_MODE:
    peaks, _ = signal.find_peaks(est.density, plateau_size=1)
    peaks = peaks[(est.grid[peaks] > low_expected) &
                  (est.grid[peaks] < high_expected)]
    if not peaks.size:
      return None
    below = float(est.grid[peaks[np.argmax(est.density[peaks])]])
  else:
    below = None
  valley = kde.lowest_local_minimum(
      est, strategy, below=below, max_depth_ratio=max_depth_ratio)
  low = low_expected if valley is None else max(valley, low_expected)
  if not low < high_expected:
    return None

  at = est.argmax(low, high_expected)
  if at is None:
    return None
  mode = float(est.grid[at])
  if not low < mode < high_expected:
    logging.info('Density maximum %.3f kW lies on the band edge [%.3f, %.3f]',
                 mode, low, high_expected)
    return None
  support = int(np.count_nonzero((powers >= low) & (powers <= high_expected)))
  if support < min_support:
    logging.info('Cluster at %.3f kW has support %d < %d', mode, support,
                 min_support)
    return None
  return PowerCluster(low, high_expected, mode, support)


def classify(
    spikes: Sequence[detector.Spike],
    cluster: Optional[PowerCluster],
    tolerance_min: float = 0.0,
    household_id: str = '',
) -> DetectionResult:
  """Labels aligned spikes inside the cluster band as water heater spikes."""
  if not household_id and spikes:
    household_id = spikes[0].household_id
  cwh, other = [], []
  for s in spikes:
    if (cluster is not None and is_aligned(s, tolerance_min) and
        cluster.contains(s.peak_power_kw)):
      cwh.append(s)
    else:
      other.append(s)
  if not cwh:
    return DetectionResult(household_id, False, None, [], list(spikes))
  return DetectionResult(household_id, True, cluster, cwh, other)


def detect_cwh(
    curve: load_curve.LoadCurve,
    schedule: schedule_lib.OffPeakSchedule,
    config: config_lib.DetectionConfig = config_lib.DetectionConfig(),
) -> DetectionResult:
  """Runs both detection steps on a household load curve.

  Args:
    curve: Load curve, expected to pass the eligibility gate.
    schedule: Off-peak schedule of the household.
    config: Detection parameters.

  Returns:
    The detection result, echoing `config`.
  """
  thresholds = []
  spikes = []
  covered = 0
  for obs in load_curve.segment(curve, config.window_days):
    thr = detector.compute_threshold(obs, config)
    thresholds.append(thr)
    for spike in detector.extract_spikes(obs, thr, schedule):
      # Already part of a spike followed across the previous boundary.
      if spike.position < covered:
        continue
      spikes.append(spike)
      covered = spike.end_position

  aligned = filter_aligned(spikes, config.alignment_tolerance_min)
  cluster = find_power_cluster(
      aligned,
      config.expected_range,
      config.min_support_for(curve.duration),
      config.kde,
      config.minimum_strategy,
      config.valley_depth_ratio,
      config.cluster_bound,
  )
  result = classify(spikes, cluster, config.alignment_tolerance_min,
                    curve.household_id)
  logging.info(
      '%s: %d observations, %d spikes, %d aligned, found=%s%s',
      curve.household_id, len(thresholds), len(spikes), len(aligned),
      result.found,
      f' at {result.cluster.mode_kw:.3f} kW' if result.cluster else '')
  return dataclasses.replace(
      result,
      thresholds=thresholds,
      step_min=curve.step_minutes,
      config=config,
  )
