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
"""Separation of background and spike consumption within an observation.

Each observation gets its own power threshold at the first valley of the KDE
of its values. Maximal runs above the threshold are spikes; their features
are measured against a local background taken from the nearest values
outside the run.
"""

import dataclasses
from typing import Optional, Sequence

from absl import logging
from cwh_disagg.common import file
from cwh_disagg.common import utils
from cwh_disagg.detection import config as config_lib
from cwh_disagg.detection import kde
from cwh_disagg.timeseries import load_curve
from cwh_disagg.timeseries import schedule as schedule_lib
import numpy as np
import pandas as pd

SPIKE_CSV_COLUMNS = ('start', 'length', 'offset_min', 'peak_power_kw',
                     'background_kw', 'energy_kwh')


@dataclasses.dataclass(frozen=True)
class Spike(utils.NPDataClassJsonMixin):
  """A maximal run of consecutive above-threshold intervals.

  Attributes:
    household_id: Household the spike was found in.
    start: Start of the first interval of the run.
    position: Index of the first interval in the household's load curve.
    length: Number of intervals in the run.
    offset_min: Signed minutes from the nearest off-peak start to `start`.
    peak_power_kw: Maximum in-run power minus the local background.
    background_kw: Local background power.
    energy_kwh: In-run energy above the background.
  """
  household_id: str
  start: pd.Timestamp = utils.timestamp_field()
  position: int = 0
  length: int = 1
  offset_min: float = 0.0
  peak_power_kw: float = 0.0
  background_kw: float = 0.0
  energy_kwh: float = 0.0

  @property
  def end_position(self) -> int:
    return self.position + self.length


@dataclasses.dataclass(frozen=True)
class ObservationThreshold(utils.NPDataClassJsonMixin):
  """Background/spike threshold of one observation.

  Attributes:
    index: Ordinal of the observation within its curve.
    threshold_kw: Threshold in kW, or None when the observation yields no
      spikes.
    reason: Why no threshold was set, if so.
  """
  index: int
  threshold_kw: Optional[float] = None
  reason: Optional[str] = None


def compute_threshold(
    obs: load_curve.Observation,
    config: config_lib.DetectionConfig = config_lib.DetectionConfig(),
) -> ObservationThreshold:
  """Thresholds an observation at the first valley of its power KDE.

  Args:
    obs: Observation to threshold.
    config: Detection parameters.

  Returns:
    The threshold, which is None for observations with too few present values,
    zero variance or a unimodal power distribution.
  """
  values = obs.present_values
  if values.size < config.min_present_values:
    logging.warning(
        '%s: skipping observation %d with %d present values (< %d)',
        obs.parent, obs.index, values.size, config.min_present_values)
    return ObservationThreshold(obs.index, None, 'too_few_values')
  try:
    bandwidth = kde.scott_bandwidth(values)
  except kde.DegenerateSampleError:
    return ObservationThreshold(obs.index, None, 'degenerate')
  est = kde.evaluate_density(values, bandwidth, config.kde.grid_points,
                             config.kde.pad_bandwidths)
  threshold = kde.first_local_minimum(est, config.valley_depth_ratio)
  if threshold is None:
    return ObservationThreshold(obs.index, None, 'unimodal')
  if not values.min() < threshold < values.max():
    return ObservationThreshold(obs.index, None, 'outside_range')
  return ObservationThreshold(obs.index, threshold)


def find_runs(mask: np.ndarray) -> list[tuple[int, int]]:
  """Half-open [begin, end) ranges of consecutive True values."""
  edges = np.diff(np.concatenate([[0], mask.astype(np.int8), [0]]))
  begins = np.flatnonzero(edges == 1)
  ends = np.flatnonzero(edges == -1)
  return [(int(b), int(e)) for b, e in zip(begins, ends)]


def _nearest_background(
    values: np.ndarray, positions: range, threshold: float) -> Optional[float]:
  for i in positions:
    if values[i] <= threshold:
      return float(values[i])
  return None


def extract_spikes(
    obs: load_curve.Observation,
    thr: ObservationThreshold,
    schedule: schedule_lib.OffPeakSchedule,
) -> list[Spike]:
  """Turns the above-threshold runs of an observation into spikes.

  Missing values terminate runs. A run reaching the end of the observation is
  followed into `obs.following` under the same threshold, so a spike is never
  cut at an observation boundary. The background of a run is the mean of the
  nearest present below-threshold value on each side of it, or of the one
  available side at the edges of the data.

  Args:
    obs: Observation to scan.
    thr: Its threshold; no spikes are returned when unset.
    schedule: Off-peak schedule used to compute start offsets.

  Returns:
    Spikes starting inside the observation, in chronological order.
  """
  if thr.threshold_kw is None:
    return []
  values = np.concatenate([obs.values, obs.following])
  step_h = obs.step / pd.Timedelta(hours=1)
  step_min = obs.step / pd.Timedelta(minutes=1)
  threshold = thr.threshold_kw
  # Missing values split runs.
  above = np.nan_to_num(values, nan=-np.inf) > threshold

  spikes = []
  for begin, end in find_runs(above):
    if begin >= len(obs):
      break
    sides = [
        _nearest_background(values, range(begin - 1, -1, -1), threshold),
        _nearest_background(values, range(end, len(values)), threshold),
    ]
    sides = [v for v in sides if v is not None]
    if not sides:
      logging.warning(
          '%s: observation %d is entirely above %.3f kW, no background '
          'available; dropping it', obs.parent, obs.index, threshold)
      continue
    background = float(np.mean(sides))
    power = values[begin:end]
    peak = float(power.max()) - background
    if peak <= 0:
      continue
    start = obs.timestamp(begin)
    spikes.append(
        Spike(
            household_id=obs.parent,
            start=start,
            position=obs.offset + int(begin),
            length=int(end - begin),
            offset_min=schedule_lib.offset_to_nearest_start(
                start, schedule, step_min),
            peak_power_kw=peak,
            background_kw=background,
            energy_kwh=float(np.clip(power - background, 0, None).sum()) *
            step_h,
        ))
  return spikes


def spikes_to_frame(spikes: Sequence[Spike]) -> pd.DataFrame:
  return pd.DataFrame(
      [[
          s.start.isoformat(), s.length, s.offset_min, s.peak_power_kw,
          s.background_kw, s.energy_kwh
      ] for s in spikes],
      columns=list(SPIKE_CSV_COLUMNS),
  )


def write_spikes_csv(spikes: Sequence[Spike], path: file.PathLike):
  """Writes the spike debug dump of one household."""
  file.write_text(
      path,
      spikes_to_frame(spikes).to_csv(
          index=False, float_format=utils.FLOAT_FORMAT, lineterminator='\n'))
