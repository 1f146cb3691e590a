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
"""Water heater activations, per-interval power and consumption fractions."""

import dataclasses
from typing import Optional, Sequence

from cwh_disagg.common import file
from cwh_disagg.common import utils
from cwh_disagg.detection import classifier
from cwh_disagg.timeseries import load_curve
import numpy as np
import pandas as pd

FRACTION_CSV_COLUMNS = ('date', 'daily_fraction', 'daily_cwh_kwh',
                        'daily_total_kwh')
OVERALL_ROW = 'overall'


class UndefinedFractionError(ValueError):
  """Raised when a consumption fraction has a zero denominator."""


@dataclasses.dataclass(frozen=True)
class Activation(utils.NPDataClassJsonMixin):
  """A contiguous period of water heater consumption.

  Attributes:
    start: Start of the first interval.
    duration_min: Length in minutes, a multiple of the sampling step.
    mean_power_kw: Average power over the activation.
    peak_power_kw: Highest interval power over the activation.
    energy_kwh: Energy consumed.
  """
  start: pd.Timestamp = utils.timestamp_field()
  duration_min: float = 0.0
  mean_power_kw: float = 0.0
  peak_power_kw: float = 0.0
  energy_kwh: float = 0.0

  @property
  def end(self) -> pd.Timestamp:
    return self.start + pd.Timedelta(minutes=self.duration_min)

  @classmethod
  def from_interval_powers(
      cls,
      start: pd.Timestamp,
      step: pd.Timedelta,
      powers: np.ndarray,
  ) -> 'Activation':
    step_h = step / pd.Timedelta(hours=1)
    return cls(
        start=start,
        duration_min=len(powers) * step / pd.Timedelta(minutes=1),
        mean_power_kw=float(np.mean(powers)),
        peak_power_kw=float(np.max(powers)),
        energy_kwh=float(np.sum(powers)) * step_h,
    )


@dataclasses.dataclass(frozen=True, eq=False)
class AttributionSeries:
  """Water heater power per interval, on the time base of a LoadCurve.

  Attributes:
    household_id: Household of the source curve.
    start: Start of the first interval.
    step: Interval length.
    cwh_power: Power attributed to the water heater in kW; 0 outside of its
      spikes.
  """
  household_id: str
  start: pd.Timestamp
  step: pd.Timedelta
  cwh_power: np.ndarray

  def __len__(self) -> int:
    return self.cwh_power.size

  @property
  def timestamps(self) -> pd.DatetimeIndex:
    return pd.date_range(self.start, periods=len(self), freq=self.step)

  def energy_kwh(self) -> np.ndarray:
    return self.cwh_power * (self.step / pd.Timedelta(hours=1))

  def to_csv(self) -> str:
    """Serializes to `timestamp,cwh_power_kw` CSV."""
    frame = pd.DataFrame({
        'timestamp': [t.isoformat() for t in self.timestamps],
        'cwh_power_kw': self.cwh_power,
    })
    return frame.to_csv(index=False, lineterminator='\n')


def to_activations(result: classifier.DetectionResult) -> list[Activation]:
  """One activation per water heater spike, in chronological order."""
  step_min = result.step_min
  activations = []
  for spike in sorted(result.cwh_spikes, key=lambda s: s.start):
    duration = spike.length * step_min
    activations.append(
        Activation(
            start=spike.start,
            duration_min=duration,
            mean_power_kw=spike.energy_kwh / (duration / 60),
            peak_power_kw=spike.peak_power_kw,
            energy_kwh=spike.energy_kwh,
        ))
  return activations


def attribute(
    curve: load_curve.LoadCurve,
    result: classifier.DetectionResult,
) -> AttributionSeries:
  """Assigns the above-background power of water heater spikes to the device.

  Args:
    curve: Load curve the detection ran on.
    result: Its detection result.

  Returns:
    Attributed power, clamped to [0, measured power] at every interval.
  """
  cwh = np.zeros(len(curve))
  raw = np.nan_to_num(curve.values, nan=0.0)
  for spike in result.cwh_spikes:
    window = slice(spike.position, spike.end_position)
    cwh[window] = np.clip(raw[window] - spike.background_kw, 0, raw[window])
  return AttributionSeries(curve.household_id, curve.start, curve.step, cwh)


@dataclasses.dataclass(frozen=True)
class DailyFraction(utils.NPDataClassJsonMixin):
  """Water heater share of one civil day's consumption.

  Attributes:
    date: Local calendar date, ISO formatted.
    fraction: cwh_kwh / total_kwh, or None for a day without consumption.
    cwh_kwh: Energy attributed to the water heater.
    total_kwh: Measured energy.
  """
  date: str
  fraction: Optional[float]
  cwh_kwh: float
  total_kwh: float


def consumption_fractions(
    curve: load_curve.LoadCurve,
    attr: AttributionSeries,
) -> tuple[list[DailyFraction], float]:
  """Daily and overall water heater consumption fractions.

  Days are civil days in the curve's timezone. Missing intervals count as no
  consumption.

  Args:
    curve: Measured load curve.
    attr: Attribution on the same time base.

  Returns:
    (daily fractions in date order, overall fraction)

  Raises:
    UndefinedFractionError: if the curve has no consumption at all.
  """
  if len(attr) != len(curve):
    raise ValueError(
        f'Attribution has {len(attr)} intervals, curve has {len(curve)}')
  stamps = curve.timestamps
  frame = pd.DataFrame({
      'cwh': attr.energy_kwh(),
      'total': curve.energy_kwh(),
  }, index=stamps)
  by_day = frame.groupby(stamps.date).sum()

  daily = []
  for day, row in by_day.iterrows():
    fraction = row['cwh'] / row['total'] if row['total'] > 0 else None
    daily.append(
        DailyFraction(day.isoformat(), fraction, float(row['cwh']),
                      float(row['total'])))

  total = float(frame['total'].sum())
  if not total > 0:
    raise UndefinedFractionError(
        f'{curve.household_id}: no consumption, fraction is undefined')
  return daily, float(frame['cwh'].sum()) / total


def fractions_to_frame(
    daily: Sequence[DailyFraction],
    overall: Optional[float] = None,
) -> pd.DataFrame:
  """Daily rows, plus an `overall` summary row when `overall` is given."""
  rows = [[d.date, d.fraction, d.cwh_kwh, d.total_kwh] for d in daily]
  if overall is not None:
    rows.append([
        OVERALL_ROW, overall,
        sum(d.cwh_kwh for d in daily),
        sum(d.total_kwh for d in daily)
    ])
  return pd.DataFrame(rows, columns=list(FRACTION_CSV_COLUMNS))


def write_fractions_csv(
    daily: Sequence[DailyFraction],
    overall: Optional[float],
    path: file.PathLike,
):
  file.write_text(
      path,
      fractions_to_frame(daily, overall).to_csv(
          index=False, float_format=utils.FLOAT_FORMAT, lineterminator='\n'))
