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
"""Household load curves: evenly spaced average power in kW.

Missing samples are stored as NaN and never zero-filled; downstream they
terminate spikes.
"""

import dataclasses
import io
import math
import os

from absl import logging
import numpy as np
import pandas as pd

DEFAULT_TIMEZONE = os.environ.get('CWH_DISAGG_TZ', 'Europe/Paris')
DEFAULT_STEP = pd.Timedelta(minutes=30)

CSV_COLUMNS = ('timestamp', 'power_kw')

# Eligibility gate: samples required in a 31-day month.
MIN_SAMPLES_PER_MONTH = 1440
_MONTH = pd.Timedelta(days=31)


class SchemaError(ValueError):
  """Raised when a CSV does not follow the expected layout or time base."""


class EmptyInputError(ValueError):
  """Raised when an operation needs at least one sample."""


_OFFSET_RE = r'(?:Z|[+-]\d{2}:?\d{2})$'


def parse_timestamps(raw: pd.Series, tz: str) -> pd.DatetimeIndex:
  """Parses ISO-8601 strings, with or without UTC offsets, into `tz`."""
  raw = raw.astype(str).str.strip()
  has_offset = raw.str.contains(_OFFSET_RE, regex=True)
  if has_offset.any() and not has_offset.all():
    raise SchemaError('Timestamps mix explicit offsets and local times')
  # Ambiguous or nonexistent local times raise different exception types
  # depending on the installed timezone backend (pytz or zoneinfo).
  try:
    if has_offset.all():
      parsed = pd.DatetimeIndex(
          pd.to_datetime(raw, utc=True, format='ISO8601')).tz_convert(tz)
    else:
      parsed = pd.DatetimeIndex(pd.to_datetime(raw, format='ISO8601'))
      parsed = parsed.tz_localize(tz, ambiguous='infer', nonexistent='raise')
  except Exception as e:  # pylint: disable=broad-except
    raise SchemaError(f'Unparseable timestamps: {e}') from e
  return parsed.as_unit('ns')


@dataclasses.dataclass(frozen=True, eq=False)
class LoadCurve:
  """Average power consumption of one household.

  Attributes:
    household_id: Opaque household identifier.
    start: Timezone-aware timestamp of the first interval start.
    step: Interval length.
    values: Power in kW per interval; NaN marks a missing sample.
  """
  household_id: str
  start: pd.Timestamp
  step: pd.Timedelta
  values: np.ndarray

  def __post_init__(self):
    if self.start.tzinfo is None:
      raise SchemaError('LoadCurve start must be timezone aware')
    if self.step <= pd.Timedelta(0):
      raise SchemaError(f'Non-positive step {self.step}')
    values = np.asarray(self.values, dtype=np.float64)
    if values.ndim != 1:
      raise SchemaError(f'Expected a 1-d series, got shape {values.shape}')
    present = values[~np.isnan(values)]
    if np.any(~np.isfinite(present)):
      raise ValueError('Power values must be finite')
    if np.any(present < 0):
      raise ValueError('Power values must be >= 0 kW')
    values.setflags(write=False)
    object.__setattr__(self, 'values', values)

  def __len__(self) -> int:
    return self.values.size

  def __eq__(self, other) -> bool:
    if not isinstance(other, LoadCurve):
      return NotImplemented
    return (self.household_id == other.household_id and
            self.start == other.start and self.step == other.step and
            np.array_equal(self.values, other.values, equal_nan=True))

  @property
  def timezone(self) -> str:
    return str(self.start.tz)

  @property
  def step_minutes(self) -> float:
    return self.step / pd.Timedelta(minutes=1)

  @property
  def step_hours(self) -> float:
    return self.step / pd.Timedelta(hours=1)

  @property
  def timestamps(self) -> pd.DatetimeIndex:
    return pd.date_range(self.start, periods=len(self), freq=self.step)

  @property
  def duration(self) -> pd.Timedelta:
    return self.step * len(self)

  @property
  def present(self) -> np.ndarray:
    return ~np.isnan(self.values)

  @property
  def missing_fraction(self) -> float:
    if not len(self):
      return 0.0
    return float(1.0 - self.present.mean())

  def energy_kwh(self) -> np.ndarray:
    """Energy per interval, with missing intervals counted as zero."""
    return np.nan_to_num(self.values, nan=0.0) * self.step_hours

  def to_frame(self) -> pd.DataFrame:
    return pd.DataFrame({
        'timestamp': [t.isoformat() for t in self.timestamps],
        'power_kw': self.values,
    })

  def to_csv(self) -> str:
    """Serializes to `timestamp,power_kw` CSV; missing values are empty."""
    # Default float formatting is the shortest repr, so parsing is exact.
    return self.to_frame().to_csv(index=False, lineterminator='\n')


def parse_load_curve(
    csv_text: str,
    tz: str = DEFAULT_TIMEZONE,
    step: pd.Timedelta = DEFAULT_STEP,
    household_id: str = '',
) -> LoadCurve:
  """Parses a `timestamp,power_kw` CSV into a LoadCurve.

  Gaps that are whole multiples of `step` are materialized as missing values.

  Args:
    csv_text: CSV contents.
    tz: Timezone used for naive timestamps and for the returned curve.
    step: Declared sampling step.
    household_id: Identifier attached to the curve.

  Returns:
    The parsed LoadCurve.

  Raises:
    SchemaError: on a wrong header, non-monotonic, duplicate or off-grid
      timestamps.
    ValueError: on negative or non-finite power.
  """
  try:
    frame = pd.read_csv(
        io.StringIO(csv_text),
        dtype={'timestamp': str},
        float_precision='round_trip',
    )
  except pd.errors.EmptyDataError as e:
    raise SchemaError('Empty CSV') from e
  except pd.errors.ParserError as e:
    raise SchemaError(f'Malformed CSV: {e}') from e
  if tuple(frame.columns) != CSV_COLUMNS:
    raise SchemaError(
        f'Expected header {",".join(CSV_COLUMNS)}, got {list(frame.columns)}')
  try:
    power = pd.to_numeric(frame['power_kw'], errors='raise').to_numpy(
        dtype=np.float64)
  except (ValueError, TypeError) as e:
    raise SchemaError(f'Non-numeric power value: {e}') from e
  if frame.empty:
    return LoadCurve(household_id, pd.Timestamp(0, tz=tz), step,
                     np.zeros(0))

  stamps = parse_timestamps(frame['timestamp'], tz)
  deltas = np.diff(stamps.asi8)
  if np.any(deltas == 0):
    raise SchemaError('Duplicate timestamps')
  if np.any(deltas < 0):
    raise SchemaError('Timestamps are not increasing')
  step_ns = int(step / pd.Timedelta(nanoseconds=1))
  if np.any(deltas % step_ns):
    raise SchemaError(f'Timestamps are not on a {step} grid')

  positions = (stamps.asi8 - stamps.asi8[0]) // step_ns
  values = np.full(int(positions[-1]) + 1, np.nan)
  values[positions] = power
  if values.size > power.size:
    logging.info('%s: materialized %d missing intervals', household_id,
                 values.size - power.size)
  return LoadCurve(household_id, stamps[0], step, values)


def read_load_curve(
    path: str,
    tz: str = DEFAULT_TIMEZONE,
    step: pd.Timedelta = DEFAULT_STEP,
    household_id: str | None = None,
) -> LoadCurve:
  """Reads a CSV file; the household id defaults to the file stem."""
  if household_id is None:
    household_id = os.path.splitext(os.path.basename(path))[0]
  with open(path, 'rt', encoding='utf-8') as f:
    return parse_load_curve(f.read(), tz, step, household_id)


@dataclasses.dataclass(frozen=True, eq=False)
class Observation:
  """A contiguous slice of a LoadCurve processed independently.

  Attributes:
    parent: Household id of the source curve.
    index: Ordinal of the observation within the curve.
    offset: Position of the first value in the source curve.
    start: Timestamp of the first value.
    step: Interval length.
    values: Power values of the slice.
    following: Up to one day of values after the slice, so that runs crossing
      the end of the observation can be followed to their end.
  """
  parent: str
  index: int
  offset: int
  start: pd.Timestamp
  step: pd.Timedelta
  values: np.ndarray
  following: np.ndarray = dataclasses.field(
      default_factory=lambda: np.zeros(0))

  def __len__(self) -> int:
    return self.values.size

  @property
  def present_values(self) -> np.ndarray:
    return self.values[~np.isnan(self.values)]

  def timestamp(self, position: int) -> pd.Timestamp:
    """Timestamp of the value at `position` within the observation."""
    return self.start + self.step * position


def segment(curve: LoadCurve, window_days: float = 7) -> list[Observation]:
  """Splits a curve into consecutive disjoint observations.

  A trailing partial window is kept when it spans at least one day and is
  merged into the previous window otherwise.

  Args:
    curve: Curve to split.
    window_days: Target observation length in days.

  Returns:
    Observations in order, covering the whole curve.

  Raises:
    EmptyInputError: if the curve has no samples.
  """
  if not len(curve):
    raise EmptyInputError(f'Cannot segment empty curve {curve.household_id}')
  per_window = max(1, int(round(pd.Timedelta(days=window_days) / curve.step)))
  per_day = max(1, int(round(pd.Timedelta(days=1) / curve.step)))
  n = len(curve)
  bounds = list(range(0, n, per_window)) + [n]
  if len(bounds) > 2 and bounds[-1] - bounds[-2] < per_day:
    del bounds[-2]

  observations = []
  for i, (lo, hi) in enumerate(zip(bounds[:-1], bounds[1:])):
    observations.append(
        Observation(
            parent=curve.household_id,
            index=i,
            offset=lo,
            start=curve.start + curve.step * lo,
            step=curve.step,
            values=curve.values[lo:hi],
            following=curve.values[hi:hi + per_day],
        ))
  return observations


def required_samples(
    curve: LoadCurve, min_samples_per_month: int = MIN_SAMPLES_PER_MONTH
) -> int:
  """Present samples needed for `curve` to pass the eligibility gate."""
  return math.ceil(min_samples_per_month * (curve.duration / _MONTH) - 1e-9)


def is_eligible(
    curve: LoadCurve, min_samples_per_month: int = MIN_SAMPLES_PER_MONTH
) -> bool:
  """Eligibility gate: at least 1440 present samples per 31-day month."""
  return (len(curve) > 0 and int(curve.present.sum()) >= required_samples(
      curve, min_samples_per_month))
