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
"""Daily off-peak ("heures creuses") schedules in local time."""

import dataclasses
import datetime
import math
import re
from typing import Sequence, Union

from absl import logging
import dataclasses_json

MINUTES_PER_DAY = 24 * 60

# Contractual total of daily off-peak time.
CONTRACT_MINUTES = 8 * 60

_INTERVAL_RE = re.compile(r'^\s*(\d{1,2}):(\d{2})\s*-\s*(\d{1,2}):(\d{2})\s*$')


class ScheduleError(ValueError):
  """Raised for malformed or inconsistent off-peak schedules."""


@dataclasses.dataclass(frozen=True)
class OffPeakInterval(dataclasses_json.DataClassJsonMixin):
  """A single daily off-peak range.

  Attributes:
    start_min: Local time-of-day of the range start, in minutes after midnight.
    duration_min: Length of the range in minutes. Ranges crossing midnight keep
      their true start, e.g. 22:30-06:30 is (1350, 480).
  """
  start_min: int
  duration_min: int

  @property
  def end_min(self) -> int:
    return (self.start_min + self.duration_min) % MINUTES_PER_DAY

  def __str__(self) -> str:
    return f'{format_minutes(self.start_min)}-{format_minutes(self.end_min)}'


def format_minutes(minutes: int) -> str:
  return f'{minutes // 60:02d}:{minutes % 60:02d}'


def _parse_interval(text: str) -> OffPeakInterval:
  match = _INTERVAL_RE.match(text)
  if match is None:
    raise ScheduleError(f'Expected HH:MM-HH:MM, got {text!r}')
  h0, m0, h1, m1 = (int(g) for g in match.groups())
  if h0 > 23 or h1 > 24 or m0 > 59 or m1 > 59 or (h1 == 24 and m1):
    raise ScheduleError(f'Invalid time of day in {text!r}')
  start = h0 * 60 + m0
  duration = (h1 * 60 + m1 - start) % MINUTES_PER_DAY
  if duration == 0:
    raise ScheduleError(f'Empty off-peak interval {text!r}')
  return OffPeakInterval(start, duration)


@dataclasses.dataclass(frozen=True)
class OffPeakSchedule(dataclasses_json.DataClassJsonMixin):
  """Up to three daily off-peak intervals.

  Attributes:
    intervals: Off-peak intervals, stored sorted by start.
    resolution_min: All starts and durations must be multiples of this.
    strict: Require the contractual total of exactly eight hours.
  """
  intervals: list[OffPeakInterval]
  resolution_min: int = 30
  strict: bool = False

  def __post_init__(self):
    if not 1 <= len(self.intervals) <= 3:
      raise ScheduleError(
          f'Expected 1 to 3 off-peak intervals, got {len(self.intervals)}')
    intervals = sorted(self.intervals, key=lambda i: i.start_min)
    object.__setattr__(self, 'intervals', intervals)
    for interval in intervals:
      if not 0 <= interval.start_min < MINUTES_PER_DAY:
        raise ScheduleError(f'Start out of range in {interval}')
      if not 0 < interval.duration_min < MINUTES_PER_DAY:
        raise ScheduleError(f'Duration out of range in {interval}')
      if (interval.start_min % self.resolution_min or
          interval.duration_min % self.resolution_min):
        raise ScheduleError(
            f'{interval} is not aligned to {self.resolution_min} minutes')

    # Unrolled on the 24 h circle, each interval must end before the next one
    # (the first one, for the last interval) starts.
    for i, interval in enumerate(intervals):
      following = intervals[(i + 1) % len(intervals)]
      next_start = following.start_min
      if next_start <= interval.start_min:
        next_start += MINUTES_PER_DAY
      if len(intervals) > 1 and (
          interval.start_min + interval.duration_min > next_start):
        raise ScheduleError(f'Overlapping off-peak intervals {interval} and '
                            f'{following}')
    total = self.total_minutes
    if self.strict and total != CONTRACT_MINUTES:
      raise ScheduleError(
          f'Off-peak hours total {total} min, expected {CONTRACT_MINUTES}')

  @classmethod
  def parse(
      cls,
      ranges: Union[str, Sequence[str]],
      resolution_min: int = 30,
      strict: bool = False,
  ) -> 'OffPeakSchedule':
    """Parses 'HH:MM-HH:MM' ranges, as a list or one comma-separated string."""
    if isinstance(ranges, str):
      ranges = [s for s in ranges.split(',') if s.strip()]
    return cls([_parse_interval(s) for s in ranges], resolution_min, strict)

  def to_strings(self) -> list[str]:
    return [str(i) for i in self.intervals]

  @property
  def total_minutes(self) -> int:
    return sum(i.duration_min for i in self.intervals)

  @property
  def starts_min(self) -> list[int]:
    return [i.start_min for i in self.intervals]

  def rounded_starts(self, step_min: float | None = None) -> list[float]:
    """Interval starts rounded to the nearest multiple of the data step."""
    if step_min is None or step_min <= 0:
      return [float(s) for s in self.starts_min]
    return [
        math.floor(s / step_min + 0.5) * step_min % MINUTES_PER_DAY
        for s in self.starts_min
    ]

  def off_grid_starts(self, step_min: float) -> list[int]:
    """Starts that are not multiples of the data step, in minutes."""
    return [
        s for s, r in zip(self.starts_min, self.rounded_starts(step_min))
        if s != r
    ]

  def split_at_midnight(self) -> list[tuple[float, float]]:
    """Exports (t_a, t_b) hour pairs with 0 <= t_a < t_b <= 24.

    Intervals wrapping midnight are split in two; a range ending at midnight
    is reported with t_b = 24.

    Returns:
      Hour pairs sorted by start.
    """
    pairs = []
    for interval in self.intervals:
      end = interval.start_min + interval.duration_min
      if end <= MINUTES_PER_DAY:
        pairs.append((interval.start_min / 60, end / 60))
      else:
        pairs.append((interval.start_min / 60, 24.0))
        pairs.append((0.0, (end - MINUTES_PER_DAY) / 60))
    return sorted(pairs)


def warn_off_grid_starts(
    schedule: OffPeakSchedule,
    step_min: float,
    household_id: str = '',
) -> list[int]:
  """Logs a warning when schedule starts get rounded to the data grid.

  Args:
    schedule: Off-peak schedule, possibly at a finer resolution than the data.
    step_min: Data step in minutes.
    household_id: Household named in the warning.

  Returns:
    The starts, in minutes, that are off the grid.
  """
  off_grid = schedule.off_grid_starts(step_min)
  if off_grid:
    rounded = dict(zip(schedule.starts_min, schedule.rounded_starts(step_min)))
    logging.warning(
        '%s: off-peak starts %s are off the %g min data grid, rounded to %s',
        household_id or 'household',
        ', '.join(format_minutes(s) for s in off_grid), step_min,
        ', '.join(format_minutes(int(rounded[s])) for s in off_grid))
  return off_grid


def minute_of_day(t: datetime.datetime) -> float:
  """Local wall-clock time of `t` in minutes after midnight."""
  return (t.hour * 60 + t.minute + t.second / 60 +
          t.microsecond / 60_000_000)


def offset_to_nearest_start(
    t: datetime.datetime,
    schedule: OffPeakSchedule,
    step_min: float | None = None,
) -> float:
  """Signed minutes from the nearest off-peak start to `t`.

  Starts are searched in the previous, current and following day, so the
  nearest occurrence may lie across midnight. Ties are broken toward the past
  occurrence (positive offset).

  Args:
    t: Timestamp; its own (local) wall-clock time is used.
    schedule: Off-peak schedule.
    step_min: When given, schedule starts are first rounded to this data step.

  Returns:
    t minus the nearest start, in minutes.
  """
  m = minute_of_day(t)
  candidates = []
  for start in schedule.rounded_starts(step_min):
    for day in (-1, 0, 1):
      candidates.append(m - (start + day * MINUTES_PER_DAY))
  return min(candidates, key=lambda d: (abs(d), d < 0))
