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
"""Tests for schedule."""

from absl.testing import absltest
from absl.testing import parameterized
from cwh_disagg.timeseries import schedule
import numpy as np
import pandas as pd

OffPeakSchedule = schedule.OffPeakSchedule


def _at(hhmm: str) -> pd.Timestamp:
  return pd.Timestamp(f'2021-10-05T{hhmm}', tz='Europe/Paris')


class OffPeakScheduleTest(parameterized.TestCase):

  def test_parse_wrapping_interval(self):
    sched = OffPeakSchedule.parse('22:30-06:30')
    self.assertEqual(sched.intervals, [schedule.OffPeakInterval(1350, 480)])
    self.assertEqual(sched.total_minutes, 480)
    self.assertEqual(sched.to_strings(), ['22:30-06:30'])

  def test_parse_sorts_intervals(self):
    sched = OffPeakSchedule.parse(['12:30-14:30', '01:00-07:00'])
    self.assertEqual(sched.starts_min, [60, 750])
    self.assertEqual(sched.total_minutes, 480)

  def test_strict_mode(self):
    OffPeakSchedule.parse('22:00-06:00', strict=True)
    OffPeakSchedule.parse('23:00-03:00', strict=False)
    with self.assertRaises(schedule.ScheduleError):
      OffPeakSchedule.parse('23:00-03:00', strict=True)

  @parameterized.parameters(
      ('22:15-06:15',),  # Not on the 30 minute grid.
      ('22:00-06:00,05:00-07:00',),  # Overlap across midnight.
      ('01:00-02:00,03:00-04:00,05:00-06:00,07:00-08:00',),  # Too many.
      ('10:00-10:00',),
      ('25:00-01:00',),
      ('garbage',),
  )
  def test_invalid(self, ranges):
    with self.assertRaises(schedule.ScheduleError):
      OffPeakSchedule.parse(ranges)

  def test_split_at_midnight(self):
    sched = OffPeakSchedule.parse('22:30-06:30,12:00-14:00')
    self.assertEqual(
        sched.split_at_midnight(),
        [(0.0, 6.5), (12.0, 14.0), (22.5, 24.0)])
    for t_a, t_b in sched.split_at_midnight():
      self.assertTrue(0 <= t_a < t_b <= 24)

  def test_json_roundtrip(self):
    sched = OffPeakSchedule.parse('22:30-06:30,12:00-14:00')
    self.assertEqual(OffPeakSchedule.from_json(sched.to_json()), sched)


class OffsetToNearestStartTest(parameterized.TestCase):

  @parameterized.parameters(
      ('22:30', '22:30-06:30', 0),
      ('23:00', '22:30-06:30', 30),
      ('22:00', '22:30-06:30', -30),
      ('23:45', '00:00-06:00,12:00-14:00', -15),
      ('00:15', '23:30-07:30', 45),
      # Equidistant from 00:00 and 12:00 starts; the past one wins.
      ('06:00', '00:00-06:00,12:00-14:00', 360),
  )
  def test_offset(self, hhmm, ranges, expected):
    sched = OffPeakSchedule.parse(ranges)
    self.assertEqual(
        schedule.offset_to_nearest_start(_at(hhmm), sched), expected)

  def test_rounded_to_step(self):
    sched = OffPeakSchedule.parse('22:30-06:30')
    # With hourly data the 22:30 start is rounded to 23:00.
    self.assertEqual(
        schedule.offset_to_nearest_start(_at('23:00'), sched, step_min=60), 0)

  def test_off_grid_starts(self):
    sched = OffPeakSchedule.parse('01:15-07:15,12:30-14:30', resolution_min=1)
    self.assertEqual(sched.off_grid_starts(30), [75])
    self.assertEqual(sched.off_grid_starts(60), [75, 750])
    self.assertEmpty(sched.off_grid_starts(15))

  def test_warn_off_grid_starts(self):
    sched = OffPeakSchedule.parse('01:15-07:15,12:30-14:30', resolution_min=1)
    with self.assertLogs(logger='absl', level='WARNING') as logs:
      off_grid = schedule.warn_off_grid_starts(sched, 30, 'h1')
    self.assertEqual(off_grid, [75])
    self.assertLen(logs.output, 1)
    self.assertIn('h1: off-peak starts 01:15 are off the 30 min data grid, '
                  'rounded to 01:30', logs.output[0])
    self.assertEmpty(schedule.warn_off_grid_starts(sched, 15, 'h1'))

  def test_offset_bounded_by_half_gap(self):
    rng = np.random.default_rng(0)
    texts = ['22:30-06:30', '01:00-07:00,12:30-14:30',
             '02:00-05:00,13:00-15:00,20:00-23:00']
    for ranges in texts:
      sched = OffPeakSchedule.parse(ranges)
      starts = sorted(sched.starts_min)
      gaps = np.diff(starts + [starts[0] + schedule.MINUTES_PER_DAY])
      bound = gaps.max() / 2
      for minute in rng.integers(0, schedule.MINUTES_PER_DAY, size=200):
        t = _at('00:00') + pd.Timedelta(minutes=int(minute))
        self.assertLessEqual(
            abs(schedule.offset_to_nearest_start(t, sched)), bound)


if __name__ == '__main__':
  absltest.main()
