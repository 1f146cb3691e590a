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
"""Tests for config."""

from absl.testing import absltest
from absl.testing import parameterized
from cwh_disagg.detection import config as config_lib
from cwh_disagg.detection import kde
import pandas as pd


class DetectionConfigTest(parameterized.TestCase):

  def test_defaults(self):
    config = config_lib.DetectionConfig()
    self.assertEqual(config.expected_range, (0.8, 5.0))
    self.assertEqual(config.window_days, 7.0)
    self.assertEqual(config.kde.grid_points, 512)
    self.assertEqual(config.minimum_strategy, kde.MinimumStrategy.DENSITY.value)
    self.assertEqual(config.cluster_bound,
                     config_lib.ClusterBound.LOWEST_MINIMUM.value)

  @parameterized.named_parameters(
      ('empty_range', dict(expected_low_kw=2.0, expected_high_kw=1.0)),
      ('zero_low', dict(expected_low_kw=0.0)),
      ('window', dict(window_days=0)),
      ('tolerance', dict(alignment_tolerance_min=-1)),
      ('depth', dict(valley_depth_ratio=1.5)),
      ('strategy', dict(minimum_strategy='median')),
      ('bound', dict(cluster_bound='highest')),
  )
  def test_invalid(self, kwargs):
    with self.assertRaises(ValueError):
      config_lib.DetectionConfig(**kwargs)

  @parameterized.parameters(
      (1, 3),
      (17, 3),
      (28, 4),
      (365, 60),
  )
  def test_min_support_rule(self, days, expected):
    config = config_lib.DetectionConfig()
    self.assertEqual(config.min_support_for(pd.Timedelta(days=days)), expected)

  def test_explicit_min_support(self):
    config = config_lib.DetectionConfig(min_support=10)
    self.assertEqual(config.min_support_for(pd.Timedelta(days=365)), 10)

  def test_json_round_trip(self):
    config = config_lib.DetectionConfig(
        expected_low_kw=1.0, kde=config_lib.KdeConfig(grid_points=256))
    self.assertEqual(
        config_lib.DetectionConfig.from_json(config.to_json()), config)


class ExpectedRangeTest(parameterized.TestCase):

  def test_parse(self):
    self.assertEqual(config_lib.parse_expected_range('0.8:5.0'), (0.8, 5.0))

  @parameterized.parameters('0.8', '0.8-5.0', 'a:b', '1:2:3')
  def test_malformed(self, text):
    with self.assertRaises(ValueError):
      config_lib.parse_expected_range(text)


class ResolveTest(absltest.TestCase):

  def test_later_overrides_win(self):
    base = config_lib.DetectionConfig(window_days=14)
    config = config_lib.resolve(
        base,
        {'expected_low_kw': 1.0, 'window_days': 10},
        {'window_days': 5, 'expected_high_kw': None},
    )
    self.assertEqual(config.window_days, 5)
    self.assertEqual(config.expected_low_kw, 1.0)
    self.assertEqual(config.expected_high_kw, 5.0)

  def test_nested(self):
    config = config_lib.resolve(config_lib.DetectionConfig(),
                                {'kde': {'grid_points': 128}})
    self.assertEqual(config.kde.grid_points, 128)
    self.assertEqual(config.kde.pad_bandwidths, kde.DEFAULT_PAD_BANDWIDTHS)

  def test_no_overrides(self):
    base = config_lib.DetectionConfig()
    self.assertIs(config_lib.resolve(base, {}, None), base)

  def test_unknown_field(self):
    with self.assertRaises(ValueError):
      config_lib.resolve(config_lib.DetectionConfig(), {'bandwidth': 0.1})

  def test_overrides_are_validated(self):
    with self.assertRaises(ValueError):
      config_lib.resolve(config_lib.DetectionConfig(),
                         {'expected_low_kw': 6.0})


if __name__ == '__main__':
  absltest.main()
