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
"""Anonymization of published load curves with small exponential noise."""

import dataclasses

from cwh_disagg.timeseries import load_curve
import numpy as np

NOISE_MEAN_KW = 0.005


def anonymize(
    curve: load_curve.LoadCurve,
    seed: int,
    mean_kw: float = NOISE_MEAN_KW,
) -> load_curve.LoadCurve:
  """Adds independent exponential noise to every present value.

  Args:
    curve: Curve to anonymize.
    seed: Seed of the noise generator.
    mean_kw: Expected value of the added noise.

  Returns:
    A new curve; missing values stay missing.
  """
  if mean_kw < 0:
    raise ValueError(f'Noise mean must be >= 0 kW, got {mean_kw}')
  rng = np.random.default_rng(seed)
  noise = rng.exponential(mean_kw, size=len(curve))
  # NaN + noise stays NaN.
  return dataclasses.replace(curve, values=curve.values + noise)
