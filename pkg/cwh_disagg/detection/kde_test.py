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
"""Tests for kde."""

import math

from absl.testing import absltest
from absl.testing import parameterized
from cwh_disagg.detection import kde
import numpy as np
from scipy import stats


def _cluster(center: float, n: int, sd: float) -> np.ndarray:
  """Deterministic, evenly spread normal quantiles around `center`."""
  return center + sd * stats.norm.ppf((np.arange(n) + 0.5) / n)


def _naive_density(samples, bandwidth, grid):
  norm = len(samples) * bandwidth * math.sqrt(2 * math.pi)
  return np.array([
      math.fsum(math.exp(-((g - s) / bandwidth)**2 / 2) for s in samples) /
      norm for g in grid
  ])


def _naive_minima(grid, density):
  """Exhaustive scan for strict valleys, plateaus collapsed to midpoints."""
  found = []
  i = 1
  while i < len(density) - 1:
    if density[i] < density[i - 1]:
      j = i
      while j + 1 < len(density) and density[j + 1] == density[i]:
        j += 1
      if j + 1 < len(density) and density[j + 1] > density[i]:
        found.append(((grid[i] + grid[j]) / 2, density[i]))
      i = j + 1
    else:
      i += 1
  return found


def _random_mixture(rng) -> np.ndarray:
  modes = rng.integers(2, 4)
  centers = np.sort(rng.uniform(0, 6, size=modes))
  parts = [
      rng.normal(c, rng.uniform(0.05, 0.3), size=rng.integers(20, 200))
      for c in centers
  ]
  return np.concatenate(parts)


class ScottBandwidthTest(parameterized.TestCase):

  def test_formula(self):
    raw = np.random.default_rng(0).normal(size=32)
    samples = (raw - raw.mean()) / raw.std(ddof=1)
    self.assertAlmostEqual(kde.scott_bandwidth(samples), 0.5, places=12)

  @parameterized.parameters(
      ([0.5] * 10,),
      ([0.3] * 336,),
      ([0.3, np.nextafter(0.3, 1.0)] * 168,),
      ([1.0],),
      ([],),
  )
  def test_degenerate(self, samples):
    with self.assertRaises(kde.DegenerateSampleError):
      kde.scott_bandwidth(samples)


class EvaluateDensityTest(absltest.TestCase):

  def test_single_sample_peak(self):
    est = kde.evaluate_density([1.0], 0.1)
    spacing = est.grid[1] - est.grid[0]
    self.assertLessEqual(abs(est.grid[np.argmax(est.density)] - 1.0), spacing)
    self.assertLen(est.grid, kde.DEFAULT_GRID_POINTS)
    self.assertAlmostEqual(est.grid[0], 0.6)
    self.assertAlmostEqual(est.grid[-1], 1.4)

  def test_symmetric(self):
    est = kde.evaluate_density([-0.7, 0.7], 0.2)
    np.testing.assert_allclose(est.density, est.density[::-1], atol=1e-9)

  def test_integrates_to_one(self):
    samples = np.random.default_rng(1).normal(size=1000)
    est = kde.evaluate_density(samples, kde.scott_bandwidth(samples))
    self.assertBetween(est.integral(), 0.99, 1.01)
    self.assertTrue(np.all(est.density >= 0))

  def test_invalid_arguments(self):
    with self.assertRaises(kde.EmptyInputError):
      kde.evaluate_density([], 0.1)
    with self.assertRaises(ValueError):
      kde.evaluate_density([1.0], 0.0)
    with self.assertRaises(ValueError):
      kde.evaluate_density([1.0], 0.1, grid_points=10)

  def test_matches_naive_oracle(self):
    rng = np.random.default_rng(2)
    for _ in range(100):
      samples = _random_mixture(rng)[:rng.integers(2, 200)]
      bandwidth = kde.scott_bandwidth(samples)
      est = kde.evaluate_density(samples, bandwidth, grid_points=64)
      np.testing.assert_allclose(
          est.density, _naive_density(samples, bandwidth, est.grid),
          rtol=1e-12, atol=0)

  def test_matches_naive_oracle_large_sample(self):
    samples = np.random.default_rng(3).normal(size=1000)
    bandwidth = kde.scott_bandwidth(samples)
    est = kde.evaluate_density(samples, bandwidth)
    np.testing.assert_allclose(
        est.density, _naive_density(samples, bandwidth, est.grid),
        rtol=1e-12, atol=0)


class LocalMinimumTest(absltest.TestCase):

  def test_unimodal(self):
    est = kde.evaluate_density(_cluster(1.0, 100, 0.2), 0.1)
    self.assertIsNone(kde.first_local_minimum(est))
    self.assertIsNone(kde.lowest_local_minimum(est))

  def test_bimodal(self):
    rng = np.random.default_rng(4)
    samples = np.concatenate(
        [rng.normal(0.2, 0.05, size=200), rng.normal(2.5, 0.1, size=50)])
    est = kde.evaluate_density(samples, kde.scott_bandwidth(samples))
    first = kde.first_local_minimum(est)
    self.assertBetween(first, 0.5, 2.0)
    self.assertEqual(kde.lowest_local_minimum(est), first)

  def test_trimodal(self):
    samples = np.concatenate([
        _cluster(0.0, 200, 0.1),
        _cluster(2.0, 100, 0.1),
        _cluster(4.0, 20, 0.1),
    ])
    est = kde.evaluate_density(samples, 0.4)
    expected = _naive_minima(est.grid, est.density)
    self.assertLen(expected, 2)
    (first, _), (second, _) = expected
    self.assertBetween(first, 0.0, 2.0)
    self.assertBetween(second, 2.0, 4.0)
    self.assertEqual(kde.first_local_minimum(est), first)
    # The valley between the two smaller clusters is the deepest one.
    self.assertEqual(kde.lowest_local_minimum(est), second)
    self.assertEqual(
        kde.lowest_local_minimum(est, kde.MinimumStrategy.ABSCISSA), first)
    self.assertEqual(kde.lowest_local_minimum(est, below=2.0), first)
    self.assertIsNone(kde.lowest_local_minimum(est, below=first))

  def test_shallow_valley_filter(self):
    samples = np.concatenate([_cluster(0.0, 100, 0.1), _cluster(1.2, 100, 0.1)])
    est = kde.evaluate_density(samples, 0.4)
    self.assertAlmostEqual(kde.first_local_minimum(est), 0.6, delta=0.05)
    self.assertIsNone(kde.first_local_minimum(est, max_depth_ratio=0.5))
    self.assertIsNotNone(kde.first_local_minimum(est, max_depth_ratio=0.8))

    deep = np.concatenate([_cluster(0.0, 100, 0.1), _cluster(3.0, 100, 0.1)])
    est = kde.evaluate_density(deep, 0.4)
    self.assertAlmostEqual(
        kde.lowest_local_minimum(est, max_depth_ratio=0.5), 1.5, delta=0.05)

  def test_plateau_midpoint(self):
    grid = np.linspace(0, 1, 64)
    density = np.linspace(2, 1, 64)
    density[20:30] = 0.5
    density[30:] = np.linspace(1, 2, 34)
    est = kde.DensityEstimate(np.zeros(1), 0.1, grid, density)
    self.assertAlmostEqual(
        kde.first_local_minimum(est), (grid[20] + grid[29]) / 2)

  def test_agrees_with_exhaustive_scan(self):
    rng = np.random.default_rng(5)
    for _ in range(100):
      samples = _random_mixture(rng)
      est = kde.evaluate_density(samples, kde.scott_bandwidth(samples))
      expected = _naive_minima(est.grid, est.density)
      abscissas, densities = kde.local_minima(est)
      np.testing.assert_allclose(abscissas, [a for a, _ in expected])
      if expected:
        self.assertEqual(kde.first_local_minimum(est), expected[0][0])
        deepest = min(expected, key=lambda v: v[1])
        self.assertEqual(kde.lowest_local_minimum(est), deepest[0])
        np.testing.assert_allclose(densities, [d for _, d in expected])
      else:
        self.assertIsNone(kde.first_local_minimum(est))

  def test_translation_and_scale_equivariance(self):
    rng = np.random.default_rng(6)
    samples = np.concatenate(
        [rng.normal(0.3, 0.1, size=300), rng.normal(2.4, 0.15, size=60)])
    base = kde.evaluate_density(samples, kde.scott_bandwidth(samples))
    spacing = base.grid[1] - base.grid[0]
    expected = kde.first_local_minimum(base)

    shifted = samples + 1.7
    est = kde.evaluate_density(shifted, kde.scott_bandwidth(shifted))
    self.assertAlmostEqual(
        kde.first_local_minimum(est), expected + 1.7, delta=spacing)

    scaled = samples * 3.0
    est = kde.evaluate_density(scaled, kde.scott_bandwidth(scaled))
    self.assertAlmostEqual(
        kde.first_local_minimum(est), expected * 3.0, delta=3.0 * spacing)


if __name__ == '__main__':
  absltest.main()
