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
"""Synthetic household load curves with a known water heater component.

A curve is the sum of a background (base level, daily sinusoid and
nonnegative noise), optional confounding appliances and an optional water
heater. The heater switches on at every off-peak start, unless the night is
skipped, and draws its rated power for a jittered number of intervals; the
last interval may be partial. Optional morning reactivations add a short
plateau late in the off-peak window of a heated night. The water heater
component alone is returned as ground truth.
"""

import dataclasses
import math
import pathlib
from typing import Optional

from absl import logging
from cwh_disagg.common import file
from cwh_disagg.common import utils
from cwh_disagg.metrics import validation
from cwh_disagg.timeseries import load_curve
from cwh_disagg.timeseries import metadata as metadata_lib
from cwh_disagg.timeseries import schedule as schedule_lib
import dataclasses_json
import numpy as np
import pandas as pd

ALIGNMENTS = ('random', 'off_peak_start')
TRUTH_DIR = 'truth'
METADATA_FILE = 'metadata.json'


def _check_probability(name: str, value: float):
  if not 0 <= value <= 1:
    raise ValueError(f'{name} must be in [0, 1], got {value}')


def _check_power(name: str, value: float):
  if value < 0:
    raise ValueError(f'{name} must be >= 0 kW, got {value}')


@dataclasses.dataclass(frozen=True)
class BackgroundConfig(dataclasses_json.DataClassJsonMixin):
  """Non water heater consumption shared by all households."""

  base_kw: float = 0.25

  # Amplitude of the daily sinusoid, peaking at `peak_hour` local time.
  diurnal_kw: float = 0.1
  peak_hour: float = 19.0

  # Scale of the folded normal noise added to every interval.
  noise_kw: float = 0.1

  def __post_init__(self):
    for name in ('base_kw', 'diurnal_kw', 'noise_kw'):
      _check_power(name, getattr(self, name))


@dataclasses.dataclass(frozen=True)
class CwhConfig(dataclasses_json.DataClassJsonMixin):
  """Water heater driven by the off-peak contactor."""

  power_kw: float = 2.4

  # Heating duration in intervals, drawn from N(mean, jitter) and clipped to
  # [1, off-peak window length - 1].
  mean_intervals: float = 4.0
  jitter_intervals: float = 0.5

  # Probability that the heater stays off at an off-peak start.
  skip_probability: float = 0.0

  # Probability, per off-peak start, of a one interval reheat late in the
  # off-peak window.
  reactivation_probability: float = 0.0

  # Whether the last heating interval may be partial.
  fractional_tail: bool = True

  def __post_init__(self):
    _check_power('power_kw', self.power_kw)
    if self.mean_intervals < 1 or self.jitter_intervals < 0:
      raise ValueError(
          f'Invalid duration {self.mean_intervals} +- {self.jitter_intervals}')
    _check_probability('skip_probability', self.skip_probability)
    _check_probability('reactivation_probability',
                       self.reactivation_probability)


@dataclasses.dataclass(frozen=True)
class ConfounderConfig(dataclasses_json.DataClassJsonMixin):
  """Another appliance producing rectangular spikes."""
  power_kw: float = 2.0
  rate_per_day: float = 1.0
  duration_intervals: int = 2
  alignment: str = 'random'

  def __post_init__(self):
    _check_power('power_kw', self.power_kw)
    if self.rate_per_day < 0 or self.duration_intervals < 1:
      raise ValueError(f'Invalid confounder {self}')
    if self.alignment not in ALIGNMENTS:
      raise ValueError(
          f'Alignment must be one of {ALIGNMENTS}, got {self.alignment!r}')


@dataclasses.dataclass(frozen=True)
class ScenarioConfig(dataclasses_json.DataClassJsonMixin):
  """Configuration of one synthetic household."""

  household_id: str = 'synth'
  days: int = 28
  step_min: int = 30

  # Local date of the first interval and timezone of the curve.
  start: str = '2021-10-01'
  timezone: str = 'Europe/Paris'

  off_peak: list[str] = dataclasses.field(
      default_factory=lambda: ['22:30-06:30'])
  background: BackgroundConfig = dataclasses.field(
      default_factory=BackgroundConfig)
  cwh: Optional[CwhConfig] = None
  confounders: list[ConfounderConfig] = dataclasses.field(default_factory=list)

  # Probability that an interval is missing from the meter data.
  missing_probability: float = 0.0

  # Declared water heating type; derived from `cwh` when unset.
  water_heating_type: Optional[str] = None
  seed: int = 0

  def __post_init__(self):
    if self.days < 1 or self.step_min < 1:
      raise ValueError(f'Invalid length {self.days} days x {self.step_min} min')
    _check_probability('missing_probability', self.missing_probability)
    self.schedule()

  def schedule(self) -> schedule_lib.OffPeakSchedule:
    return schedule_lib.OffPeakSchedule.parse(self.off_peak, self.step_min)

  @property
  def step(self) -> pd.Timedelta:
    return pd.Timedelta(minutes=self.step_min)


@dataclasses.dataclass(frozen=True, eq=False)
class Scenario:
  """A generated household: meter curve, truth and metadata."""
  curve: load_curve.LoadCurve
  truth: validation.GroundTruth
  metadata: metadata_lib.HouseholdMetadata
  # Interval positions where the water heater was switched on.
  cwh_starts: list[int] = dataclasses.field(default_factory=list)
  reactivation_starts: list[int] = dataclasses.field(default_factory=list)


def _background(
    config: BackgroundConfig,
    minutes: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
  phase = 2 * np.pi * (minutes / 60 - config.peak_hour) / 24
  level = np.maximum(config.base_kw + config.diurnal_kw * np.cos(phase), 0)
  return level + np.abs(rng.normal(0, config.noise_kw, size=minutes.size))


def _window_intervals(schedule: schedule_lib.OffPeakSchedule,
                      step_min: int) -> dict[float, int]:
  """Off-peak window length in intervals, keyed by start minute."""
  return {
      float(i.start_min): max(1, int(i.duration_min // step_min))
      for i in schedule.intervals
  }


def _add_cwh(
    config: CwhConfig,
    starts: np.ndarray,
    windows: np.ndarray,
    n: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, list[int], list[int]]:
  """Water heater power per interval, with its switch-on positions."""
  power = np.zeros(n)
  heated, reheated = [], []
  for start, window in zip(starts, windows):
    skip = rng.random() < config.skip_probability
    duration = rng.normal(config.mean_intervals, config.jitter_intervals)
    reheat = rng.random() < config.reactivation_probability
    reheat_offset = int(rng.integers(1, 3))
    reheat_scale = rng.uniform(0.3, 1.0)

    end = start
    if not skip:
      duration = float(np.clip(duration, 1, max(1, window - 1)))
      if not config.fractional_tail:
        duration = round(duration)
      full = math.floor(duration)
      end = min(start + full, n)
      power[start:end] = config.power_kw
      tail = duration - full
      if tail > 0 and end < n:
        power[end] = tail * config.power_kw
        end += 1
      heated.append(int(start))

    # Water drawn during a heated night; kept only when separated from the
    # main plateau.
    position = start + window - reheat_offset
    if not skip and reheat and position > end and position < n:
      power[position] = reheat_scale * config.power_kw
      reheated.append(int(position))
  return power, heated, reheated


def _add_confounders(
    confounders: list[ConfounderConfig],
    starts: np.ndarray,
    days: int,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
  power = np.zeros(n)
  for c in confounders:
    count = int(rng.poisson(c.rate_per_day * days))
    if c.alignment == 'random':
      positions = rng.integers(0, max(1, n - c.duration_intervals + 1),
                               size=count)
    elif starts.size:
      positions = rng.choice(starts, size=count)
    else:
      positions = np.zeros(0, dtype=int)
    for p in positions:
      power[p:p + c.duration_intervals] += c.power_kw
  return power


def generate(config: ScenarioConfig) -> Scenario:
  """Generates one household, deterministically from `config.seed`.

  Args:
    config: Scenario description.

  Returns:
    The generated Scenario. Its curve equals background plus confounders plus
    the ground truth at every present interval.
  """
  rng = np.random.default_rng(config.seed)
  schedule = config.schedule()
  start = pd.Timestamp(config.start, tz=config.timezone)
  n = int(round(pd.Timedelta(days=config.days) / config.step))
  stamps = pd.date_range(start, periods=n, freq=config.step)
  minutes = (stamps.hour * 60 + stamps.minute).to_numpy(dtype=np.float64)

  windows_by_start = _window_intervals(schedule, config.step_min)
  is_start = np.isin(minutes, list(windows_by_start))
  starts = np.flatnonzero(is_start)
  windows = np.array([windows_by_start[m] for m in minutes[starts]], dtype=int)

  background = _background(config.background, minutes, rng)
  background += _add_confounders(config.confounders, starts, config.days, n,
                                 rng)
  if config.cwh is not None:
    cwh, heated, reheated = _add_cwh(config.cwh, starts, windows, n, rng)
  else:
    cwh, heated, reheated = np.zeros(n), [], []

  values = background + cwh
  missing = rng.random(n) < config.missing_probability
  values[missing] = np.nan

  water_heating_type = config.water_heating_type
  if water_heating_type is None:
    water_heating_type = 'elec' if config.cwh is not None else 'gas'
  curve = load_curve.LoadCurve(config.household_id, start, config.step, values)
  truth = validation.GroundTruth(config.household_id, start, config.step, cwh)
  metadata = metadata_lib.HouseholdMetadata(
      household_id=config.household_id,
      off_peak=schedule.to_strings(),
      water_heating_type=water_heating_type,
  )
  return Scenario(curve, truth, metadata, heated, reheated)


def write_scenario(scenario: Scenario, out_dir: file.PathLike):
  """Writes `<id>.csv` and `truth/<id>.csv` under `out_dir`."""
  out_dir = pathlib.Path(out_dir)
  household_id = scenario.curve.household_id
  file.write_text(out_dir / f'{household_id}.csv', scenario.curve.to_csv())
  file.write_text(out_dir / TRUTH_DIR / f'{household_id}.csv',
                  scenario.truth.to_csv())


@dataclasses.dataclass(frozen=True)
class FleetConfig(dataclasses_json.DataClassJsonMixin):
  """A population of synthetic households.

  Household i is generated from a ScenarioConfig drawn with seed (seed, i), so
  each household is reproducible on its own.
  """
  households: int = 100
  cwh_share: float = 0.6
  days: int = 28
  seed: int = 0
  off_peak_choices: list[str] = dataclasses.field(
      default_factory=lambda: ['22:30-06:30', '23:00-07:00', '22:00-06:00'])
  background: BackgroundConfig = dataclasses.field(
      default_factory=BackgroundConfig)
  cwh_power_range_kw: tuple[float, float] = (1.0, 3.3)
  cwh_duration_range: tuple[float, float] = (2.0, 8.0)
  skip_probability: float = 0.05
  reactivation_probability: float = 0.1
  confounder_power_range_kw: tuple[float, float] = (1.0, 3.0)
  confounder_rate_per_day: float = 1.0
  missing_probability: float = 0.0

  def __post_init__(self):
    if self.households < 0:
      raise ValueError(f'Negative household count {self.households}')
    _check_probability('cwh_share', self.cwh_share)


def household_id(index: int) -> str:
  return f'h{index:04d}'


def scenario_for(fleet: FleetConfig, index: int) -> ScenarioConfig:
  """Draws the configuration of household `index` of `fleet`."""
  rng = np.random.default_rng([fleet.seed, index])
  has_cwh = index < round(fleet.cwh_share * fleet.households)
  cwh = None
  if has_cwh:
    cwh = CwhConfig(
        power_kw=float(rng.uniform(*fleet.cwh_power_range_kw)),
        mean_intervals=float(rng.uniform(*fleet.cwh_duration_range)),
        skip_probability=fleet.skip_probability,
        reactivation_probability=fleet.reactivation_probability,
    )
  confounders = [
      ConfounderConfig(
          power_kw=float(rng.uniform(*fleet.confounder_power_range_kw)),
          rate_per_day=fleet.confounder_rate_per_day,
          duration_intervals=int(rng.integers(1, 4)),
      )
  ] if fleet.confounder_rate_per_day > 0 else []
  water_heating_type = 'elec' if has_cwh else str(
      rng.choice(['gas', 'other']))
  return ScenarioConfig(
      household_id=household_id(index),
      days=fleet.days,
      off_peak=str(rng.choice(fleet.off_peak_choices)).split(','),
      background=fleet.background,
      cwh=cwh,
      confounders=confounders,
      missing_probability=fleet.missing_probability,
      water_heating_type=water_heating_type,
      seed=int(rng.integers(2**31)),
  )


def generate_fleet(
    fleet: FleetConfig,
    out_dir: file.PathLike,
) -> metadata_lib.DatasetMetadata:
  """Writes a dataset directory: household CSVs, truth CSVs and metadata.

  Args:
    fleet: Population description.
    out_dir: Output directory, created as needed.

  Returns:
    The dataset metadata, also written to `metadata.json`.
  """
  out_dir = pathlib.Path(out_dir)
  households = []
  with utils.report_time('generate_fleet'):
    for i in range(fleet.households):
      scenario = generate(scenario_for(fleet, i))
      write_scenario(scenario, out_dir)
      households.append(scenario.metadata)
  dataset = metadata_lib.DatasetMetadata(households)
  file.save_dataclass_json(dataset, out_dir / METADATA_FILE)
  file.save_dataclass_json(fleet, out_dir / 'fleet.json')
  logging.info('Wrote %d households to %s', fleet.households, out_dir)
  return dataset
