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
"""Detection and disaggregation over a dataset directory.

A dataset is a directory of `<household_id>.csv` load curves plus a metadata
file. Households are gated on metadata (known off-peak hours, off-peak
contract) and on data volume before detection; every household yields one
HouseholdOutcome, skipped ones carrying their skip reason.
"""

import concurrent.futures
import pathlib
from typing import Any, Optional

from absl import logging
from cwh_disagg.common import counters as counters_lib
from cwh_disagg.common import file
from cwh_disagg.common import utils
from cwh_disagg.detection import classifier
from cwh_disagg.detection import config as config_lib
from cwh_disagg.disaggregation import attribution
from cwh_disagg.pipeline import report
from cwh_disagg.timeseries import load_curve
from cwh_disagg.timeseries import metadata as metadata_lib
from cwh_disagg.timeseries import schedule as schedule_lib
import pandas as pd

SKIP_COUNTER_PREFIX = 'skipped/'
DETECTIONS_DIR = 'detections'

# Skip reasons.
NO_METADATA = 'no_metadata'
NO_OFF_PEAK_CONTRACT = 'no_off_peak_contract'
UNKNOWN_OFF_PEAK = 'unknown_off_peak'
INVALID_CONFIG = 'invalid_config'
UNREADABLE = 'unreadable'
INELIGIBLE = 'ineligible'


def list_households(data_dir: file.PathLike) -> list[pathlib.Path]:
  """Household CSVs directly under `data_dir`, sorted by household id."""
  return sorted(pathlib.Path(data_dir).glob('*.csv'), key=lambda p: p.stem)


def _skip(
    household_id: str,
    reason: str,
    counters: counters_lib.ThreadsafeCounterStore,
    meta: Optional[metadata_lib.HouseholdMetadata] = None,
    detail: str = '',
) -> report.HouseholdOutcome:
  counters.inc(SKIP_COUNTER_PREFIX + reason)
  logging.warning('Skipping %s: %s%s', household_id, reason,
                  f' ({detail})' if detail else '')
  return report.HouseholdOutcome(
      household_id,
      meta.heating_group if meta else 'unknown',
      skip_reason=reason,
      off_peak=list(meta.off_peak) if meta else [],
  )


def process_household(
    path: file.PathLike,
    meta: Optional[metadata_lib.HouseholdMetadata],
    base_config: config_lib.DetectionConfig,
    flag_overrides: Optional[dict[str, Any]] = None,
    tz: str = load_curve.DEFAULT_TIMEZONE,
    step: pd.Timedelta = load_curve.DEFAULT_STEP,
    counters: Optional[counters_lib.ThreadsafeCounterStore] = None,
    detections_dir: Optional[file.PathLike] = None,
    strict_schedule: bool = False,
) -> report.HouseholdOutcome:
  """Runs the gates, detection and disaggregation for one household.

  Args:
    path: Household CSV.
    meta: Household metadata, None when the metadata file has no entry.
    base_config: Configuration from the config file or the defaults.
    flag_overrides: Command-line overrides, applied after the metadata ones.
    tz: Timezone for naive timestamps.
    step: Sampling step of the curve.
    counters: Skip counters.
    detections_dir: When set, the DetectionResult is written there as
      `<household_id>.json`.
    strict_schedule: Require off-peak hours to total exactly eight hours.

  Returns:
    The household outcome.
  """
  path = pathlib.Path(path)
  household_id = path.stem
  counters = counters or counters_lib.ThreadsafeCounterStore()
  if meta is None:
    return _skip(household_id, NO_METADATA, counters)
  if not meta.off_peak_contract:
    return _skip(household_id, NO_OFF_PEAK_CONTRACT, counters, meta)
  try:
    schedule = meta.off_peak_schedule(resolution_min=1, strict=strict_schedule)
  except schedule_lib.ScheduleError as e:
    return _skip(household_id, UNKNOWN_OFF_PEAK, counters, meta, str(e))
  try:
    config = config_lib.resolve(base_config, meta.detection, flag_overrides)
  except ValueError as e:
    return _skip(household_id, INVALID_CONFIG, counters, meta, str(e))
  try:
    curve = load_curve.read_load_curve(str(path), tz, step, household_id)
  except (OSError, ValueError) as e:
    return _skip(household_id, UNREADABLE, counters, meta, str(e))
  if not load_curve.is_eligible(curve, config.min_samples_per_month):
    return _skip(
        household_id, INELIGIBLE, counters, meta,
        f'{int(curve.present.sum())} samples < '
        f'{load_curve.required_samples(curve, config.min_samples_per_month)}')
  schedule_lib.warn_off_grid_starts(schedule, curve.step_minutes, household_id)

  result = classifier.detect_cwh(curve, schedule, config)
  if detections_dir is not None:
    file.save_dataclass_json(
        result, pathlib.Path(detections_dir) / f'{household_id}.json')
  attr = attribution.attribute(curve, result)
  cwh_kwh = float(attr.energy_kwh().sum())
  total_kwh = float(curve.energy_kwh().sum())
  try:
    daily, overall = attribution.consumption_fractions(curve, attr)
  except attribution.UndefinedFractionError as e:
    logging.warning('%s', e)
    daily, overall = [], None
  return report.HouseholdOutcome(
      household_id=household_id,
      water_heating_type=meta.heating_group,
      found=result.found,
      mode_kw=result.cluster.mode_kw if result.cluster else None,
      n_cwh_spikes=len(result.cwh_spikes),
      cwh_kwh=cwh_kwh,
      total_kwh=total_kwh,
      overall_fraction=overall,
      daily_fractions=[d.fraction for d in daily],
      off_peak=schedule.to_strings(),
  )


def run_batch(
    data_dir: file.PathLike,
    dataset: metadata_lib.DatasetMetadata,
    out_dir: file.PathLike,
    base_config: config_lib.DetectionConfig = config_lib.DetectionConfig(),
    flag_overrides: Optional[dict[str, Any]] = None,
    workers: int = 1,
    tz: str = load_curve.DEFAULT_TIMEZONE,
    step: pd.Timedelta = load_curve.DEFAULT_STEP,
    strict_schedule: bool = False,
) -> report.BatchSummary:
  """Processes every household CSV of `data_dir` and writes the report.

  Outcomes are merged in household id order whatever the worker count, so
  outputs do not depend on scheduling.

  Args:
    data_dir: Directory of household CSVs.
    dataset: Metadata of the households.
    out_dir: Output directory for outcomes, summary and figure tables.
    base_config: Configuration from the config file or the defaults.
    flag_overrides: Command-line overrides of `base_config`.
    workers: Households processed concurrently.
    tz: Timezone for naive timestamps.
    step: Sampling step of the curves.
    strict_schedule: Require off-peak hours to total exactly eight hours.

  Returns:
    The batch summary, also written to `summary.json`.
  """
  out_dir = pathlib.Path(out_dir)
  paths = list_households(data_dir)
  by_id = dataset.by_id()
  counters = counters_lib.ThreadsafeCounterStore()
  logging.info('Processing %d households from %s with %d workers', len(paths),
               data_dir, workers)

  def process(path: pathlib.Path) -> report.HouseholdOutcome:
    with counters.timer_counter('household'):
      return process_household(path, by_id.get(path.stem), base_config,
                               flag_overrides, tz, step, counters,
                               out_dir / DETECTIONS_DIR, strict_schedule)

  with utils.report_time('batch'):
    with concurrent.futures.ThreadPoolExecutor(max(1, workers)) as executor:
      outcomes = list(executor.map(process, paths))

  counters.log_counters(SKIP_COUNTER_PREFIX)
  report.save_outcomes(outcomes, out_dir / report.OUTCOMES_FILE)
  summary = report.write_report(outcomes, out_dir)
  if summary.processed + summary.skipped != summary.total:
    raise AssertionError('Batch counts do not reconcile')
  return summary
