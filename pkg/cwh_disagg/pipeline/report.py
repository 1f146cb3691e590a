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
"""Batch summaries and figure tables built from per-household outcomes.

Figures are emitted as CSV tables: detection fractions per declared water
heating type, the histogram of detected device power levels annotated with
the low, medium and high power classes, histograms of daily and overall
water heater consumption fractions, and the distribution of off-peak ranges
and declared water heating types over the dataset.
"""

import dataclasses
import pathlib
from typing import Optional, Sequence

from absl import logging
from cwh_disagg.common import file
from cwh_disagg.common import utils
from cwh_disagg.timeseries import schedule as schedule_lib
import dataclasses_json
import numpy as np
import pandas as pd

# (name, low kW, high kW) classes of detected device power.
POWER_CLASSES = (('low', 0.6, 1.5), ('medium', 1.5, 2.7), ('high', 2.7, 3.3))

POWER_BIN_KW = 0.1
POWER_MAX_KW = 5.0
FRACTION_BINS = 20

OUTCOMES_FILE = 'households.json'
SUMMARY_FILE = 'summary.json'
DETECTION_FRACTIONS_CSV = 'detection_fractions.csv'
POWER_HISTOGRAM_CSV = 'power_levels.csv'
DAILY_FRACTIONS_CSV = 'daily_fraction_histogram.csv'
OVERALL_FRACTIONS_CSV = 'overall_fraction_histogram.csv'
HOUSEHOLD_FRACTIONS_CSV = 'household_fractions.csv'
OFF_PEAK_RANGES_CSV = 'off_peak_ranges.csv'
OFF_PEAK_INTERVAL_COUNTS_CSV = 'off_peak_interval_counts.csv'
WATER_HEATING_TYPES_CSV = 'water_heating_types.csv'


@dataclasses.dataclass(frozen=True)
class HouseholdOutcome(utils.NPDataClassJsonMixin):
  """Result of batch processing for one household."""

  household_id: str
  water_heating_type: str = 'unknown'

  # Reason the household was not processed, None when processed.
  skip_reason: Optional[str] = None

  found: bool = False
  mode_kw: Optional[float] = None
  n_cwh_spikes: int = 0

  # Water heater and total energy over the whole curve.
  cwh_kwh: float = 0.0
  total_kwh: float = 0.0
  overall_fraction: Optional[float] = None
  daily_fractions: list[Optional[float]] = dataclasses.field(
      default_factory=list)

  # Declared off-peak ranges, canonical for processed households.
  off_peak: list[str] = dataclasses.field(default_factory=list)

  @property
  def processed(self) -> bool:
    return self.skip_reason is None


@dataclasses.dataclass(frozen=True)
class GroupSummary(dataclasses_json.DataClassJsonMixin):
  households: int = 0
  detections: int = 0
  detection_fraction: Optional[float] = None


@dataclasses.dataclass(frozen=True)
class BatchSummary(utils.NPDataClassJsonMixin):
  """Dataset level results of a batch run.

  Attributes:
    total: Households in the dataset.
    processed: Households that went through detection.
    skipped: Households excluded by a gate or an input error.
    skip_reasons: Skipped household count per reason.
    groups: Detection counts per declared water heating type.
    power_classes: Detected devices per power class, plus 'unclassified'.
    mean_overall_fraction: Mean of per-household overall fractions over
      households with a detected device.
    pooled_overall_fraction: Water heater share of the pooled consumption of
      those households.
  """
  total: int = 0
  processed: int = 0
  skipped: int = 0
  skip_reasons: dict[str, int] = dataclasses.field(default_factory=dict)
  groups: dict[str, GroupSummary] = dataclasses.field(default_factory=dict)
  power_classes: dict[str, int] = dataclasses.field(default_factory=dict)
  mean_overall_fraction: Optional[float] = None
  pooled_overall_fraction: Optional[float] = None


def power_class(power_kw: float) -> Optional[str]:
  """Class of a device power level, None outside of every class.

  A boundary shared by two classes belongs to the higher one.
  """
  for name, low, high in POWER_CLASSES:
    if low <= power_kw < high or (name == 'high' and power_kw == high):
      return name
  return None


def _detected(outcomes: Sequence[HouseholdOutcome]) -> list[HouseholdOutcome]:
  return [o for o in outcomes if o.processed and o.found]


def summarize(outcomes: Sequence[HouseholdOutcome]) -> BatchSummary:
  """Aggregates household outcomes into dataset level counts."""
  processed = [o for o in outcomes if o.processed]
  skip_reasons = {}
  for o in outcomes:
    if not o.processed:
      skip_reasons[o.skip_reason] = skip_reasons.get(o.skip_reason, 0) + 1

  groups = {}
  for name in sorted({o.water_heating_type for o in processed}):
    members = [o for o in processed if o.water_heating_type == name]
    detections = sum(o.found for o in members)
    groups[name] = GroupSummary(len(members), detections,
                                detections / len(members))

  detected = _detected(outcomes)
  classes = {name: 0 for name, _, _ in POWER_CLASSES}
  for o in detected:
    name = power_class(o.mode_kw) or 'unclassified'
    classes[name] = classes.get(name, 0) + 1

  fractions = [
      o.overall_fraction for o in detected if o.overall_fraction is not None
  ]
  pooled_total = sum(o.total_kwh for o in detected)
  return BatchSummary(
      total=len(outcomes),
      processed=len(processed),
      skipped=len(outcomes) - len(processed),
      skip_reasons=dict(sorted(skip_reasons.items())),
      groups=groups,
      power_classes=classes,
      mean_overall_fraction=float(np.mean(fractions)) if fractions else None,
      pooled_overall_fraction=(sum(o.cwh_kwh for o in detected) /
                               pooled_total if pooled_total > 0 else None),
  )


def detection_fractions_frame(summary: BatchSummary) -> pd.DataFrame:
  return pd.DataFrame(
      [[name, g.households, g.detections, g.detection_fraction]
       for name, g in summary.groups.items()],
      columns=['water_heating_type', 'households', 'detections',
               'detection_fraction'])


def power_histogram_frame(
    outcomes: Sequence[HouseholdOutcome],
    bin_kw: float = POWER_BIN_KW,
    max_kw: float = POWER_MAX_KW,
) -> pd.DataFrame:
  """Histogram of detected device modes, each bin labeled with its class."""
  edges = np.linspace(0, max_kw, int(round(max_kw / bin_kw)) + 1)
  modes = [o.mode_kw for o in _detected(outcomes)]
  counts, _ = np.histogram(modes, bins=edges)
  return pd.DataFrame({
      'bin_low_kw': edges[:-1],
      'bin_high_kw': edges[1:],
      'count': counts,
      'power_class': [power_class(e + bin_kw / 2) or '' for e in edges[:-1]],
  })


def fraction_histogram_frame(
    fractions: Sequence[float],
    bins: int = FRACTION_BINS,
) -> pd.DataFrame:
  edges = np.linspace(0, 1, bins + 1)
  counts, _ = np.histogram(np.asarray(fractions, dtype=np.float64), bins=edges)
  return pd.DataFrame({
      'bin_low': edges[:-1],
      'bin_high': edges[1:],
      'count': counts,
  })


def household_fractions_frame(
    outcomes: Sequence[HouseholdOutcome]) -> pd.DataFrame:
  return pd.DataFrame(
      [[o.household_id, o.water_heating_type, o.mode_kw, o.overall_fraction,
        o.cwh_kwh, o.total_kwh] for o in _detected(outcomes)],
      columns=['household_id', 'water_heating_type', 'mode_kw',
               'overall_fraction', 'cwh_kwh', 'total_kwh'])


def _split_ranges(o: HouseholdOutcome) -> list[tuple[float, float]]:
  schedule = schedule_lib.OffPeakSchedule.parse(o.off_peak, resolution_min=1)
  return schedule.split_at_midnight()


def off_peak_ranges_frame(
    outcomes: Sequence[HouseholdOutcome]) -> pd.DataFrame:
  """Processed households per off-peak range, split at midnight.

  A household contributes once to every (start, end) hour pair of its
  schedule; `share` is relative to the processed households.
  """
  processed = [o for o in outcomes if o.processed and o.off_peak]
  counts = {}
  for o in processed:
    for pair in set(_split_ranges(o)):
      counts[pair] = counts.get(pair, 0) + 1
  rows = [[start, end, n, n / len(processed)]
          for (start, end), n in sorted(counts.items())]
  return pd.DataFrame(
      rows, columns=['start_h', 'end_h', 'households', 'share'])


def off_peak_interval_counts_frame(
    outcomes: Sequence[HouseholdOutcome]) -> pd.DataFrame:
  """Processed households per number of daily off-peak intervals.

  Intervals are counted after splitting at midnight, so 22:30-06:30 counts as
  two.
  """
  processed = [o for o in outcomes if o.processed and o.off_peak]
  counts = {}
  for o in processed:
    n = len(_split_ranges(o))
    counts[n] = counts.get(n, 0) + 1
  return pd.DataFrame(
      [[n, c, c / len(processed)] for n, c in sorted(counts.items())],
      columns=['intervals', 'households', 'share'])


def water_heating_types_frame(
    outcomes: Sequence[HouseholdOutcome]) -> pd.DataFrame:
  """Households per declared water heating type, skipped ones included."""
  rows = []
  for name in sorted({o.water_heating_type for o in outcomes}):
    members = [o for o in outcomes if o.water_heating_type == name]
    processed = sum(o.processed for o in members)
    rows.append([name, len(members), processed, len(members) - processed])
  return pd.DataFrame(
      rows,
      columns=['water_heating_type', 'households', 'processed', 'skipped'])


def _write_csv(frame: pd.DataFrame, path: pathlib.Path):
  file.write_text(
      path,
      frame.to_csv(
          index=False, float_format=utils.FLOAT_FORMAT, lineterminator='\n'))


def write_report(
    outcomes: Sequence[HouseholdOutcome],
    out_dir: file.PathLike,
) -> BatchSummary:
  """Writes the summary and every figure table under `out_dir`.

  Args:
    outcomes: Per-household outcomes, in any order.
    out_dir: Output directory, created as needed.

  Returns:
    The batch summary.
  """
  out_dir = pathlib.Path(out_dir)
  outcomes = sorted(outcomes, key=lambda o: o.household_id)
  summary = summarize(outcomes)
  file.save_dataclass_json(summary, out_dir / SUMMARY_FILE)

  detected = _detected(outcomes)
  daily = [
      f for o in detected for f in o.daily_fractions if f is not None
  ]
  overall = [
      o.overall_fraction for o in detected if o.overall_fraction is not None
  ]
  _write_csv(detection_fractions_frame(summary),
             out_dir / DETECTION_FRACTIONS_CSV)
  _write_csv(power_histogram_frame(outcomes), out_dir / POWER_HISTOGRAM_CSV)
  _write_csv(fraction_histogram_frame(daily), out_dir / DAILY_FRACTIONS_CSV)
  _write_csv(fraction_histogram_frame(overall), out_dir / OVERALL_FRACTIONS_CSV)
  _write_csv(household_fractions_frame(outcomes),
             out_dir / HOUSEHOLD_FRACTIONS_CSV)
  _write_csv(off_peak_ranges_frame(outcomes), out_dir / OFF_PEAK_RANGES_CSV)
  _write_csv(off_peak_interval_counts_frame(outcomes),
             out_dir / OFF_PEAK_INTERVAL_COUNTS_CSV)
  _write_csv(water_heating_types_frame(outcomes),
             out_dir / WATER_HEATING_TYPES_CSV)
  logging.info('Report for %d households (%d processed) written to %s',
               summary.total, summary.processed, out_dir)
  return summary


@dataclasses.dataclass(frozen=True)
class OutcomeList(utils.NPDataClassJsonMixin):
  households: list[HouseholdOutcome] = dataclasses.field(default_factory=list)


def save_outcomes(outcomes: Sequence[HouseholdOutcome],
                  path: file.PathLike):
  file.save_dataclass_json(
      OutcomeList(sorted(outcomes, key=lambda o: o.household_id)), path)


def load_outcomes(path: file.PathLike) -> list[HouseholdOutcome]:
  return file.load_dataclass_json(OutcomeList, path).households
