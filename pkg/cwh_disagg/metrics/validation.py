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
"""Validation of water heater disaggregation against measured ground truth.

Two views are compared: intervals, where the device counts as on when its
average power exceeds a threshold (100 W by default), and activations, the
maximal runs of such intervals, matched one-to-one by temporal overlap.
"""

import dataclasses
import io
from typing import Optional, Sequence

from cwh_disagg.common import file
from cwh_disagg.common import utils
from cwh_disagg.detection import detector
from cwh_disagg.disaggregation import attribution
from cwh_disagg.timeseries import load_curve
import numpy as np
import pandas as pd
from sklearn import metrics

TRUTH_CSV_COLUMNS = ('timestamp', 'cwh_power_kw')
ACTIVE_THRESHOLD_KW = 0.1


class AlignmentError(ValueError):
  """Raised when prediction and ground truth do not share a time base."""


def _ratio(numerator: int, denominator: int) -> Optional[float]:
  return numerator / denominator if denominator else None


@dataclasses.dataclass(frozen=True)
class ConfusionMatrix(utils.NPDataClassJsonMixin):
  """Interval-level confusion counts.

  Precision and recall are None when their denominator is zero.
  """
  tp: int
  tn: int
  fp: int
  fn: int
  precision: Optional[float] = dataclasses.field(init=False)
  recall: Optional[float] = dataclasses.field(init=False)

  def __post_init__(self):
    object.__setattr__(self, 'precision', _ratio(self.tp, self.tp + self.fp))
    object.__setattr__(self, 'recall', _ratio(self.tp, self.tp + self.fn))

  @property
  def total(self) -> int:
    return self.tp + self.tn + self.fp + self.fn


@dataclasses.dataclass(frozen=True, eq=False)
class GroundTruth:
  """Measured water heater power on the time base of a LoadCurve.

  Attributes:
    household_id: Household of the paired curve.
    start: Start of the first interval.
    step: Interval length.
    cwh_power: Average device power per interval in kW; NaN where the sensor
      has no data.
  """
  household_id: str
  start: pd.Timestamp
  step: pd.Timedelta
  cwh_power: np.ndarray

  def __post_init__(self):
    values = np.asarray(self.cwh_power, dtype=np.float64)
    if np.any(values[~np.isnan(values)] < 0):
      raise ValueError('Ground truth power must be >= 0 kW')
    object.__setattr__(self, 'cwh_power', values)

  def __len__(self) -> int:
    return self.cwh_power.size

  @property
  def timestamps(self) -> pd.DatetimeIndex:
    return pd.date_range(self.start, periods=len(self), freq=self.step)

  def to_csv(self) -> str:
    frame = pd.DataFrame({
        'timestamp': [t.isoformat() for t in self.timestamps],
        'cwh_power_kw': self.cwh_power,
    })
    return frame.to_csv(index=False, lineterminator='\n')

  @classmethod
  def from_csv(
      cls,
      csv_text: str,
      curve: load_curve.LoadCurve,
  ) -> 'GroundTruth':
    """Parses `timestamp,cwh_power_kw` at any resolution finer than the meter.

    Samples are averaged into the intervals of `curve`; samples outside the
    curve are ignored and intervals without samples are NaN.

    Args:
      csv_text: CSV contents.
      curve: Load curve providing the time base.

    Returns:
      Ground truth aligned with `curve`.

    Raises:
      load_curve.SchemaError: on a malformed CSV or non-numeric power.
    """
    try:
      frame = pd.read_csv(
          io.StringIO(csv_text),
          dtype={'timestamp': str},
          float_precision='round_trip',
      )
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
      raise load_curve.SchemaError(f'Malformed ground truth CSV: {e}') from e
    if tuple(frame.columns) != TRUTH_CSV_COLUMNS:
      raise load_curve.SchemaError(
          f'Expected header {",".join(TRUTH_CSV_COLUMNS)}, got '
          f'{list(frame.columns)}')
    values = np.full(len(curve), np.nan)
    if not frame.empty:
      stamps = load_curve.parse_timestamps(frame['timestamp'], curve.timezone)
      step_ns = int(curve.step / pd.Timedelta(nanoseconds=1))
      positions = (stamps.asi8 - curve.start.value) // step_ns
      try:
        power = pd.to_numeric(frame['cwh_power_kw'], errors='raise')
      except (ValueError, TypeError) as e:
        raise load_curve.SchemaError(
            f'Non-numeric ground truth power value: {e}') from e
      power = pd.Series(power.to_numpy(dtype=np.float64), index=positions)
      inside = (positions >= 0) & (positions < len(curve))
      means = power[inside].groupby(level=0).mean()
      values[means.index.to_numpy()] = means.to_numpy()
    return cls(curve.household_id, curve.start, curve.step, values)


def read_ground_truth(
    path: file.PathLike, curve: load_curve.LoadCurve) -> GroundTruth:
  return GroundTruth.from_csv(file.read_text(path), curve)


def _check_aligned(pred: attribution.AttributionSeries, truth: GroundTruth):
  if len(pred) != len(truth):
    raise AlignmentError(
        f'Prediction has {len(pred)} intervals, ground truth {len(truth)}')
  if len(pred) and (pred.start != truth.start or pred.step != truth.step):
    raise AlignmentError(
        f'Prediction starts at {pred.start} every {pred.step}, ground truth '
        f'at {truth.start} every {truth.step}')


def interval_confusion(
    pred: attribution.AttributionSeries,
    truth: GroundTruth,
    threshold: float = ACTIVE_THRESHOLD_KW,
) -> ConfusionMatrix:
  """Compares device on/off states interval by interval.

  Intervals where the ground truth is missing are not compared.

  Args:
    pred: Attributed power.
    truth: Measured power.
    threshold: Power above which the device counts as on, in kW.

  Returns:
    Confusion counts.

  Raises:
    AlignmentError: if the two series do not share a time base.
  """
  _check_aligned(pred, truth)
  known = ~np.isnan(truth.cwh_power)
  tn, fp, fn, tp = metrics.confusion_matrix(
      truth.cwh_power[known] > threshold,
      pred.cwh_power[known] > threshold,
      labels=[False, True],
  ).ravel()
  return ConfusionMatrix(int(tp), int(tn), int(fp), int(fn))


@dataclasses.dataclass(frozen=True)
class EdgeErrors(utils.NPDataClassJsonMixin):
  """Interval errors split by whether they border a true positive interval.

  Errors at the edge of a correctly detected activation come from imprecise
  activation boundaries; isolated ones are missed or invented activations.
  """
  fp_edge: int = 0
  fp_isolated: int = 0
  fn_edge: int = 0
  fn_isolated: int = 0


def edge_errors(
    pred: attribution.AttributionSeries,
    truth: GroundTruth,
    threshold: float = ACTIVE_THRESHOLD_KW,
) -> EdgeErrors:
  _check_aligned(pred, truth)
  known = ~np.isnan(truth.cwh_power)
  true_on = known & (np.nan_to_num(truth.cwh_power) > threshold)
  pred_on = known & (pred.cwh_power > threshold)
  tp = np.pad(true_on & pred_on, 1)
  next_to_tp = tp[:-2] | tp[2:]
  fp = pred_on & ~true_on
  fn = true_on & ~pred_on
  return EdgeErrors(
      fp_edge=int(np.count_nonzero(fp & next_to_tp)),
      fp_isolated=int(np.count_nonzero(fp & ~next_to_tp)),
      fn_edge=int(np.count_nonzero(fn & next_to_tp)),
      fn_isolated=int(np.count_nonzero(fn & ~next_to_tp)),
  )


def series_activations(
    start: pd.Timestamp,
    step: pd.Timedelta,
    power: np.ndarray,
    threshold: float = ACTIVE_THRESHOLD_KW,
) -> list[attribution.Activation]:
  """Maximal runs of intervals strictly above `threshold` as activations."""
  above = np.nan_to_num(power, nan=0.0) > threshold
  return [
      attribution.Activation.from_interval_powers(start + step * begin, step,
                                                  power[begin:end])
      for begin, end in detector.find_runs(above)
  ]


def truth_activations(
    truth: GroundTruth,
    threshold: float = ACTIVE_THRESHOLD_KW,
) -> list[attribution.Activation]:
  return series_activations(truth.start, truth.step, truth.cwh_power,
                            threshold)


def prediction_activations(
    pred: attribution.AttributionSeries,
    threshold: float = ACTIVE_THRESHOLD_KW,
) -> list[attribution.Activation]:
  return series_activations(pred.start, pred.step, pred.cwh_power, threshold)


@dataclasses.dataclass(frozen=True)
class ActivationMetrics(utils.NPDataClassJsonMixin):
  """Activation-level scores.

  Attributes:
    precision: Matched predictions over all predictions, None without any.
    recall: Matched truths over all truths, None without any.
    matches: (prediction index, truth index) pairs.
  """
  precision: Optional[float]
  recall: Optional[float]
  matches: list[tuple[int, int]] = dataclasses.field(default_factory=list)


def _overlap(a: attribution.Activation, b: attribution.Activation) -> bool:
  return max(a.start, b.start) < min(a.end, b.end)


def activation_metrics(
    pred: Sequence[attribution.Activation],
    truth: Sequence[attribution.Activation],
) -> ActivationMetrics:
  """Matches predicted and true activations one-to-one.

  Predictions are visited in order and each takes the earliest unmatched true
  activation it overlaps.

  Args:
    pred: Predicted activations, chronologically sorted.
    truth: True activations, chronologically sorted.

  Returns:
    Precision, recall and the matched index pairs.
  """
  matched_truth = set()
  matches = []
  for i, p in enumerate(pred):
    for j, t in enumerate(truth):
      if t.start >= p.end:
        break
      if j not in matched_truth and _overlap(p, t):
        matched_truth.add(j)
        matches.append((i, j))
        break
  return ActivationMetrics(
      precision=_ratio(len(matches), len(pred)),
      recall=_ratio(len(matches), len(truth)),
      matches=matches,
  )


@dataclasses.dataclass(frozen=True)
class EnergyPair(utils.NPDataClassJsonMixin):
  """Energy of a matched (predicted, true) activation pair."""
  pred_start: pd.Timestamp = utils.timestamp_field()
  truth_start: pd.Timestamp = utils.timestamp_field()
  pred_kwh: float = 0.0
  truth_kwh: float = 0.0


@dataclasses.dataclass(frozen=True)
class EvaluationReport(utils.NPDataClassJsonMixin):
  """Interval and activation scores of one household."""
  household_id: str
  threshold_kw: float
  intervals: ConfusionMatrix
  edges: EdgeErrors
  activations: ActivationMetrics
  n_pred_activations: int
  n_truth_activations: int
  energy_pairs: list[EnergyPair] = dataclasses.field(default_factory=list)


def evaluate(
    pred: attribution.AttributionSeries,
    truth: GroundTruth,
    threshold: float = ACTIVE_THRESHOLD_KW,
) -> EvaluationReport:
  """Runs both validation views on one household."""
  pred_activations = prediction_activations(pred, threshold)
  true_activations = truth_activations(truth, threshold)
  scores = activation_metrics(pred_activations, true_activations)
  return EvaluationReport(
      household_id=truth.household_id,
      threshold_kw=threshold,
      intervals=interval_confusion(pred, truth, threshold),
      edges=edge_errors(pred, truth, threshold),
      activations=scores,
      n_pred_activations=len(pred_activations),
      n_truth_activations=len(true_activations),
      energy_pairs=[
          EnergyPair(pred_activations[i].start, true_activations[j].start,
                     pred_activations[i].energy_kwh,
                     true_activations[j].energy_kwh)
          for i, j in scores.matches
      ],
  )


def interval_pairs_frame(
    pred: attribution.AttributionSeries,
    truth: GroundTruth,
) -> pd.DataFrame:
  """Per-interval (predicted, true) power, for scatter plots."""
  _check_aligned(pred, truth)
  return pd.DataFrame({
      'timestamp': [t.isoformat() for t in truth.timestamps],
      'pred_kw': pred.cwh_power,
      'truth_kw': truth.cwh_power,
  })


def energy_pairs_frame(report: EvaluationReport) -> pd.DataFrame:
  return pd.DataFrame(
      [[p.pred_start.isoformat(), p.truth_start.isoformat(), p.pred_kwh,
        p.truth_kwh] for p in report.energy_pairs],
      columns=['pred_start', 'truth_start', 'pred_kwh', 'truth_kwh'],
  )


def read_prediction(
    path: file.PathLike,
    curve: load_curve.LoadCurve,
) -> attribution.AttributionSeries:
  """Reads an attribution CSV written by `disaggregate`, on `curve`'s base."""
  parsed = read_ground_truth(path, curve)
  return attribution.AttributionSeries(
      curve.household_id, parsed.start, parsed.step,
      np.nan_to_num(parsed.cwh_power, nan=0.0))
