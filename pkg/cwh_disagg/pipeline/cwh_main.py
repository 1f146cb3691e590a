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
r"""Water heater detection, disaggregation and validation from load curves.

The first positional argument selects the command:

  detect        Detect the water heater of one household.
  disaggregate  Attribute per-interval power and consumption fractions.
  evaluate      Compare an attribution with measured ground truth.
  batch         Process a dataset directory and write its report.
  report        Rebuild figure tables from a batch output directory.
  simulate      Generate synthetic households with ground truth.
  anonymize     Add exponential noise to a load curve.

Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

Example usage:

  python3 cwh_disagg/pipeline/cwh_main.py detect \
        --input household.csv --off_peak 22:30-06:30 \
        --expected_range 0.8:5.0 --output detection.json

  python3 cwh_disagg/pipeline/cwh_main.py batch \
        --data_dir dataset/ --output_dir results/ --workers 8
"""

import pathlib
from typing import Any, Callable, Optional, Sequence

from absl import app
from absl import flags
from absl import logging
from cwh_disagg.common import file
from cwh_disagg.common import utils
from cwh_disagg.detection import classifier
from cwh_disagg.detection import config as config_lib
from cwh_disagg.detection import detector
from cwh_disagg.detection import kde
from cwh_disagg.disaggregation import attribution
from cwh_disagg.metrics import validation
from cwh_disagg.pipeline import batch
from cwh_disagg.pipeline import report
from cwh_disagg.synth import anonymize
from cwh_disagg.synth import generator
from cwh_disagg.timeseries import load_curve
from cwh_disagg.timeseries import metadata as metadata_lib
from cwh_disagg.timeseries import schedule as schedule_lib
import pandas as pd

EXIT_DATA_ERROR = 2

_INPUT = flags.DEFINE_string(
    'input', None, 'Household load curve CSV with header timestamp,power_kw.')
_HOUSEHOLD_ID = flags.DEFINE_string(
    'household_id', None, 'Household id; defaults to the --input file stem.')
_OUTPUT = flags.DEFINE_string('output', None, 'Output file.')
_OUTPUT_DIR = flags.DEFINE_string('output_dir', None, 'Output directory.')
_TZ = flags.DEFINE_string(
    'tz', load_curve.DEFAULT_TIMEZONE,
    'Timezone of naive timestamps and of civil days. Defaults to the '
    'CWH_DISAGG_TZ environment variable, or Europe/Paris.')
_STEP_MIN = flags.DEFINE_integer('step_min', 30,
                                 'Sampling step of the load curves in minutes.')

_OFF_PEAK = flags.DEFINE_list(
    'off_peak', None, 'Daily off-peak ranges as HH:MM-HH:MM, comma separated. '
    'Takes precedence over --metadata.')
_METADATA = flags.DEFINE_string(
    'metadata', None,
    'Dataset metadata JSON with off-peak ranges, water heating type and '
    'per-household detection overrides. For batch, defaults to '
    '<data_dir>/metadata.json.')
_STRICT_SCHEDULE = flags.DEFINE_bool(
    'strict_schedule', False,
    'Reject off-peak schedules that do not total exactly eight hours.')

_CONFIG = flags.DEFINE_string(
    'config', None, 'JSON DetectionConfig, or path to JSON config.')
_EXPECTED_RANGE = flags.DEFINE_string(
    'expected_range', None, 'Device power range LOW:HIGH in kW.')
_WINDOW_DAYS = flags.DEFINE_float('window_days', None,
                                  'Observation length in days.')
_GRID_POINTS = flags.DEFINE_integer('grid_points', None,
                                    'Density evaluation grid size.')
_MIN_SUPPORT = flags.DEFINE_integer(
    'min_support', None, 'Aligned spikes required in the device cluster.')
_MINIMUM_STRATEGY = flags.DEFINE_enum(
    'minimum_strategy', None, [s.value for s in kde.MinimumStrategy],
    'How candidate valleys of the spike power density are ranked.')
_CLUSTER_BOUND = flags.DEFINE_enum(
    'cluster_bound', None, [b.value for b in config_lib.ClusterBound],
    'Which valley bounds the device cluster from below.')
_ALIGNMENT_TOLERANCE_MIN = flags.DEFINE_float(
    'alignment_tolerance_min', None,
    'Largest distance in minutes between a spike start and an off-peak start '
    'for the spike to count as aligned.')

_SPIKES_OUTPUT = flags.DEFINE_string(
    'spikes_output', None, 'detect: optional CSV dump of every spike.')
_DETECTION = flags.DEFINE_string(
    'detection', None,
    'DetectionResult JSON written by detect. Detection is rerun when unset.')
_FRACTIONS_OUTPUT = flags.DEFINE_string(
    'fractions_output', None,
    'disaggregate: optional CSV of daily and overall consumption fractions.')

_TRUTH = flags.DEFINE_string(
    'truth', None, 'Ground truth CSV with header timestamp,cwh_power_kw.')
_PRED = flags.DEFINE_string(
    'pred', None,
    'Attribution CSV written by disaggregate. Computed from --input when '
    'unset.')
_THRESHOLD_KW = flags.DEFINE_float(
    'threshold_kw', validation.ACTIVE_THRESHOLD_KW,
    'Power above which the water heater counts as on.')
_SCATTER_DIR = flags.DEFINE_string(
    'scatter_dir', None,
    'evaluate: optional directory for interval and activation energy pairs.')

_DATA_DIR = flags.DEFINE_string('data_dir', None,
                                'Directory of household CSVs.')
_WORKERS = flags.DEFINE_integer('workers', 1,
                                'Households processed concurrently.')
_BATCH_DIR = flags.DEFINE_string('batch_dir', None,
                                 'report: output directory of a batch run.')

_SCENARIO = flags.DEFINE_string(
    'scenario', None, 'JSON ScenarioConfig, or path to JSON config.')
_FLEET = flags.DEFINE_string('fleet', None,
                             'JSON FleetConfig, or path to JSON config.')
_SEED = flags.DEFINE_integer('seed', None, 'Random seed.')


def _required(flag: flags.FlagHolder, command: str) -> Any:
  if flag.value is None:
    raise app.UsageError(f'--{flag.name} is required by {command}')
  return flag.value


def _step() -> pd.Timedelta:
  return pd.Timedelta(minutes=_STEP_MIN.value)


def flag_overrides() -> dict[str, Any]:
  """DetectionConfig overrides given on the command line."""
  overrides = {
      'window_days': _WINDOW_DAYS.value,
      'min_support': _MIN_SUPPORT.value,
      'minimum_strategy': _MINIMUM_STRATEGY.value,
      'cluster_bound': _CLUSTER_BOUND.value,
      'alignment_tolerance_min': _ALIGNMENT_TOLERANCE_MIN.value,
  }
  if _EXPECTED_RANGE.value is not None:
    try:
      low, high = config_lib.parse_expected_range(_EXPECTED_RANGE.value)
    except ValueError as e:
      raise app.UsageError(str(e)) from e
    overrides.update(expected_low_kw=low, expected_high_kw=high)
  if _GRID_POINTS.value is not None:
    overrides['kde'] = {'grid_points': _GRID_POINTS.value}
  return overrides


def base_config() -> config_lib.DetectionConfig:
  """Configuration from --config, or the built-in defaults."""
  if _CONFIG.value is None:
    return config_lib.DetectionConfig()
  return file.load_dataclass(config_lib.DetectionConfig, _CONFIG.value)


def _load_dataset(path: Optional[str]) -> metadata_lib.DatasetMetadata:
  if path is None:
    return metadata_lib.DatasetMetadata()
  return file.load_dataclass_json(metadata_lib.DatasetMetadata, path)


def _read_curve(command: str) -> load_curve.LoadCurve:
  return load_curve.read_load_curve(
      _required(_INPUT, command), _TZ.value, _step(), _HOUSEHOLD_ID.value)


def household_setup(
    curve: load_curve.LoadCurve,
    command: str,
) -> tuple[schedule_lib.OffPeakSchedule, config_lib.DetectionConfig]:
  """Schedule and configuration of a single household.

  Precedence is command-line flags, then the household's metadata entry, then
  the --config file, then the defaults.

  Args:
    curve: Household load curve.
    command: Running command, for error messages.

  Returns:
    (off-peak schedule, detection configuration)
  """
  meta = _load_dataset(_METADATA.value).by_id().get(curve.household_id)
  if _OFF_PEAK.value:
    schedule = schedule_lib.OffPeakSchedule.parse(
        _OFF_PEAK.value, 1, _STRICT_SCHEDULE.value)
  elif meta is not None:
    schedule = meta.off_peak_schedule(1, _STRICT_SCHEDULE.value)
  else:
    raise app.UsageError(
        f'{command} needs --off_peak, or --metadata with an entry for '
        f'{curve.household_id}')
  config = config_lib.resolve(base_config(), meta.detection if meta else {},
                              flag_overrides())
  schedule_lib.warn_off_grid_starts(schedule, curve.step_minutes,
                                    curve.household_id)
  return schedule, config


def _detect(curve: load_curve.LoadCurve,
            command: str) -> classifier.DetectionResult:
  schedule, config = household_setup(curve, command)
  if not load_curve.is_eligible(curve, config.min_samples_per_month):
    logging.warning('%s would not pass the batch eligibility gate',
                    curve.household_id)
  return classifier.detect_cwh(curve, schedule, config)


def cmd_detect():
  """Writes the DetectionResult of one household."""
  output = _required(_OUTPUT, 'detect')
  curve = _read_curve('detect')
  result = _detect(curve, 'detect')
  file.save_dataclass_json(result, output)
  if _SPIKES_OUTPUT.value:
    spikes = sorted(result.cwh_spikes + result.other_spikes,
                    key=lambda s: s.position)
    detector.write_spikes_csv(spikes, _SPIKES_OUTPUT.value)
  logging.info('%s: found=%s, written to %s', curve.household_id, result.found,
               output)


def _attribution(curve: load_curve.LoadCurve,
                 command: str) -> attribution.AttributionSeries:
  if _DETECTION.value:
    result = file.load_dataclass_json(classifier.DetectionResult,
                                      _DETECTION.value)
    if result.household_id != curve.household_id:
      logging.warning('Detection of %s applied to %s', result.household_id,
                      curve.household_id)
  else:
    result = _detect(curve, command)
  return attribution.attribute(curve, result)


def cmd_disaggregate():
  """Writes the water heater power per interval and consumption fractions."""
  output = _required(_OUTPUT, 'disaggregate')
  curve = _read_curve('disaggregate')
  attr = _attribution(curve, 'disaggregate')
  file.write_text(output, attr.to_csv())
  if _FRACTIONS_OUTPUT.value:
    daily, overall = attribution.consumption_fractions(curve, attr)
    attribution.write_fractions_csv(daily, overall, _FRACTIONS_OUTPUT.value)
    logging.info('%s: overall water heater fraction %.4f', curve.household_id,
                 overall)


def cmd_evaluate():
  """Writes the evaluation report of an attribution against ground truth."""
  output = _required(_OUTPUT, 'evaluate')
  truth_path = _required(_TRUTH, 'evaluate')
  curve = _read_curve('evaluate')
  truth = validation.read_ground_truth(truth_path, curve)
  if _PRED.value:
    pred = validation.read_prediction(_PRED.value, curve)
  else:
    pred = _attribution(curve, 'evaluate')
  evaluation = validation.evaluate(pred, truth, _THRESHOLD_KW.value)
  file.save_dataclass_json(evaluation, output)
  if _SCATTER_DIR.value:
    scatter_dir = pathlib.Path(_SCATTER_DIR.value)
    file.write_text(
        scatter_dir / 'interval_pairs.csv',
        validation.interval_pairs_frame(pred, truth).to_csv(
            index=False, lineterminator='\n'))
    file.write_text(
        scatter_dir / 'energy_pairs.csv',
        validation.energy_pairs_frame(evaluation).to_csv(
            index=False, lineterminator='\n'))
  logging.info(
      '%s: interval precision %s recall %s, activation precision %s '
      'recall %s', curve.household_id, evaluation.intervals.precision,
      evaluation.intervals.recall, evaluation.activations.precision,
      evaluation.activations.recall)


def cmd_batch():
  """Processes a dataset directory."""
  data_dir = _required(_DATA_DIR, 'batch')
  output_dir = _required(_OUTPUT_DIR, 'batch')
  metadata_path = _METADATA.value
  if metadata_path is None:
    default = pathlib.Path(data_dir) / generator.METADATA_FILE
    if default.exists():
      metadata_path = str(default)
    else:
      logging.warning('No metadata file in %s', data_dir)
  if not pathlib.Path(data_dir).is_dir():
    raise NotADirectoryError(f'{data_dir} is not a directory')
  summary = batch.run_batch(
      data_dir,
      _load_dataset(metadata_path),
      output_dir,
      base_config(),
      flag_overrides(),
      workers=_WORKERS.value,
      tz=_TZ.value,
      step=_step(),
      strict_schedule=_STRICT_SCHEDULE.value,
  )
  for name, group in summary.groups.items():
    logging.info('%s: %d/%d households with a detected water heater', name,
                 group.detections, group.households)


def cmd_report():
  """Rebuilds summary and figure tables from a batch output directory."""
  batch_dir = pathlib.Path(_required(_BATCH_DIR, 'report'))
  outcomes = report.load_outcomes(batch_dir / report.OUTCOMES_FILE)
  report.write_report(outcomes, _OUTPUT_DIR.value or batch_dir)


def cmd_simulate():
  """Writes one synthetic household (--scenario) or a fleet (--fleet)."""
  output_dir = pathlib.Path(_required(_OUTPUT_DIR, 'simulate'))
  overrides = {'seed': _SEED.value}
  if _FLEET.value:
    fleet = file.load_dataclass(generator.FleetConfig, _FLEET.value)
    generator.generate_fleet(
        utils.update_dataclass(fleet, overrides), output_dir)
  elif _SCENARIO.value:
    config = file.load_dataclass(generator.ScenarioConfig, _SCENARIO.value)
    scenario = generator.generate(utils.update_dataclass(config, overrides))
    generator.write_scenario(scenario, output_dir)
    file.save_dataclass_json(
        metadata_lib.DatasetMetadata([scenario.metadata]),
        output_dir / generator.METADATA_FILE)
  else:
    raise app.UsageError('simulate needs --scenario or --fleet')


def cmd_anonymize():
  """Writes an anonymized copy of a load curve."""
  output = _required(_OUTPUT, 'anonymize')
  curve = _read_curve('anonymize')
  seed = _SEED.value if _SEED.value is not None else 0
  file.write_text(output, anonymize.anonymize(curve, seed).to_csv())


COMMANDS: dict[str, Callable[[], None]] = {
    'detect': cmd_detect,
    'disaggregate': cmd_disaggregate,
    'evaluate': cmd_evaluate,
    'batch': cmd_batch,
    'report': cmd_report,
    'simulate': cmd_simulate,
    'anonymize': cmd_anonymize,
}


def main(argv: Sequence[str]) -> int:
  if len(argv) != 2 or argv[1] not in COMMANDS:
    raise app.UsageError(
        f'Expected exactly one command among {", ".join(COMMANDS)}, got '
        f'{list(argv[1:])}')
  try:
    COMMANDS[argv[1]]()
  except (ValueError, OSError) as e:
    logging.error('%s failed: %s: %s', argv[1], type(e).__name__, e)
    return EXIT_DATA_ERROR
  return 0


if __name__ == '__main__':
  app.run(main)
