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
"""Tests for cwh_main."""

import json
import os

from absl import app
from absl import flags
from absl.testing import absltest
from absl.testing import flagsaver
from cwh_disagg.common import file
from cwh_disagg.metrics import validation
from cwh_disagg.pipeline import cwh_main
from cwh_disagg.pipeline import report
from cwh_disagg.synth import generator
from cwh_disagg.timeseries import load_curve
from cwh_disagg.timeseries import metadata as metadata_lib
import numpy as np
import pandas as pd

OFF_PEAK = ['22:30-06:30']


def _run(command: str, **flag_values) -> int:
  with flagsaver.flagsaver(**flag_values):
    return cwh_main.main(['cwh_main', command])


class CwhMainTest(absltest.TestCase):

  def setUp(self):
    super().setUp()
    if not flags.FLAGS.is_parsed():
      flags.FLAGS.mark_as_parsed()
    self.tmp = self.create_tempdir().full_path
    self.scenario = generator.generate(
        generator.ScenarioConfig(household_id='h1',
                                 cwh=generator.CwhConfig(power_kw=2.4)))
    generator.write_scenario(self.scenario, self.tmp)
    self.input = os.path.join(self.tmp, 'h1.csv')
    self.truth = os.path.join(self.tmp, generator.TRUTH_DIR, 'h1.csv')

  def _path(self, name: str) -> str:
    return os.path.join(self.tmp, name)

  def test_detect(self):
    output = self._path('detection.json')
    spikes = self._path('spikes.csv')
    self.assertEqual(
        _run('detect', input=self.input, off_peak=OFF_PEAK, output=output,
             spikes_output=spikes, expected_range='1.0:4.0',
             cluster_bound='below_mode'), 0)
    result = json.loads(file.read_text(output))
    self.assertTrue(result['found'])
    self.assertEqual(result['household_id'], 'h1')
    self.assertEqual(result['config']['expected_low_kw'], 1.0)
    self.assertEqual(result['config']['expected_high_kw'], 4.0)
    self.assertEqual(result['config']['cluster_bound'], 'below_mode')
    self.assertGreaterEqual(len(pd.read_csv(spikes)), len(result['cwh_spikes']))

  def test_detect_is_deterministic(self):
    first, second = self._path('a.json'), self._path('b.json')
    _run('detect', input=self.input, off_peak=OFF_PEAK, output=first)
    _run('detect', input=self.input, off_peak=OFF_PEAK, output=second)
    self.assertEqual(file.read_text(first), file.read_text(second))

  def test_detect_from_metadata(self):
    metadata = self._path(generator.METADATA_FILE)
    file.save_dataclass_json(
        metadata_lib.DatasetMetadata([self.scenario.metadata]), metadata)
    output = self._path('detection.json')
    self.assertEqual(
        _run('detect', input=self.input, output=output,
             metadata=metadata), 0)
    self.assertTrue(json.loads(file.read_text(output))['found'])

  def test_malformed_csv(self):
    bad = self._path('bad.csv')
    file.write_text(bad, 'time;power\n2021-01-01;1\n')
    self.assertEqual(
        _run('detect', input=bad, off_peak=OFF_PEAK,
             output=self._path('out.json')), cwh_main.EXIT_DATA_ERROR)

  def test_missing_input_file(self):
    self.assertEqual(
        _run('detect', input=self._path('absent.csv'), off_peak=OFF_PEAK,
             output=self._path('out.json')), cwh_main.EXIT_DATA_ERROR)

  def test_usage_errors(self):
    with self.assertRaises(app.UsageError):
      cwh_main.main(['cwh_main'])
    with self.assertRaises(app.UsageError):
      cwh_main.main(['cwh_main', 'train'])
    with self.assertRaises(app.UsageError):
      _run('detect', input=self.input, off_peak=OFF_PEAK)
    with self.assertRaises(app.UsageError):
      _run('detect', input=self.input, output=self._path('out.json'))
    with self.assertRaises(app.UsageError):
      _run('detect', input=self.input, off_peak=OFF_PEAK,
           output=self._path('out.json'), expected_range='5')

  def test_disaggregate(self):
    detection = self._path('detection.json')
    output = self._path('attribution.csv')
    fractions = self._path('fractions.csv')
    _run('detect', input=self.input, off_peak=OFF_PEAK, output=detection)
    self.assertEqual(
        _run('disaggregate', input=self.input, detection=detection,
             output=output, fractions_output=fractions), 0)
    attr = pd.read_csv(output)
    self.assertEqual(list(attr.columns), ['timestamp', 'cwh_power_kw'])
    self.assertLen(attr, len(self.scenario.curve))
    frame = pd.read_csv(fractions)
    self.assertEqual(frame['date'].iloc[-1], 'overall')
    self.assertBetween(frame['daily_fraction'].iloc[-1], 0, 1)

  def test_evaluate_identity(self):
    output = self._path('evaluation.json')
    self.assertEqual(
        _run('evaluate', input=self.input, truth=self.truth, pred=self.truth,
             output=output), 0)
    evaluation = json.loads(file.read_text(output))
    self.assertEqual(evaluation['intervals']['fp'], 0)
    self.assertEqual(evaluation['intervals']['fn'], 0)
    self.assertEqual(evaluation['intervals']['precision'], 1.0)
    self.assertEqual(evaluation['activations']['recall'], 1.0)

  def test_evaluate_detection(self):
    output = self._path('evaluation.json')
    scatter = self._path('scatter')
    self.assertEqual(
        _run('evaluate', input=self.input, truth=self.truth,
             off_peak=OFF_PEAK, output=output, scatter_dir=scatter), 0)
    evaluation = json.loads(file.read_text(output))
    for view in ('intervals', 'activations'):
      self.assertBetween(evaluation[view]['precision'], 0, 1)
      self.assertBetween(evaluation[view]['recall'], 0, 1)
    self.assertTrue(os.path.exists(os.path.join(scatter, 'energy_pairs.csv')))

  def test_morning_reactivations_are_missed(self):
    curve, truth = self.scenario.curve, self.scenario.truth
    values, cwh = curve.values.copy(), truth.cwh_power.copy()
    # 05:30 on the mornings after nights 3 and 10.
    injected = [59 + 48 * 3, 59 + 48 * 10]
    values[injected] += 1.5
    cwh[injected] = 1.5
    patched = load_curve.LoadCurve('h2', curve.start, curve.step, values)
    file.write_text(self._path('h2.csv'), patched.to_csv())
    file.write_text(
        self._path('h2_truth.csv'),
        validation.GroundTruth('h2', truth.start, truth.step, cwh).to_csv())

    output = self._path('evaluation.json')
    self.assertEqual(
        _run('evaluate', input=self._path('h2.csv'),
             truth=self._path('h2_truth.csv'), off_peak=OFF_PEAK,
             output=output), 0)
    evaluation = validation.EvaluationReport.from_json(
        file.read_text(output))
    self.assertEqual(evaluation.n_truth_activations, 30)
    self.assertEqual(evaluation.activations.precision, 1.0)
    matched = {j for _, j in evaluation.activations.matches}
    missed = [
        j for j in range(evaluation.n_truth_activations) if j not in matched
    ]
    truth_starts = [
        a.start for a in validation.truth_activations(
            validation.GroundTruth('h2', truth.start, truth.step, cwh))
    ]
    self.assertEqual([truth_starts[j] for j in missed],
                     [curve.start + curve.step * p for p in injected])
    self.assertGreaterEqual(evaluation.edges.fn_isolated, 2)

  def test_simulate_and_anonymize(self):
    scenario = generator.ScenarioConfig(household_id='s1', days=7,
                                        cwh=generator.CwhConfig())
    out_dir = self._path('sim')
    self.assertEqual(
        _run('simulate', scenario=scenario.to_json(), output_dir=out_dir,
             seed=5), 0)
    sim = os.path.join(out_dir, 's1.csv')
    self.assertTrue(os.path.exists(os.path.join(out_dir, 'truth', 's1.csv')))

    anonymized = self._path('anon.csv')
    self.assertEqual(
        _run('anonymize', input=sim, output=anonymized, seed=1), 0)
    before = load_curve.read_load_curve(sim)
    after = load_curve.read_load_curve(anonymized)
    self.assertTrue(np.all(after.values >= before.values))

  def test_simulate_needs_a_config(self):
    with self.assertRaises(app.UsageError):
      _run('simulate', output_dir=self._path('sim'))

  def test_batch_and_report(self):
    data_dir = self._path('fleet')
    fleet = generator.FleetConfig(households=2, cwh_share=0.5, days=14)
    self.assertEqual(
        _run('simulate', fleet=fleet.to_json(), output_dir=data_dir), 0)
    out_dir = self._path('results')
    self.assertEqual(
        _run('batch', data_dir=data_dir, output_dir=out_dir, workers=2), 0)
    summary = report.BatchSummary.from_json(
        file.read_text(os.path.join(out_dir, report.SUMMARY_FILE)))
    self.assertEqual(summary.total, 2)
    self.assertEqual(summary.processed + summary.skipped, summary.total)

    rebuilt = self._path('rebuilt')
    self.assertEqual(
        _run('report', batch_dir=out_dir, output_dir=rebuilt), 0)
    self.assertEqual(
        file.read_text(os.path.join(rebuilt, report.SUMMARY_FILE)),
        file.read_text(os.path.join(out_dir, report.SUMMARY_FILE)))

  def test_batch_empty_directory(self):
    data_dir = self.create_tempdir().full_path
    out_dir = self._path('results')
    self.assertEqual(_run('batch', data_dir=data_dir, output_dir=out_dir), 0)
    summary = json.loads(
        file.read_text(os.path.join(out_dir, report.SUMMARY_FILE)))
    self.assertEqual(summary['total'], 0)


if __name__ == '__main__':
  absltest.main()
