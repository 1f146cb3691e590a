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
"""Per-household metadata: off-peak hours and self-reported attributes."""

import dataclasses
from typing import Any, Optional

from cwh_disagg.timeseries import schedule
import dataclasses_json

WATER_HEATING_TYPES = ('elec', 'gas', 'other')


@dataclasses.dataclass(frozen=True)
class HouseholdMetadata(dataclasses_json.DataClassJsonMixin):
  """Metadata of one household.

  Only `household_id` and `off_peak` are needed to run detection.
  """
  household_id: str

  # Daily off-peak ranges as 'HH:MM-HH:MM' strings.
  off_peak: list[str] = dataclasses.field(default_factory=list)

  # Self-reported main water heating mode: elec, gas or other.
  water_heating_type: Optional[str] = None

  surface_m2: Optional[float] = None
  inhabitants: Optional[int] = None

  # Whether the household is billed differently during off-peak hours.
  off_peak_contract: bool = True

  # DetectionConfig fields overridden for this household.
  detection: dict[str, Any] = dataclasses.field(default_factory=dict)

  @property
  def heating_group(self) -> str:
    """Declared water heating type, or 'unknown' when absent or invalid."""
    if self.water_heating_type in WATER_HEATING_TYPES:
      return self.water_heating_type
    return 'unknown'

  def off_peak_schedule(
      self,
      resolution_min: int = 30,
      strict: bool = False,
  ) -> schedule.OffPeakSchedule:
    """Parsed off-peak schedule; raises ScheduleError when unknown."""
    if not self.off_peak:
      raise schedule.ScheduleError(
          f'No off-peak hours known for {self.household_id}')
    return schedule.OffPeakSchedule.parse(self.off_peak, resolution_min, strict)


@dataclasses.dataclass(frozen=True)
class DatasetMetadata(dataclasses_json.DataClassJsonMixin):
  """Metadata file describing a dataset directory of household CSVs."""
  households: list[HouseholdMetadata] = dataclasses.field(default_factory=list)

  def by_id(self) -> dict[str, HouseholdMetadata]:
    return {h.household_id: h for h in self.households}
