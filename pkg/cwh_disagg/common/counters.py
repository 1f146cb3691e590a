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
"""Thread-safe counters shared by the batch workers.

Counter names are flat strings; related counters share a prefix such as
`skipped/`, which `snapshot` and `log_counters` strip.
"""

import contextlib
import threading
import time
from typing import Iterator

from absl import logging


class ThreadsafeCounter:
  """An integer counter guarded by its own lock."""

  def __init__(self):
    self._value = 0
    self._lock = threading.Lock()

  @property
  def value(self) -> int:
    with self._lock:
      return self._value

  def inc(self, amount: int = 1):
    with self._lock:
      self._value += amount


class ThreadsafeCounterStore:
  """Named counters created on first use."""

  def __init__(self):
    self._counters: dict[str, ThreadsafeCounter] = {}
    self._lock = threading.Lock()

  def get_counter(self, name: str) -> ThreadsafeCounter:
    with self._lock:
      return self._counters.setdefault(name, ThreadsafeCounter())

  def inc(self, name: str, amount: int = 1):
    self.get_counter(name).inc(amount)

  @contextlib.contextmanager
  def timer_counter(self, name: str) -> Iterator[None]:
    """Adds the wall time of the block to `<name>-ms` and counts `<name>-n`.

    Time is recorded even when the block raises.

    Args:
      name: Counter name prefix.

    Yields:
      Nothing.
    """
    start = time.perf_counter()
    try:
      yield
    finally:
      self.inc(f'{name}-ms', int((time.perf_counter() - start) * 1e3))
      self.inc(f'{name}-n')

  def snapshot(self, prefix: str = '') -> dict[str, int]:
    """Nonzero counters whose name starts with `prefix`, sorted by name.

    The prefix is stripped from the returned keys.
    """
    with self._lock:
      items = list(self._counters.items())
    values = {
        name[len(prefix):]: counter.value
        for name, counter in items
        if name.startswith(prefix) and counter.value
    }
    return dict(sorted(values.items()))

  def log_counters(self, prefix: str = ''):
    for name, value in self.snapshot(prefix).items():
      logging.info('%s[%s] = %d', prefix.rstrip('/') or 'counter', name,
                   value)
