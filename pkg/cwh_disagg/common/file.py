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
"""Local file IO for configs, reports and CSV tables."""

import json
import pathlib
import typing
from typing import Any, Type, TypeVar, Union

import dataclasses_json

PathLike = Union[str, pathlib.PurePath]

T = TypeVar('T', bound=dataclasses_json.DataClassJsonMixin)

# Local Alias
Path = pathlib.Path


def _strip_scheme(path: PathLike) -> Path:
  as_str = str(path)
  if as_str.startswith('file://'):
    as_str = as_str[len('file://'):]
  return Path(as_str)


def save_dataclass_json(
    dataclass_instance: T,
    path: PathLike,
    indent: int | None = 2,
):
  """Save a dataclass to a file.

  Keys are sorted so that identical instances always produce identical bytes.

  Args:
    dataclass_instance: Dataclass to save.
    path: Path to save to. Parent directories are created as needed.
    indent: JSON indentation.
  """
  path = _strip_scheme(path)
  path.parent.mkdir(parents=True, exist_ok=True)
  with path.open('wt') as f:
    f.write(dataclass_instance.to_json(indent=indent, sort_keys=True))
    f.write('\n')


def load_dataclass_json(
    dataclass_type: Type[T],
    path: PathLike,
    infer_missing_fields: bool = False,
) -> T:
  """Load a dataclass from a file path.

  Args:
    dataclass_type: Dataclass to load
    path: Path to load from.
    infer_missing_fields: Whether to infer missing fields.

  Returns:
    New dataclass instance.
  """
  with _strip_scheme(path).open('rt') as f:
    return dataclass_type.from_dict(
        json.load(f), infer_missing=infer_missing_fields)


def load_dataclass(
    constructor: type[T], v: Union[str, PathLike, dict[str, Any], T, None]
) -> Union[T, None]:
  """Load a dataclass from a serialized instance, file path, or dict.

  Args:
    constructor: Dataclass to load
    v: Serialized instance, file path, or dict to create dataclass from. A
      leading '@' forces interpretation as a path.

  Returns:
    New dataclass instance.
  """
  if isinstance(v, constructor):
    return typing.cast(T, v)
  elif v is None:
    return v
  elif isinstance(v, (str, pathlib.PurePath)):
    as_str = str(v)
    if as_str.startswith('@'):
      return load_dataclass_json(constructor, as_str[1:])
    try:
      # We attempt to parse first since file open ops can be expensive.
      return constructor.from_json(as_str)
    except json.JSONDecodeError:
      # File path; attempt to load.
      return load_dataclass_json(constructor, as_str)
  else:
    return constructor.from_dict(typing.cast(dict[str, Any], v))


def read_text(path: PathLike) -> str:
  with _strip_scheme(path).open('rt', encoding='utf-8') as f:
    return f.read()


def write_text(path: PathLike, text: str):
  path = _strip_scheme(path)
  path.parent.mkdir(parents=True, exist_ok=True)
  with path.open('wt', encoding='utf-8', newline='') as f:
    f.write(text)
