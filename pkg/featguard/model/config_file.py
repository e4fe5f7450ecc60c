"""Pipeline config files.

The native format is line oriented::

    # demo budget
    [budget]
    norm = linf
    lambda = 0.05

    [campaign]
    arities = [2, 3]

Every value is read as a YAML scalar or flow sequence. Files ending in ``.yaml`` or ``.yml`` are read as YAML
documents with one mapping per section instead.
"""
import hashlib
import json
import pathlib
from typing import Any, Dict, Optional, Tuple, Union

import pydantic
import yaml

from featguard.common.errors import ConfigurationError
from featguard.model.config import PipelineConfig

Location = Tuple[str, ...]


def parse_config_text(text: str, source: str = "<config>") -> Tuple[Dict[str, Dict[str, Any]], Dict[Location, int]]:
    """Sections of a native config file, and the line every section and key was declared on."""
    data: Dict[str, Dict[str, Any]] = {}
    lines: Dict[Location, int] = {}
    section: Optional[str] = None
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue

        if line.startswith("["):
            if not line.endswith("]") or not line[1:-1].strip():
                raise ConfigurationError("{path}:{value}: malformed section header {key}", path=source,
                                         value=line_number, key=line)

            section = line[1:-1].strip()
            if section in data:
                raise ConfigurationError("{path}:{value}: section [{key}] appears twice", path=source,
                                         value=line_number, key=section)
            data[section] = {}
            lines[(section,)] = line_number
            continue

        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigurationError("{path}:{value}: expected `key = value` or a section header", path=source,
                                     value=line_number)

        if section is None:
            raise ConfigurationError("{path}:{value}: key {key} comes before any section header", path=source,
                                     value=line_number, key=key)

        if key in data[section]:
            raise ConfigurationError("{path}:{value}: key {key} set twice in [{label}]", path=source,
                                     value=line_number, key=key, label=section)

        try:
            data[section][key] = yaml.safe_load(value.strip()) if value.strip() else None

        except yaml.YAMLError:
            raise ConfigurationError("{path}:{value}: can not parse the value of {key}", path=source,
                                     value=line_number, key=key)
        lines[(section, key)] = line_number

    return data, lines


def _validate(data: Any, source: str, lines: Dict[Location, int]) -> PipelineConfig:
    if data is None:
        data = {}

    if not isinstance(data, dict):
        raise ConfigurationError("{path}: config must be a mapping of sections", path=source)

    try:
        return PipelineConfig.parse_obj(data)

    except pydantic.ValidationError as e:
        error = e.errors()[0]
        location = tuple(str(part) for part in error["loc"])
        line = next((lines[location[:n]] for n in range(len(location), 0, -1) if location[:n] in lines), None)
        where = f"{source}:{line}" if line is not None else source
        raise ConfigurationError("{path}: {key}: {value}", path=where, key=".".join(location), value=error["msg"])


def loads_config(text: str, source: str = "<config>") -> PipelineConfig:
    data, lines = parse_config_text(text, source)
    return _validate(data, source, lines)


def load_config(path: Optional[Union[str, pathlib.Path]]) -> PipelineConfig:
    """Config from ``path``; defaults when no path is given."""
    if path is None:
        return PipelineConfig()

    path = pathlib.Path(path)
    if not path.exists():
        raise ConfigurationError("config file {path} doesn't exist!", path=path)

    if path.suffix in (".yaml", ".yml"):
        try:
            return _validate(yaml.safe_load(path.read_text()), str(path), {})

        except yaml.YAMLError as e:
            raise ConfigurationError("{path}: invalid YAML: {value}", path=path, value=e)

    return loads_config(path.read_text(), source=str(path))


def config_digest(config: PipelineConfig) -> str:
    """SHA-256 of the canonical JSON form; independent of field order in the source file."""
    canonical = json.dumps(json.loads(config.json(by_alias=True)), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
