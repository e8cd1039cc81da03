"""
Run Configuration - Loading and schema validation of CLI run configs
"""

import json
import logging
import os
from dataclasses import dataclass, field

from jsonschema import Draft7Validator

from core.errors import ConfigError

logger = logging.getLogger(__name__)

SCHEMA_PATH = os.path.join(os.path.dirname(__file__), 'run_config.schema.json')
DEFAULT_OUTPUT = './out'

_validator = None


def get_validator():
    """Validator for the published run-config schema."""
    global _validator
    if _validator is None:
        with open(SCHEMA_PATH, 'r', encoding='utf-8') as f:
            schema = json.load(f)
        Draft7Validator.check_schema(schema)
        _validator = Draft7Validator(schema)
    return _validator


def _field_path(error):
    parts = [str(p) for p in error.absolute_path]
    return '.'.join(parts) if parts else '<root>'


def validate_config_dict(data):
    """Raise ConfigError naming the first offending field."""
    errors = sorted(get_validator().iter_errors(data),
                    key=lambda e: (len(e.absolute_path), [str(p) for p in e.absolute_path]))
    if errors:
        # report the most specific error
        error = max(errors, key=lambda e: len(e.absolute_path))
        raise ConfigError(f"{_field_path(error)}: {error.message}")


@dataclass
class RunConfig:
    """A validated CLI run."""

    command: str
    model: str
    parameters: dict = field(default_factory=dict)
    output: str = None
    seed: int = 0
    settings: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data):
        validate_config_dict(data)
        return cls(
            command=data['command'],
            model=data['model'],
            parameters=dict(data.get('parameters', {})),
            output=data.get('output'),
            seed=int(data.get('seed', 0)),
            settings=dict(data.get('settings', {})),
        )

    def to_dict(self):
        payload = {
            'command': self.command,
            'model': self.model,
            'parameters': self.parameters,
            'seed': self.seed,
        }
        if self.settings:
            payload['settings'] = self.settings
        return payload

    def param(self, key, default=None):
        return self.parameters.get(key, default)


def load_run_config(path):
    """Read and validate a JSON run config."""
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno}: invalid JSON: {e.msg}") from None
    config = RunConfig.from_dict(data)
    logger.info(f"Loaded {config.command} config from {path}")
    return config
