import hashlib
import json
import math
import os

import yaml
from rich.console import Console
from rich.table import Table

from python.errors import ConfigError

SEED_ENV = 'CORNER_UNFOLD_SEED'
CONFIG_VERSION = 1


class Parameters(dict):
    """Configuration block with attribute access and field-level validation."""

    def __init__(self, data=None, where=''):
        super().__init__(data or {})
        self.where = where

    def __getattr__(self, name):
        try:
            return self[name]
        except KeyError:
            raise AttributeError(name) from None

    def _field(self, name):
        return f'{self.where}.{name}' if self.where else name

    def block(self, name, required=True):
        if name not in self:
            if required:
                raise ConfigError(f'{self._field(name)}: missing block')
            return Parameters({}, self._field(name))
        value = self[name]
        if not isinstance(value, dict):
            raise ConfigError(f'{self._field(name)}: expected an object, got {type(value).__name__}')
        return Parameters(value, self._field(name))

    def number(self, name, default=None):
        value = self.get(name, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f'{self._field(name)}: expected a finite number, got {value!r}')
        return float(value)

    def integer(self, name, default=None, minimum=None):
        value = self.get(name, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f'{self._field(name)}: expected an integer, got {value!r}')
        if minimum is not None and value < minimum:
            raise ConfigError(f'{self._field(name)}: expected an integer >= {minimum}, got {value}')
        return value

    def string(self, name, default=None, choices=None):
        value = self.get(name, default)
        if not isinstance(value, str):
            raise ConfigError(f'{self._field(name)}: expected a string, got {value!r}')
        if choices is not None and value not in choices:
            raise ConfigError(f'{self._field(name)}: expected one of {list(choices)}, got {value!r}')
        return value

    def numbers(self, name, length=None, default=None):
        value = self.get(name, default)
        if not isinstance(value, list) or (length is not None and len(value) != length):
            what = f'a list of {length} numbers' if length is not None else 'a list of numbers'
            raise ConfigError(f'{self._field(name)}: expected {what}, got {value!r}')
        for item in value:
            if isinstance(item, bool) or not isinstance(item, (int, float)) or not math.isfinite(item):
                raise ConfigError(f'{self._field(name)}: expected finite numbers, got {item!r}')
        return [float(item) for item in value]

    def flag(self, name, default=False):
        value = self.get(name, default)
        if not isinstance(value, bool):
            raise ConfigError(f'{self._field(name)}: expected true or false, got {value!r}')
        return value


class ExperimentConfig(Parameters):
    """A parsed experiment file: the map, command blocks, seed and output directory."""

    @property
    def name(self):
        return self.get('name', 'experiment')

    def __repr__(self):
        return self.name

    def dump(self):
        return json.dumps(dict(self), sort_keys=True, indent=2)

    def digest(self):
        return hashlib.sha256(json.dumps(dict(self), sort_keys=True).encode()).hexdigest()

    def seed(self):
        """Seed from the environment if set, otherwise from the ``seed`` field (default 0)."""
        override = os.environ.get(SEED_ENV)
        if override is not None:
            try:
                return int(override)
            except ValueError:
                raise ConfigError(f'{SEED_ENV}: expected an integer, got {override!r}') from None
        return self.integer('seed', 0, minimum=0)

    def output_dir(self, override=None):
        return override or self.get('output_dir', os.path.join('out', self.name))

    def print(self):
        table = Table(title='Parameters')
        table.add_column('Parameter', justify='right', style='cyan', no_wrap=True)
        table.add_column('Value', style='magenta')

        def add(prefix, value):
            if isinstance(value, dict) and value:
                for key in sorted(value):
                    add(f'{prefix}.{key}' if prefix else key, value[key])
            else:
                table.add_row(prefix, json.dumps(value))

        add('', dict(self))
        console = Console()
        console.print(table)


def parse_config(text, source='<string>'):
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, 'problem_mark', None)
        where = f'{source}:{mark.line + 1}:{mark.column + 1}' if mark is not None else source
        problem = getattr(err, 'problem', None) or str(err)
        raise ConfigError(f'{where}: {problem}') from None
    if not isinstance(doc, dict):
        raise ConfigError(f'{source}: expected an object at the top level')
    config = ExperimentConfig(doc)
    version = config.integer('version', CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f'version: unsupported configuration version {version}')
    return config


def load_config(filename):
    try:
        with open(filename) as stream:
            text = stream.read()
    except OSError as err:
        raise ConfigError(f'{filename}: {err.strerror}') from None
    return parse_config(text, filename)
