# -*- coding: utf-8 -*-
"""
Run configuration and process-level settings.

A run is described by a flat JSON object; every key is optional and
unknown keys are rejected. See ``docs/configuration.rst``.
"""
import json
import logging
import os
from dataclasses import dataclass, field, fields, asdict

from .constants import BlockVariant, HYPERDENSE
from .errors import ConfigurationError

THREADS_ENV = 'HINET_THREADS'

log = logging.getLogger(__name__)

_TYPE_NAMES = {bool: 'boolean', str: 'string'}


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


@dataclass
class RunConfig(object):
    levels: int = 4
    base_filters: int = 4
    repetitions: list = field(default_factory=lambda: [1, 2, 3, 4])
    block_variant: str = HYPERDENSE
    branch_divisor: int = 2
    include_input: bool = False
    num_classes: int = 4
    in_channels: int = 4
    seed: int = 0
    epochs: int = 30
    steps_per_epoch: int = 10
    extent: int = 32
    phantoms: int = 1
    data_dir: object = None
    output_dir: str = 'hinet-run'
    dice_r: float = 1.0
    dice_conventional: bool = False
    foreground_only: bool = False
    lr0: float = 3e-5
    lr_decay: float = 0.5
    lr_period: int = 30
    augment: bool = True
    check64: bool = False

    def _check_types(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == 'data_dir':
                expected, valid = 'a path or null', value is None or isinstance(value, str)
            elif f.type is list:
                expected = 'a list of integers'
                valid = isinstance(value, (list, tuple)) and all(_is_int(v) for v in value)
            elif f.type is float:
                expected = 'a number'
                valid = isinstance(value, (int, float)) and not isinstance(value, bool)
            elif f.type is int:
                expected, valid = 'an integer', _is_int(value)
            else:
                expected, valid = 'a %s' % _TYPE_NAMES[f.type], isinstance(value, f.type)
            if not valid:
                raise ConfigurationError('%s must be %s, got %r' % (f.name, expected, value))

    def validate(self):
        self._check_types()
        for name in ('epochs', 'seed'):
            if getattr(self, name) < 0:
                raise ConfigurationError('%s must be non-negative, got %r' % (name, getattr(self, name)))
        for name in ('steps_per_epoch', 'phantoms', 'lr_period'):
            if getattr(self, name) < 1:
                raise ConfigurationError('%s must be positive, got %r' % (name, getattr(self, name)))
        if self.extent < 16:
            raise ConfigurationError('extent must be at least 16, got %r' % (self.extent,))
        if not self.dice_r > 0:
            raise ConfigurationError('dice_r must be positive, got %r' % (self.dice_r,))
        if not self.lr0 > 0 or not 0 < self.lr_decay <= 1:
            raise ConfigurationError('lr0 must be positive and lr_decay in (0, 1]')
        if self.block_variant not in dict(BlockVariant):
            raise ConfigurationError('Block variant %s is illegal' % (self.block_variant,))
        self.network_config().validate()
        return self

    def network_config(self):
        from .network import NetworkConfig
        return NetworkConfig(levels=self.levels,
                             base_filters=self.base_filters,
                             repetitions=tuple(self.repetitions),
                             block_variant=self.block_variant,
                             num_classes=self.num_classes,
                             in_channels=self.in_channels,
                             seed=self.seed,
                             branch_divisor=self.branch_divisor,
                             include_input=self.include_input)

    def dice_config(self):
        from .losses import DiceConfig
        if self.foreground_only:
            return DiceConfig.foreground(self.num_classes, r=self.dice_r,
                                         conventional=self.dice_conventional)
        return DiceConfig(r=self.dice_r, class_set=tuple(range(self.num_classes)),
                          conventional=self.dice_conventional)

    def lr_schedule(self):
        from .optim import LrSchedule
        return LrSchedule(lr0=self.lr0, decay=self.lr_decay, period=self.lr_period)

    def to_dict(self):
        return asdict(self)


def config_keys():
    return [f.name for f in fields(RunConfig)]


def parse_run_config(data):
    """
    Build a :py:class:`RunConfig` from a decoded JSON object.

    :param dict data: configuration values
    :returns: validated configuration
    :rtype: :py:class:`hinet.config.RunConfig`
    :raises hinet.errors.ConfigurationError: on unknown keys or invalid values
    """
    if not isinstance(data, dict):
        raise ConfigurationError('Run configuration must be a JSON object')
    unknown = sorted(set(data) - set(config_keys()))
    if unknown:
        raise ConfigurationError('Unknown configuration keys: %s' % ', '.join(unknown))
    return RunConfig(**data).validate()


def load_run_config(config_path):
    try:
        with open(config_path) as fp:
            data = json.load(fp)
    except (IOError, OSError) as e:
        raise ConfigurationError('Cannot read configuration %s: %s' % (config_path, e))
    except ValueError as e:
        raise ConfigurationError('Configuration %s is not valid JSON: %s' % (config_path, e))
    log.debug('Loaded run configuration from %s', config_path)
    return parse_run_config(data)


def get_thread_count():
    value = os.environ.get(THREADS_ENV)
    if value is None or value == '':
        return os.cpu_count() or 1
    try:
        threads = int(value)
    except ValueError:
        raise ConfigurationError('%s must be an integer, got %r' % (THREADS_ENV, value))
    if threads < 1:
        raise ConfigurationError('%s must be positive, got %r' % (THREADS_ENV, value))
    return threads
