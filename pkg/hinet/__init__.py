# -*- coding: utf-8 -*-
import os

# the package's own worker pool is the only source of parallelism
for _var in ('OPENBLAS_NUM_THREADS', 'OMP_NUM_THREADS', 'MKL_NUM_THREADS'):
    os.environ.setdefault(_var, '1')

__version__ = '0.1.0'
__all__ = ['NetworkConfig', 'Network', 'build_hinet', 'forward', 'backward',
           'DiceConfig', 'dice_loss', 'AdamState', 'adam_step', 'lr_at',
           'VolumeSample', 'make_phantom', 'evaluate']

from .network import NetworkConfig, Network, build_hinet, forward, backward
from .losses import DiceConfig, dice_loss
from .optim import AdamState, adam_step, lr_at
from .data import VolumeSample, make_phantom
from .metrics import evaluate
