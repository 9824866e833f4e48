# -*- coding: utf-8 -*-
"""
Training loop and inference.

One step draws the next sample (cycling through the data source in a
fixed order), optionally augments it with a seed derived from the run
seed and the global step, z-scores each modality, then runs forward,
dice loss, backward and an Adam update at the learning rate of the
current epoch. Batch size is 1.
"""
import csv
import os

import numpy as np

from .base import BaseComponent, Report
from .checkpoint import save_checkpoint
from .constants import LABEL_CODES, CHECK64, TRAIN32
from .data import augment, center_crop, make_phantom, normalize_image, one_hot, labels_from_scores
from .errors import ConfigurationError, NumericalError
from .losses import dice_loss, dice_loss_grad
from .metrics import evaluate
from .network import build_hinet, forward, backward
from .optim import AdamState
from .volumes import list_volumes, read_volume

CHECKPOINT_NAME = 'checkpoint.hint'
LOG_NAME = 'train_log.csv'
METRICS_NAME = 'metrics.json'


def predict_labels(net, image):
    """
    Label volume (z, y, x) of codes ``0, 1, 2, 4`` for a raw (1, m, z, y, x)
    image, normalised the way training normalises it.
    """
    probs, _ = forward(net, normalize_image(image))
    return labels_from_scores(probs)


class Trainer(BaseComponent):
    """
    :param run_cfg: validated run configuration
    :type run_cfg: :py:class:`hinet.config.RunConfig`
    """
    def __init__(self, run_cfg):
        self.cfg = run_cfg
        if run_cfg.num_classes != len(LABEL_CODES):
            raise ConfigurationError('Training on label volumes needs num_classes=%d, got %d'
                                     % (len(LABEL_CODES), run_cfg.num_classes))
        self.net = build_hinet(run_cfg.network_config(), CHECK64 if run_cfg.check64 else TRAIN32)
        self.dice = run_cfg.dice_config()
        self.schedule = run_cfg.lr_schedule()
        self.state = AdamState(lr=self.schedule.lr_at(0))
        self.samples = self._load_samples()

    def _load_samples(self):
        cfg = self.cfg
        if cfg.data_dir:
            paths = list_volumes(cfg.data_dir)
            if not paths:
                raise ConfigurationError('No .hvol volumes in %s' % (cfg.data_dir,))
            samples = [center_crop(read_volume(path), cfg.extent) for path in paths]
        else:
            samples = [make_phantom(cfg.seed + i, cfg.extent, cfg.in_channels) for i in range(cfg.phantoms)]
        for sample in samples:
            if sample.modalities != cfg.in_channels:
                raise ConfigurationError('Sample has %d modalities, the network expects %d'
                                         % (sample.modalities, cfg.in_channels))
        self.logger.info('Training on %d samples of extents %s', len(samples), samples[0].extents)
        return samples

    def sample_for(self, global_step):
        sample = self.samples[global_step % len(self.samples)]
        if self.cfg.augment:
            sample = augment(sample, (self.cfg.seed, global_step))
        return sample

    def train_step(self, sample, lr, global_step):
        """:returns: the step's loss before the update"""
        probs, cache = forward(self.net, normalize_image(sample.image))
        if not np.isfinite(probs).all():
            raise NumericalError('Non-finite network output at step %d' % global_step, global_step)
        target = one_hot(sample.labels, dtype=probs.dtype)
        loss = dice_loss(probs, target, self.dice)
        if not np.isfinite(loss):
            raise NumericalError('Non-finite loss at step %d' % global_step, global_step)
        grads = backward(self.net, cache, dice_loss_grad(probs, target, self.dice))
        self.state.lr = lr
        self.net.update(grads, self.state)
        return loss

    def run(self):
        """
        Train for ``epochs * steps_per_epoch`` steps and write the
        checkpoint, the loss log and the final training-sample metrics
        into ``output_dir``.

        :rtype: :py:class:`hinet.base.Report`
        :raises hinet.errors.NumericalError: on a non-finite loss
        """
        cfg = self.cfg
        if not os.path.isdir(cfg.output_dir):
            os.makedirs(cfg.output_dir)
        log_path = os.path.join(cfg.output_dir, LOG_NAME)
        losses = []
        with open(log_path, 'w', newline='') as fp:
            writer = csv.writer(fp)
            writer.writerow(['epoch', 'step', 'loss', 'lr'])
            for epoch in range(cfg.epochs):
                lr = self.schedule.lr_at(epoch)
                epoch_losses = []
                for step in range(cfg.steps_per_epoch):
                    global_step = epoch * cfg.steps_per_epoch + step
                    loss = self.train_step(self.sample_for(global_step), lr, global_step)
                    self.logger.debug('epoch %d step %d loss %.6f', epoch, step, loss)
                    writer.writerow([epoch, step, '%.17g' % loss, '%.17g' % lr])
                    epoch_losses.append(loss)
                losses.extend(epoch_losses)
                self.logger.info('Epoch %d/%d: mean loss %.6f at lr %.3g',
                                 epoch + 1, cfg.epochs, float(np.mean(epoch_losses)), lr)

        checkpoint_path = os.path.join(cfg.output_dir, CHECKPOINT_NAME)
        save_checkpoint(self.net, checkpoint_path)
        sample = self.samples[0]
        metrics = evaluate(predict_labels(self.net, sample.image), sample.labels)
        metrics_path = os.path.join(cfg.output_dir, METRICS_NAME)
        Report(metrics.to_dict()).write(metrics_path)
        return Report({
            'checkpoint': checkpoint_path,
            'log': log_path,
            'metrics': metrics_path,
            'steps': len(losses),
            'final_loss': losses[-1] if losses else None,
            'mean_foreground_dsc': metrics.mean_foreground_dsc(),
        })
