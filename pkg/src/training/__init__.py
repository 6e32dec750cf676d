"""Losses, optimizer, configuration contract and the training loop."""

from .losses import AnnealSchedule, anneal_weight, l1_gamma_loss, srgb, total_loss
from .optim import AdamState, adam_step
from .config import CONTRACT, TrainConfig, build_configs, lr_schedule, read_config_file, validate
from .data_queue import SampleProducer, crop_patch, make_batch
from .trainer import read_log, smoothed, smoothed_loss_ends, train, train_step

__all__ = [
    'AnnealSchedule', 'anneal_weight', 'l1_gamma_loss', 'srgb', 'total_loss',
    'AdamState', 'adam_step',
    'CONTRACT', 'TrainConfig', 'build_configs', 'lr_schedule', 'read_config_file', 'validate',
    'SampleProducer', 'crop_patch', 'make_batch',
    'read_log', 'smoothed', 'smoothed_loss_ends', 'train', 'train_step',
]
