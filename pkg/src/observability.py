from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, write_to_textfile
from pythonjsonlogger import jsonlogger
import logging

from . import settings

REGISTRY = CollectorRegistry()

# Training metrics
TRAIN_STEPS = Counter('train_steps_total', 'Optimizer steps taken', registry=REGISTRY)
TRAIN_LOSS = Gauge('train_loss', 'Total loss of the last optimizer step', registry=REGISTRY)
TRAIN_LR = Gauge('train_learning_rate', 'Learning rate of the last optimizer step', registry=REGISTRY)
TRAIN_REG_WEIGHT = Gauge('train_regularizer_weight', 'Annealed group-regularizer coefficient', registry=REGISTRY)
TRAIN_STEP_SECONDS = Histogram('train_step_seconds', 'Wall time per optimizer step', registry=REGISTRY)

# Inference / verification
DENOISED_FRAMES = Counter('denoised_frames_total', 'Output frames produced by denoise', ['mode'], registry=REGISTRY)
GRADCHECK_WORST = Gauge('gradcheck_worst_relative_error', 'Worst finite-difference error per operator', ['op'], registry=REGISTRY)


def configure_logging(level=None):
    if level is None:
        level = settings.log_level()
    handler = logging.StreamHandler()
    formatter = jsonlogger.JsonFormatter('%(asctime)s %(levelname)s %(name)s %(message)s')
    handler.setFormatter(formatter)
    root = logging.getLogger()
    # Avoid adding duplicate handlers
    if not any(isinstance(h, logging.StreamHandler) for h in root.handlers):
        root.addHandler(handler)
    root.setLevel(level)


def write_metrics(path=None):
    """Dump the registry in textfile-collector format. No-op without a target path."""
    path = path or settings.METRICS_FILE
    if not path:
        return None
    write_to_textfile(str(path), REGISTRY)
    return path
