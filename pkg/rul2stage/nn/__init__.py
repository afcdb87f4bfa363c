"""
Sequence-Model Engine

RESPONSIBILITY: Forward/backward for the fixed recurrent architecture,
losses, Adam, the training loop and checkpoint files
ALLOWED INPUTS: Stacked window tensors (B, n_f, n_w), scalar targets
OUTPUTS: Parameters, TrainingHistory, checkpoint files

64-bit floats throughout; a fixed seed gives bit-identical runs.
"""

from .checkpoint import FORMAT_VERSION, MAGIC, Checkpoint, load_checkpoint, read_header, save_checkpoint
from .layers import activate, dense_backward, dense_forward, lstm_backward, lstm_forward, sigmoid
from .losses import BCE_EPSILON, LOSSES, bce_loss, mae_loss, mse_loss
from .network import ForwardCache, Network, Params, check_params, init_params, param_shapes
from .optim import AdamState, adam_step, clip_gradients, global_norm
from .training import Dataset, EarlyStopping, evaluate_loss, history_to_frame, metrics_to_frame, train

__all__ = [
    'Network', 'ForwardCache', 'Params', 'init_params', 'param_shapes', 'check_params',
    'lstm_forward', 'lstm_backward', 'dense_forward', 'dense_backward', 'activate', 'sigmoid',
    'bce_loss', 'mae_loss', 'mse_loss', 'LOSSES', 'BCE_EPSILON',
    'AdamState', 'adam_step', 'clip_gradients', 'global_norm',
    'Dataset', 'EarlyStopping', 'train', 'evaluate_loss', 'history_to_frame', 'metrics_to_frame',
    'Checkpoint', 'save_checkpoint', 'load_checkpoint', 'read_header', 'MAGIC', 'FORMAT_VERSION',
]
