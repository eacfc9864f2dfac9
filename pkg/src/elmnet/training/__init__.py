from .backprop import bptt_grads, forward_loss, grads_to_dict, network_backward
from .carry import CarrySchedule, carry_policy, carry_prob
from .losses import (LN2, LossConfig, bits_per_step, loss_xent,
                     regularization, softmax, superspike)
from .optim import (OptimConfig, OptimizerState, clip_by_global_norm,
                    optimizer_step, schedule_factor)
from .runner import (RunResult, TrainSettings, evaluate_classification,
                     evaluate_lm, load_checkpoint, save_checkpoint, train_run,
                     write_metrics_csv)

__all__ = [
    "bptt_grads", "forward_loss", "grads_to_dict", "network_backward",
    "CarrySchedule", "carry_policy", "carry_prob", "LN2", "LossConfig",
    "bits_per_step", "loss_xent", "regularization", "softmax", "superspike",
    "OptimConfig", "OptimizerState", "clip_by_global_norm", "optimizer_step",
    "schedule_factor", "RunResult", "TrainSettings",
    "evaluate_classification", "evaluate_lm", "load_checkpoint",
    "save_checkpoint", "train_run", "write_metrics_csv",
]
