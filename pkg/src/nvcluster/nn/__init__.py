"""From-scratch numpy readout network."""
from nvcluster.nn.model import (
    Architecture,
    PearsonResult,
    ReadoutModel,
    TrainConfig,
    TrainReport,
    calibrate,
    evaluate,
    forward,
    forward_raw,
    init_model,
    load_model,
    loss,
    loss_and_grads,
    pearson,
    save_model,
    split_by_id,
    train,
)
from nvcluster.nn.scaling import ScalingRow, run_scaling_study

__all__ = [
    "Architecture", "PearsonResult", "ReadoutModel", "ScalingRow", "TrainConfig",
    "TrainReport", "calibrate", "evaluate", "forward", "forward_raw", "init_model",
    "load_model", "loss", "loss_and_grads", "pearson", "run_scaling_study",
    "save_model", "split_by_id", "train",
]
