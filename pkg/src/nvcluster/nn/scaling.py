"""Readout quality versus cluster size."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

from nvcluster.errors import TrainingError
from nvcluster.nn.model import Architecture, TrainConfig, init_model, split_by_id, train

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScalingRow:
    n_emitters: int
    pearson: float | None
    degenerate: bool = False
    epochs: int = 0
    error: str | None = None


def run_scaling_study(n_list: Sequence[int], datasets: Mapping, config: TrainConfig = TrainConfig(),
                      validation_fraction: float = 0.2, **arch_kwargs) -> list[ScalingRow]:
    """Train one model per cluster size with identical hyperparameters.

    ``datasets`` maps N to a :class:`nvcluster.scc.ScalingDataset`. Training
    failures are recorded in the row and the study moves on.
    """
    rows = []
    for n in n_list:
        data = datasets[n]
        tr = data.train
        idx_train, idx_val = split_by_id(tr.ids, validation_fraction, config.seed)
        arch = Architecture(input_length=data.cluster.n_max + 1, output_width=2 ** n, **arch_kwargs)
        model = init_model(arch, config.seed)
        X, Y = tr.X, tr.labels
        try:
            _, report = train(model, (X[idx_train], Y[idx_train]), (X[idx_val], Y[idx_val]), config,
                              test_set=(data.test.X, data.test.labels),
                              train_ids=tr.ids[idx_train], validation_ids=tr.ids[idx_val])
        except TrainingError as exc:
            log.warning("N=%d training failed: %s", n, exc)
            rows.append(ScalingRow(n, None, error=str(exc)))
            continue
        log.info("N=%d r=%.3f after %d epochs", n, report.test_pearson, report.epochs_completed)
        rows.append(ScalingRow(n, report.test_pearson, report.test_pearson_degenerate,
                               report.epochs_completed))
    return rows
