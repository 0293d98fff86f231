"""Command-line front end.

Every command reads a YAML config (``--config``), takes a global ``--seed``
and writes into ``--out``. Outputs carry provenance (tool version, command,
seed, config hash) and are bit-identical when re-run with the same inputs.

Exit codes: 0 success, 2 invalid input, 3 convergence or training failure,
4 file-system errors.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from nvcluster import __version__, calibration, scc
from nvcluster.emitter import Histogram
from nvcluster.errors import (
    ConvergenceError,
    ModelFormatError,
    ParameterError,
    TrainingError,
    TruncationError,
)
from nvcluster.io import (
    Dataset,
    Provenance,
    config_hash,
    load_config,
    read_dataset,
    resolve_cluster,
    write_dataset,
    write_json,
    write_table,
)
from nvcluster.rng import spawn
from nvcluster.nn import (
    Architecture,
    TrainConfig,
    init_model,
    load_model,
    pearson,
    run_scaling_study,
    save_model,
    split_by_id,
    train,
)

log = logging.getLogger("nvcluster")

EXIT_OK, EXIT_INVALID, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 4
THREADS_ENV = "NVCLUSTER_THREADS"


class Run:
    """Resolved command context: config, seed, output directory, provenance."""

    def __init__(self, args, command: str):
        self.args = args
        self.config = load_config(args.config)
        seed = args.seed if args.seed is not None else self.config.get("seed", 0)
        self.seed = int(seed)
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.threads = max(1, int(args.threads))
        self.provenance = Provenance(command, self.seed, config_hash(self.config))

    def section(self, name: str) -> dict:
        sec = self.config.get(name) or {}
        if not isinstance(sec, dict):
            raise ParameterError(f"config section {name!r} must be a mapping")
        return sec


def _thetas(section: dict, key: str = "thetas"):
    """Angles in units of pi from the config, or the default five-point grid."""
    if key not in section:
        return scc.RABI_THETAS
    return tuple(math.pi * float(t) for t in section[key])


def _label_row(probs, n: int, prefix: str = "p_") -> dict:
    return {f"{prefix}{name}": float(v) for name, v in zip(scc.basis_labels(n), probs)}


# -- simulate ---------------------------------------------------------------

def cmd_simulate(run: Run) -> int:
    sec = run.section("simulate")
    cluster = resolve_cluster(run.config)
    mode = sec.get("mode", "basis")
    shots = int(sec.get("shots", 10_000))
    n = cluster.size
    extra = {}
    if mode == "basis":
        recs = scc.generate_basis_dataset(cluster, shots, run.seed, method=sec.get("method", "exact"))
        records = [{"id": r.metadata["record_id"], "basis": r.metadata["basis"],
                    "label": r.label.probs.tolist(), "shots": shots} for r in recs]
        hists = [r.histogram for r in recs]
    elif mode == "labels":
        labels = sec.get("labels")
        if not isinstance(labels, dict) or not labels:
            raise ParameterError("simulate.labels must map record names to probability vectors")
        rngs = spawn(run.seed, len(labels))
        sampler = scc.HistogramSampler(cluster) if sec.get("method", "exact") == "exact" else None
        records, hists = [], []
        for (name, probs), rng in zip(labels.items(), rngs):
            label = scc.SpinStateLabel(np.asarray(probs, dtype=float))
            hists.append(scc.generate_histogram(cluster, label, shots, rng,
                                                method=sec.get("method", "exact"), sampler=sampler))
            records.append({"id": str(name), "label": label.probs.tolist(), "shots": shots})
    elif mode == "rabi-grid":
        data = scc.rabi_grid_dataset(cluster, int(sec.get("histograms_per_point", 64)), shots,
                                     run.seed, grid=_thetas(sec, "grid"),
                                     id_prefix=str(sec.get("id_prefix", "rabi")),
                                     full_grid=bool(sec.get("full_grid", True)))
        records = [{"id": str(i), "label": lab.tolist(), "thetas": th.tolist(), "shots": shots}
                   for i, lab, th in zip(data.ids, data.labels, data.thetas)]
        hists = [Histogram(c) for c in data.counts]
    elif mode == "power-sweep":
        powers = [float(p) for p in sec.get("powers", (0.5, 0.75, 1.0, 1.5, 2.0))]
        sweep = calibration.simulate_power_sweep(cluster, powers, shots, run.seed,
                                                 exponents=sec.get("exponents"),
                                                 reference_power=float(sec.get("reference_power", 1.0)))
        cluster = cluster.replace(n_max=sweep.n_max)
        records = [{"id": f"power-{k:02d}", "power": p, "shots": shots}
                   for k, p in enumerate(sweep.powers)]
        hists = list(sweep.histograms)
    else:
        raise ParameterError(f"unknown simulate mode {mode!r}")
    write_dataset(run.out, Dataset(mode, cluster, records, hists, extra), run.provenance)
    log.info("wrote %d histograms for %d emitters to %s", len(hists), n, run.out)
    return EXIT_OK


# -- fit --------------------------------------------------------------------

def cmd_fit(run: Run) -> int:
    sec = run.section("fit")
    data = read_dataset(run.args.data)
    template = resolve_cluster(run.config) if "cluster" in run.config else data.cluster
    template = template.replace(readout_time=data.cluster.readout_time, n_max=data.cluster.n_max)
    kwargs = {"n_starts": int(sec.get("n_starts", 8)), "workers": run.threads}
    if "free" in sec:
        kwargs["free"] = tuple(sec["free"])
    if "weights" in sec:
        kwargs["weights"] = sec["weights"]
    if data.kind == "power-sweep":
        sweep = calibration.PowerSweepDataset(tuple(float(r["power"]) for r in data.records),
                                              tuple(data.histograms), data.cluster.readout_time)
        result = calibration.fit_power_scaling(sweep, template, seed=run.seed, **kwargs)
        calibration.write_fit_report(result, run.out / "fit_report.json", run.provenance.as_dict())
        write_table(run.out / "power_scaling.tsv", result.table_rows(), run.provenance)
        rows = []
        for p, fit in zip(result.powers, result.fits):
            for i, e in enumerate(fit.emitters):
                rows.append({"power": p, "emitter": i, **{k: getattr(e, k) for k in calibration.RATE_NAMES},
                             "nll": fit.nll, "converged": fit.converged})
        write_table(run.out / "fits.tsv", rows, run.provenance)
        converged = result.converged
    else:
        fits, rows = [], []
        seeds = spawn(run.seed, len(data.histograms))
        for rec, hist, rng in zip(data.records, data.histograms, seeds):
            fit = calibration.fit_histogram(hist, template, seed=rng, **kwargs)
            fits.append({"id": rec["id"], **fit.to_dict()})
            for i, e in enumerate(fit.emitters):
                rows.append({"id": rec["id"], "emitter": i,
                             **{k: getattr(e, k) for k in calibration.RATE_NAMES},
                             "nll": fit.nll, "converged": fit.converged})
        write_json(run.out / "fit_report.json", {"kind": "fits", "fits": fits}, run.provenance)
        write_table(run.out / "fits.tsv", rows, run.provenance)
        converged = all(f["converged"] for f in fits)
    if not converged:
        log.warning("at least one fit did not converge; see fit_report.json")
        return EXIT_CONVERGENCE
    return EXIT_OK


# -- train / predict --------------------------------------------------------

def _train_config(sec: dict, seed: int) -> TrainConfig:
    keys = ("learning_rate", "epochs", "batch_size", "l2", "patience")
    casts = {"epochs": int, "batch_size": int, "patience": int}
    values = {k: casts.get(k, float)(sec[k]) for k in keys if k in sec}
    return TrainConfig(seed=seed, **values)


def _arch_kwargs(sec: dict) -> dict:
    out = {}
    for k in ("kernel_size", "channels", "pool"):
        if k in sec:
            out[k] = int(sec[k])
    if "dense" in sec:
        out["dense"] = tuple(int(d) for d in sec["dense"])
    return out


def cmd_train(run: Run) -> int:
    sec = run.section("train")
    data = read_dataset(run.args.data)
    X, Y, ids = data.X, data.labels(), data.ids
    idx_train, idx_val = split_by_id(ids, float(sec.get("validation_fraction", 0.2)), run.seed)
    config = _train_config(sec, run.seed)
    arch = Architecture(input_length=X.shape[1], output_width=Y.shape[1], **_arch_kwargs(sec))
    model = init_model(arch, run.seed)
    test = None
    if run.args.test is not None:
        tdata = read_dataset(run.args.test)
        if tdata.X.shape[1] != X.shape[1]:
            raise ParameterError("test dataset n_max differs from the training dataset")
        overlap = set(tdata.ids.tolist()) & set(ids.tolist())
        if overlap:
            raise ParameterError(f"test and training datasets share record ids, e.g. {sorted(overlap)[0]}")
        test = (tdata.X, tdata.labels())
    model, report = train(model, (X[idx_train], Y[idx_train]), (X[idx_val], Y[idx_val]), config,
                          test_set=test, train_ids=ids[idx_train], validation_ids=ids[idx_val])
    save_model(model, run.out / "model.json")
    (run.out / "loss_curve.tsv").write_text(report.loss_curve_text(run.provenance.as_dict()))
    doc = {"epochs_completed": report.epochs_completed, "best_epoch": report.best_epoch,
           "stopped_early": report.stopped_early, "final_train_loss": report.train_loss[-1],
           "best_val_loss": min(report.val_loss), "n_train": int(idx_train.size),
           "n_validation": int(idx_val.size), "test_pearson": report.test_pearson,
           "test_pearson_degenerate": report.test_pearson_degenerate,
           "component_pearson": report.component_pearson}
    write_json(run.out / "train_report.json", doc, run.provenance)
    log.info("trained %d epochs; test r=%s", report.epochs_completed, report.test_pearson)
    return EXIT_OK


def _load_readout(path, cluster):
    if path is None:
        return scc.IDEAL
    model = load_model(path)
    if model.n_max != cluster.n_max or model.arch.output_width != 2 ** cluster.size:
        raise ParameterError(
            f"model expects n_max={model.n_max} and {model.n_emitters} emitters, cluster has "
            f"n_max={cluster.n_max} and {cluster.size}")
    return model


def cmd_predict(run: Run) -> int:
    model = load_model(run.args.model)
    data = read_dataset(run.args.data)
    if data.X.shape[1] != model.arch.input_length:
        raise ParameterError(f"dataset n_max={data.X.shape[1] - 1} does not match model "
                             f"n_max={model.n_max}")
    pred = model.predict(data.X)
    n = model.n_emitters
    ex = scc.expectations(pred)
    rows = []
    for k, rec in enumerate(data.records):
        row = {"id": rec["id"], **_label_row(pred[k], n)}
        row.update({f"sz{i + 1}": float(ex.sz[k, i]) for i in range(n)})
        if n >= 2:
            row["parity"] = float(ex.pair(0, 1)[k])
        rows.append(row)
    write_table(run.out / "predictions.tsv", rows, run.provenance)
    summary = {"n_records": len(rows)}
    if all("label" in r for r in data.records):
        res = pearson(pred, data.labels())
        summary.update(pearson=res.r, pearson_degenerate=res.degenerate)
    write_json(run.out / "predict_summary.json", summary, run.provenance)
    return EXIT_OK


# -- experiments ------------------------------------------------------------

def cmd_tomography(run: Run) -> int:
    sec = run.section("tomography")
    cluster = resolve_cluster(run.config)
    readout = _load_readout(run.args.model, cluster)
    table = scc.run_rabi_tomography(cluster, readout, thetas=_thetas(sec),
                                    histograms_per_theta=int(sec.get("histograms_per_theta", 64)),
                                    shots=int(sec.get("shots", 10_000)), seed=run.seed)
    rows = [{**r, "parity_ideal": math.cos(r["theta"]) ** 2 / 4} for r in table.rows()]
    write_table(run.out / "tomography.tsv", rows, run.provenance)
    return EXIT_OK


def cmd_sense(run: Run) -> int:
    sec = run.section("sense")
    cluster = resolve_cluster(run.config)
    readout = _load_readout(run.args.model, cluster)
    res = scc.run_correlated_sensing(cluster, readout, n_histograms=int(sec.get("n_histograms", 200)),
                                     shots=int(sec.get("shots", 10_000)), seed=run.seed,
                                     anti=bool(sec.get("anti", False)))
    rows = []
    for k, s in enumerate(res.block_signals):
        row = {"block": k, "signal": int(s)}
        row.update({f"sz{i + 1}": float(v) for i, v in enumerate(res.block_sz[k])})
        row["parity"] = float(res.block_parity[k])
        rows.append(row)
    write_table(run.out / "sensing_blocks.tsv", rows, run.provenance)
    write_table(run.out / "sensing.tsv", [res.as_dict()], run.provenance)
    return EXIT_OK


def cmd_scale(run: Run) -> int:
    sec = run.section("scale")
    n_list = [int(n) for n in sec.get("n_list", (2, 3, 4, 5, 6))]
    seeds = [int(s) for s in sec.get("seeds", [run.seed])]
    base = None
    if "cluster" in run.config:
        base = resolve_cluster(run.config).emitters[-1]
    config_sec = {k: sec[k] for k in sec if k in ("learning_rate", "epochs", "batch_size", "l2", "patience")}
    rows = []
    for s in seeds:
        datasets = scc.generate_scaling_datasets(
            n_list, float(sec.get("spread", 1.0)), int(sec.get("shots", 10_000)), s, base=base,
            readout_time=float(sec.get("readout_time", 3e-4)),
            n_train=int(sec.get("n_train", 1600)), n_test=int(sec.get("n_test", 400)))
        study = run_scaling_study(n_list, datasets, _train_config(config_sec, s),
                                  **_arch_kwargs(sec))
        for row in study:
            rows.append({"n_emitters": row.n_emitters, "seed": s, "pearson": row.pearson,
                         "degenerate": row.degenerate, "epochs": row.epochs,
                         "error": row.error or ""})
    write_table(run.out / "scaling.tsv", rows, run.provenance)
    summary = []
    for n in n_list:
        vals = [r["pearson"] for r in rows if r["n_emitters"] == n and r["pearson"] is not None]
        summary.append({"n_emitters": n, "median_pearson": float(np.median(vals)) if vals else None,
                        "runs": len(vals)})
    write_table(run.out / "scaling_summary.tsv", summary, run.provenance)
    return EXIT_CONVERGENCE if any(r["error"] for r in rows) else EXIT_OK


def cmd_odmr(run: Run) -> int:
    sec = run.section("odmr")
    cluster = resolve_cluster(run.config)
    try:
        resonances = [scc.Resonance(float(r["center"]), float(r["linewidth"]),
                                    float(r.get("amplitude", 1.0))) for r in sec["resonances"]]
        grid = sec["freq_grid"]
        freqs = np.linspace(float(grid["start"]), float(grid["stop"]), int(grid["num"]))
    except (KeyError, TypeError) as exc:
        raise ParameterError(f"odmr section needs resonances and freq_grid: {exc}") from exc
    res = scc.run_odmr_demux(cluster, resonances, freqs, shots=int(sec.get("shots", 10_000)),
                             seed=run.seed)
    rows = []
    for k, f in enumerate(res.freqs):
        row = {"freq": float(f)}
        row.update({f"peak{j}": float(v) for j, v in enumerate(res.peak_rates[k])})
        row.update({f"lone{i + 1}": float(res.trace(i)[k]) for i in range(cluster.size)})
        row.update({f"occupancy{i + 1}": float(res.occupancy[k, i]) for i in range(cluster.size)})
        rows.append(row)
    write_table(run.out / "odmr.tsv", rows, run.provenance)
    return EXIT_OK


COMMANDS = {
    "simulate": (cmd_simulate, "simulate histogram datasets"),
    "fit": (cmd_fit, "maximum-likelihood rate fits of simulated or measured histograms"),
    "train": (cmd_train, "train the histogram readout network"),
    "predict": (cmd_predict, "apply a trained readout network to a dataset"),
    "tomography": (cmd_tomography, "joint Rabi rotation and readout of expectation values"),
    "sense": (cmd_sense, "correlated random-phase sensing blocks"),
    "scale": (cmd_scale, "readout quality versus cluster size"),
    "odmr": (cmd_odmr, "demultiplexed ODMR sweep"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run config")
    common.add_argument("--seed", type=int, help="global seed (overrides the config)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--threads", type=int, default=int(os.environ.get(THREADS_ENV, "1")),
                        help=f"worker threads (default ${THREADS_ENV} or 1)")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="nvcluster", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {name: sub.add_parser(name, parents=[common], help=text)
               for name, (_, text) in COMMANDS.items()}
    parsers["fit"].add_argument("--data", type=Path, required=True, help="dataset directory")
    parsers["train"].add_argument("--data", type=Path, required=True, help="training dataset")
    parsers["train"].add_argument("--test", type=Path, help="held-out test dataset")
    parsers["predict"].add_argument("--model", type=Path, required=True)
    parsers["predict"].add_argument("--data", type=Path, required=True)
    for name in ("tomography", "sense"):
        parsers[name].add_argument("--model", type=Path,
                                   help="trained model; omit to use the true labels")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    func = COMMANDS[args.command][0]
    try:
        return func(Run(args, args.command))
    except (ParameterError, TruncationError, ModelFormatError) as exc:
        print(f"nvcluster {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConvergenceError, TrainingError) as exc:
        print(f"nvcluster {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"nvcluster {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
