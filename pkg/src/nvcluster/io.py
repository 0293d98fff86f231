"""File formats: YAML run configs, histogram datasets with manifests, TSV tables."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import yaml

from nvcluster import __version__
from nvcluster.emitter import ClusterModel, Histogram
from nvcluster.errors import ParameterError

MANIFEST = "manifest.json"
PRESETS = {"paper-pair"}


def load_config(path) -> dict:
    """Parse a YAML run config. An absent path yields an empty config."""
    if path is None:
        return {}
    path = Path(path)
    text = path.read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParameterError(f"{path}: invalid YAML: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ParameterError(f"{path}: top level must be a mapping")
    data["_base_dir"] = str(path.resolve().parent)
    return data


def config_hash(config: Mapping) -> str:
    public = {k: v for k, v in config.items() if not k.startswith("_")}
    blob = json.dumps(public, sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def resolve_cluster(config: Mapping) -> ClusterModel:
    """Cluster from ``config['cluster']``: an inline mapping, a YAML path or a preset name."""
    from nvcluster.scc import paper_pair_cluster

    spec = config.get("cluster")
    if spec is None:
        raise ParameterError("config has no 'cluster' entry")
    if isinstance(spec, str):
        if spec in PRESETS:
            return paper_pair_cluster()
        path = Path(config.get("_base_dir", ".")) / spec
        try:
            spec = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ParameterError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(spec, dict):
        raise ParameterError("cluster entry must be a mapping, a file path or a preset name")
    return ClusterModel.from_dict(spec)


@dataclass(frozen=True)
class Provenance:
    command: str
    seed: int
    config_sha256: str
    version: str = __version__

    def as_dict(self) -> dict:
        return {"tool": "nvcluster", "version": self.version, "command": self.command,
                "seed": self.seed, "config_sha256": self.config_sha256}


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


def write_table(path, rows: list[dict], provenance: Provenance | None = None,
                columns: Iterable[str] | None = None) -> None:
    """Tab-separated table with ``# key: value`` provenance lines on top."""
    columns = list(columns or (rows[0].keys() if rows else []))
    lines = [f"# {k}: {v}" for k, v in (provenance.as_dict() if provenance else {}).items()]
    lines.append("\t".join(columns))
    lines.extend("\t".join(_fmt(r.get(c)) for c in columns) for r in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def read_table(path) -> list[dict]:
    rows, columns = [], None
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        cells = line.split("\t")
        if columns is None:
            columns = cells
            continue
        rows.append(dict(zip(columns, cells)))
    return rows


def write_json(path, doc: dict, provenance: Provenance | None = None) -> None:
    if provenance is not None:
        doc = {**doc, "provenance": provenance.as_dict()}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


@dataclass
class Dataset:
    """Histograms on disk plus their per-record metadata."""

    kind: str
    cluster: ClusterModel
    records: list[dict]
    histograms: list[Histogram]
    extra: dict = field(default_factory=dict)

    @property
    def counts(self) -> np.ndarray:
        return np.array([h.counts for h in self.histograms])

    @property
    def X(self) -> np.ndarray:
        c = self.counts
        return c / c.sum(axis=1, keepdims=True)

    @property
    def ids(self) -> np.ndarray:
        return np.array([r["id"] for r in self.records])

    def labels(self) -> np.ndarray:
        if any("label" not in r for r in self.records):
            raise ParameterError(f"dataset of kind {self.kind!r} carries no spin labels")
        return np.array([r["label"] for r in self.records], dtype=float)


def write_dataset(out_dir, dataset: Dataset, provenance: Provenance) -> Path:
    out_dir = Path(out_dir)
    (out_dir / "histograms").mkdir(parents=True, exist_ok=True)
    header = provenance.as_dict()
    records = []
    for rec, hist in zip(dataset.records, dataset.histograms):
        rel = f"histograms/{rec['id']}.tsv"
        (out_dir / rel).write_text(hist.to_text({**header, "record": rec["id"],
                                                 "shots": hist.total_shots}))
        records.append({**rec, "file": rel})
    doc = {"kind": dataset.kind, "cluster": dataset.cluster.to_dict(),
           "n_max": dataset.cluster.n_max, "records": records, **dataset.extra}
    write_json(out_dir / MANIFEST, doc, provenance)
    return out_dir / MANIFEST


def read_dataset(path) -> Dataset:
    """Load a dataset from its directory or manifest path."""
    path = Path(path)
    manifest = path / MANIFEST if path.is_dir() else path
    if not manifest.exists():
        raise FileNotFoundError(f"no dataset manifest at {manifest}")
    try:
        doc = json.loads(manifest.read_text())
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{manifest}: invalid JSON: {exc}") from exc
    base = manifest.parent
    try:
        cluster = ClusterModel.from_dict(doc["cluster"])
        records = doc["records"]
        hists = [Histogram.from_text((base / r["file"]).read_text()) for r in records]
    except KeyError as exc:
        raise ParameterError(f"{manifest}: missing field {exc}") from exc
    n_max = doc.get("n_max", cluster.n_max)
    padded = []
    for r, h in zip(records, hists):
        if h.n_max > n_max:
            raise ParameterError(f"record {r['id']} exceeds the dataset n_max={n_max}")
        padded.append(Histogram(np.pad(h.counts, (0, n_max - h.n_max))))
    extra = {k: v for k, v in doc.items()
             if k not in ("kind", "cluster", "n_max", "records", "provenance")}
    return Dataset(doc.get("kind", "histograms"), cluster, records, padded, extra)
