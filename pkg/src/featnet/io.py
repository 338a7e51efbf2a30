"""Tab-separated file formats.

Edges: ``src<TAB>dst`` per line. Features: ``node<TAB>feature`` per line.
Ids are arbitrary strings, densified to ``0..n-1`` / ``0..m-1`` in order of
first appearance (edges before features) unless a dictionary file
``dense_id<TAB>label`` fixes the mapping. Blank lines and lines starting
with ``#`` are ignored. All files are UTF-8 with ``\\n`` line endings, and
floats are written in shortest round-trip form.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .model import FeatureAssignment, FeatureGraph, InteractionMatrix

log = logging.getLogger(__name__)

EDGES_FILE = "edges.tsv"
FEATURES_FILE = "features.tsv"
NODE_MAP_FILE = "nodes.tsv"
FEATURE_MAP_FILE = "feature_ids.tsv"


def fmt(x: float) -> str:
    return repr(float(x))


def _rows(path, width):
    """Yield ``(line_number, fields)`` for the data lines of a TSV file."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataFormatError(exc.strerror or str(exc), path) from exc
    with fh:
        for no, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != width or any(not f for f in fields):
                raise DataFormatError(
                    f"expected {width} non-empty tab-separated fields, got {line!r}", path, no)
            yield no, fields


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataFormatError(exc.strerror or str(exc), path) from exc


# --------------------------------------------------------------------------
# id dictionaries


class IdMap:
    """Label <-> dense id mapping; grows on lookup unless frozen."""

    def __init__(self, labels=(), frozen=False):
        self.labels = list(labels)
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise DataFormatError("dictionary contains a repeated label")
        self.frozen = frozen

    def __len__(self):
        return len(self.labels)

    def get(self, label, path=None, line=None, kind="id"):
        idx = self.index.get(label)
        if idx is None:
            if self.frozen:
                raise DataFormatError(f"{kind} {label!r} is not in the dictionary", path, line)
            idx = len(self.labels)
            self.index[label] = idx
            self.labels.append(label)
        return idx


def load_id_map(path) -> IdMap:
    pairs = []
    for no, (dense, label) in _rows(path, 2):
        try:
            pairs.append((int(dense), label))
        except ValueError:
            raise DataFormatError(f"dense id {dense!r} is not an integer", path, no) from None
    pairs.sort()
    if [d for d, _ in pairs] != list(range(len(pairs))):
        raise DataFormatError("dense ids must be exactly 0..n-1", path)
    return IdMap([lab for _, lab in pairs], frozen=True)


def save_id_map(labels, path):
    _write_text(path, "".join(f"{i}\t{lab}\n" for i, lab in enumerate(labels)))


# --------------------------------------------------------------------------
# datasets


@dataclass
class DatasetPaths:
    edges: Path
    features: Path
    nodes: Path | None = None
    feature_dict: Path | None = None

    @classmethod
    def in_dir(cls, directory):
        d = Path(directory)
        nodes = d / NODE_MAP_FILE
        feats = d / FEATURE_MAP_FILE
        return cls(d / EDGES_FILE, d / FEATURES_FILE,
                   nodes if nodes.exists() else None, feats if feats.exists() else None)


@dataclass
class Dataset:
    graph: FeatureGraph
    features: FeatureAssignment
    node_labels: list
    feature_labels: list
    duplicate_arcs: int = 0
    duplicate_incidences: int = 0

    def __iter__(self):
        return iter((self.graph, self.features))


def load_dataset(paths: DatasetPaths, mapping_dir=None) -> Dataset:
    """Parse an edge list and a node-feature incidence list.

    Duplicate lines are dropped and counted (a warning is logged). With
    ``mapping_dir`` set, the node and feature dictionaries are written there.
    """
    nodes = load_id_map(paths.nodes) if paths.nodes else IdMap()
    feats = load_id_map(paths.feature_dict) if paths.feature_dict else IdMap()
    src, dst = [], []
    for no, (a, b) in _rows(paths.edges, 2):
        src.append(nodes.get(a, paths.edges, no, "node"))
        dst.append(nodes.get(b, paths.edges, no, "node"))
    owner, feat = [], []
    for no, (a, f) in _rows(paths.features, 2):
        owner.append(nodes.get(a, paths.features, no, "node"))
        feat.append(feats.get(f, paths.features, no, "feature"))
    n, m = len(nodes), len(feats)
    g, dup_a = FeatureGraph.from_arcs_counted(n, np.array(src, dtype=np.int64),
                                              np.array(dst, dtype=np.int64))
    z, dup_f = FeatureAssignment.from_pairs_counted(n, m, np.array(owner, dtype=np.int64),
                                                    np.array(feat, dtype=np.int64))
    if dup_a:
        log.warning("%s: %d duplicate arc line(s) ignored", paths.edges, dup_a)
    if dup_f:
        log.warning("%s: %d duplicate feature line(s) ignored", paths.features, dup_f)
    if mapping_dir is not None:
        d = Path(mapping_dir)
        d.mkdir(parents=True, exist_ok=True)
        save_id_map(nodes.labels, d / NODE_MAP_FILE)
        save_id_map(feats.labels, d / FEATURE_MAP_FILE)
    return Dataset(g, z, nodes.labels, feats.labels, int(dup_a), int(dup_f))


def save_dataset(g: FeatureGraph, z: FeatureAssignment, directory,
                 node_labels=None, feature_labels=None) -> DatasetPaths:
    """Write edges, features and both dictionaries into ``directory``."""
    if g.n != z.n:
        raise DataFormatError("graph and assignment disagree on node count")
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    nl = [str(i) for i in range(g.n)] if node_labels is None else list(node_labels)
    fl = [str(k) for k in range(z.m)] if feature_labels is None else list(feature_labels)
    src, dst = g.arcs()
    _write_text(d / EDGES_FILE, "".join(f"{nl[a]}\t{nl[b]}\n"
                                        for a, b in zip(src.tolist(), dst.tolist())))
    owner, feat = z.pairs()
    _write_text(d / FEATURES_FILE, "".join(f"{nl[a]}\t{fl[k]}\n"
                                           for a, k in zip(owner.tolist(), feat.tolist())))
    save_id_map(nl, d / NODE_MAP_FILE)
    save_id_map(fl, d / FEATURE_MAP_FILE)
    return DatasetPaths.in_dir(d)


# --------------------------------------------------------------------------
# matrices


def save_matrix(w: InteractionMatrix, path):
    """Header ``# m=<m> symmetric=<0|1> fill=<x>`` then ``h<TAB>k<TAB>w`` lines.

    Only entries differing from ``fill`` (0 unless stated) are listed.
    """
    h, k, v = w.entries(bitwise=True)
    head = f"# m={w.m} symmetric={int(w.symmetric)} fill={fmt(w.fill)}\n"
    body = "".join(f"{a}\t{b}\t{fmt(x)}\n" for a, b, x in zip(h.tolist(), k.tolist(), v.tolist()))
    _write_text(path, head + body)


def _parse_header(line, path):
    fields = {}
    for tok in line[1:].split():
        key, sep, val = tok.partition("=")
        if not sep:
            raise DataFormatError(f"bad header token {tok!r}", path, 1)
        fields[key] = val
    try:
        m = int(fields["m"])
        symmetric = fields.get("symmetric", "0") == "1"
        fill = float(fields.get("fill", "0.0"))
    except (KeyError, ValueError):
        raise DataFormatError("header must read '# m=<m> symmetric=<0|1>'", path, 1) from None
    if m < 0:
        raise DataFormatError("m must be non-negative", path, 1)
    return m, symmetric, fill


def load_matrix(path) -> InteractionMatrix:
    try:
        with open(path, encoding="utf-8") as fh:
            first = fh.readline()
    except OSError as exc:
        raise DataFormatError(exc.strerror or str(exc), path) from exc
    if not first.startswith("# m="):
        raise DataFormatError("missing matrix header", path, 1)
    m, symmetric, fill = _parse_header(first.strip(), path)
    h, k, v = [], [], []
    for no, (a, b, x) in _rows(path, 3):
        try:
            ia, ib, fx = int(a), int(b), float(x)
        except ValueError:
            raise DataFormatError("expected integer, integer, float", path, no) from None
        if not (0 <= ia < m and 0 <= ib < m):
            raise DataFormatError(f"entry ({ia}, {ib}) outside m={m}", path, no)
        h.append(ia)
        k.append(ib)
        v.append(fx)
    return InteractionMatrix.from_entries(m, h, k, v, fill=fill, symmetric=symmetric)


# --------------------------------------------------------------------------
# reports


def save_report(report, path):
    """``fold,aupr`` rows then ``mean,<x>`` and ``std,<y>``; JSON sidecar with details."""
    lines = ["fold,aupr\n"]
    lines += [f"{f},{fmt(a)}\n" for f, a in zip(report.folds, report.per_fold_aupr)]
    lines.append(f"mean,{fmt(report.mean)}\n")
    lines.append(f"std,{fmt(report.std)}\n")
    _write_text(path, "".join(lines))
    save_json(report.to_dict(), Path(path).with_suffix(".json"))


def load_report_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    folds = {int(r[0]): float(r[1]) for r in rows[1:] if r[0].isdigit()}
    tail = {r[0]: float(r[1]) for r in rows[1:] if not r[0].isdigit()}
    return folds, tail["mean"], tail["std"]


def save_curve(curve, path):
    rows = "".join(f"{fmt(r)},{fmt(p)}\n" for r, p in curve.points.tolist())
    _write_text(path, "recall,precision\n" + rows)


def save_json(obj, path):
    _write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def load_scored(path):
    """``src<TAB>dst<TAB>score<TAB>label`` lines, label in {+1, -1, 1, 0}."""
    src, dst, score, label = [], [], [], []
    for no, (a, b, s, y) in _rows(path, 4):
        try:
            sv = float(s)
            yv = int(y)
        except ValueError:
            raise DataFormatError("score must be a float and label an integer", path, no) from None
        if not np.isfinite(sv):
            raise DataFormatError("score must be finite", path, no)
        if yv not in (1, -1, 0):
            raise DataFormatError(f"label must be 1, -1 or 0, got {y}", path, no)
        src.append(a)
        dst.append(b)
        score.append(sv)
        label.append(1 if yv == 1 else -1)
    return src, dst, np.array(score), np.array(label, dtype=np.int8)


def ensure_parent(path):
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
