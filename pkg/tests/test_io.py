import logging

import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from featnet import DataFormatError, FeatureAssignment, FeatureGraph, InteractionMatrix
from featnet.evaluation import EvalReport, pr_curve_arrays
from featnet.io import (DatasetPaths, load_dataset, load_id_map, load_matrix,
                        load_report_csv, load_scored, save_curve, save_dataset,
                        save_matrix, save_report)
from featnet.synthgen import GraphFamilySpec, generate_one


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_minimal_dataset(tmp_path):
    e = write(tmp_path / "e.tsv", "0\t1\n")
    f = write(tmp_path / "f.tsv", "0\ta\n1\tb\n")
    g, z = load_dataset(DatasetPaths(e, f))
    assert (g.n, z.m, g.num_arcs) == (2, 2, 1)


def test_duplicate_arcs_counted_once(tmp_path, caplog):
    e = write(tmp_path / "e.tsv", "x\ty\nx\ty\ny\tx\n")
    f = write(tmp_path / "f.tsv", "x\tk\ny\tk\n")
    with caplog.at_level(logging.WARNING):
        data = load_dataset(DatasetPaths(e, f))
    assert data.graph.num_arcs == 2
    assert data.duplicate_arcs == 1
    assert "1 duplicate arc" in caplog.text


def test_feature_only_node_is_isolated(tmp_path):
    e = write(tmp_path / "e.tsv", "a\tb\n")
    f = write(tmp_path / "f.tsv", "a\tf1\nc\tf2\n")
    data = load_dataset(DatasetPaths(e, f))
    assert data.node_labels == ["a", "b", "c"]
    assert data.graph.n == 3 and data.graph.out_degree()[2] == 0
    assert data.features.features_of(2).tolist() == [1]


def test_comments_and_blank_lines_skipped(tmp_path):
    e = write(tmp_path / "e.tsv", "# header\n\n1\t2\n")
    f = write(tmp_path / "f.tsv", "1\tq\n")
    data = load_dataset(DatasetPaths(e, f))
    assert data.graph.num_arcs == 1


@pytest.mark.parametrize("text,line", [("0\t1\n0\n", 2), ("0\t1\t2\n", 1), ("\t1\n", 1)])
def test_malformed_line_reports_number(tmp_path, text, line):
    e = write(tmp_path / "e.tsv", text)
    f = write(tmp_path / "f.tsv", "0\ta\n")
    with pytest.raises(DataFormatError) as err:
        load_dataset(DatasetPaths(e, f))
    assert err.value.line == line
    assert f"e.tsv:{line}:" in str(err.value)


def test_dangling_feature_reference(tmp_path):
    e = write(tmp_path / "e.tsv", "0\t1\n")
    f = write(tmp_path / "f.tsv", "0\ta\n1\tzzz\n")
    fd = write(tmp_path / "fd.tsv", "0\ta\n")
    with pytest.raises(DataFormatError) as err:
        load_dataset(DatasetPaths(e, f, feature_dict=fd))
    assert err.value.line == 2


def test_unknown_node_with_dictionary(tmp_path):
    e = write(tmp_path / "e.tsv", "0\t9\n")
    f = write(tmp_path / "f.tsv", "0\ta\n")
    nd = write(tmp_path / "nd.tsv", "0\t0\n1\t1\n")
    with pytest.raises(DataFormatError):
        load_dataset(DatasetPaths(e, f, nodes=nd))


def test_missing_file(tmp_path):
    with pytest.raises(DataFormatError):
        load_dataset(DatasetPaths(tmp_path / "nope.tsv", tmp_path / "nope2.tsv"))


def test_bad_dictionary(tmp_path):
    with pytest.raises(DataFormatError):
        load_id_map(write(tmp_path / "d.tsv", "0\ta\n2\tb\n"))
    with pytest.raises(DataFormatError):
        load_id_map(write(tmp_path / "d.tsv", "x\ta\n"))


def test_mapping_files_written(tmp_path):
    e = write(tmp_path / "e.tsv", "n7\tn3\n")
    f = write(tmp_path / "f.tsv", "n3\tred\n")
    load_dataset(DatasetPaths(e, f), mapping_dir=tmp_path / "maps")
    assert (tmp_path / "maps" / "nodes.tsv").read_text() == "0\tn7\n1\tn3\n"
    assert (tmp_path / "maps" / "feature_ids.tsv").read_text() == "0\tred\n"


def test_generated_dataset_round_trip(tmp_path):
    z, _, g = generate_one(GraphFamilySpec.named("sigmoid-normal", 150), 5)
    paths = save_dataset(g, z, tmp_path / "d")
    back = load_dataset(paths)
    assert back.graph == g and back.features == z


@given(arcs=st.sets(st.tuples(st.integers(0, 7), st.integers(0, 7)), max_size=20),
       incid=st.sets(st.tuples(st.integers(0, 7), st.integers(0, 4)), max_size=20))
@settings(max_examples=30)
def test_dataset_round_trip_with_labels(tmp_path_factory, arcs, incid):
    d = tmp_path_factory.mktemp("rt")
    g = FeatureGraph.from_arcs(8, np.array([a for a, _ in arcs], dtype=np.int64),
                               np.array([b for _, b in arcs], dtype=np.int64))
    z = FeatureAssignment.from_pairs(8, 5, np.array([a for a, _ in incid], dtype=np.int64),
                                     np.array([b for _, b in incid], dtype=np.int64))
    labels = [f"node-{i}" for i in range(8)]
    back = load_dataset(save_dataset(g, z, d, labels, list("abcde")))
    assert back.graph == g and back.features == z and back.node_labels == labels


# --------------------------------------------------------------------------
# matrices


def test_matrix_line_format(tmp_path):
    w = InteractionMatrix.zeros(8)
    w[3, 7] = -0.5
    save_matrix(w, tmp_path / "w.tsv")
    lines = (tmp_path / "w.tsv").read_text().splitlines()
    assert lines == ["# m=8 symmetric=0 fill=0.0", "3\t7\t-0.5"]


def test_zero_matrix_is_header_only(tmp_path):
    save_matrix(InteractionMatrix.zeros(4, symmetric=True), tmp_path / "w.tsv")
    assert (tmp_path / "w.tsv").read_text() == "# m=4 symmetric=1 fill=0.0\n"
    back = load_matrix(tmp_path / "w.tsv")
    assert back.m == 4 and back.symmetric and not back.to_dense().any()


@given(values=st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=9,
                       max_size=9))
@example(values=[0.0] * 8 + [-0.0])
@settings(max_examples=50)
def test_matrix_round_trip_bitwise(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("w") / "w.tsv"
    w = InteractionMatrix.from_dense(np.array(values).reshape(3, 3))
    save_matrix(w, path)
    back = load_matrix(path)
    assert back.to_dense().tobytes() == w.to_dense().tobytes()


@pytest.mark.parametrize("storage", ["dense", "sparse"])
def test_matrix_round_trip_with_fill(tmp_path, storage):
    w = InteractionMatrix.zeros(30, fill=-50.0, storage=storage)
    w[1, 2] = -0.25
    w[29, 0] = 1e-300
    save_matrix(w, tmp_path / "w.tsv")
    back = load_matrix(tmp_path / "w.tsv")
    assert back == w
    assert back.fill == -50.0


@pytest.mark.parametrize("text", ["0\t1\t2.0\n", "# m=2 symmetric=0\n0\t5\t1.0\n",
                                  "# m=2 symmetric=0\n0\t1\tabc\n", "# m=x\n"])
def test_matrix_parse_errors(tmp_path, text):
    with pytest.raises(DataFormatError):
        load_matrix(write(tmp_path / "w.tsv", text))


# --------------------------------------------------------------------------
# reports


def test_report_csv(tmp_path):
    rep = EvalReport.from_folds([0, 2], [0.75, 0.5], skipped=[(1, "no arcs")])
    save_report(rep, tmp_path / "r.csv")
    text = (tmp_path / "r.csv").read_text()
    assert text == "fold,aupr\n0,0.75\n2,0.5\nmean,0.625\nstd,0.125\n"
    folds, mean, std = load_report_csv(tmp_path / "r.csv")
    assert folds == {0: 0.75, 2: 0.5} and (mean, std) == (0.625, 0.125)
    assert '"reason": "no arcs"' in (tmp_path / "r.json").read_text()


def test_curve_csv(tmp_path):
    save_curve(pr_curve_arrays([0.9, 0.8, 0.7], [1, -1, 1]), tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "recall,precision"
    assert "0.5,1.0" in lines and "1.0,0.6666666666666666" in lines


def test_scored_file(tmp_path):
    p = write(tmp_path / "s.tsv", "a\tb\t0.5\t1\na\tc\t-2\t-1\nb\tc\t1e-3\t0\n")
    _, _, score, label = load_scored(p)
    assert score.tolist() == [0.5, -2.0, 1e-3] and label.tolist() == [1, -1, -1]
    with pytest.raises(DataFormatError):
        load_scored(write(tmp_path / "bad.tsv", "a\tb\tnan\t1\n"))
    with pytest.raises(DataFormatError):
        load_scored(write(tmp_path / "bad.tsv", "a\tb\t0.1\t2\n"))
