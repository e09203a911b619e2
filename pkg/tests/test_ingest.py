from __future__ import annotations

import numpy as np
import pytest

from eventcast import schemas
from eventcast.errors import DataError, SchemaError
from eventcast.ingest import (
    CATEGORICAL, DROP, NUMERIC, PASSTHROUGH, encode_with, load_csv, ordinal_encode, resolve_schema,
)


def write(tmp_path, text, name="f.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_unsw_schema_shape():
    s = resolve_schema("unsw-nb15")
    feats = s.feature_columns
    # id is kept as a numeric feature (it is expanded like any other counter)
    assert len(feats) == 43
    assert sum(c.kind == CATEGORICAL for c in feats) == 26
    assert sum(c.kind == NUMERIC for c in feats) == 17
    assert s.label_column == "attack_cat"
    assert len(s.label_classes) == 10
    assert s.kind_of("label") == DROP


def test_cicids_schema_shape():
    s = resolve_schema("cicids-17")
    assert len(s.feature_columns) == 78
    assert s.label_column == "Label"


def test_infer_two_columns(tmp_path):
    p = write(tmp_path, "x,attack_cat\n1.5,a\n2,b\n")
    s = resolve_schema("infer", p, "attack_cat")
    assert [(c.name, c.kind) for c in s.feature_columns] == [("x", NUMERIC)]


def test_infer_needs_label(tmp_path):
    p = write(tmp_path, "x,y\n1,a\n")
    with pytest.raises(SchemaError):
        resolve_schema("infer", p, None)
    with pytest.raises(SchemaError):
        resolve_schema("infer", p, "attack_cat")


def test_unknown_schema():
    with pytest.raises(SchemaError):
        resolve_schema("kdd99")


def test_infer_drops_addresses(tmp_path):
    p = write(tmp_path, "srcip,proto,attack_cat\n1.2.3.4,tcp,a\n5.6.7.8,udp,b\n")
    s = resolve_schema("infer", p, "attack_cat")
    assert s.kind_of("srcip") == DROP
    ds = ordinal_encode(load_csv(p, s))
    assert ds.feature_names == ["proto"]


def test_load_well_formed(tmp_path):
    p = write(tmp_path, "x,attack_cat\n1,a\n2,b\n3,a\n4,b\n")
    t = load_csv(p, resolve_schema("infer", p, "attack_cat"))
    assert (t.row_count, t.dropped) == (4, 0)


def test_corrupt_cell_dropped(tmp_path):
    good = "x,attack_cat\n1,a\n2,b\n3,a\n4,b\n"
    schema = resolve_schema("infer", write(tmp_path, good, "good.csv"), "attack_cat")
    p = write(tmp_path, "x,attack_cat\n1,a\nzz,b\n3,a\n4,b\n")
    t = load_csv(p, schema)
    assert (t.row_count, t.dropped) == (3, 1)
    assert t.dropped_lines == [3]


def test_nonfinite_and_negative_dropped(tmp_path):
    schema = resolve_schema("infer", write(tmp_path, "x,attack_cat\n1,a\n2,b\n", "g.csv"), "attack_cat")
    p = write(tmp_path, "x,attack_cat\n1,a\ninf,b\n-3,a\n4,b\n5,a\n6,b\n")
    assert load_csv(p, schema).dropped == 2


def test_mostly_corrupt_is_schema_mismatch(tmp_path):
    schema = resolve_schema("infer", write(tmp_path, "x,attack_cat\n1,a\n2,b\n", "g.csv"), "attack_cat")
    p = write(tmp_path, "x,attack_cat\nq,a\nr,b\n3,a\n")
    with pytest.raises(SchemaError):
        load_csv(p, schema)


def test_missing_file_and_header(tmp_path):
    schema = resolve_schema("infer", write(tmp_path, "x,attack_cat\n1,a\n2,b\n", "g.csv"), "attack_cat")
    with pytest.raises(DataError):
        load_csv(tmp_path / "nope.csv", schema)
    with pytest.raises(DataError):
        load_csv(write(tmp_path, "", "empty.csv"), schema)
    with pytest.raises(SchemaError):
        load_csv(write(tmp_path, "y,attack_cat\n1,a\n", "other.csv"), schema)


def test_header_order_insensitive(tmp_path):
    schema = resolve_schema("infer", write(tmp_path, "x,attack_cat\n1,a\n2,b\n", "g.csv"), "attack_cat")
    t = load_csv(write(tmp_path, "attack_cat,x\na,1\nb,2\n"), schema)
    assert t.columns["x"].tolist() == [1.0, 2.0]


def test_lexicographic_codes(tmp_path):
    p = write(tmp_path, "proto,attack_cat\ntcp,a\nudp,b\ntcp,a\n")
    ds = ordinal_encode(load_csv(p, resolve_schema("infer", p, "attack_cat")))
    assert ds.features[:, 0].tolist() == [0, 1, 0]
    assert ds.feature_meta[0].code_map == {"tcp": 0, "udp": 1}
    assert ds.labels.tolist() == [0, 1, 0]


def test_numeric_strings_sort_numerically(tmp_path):
    p = write(tmp_path, "ttl,attack_cat\n10,a\n9,b\n254,a\n")
    s = resolve_schema("infer", p, "attack_cat")
    s = type(s)(s.name, tuple(type(c)(c.name, CATEGORICAL if c.name == "ttl" else c.kind)
                              for c in s.columns))
    ds = ordinal_encode(load_csv(p, s))
    assert ds.feature_meta[0].code_map == {"9": 0, "10": 1, "254": 2}


def test_bijection_and_determinism(tmp_path):
    p = write(tmp_path, "proto,state,x,attack_cat\n"
                        "tcp,FIN,1,a\nudp,CON,2,b\narp,FIN,3,a\ntcp,INT,4,c\n")
    schema = resolve_schema("infer", p, "attack_cat")
    table = load_csv(p, schema)
    a, b = ordinal_encode(table), ordinal_encode(table)
    assert a.digest() == b.digest()
    for j, m in enumerate(a.feature_meta):
        if m.kind != CATEGORICAL:
            assert m.kind == PASSTHROUGH
            continue
        decoded = [m.decode(int(c)) for c in a.features[:, j]]
        assert decoded == table.columns[m.name].tolist()


def test_single_label_unlearnable(tmp_path):
    p = write(tmp_path, "x,attack_cat\n1,a\n2,a\n")
    with pytest.raises(DataError):
        ordinal_encode(load_csv(p, resolve_schema("infer", p, "attack_cat")))


def test_unseen_category_gets_reserved_code(tmp_path):
    p = write(tmp_path, "proto,attack_cat\ntcp,a\nudp,b\n")
    schema = resolve_schema("infer", p, "attack_cat")
    fit = ordinal_encode(load_csv(p, schema))
    q = write(tmp_path, "proto,attack_cat\nicmp,a\nudp,b\n", "new.csv")
    ds = encode_with(load_csv(q, schema), fit.feature_meta, fit.class_names)
    assert ds.features[:, 0].tolist() == [2, 1]  # 2 == cardinality: the reserved bucket
    bad = write(tmp_path, "proto,attack_cat\ntcp,zzz\n", "bad.csv")
    with pytest.raises(DataError):
        encode_with(load_csv(bad, schema), fit.feature_meta, fit.class_names)


def test_unsw_layout_roundtrip(tmp_path):
    # a two-row file in the UNSW layout parses, drops `label`, and encodes attack_cat
    schema = resolve_schema("unsw-nb15")
    header = ",".join(schemas.UNSW_ORDER)
    rows = []
    for cat in ("Normal", "DoS"):
        vals = []
        for name in schemas.UNSW_ORDER:
            if name == "attack_cat":
                vals.append(cat)
            elif name == "label":
                vals.append("0")
            elif name in schemas.UNSW_CATEGORICAL:
                vals.append("tcp" if name == "proto" else "1")
            else:
                vals.append("0.5")
        rows.append(",".join(vals))
    p = write(tmp_path, header + "\n" + "\n".join(rows) + "\n")
    ds = ordinal_encode(load_csv(p, schema))
    assert ds.n_features == 43
    assert "label" not in ds.feature_names
    assert ds.class_names == ("DoS", "Normal")
