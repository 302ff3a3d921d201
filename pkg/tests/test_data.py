import numpy as np
import pytest

from pipelife.data import (
    CSV_COLUMNS,
    Dataset,
    FeatureMatrix,
    Material,
    PipeRecord,
    Split,
    build_features,
    encode_material,
    ingest_csv,
    split_dataset,
    write_csv,
)
from pipelife.errors import (
    DegenerateColumn,
    EmptyAfterCleaning,
    FileUnreadable,
    RatioSumInvalid,
    SchemaMismatch,
    UnknownColumn,
    UnknownMaterial,
)

REF_YEAR = 2011


def make_record(age=30, diameter=8.0, length=500.0, material=Material.CAST_IRON,
                breaks=2, wtl=25.0, rul=40.0):
    return PipeRecord(
        age=age, diameter=diameter, length=length, material=material,
        breaks=breaks, install_year=REF_YEAR - age,
        wall_thickness_loss=wtl, rul=rul,
    )


def make_dataset(n=20, with_rul=True):
    rng = np.random.default_rng(7)
    records = []
    mats = list(Material)
    for i in range(n):
        age = int(rng.integers(1, 100))
        records.append(
            PipeRecord(
                age=age,
                diameter=float(rng.choice([4, 6, 8, 12, 24])),
                length=float(rng.uniform(50, 5000)),
                material=mats[i % len(mats)],
                breaks=int(rng.integers(0, 10)),
                install_year=REF_YEAR - age,
                wall_thickness_loss=float(rng.uniform(1, 59)),
                rul=float(rng.uniform(3, 90)) if with_rul else None,
            )
        )
    return Dataset(tuple(records), REF_YEAR)


# -- material encoding --------------------------------------------------------

def test_table_ea_values():
    expected = {
        "Polyethylene": 0.42,
        "DuctileIron": 1.67,
        "PVC": 1.67,
        "Steel": 1.67,
        "Concrete": 5.01,
        "Asbestos": 6.68,
        "CastIron": 8.35,
    }
    for name, ea in expected.items():
        assert encode_material(name).ea_value == ea


def test_encode_material_aliases_and_case():
    assert encode_material("Cast iron") is Material.CAST_IRON
    assert encode_material("Cast iron").ea_value == 8.35
    assert encode_material("CI") is Material.CAST_IRON
    assert encode_material("di") is Material.DUCTILE_IRON
    assert encode_material("AC") is Material.ASBESTOS
    assert encode_material("asbestos cement") is Material.ASBESTOS
    assert encode_material("  pvc ") is Material.PVC


def test_encode_material_unknown():
    with pytest.raises(UnknownMaterial):
        encode_material("obsidian")


def test_ea_values_bounded_and_tied():
    values = sorted(m.ea_value for m in Material)
    assert values[0] == 0.42 and values[-1] == 8.35
    tied = {Material.DUCTILE_IRON, Material.PVC, Material.STEEL}
    assert len({m.ea_value for m in tied}) == 1
    rest = [m for m in Material if m not in tied]
    assert len({m.ea_value for m in rest}) == len(rest)


# -- record validation ----------------------------------------------------------

def test_record_validation_rejects_bad_fields():
    with pytest.raises(ValueError):
        make_record(diameter=30.0).validate(REF_YEAR)
    with pytest.raises(ValueError):
        make_record(length=0.0).validate(REF_YEAR)
    with pytest.raises(ValueError):
        make_record(wtl=120.0).validate(REF_YEAR)
    with pytest.raises(ValueError):
        make_record(breaks=-1).validate(REF_YEAR)


def test_record_age_install_year_consistency():
    good = PipeRecord(30, 8.0, 100.0, Material.STEEL, 0, REF_YEAR - 31, 10.0)
    good.validate(REF_YEAR)  # one year of slack allowed
    bad = PipeRecord(30, 8.0, 100.0, Material.STEEL, 0, REF_YEAR - 35, 10.0)
    with pytest.raises(ValueError):
        bad.validate(REF_YEAR)


# -- ingestion --------------------------------------------------------------------

HEADER = ",".join(CSV_COLUMNS)


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def row(age=30, diameter=8, length=500, material="CastIron", breaks=2,
        wtl=25.0, rul="40.0", install_year=None):
    iy = REF_YEAR - age if install_year is None else install_year
    return f"{age},{diameter},{length},{material},{breaks},{iy},{wtl},{rul}"


def test_ingest_drops_and_counts_missing(tmp_path):
    path = tmp_path / "pipes.csv"
    lines = [HEADER] + [row(age=20 + i) for i in range(8)]
    lines.insert(3, row(age=50, wtl=""))       # blank wall loss
    lines.insert(5, row(age=60, wtl=""))
    write_lines(path, lines)
    dataset, report = ingest_csv(path, REF_YEAR)
    assert len(dataset) == 8
    assert report.rows_read == 10
    assert report.rows_dropped == 2
    assert report.drops_by_column == {"wall_thickness_loss_pct": 2}


def test_ingest_missing_column_is_schema_mismatch(tmp_path):
    path = tmp_path / "pipes.csv"
    header = ",".join(c for c in CSV_COLUMNS if c != "age_years")
    write_lines(path, [header, "8,500,CastIron,2,1981,25.0,40.0"])
    with pytest.raises(SchemaMismatch):
        ingest_csv(path, REF_YEAR)


def test_ingest_all_rows_invalid(tmp_path):
    path = tmp_path / "pipes.csv"
    write_lines(path, [HEADER, row(wtl=""), row(material="")])
    with pytest.raises(EmptyAfterCleaning):
        ingest_csv(path, REF_YEAR)


def test_ingest_nonexistent_file(tmp_path):
    with pytest.raises(FileUnreadable):
        ingest_csv(tmp_path / "missing.csv", REF_YEAR)


def test_ingest_rejects_out_of_range_rows(tmp_path):
    path = tmp_path / "pipes.csv"
    write_lines(
        path,
        [HEADER, row(), row(diameter=48), row(material="granite"), row(age=10, install_year=1950)],
    )
    dataset, report = ingest_csv(path, REF_YEAR)
    assert len(dataset) == 1
    assert report.drops_by_column["diameter_in"] == 1
    assert report.drops_by_column["material"] == 1
    assert report.drops_by_column["install_year"] == 1


def test_ingest_rul_optional(tmp_path):
    path = tmp_path / "pipes.csv"
    write_lines(path, [HEADER, row(rul=""), row(rul="")])
    dataset, _ = ingest_csv(path, REF_YEAR)
    assert len(dataset) == 2
    assert not dataset.has_rul()


def test_ingest_preserves_row_order(tmp_path):
    path = tmp_path / "pipes.csv"
    ages = [40, 10, 70, 25, 55]
    lines = [HEADER]
    for i, age in enumerate(ages):
        if i == 2:
            lines.append(row(age=99, wtl=""))  # dropped row in the middle
        lines.append(row(age=age))
    write_lines(path, lines)
    dataset, _ = ingest_csv(path, REF_YEAR)
    assert [r.age for r in dataset.records] == ages


def test_csv_round_trip(tmp_path):
    dataset = make_dataset(15)
    path = tmp_path / "out.csv"
    write_csv(dataset, path)
    back, report = ingest_csv(path, REF_YEAR)
    assert report.rows_dropped == 0
    assert len(back) == len(dataset)
    for a, b in zip(dataset.records, back.records):
        assert a.age == b.age
        assert a.material is b.material
        assert a.length == pytest.approx(b.length, abs=0)
        assert a.rul == pytest.approx(b.rul, abs=0)


# -- splitting ------------------------------------------------------------------

def test_split_counts_100():
    dataset = make_dataset(100)
    labeled = split_dataset(dataset, (0.75, 0.10, 0.15), seed=7)
    counts = {label: 0 for label in Split}
    for s in labeled.split:
        counts[s] += 1
    assert counts[Split.TRAIN] == 75
    assert counts[Split.VALIDATION] == 10
    assert counts[Split.TEST] == 15


def test_split_remainder_goes_train_first():
    dataset = make_dataset(1)
    labeled = split_dataset(dataset, (0.75, 0.10, 0.15), seed=0)
    assert labeled.split == (Split.TRAIN,)


def test_split_ratio_sum_invalid():
    with pytest.raises(RatioSumInvalid):
        split_dataset(make_dataset(10), (0.5, 0.5, 0.5), seed=0)
    with pytest.raises(RatioSumInvalid):
        split_dataset(make_dataset(10), (1.0, 0.0, 0.0), seed=0)


def test_split_deterministic_and_partitioning():
    dataset = make_dataset(53)
    a = split_dataset(dataset, (0.75, 0.10, 0.15), seed=11)
    b = split_dataset(dataset, (0.75, 0.10, 0.15), seed=11)
    c = split_dataset(dataset, (0.75, 0.10, 0.15), seed=12)
    assert a.split == b.split
    assert a.split != c.split
    assert len(a.split) == len(dataset)  # every record labeled exactly once
    assert all(s in set(Split) for s in a.split)


# -- feature building ---------------------------------------------------------------

def test_build_features_minmax_endpoints():
    dataset = make_dataset(30)
    fm = build_features(dataset, ("age_years", "wall_thickness_loss_pct"))
    norm = fm.normalized()
    assert norm.min() >= 0.0 and norm.max() <= 1.0
    assert norm[:, 0].min() == pytest.approx(0.0)
    assert norm[:, 0].max() == pytest.approx(1.0)


def test_build_features_material_is_ea():
    dataset = make_dataset(14)
    fm = build_features(dataset, ("material",))
    expected = [r.material.ea_value for r in dataset.records]
    assert fm.values[:, 0] == pytest.approx(expected)


def test_build_features_zscore_moments():
    dataset = make_dataset(50)
    fm = build_features(dataset, ("age_years", "length_ft"), mode="zscore")
    norm = fm.normalized()
    for j in range(norm.shape[1]):
        assert abs(norm[:, j].mean()) < 1e-9
        assert abs(norm[:, j].std(ddof=1) - 1.0) < 1e-9


def test_build_features_round_trip():
    dataset = make_dataset(25)
    for mode in ("minmax", "zscore"):
        fm = build_features(dataset, ("age_years", "length_ft"), mode=mode)
        for name in fm.column_names:
            raw = fm.raw_column(name)
            back = fm.denormalize_column(name, fm.normalize_column(name, raw))
            assert back == pytest.approx(raw, abs=1e-9)


def test_build_features_constant_column_minmax():
    records = tuple(make_record(age=30) for _ in range(5))
    dataset = Dataset(records, REF_YEAR)
    fm = build_features(dataset, ("age_years",))
    assert fm.normalized()[:, 0] == pytest.approx(np.zeros(5))
    a, b = fm.constants[0]
    assert a == b == 30.0
    # round trip of a constant column reproduces the constant
    assert fm.denormalize_column("age_years", np.zeros(5)) == pytest.approx([30.0] * 5)


def test_build_features_constant_column_zscore_degenerate():
    records = tuple(make_record(age=30) for _ in range(5))
    dataset = Dataset(records, REF_YEAR)
    with pytest.raises(DegenerateColumn):
        build_features(dataset, ("age_years",), mode="zscore")


def test_build_features_unknown_column():
    with pytest.raises(UnknownColumn):
        build_features(make_dataset(5), ("soil_ph",))


def test_build_features_column_order_matches_request():
    dataset = make_dataset(10)
    fm = build_features(dataset, ("length_ft", "age_years"))
    assert fm.column_names == ("length_ft", "age_years")
    assert fm.values[:, 1] == pytest.approx(dataset.column("age_years"))
