import numpy as np
import pytest

from pipelife.data import Dataset, Material, PipeRecord
from pipelife.errors import EmptyDataset, InvalidConfig
from pipelife.stats import pearson
from pipelife.synth import (
    GeneratorConfig,
    INVENTORY_TARGETS,
    generate,
    moment_report,
)

DEFAULT = GeneratorConfig(n=5000, seed=0)


@pytest.fixture(scope="module")
def dataset():
    return generate(DEFAULT)


def decile_means(x, y):
    edges = np.quantile(x, np.linspace(0, 1, 11))
    means = []
    for i in range(10):
        hi = x <= edges[i + 1] if i == 9 else x < edges[i + 1]
        mask = (x >= edges[i]) & hi
        means.append(y[mask].mean())
    return np.array(means)


def test_config_validation():
    with pytest.raises(InvalidConfig):
        GeneratorConfig(n=0).validate()
    with pytest.raises(InvalidConfig):
        GeneratorConfig(noise_sd=-1.0).validate()
    with pytest.raises(InvalidConfig):
        GeneratorConfig(material_mix={Material.CAST_IRON: 0.7}).validate()
    bad_mix = {Material.CAST_IRON: 0.5, Material.CONCRETE: 0.5}
    with pytest.raises(InvalidConfig):
        GeneratorConfig(material_mix=bad_mix).validate()  # no ASL for concrete


def test_determinism():
    a = generate(GeneratorConfig(n=200, seed=9))
    b = generate(GeneratorConfig(n=200, seed=9))
    assert a.records == b.records
    c = generate(GeneratorConfig(n=200, seed=10))
    assert a.records != c.records


def test_every_record_satisfies_invariants(dataset):
    for record in dataset.records:
        record.validate(dataset.reference_year)  # raises on violation
    assert len(dataset) == 5000


def test_moment_calibration(dataset):
    age = dataset.column("age_years")
    wtl = dataset.column("wall_thickness_loss_pct")
    rul = dataset.column("rul_years")
    assert age.mean() == pytest.approx(49.78, rel=0.05)
    assert age.std(ddof=1) == pytest.approx(30.31, rel=0.10)
    assert wtl.mean() == pytest.approx(29.64, rel=0.10)
    assert rul.mean() == pytest.approx(40.65, rel=0.10)


def test_observed_ranges_inside_published(dataset):
    for name in ("age_years", "wall_thickness_loss_pct", "rul_years",
                 "diameter_in", "breaks", "install_year"):
        t_min, t_max, _, _, _ = INVENTORY_TARGETS[name]
        col = dataset.column(name)
        assert col.min() >= t_min - 1e-9, name
        assert col.max() <= t_max + 1e-9, name


def test_quadratic_age_fit_band(dataset):
    age = dataset.column("age_years")
    rul = dataset.column("rul_years")
    coef = np.polyfit(age, rul, 2)
    fitted = np.polyval(coef, age)
    r2 = 1.0 - ((rul - fitted) ** 2).sum() / ((rul - rul.mean()) ** 2).sum()
    assert 0.70 <= r2 <= 0.92


def test_planted_negative_correlations(dataset):
    age = dataset.column("age_years")
    wtl = dataset.column("wall_thickness_loss_pct")
    rul = dataset.column("rul_years")
    assert pearson(wtl, rul) < -0.5
    assert pearson(age, rul) < -0.5


def test_monotone_decile_structure(dataset):
    age = dataset.column("age_years")
    wtl = dataset.column("wall_thickness_loss_pct")
    rul = dataset.column("rul_years")
    assert np.all(np.diff(decile_means(age, rul)) <= 1e-9)
    assert np.all(np.diff(decile_means(wtl, rul)) <= 1e-9)


def test_material_conditioned_deterioration(dataset):
    age = dataset.column("age_years")
    wtl = dataset.column("wall_thickness_loss_pct")
    mats = np.array([r.material for r in dataset.records])
    edges = np.quantile(age, [0.0, 0.25, 0.5, 0.75, 1.0])
    for i in range(4):
        hi = age <= edges[i + 1] if i == 3 else age < edges[i + 1]
        mask = (age >= edges[i]) & hi
        ci = wtl[mask & (mats == Material.CAST_IRON)]
        di = wtl[mask & (mats == Material.DUCTILE_IRON)]
        assert ci.mean() > di.mean()


def test_material_mix_fractions(dataset):
    mats = [r.material for r in dataset.records]
    ci_frac = mats.count(Material.CAST_IRON) / len(mats)
    assert ci_frac == pytest.approx(0.46, abs=0.03)
    counts = {m: mats.count(m) for m in set(mats)}
    assert counts[Material.CAST_IRON] > counts[Material.ASBESTOS] > counts[Material.DUCTILE_IRON]


def test_durable_materials_have_more_life(dataset):
    rul = dataset.column("rul_years")
    mats = np.array([r.material for r in dataset.records])
    mean_rul = {m: rul[mats == m].mean() for m in
                (Material.CAST_IRON, Material.ASBESTOS, Material.DUCTILE_IRON, Material.STEEL)}
    assert mean_rul[Material.DUCTILE_IRON] > mean_rul[Material.CAST_IRON]
    assert mean_rul[Material.STEEL] > mean_rul[Material.ASBESTOS]


def test_install_year_consistency(dataset):
    for record in dataset.records[:200]:
        assert record.install_year == dataset.reference_year - record.age


def test_moment_report_contents(dataset):
    report = moment_report(dataset)
    payload = report.to_dict()
    assert "age_years" in payload
    assert abs(payload["age_years"]["mean_deviation_pct"]) < 5.0
    assert abs(payload["rul_years"]["mean_deviation_pct"]) < 10.0
    text = report.render()
    assert "age_years" in text and "rul_years" in text


def test_moment_report_single_record():
    record = PipeRecord(30, 8.0, 100.0, Material.STEEL, 1, 1981, 20.0, 50.0)
    report = moment_report(Dataset((record,), 2011))
    entry = report.to_dict()["age_years"]
    assert entry["computed"]["std"] == 0.0


def test_moment_report_empty():
    with pytest.raises(EmptyDataset):
        moment_report(Dataset((), 2011))
