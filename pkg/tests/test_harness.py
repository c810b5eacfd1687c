import dataclasses
import json

import numpy as np
import pytest

from saddlekit.errors import InvalidInput
from saddlekit.harness import (
    ExperimentConfig,
    emit,
    init_perturbed,
    init_random,
    load_json,
    reference_config,
    run_campaign,
)
from saddlekit.manifolds import GrassmannProjector, Stiefel
from saddlekit.objectives import make_lep
from saddlekit.oracle import enumerate_catalog


def test_init_random_is_seed_deterministic():
    man = GrassmannProjector(8, 2)
    a = init_random(man, 3, seed=11)
    b = init_random(man, 3, seed=11)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.frame, b.frame)
    c = init_random(man, 3, seed=12)
    assert np.abs(a.x - c.x).max() > 1e-3
    a.validate()


def test_init_random_on_stiefel():
    man = Stiefel(8, 2)
    st = init_random(man, 2, seed=0)
    st.validate()
    np.testing.assert_allclose(st.x.T @ st.x, np.eye(2), atol=1e-12)


def test_init_perturbed_approaches_the_reference():
    spec = make_lep(10, 2, 1.01, seed=0)
    catalog = enumerate_catalog(spec)
    ref = catalog.entry_for_config((1, 3)).frame
    man = GrassmannProjector(10, 2)
    d = []
    for beta in (1e-2, 1e-5):
        st = init_perturbed(man, ref, beta, k=1, seed=5)
        st.validate()
        d.append(np.linalg.norm(st.x - ref @ ref.T))
    assert d[1] < 1e-3 * d[0]
    with pytest.raises(InvalidInput):
        init_perturbed(man, ref, 0.0, k=1, seed=5)


def test_reference_config_names():
    assert reference_config("gm", 8) == tuple(range(1, 9))
    assert reference_config("sp-index-1", 8) == (1, 2, 3, 4, 5, 6, 7, 9)
    assert reference_config("sp-index-3", 2) == (1, 5)
    with pytest.raises(InvalidInput):
        reference_config("nope", 4)


def test_experiment_config_validation():
    with pytest.raises(InvalidInput):
        ExperimentConfig(experiment="nope")
    with pytest.raises(InvalidInput):
        ExperimentConfig(experiment="lep-all-index", seed_count=0)
    with pytest.raises(InvalidInput):
        ExperimentConfig(experiment="lep-perturb", manifold="torus")
    cfg = ExperimentConfig(experiment="lep-all-index", seed_start=5, seed_count=3)
    assert list(cfg.seeds) == [5, 6, 7]


def test_campaign_row_counts_and_cells():
    cfg = ExperimentConfig(
        experiment="lep-perturb", n=10, p=2, eta_x=4.0, manifold="grassmann",
        betas=(1e-3, 1e-2), references=("gm",), seed_count=3, output=None,
    )
    res = run_campaign(cfg)
    assert len(res.rows) == 6  # two beta cells x three seeds
    assert sorted({r.cell for r in res.rows}) == [
        "grassmann/gm/beta=0.001",
        "grassmann/gm/beta=0.01",
    ]
    for cell, agg in res.aggregates.items():
        assert agg["runs"] == 3


def test_oracle_dump_lists_the_whole_catalog():
    cfg = ExperimentConfig(experiment="oracle-dump", n=10, p=2, output=None)
    res = run_campaign(cfg)
    assert len(res.rows) == 45
    assert all(r.converged and r.success for r in res.rows)
    assert {r.classified_index for r in res.rows} == set(range(17))


def test_emit_csv_and_json_round_trip(tmp_path):
    cfg = ExperimentConfig(
        experiment="lep-all-index", n=10, p=2, eta_x=25.0, seed_count=5, output=None,
    )
    res = run_campaign(cfg)
    csv_path = tmp_path / "rows.csv"
    json_path = tmp_path / "rows.json"
    emit(res, "csv", csv_path)
    emit(res, "json", json_path)

    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == (
        "experiment,cell,seed,k,converged,success,failure,iterations,"
        "terminal_value,classified_index,degenerate,matched_config,residual"
    )
    assert len(lines) == 6

    back = load_json(json_path)
    assert back.rows == res.rows
    assert back.experiment == res.experiment
    assert back.aggregates == res.aggregates

    payload = json.loads(json_path.read_text())
    assert payload["schema_version"] == 1
    with pytest.raises(InvalidInput):
        emit(res, "xml", tmp_path / "rows.xml")


def test_campaign_writes_all_artifacts(tmp_path):
    out = tmp_path / "out"
    cfg = ExperimentConfig(
        experiment="lep-all-index", n=10, p=2, eta_x=25.0, seed_count=4,
        output=str(out),
    )
    run_campaign(cfg)
    assert (out / "lep-all-index.csv").exists()
    assert (out / "lep-all-index.json").exists()
    assert (out / "lep-all-index_matches.png").exists()


def test_campaign_csv_is_sorted_and_complete(tmp_path):
    out = tmp_path / "out"
    cfg = ExperimentConfig(
        experiment="lep-all-index", n=10, p=2, eta_x=25.0, seed_count=6,
        output=str(out), threads=3,
    )
    run_campaign(cfg)
    lines = (out / "lep-all-index.csv").read_text().strip().splitlines()
    seeds = [int(line.split(",")[2]) for line in lines[1:]]
    assert seeds == sorted(seeds)
    assert len(seeds) == 6


def test_threads_do_not_change_results():
    base = dict(
        experiment="lep-all-index", n=10, p=2, eta_x=25.0, seed_count=10, output=None,
    )
    r1 = run_campaign(ExperimentConfig(**base, threads=1))
    r3 = run_campaign(ExperimentConfig(**base, threads=3))
    for a, b in zip(r1.rows, r3.rows):
        assert dataclasses.asdict(a) == dataclasses.asdict(b)


def test_rhf_scan_campaign_classifies_terminals(fixture_dir):
    cfg = ExperimentConfig(
        experiment="rhf-scan",
        fcidump=(str(fixture_dir / "h2_631g_r1400.fcidump"),),
        eta_x=0.1, tol=1e-10, maxit=20_000, seed_count=6, output=None,
    )
    res = run_campaign(cfg)
    assert len(res.rows) == 6
    for r in res.rows:
        if r.converged:
            assert r.classified_index is not None
            assert r.residual <= 1e-9
