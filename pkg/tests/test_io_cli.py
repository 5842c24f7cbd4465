import json
import math

import numpy as np
import pytest

from ktriangle import io as kio
from ktriangle.cli import main
from ktriangle.discovery import vcsgs
from ktriangle.citest import DataCI
from ktriangle.estimation import edge_estimation
from ktriangle.graph import Dag, mixed_from_pattern, pattern_of
from ktriangle.harness import ExperimentConfig, model_seed, run_experiment, sample_seed
from ktriangle.scm import DiscreteModel, ModelConstraints, models_equal, random_model, validate_model


def collider_model():
    g = Dag.from_edges(3, [(0, 1), (2, 1)])
    cpt = np.array([[[0.9, 0.1], [0.5, 0.5]], [[0.5, 0.5], [0.1, 0.9]]])
    return DiscreteModel(g, (2, 2, 2), (np.array([0.5, 0.5]), cpt, np.array([0.5, 0.5])))


# ---------------------------------------------------------------- file formats


@pytest.mark.parametrize("family", ["discrete", "gaussian", "continuous"])
def test_model_round_trip(tmp_path, family):
    m = random_model(family, ModelConstraints(n_vars=3), seed=4)
    kio.save_model(tmp_path / "m.json", m)
    assert models_equal(kio.load_model(tmp_path / "m.json"), m)


def test_model_file_rejects_unknown_family():
    with pytest.raises(kio.FormatError):
        kio.model_from_dict({"family": "nope", "vars": [], "edges": []})


def test_dataset_round_trip_with_sidecar(tmp_path):
    m = random_model("discrete", seed=1)
    d = m.sample(50, 3)
    kio.save_dataset(tmp_path / "d.csv", d)
    back = kio.load_dataset(tmp_path / "d.csv")
    assert np.array_equal(back.values, d.values) and back.schema == d.schema
    meta = kio.read_json(kio.sidecar_path(tmp_path / "d.csv"))
    assert meta["seed"] == 3 and meta["n"] == 50


def test_continuous_dataset_round_trip_is_exact(tmp_path):
    d = random_model("continuous", ModelConstraints(n_vars=3), seed=0).sample(40, 1)
    kio.save_dataset(tmp_path / "d.csv", d)
    assert np.array_equal(kio.load_dataset(tmp_path / "d.csv").values, d.values)


def test_graph_and_estimate_round_trip(tmp_path):
    m = random_model("discrete", seed=8)
    d = m.sample(2000, 0)
    out = vcsgs(DataCI(d), m.dag.names)
    kio.save_graph(tmp_path / "g.json", out.graph)
    g = kio.load_graph(tmp_path / "g.json")
    assert g == out.graph
    est = edge_estimation(mixed_from_pattern(pattern_of(m.dag), m.dag), d, 1.0, 0.05)
    kio.save_estimate(tmp_path / "e.json", est)
    back = kio.load_estimate(tmp_path / "e.json")
    assert back.known() == est.known() and back.aborted == est.aborted
    for v in est.known():
        assert back.entries[v].parents == est.entries[v].parents
        assert np.array_equal(back.entries[v].cond.table, est.entries[v].cond.table, equal_nan=True)


def test_atomic_write_leaves_no_temp_files(tmp_path):
    p = tmp_path / "x.txt"
    kio.atomic_write(p, "one")
    kio.atomic_write(p, "two")
    assert p.read_text() == "two"
    assert [f.name for f in tmp_path.iterdir()] == ["x.txt"]


# ---------------------------------------------------------------- commands


def test_generate_example_passes_validators(tmp_path):
    out = tmp_path / "m.json"
    rc = main(["generate", "--family", "discrete", "--vars", "5", "--k", "0.3", "--L", "1", "--T", "0.05",
               "--seed", "7", "--out", str(out)])
    assert rc == 0
    m = kio.load_model(out)
    assert validate_model(m, ModelConstraints()) is None
    meta = kio.read_json(kio.sidecar_path(out))
    assert meta["args"]["seed"] == 7 and meta["args"]["k"] == 0.3


def test_generate_is_reproducible(tmp_path):
    for name in ("a.json", "b.json"):
        assert main(["generate", "--seed", "3", "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.json").read_text() == (tmp_path / "b.json").read_text()


def test_discover_on_collider_data(tmp_path):
    kio.save_dataset(tmp_path / "d.csv", collider_model().sample(5000, 2))
    rc = main(["discover", "--data", str(tmp_path / "d.csv"), "--schedule-c", "0.5", "--out", str(tmp_path / "g.json"),
               "--trace", str(tmp_path / "t.json")])
    assert rc == 0
    g = kio.load_graph(tmp_path / "g.json")
    assert g.directed == {(0, 1), (2, 1)} and not g.undirected
    assert kio.read_json(kio.sidecar_path(tmp_path / "g.json"))["resolved_schedule_c"] == 0.5
    assert isinstance(kio.read_json(tmp_path / "t.json"), list)


def test_missing_required_flag_is_usage_error(tmp_path, capsys):
    assert main(["generate", "--out", str(tmp_path / "m.json")]) == 1
    assert "seed" in capsys.readouterr().err


def test_unknown_flag_is_usage_error():
    assert main(["sample", "--bogus"]) == 1


def test_missing_input_is_runtime_failure(tmp_path):
    assert main(["sample", "--model", str(tmp_path / "none.json"), "--n", "10", "--seed", "1",
                 "--out", str(tmp_path / "d.csv")]) == 2


def test_evaluate_needs_something_to_evaluate(tmp_path):
    main(["generate", "--seed", "1", "--out", str(tmp_path / "m.json")])
    assert main(["evaluate", "--model", str(tmp_path / "m.json")]) == 1


def test_pipeline_reproduces_harness_row(tmp_path, capsys):
    cfg = ExperimentConfig(n_grid=(1000,), replicates=1, n_models=1, base_seed=3)
    row = run_experiment(cfg).rows[0]
    p = lambda name: str(tmp_path / name)  # noqa: E731
    assert main(["generate", "--seed", str(model_seed(3, 0)), "--out", p("m.json")]) == 0
    assert main(["sample", "--model", p("m.json"), "--n", "1000", "--seed", str(sample_seed(3, 0, 1000, 0)),
                 "--out", p("d.csv")]) == 0
    assert main(["discover", "--data", p("d.csv"), "--out", p("g.json")]) == 0
    assert main(["estimate", "--data", p("d.csv"), "--graph", p("g.json"), "--out", p("e.json")]) == 0
    capsys.readouterr()
    assert main(["evaluate", "--model", p("m.json"), "--estimate", p("e.json"), "--graph", p("g.json")]) == 0
    res = json.loads(capsys.readouterr().out)
    assert math.isclose(res["distance"], row.distance, abs_tol=1e-12)
    assert res["error_kind"] == row.error_kind and res["psi_class"] == row.psi_class
    assert res["exceeded"] == row.exceeded


def test_experiment_command_writes_csv_and_meta(tmp_path):
    cfg = ExperimentConfig(n_grid=(200,), replicates=2, n_models=1)
    kio.write_json(tmp_path / "c.json", cfg.to_dict())
    assert main(["experiment", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "r.csv")]) == 0
    assert (tmp_path / "r.csv").read_text() == run_experiment(cfg).to_csv()
    meta = kio.read_json(kio.sidecar_path(tmp_path / "r.csv"))
    assert len(meta["seeds"]) == 2 and meta["failures"] == [] and meta["config"]["replicates"] == 2


def test_experiment_rejects_unknown_config_keys(tmp_path):
    kio.write_json(tmp_path / "c.json", {"replicats": 2})
    assert main(["experiment", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "r.csv")]) == 2
