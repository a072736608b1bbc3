import json
import math
import os
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

import featalloc

SOURCE = Path(os.environ.get("FEATALLOC_SOURCE_DIR", Path(__file__).resolve().parents[2]))


@pytest.fixture(scope="module")
def schema():
    return json.loads((SOURCE / "schema" / "dataset.schema.json").read_text())


@pytest.mark.parametrize("model", ["linear_gaussian", "lfrm", "pyclone"])
def test_simulated_documents_match_the_schema(schema, model):
    jsonschema = pytest.importorskip("jsonschema")
    spec = featalloc.default_sim_spec()
    spec.update(model=model, rows=12, dims=3, missing_fraction=0.1, seed=5)
    spec["prior"] = {"type": "fbb", "num_features": 3, "a": 1.0, "b": 1.0}
    doc = featalloc.simulate(spec)
    jsonschema.Draft202012Validator(schema).validate(doc)
    assert doc["model"] == model
    assert len(doc["heldout"]) > 0
    assert featalloc.simulate(spec) == doc


def test_bad_spec_raises():
    with pytest.raises(ValueError):
        featalloc.simulate({"rows": 0})
    with pytest.raises(ValueError):
        featalloc.simulate({"colour": "red"})


def test_friedman_matches_scipy():
    rng = np.random.default_rng(3)
    for methods, blocks in [(3, 6), (4, 10), (5, 20)]:
        table = rng.integers(0, 4, size=(methods, blocks)).astype(float)
        stat, p = featalloc.friedman_test(table.tolist())
        ref = stats.friedmanchisquare(*table)
        assert stat == pytest.approx(ref.statistic, rel=1e-10)
        assert p == pytest.approx(ref.pvalue, rel=1e-8)
        nem = np.array(featalloc.nemenyi_posthoc(table.tolist()))
        assert np.allclose(nem, nem.T)
        assert np.all((nem >= 0) & (nem <= 1))


def test_prior_and_bcubed():
    total = sum(
        math.exp(featalloc.fbb_log_pmf([[(c >> 0) & 1, (c >> 1) & 1], [(c >> 2) & 1, (c >> 3) & 1]], 0.5, 2.0))
        for c in range(16)
    )
    assert total == pytest.approx(1.0, abs=1e-12)
    assert featalloc.left_order_form([[0, 1], [1, 1]]) == [[1, 0], [1, 1]]
    p, r, f = featalloc.bcubed([[1, 0], [1, 1], [0, 1]], [[1, 0], [1, 0], [0, 1]])
    assert p == pytest.approx(4.5 / 7)
    assert r == pytest.approx(1.0)
    assert f == pytest.approx(18 / 23)


def test_run_and_compare():
    spec = featalloc.default_sim_spec()
    spec.update(rows=15, dims=2, seed=1)
    spec["prior"] = {"type": "fbb", "num_features": 3, "a": 1.0, "b": 1.0}
    traces = {}
    for sampler in ["gibbs", "dpf"]:
        config = {"sim": spec, "sampler": sampler, "n_datasets": 1, "n_inits": 2, "n_restarts": 2,
                  "max_iterations": 10, "record_every": 5, "seed": 8}
        traces[sampler] = featalloc.run_experiment(config)
        assert len(traces[sampler]) == 4
        for t in traces[sampler]:
            assert t["error"] is None
            assert [r["iteration"] for r in t["records"]] == [0, 5, 10]
    report = featalloc.compare(traces, [0.0])
    cp = report["checkpoints"][0]
    assert cp["status"] == "ok"
    assert cp["blocks"] == 4
    assert set(cp["quantiles"]) == {"gibbs", "dpf"}
