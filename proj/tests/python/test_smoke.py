import json
import math
import os
from pathlib import Path

import pytest

import ssmt

ROOT = Path(os.environ.get("SSMT_SOURCE_DIR", Path(__file__).resolve().parents[2]))


@pytest.fixture(scope="module")
def canonical():
    return ssmt.load_config(ROOT / "configs" / "canonical.json")


def test_cumulant_analysis(canonical):
    a = ssmt.analyze_cumulant(canonical["quadruplet"])
    assert a["gamma0"] == pytest.approx(1.039530, abs=1e-5)
    assert a["kappa_gamma0"] == pytest.approx(-0.451076, abs=1e-5)
    assert a["omega"] == pytest.approx(0.251426, abs=1e-5)
    assert ssmt.cumulant(canonical["quadruplet"], a["omega"]) == pytest.approx(0.0, abs=1e-9)


def test_potential_fourier_matches_closed_form():
    # Brownian motion killed at rate 1/2 has v(y) = exp(-|y|)
    base = {"sigma2": 1.0, "drift": 0.0, "kill": 0.5}
    ys, v = ssmt.potential(base, lo=-2.0, hi=2.0, n=41)
    assert len(ys) == 41
    for y, val in zip(ys, v):
        assert val == pytest.approx(math.exp(-abs(y)), abs=1e-6)


def test_mean_formulas(canonical):
    f = ssmt.mean_formulas(canonical["quadruplet"], [1.0])
    assert f["v0"] == pytest.approx(0.753742, abs=1e-4)
    assert f["level_individuals"] == pytest.approx(1.24542, abs=1e-4)
    assert f["local_time"][0] == pytest.approx(0.938728, abs=1e-4)


def test_tree_round_trip_and_decompose(canonical, tmp_path):
    t = ssmt.build_tree(canonical["quadruplet"], seed=7)
    assert t.size >= 1
    back = ssmt.tree_from_json(t.to_json())
    assert back.size == t.size
    # a loaded tree keeps structure and polylines but not the path source
    assert back.to_json()["nodes"] == t.to_json()["nodes"]

    d = ssmt.decompose(t)
    assert d["F"][-1] == -1
    rebuilt = ssmt.reconstruct_level_tree(d["atoms"])
    assert rebuilt["total_length"] == pytest.approx(d["level_tree"]["total_length"], abs=1e-9)
    assert d["level_tree"]["total_length"] == pytest.approx(d["total"], rel=1e-12)

    paths = t.export(str(tmp_path), level=0.5)
    overlay = json.loads(Path(paths[2]).read_text())
    assert overlay["schema"] == "ssmt.overlay/1"
    assert len([p for p in overlay["points"] if p["kind"] == "first_hit"]) == t.hits(0.5)


def test_malformed_atoms_raise():
    with pytest.raises(ssmt.SsmtError):
        ssmt.reconstruct_level_tree([(1.0, 0), (2.0, 0)])


def test_small_run(canonical, tmp_path):
    cfg = dict(canonical)
    cfg["suites"] = ["excursion"]
    cfg["replicas"] = 1000
    rep = ssmt.run(cfg, str(tmp_path))
    assert rep["schema"] == "ssmt.report/1"
    assert any(r["name"].startswith("excursion.structure") for r in rep["results"])
    assert (tmp_path / "report.json").exists()
