import csv
import json

import pytest

from cgbkit import config as cf
from cgbkit.cli import main

SMALL = """
seed = 3

[ambient]
model = "euclidean"
dimension = 3

[[surfaces]]
type = "geodesic_sphere"
radius = 2.0

[suites]
run = ["theorem", "isoperimetric"]

[grids]
orders = {{2 = 16}}

[output]
dir = "{out}"
"""


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_list_models(capsys):
    assert main(["list-models"]) == 0
    out = capsys.readouterr().out
    for word in ("euclidean", "hyperbolic", "half_space", "hyperbolic_times_flat", "geodesic_sphere", "theorem"):
        assert word in out


def test_usage_errors(capsys):
    assert main(["--bogus"]) == 2
    assert main([]) == 2
    assert main(["run", "does-not-exist.toml"]) == 2


def test_dimension_guard(tmp_path, capsys):
    path = write(tmp_path, '[ambient]\nmodel = "euclidean"\ndimension = 9\n')
    assert main(["run", path]) == 2
    assert "dimension 9 exceeds desk-scale guard (max 7)" in capsys.readouterr().err


def test_small_run_writes_reports(tmp_path, capsys):
    out = tmp_path / "out"
    path = write(tmp_path, SMALL.format(out=out))
    assert main(["run", path]) == 0
    lines = (out / "report.jsonl").read_text().splitlines()
    recs = [json.loads(l) for l in lines]
    assert {r["suite"] for r in recs} == {"theorem", "isoperimetric"}
    for r in recs:
        assert set(r) >= {"suite", "case", "verdict", "quantities", "tolerance", "error_estimates", "provenance"}
        assert r["provenance"]["seed"] == 3
    theorem = next(r for r in recs if r["suite"] == "theorem")
    assert theorem["quantities"]["equality"] is True
    with open(out / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and set(rows[0]) == {"suite", "case", "verdict", "quantity", "value", "error_estimate", "tolerance"}


def _strip_time(text):
    recs = [json.loads(l) for l in text.splitlines()]
    for r in recs:
        r["provenance"].pop("timestamp", None)
    return recs


def test_runs_are_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    path = write(tmp_path, SMALL.format(out=a))
    assert main(["run", path, "--suite", "theorem"]) == 0
    assert main(["run", path, "--suite", "theorem", "--out", str(b)]) == 0
    assert _strip_time((a / "report.jsonl").read_text()) == _strip_time((b / "report.jsonl").read_text())
    assert (a / "summary.csv").read_text() == (b / "summary.csv").read_text()


def test_seed_override_recorded(tmp_path, capsys):
    out = tmp_path / "o"
    path = write(tmp_path, SMALL.format(out=out))
    assert main(["run", path, "--suite", "isoperimetric", "--seed", "11"]) == 0
    rec = json.loads((out / "report.jsonl").read_text().splitlines()[0])
    assert rec["provenance"]["seed"] == 11


@pytest.mark.parametrize(
    "text",
    [
        '[ambient]\nmodel = "klein_bottle"\ndimension = 3\n',
        '[ambient]\nmodel = "euclidean"\n',
        'seed = 1\n',
        '[ambient]\nmodel = "euclidean"\ndimension = 3\n[suites]\nrun = ["nope"]\n',
        '[ambient]\nmodel = "euclidean"\ndimension = 3\n[tolerances]\nintegral_rel = -1\n',
        '[ambient]\nmodel = "euclidean"\ndimension = 3\n[[surfaces]]\ntype = "torus"\n',
        'not toml = [',
    ],
)
def test_config_errors(text):
    with pytest.raises(cf.ConfigError):
        cf.parse_config(text, "<test>")


def test_config_hash_stable():
    text = '[ambient]\nmodel = "euclidean"\ndimension = 3\n'
    assert cf.parse_config(text, "a").config_hash == cf.parse_config(text, "b").config_hash


def test_shipped_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    for path in sorted(root.glob("*.toml")):
        if path.name == "too_big.toml":
            with pytest.raises(cf.ConfigError):
                cf.load_config(path)
        else:
            assert cf.load_config(path).suites
