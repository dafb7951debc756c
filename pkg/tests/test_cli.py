import json

import pytest

from fracmean.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, main
from fracmean.config import RunConfig, default_config_path
from fracmean.errors import ConfigError

SMALL = {
    "spaces": [{"name": "grid1d", "params": [40, 1]}, {"name": "tree", "params": [4, 2]}],
    "corpus": ["zero", "power(0.5)", {"name": "random-step", "count": 2}],
    "params": [[1, 2, 4], [2, 2, "inf"], [2, 2, 2]],
    "plot_params": [[1, 2, 4]],
    "per_decade": 4,
}


def _write(tmp_path, cfg, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_list_claims(capsys):
    assert main(["--list-claims"]) == EXIT_PASS
    out = capsys.readouterr().out
    assert "sandwich-pfin-upper\texplicit" in out


def test_run_writes_artifacts(tmp_path):
    cfg = _write(tmp_path, SMALL)
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out), "--emit-plot-data", "--quiet"]) == EXIT_PASS
    for name in ("ledger.csv", "ledger.txt", "norms.csv", "plot_data.csv"):
        assert (out / name).stat().st_size > 0


def test_rerun_byte_identical(tmp_path):
    cfg = _write(tmp_path, SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", cfg, "--out", str(a), "--emit-plot-data", "--quiet"])
    main(["run", cfg, "--out", str(b), "--emit-plot-data", "--quiet", "--jobs", "2"])
    for name in ("ledger.csv", "ledger.txt", "norms.csv", "plot_data.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_suite_and_seed_flags(tmp_path):
    cfg = _write(tmp_path, SMALL)
    out = tmp_path / "o"
    assert main(["run", cfg, "--out", str(out), "--suite", "null-*", "--seed", "3", "--quiet"]) == EXIT_PASS
    claims = {ln.split(",")[0] for ln in (out / "ledger.csv").read_text().splitlines()[1:]}
    assert claims == {"null-exact"}


def test_negative_control_exit(tmp_path):
    cfg = _write(tmp_path, dict(SMALL, overrides={"*": 0.1}))
    assert main(["run", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == EXIT_FAIL


@pytest.mark.parametrize("bad", [
    {"spaces": [{"name": "torus"}]},
    {"corpus": ["mystery"]},
    {"params": [[3, 2, 1]]},
    {"colour": "blue"},
    {"overrides": {"*": -1}},
])
def test_config_errors_exit_two(tmp_path, bad):
    cfg = _write(tmp_path, dict(SMALL, **bad))
    assert main(["run", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == EXIT_CONFIG


def test_unmatched_suite_and_missing_file(tmp_path):
    cfg = _write(tmp_path, SMALL)
    assert main(["run", cfg, "--suite", "nothing", "--quiet"]) == EXIT_CONFIG
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    (tmp_path / "broken.json").write_text("{")
    assert main(["run", str(tmp_path / "broken.json")]) == EXIT_CONFIG


def test_no_command_is_usage_error():
    assert main([]) == EXIT_CONFIG


def test_default_config_loads():
    cfg = RunConfig.load(default_config_path())
    names = [s.name for s in cfg.spaces]
    assert names == ["grid1d", "sqline", "grid2d", "tree"]
    assert cfg.witness is not None and cfg.witness.N == 4


def test_space_file_in_config(tmp_path):
    from fracmean import io
    from fracmean.models import grid1d

    io.save_space(grid1d(12, 1), tmp_path / "line.txt")
    cfg = RunConfig.load(_write(tmp_path, dict(SMALL, spaces=[{"file": "line.txt"}])))
    assert cfg.spaces[0].build().n == 12
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"witness": {"space": "grid1d", "params": [1, 1, 1]}})
