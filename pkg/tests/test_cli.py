import json

import pytest

from gdwave import cli


def test_parser_lists_all_problems():
    assert len(cli.PROBLEMS) == 9
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["bogus"])


def test_config_merging(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"n": 3, "levels": 4}))
    args = cli.build_parser().parse_args(["energy", "--config", str(path), "--level", "2",
                                          "--seed", "9", "--out", str(tmp_path)])
    cfg = cli.load_config(args)
    assert (cfg.n, cfg.start_level, cfg.levels, cfg.seed) == (3, 2, 1, 9)
    assert cfg.output == str(tmp_path)


def test_unknown_key_is_an_error(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"order": 3}))
    assert cli.main(["energy", "--config", str(path)]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_problem_mismatch_is_an_error(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"problem": "disk"}))
    assert cli.main(["energy", "--config", str(path)]) == 2


def test_end_to_end_run(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"n": 2, "mesh": "square-triangles"}))
    out = tmp_path / "out"
    assert cli.main(["spectrum", "--config", str(path), "--out", str(out)]) == 0
    assert "re,im" in capsys.readouterr().out
    assert (out / "spectrum.csv").exists() and (out / "manifest.json").exists()
