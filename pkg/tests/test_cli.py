import json
import os

import pytest

from deltashell.cli import build_parser, main, run
from deltashell.harness import KINDS, OUT_ENV

FAST = {
    "renormalize": ["samples = 5"],
    "kernel-eval": ["points = 0.3, -0.2, 1.0, 0.5"],
    "bie-solve": ["n = 32"],
    "eigs": ["n = 128", "n_scan = 64"],
    "layer-transfer": ["samples = 5", "eps = 2^-6"],
    "fiber-gap": ["eps = 2^-8", "xi = -1, 0, 1"],
    "converge": ["eps = 2^-6, 2^-7, 2^-8", "xi = 0, 1", "control = false"],
    "norms": ["n = 32", "nt = 8", "z = 0"],
}


def args(kind, out, check=True):
    a = [kind, "--out", str(out)]
    for s in FAST[kind]:
        a += ["--set", s]
    return a + (["--check"] if check else [])


def test_parser_knows_every_kind():
    assert set(FAST) == set(KINDS)
    with pytest.raises(SystemExit):
        build_parser().parse_args(["plot"])


@pytest.mark.parametrize("kind", KINDS)
def test_subcommand_checks_pass(kind, tmp_path, capsys):
    code, payload = run(args(kind, tmp_path))
    assert code == 0, [c for c in payload["checks"] if not c["passed"]]
    assert payload["checks"]
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS" in out
    on_disk = json.load(open(tmp_path / f"{kind}.json"))
    assert on_disk["command"] == kind and on_disk["config_sha256"] == payload["config_sha256"]
    if kind == "converge":
        assert (tmp_path / "converge.csv").read_text().splitlines()[-4] == "epsilon,gap"


def test_eigs_matches_mode_matching(tmp_path):
    _, payload = run(["eigs", "--out", str(tmp_path), "--set", "n = 256", "--set", "eta = 0.5"])
    res = payload["result"]
    assert len(res["eigenvalues"]) == len(res["mode_matching"]) == 1
    assert abs(res["eigenvalues"][0] - res["mode_matching"][0]) < 1e-6


def test_config_file_and_env_output(tmp_path, monkeypatch):
    cfg = tmp_path / "r.cfg"
    cfg.write_text("kind = renormalize\neta = 0.4\ntau = 0.1\n")
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
    assert main(["renormalize", "--config", str(cfg)]) == 0
    res = json.load(open(tmp_path / "env" / "renormalize.json"))["result"]
    assert res["round_trip_error"] < 1e-12
    assert "checks" not in json.load(open(tmp_path / "env" / "renormalize.json"))


def test_bad_input_exits_nonzero(tmp_path, capsys):
    assert main(["renormalize", "--out", str(tmp_path), "--set", "bogus = 1"]) == 2
    assert "unknown key" in capsys.readouterr().err
    assert main(["converge", "--out", str(tmp_path), "--set", "curve.kind = circle",
                 "--set", "eps = 0.1, 0.05, 0.02"]) == 2


def test_failed_check_gives_exit_code_one(tmp_path, monkeypatch):
    import deltashell.cli as cli

    real = cli.cmd_norms

    def broken(cfg, check):
        res, checks = real(cfg, check)
        return res, checks + [{"name": "forced", "passed": False, "value": None}]

    monkeypatch.setitem(cli.COMMANDS, "norms", broken)
    assert main(args("norms", tmp_path)) == 1


def test_runs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        os.makedirs(d)
        assert main(args("converge", d, check=False)) == 0
    assert (a / "converge.csv").read_bytes() == (b / "converge.csv").read_bytes()
    assert (a / "converge.json").read_bytes() == (b / "converge.json").read_bytes()
