import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from deltashell.harness import (OUT_ENV, ConvergenceReport, StudyConfig, dumps_json, emit, format_csv,
                                load_config, output_dir, parse_config_text, rate_fit, run_converge)

SMALL = ["eps = 2^-6, 2^-7, 2^-8", "xi = 0, 1", "control = false"]


def test_defaults():
    cfg = StudyConfig()
    assert cfg.kind == "converge" and cfg.curve_kind == "line"
    assert cfg.eps[0] == 2.0**-8 and cfg.eps[-1] == 2.0**-20 and len(cfg.eps) == 13
    assert len(cfg.xi) == 33 and cfg.xi[16] == 0.0


def test_parse_values(tmp_path):
    path = tmp_path / "study.cfg"
    path.write_text(
        "# comment line\n"
        "kind = fiber-gap\n"
        "z = 0.1+0.3i   # trailing comment\n"
        "eps = dyadic(4, 6)\n"
        "xi = linspace(-1, 1, 3)\n"
        "lambda = 0.2\n"
        "curve.flip = yes\n"
        "V = 0.5, 0.1j; -0.1j, 0.2\n"
    )
    cfg = load_config(str(path))
    assert cfg.kind == "fiber-gap"
    assert cfg.z == 0.1 + 0.3j
    assert cfg.eps == (2.0**-4, 2.0**-5, 2.0**-6)
    assert cfg.xi == (-1.0, 0.0, 1.0)
    assert cfg.lam == 0.2 and cfg.curve_flip is True
    assert np.allclose(cfg.potential(np.array([0.0, 1.0])), [[0.5, 0.1j], [-0.1j, 0.2]])


def test_overrides_take_precedence(tmp_path):
    path = tmp_path / "a.cfg"
    path.write_text("eta = 0.3\nm = 2\n")
    cfg = load_config(str(path), ["eta = 0.7"])
    assert cfg.eta == 0.7 and cfg.m == 2.0


@pytest.mark.parametrize("text", [
    "bogus = 1",
    "eta 0.5",
    "eps = 2^-8, 2^-7",
    "eps = 0.1, -0.1",
    "mode = bare",
    "kind = plot",
    "profile = triangle",
    "curve.flip = maybe",
])
def test_config_errors(text):
    with pytest.raises(ValueError):
        load_config(None, [text])


def test_kind_must_match_subcommand():
    with pytest.raises(ValueError):
        load_config(None, ["kind = norms"], kind="converge")


def test_closed_curve_ladder_must_fit_tubular_neighbourhood():
    with pytest.raises(ValueError):
        load_config(None, ["curve.kind = circle", "eps = 0.9, 0.5"])
    assert load_config(None, ["curve.kind = circle", "eps = 0.1, 0.05"]).curve_kind == "circle"


def test_potential_family_and_shape_check():
    cfg = StudyConfig(eta=0.5, tau=0.25)
    V = cfg.potential(np.array([0.0, 1.0]))
    assert np.allclose(V, 0.5 * np.eye(2) + 0.25 * np.diag([1, -1]))
    with pytest.raises(ValueError):
        StudyConfig(V=((1, 0, 0), (0, 1, 0), (0, 0, 1))).potential(np.array([0.0, 1.0]))


def test_digest_ignores_output_directory():
    assert StudyConfig(out="a").digest() == StudyConfig(out="b").digest()
    assert StudyConfig(eta=0.5).digest() != StudyConfig(eta=0.6).digest()


def test_output_dir_resolution(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
    assert output_dir(None, StudyConfig()) == str(tmp_path / "env")
    assert output_dir(None, StudyConfig(out=str(tmp_path / "cfg"))) == str(tmp_path / "cfg")
    assert output_dir(str(tmp_path / "cli"), StudyConfig(out="x")) == str(tmp_path / "cli")
    assert (tmp_path / "cli").is_dir()


def test_raw_parse_keeps_strings():
    assert parse_config_text("eta = 0.5\n\n# x\n") == {"eta": "0.5"}


# ---------------------------------------------------------------------------
# rate fit
# ---------------------------------------------------------------------------
@given(st.floats(0.1, 3.0), st.floats(0.01, 100.0))
def test_rate_fit_recovers_exact_power_laws(p, c):
    e = 2.0 ** -np.arange(2, 12)
    s, b, r2 = rate_fit(np.stack([e, c * e**p], axis=1))
    assert abs(s - p) < 1e-10 and abs(b - math.log(c)) < 1e-9 and abs(r2 - 1) < 1e-12


def test_rate_fit_examples():
    e = 2.0 ** -np.arange(2, 10)
    s, _, r2 = rate_fit(np.stack([e, 3 * e], axis=1))
    assert abs(s - 1) < 1e-12 and abs(r2 - 1) < 1e-12
    s, _, _ = rate_fit(np.stack([e, np.sqrt(e)], axis=1))
    assert abs(s - 0.5) < 1e-12


def test_rate_fit_with_noise():
    rng = np.random.default_rng(5)
    e = 2.0 ** -np.arange(4, 20)
    g = e**0.7 * (1 + 0.05 * rng.uniform(-1, 1, e.size))
    s, _, r2 = rate_fit(np.stack([e, g], axis=1))
    assert abs(s - 0.7) < 0.05 and r2 > 0.99


@pytest.mark.parametrize("bad", [[[0.1, 1.0], [0.05, 0.5]], [[0.1, 1.0], [0.05, 0.0], [0.02, 0.1]],
                                 [[0.1, 1.0], [-0.05, 0.5], [0.02, 0.1]]])
def test_rate_fit_rejects_bad_samples(bad):
    with pytest.raises(ValueError):
        rate_fit(bad)


# ---------------------------------------------------------------------------
# emission and convergence runs
# ---------------------------------------------------------------------------
def test_empty_report_gives_header_only_csv(tmp_path):
    path = emit(ConvergenceReport([]), "csv", str(tmp_path / "sub" / "r.csv"))
    lines = open(path).read().splitlines()
    assert lines[-1] == "epsilon,gap"
    assert all(line.startswith("#") for line in lines[:-1])


def test_csv_rows_and_json_round_trip(tmp_path):
    rep = ConvergenceReport([(0.25, 0.5), (0.125, 0.35355339059327373)], slope=0.5, intercept=0.0, r2=1.0,
                            metadata={"z": 0.2j, "arr": np.arange(2)})
    text = format_csv(rep)
    assert "# slope: 5.0000000000000000e-01" in text.splitlines()
    rows = [line for line in text.splitlines() if not line.startswith("#")]
    assert rows[0] == "epsilon,gap"
    assert [tuple(map(float, r.split(","))) for r in rows[1:]] == rep.samples
    path = emit(rep, "json", str(tmp_path / "r.json"))
    back = json.load(open(path))
    assert back["samples"] == [[0.25, 0.5], [0.125, 0.35355339059327373]]
    assert back["metadata"]["z"] == [0.0, 0.2] and back["metadata"]["arr"] == [0, 1]
    assert dumps_json(back) == open(path).read()
    with pytest.raises(ValueError):
        emit(rep, "xml", str(tmp_path / "r.xml"))


def test_converge_is_deterministic():
    cfg = load_config(None, SMALL)
    a, b = run_converge(cfg), run_converge(cfg)
    assert format_csv(a) == format_csv(b)
    assert dumps_json(a.to_dict()) == dumps_json(b.to_dict())
    assert a.slope > 0.3 and not a.degenerate


def test_converge_zero_coupling_is_degenerate():
    rep = run_converge(load_config(None, SMALL + ["eta = 0"]))
    assert rep.degenerate and rep.slope is None and rep.control is None
    assert "# slope: none" in format_csv(rep)


def test_converge_metadata_and_control():
    rep = run_converge(load_config(None, ["eps = 2^-6, 2^-7, 2^-8", "xi = 0"]))
    md = rep.metadata
    assert md["config_sha256"] == load_config(None, ["eps = 2^-6, 2^-7, 2^-8", "xi = 0"]).digest()
    assert md["admissibility"]["V_norm_times_q_sup"] == pytest.approx(0.25)
    assert len(rep.control) == 3 and md["floor_ratio"] > 1


def test_converge_requires_line():
    with pytest.raises(ValueError):
        run_converge(load_config(None, ["curve.kind = circle", "eps = 0.1, 0.05, 0.02"]))
