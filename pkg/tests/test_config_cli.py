import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genbm.cli import EXIT_CONFIG, EXIT_OK, EXIT_STATISTICAL, main
from genbm.config import parse_config, resolved_values, serialize_config
from genbm.errors import ConfigError

FIG_WALK = """
[run]
mode = simulate
topology = two_half

[walk]
a_plus = 0.25
a_minus = 0.25
b_plus = 2
b_minus = 2
c_plus = 6
c_minus = 4

[sim]
n = 500
t = 1.0
u = 0.3333
m = 2
seed = 42
"""


def test_parse_minimal_figure_config():
    rc = parse_config(FIG_WALK)
    assert rc.mode == "simulate"
    p = rc.walk_params()
    assert p.A_plus == 0.25 and p.C_plus == 6.0
    k = rc.coeffs()
    assert k.a_plus / k.c3_plus == pytest.approx(6.0)


def test_defaults_filled_and_echoed():
    rc = parse_config(FIG_WALK)
    vals = resolved_values(rc)
    assert vals["sim"]["record_mode"] == "endpoints_only"
    assert vals["numerics"]["h"] == 0.01


def test_negative_rate_names_key():
    with pytest.raises(ConfigError) as ei:
        parse_config(FIG_WALK.replace("b_minus = 2", "b_minus = -1"))
    assert "walk.b_minus" in str(ei.value)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as ei:
        parse_config(FIG_WALK.replace("seed = 42", "seed = 42\nbogus = 3"))
    assert "bogus" in str(ei.value)


def test_unknown_section_rejected():
    with pytest.raises(ConfigError):
        parse_config(FIG_WALK + "\n[mystery]\nx = 1\n")


def test_malformed_number_names_key():
    with pytest.raises(ConfigError) as ei:
        parse_config(FIG_WALK.replace("n = 500", "n = five hundred"))
    assert "sim.n" in str(ei.value)


def test_missing_seed_rejected_for_stochastic_modes():
    with pytest.raises(ConfigError) as ei:
        parse_config(FIG_WALK.replace("seed = 42", ""))
    assert "seed" in str(ei.value)


def test_missing_mode_rejected():
    with pytest.raises(ConfigError):
        parse_config("[run]\ntopology = line\n")


def test_wrong_topology_walk_keys_rejected():
    bad = FIG_WALK.replace("topology = two_half", "topology = line")
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_roundtrip_serialization():
    rc = parse_config(FIG_WALK)
    rc2 = parse_config(serialize_config(rc))
    assert rc2 == rc
    assert rc2.config_hash() == rc.config_hash()


finite_rate = st.floats(0, 1e9, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(finite_rate, finite_rate, finite_rate, st.integers(1, 10**6),
       st.floats(1e-3, 1e3, allow_nan=False), st.integers(0, 2**63 - 1))
def test_roundtrip_serialization_random_values(a, bp, bm, n, t, seed):
    text = f"""
[run]
mode = simulate
topology = line

[walk]
a = {a!r}
b_plus = {bp!r}
b_minus = {bm!r}

[sim]
n = {n}
t = {t!r}
seed = {seed}
"""
    rc = parse_config(text)
    rc2 = parse_config(serialize_config(rc))
    assert rc2 == rc
    assert rc2.walk_params() == rc.walk_params()


def test_coeffs_section_normalized():
    text = """
[run]
mode = resolvent
topology = line

[coeffs]
c1 = 1
c2p = 1
c2m = 1
c3 = 1
"""
    rc = parse_config(text)
    k = rc.coeffs()
    assert k.c1 == pytest.approx(0.25)


def test_incomplete_coeffs_rejected():
    text = """
[run]
mode = resolvent
topology = line

[coeffs]
c1 = 1
c3 = 1
"""
    with pytest.raises(ConfigError):
        parse_config(text)


# ---------------------------------------------------------------------------
# CLI end to end.
# ---------------------------------------------------------------------------


def _write(tmp_path: Path, text: str) -> Path:
    p = tmp_path / "run.cfg"
    p.write_text(text)
    return p


def test_cli_simulate_single_path(tmp_path):
    cfg = _write(tmp_path, FIG_WALK.replace("m = 2", "m = 1"))
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out)]) == EXIT_OK
    lines = (out / "paths.jsonl").read_text().strip().splitlines()
    assert len(lines) == 1
    rec = json.loads(lines[0])
    assert rec["events"][0] == [0.0, "166"]
    meta = json.loads((out / "run.json").read_text())
    assert meta["master_seed"] == 42
    assert "config_hash" in meta


def test_cli_outputs_byte_identical(tmp_path):
    cfg = _write(tmp_path, FIG_WALK)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["--config", str(cfg), "--out", str(out1)]) == EXIT_OK
    assert main(["--config", str(cfg), "--out", str(out2)]) == EXIT_OK
    assert (out1 / "paths.jsonl").read_bytes() == (out2 / "paths.jsonl").read_bytes()
    assert (out1 / "run.json").read_bytes() == (out2 / "run.json").read_bytes()


def test_cli_seed_override_changes_output(tmp_path):
    cfg = _write(tmp_path, FIG_WALK)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["--config", str(cfg), "--out", str(out1)]) == EXIT_OK
    assert main(["--config", str(cfg), "--out", str(out2), "--seed", "43"]) == EXIT_OK
    assert (out1 / "paths.jsonl").read_bytes() != (out2 / "paths.jsonl").read_bytes()


def test_cli_config_error_exit_code(tmp_path):
    cfg = _write(tmp_path, FIG_WALK.replace("b_minus = 2", "b_minus = -1"))
    assert main(["--config", str(cfg)]) == EXIT_CONFIG
    assert main(["--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG


def test_cli_exit_stats_mode(tmp_path):
    text = """
[run]
mode = exit-stats
topology = line

[walk]
a = 0

[sim]
n = 200
m = 20000
seed = 3

[exit]
x = 1.0
h1 = 0.1
h2 = 0.3
"""
    cfg = _write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    checks = {c["test_name"]: c for c in rep["checks"]}
    assert checks["exit_right_probability"]["pass"]
    assert checks["mean_exit_time"]["pass"]


def test_cli_compare_detects_mismatch(tmp_path):
    # The PDE side runs with a ten-fold switch rate; the walk does not.
    text = """
[run]
mode = compare
topology = two_half

[walk]
a_plus = 0.25
a_minus = 0.25
b_plus = 2
b_minus = 2
c_plus = 6
c_minus = 4

[coeffs]
c1p = 0.25
c1m = 0.25
ap = 60
am = 4
c2p = 2
c2m = 2
c3p = 1
c3m = 1

[sim]
n = 200
t = 1.0
u = 0.3333
m = 20000
seed = 5

[pde]
t = 1.0

[numerics]
h = 0.005
dt = 0.005
"""
    cfg = _write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out)]) == EXIT_STATISTICAL
    rep = json.loads((out / "report.json").read_text())
    assert any(not c["pass"] for c in rep["checks"])
    assert (out / "sweep.csv").exists()


def test_cli_pde_mode(tmp_path):
    text = """
[run]
mode = pde
topology = two_half

[walk]
a_plus = 0.25
a_minus = 0.25
b_plus = 2
b_minus = 2
c_plus = 6
c_minus = 4

[pde]
f0 = gauss_pos
t = 0.25

[numerics]
h = 0.02
dt = 0.02
probe_radius = 1.0
"""
    cfg = _write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out)]) == EXIT_OK
    field = (out / "field.csv").read_text().splitlines()
    assert field[0].startswith("# config=")
    assert field[1] == "t,x,u"
    meta = json.loads((out / "run.json").read_text())
    assert meta["scheme"] == "cn"
    assert meta["max_norm_ratio"] <= 1.0 + 1e-8


def test_cli_resolvent_mode(tmp_path):
    text = """
[run]
mode = resolvent
topology = line

[coeffs]
c1 = 0
c2p = 0
c2m = 0
c3 = 1

[resolvent]
g = exp_abs

[numerics]
lambda = 0.5
"""
    cfg = _write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out)]) == EXIT_OK
    meta = json.loads((out / "run.json").read_text())
    assert meta["corrections"][0] == pytest.approx(1.0, abs=1e-10)
    assert meta["boundary_residual"] <= 1e-9
    assert (out / "resolvent.csv").read_text().splitlines()[1] == "x,f"


def test_cli_validate_mode(tmp_path):
    text = """
[run]
mode = validate
topology = two_half

[sim]
seed = 7
"""
    cfg = _write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert all(c["pass"] for c in rep["checks"])
    names = {c["test_name"] for c in rep["checks"]}
    assert "projector_residual" in names
    assert "pde_contraction" in names


def test_cli_mode_override(tmp_path):
    text = FIG_WALK + "\n[exit]\nx = 1.0\nh1 = 0.1\nh2 = 0.1\n"
    cfg = _write(tmp_path, text.replace("m = 2", "m = 5000").replace("n = 500", "n = 100"))
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out), "--mode", "exit-stats"]) == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert rep["resolved_config"]["run"]["mode"] == "exit-stats"


def test_cli_workers_flag_recorded_and_neutral(tmp_path):
    cfg = _write(tmp_path, FIG_WALK)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["--config", str(cfg), "--out", str(out1)]) == EXIT_OK
    assert main(["--config", str(cfg), "--out", str(out2), "--workers", "4"]) == EXIT_OK
    meta = json.loads((out2 / "run.json").read_text())
    assert meta["resolved_config"]["run"]["workers"] == 4
    # Data artifacts are independent of the worker count.
    assert (out1 / "paths.jsonl").read_bytes() == (out2 / "paths.jsonl").read_bytes()
