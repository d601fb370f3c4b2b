import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

from hmcflow import cli, oracles
from hmcflow.config import parse_text
from hmcflow.diagnostics import CSV_COLUMNS
from hmcflow.errors import InvalidConfig
from hmcflow.solver import FlowConfig

CIRCLE = "[initial]\nkind = circle\nr0 = 1\n[solver]\nn = 128\n"


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_config_defaults():
    spec = parse_text(CIRCLE)
    assert spec.kind == "flow"
    cfg = spec.config
    assert (cfg.cfl, cfg.d, cfg.n) == (0.5, 0.0, 128)
    assert cfg.velocity_params == {"f0": 0.0}


def test_margin_named_in_error():
    text = "[initial]\nkind = perturbed\nr0 = 1\neps = 0.4\nm = 2\n"
    with pytest.raises(InvalidConfig, match="1 - 3\\*0.4"):
        parse_text(text)


def test_unknown_key_with_line_number():
    with pytest.raises(InvalidConfig, match=r"<config>:6: unknown key 'dd'"):
        parse_text(CIRCLE + "dd = 1\n")


def test_other_schema_errors():
    bad = [
        "[initial]\nkind = circle\n",                       # missing r0
        "[initial]\nkind = blob\nr0 = 1\n",                 # unknown kind
        CIRCLE + "[extra]\nx = 1\n",                        # unknown section
        CIRCLE.replace("n = 128", "n = many"),               # not a number
        CIRCLE.replace("n = 128", "n = 127"),               # odd grid
        CIRCLE + "[string]\nm = 64\n",                      # solver + string
        "[initial]\nkind = perturbed\nr0=1\neps=0.01\nm=2\n[string]\n",
        "[solver]\nn = 64\n",                               # no initial
    ]
    for text in bad:
        with pytest.raises(InvalidConfig):
            parse_text(text)


def test_digest_depends_on_resolved_values_only():
    a = parse_text(CIRCLE).digest
    b = parse_text("# comment\n[solver]\nn=128\ncfl = 0.5\n[initial]\n"
                   "kind=circle\nr0 = 1.0\n").digest
    c = parse_text(CIRCLE.replace("r0 = 1", "r0 = 1.1")).digest
    assert a == b != c
    assert len(a) == 64


def test_run_circle_outputs(tmp_path):
    cfg = write(tmp_path, "c.ini", CIRCLE + "t_end = 0.5\n[output]\n"
                "snapshot_every = 5\n")
    out = tmp_path / "o"
    assert cli.main(["run", str(cfg), "--out", str(out), "--svg"]) == 0
    lines = (out / "diagnostics.csv").read_text().splitlines()
    assert lines[0].split(",") == list(CSV_COLUMNS)
    first = lines[1].split(",")
    assert first[9:] == [""] * 6          # absent residuals
    assert first[1] == "6.2831853071795862"   # 17 significant digits
    snap = (out / "snapshot_0000.csv").read_text().splitlines()
    assert snap[0] == "theta,S,S_tau,x,y,k"
    assert len(snap) == 129
    summary = json.loads((out / "summary.json").read_text())
    assert summary["termination"] == "reached_t_end"
    assert summary["t_final"] == 0.5
    assert summary["collapse_estimate"] is None
    assert set(summary["max_identity_residuals"]) == set(CSV_COLUMNS[9:])
    assert summary["config_digest"] == parse_text(cfg.read_text()).digest
    assert (out / "curves.svg").read_text().startswith("<svg")


def test_run_is_byte_reproducible(tmp_path):
    cfg = write(tmp_path, "c.ini",
                "[initial]\nkind = perturbed\nr0 = 1\neps = 0.05\nm = 3\n"
                "[solver]\nn = 64\nt_end = 0.3\n")
    for d in ("a", "b"):
        assert cli.main(["run", str(cfg), "--out", str(tmp_path / d)]) == 0
    for name in ("diagnostics.csv", "snapshot_0001.csv"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()


def test_run_collapse_estimate(tmp_path):
    cfg = write(tmp_path, "c.ini", CIRCLE.replace("128", "64"))
    out = tmp_path / "o"
    assert cli.main(["run", str(cfg), "--out", str(out)]) == 0
    est = json.loads((out / "summary.json").read_text())["collapse_estimate"]
    assert est["value"] == pytest.approx(math.sqrt(math.pi / 2), abs=2e-3)


def test_run_dissipative_collapse_matches_oracle(tmp_path):
    cfg = write(tmp_path, "c.ini", CIRCLE + "d = -1\n")
    out = tmp_path / "o"
    assert cli.main(["run", str(cfg), "--out", str(out)]) == 0
    est = json.loads((out / "summary.json").read_text())["collapse_estimate"]
    ref = oracles.circle_flow(1.0, 0.0, -1.0).collapse_time
    assert abs(est["value"] - ref) <= 1e-3


def test_invalid_config_exit_2_no_files(tmp_path):
    cfg = write(tmp_path, "bad.ini", CIRCLE + "dd = 3\n")
    out = tmp_path / "never"
    assert cli.main(["run", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()
    assert cli.main(["run", str(tmp_path / "missing.ini"),
                     "--out", str(out)]) == 2
    assert not out.exists()


def test_hyperbolicity_loss_exit_3(tmp_path):
    cfg = write(tmp_path, "h.ini",
                "[initial]\nkind = circle\nr0 = 1\n[velocity]\nkind = cosine\n"
                "f0 = 0.5\namp = 0.5\nmode = 8\n[solver]\nn = 64\n")
    with pytest.warns(RuntimeWarning):
        code = cli.main(["run", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 3
    s = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert s["termination"] == "hyperbolicity_lost"


def test_numerical_failure_exit_4(tmp_path, monkeypatch):
    from hmcflow import solver
    real = solver._rhs

    def poisoned(s, p, d, dealias=False, stage=0):
        sd, pd = real(s, p, d, dealias, stage)
        if stage == 2:
            pd = pd * np.nan
        return sd, pd

    monkeypatch.setattr(solver, "_rhs", poisoned)
    cfg = write(tmp_path, "c.ini", CIRCLE.replace("128", "64"))
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 4
    s = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert s["termination"] == "numerical_failure"


def test_exit_code_table():
    assert cli.exit_code("collapse_detected") == 0
    assert cli.exit_code("blowup_detected") == 0
    assert cli.exit_code("reached_t_end") == 0
    assert cli.exit_code("hyperbolicity_lost") == 3
    assert cli.exit_code("timelike_lost") == 3
    assert cli.exit_code("numerical_failure") == 4


def test_string_run(tmp_path):
    cfg = write(tmp_path, "s.ini", "[initial]\nkind = circle\nr0 = 1\n"
                "[string]\nm = 64\ncfl = 0.25\nt_end = 1.0\n")
    out = tmp_path / "o"
    assert cli.main(["run", str(cfg), "--out", str(out)]) == 0
    last = (out / "diagnostics.csv").read_text().splitlines()[-1].split(",")
    assert float(last[0]) == 1.0
    assert abs(float(last[1]) - math.cos(1.0)) < 1e-8


def test_refine_levels_rejected(tmp_path):
    cfg = write(tmp_path, "c.ini", CIRCLE)
    assert cli.main(["refine", str(cfg), "--levels", "2",
                     "--out", str(tmp_path / "r")]) == 2
    assert not (tmp_path / "r").exists()


def test_refine_temporal_order_circle(tmp_path):
    cfg = write(tmp_path, "c.ini",
                "[initial]\nkind = circle\nr0 = 1\n[velocity]\nkind = constant\n"
                "f0 = 0.2\n[solver]\nn = 64\nt_end = 0.5\n")
    out = tmp_path / "r"
    assert cli.main(["refine", str(cfg), "--out", str(out)]) == 0
    table = json.loads((out / "refine.json").read_text())
    assert table["comparison"] == "oracle"
    orders = [r["order"] for r in table["levels"][1:]]
    assert min(orders) >= 3.8
    assert (out / "refine.csv").read_text().startswith("level,n,")


def test_refine_self_convergence_perturbed():
    cfg = FlowConfig(shape="perturbed", shape_params={"r0": 1, "eps": 0.05, "m": 3},
                     n=64, t_end=0.5)
    table = cli.refine_table(cfg, 3)
    assert table["comparison"] == "finest_level"
    assert table["levels"][1]["order"] >= 3.5


def test_richardson_helper():
    # T(h) = 1 + h^2 sampled at h = 1, 1/2, 1/4
    limit, p = cli.richardson([2.0, 1.25, 1.0625])
    assert limit == pytest.approx(1.0)
    assert p == pytest.approx(2.0)
    assert cli.richardson([1.0, 1.0]) == (None, None)


OUTER = "[initial]\nkind = circle\nr0 = 1.3\n[solver]\nn = 64\n"
INNER = ("[initial]\nkind = ellipse\na = 1.2\nb = 1\n[velocity]\nkind = constant\n"
         "f0 = 0.1\n[solver]\nn = 64\n")


def test_compare_containment(tmp_path):
    o, i = write(tmp_path, "o.ini", OUTER), write(tmp_path, "i.ini", INNER)
    out = tmp_path / "cmp"
    assert cli.main(["compare", str(o), str(i), "--out", str(out)]) == 0
    rep = json.loads((out / "compare.json").read_text())
    assert rep["violations"] == 0
    assert rep["inner_not_later"]


def test_compare_identical_configs(tmp_path):
    o = write(tmp_path, "o.ini", OUTER)
    out = tmp_path / "cmp"
    assert cli.main(["compare", str(o), str(o), "--out", str(out)]) == 0
    assert json.loads((out / "compare.json").read_text())["violations"] == 0


def test_compare_preconditions(tmp_path):
    small = write(tmp_path, "s.ini", "[initial]\nkind = circle\nr0 = 1\n"
                  "[solver]\nn = 64\n")
    big = write(tmp_path, "b.ini", "[initial]\nkind = circle\nr0 = 2\n"
                "[solver]\nn = 64\n")
    fast = write(tmp_path, "f.ini", "[initial]\nkind = circle\nr0 = 2\n"
                 "[velocity]\nkind = constant\nf0 = 0.3\n[solver]\nn = 64\n")
    other_n = write(tmp_path, "n.ini", "[initial]\nkind = circle\nr0 = 0.5\n"
                    "[solver]\nn = 128\n")
    out = tmp_path / "cmp"
    assert cli.main(["compare", str(small), str(big), "--out", str(out)]) == 2
    assert cli.main(["compare", str(fast), str(small), "--out", str(out)]) == 2
    assert cli.main(["compare", str(big), str(other_n), "--out", str(out)]) == 2
    assert not out.exists()


def test_oracle_dump(tmp_path):
    out = tmp_path / "o.csv"
    assert cli.main(["oracle", "flow", "--r0", "1", "--t-end", "0.5",
                     "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "t,R,Rdot"
    assert float(rows[-1].split(",")[0]) == 0.5
    assert cli.main(["oracle", "string", "--r1", "1.5"]) == 2


def test_sweep_with_worker_cap(tmp_path, monkeypatch):
    write(tmp_path, "a.ini", CIRCLE.replace("128", "64") + "t_end = 0.3\n")
    write(tmp_path, "b.ini", OUTER + "t_end = 0.3\n")
    write(tmp_path, "c.ini", "[initial]\nkind = circle\nr0 = 1\n[string]\n"
          "m = 32\nt_end = 0.3\n")
    sweep = write(tmp_path, "sweep.txt", "# runs\na.ini\nb.ini\nc.ini\n")
    monkeypatch.setenv("HMCF_WORKERS", "2")
    out = tmp_path / "sw"
    assert cli.main(["sweep", str(sweep), "--out", str(out)]) == 0
    merged = json.loads((out / "sweep_summary.json").read_text())
    assert merged["workers"] == 2
    assert [r["termination"] for r in merged["runs"]] == ["reached_t_end"] * 3
    for r in merged["runs"]:
        assert (out / r["dir"] / "diagnostics.csv").exists()
        assert r["config_digest"].startswith(r["dir"])


def test_worker_count(monkeypatch):
    monkeypatch.setenv("HMCF_WORKERS", "3")
    assert cli.worker_count(10) == 3
    assert cli.worker_count(2) == 2
    monkeypatch.setenv("HMCF_WORKERS", "zero")
    with pytest.raises(InvalidConfig):
        cli.worker_count(2)


def test_sweep_bad_entry_exit_2(tmp_path):
    write(tmp_path, "a.ini", CIRCLE)
    write(tmp_path, "bad.ini", CIRCLE + "dd = 1\n")
    sweep = write(tmp_path, "sweep.txt", "a.ini\nbad.ini\n")
    out = tmp_path / "sw"
    assert cli.main(["sweep", str(sweep), "--out", str(out)]) == 2
    assert not out.exists()
