import json

import numpy as np
import pytest

from ghzmixed import cli
from ghzmixed.measurement import CountsTable, outcome_parity, write_counts_csv
from ghzmixed.nonlocality import MERMIN_SETTINGS, target_parity

FAST = {"bootstrap": {"replicas": 100, "tomography_replicas": 0}}


def write_config(tmp_path, extra=None):
    cfg = dict(FAST)
    cfg.update(extra or {})
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_derive_t_shape(tmp_path, capsys):
    assert cli.main(["derive", "--preset", "t_shaped", "--n", "7", "--support", "1,2,3,4",
                     "--out-dir", str(tmp_path)]) == 0
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert cert["strings"] == ["+ZXZZ", "+YYZZ", "+ZYYZ", "-YXYZ"]
    assert (tmp_path / "proof.txt").read_text().strip()
    assert "YXYZ  eigenvalue -1" in capsys.readouterr().out


def test_derive_no_paradox(tmp_path, capsys):
    code = cli.main(["derive", "--preset", "linear", "--n", "6", "--support", "2,3,4,5",
                     "--out-dir", str(tmp_path)])
    assert code == 4
    assert "no GHZ paradox" in capsys.readouterr().err
    assert not (tmp_path / "certificate.json").exists()


def test_derive_linear_chain_end(tmp_path):
    # the end of a chain already carries a four-qubit paradox
    assert cli.main(["derive", "--preset", "linear", "--n", "6", "--support", "1,2,3,4",
                     "--out-dir", str(tmp_path)]) == 0


def test_derive_malformed_graph(tmp_path, capsys):
    g = tmp_path / "g.txt"
    g.write_text("n=4\n1 2\n2 x\n")
    assert cli.main(["derive", "--graph", str(g), "--out-dir", str(tmp_path)]) == 2
    g.write_text("n=4\n1 9\n")
    assert cli.main(["derive", "--graph", str(g), "--out-dir", str(tmp_path)]) == 2
    assert cli.main(["derive", "--preset", "linear", "--out-dir", str(tmp_path)]) == 2
    assert cli.main(["derive", "--support", "1,2,99", "--out-dir", str(tmp_path)]) == 2


def test_bad_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    assert cli.main(["derive", "--config", str(p)]) == 2
    p.write_text(json.dumps({"schema_version": 99}))
    assert cli.main(["derive", "--config", str(p)]) == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2


def synthesized_tables(fractions, total=1900):
    """Spread predicted and spurious events evenly over their outcomes."""
    tables = []
    for s, f in zip(MERMIN_SETTINGS, fractions):
        par = outcome_parity(np.arange(16))
        good = par == target_parity(s)
        counts = np.where(good, round(f * total) / 8, round((1 - f) * total) / 8)
        tables.append(CountsTable(s, np.round(counts).astype(int)))
    return tables


def run_analyze(tmp_path, text, capsys):
    path = tmp_path / "counts.csv"
    path.write_text(text)
    code = cli.main(["analyze", str(path), "--out-dir", str(tmp_path / "out")])
    return code, capsys.readouterr()


def test_analyze_ideal(tmp_path, capsys):
    code, out = run_analyze(tmp_path, write_counts_csv(synthesized_tables([1, 1, 1, 1], 800)), capsys)
    assert code == 0
    assert json.loads(out.out)["S"]["value"] == 4


def test_analyze_reported_fractions(tmp_path, capsys):
    # XXXX fraction from its reported correlation 0.626
    fr = [(1 + 0.626) / 2, 0.822, 0.798, 0.812]
    code, out = run_analyze(tmp_path, write_counts_csv(synthesized_tables(fr)), capsys)
    assert code == 0
    rep = json.loads(out.out)
    assert rep["S"]["value"] == pytest.approx(2.50, abs=0.01)
    assert rep["S"]["sigma"] == pytest.approx(0.04, abs=0.005)
    assert rep["lr_bound_fraction"]["value"] == pytest.approx(0.568, abs=0.002)
    assert rep["violation"]
    for name in ("report.json", "report.csv", "outcome_fractions.csv"):
        assert (tmp_path / "out" / name).exists()


def test_analyze_negative_count(tmp_path, capsys):
    lines = write_counts_csv(synthesized_tables([1, 1, 1, 1], 800)).splitlines()
    fields = lines[7].split(",")
    fields[2] = "-5"
    lines[7] = ",".join(fields)
    code, out = run_analyze(tmp_path, "\n".join(lines) + "\n", capsys)
    assert code == 3
    assert "row 8" in out.err


def test_analyze_missing_setting(tmp_path, capsys):
    code, out = run_analyze(tmp_path, write_counts_csv(synthesized_tables([1, 1, 1, 1])[:3]), capsys)
    assert code == 3
    assert "YYXX" in out.err


def test_analyze_zero_totals(tmp_path, capsys):
    tables = synthesized_tables([1, 1, 1, 1])
    tables[1] = tables[1].with_counts(np.zeros(16, dtype=int))
    code, out = run_analyze(tmp_path, write_counts_csv(tables), capsys)
    assert code == 3
    assert "zero total" in out.err


def test_state_command(tmp_path):
    assert cli.main(["state", "rho_psi", "--out-dir", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "rho_psi.json").read_text())
    assert d["n"] == 4
    assert cli.main(["state", "cluster", "--preset", "t_shaped", "--n", "5", "--out-dir", str(tmp_path)]) == 0


def test_simulate_and_tomo(tmp_path, capsys):
    out = tmp_path / "sim"
    assert cli.main(["simulate", "--config", write_config(tmp_path), "--out-dir", str(out)]) == 0
    header = (out / "correlation_counts.csv").read_text().splitlines()[0]
    assert header == "setting,outcome,count,duration_s"
    capsys.readouterr()
    assert cli.main(["tomo", str(out / "tomography_counts.csv"), "--config", write_config(tmp_path),
                     "--out-dir", str(out)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert 0.4 < res["fidelity_rho_psi"] < 0.8
    bad = tmp_path / "bad.csv"
    bad.write_text("projector,count,duration_s\nHH,1,60\n")
    assert cli.main(["tomo", str(bad), "--out-dir", str(out)]) == 3


@pytest.mark.parametrize("p, violation", [(1.0, True), (0.4, False)])
def test_reproduce_extremes(tmp_path, p, violation):
    out = tmp_path / "run"
    code = cli.main(["reproduce", "--config", write_config(tmp_path), "--noise-p", str(p),
                     "--out-dir", str(out)])
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    summary = (out / "summary.txt").read_text()
    assert rep["violation"] is violation
    if violation:
        assert rep["S"]["value"] == pytest.approx(4.0, abs=1e-12)
        assert all(f["value"] == 1 for f in rep["fractions"].values())
    else:
        assert rep["S"]["value"] == pytest.approx(1.6, abs=5 * rep["S"]["sigma"])
        assert "no violation" in summary


def test_reproduce_default_band(tmp_path):
    res = cli.run_reproduce(cli.load_config(write_config(tmp_path)), tmp_path / "run")
    assert 2.35 <= res["report"].S <= 2.65
    rows = (tmp_path / "run" / "summary.csv").read_text().splitlines()
    assert rows[0] == "statistic,value,sigma,reference_value,reference_sigma"
    for line in rows[1:]:
        name, v, s, pv, ps = line.split(",")
        # fidelity sigma needs the tomography bootstrap, which FAST switches off
        if not name.startswith("significance") and name != "fidelity_rho_psi":
            assert s != "" and pv != ""


def test_reproduce_is_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert cli.main(["reproduce", "--config", write_config(tmp_path), "--out-dir", str(out)]) == 0
        outs.append({f.name: f.read_bytes() for f in sorted(out.iterdir())})
    assert outs[0].keys() == outs[1].keys()
    for name in outs[0]:
        if name != "config.json":
            assert outs[0][name] == outs[1][name], name


def test_reproduce_stage_tagged_failure(tmp_path, capsys):
    cfg = write_config(tmp_path, {"graph": {"preset": "linear", "n": 6}, "support": [2, 3, 4, 5]})
    assert cli.main(["reproduce", "--config", cfg, "--out-dir", str(tmp_path / "r")]) == 4
    assert "[derive]" in capsys.readouterr().err
