"""End-to-end CLI checks: reports, determinism, exit codes."""
import json
import math
import subprocess
import sys

import pytest

from shiftlab.cli import main

PHI = (1 + math.sqrt(5)) / 2


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    report = json.loads(captured.out) if captured.out else None
    return code, report, captured.err


def test_pressure_gm(capsys, fixture_dir):
    code, report, _ = run_cli(
        capsys, "pressure", "--shift", str(fixture_dir / "gm.json"),
        "--potential", str(fixture_dir / "zero.json"),
    )
    assert code == 0
    assert abs(report["pressure"]["value"] - 0.4812118251) <= 1e-9
    assert report["pressure"]["error"] <= 1e-9


def test_pressure_table_method(capsys, fixture_dir):
    code, report, _ = run_cli(
        capsys, "pressure", "--shift", str(fixture_dir / "gm.json"), "--method", "table",
        "--nmax", "12",
    )
    assert code == 0
    assert abs(report["pressure"]["value"] - math.log(PHI)) <= report["pressure"]["error"]


def test_entropy_exhaustion(capsys, fixture_dir):
    code, report, _ = run_cli(capsys, "entropy", "--shift", str(fixture_dir / "gm-exhaustion.json"))
    assert code == 0
    levels = [lv["value"] for lv in report["levels"]]
    assert levels[0] == pytest.approx(0.0, abs=1e-12)
    assert levels[1] == pytest.approx(math.log(PHI), abs=1e-9)


def test_zn_and_csv(capsys, tmp_path, fixture_dir):
    out = tmp_path / "zn.csv"
    code, report, _ = run_cli(
        capsys, "zn", "--shift", str(fixture_dir / "full2.json"), "--word", "0",
        "--nmax", "8", "--csv", str(out),
    )
    assert code == 0
    assert [e["Z_n"]["value"] for e in report["entries"]] == [2 ** (n - 1) for n in range(1, 9)]
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "n,Z_n,ratio"
    assert all(abs(float(line.split(",")[2]) - 0.5) < 1e-9 for line in lines[1:])


def test_zeta_full2(capsys, fixture_dir):
    code, report, _ = run_cli(capsys, "zeta", "--shift", str(fixture_dir / "full2.json"), "--order", "4")
    assert code == 0
    assert report["coefficients"] == ["1", "2", "4", "8", "16"]
    assert report["exact"] is True


def test_classify_renewal_fixtures(capsys, fixture_dir):
    code, report, _ = run_cli(capsys, "classify", "--loops", str(fixture_dir / "renewal-6pi2.json"))
    assert code == 0
    assert report["verdict"] == "null_recurrent"
    assert report["Fprime_at_1_over_lambda"] == "divergent"
    lo, hi = report["F_at_1_over_lambda"]["lower"], report["F_at_1_over_lambda"]["upper"]
    assert lo <= 1.0 <= hi

    code, report, _ = run_cli(capsys, "classify", "--loops", str(fixture_dir / "renewal-3pi2.json"))
    assert code == 0
    assert report["verdict"] == "transient"


def test_classify_gm_loops(capsys, fixture_dir):
    code, report, _ = run_cli(capsys, "classify", "--loops", str(fixture_dir / "gm-at-1-loops.json"))
    assert code == 0
    assert report["verdict"] == "SPR"
    assert abs(math.log(report["lambda"]["value"]) - math.log(PHI)) <= 1e-6


def test_equilibrium_writes_measure(capsys, tmp_path, fixture_dir):
    out = tmp_path / "mu.json"
    code, report, _ = run_cli(
        capsys, "equilibrium", "--shift", str(fixture_dir / "gm.json"), "--out", str(out),
    )
    assert code == 0
    assert abs(report["entropy"]["value"] - math.log(PHI)) <= 1e-9
    from shiftlab import documents as docs

    mu = docs.parse_measure(docs.loads(out.read_text()))
    assert mu.order == 1


def test_induce_roundtrip_classify(capsys, tmp_path, fixture_dir):
    out = tmp_path / "loops.json"
    code, report, _ = run_cli(
        capsys, "induce", "--shift", str(fixture_dir / "gm.json"), "--word", "0",
        "--maxlen", "10", "--out", str(out),
    )
    assert code == 0
    assert report["loop_counts"] == {"1": 1, "2": 1}
    code, report, _ = run_cli(capsys, "classify", "--loops", str(out))
    assert code == 0
    assert report["verdict"] == "SPR"


def test_induce_with_potential_bakes_weights(capsys, tmp_path, fixture_dir):
    out = tmp_path / "weighted-loops.json"
    code, _, _ = run_cli(
        capsys, "induce", "--shift", str(fixture_dir / "gm.json"), "--word", "0",
        "--maxlen", "30", "--potential", str(fixture_dir / "gm-range1.json"),
        "--out", str(out),
    )
    assert code == 0
    code, report, _ = run_cli(capsys, "classify", "--loops", str(out))
    assert code == 0
    assert report["verdict"] == "SPR"
    # the baked classification reproduces the spectral pressure of the potential
    code, preport, _ = run_cli(
        capsys, "pressure", "--shift", str(fixture_dir / "gm.json"),
        "--potential", str(fixture_dir / "gm-range1.json"),
    )
    assert abs(math.log(report["lambda"]["value"]) - preport["pressure"]["value"]) <= 1e-6


def test_verify_magic_certified_and_refuted(capsys, tmp_path, fixture_dir):
    from shiftlab import documents as docs
    from shiftlab.codes import OneBlockCode
    from shiftlab.graphs import build_graph

    ai_doc = docs.loads((fixture_dir / "gm-self-ai.json").read_text())
    code_doc = ai_doc["code_s"]
    code_path = tmp_path / "code.json"
    code_path.write_text(docs.dumps(code_doc))
    rc, report, _ = run_cli(
        capsys, "verify-magic", "--code", str(code_path), "--word", "1,0",
        "--offset", "0", "--depth", "8",
    )
    assert rc == 0 and report["status"] == "certified"

    full2 = build_graph(["0", "1"], [(0, 0), (0, 1), (1, 0), (1, 1)]).graph
    point = build_graph(["*"], [(0, 0)]).graph
    collapse = OneBlockCode(source=full2, target=point, symbol_map=(0, 0))
    bad_path = tmp_path / "collapse.json"
    bad_path.write_text(docs.dumps(docs.emit_code(collapse)))
    rc, report, _ = run_cli(
        capsys, "verify-magic", "--code", str(bad_path), "--word", "*", "--depth", "2",
    )
    assert rc == 1
    assert report["status"] == "refuted"
    assert report["witness"] is not None


def test_transport_sampling_seed_required(capsys, fixture_dir):
    rc = main([
        "transport", "--ai", str(fixture_dir / "gm-self-ai.json"),
        "--measure", str(fixture_dir / "gm-parry.json"), "--order", "2",
        "--samples", "1000",
    ])
    assert rc == 2
    capsys.readouterr()


def test_transport_closed_form_and_sampling(capsys, fixture_dir):
    rc, report, _ = run_cli(
        capsys, "transport", "--ai", str(fixture_dir / "gm-self-ai.json"),
        "--measure", str(fixture_dir / "gm-parry.json"), "--order", "2",
    )
    assert rc == 0
    assert report["method"] == "closed-form"
    assert abs(report["entropy_out"]["value"] - math.log(PHI)) <= 1e-9

    rc, report, _ = run_cli(
        capsys, "transport", "--ai", str(fixture_dir / "gm-self-ai.json"),
        "--measure", str(fixture_dir / "gm-parry.json"), "--order", "2",
        "--samples", "20000", "--seed", "42",
    )
    assert rc == 0
    assert report["method"] == "sampling"
    assert abs(report["entropy_out"]["value"] - math.log(PHI)) <= 0.02


def test_verify_correspondence_cli(capsys, fixture_dir):
    rc, report, _ = run_cli(
        capsys, "verify-correspondence", "--ai", str(fixture_dir / "gm-self-ai.json"),
        "--potential", str(fixture_dir / "gm-range1.json"),
        "--target-potential", str(fixture_dir / "gm-range1-block2.json"),
        "--nmax", "8",
    )
    assert rc == 0
    assert report["passed"] is True
    assert report["pressure_gap"]["value"] <= 1e-9


def test_reports_byte_identical(fixture_dir, tmp_path):
    cmd = [
        sys.executable, "-m", "shiftlab.cli", "transport",
        "--ai", str(fixture_dir / "gm-self-ai.json"),
        "--measure", str(fixture_dir / "gm-parry.json"),
        "--order", "2", "--samples", "5000", "--seed", "123",
    ]
    a = subprocess.run(cmd, capture_output=True, text=True)
    b = subprocess.run(cmd, capture_output=True, text=True)
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout
    assert a.stdout.strip().startswith("{")


def test_schema_violation_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "graph", "schema": 1, "alphabet": ["a"], "edges": [[0,0]], "junk": 1}\n')
    rc = main(["pressure", "--shift", str(bad)])
    captured = capsys.readouterr()
    assert rc == 2
    assert "schema error" in captured.err


def test_missing_file_exit_2(capsys):
    rc = main(["pressure", "--shift", "/nonexistent/f.json"])
    capsys.readouterr()
    assert rc == 2


def test_threads_env_fallback(capsys, fixture_dir, monkeypatch):
    monkeypatch.setenv("SHIFTLAB_THREADS", "2")
    code, report, _ = run_cli(
        capsys, "zn", "--shift", str(fixture_dir / "gm.json"), "--nmax", "8",
    )
    assert code == 0
    assert [e["Z_n"]["value"] for e in report["entries"]][:5] == [1, 3, 4, 7, 11]
