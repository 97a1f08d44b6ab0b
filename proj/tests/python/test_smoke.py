import json
import os
import signal
import subprocess

import pytest

import cbpir

DESK = dict(b=1, s=4, v=2, n=6, k=3, m=8, L=4, f=1)


def desk_params(**overrides):
    return cbpir.Params(**{**DESK, **overrides})


def test_params_and_figures():
    p = desk_params()
    p.validate()
    assert (p.delta(), p.ns(), p.q()) == (6, 24, 2)
    assert p.effective_weight_target() == 7
    assert cbpir.weight_threshold(p, 8) == 5
    assert cbpir.m_zero(p, 1) == 4
    r = cbpir.rate_exact(p)
    assert r["exact_rate"] == "1/104"
    assert r["asymptotic_rate"] == "1/8"
    assert (r["upload_bits"], r["download_bits"], r["payload_bits"]) == (2304, 192, 24)
    cost, region = cbpir.attack_complexity(p, 8, 7)
    assert region in ("red", "gray", "green")
    assert cbpir.query_gen_cost(p, 7) == 1  # q = 2: a single nonzero scalar


def test_invalid_params_raise():
    p = desk_params()
    p.f = 2  # q = 2 admits only f = 1
    with pytest.raises(cbpir.CbpirError):
        p.validate()


def test_end_to_end_retrieval():
    p = desk_params()
    db = cbpir.gen_db(p, seed=5)
    assert cbpir.gen_db(p, seed=5) == db
    assert cbpir.gen_db(p, seed=6) != db
    out = cbpir.retrieve_local(p, [3], seed=5, db=db)
    assert out["verified"] and out["rate_match"]
    assert out["measured_rate"] == out["exact_rate"] == "1/104"
    assert len(out["files"]) == 1
    # same seed, same bytes; a different batch still verifies
    again = cbpir.retrieve_local(p, [3], seed=5, db=db)
    assert again["files"] == out["files"]
    other = cbpir.retrieve_local(p, [0], seed=9, db=db)
    assert other["verified"]


def test_wider_field_batch():
    p = cbpir.Params(b=2, s=4, v=2, n=6, k=3, m=8, L=4, f=2)
    p.validate()
    db = cbpir.gen_db(p, seed=21)
    out = cbpir.retrieve_local(p, [1, 6], seed=21, db=db)
    assert out["verified"] and out["rate_match"]
    assert len(out["files"]) == 2


def test_attack_original_succeeds():
    p = desk_params()
    r = cbpir.attack_original_run(p, index=4, seed=11)
    assert r["success"] and r["inferred"] == [4] == r["truth"]
    assert len(r["ranks"]) == p.m
    assert r["ops"] > 0


def test_attack_modified_low_weight_recovers_support():
    p = desk_params()
    r = cbpir.attack_modified_run(p, weight=2, seed=12)
    assert r["success"]
    assert sorted(r["inferred"]) == sorted(r["truth"])


def test_attack_modified_full_weight_defeated():
    p = desk_params()
    hits = sum(
        cbpir.attack_modified_run(p, weight=7, seed=s)["success"] for s in range(8)
    )
    assert hits <= 2  # per-trial success is a low-probability fluke


def test_rate_table():
    rows = cbpir.rate_table()
    assert len(rows) == 12
    assert rows[0]["rate"] == "1/128"
    assert rows[4] == dict(q=16, s=32, v=16, n=100, k=50, delta=800, f=4, rate="1/5")
    assert rows[5]["rate"] == "8/33"


# ---- command-line binary, exercised as a subprocess ----


def cbpir_bin():
    path = os.environ.get("CBPIR_BIN")
    if not path or not os.path.exists(path):
        pytest.skip("CBPIR_BIN not set")
    return path


def write_desk_json(tmp_path, seed=3):
    params = tmp_path / "params.json"
    params.write_text(json.dumps({**DESK, "seed": seed}))
    return params


def test_cli_validate_and_gendb(tmp_path):
    binary = cbpir_bin()
    params = write_desk_json(tmp_path)
    out = subprocess.run(
        [binary, "validate", "--params", str(params)],
        check=True, capture_output=True, text=True,
    ).stdout
    assert "delta=6" in out and "exact_rate=1/104" in out

    db1 = tmp_path / "db1.bin"
    db2 = tmp_path / "db2.bin"
    subprocess.run([binary, "gendb", "--params", str(params), "--out", str(db1)], check=True)
    subprocess.run([binary, "gendb", "--params", str(params), "--out", str(db2)], check=True)
    assert db1.read_bytes() == db2.read_bytes()
    db3 = tmp_path / "db3.bin"
    subprocess.run(
        [binary, "gendb", "--params", str(params), "--out", str(db3), "--seed", "4"],
        check=True,
    )
    assert db3.read_bytes() != db1.read_bytes()


def test_cli_retrieve_transcript(tmp_path):
    binary = cbpir_bin()
    params = write_desk_json(tmp_path)
    db = tmp_path / "db.bin"
    subprocess.run([binary, "gendb", "--params", str(params), "--out", str(db)], check=True)
    out = subprocess.run(
        [binary, "retrieve", "--params", str(params), "--db", str(db), "--index", "2"],
        check=True, capture_output=True, text=True,
    ).stdout
    t = json.loads(out)
    assert t["rate_match"] and t["verified_against_db"]
    assert t["over_wire"] is False
    assert t["measured_rate"] == "1/104"
    assert t["indices"] == [2]


def test_cli_serve_and_retrieve(tmp_path):
    binary = cbpir_bin()
    params = write_desk_json(tmp_path)
    db = tmp_path / "db.bin"
    subprocess.run([binary, "gendb", "--params", str(params), "--out", str(db)], check=True)
    proc = subprocess.Popen(
        [binary, "serve", "--db", str(db), "--endpoint", "127.0.0.1:0"],
        stdout=subprocess.PIPE, text=True,
    )
    try:
        line = proc.stdout.readline().strip()
        assert line.startswith("listening on ")
        endpoint = line.rsplit(" ", 1)[1]
        out = subprocess.run(
            [binary, "retrieve", "--params", str(params), "--endpoint", endpoint,
             "--index", "5"],
            check=True, capture_output=True, text=True, timeout=60,
        ).stdout
        t = json.loads(out)
        assert t["rate_match"] and t["over_wire"] is True
    finally:
        proc.send_signal(signal.SIGTERM)
    assert proc.wait(timeout=30) == 0


def test_cli_exit_codes(tmp_path):
    binary = cbpir_bin()
    params = write_desk_json(tmp_path)
    assert subprocess.run([binary, "retrieve", "--params", str(params)],
                          capture_output=True).returncode == 2  # missing --index
    assert subprocess.run([binary, "--help"], capture_output=True).returncode == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**DESK, "f": 2, "seed": 1}))
    r = subprocess.run([binary, "validate", "--params", str(bad)],
                       capture_output=True, text=True)
    assert r.returncode == 1 and "f" in r.stderr
