import json
import pytest

from attlat.cli import main
from attlat.dynamics import MultivaluedMap, digraph_to_json
from attlat.lift import double_well_target


@pytest.fixture
def g1_file(tmp_path):
    path = tmp_path / "g1.json"
    path.write_text(json.dumps(digraph_to_json(MultivaluedMap(3, [[1], [0], [0, 2]]))))
    return path


@pytest.fixture
def dw_target_file(tmp_path):
    path = tmp_path / "dw.json"
    path.write_text(json.dumps(double_well_target("0.4").to_json()))
    return path


def test_approx_writes_levels_and_roundtrips(tmp_path):
    out = tmp_path / "out"
    rc = main(
        ["approx", "--system", "quadratic", "--depths", "1,2", "--rho", "0", "--out", str(out)]
    )
    assert rc == 0
    data = json.loads((out / "map_depth1.json").read_text())
    assert data["n"] == 2 and data["edges"] == [[0, 0], [1, 0], [1, 1]]
    assert data["provenance"]["certified"] is True
    # round-trip through the parser is lossless
    from attlat.dynamics import digraph_from_json

    F = digraph_from_json(data)
    assert digraph_to_json(F)["edges"] == data["edges"]


def test_approx_logistic_left_total(tmp_path):
    out = tmp_path / "out"
    rc = main(
        ["approx", "--system", "logistic:3.2", "--depths", "6", "--out", str(out)]
    )
    assert rc == 0
    data = json.loads((out / "map_depth6.json").read_text())
    assert data["n"] == 64
    targets = {u for u, _ in data["edges"]}
    assert targets == set(range(64))  # left-total


def test_unknown_system_exit_2(tmp_path):
    assert main(["approx", "--system", "nope", "--depths", "2", "--out", str(tmp_path)]) == 2


def test_missing_flags_exit_2(tmp_path):
    assert main(["approx", "--out", str(tmp_path)]) == 2


def test_oracle_error_exit_3(tmp_path):
    # henon on a domain it does not map into itself
    rc = main(
        [
            "approx",
            "--system",
            "henon:1.4,0.3",
            "--domain=-1:1,-1:1",
            "--depths",
            "2",
            "--out",
            str(tmp_path / "o"),
        ]
    )
    assert rc == 3


def test_attractors_g1(g1_file, tmp_path):
    out = tmp_path / "att"
    rc = main(
        ["attractors", "--digraph", str(g1_file), "--out", str(out), "--format", "dot"]
    )
    assert rc == 0
    data = json.loads((out / "attractors.json").read_text())
    assert data["attractor_count"] == 3
    assert data["attractor_poset"]["leq"] == [["a0", "a1"]]
    pairs = {tuple(map(tuple, (p["attractor"], p["dual_repeller"]))) for p in data["dual_pairing"]}
    assert ((0, 1), (2,)) in pairs
    assert (out / "condensation.dot").exists()


def test_attractors_cap_exit_4(tmp_path):
    big = tmp_path / "big.json"
    n = 24
    big.write_text(json.dumps({"n": n, "edges": [[i, i] for i in range(n)]}))
    rc = main(["attractors", "--digraph", str(big), "--cap", "1024", "--out", str(tmp_path / "o")])
    assert rc == 4


def test_lift_and_verify_roundtrip(dw_target_file, tmp_path):
    out = tmp_path / "lift"
    rc = main(
        [
            "lift",
            "--system",
            "cubicwell:0.4",
            "--depths",
            "6,8,10",
            "--target",
            str(dw_target_file),
            "--reference-depth",
            "10",
            "--out",
            str(out),
            "--no-squeeze-check",
        ]
    )
    assert rc == 0
    lift_data = json.loads((out / "lift.json").read_text())
    assert lift_data["kind"] == "ASet"
    report = json.loads((out / "lift_report.json").read_text())
    assert report["ok"]
    # verify the emitted lift file independently
    rc2 = main(
        [
            "verify",
            "--lift",
            str(out / "lift.json"),
            "--target",
            str(dw_target_file),
            "--out",
            str(tmp_path / "v"),
        ]
    )
    assert rc2 == 0


def test_lift_corrupt_target_exit_5(tmp_path, dw_target_file):
    data = json.loads(dw_target_file.read_text())
    # make the pair representative smaller than one of its parts
    data["overrides"] = {"neg|pos": [{"lo": ["1"], "hi": ["1"]}]}
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    rc = main(
        [
            "lift",
            "--system",
            "cubicwell:0.4",
            "--depths",
            "6,8",
            "--target",
            str(bad),
            "--out",
            str(tmp_path / "o"),
            "--no-squeeze-check",
        ]
    )
    assert rc == 5


def test_lift_kind_cofiltration_without_cofiltered_exit_5(tmp_path, dw_target_file):
    rc = main(
        [
            "lift",
            "--system",
            "cubicwell:0.4",
            "--depths",
            "6,8",
            "--target",
            str(dw_target_file),
            "--lift-kind",
            "cofiltration",
            "--out",
            str(tmp_path / "o"),
            "--no-squeeze-check",
        ]
    )
    assert rc == 5


def test_verify_digraph_and_random_sweep(g1_file, tmp_path):
    rc = main(
        [
            "verify",
            "--digraph",
            str(g1_file),
            "--random",
            "25",
            "--max-n",
            "6",
            "--seed",
            "7",
            "--out",
            str(tmp_path / "v"),
        ]
    )
    assert rc == 0
    report = json.loads((tmp_path / "v" / "verify_report.json").read_text())
    assert report["ok"]
    assert report["digraph"]["diagram"]["ok"]
    assert report["digraph"]["oracle_equivalence"] is True
    assert report["random_sweep"]["failures"] == []


def test_verify_tampered_lift_exit_5(dw_target_file, tmp_path):
    out = tmp_path / "lift"
    main(
        [
            "lift",
            "--system",
            "cubicwell:0.4",
            "--depths",
            "6,8,10",
            "--target",
            str(dw_target_file),
            "--out",
            str(out),
            "--no-squeeze-check",
        ]
    )
    data = json.loads((out / "lift.json").read_text())
    # remove the cells holding the left well (depth 8 on [-2,2]: -1 sits on
    # the boundary of cells 63 and 64) from the image that must contain it
    data["assignment"]["neg"] = [c for c in data["assignment"]["neg"] if c not in (63, 64)]
    (out / "tampered.json").write_text(json.dumps(data))
    rc = main(
        [
            "verify",
            "--lift",
            str(out / "tampered.json"),
            "--target",
            str(dw_target_file),
            "--out",
            str(tmp_path / "v"),
        ]
    )
    assert rc == 5


def test_determinism_identical_bytes(tmp_path, dw_target_file):
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        rc = main(
            [
                "lift",
                "--system",
                "cubicwell:0.4",
                "--depths",
                "6,8",
                "--target",
                str(dw_target_file),
                "--seed",
                "3",
                "--out",
                str(out),
                "--no-squeeze-check",
            ]
        )
        assert rc == 0
        outs.append((out / "lift.json").read_bytes())
    assert outs[0] == outs[1]
