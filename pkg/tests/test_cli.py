import io
import json

import numpy as np
import pytest

from main import main

SMALL_CSV = "x,label\n0,a\n1,a\n5,b\n6,b\n"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def small_csv(tmp_path):
    path = tmp_path / "small.csv"
    path.write_text(SMALL_CSV, encoding="utf-8")
    return str(path)


@pytest.fixture
def noisy_csv(tmp_path):
    rng = np.random.default_rng(5)
    lines = ["x,y,label"]
    for label, offset in (("a", 0.0), ("b", 1.5)):
        for x, y in rng.normal(offset, 1.0, size=(15, 2)):
            lines.append(f"{x:.17g},{y:.17g},{label}")
    path = tmp_path / "noisy.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


def test_score_json(capsys, small_csv, clean_env):
    code, out, _ = run(capsys, "score", small_csv, "--indices", "psi-roc,th")
    payload = json.loads(out)
    assert code == 0
    assert payload["dataset"] == "small"
    assert payload["psi_roc"] == 1.0
    assert payload["th"] == 1.0
    assert "sh" not in payload


def test_score_reads_stdin(capsys, monkeypatch, clean_env):
    monkeypatch.setattr("sys.stdin", io.StringIO(SMALL_CSV))
    code, out, _ = run(capsys, "score", "--indices", "dn")
    assert code == 0
    assert json.loads(out)["dn"] == pytest.approx(4.0)


def test_score_with_null_reports_significance(capsys, noisy_csv, clean_env):
    code, out, _ = run(
        capsys, "score", noisy_csv, "--indices", "psi-roc", "--with-null", "--replicates", "30", "--seed", "2"
    )
    payload = json.loads(out)
    assert code == 0
    assert payload["replicates"] == 30
    assert payload["seed"] == 2
    assert set(payload["null"]["psi_roc"]) >= {"mean", "se", "p"}
    assert isinstance(payload["significant"]["psi_roc"], bool)


def test_score_text_and_out_file(capsys, tmp_path, small_csv, clean_env):
    target = tmp_path / "scores.txt"
    code, out, _ = run(capsys, "score", small_csv, "--format", "text", "--out", str(target))
    assert code == 0
    assert out == ""
    text = target.read_text(encoding="utf-8")
    assert text.startswith("=" * 50)
    assert "PSI_ROC" in text


def test_nullmodel_is_reproducible(capsys, noisy_csv, clean_env):
    argv = ("nullmodel", noisy_csv, "--index", "psi-roc", "--replicates", "40", "--seed", "7")
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    payload = json.loads(first)
    assert payload["index"] == "psi_roc"
    assert payload["replicates"] == 40
    assert 0.0 <= payload["p_value"] <= 1.0


def test_nullmodel_workers_do_not_change_output(capsys, noisy_csv, clean_env):
    base = ("nullmodel", noisy_csv, "--index", "sh", "--replicates", "40", "--seed", "3")
    _, serial, _ = run(capsys, *base, "--workers", "1")
    _, threaded, _ = run(capsys, *base, "--workers", "4")
    assert serial == threaded


def test_nullmodel_rejects_several_indices(capsys, small_csv, clean_env):
    code, _, err = run(capsys, "nullmodel", small_csv, "--index", "sh,th", "--replicates", "5")
    assert code == 2
    assert err.startswith("error:")


def test_swiss_roll_pipeline(capsys, monkeypatch, clean_env):
    code, csv_text, _ = run(capsys, "gen-swissroll", "--seed", "1", "--with-t")
    assert code == 0
    assert csv_text.splitlines()[0] == "x1,x2,x3,t,label"
    assert len(csv_text.splitlines()) == 724

    monkeypatch.setattr("sys.stdin", io.StringIO(csv_text))
    code, out, _ = run(capsys, "score", "-", "--drop-cols", "t", "--indices", "th")
    assert code == 0
    assert json.loads(out)["th"] == 1.0


def test_normalize_command(capsys, monkeypatch, clean_env):
    monkeypatch.setattr("sys.stdin", io.StringIO("x,y,label\n9,99,a\n0,0,b\n"))
    code, out, _ = run(capsys, "normalize", "--scheme", "log")
    assert code == 0
    assert out.splitlines() == ["x,y,label", "1,2,a", "0,0,b"]


def test_normalize_zero_sum_is_a_data_error(capsys, monkeypatch, clean_env):
    monkeypatch.setattr("sys.stdin", io.StringIO("x,y,label\n1,-1,a\n2,2,b\n"))
    code, _, _ = run(capsys, "normalize", "--scheme", "DRS")
    assert code == 2


def test_subsample_command(capsys, tmp_path, clean_env):
    path = tmp_path / "groups.csv"
    path.write_text("x,label\n" + "".join(f"{i},{'ab'[i % 2]}\n" for i in range(10)), encoding="utf-8")
    code, out, _ = run(capsys, "subsample", str(path), "--per-group", "2", "--seed", "4")
    lines = out.splitlines()
    assert code == 0
    assert len(lines) == 5
    assert sorted(line.split(",")[1] for line in lines[1:]) == ["a", "a", "b", "b"]

    code, _, _ = run(capsys, "subsample", str(path), "--per-group", "6")
    assert code == 2


def test_evaluate_manifest(capsys, tmp_path, small_csv, noisy_csv, clean_env):
    manifest = tmp_path / "manifest.json"
    manifest.write_text(
        json.dumps(
            {
                "dataset": "toy",
                "candidates": [
                    {"method": "hd", "normalization": "NON", "path": "noisy.csv"},
                    {"method": "pca", "params": {"k": 2}, "normalization": "NON", "path": "noisy.csv"},
                ],
            }
        ),
        encoding="utf-8",
    )
    code, out, _ = run(capsys, "evaluate", str(manifest), "--indices", "psi-roc,th", "--replicates", "20")
    payload = json.loads(out)
    assert code == 0
    assert payload["dataset"] == "toy"
    assert len(payload["candidates"]) == 2
    assert set(payload["best_per_index"]) == {"psi_roc", "th"}
    # identical coordinates tie on every index
    assert len(payload["best_per_index"]["th"]) == 2


def test_similarity_command(capsys, tmp_path, clean_env):
    rng = np.random.default_rng(0)
    ids = ["psi-p", "psi-roc", "psi-pr", "sh", "ch", "dn", "bz", "db*", "th"]
    lines = ["index," + ",".join(f"s{j}" for j in range(12))]
    for index_id in ids:
        lines.append(index_id + "," + ",".join(f"{v:.17g}" for v in rng.normal(size=12)))
    path = tmp_path / "profile.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    code, out, _ = run(capsys, "similarity", str(path))
    payload = json.loads(out)
    assert code == 0
    assert [point["index"] for point in payload["points"]][:3] == ["PSI_P", "PSI_ROC", "PSI_PR"]
    assert all(payload["points"][i]["inside_psi_triangle"] for i in range(3))


def test_constant_profile_row_is_a_computation_error(capsys, tmp_path, clean_env):
    path = tmp_path / "profile.csv"
    path.write_text("index,s1,s2,s3\nsh,1,1,1\nth,1,2,3\nch,3,1,2\n", encoding="utf-8")
    code, _, err = run(capsys, "similarity", str(path))
    assert code == 3
    assert "error:" in err


def test_degenerate_labels_exit_code(capsys, monkeypatch, clean_env):
    monkeypatch.setattr("sys.stdin", io.StringIO("x,label\n0,a\n1,a\n"))
    code, _, err = run(capsys, "score")
    assert code == 2
    assert err.startswith("error:")


def test_alpha_out_of_range_exit_code(capsys, small_csv, clean_env):
    code, _, _ = run(capsys, "score", small_csv, "--with-null", "--alpha", "1.5")
    assert code == 2


def test_unknown_index_is_a_usage_error(capsys, small_csv, clean_env):
    with pytest.raises(SystemExit) as info:
        main(["score", small_csv, "--indices", "foo"])
    assert info.value.code == 1


def test_missing_command_is_a_usage_error(capsys, clean_env):
    assert main([]) == 1
