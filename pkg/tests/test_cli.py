"""End-to-end checks of the command-line front end (in-process)."""

import json

import pytest

from xplab.cli import main
from xplab.envs import make_two_conventions_game
from xplab.policy import load_policy, policy_payload, save_payload
from xplab.version import VERSION

from conftest import random_tabular_policy

CONVENTIONS_PAYOFF = [[2.0, -2.0, 1.0], [-2.0, 2.0, 1.0], [1.0, 1.0, 1.0]]

TINY_TRAIN = {"iterations": 5, "batch_size": 8, "entropy_coefficient": 0.5}


def matrix_env():
    return {"kind": "matrix", "payoff": CONVENTIONS_PAYOFF}


def write_config(tmp_path, sections, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(sections))
    return str(path)


def run_cli(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


# -- argument and config validation ------------------------------------------------


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert f"xplab {VERSION}" in capsys.readouterr().out


def test_train_without_config_exits_2(capsys):
    code, _out, err = run_cli(["train"], capsys)
    assert code == 2
    assert "--config: required" in err


def test_invalid_json_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    code, _out, err = run_cli(["train", "--config", str(path)], capsys)
    assert code == 2
    assert "invalid JSON" in err


def test_unknown_top_level_key_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path, {"env": matrix_env(), "extra": 1})
    code, _out, err = run_cli(["train", "--config", cfg], capsys)
    assert code == 2
    assert "extra: unknown key" in err


def test_unknown_train_key_names_dotted_path(tmp_path, capsys):
    cfg = write_config(tmp_path, {"env": matrix_env(), "train": {"alpha": 1.0}})
    code, _out, err = run_cli(["train", "--config", cfg], capsys)
    assert code == 2
    assert "train.alpha: unknown key" in err


def test_unknown_sweep_key_names_dotted_path(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        {"env": matrix_env(), "sweep": {"alphas": [1.0], "sedes": 2}},
    )
    code, _out, err = run_cli(["sweep", "--config", cfg], capsys)
    assert code == 2
    assert "sweep.sedes: unknown key" in err


def test_sweep_requires_sweep_section(tmp_path, capsys):
    cfg = write_config(tmp_path, {"env": matrix_env()})
    code, _out, err = run_cli(["sweep", "--config", cfg], capsys)
    assert code == 2
    assert "sweep: required for this command" in err


def test_games_flag_must_be_positive(tmp_path, capsys):
    cfg = write_config(tmp_path, {"env": matrix_env()})
    code, _out, err = run_cli(
        ["train", "--config", cfg, "--games", "0"], capsys)
    assert code == 2
    assert "--games: must be a positive integer" in err


def test_threads_flag_must_be_positive(tmp_path, capsys):
    cfg = write_config(
        tmp_path, {"env": matrix_env(), "sweep": {"alphas": [1.0]}})
    code, _out, err = run_cli(
        ["sweep", "--config", cfg, "--threads", "0"], capsys)
    assert code == 2
    assert "--threads: must be a positive integer" in err


# -- train -----------------------------------------------------------------------


def test_train_writes_policy_and_log(tmp_path, capsys):
    cfg = write_config(tmp_path, {"env": matrix_env(), "train": TINY_TRAIN})
    out_dir = tmp_path / "out"
    code, out, err = run_cli(
        ["train", "--config", cfg, "--out-dir", str(out_dir)], capsys)
    assert code == 0, err
    assert (out_dir / "policy.json").exists()
    assert (out_dir / "training_log.csv").exists()
    assert "greedy self-play score:" in out
    assert "final batch: sp_estimate=" in out

    first = (out_dir / "training_log.csv").read_text().splitlines()[0]
    assert first.startswith(f"# xplab {VERSION} config ")
    assert " train " in first

    policy, provenance = load_policy(out_dir / "policy.json")
    assert policy.frozen
    assert provenance["alpha"] == 0.5
    assert provenance["env_digest"].startswith("sha256:")
    assert provenance["train_config"]["iterations"] == 5


def test_train_seed_flag_changes_result_reruns_do_not(tmp_path, capsys):
    cfg = write_config(tmp_path, {"env": matrix_env(), "train": TINY_TRAIN})
    blobs = {}
    for name, seed in (("a", "1"), ("b", "2"), ("c", "1")):
        out_dir = tmp_path / name
        code, _out, err = run_cli(
            ["train", "--config", cfg, "--out-dir", str(out_dir),
             "--seed", seed], capsys)
        assert code == 0, err
        blobs[name] = (out_dir / "policy.json").read_bytes()
    assert blobs["a"] == blobs["c"]  # same seed, byte-identical
    assert blobs["a"] != blobs["b"]  # different seed, different policy


def test_out_dir_env_variable(tmp_path, capsys, monkeypatch):
    cfg = write_config(tmp_path, {"env": matrix_env(), "train": TINY_TRAIN})
    target = tmp_path / "from_env"
    monkeypatch.setenv("XPLAB_OUT_DIR", str(target))
    monkeypatch.chdir(tmp_path)
    code, _out, err = run_cli(["train", "--config", cfg], capsys)
    assert code == 0, err
    assert (target / "policy.json").exists()


# -- sweep ------------------------------------------------------------------------


SWEEP_SECTIONS = {
    "env": {"kind": "matrix", "payoff": CONVENTIONS_PAYOFF},
    "train": {"iterations": 5, "batch_size": 8},
    "sweep": {"alphas": [0.3, 1.5], "seeds_per_alpha": 2},
}

SWEEP_FILES = (
    "sweep.csv",
    "xp_matrix.csv",
    "xp_matrix.png",
    "block_matrix.csv",
    "block_matrix.png",
    "sp_xp_curve.png",
)


def run_sweep(tmp_path, capsys, out_name, extra_args=()):
    cfg = write_config(tmp_path, SWEEP_SECTIONS)
    out_dir = tmp_path / out_name
    code, out, err = run_cli(
        ["sweep", "--config", cfg, "--out-dir", str(out_dir), *extra_args],
        capsys)
    assert code == 0, err
    return out_dir, out


def test_sweep_writes_all_outputs(tmp_path, capsys):
    out_dir, out = run_sweep(tmp_path, capsys, "out")
    for name in SWEEP_FILES:
        assert (out_dir / name).exists(), name
    for ai in range(2):
        for si in range(2):
            assert (out_dir / "policies" / f"alpha{ai:02d}_seed{si:02d}.json").exists()
    assert "alpha=0.3: greedy sp mean=" in out
    assert "alpha=1.5: greedy sp mean=" in out

    # numbers in the CSVs are plain decimal floats
    block_lines = (out_dir / "block_matrix.csv").read_text().splitlines()
    assert block_lines[1] == "group,alpha=0.3,alpha=1.5,sp_mean"
    for line in block_lines[2:]:
        cells = line.split(",")
        assert cells[0].startswith("alpha=")
        for cell in cells[1:]:
            float(cell)
            assert "np" not in cell


def test_sweep_reruns_are_byte_identical(tmp_path, capsys):
    first, _ = run_sweep(tmp_path, capsys, "one")
    second, _ = run_sweep(tmp_path, capsys, "two")
    for name in SWEEP_FILES:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name
    for path in sorted((first / "policies").glob("*.json")):
        twin = second / "policies" / path.name
        assert path.read_bytes() == twin.read_bytes(), path.name


def test_sweep_worker_processes_match_serial(tmp_path, capsys):
    serial, _ = run_sweep(tmp_path, capsys, "serial")
    pooled, _ = run_sweep(tmp_path, capsys, "pooled", ("--threads", "2"))
    for name in ("sweep.csv", "xp_matrix.csv", "block_matrix.csv"):
        assert (serial / name).read_bytes() == (pooled / name).read_bytes(), name


# -- landscape ---------------------------------------------------------------------


def test_landscape_writes_surface_files(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "env": matrix_env(),
        "landscape": {"alphas": [1.2], "theta1": [-2.0, 2.0, 21],
                      "theta2": [-2.0, 2.0, 21]},
    })
    out_dir = tmp_path / "out"
    code, out, err = run_cli(
        ["landscape", "--config", cfg, "--out-dir", str(out_dir)], capsys)
    assert code == 0, err
    assert (out_dir / "surface_alpha_1.2.csv").exists()
    assert (out_dir / "surface_alpha_1.2.png").exists()
    # strong regularization pins the best grid point onto the symmetric axis
    assert "alpha=1.2: grid argmax at theta1=0, theta2=" in out


# -- report -----------------------------------------------------------------------


def test_report_over_sweep_policies(tmp_path, capsys):
    sweep_dir, _ = run_sweep(tmp_path, capsys, "sweep_out")
    out_dir = tmp_path / "report"
    code, out, err = run_cli(
        ["report", str(sweep_dir / "policies"), "--out-dir", str(out_dir)],
        capsys)
    assert code == 0, err

    lines = (out_dir / "report_sp_xp.csv").read_text().splitlines()
    assert lines[0].startswith(f"# xplab {VERSION} report on ")
    assert "(4 policies)" in lines[0]
    header = lines[1].split(",")
    assert header == ["group", "alpha", "policies", "sp_mean", "xp_within",
                      "team_mean", "team_std", "team_stderr", "team_count"]
    rows = [line.split(",") for line in lines[2:]]
    assert [r[0] for r in rows] == ["alpha=0.3", "alpha=1.5"]
    for row in rows:
        assert row[2] == "2"
        float(row[3])  # sp_mean parses
        float(row[4])  # xp_within parses

    assert (out_dir / "report_matrix.csv").exists()
    assert (out_dir / "report_matrix.png").exists()
    assert (out_dir / "report_blocks.png").exists()
    assert (out_dir / "report_curve.png").exists()  # two alphas, both known


def test_report_single_policy_notes_self_play_only(tmp_path, capsys):
    cfg = write_config(tmp_path, {"env": matrix_env(), "train": TINY_TRAIN})
    train_dir = tmp_path / "train_out"
    code, _out, err = run_cli(
        ["train", "--config", cfg, "--out-dir", str(train_dir)], capsys)
    assert code == 0, err

    policies = tmp_path / "only_one"
    policies.mkdir()
    (policies / "p.json").write_bytes((train_dir / "policy.json").read_bytes())

    out_dir = tmp_path / "report"
    code, out, err = run_cli(
        ["report", str(policies), "--out-dir", str(out_dir)], capsys)
    assert code == 0, err
    assert "reporting self-play only" in out
    text = (out_dir / "report_sp_xp.csv").read_text()
    assert "# note:" in text
    assert not (out_dir / "report_curve.png").exists()  # single group, no curve


def test_report_rejects_mixed_environments(tmp_path, capsys):
    cfg_a = write_config(tmp_path, {"env": matrix_env(), "train": TINY_TRAIN},
                         name="a.json")
    cfg_b = write_config(tmp_path, {"env": {"kind": "cat_dog"},
                                    "train": TINY_TRAIN}, name="b.json")
    mixed = tmp_path / "mixed"
    mixed.mkdir()
    for cfg, stem in ((cfg_a, "first"), (cfg_b, "second")):
        out_dir = tmp_path / f"train_{stem}"
        code, _out, err = run_cli(
            ["train", "--config", cfg, "--out-dir", str(out_dir)], capsys)
        assert code == 0, err
        (mixed / f"{stem}.json").write_bytes((out_dir / "policy.json").read_bytes())

    code, _out, err = run_cli(["report", str(mixed)], capsys)
    assert code == 1
    assert "different environment" in err


def test_report_without_provenance_needs_config(tmp_path, capsys):
    env = make_two_conventions_game()
    policies = tmp_path / "bare"
    policies.mkdir()
    save_payload(policy_payload(random_tabular_policy(env, seed=3)),
                 policies / "bare.json")
    code, _out, err = run_cli(["report", str(policies)], capsys)
    assert code == 2
    assert "no environment provenance" in err

    # supplying an env section via --config unblocks the same directory
    cfg = write_config(tmp_path, {"env": matrix_env()})
    out_dir = tmp_path / "report"
    code, _out, err = run_cli(
        ["report", str(policies), "--config", cfg, "--out-dir", str(out_dir)],
        capsys)
    assert code == 0, err
    assert (out_dir / "report_sp_xp.csv").exists()


def test_report_on_empty_directory_exits_2(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    code, _out, err = run_cli(["report", str(empty)], capsys)
    assert code == 2
    assert "no .json policy files found" in err
