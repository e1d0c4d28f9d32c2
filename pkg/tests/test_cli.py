"""Tests for the train, eval, pbt and report CLI handlers."""

import pytest

from mtpopart.experiment.eval_cmd import run_eval_command
from mtpopart.experiment.pbt_cmd import run_pbt_command
from mtpopart.experiment.report_cmd import run_report_command
from mtpopart.main import main
from mtpopart.runtime.train_cmd import run_train_command
from mtpopart.storage import read_csv_dicts

TINY = ["--suite", "pair2", "--synchronous", "--set", "hidden=4", "--set", "actors=2", "--set", "unroll_length=5"]


def _exit_code(fn, argv):
    with pytest.raises(SystemExit) as exc_info:
        fn(argv)
    return exc_info.value.code


def _train(name, frames=0, *extra):
    run_train_command([*TINY, "--frames", str(frames), "--out", f"runs/{name}", "--set", "eval_episodes=0", *extra])


# --- main ---


def test_help_lists_commands(capsys):
    main([])

    out = capsys.readouterr().out
    for cmd in ("train", "eval", "pbt", "report"):
        assert f"mtpopart {cmd}" in out


def test_unknown_command_exits_2(capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(["fly"])

    assert exc_info.value.code == 2
    assert "unknown command 'fly'" in capsys.readouterr().err


# --- train ---


def test_train_zero_frames_writes_run(out_dir, capsys):
    _train("a")

    run = out_dir / "runs" / "a"
    assert (run / "final.ckpt").exists()
    assert "hidden = 4" in (run / "config.txt").read_text()
    assert f"wrote {run}" in capsys.readouterr().out


def test_train_then_score(out_dir, capsys):
    run_train_command(
        [*TINY, "--frames", "20", "--out", "runs/b", "--set", "eval_episodes=3", "--set", "oracle_episodes=10"]
    )

    run = out_dir / "runs" / "b"
    assert len(read_csv_dicts(run / "breakdown.csv")) == 2
    (result,) = read_csv_dicts(run / "results.csv")
    assert (result["variant"], result["suite"]) == ("popart", "pair2")
    assert (run / "oracles.csv").exists()
    assert "median normalized" in capsys.readouterr().out


def test_unscorable_suite_reported(out_dir, capsys):
    run_train_command(
        ["--suite", "probe3", "--synchronous", "--frames", "0", "--out", "runs/p"]
        + ["--set", "eval_episodes=2", "--set", "hidden=4"]
    )

    assert "not scored" in capsys.readouterr().out


def test_unknown_variant_exits_2(out_dir):
    assert _exit_code(run_train_command, ["--variant", "fancy"]) == 2


def test_bad_set_pair_exits_2(out_dir, capsys):
    assert _exit_code(run_train_command, ["--set", "frames"]) == 2
    assert _exit_code(run_train_command, ["--set", "batch_size=0"]) == 2
    assert "batch_size" in capsys.readouterr().err


def test_unknown_set_key_lists_valid_keys(out_dir, capsys):
    assert _exit_code(run_train_command, ["--set", "colour=red"]) == 2

    err = capsys.readouterr().err
    assert "unknown key: colour" in err
    assert "learning_rate" in err


def test_show_config_prints_without_training(out_dir, capsys):
    run_train_command(["--suite", "pair2", "--frames", "7", "--out", "runs/s", "--show-config"])

    lines = capsys.readouterr().out.splitlines()
    assert "frames: 7" in lines
    assert "suite: pair2" in lines
    assert "hidden: 64 (default)" in lines
    assert not (out_dir / "runs" / "s").exists()


def test_pbt_show_config(out_dir, capsys):
    run_pbt_command([*TINY, "--show-config"])

    assert "unroll_length: 5" in capsys.readouterr().out.splitlines()


def test_unknown_suite_exits_2(out_dir):
    assert _exit_code(run_train_command, ["--suite", "nowhere"]) == 2


def test_missing_config_file_exits_1(out_dir, tmp_path):
    assert _exit_code(run_train_command, ["--config", str(tmp_path / "missing.txt")]) == 1


def test_config_file_then_flags(out_dir, tmp_path):
    cfg = tmp_path / "run.txt"
    cfg.write_text("suite = pair2\nframes = 999\nhidden = 4\neval_episodes = 0\nsynchronous = on\n")

    run_train_command(["--config", str(cfg), "--frames", "0", "--out", "runs/c"])

    assert "frames = 0" in (out_dir / "runs" / "c" / "config.txt").read_text()


# --- eval ---


def test_eval_scores_checkpoint(out_dir, capsys):
    _train("e")
    ckpt = out_dir / "runs" / "e" / "final.ckpt"

    run_eval_command([str(ckpt), "--suite", "pair2", "--episodes", "4", "--oracle-episodes", "10"])

    out = capsys.readouterr().out
    assert "median normalized" in out
    assert len(read_csv_dicts(ckpt.with_name("breakdown.csv"))) == 2


def test_eval_missing_checkpoint_exits_1(out_dir):
    assert _exit_code(run_eval_command, [str(out_dir / "none.ckpt"), "--suite", "pair2"]) == 1


def test_eval_malformed_checkpoint_exits_2(out_dir):
    bad = out_dir / "bad.ckpt"
    bad.write_text("garbage\n")

    assert _exit_code(run_eval_command, [str(bad), "--suite", "pair2"]) == 2


def test_eval_zero_episodes_exits_2(out_dir):
    _train("z")

    assert _exit_code(run_eval_command, [str(out_dir / "runs" / "z" / "final.ckpt"), "--episodes", "0"]) == 2


def test_eval_suite_mismatch_exits_2(out_dir, capsys):
    _train("m")

    # default suite is scale6; the checkpoint was trained on pair2
    assert _exit_code(run_eval_command, [str(out_dir / "runs" / "m" / "final.ckpt")]) == 2
    assert "observations" in capsys.readouterr().err


# --- pbt ---


def test_pbt_needs_two_members(out_dir):
    assert _exit_code(run_pbt_command, [*TINY, "--population", "1"]) == 2


def test_pbt_records_every_member_every_interval(out_dir, capsys):
    run_pbt_command(
        [
            *TINY,
            "--frames",
            "20",
            "--out",
            "runs/pbt",
            "--population",
            "4",
            "--intervals",
            "2",
            "--set",
            "batch_size=2",
            "--set",
            "eval_episodes=2",
            "--set",
            "oracle_episodes=10",
        ]
    )

    rows = read_csv_dicts(out_dir / "runs" / "pbt" / "fitness.csv")
    assert len(rows) == 4 * 3
    assert [int(r["interval"]) for r in rows] == [0] * 4 + [1] * 4 + [2] * 4
    assert {r["parent_id"] for r in rows[:8]} == {""}
    assert sum(r["parent_id"] != "" for r in rows[8:]) == 1
    assert (out_dir / "runs" / "pbt" / "member-3" / "interval-2" / "final.ckpt").exists()
    assert "wrote" in capsys.readouterr().out


# --- report ---


def test_report_groups_results(out_dir, capsys):
    for name in ("r1", "r2"):
        run_train_command(
            [*TINY, "--frames", "0", "--out", f"runs/{name}", "--set", "eval_episodes=2", "--set", "oracle_episodes=5"]
        )
    capsys.readouterr()

    run_report_command([str(out_dir / "runs")])

    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2
    assert lines[1].split()[:3] == ["popart", "pair2", "2"]


def test_report_without_results(out_dir, capsys):
    run_report_command([])

    assert "no results under" in capsys.readouterr().out


def test_report_missing_directory_exits_1(out_dir):
    assert _exit_code(run_report_command, [str(out_dir / "nope")]) == 1
