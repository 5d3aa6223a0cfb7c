import io

import numpy as np
import pytest

from saladrl.agents import AgentConfig
from saladrl.cli import build_parser, main, run_config_from_args
from saladrl.harness import HEADER, RunConfig, evaluate, moving_average, play, read_metrics, train
from saladrl.harness.metrics import MetricsRow, MetricsWriter, aggregate
from saladrl.harness.train import fraction_done
from saladrl.saladworld import load_level, walkthrough_text


def tabular_run(tmp_path, name="run", **kw):
    opts = dict(level=1, agent="window", seeds=[3], steps=3000, oracle_gating=True, out=str(tmp_path / name),
                agent_cfg=AgentConfig(eps_anneal_steps=1500))
    opts.update(kw)
    return RunConfig(**opts)


# ------------------------------------------------------------------ metrics


def test_moving_average_examples():
    np.testing.assert_allclose(moving_average([2.5] * 7, 3), 2.5)
    np.testing.assert_array_equal(moving_average([4.0, 1.0, 7.0], 1), [4.0, 1.0, 7.0])
    ramp = moving_average(np.arange(10.0), 3)
    assert ramp[4] == 3.0
    assert ramp[0] == 0.0 and ramp[1] == 0.5  # shorter prefixes use what is there
    with pytest.raises(ValueError):
        moving_average([1.0], 0)


def test_moving_average_by_steps():
    # window counted in training steps: entries at steps 10, 20, 40 with window 20
    out = moving_average([1.0, 0.0, 1.0], 20, steps=[10, 20, 40])
    np.testing.assert_allclose(out, [1.0, 0.5, 1.0])


def test_metrics_writer_rules(tmp_path):
    path = tmp_path / "m.csv"
    with MetricsWriter(path) as w:
        w.write(MetricsRow(5, 0, 10, 0.5, 0.9, 1))
        with pytest.raises(ValueError):
            w.write(MetricsRow(5, 1, 10, 0.5, 0.9, 1))
        with pytest.raises(ValueError):
            w.write(MetricsRow(6, 1, 10, 1.5, 0.9, 1))
    assert path.read_text() == "step,episode,score,fraction,epsilon,seed\n5,0,10,0.500000,0.900000,1\n"


def test_aggregate_two_seeds(tmp_path):
    paths = []
    for seed, frac in [(0, 0.0), (1, 1.0)]:
        p = tmp_path / f"metrics_seed{seed}.csv"
        with MetricsWriter(p) as w:
            for step in (500, 1000, 1500, 2000):
                w.write(MetricsRow(step, step // 500 - 1, 0, frac, 0.1, seed))
        paths.append(p)
    res = aggregate(paths, window=1000, grid=1000)
    np.testing.assert_array_equal(res["step"], [1000, 2000])
    np.testing.assert_allclose(res["mean"], [0.5, 0.5])
    np.testing.assert_allclose(res["std"], [0.5, 0.5])


# ------------------------------------------------------------------- training


def test_zero_budget_run(tmp_path):
    out = train(tabular_run(tmp_path, steps=0))
    m = read_metrics(out / "metrics_seed3.csv")
    assert all(len(v) == 0 for v in m.values())
    assert (out / "metrics_seed3.csv").read_text() == ",".join(HEADER) + "\n"
    assert (out / "config.toml").exists() and (out / "train.log").exists()
    assert RunConfig.load(out / "config.toml") == tabular_run(tmp_path, steps=0)


def test_identical_runs_identical_metrics(tmp_path):
    a = train(tabular_run(tmp_path, "a"))
    b = train(tabular_run(tmp_path, "b", out=str(tmp_path / "b")))
    assert (a / "metrics_seed3.csv").read_bytes() == (b / "metrics_seed3.csv").read_bytes()
    c = train(tabular_run(tmp_path, "c", seeds=[4], out=str(tmp_path / "c")))
    assert (a / "metrics_seed3.csv").read_bytes() != (c / "metrics_seed4.csv").read_bytes()


def test_metrics_invariants(tmp_path):
    out = train(tabular_run(tmp_path, agent="memoryless", oracle_gating=False, steps=5000))
    m = read_metrics(out / "metrics_seed3.csv")
    assert np.all(np.diff(m["step"]) > 0)
    assert np.all((m["fraction"] >= 0) & (m["fraction"] <= 1))
    # fraction is a multiple of 1/2 on level 1 and scores match it
    np.testing.assert_allclose(m["fraction"] * 2, np.round(m["fraction"] * 2))
    # episodes end at the cap of 100 steps or earlier
    assert np.all(np.diff(np.concatenate([[0], m["step"]])) <= 100)
    assert m["step"][-1] == 5000


def test_fraction_done_counts_bits():
    world = load_level(3)
    from saladrl.engine import initial_state
    s = initial_state(world)
    assert fraction_done(world, s) == 0.0
    assert fraction_done(world, s.__class__(**{**{k: getattr(s, k) for k in s.__slots__},
                                               "subtask_done": 0b101})) == pytest.approx(2 / 3)


def test_recurrent_run_is_deterministic(tmp_path):
    cfg = AgentConfig(batch_size=4)
    runs = [train(RunConfig(level=1, agent="recurrent", seeds=[0], steps=120, out=str(tmp_path / n),
                            agent_cfg=cfg)) for n in ("x", "y")]
    assert (runs[0] / "metrics_seed0.csv").read_bytes() == (runs[1] / "metrics_seed0.csv").read_bytes()
    assert (runs[0] / "checkpoint_seed0.zip").exists()


# ----------------------------------------------------------------- evaluation


def test_evaluate_zero_episodes(tmp_path):
    out = train(tabular_run(tmp_path, steps=200))
    summary = evaluate(out / "checkpoint_seed3.zip", episodes=0)
    assert summary.episodes == 0 and summary.mean_fraction is None
    assert summary.lines() == ["episodes: 0"]


def test_evaluate_trained_level1_agent(tmp_path):
    out = train(tabular_run(tmp_path, steps=60_000, agent_cfg=AgentConfig(eps_anneal_steps=30_000)))
    summary = evaluate(out / "checkpoint_seed3.zip", episodes=3)
    assert summary.mean_fraction == 1.0 and summary.mean_score == 15.0


def test_evaluate_level_mismatch(tmp_path):
    out = train(tabular_run(tmp_path, steps=200))
    with pytest.raises(ValueError, match="actions"):
        evaluate(out / "checkpoint_seed3.zip", level=4, episodes=1)


def test_evaluate_random_recurrent_on_level4(tmp_path):
    out = train(RunConfig(level=4, agent="recurrent", seeds=[0], steps=0, out=str(tmp_path / "r4")))
    summary = evaluate(out / "checkpoint_seed0.zip", episodes=1)
    assert summary.mean_fraction <= 0.25


# ----------------------------------------------------------------------- play


def _play(level, lines):
    out = io.StringIO()
    score = play(load_level(level), io.StringIO("".join(l + "\n" for l in lines)), out)
    return score, out.getvalue()


def test_play_walkthrough():
    score, text = _play(1, walkthrough_text(1))
    assert score == 15
    assert "Final score: 15" in text


def test_play_accepts_walkthrough_file_with_comments():
    _, text = _play(2, ["go north", "", "# a comment line", "take blue key   # key first"])
    assert "error" not in text
    assert "You take the blue key." in text


def test_play_bad_command_keeps_state():
    score, text = _play(1, ["xyzzy", "go north", ":quit"])
    assert "error: unknown verb 'xyzzy'" in text
    assert "[reward 0  score 0/15  admissible 1]" in text
    assert score == 0


def test_play_oracle():
    _, text = _play(1, [":oracle", ":quit"])
    assert "admissible: go north" in text


# ------------------------------------------------------------------------ CLI


def test_cli_flags_override_config(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(RunConfig(level=2, steps=10, agent="li").dumps())
    args = build_parser().parse_args(["train", "--config", str(cfg), "--level", "3", "--agent", "window",
                                      "--gating", "masking", "--mask-threshold", "0.01", "--heads", "1",
                                      "--seed", "4", "--seed", "5", "--steps", "77", "--oracle-gating",
                                      "--out", "somewhere"])
    run = run_config_from_args(args)
    assert (run.level, run.agent, run.seeds, run.steps, run.oracle_gating, run.out) == (
        3, "window", [4, 5], 77, True, "somewhere")
    assert (run.agent_cfg.gating, run.agent_cfg.mask_threshold, run.agent_cfg.heads) == ("masking", 0.01, 1)


def test_cli_train_aggregate_evaluate(tmp_path, capsys):
    out = tmp_path / "cli"
    assert main(["train", "--level", "1", "--agent", "window", "--seed", "0", "--seed", "1", "--steps", "2000",
                 "--oracle-gating", "--out", str(out)]) == 0
    assert main(["aggregate", str(out), "--window", "500", "--grid", "500"]) == 0
    lines = (out / "aggregate.csv").read_text().splitlines()
    assert lines[0] == "step,mean_fraction,std_fraction,n_seeds"
    assert lines[-1].startswith("2000,") and lines[-1].endswith(",2")
    assert main(["evaluate", str(out / "checkpoint_seed0.zip"), "--episodes", "2"]) == 0
    assert "episodes: 2" in capsys.readouterr().out


def test_cli_errors_exit_nonzero(tmp_path, capsys):
    assert main(["train", "--level", str(tmp_path / "missing.toml"), "--agent", "window", "--steps", "10",
                 "--out", str(tmp_path / "x")]) == 2
    assert main(["aggregate", str(tmp_path)]) == 2
    assert "error:" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["train", "--agent", "telepathic"])
