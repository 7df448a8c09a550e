import json
import os

import pytest

from kgalign.cli import main
from kgalign.config import RunConfig, from_mapping, load_config, render_config
from kgalign.errors import ConfigError


def run(args):
    return main(args)


@pytest.fixture
def synth_dir(tmp_path):
    out = str(tmp_path / "data")
    assert run(["gen-synth", "--out", out, "--n", "30", "--avg-degree", "4",
                "--noise", "0.05", "--seed", "3"]) == 0
    return out


def small_config_file(tmp_path, data_dir, out_dir, **extra):
    lines = {
        "data_dir": data_dir, "out_dir": out_dir, "rng_seed": 3,
        "d": 12, "h": 12, "epochs": 20, "lr": 0.02,
        "epochs_semantic": 20, "h_m": 8, "text_dim": 16, "pool_size": 10,
    }
    lines.update(extra)
    path = tmp_path / "run.conf"
    with open(path, "w") as fh:
        fh.writelines(f"{k} = {v}\n" for k, v in lines.items())
    return str(path)


def test_config_round_trip(tmp_path):
    config = RunConfig(data_dir="x", rng_seed=7, tau=0.25, epochs=12,
                       fusion_mode="concat", deterministic=True)
    rendered = render_config(config)
    path = tmp_path / "c.conf"
    path.write_text(rendered)
    reparsed = load_config(str(path))
    assert reparsed == config


def test_config_unknown_key_rejected(tmp_path):
    path = tmp_path / "c.conf"
    path.write_text("learning_rate = 0.1\n")
    with pytest.raises(ConfigError, match="unknown config key"):
        load_config(str(path))


def test_config_bad_value_types():
    with pytest.raises(ConfigError):
        from_mapping({"epochs": "twelve"})
    with pytest.raises(ConfigError):
        from_mapping({"deterministic": "maybe"})


def test_config_duplicate_key(tmp_path):
    path = tmp_path / "c.conf"
    path.write_text("epochs = 1\nepochs = 2\n")
    with pytest.raises(ConfigError, match="duplicate"):
        load_config(str(path))


def test_config_comments_and_blanks(tmp_path):
    path = tmp_path / "c.conf"
    path.write_text("# a comment\n\nepochs = 5  # trailing\n")
    assert load_config(str(path)).epochs == 5


def test_gen_synth_rejects_bad_spec(tmp_path, capsys):
    code = run(["gen-synth", "--out", str(tmp_path / "x"), "--n", "5"])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_ingest_writes_report(synth_dir, tmp_path):
    out = str(tmp_path / "run")
    assert run(["ingest", "--data", synth_dir, "--out", out, "--seed", "3"]) == 0
    payload = json.load(open(os.path.join(out, "reports", "ingest.json")))
    assert payload["graph_1"]["n_entities"] == 30
    assert payload["n_train_seeds"] + payload["n_test_seeds"] == 30


def test_eval_without_checkpoint_fails(synth_dir, tmp_path, capsys):
    out = str(tmp_path / "run")
    code = run(["eval", "--data", synth_dir, "--out", out, "--tau", "1"])
    assert code == 2
    assert "checkpoint not found" in capsys.readouterr().err


def test_full_pipeline_writes_reports(synth_dir, tmp_path):
    config = small_config_file(tmp_path, synth_dir, str(tmp_path / "run"))
    assert run(["train-struct", "--config", config]) == 0
    assert run(["train-sem", "--config", config]) == 0
    assert run(["align", "--config", config, "--tau", "1"]) == 0
    assert run(["eval", "--config", config, "--tau", "0,0.5,1"]) == 0

    reports = os.path.join(tmp_path, "run", "reports")
    metrics = json.load(open(os.path.join(reports, "metrics.json")))
    assert [row["tau"] for row in metrics["rows"]] == [0.0, 0.5, 1.0]
    for row in metrics["rows"]:
        assert 0.0 <= row["metrics"]["hits@1"] <= 1.0
    for name in ("loss_curve.tsv", "loss_curve.png", "candidates.tsv",
                 "hits.png", "tau_sweep.png", "train_struct.json"):
        assert os.path.exists(os.path.join(reports, name)), name
    log = open(os.path.join(tmp_path, "run", "logs", "run.log")).read()
    assert "train-struct finished" in log


def test_candidates_tsv_format(synth_dir, tmp_path):
    config = small_config_file(tmp_path, synth_dir, str(tmp_path / "run"))
    assert run(["train-struct", "--config", config]) == 0
    assert run(["align", "--config", config, "--tau", "1"]) == 0
    path = os.path.join(tmp_path, "run", "reports", "candidates.tsv")
    lines = open(path).read().splitlines()
    assert lines[0] == "source\trank\ttarget\tscore"
    first = lines[1].split("\t")
    assert first[0].startswith("a") and first[2].startswith("b")
    assert int(first[1]) == 1


def test_eval_metrics_echo_reparses(synth_dir, tmp_path):
    config = small_config_file(tmp_path, synth_dir, str(tmp_path / "run"))
    assert run(["train-struct", "--config", config]) == 0
    assert run(["eval", "--config", config, "--tau", "1"]) == 0
    payload = json.load(open(os.path.join(tmp_path, "run", "reports",
                                          "metrics.json")))
    echoed = from_mapping(payload["config"])
    echoed.validate()
    assert echoed.data_dir == synth_dir


def test_checkpoint_header_mismatch_detected(synth_dir, tmp_path, capsys):
    config = small_config_file(tmp_path, synth_dir, str(tmp_path / "run"))
    assert run(["train-struct", "--config", config]) == 0
    code = run(["eval", "--config", config, "--tau", "1", "--metric", "l2"])
    assert code == 2
    assert "metric" in capsys.readouterr().err


def test_grad_check_cli(capsys):
    assert run(["grad-check", "--seed", "5"]) == 0
    out = capsys.readouterr().out
    assert "max relative error" in out
    assert "detected" in out


def test_train_sem_needs_descriptions_or_files(tmp_path, capsys):
    # Dataset without description files and no configured embeddings.
    from conftest import write_tsv
    d = tmp_path / "bare"
    d.mkdir()
    write_tsv(d / "rel_triples_1.tsv", [("a", "r", "b")])
    write_tsv(d / "rel_triples_2.tsv", [("x", "r", "y")])
    write_tsv(d / "seeds.tsv", [("a", "x"), ("b", "y")])
    code = run(["train-sem", "--data", str(d), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "descriptions" in capsys.readouterr().err


def test_end_to_end_determinism(synth_dir, tmp_path):
    out1, out2 = str(tmp_path / "r1"), str(tmp_path / "r2")
    c1 = small_config_file(tmp_path, synth_dir, out1)
    assert run(["train-struct", "--config", c1]) == 0
    assert run(["eval", "--config", c1, "--tau", "1"]) == 0
    c2 = small_config_file(tmp_path, synth_dir, out2)
    assert run(["train-struct", "--config", c2]) == 0
    assert run(["eval", "--config", c2, "--tau", "1"]) == 0

    m1 = open(os.path.join(out1, "reports", "metrics.json")).read()
    m2 = open(os.path.join(out2, "reports", "metrics.json")).read()
    # Reports differ only in the echoed out_dir; normalize it away.
    assert m1.replace("r1", "rX") == m2.replace("r2", "rX")
    b1 = open(os.path.join(out1, "checkpoints", "structural.ckpt"), "rb").read()
    b2 = open(os.path.join(out2, "checkpoints", "structural.ckpt"), "rb").read()
    assert b1 == b2
