import json
import pytest

from assm_anomaly.cli import main
from assm_anomaly.io import load_checkpoint

TINY_RUN = """\
generate:
  n_train: 8
  n_test: 4
  seq_len: 30
  spike_prob: 0.1
model:
  state_dim: 4
train:
  epochs: 2
  batch_size: 4
eval:
  horizon: 10
"""


def _json_lines(text: str) -> list[dict]:
    out = []
    for line in text.splitlines():
        try:
            obj = json.loads(line)
        except ValueError:
            continue
        if isinstance(obj, dict):
            out.append(obj)
    return out


@pytest.fixture
def run_config(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(TINY_RUN)
    return path


def _pipeline(workdir, run_config, fmt="csv"):
    data = workdir / f"data.{fmt}"
    ckpt = workdir / "model.ckpt"
    report = workdir / "eval.json"
    common = ["--seed", "5", "--config", str(run_config), "-q"]
    assert main(["generate", "--out", str(data), *common]) == 0
    assert main(["train", "--data", str(data), "--checkpoint", str(ckpt), "--out", str(workdir / "train.json"), *common]) == 0
    assert main(["eval", "--data", str(data), "--checkpoint", str(ckpt), "--out", str(report), *common]) == 0
    return data, ckpt, report


def test_pipeline_is_byte_reproducible(tmp_path, run_config):
    first, second = tmp_path / "a", tmp_path / "b"
    first.mkdir()
    second.mkdir()
    outputs_a = _pipeline(first, run_config)
    outputs_b = _pipeline(second, run_config)
    for a, b in zip(outputs_a, outputs_b):
        assert a.read_bytes() == b.read_bytes()
    assert (first / "train.json").read_bytes() == (second / "train.json").read_bytes()


def test_pipeline_reports(tmp_path, run_config):
    _, ckpt, report = _pipeline(tmp_path, run_config, fmt="ndjson")
    methods = json.loads(report.read_text())["methods"]
    assert set(methods) == {"assm", "kf"}
    for result in methods.values():
        assert 0.0 <= result["f1"] <= 1.0
        assert result["detected_events"] + result["missed_events"] > 0
    checkpoint = load_checkpoint(ckpt)
    assert checkpoint.config.state_dim == 4
    assert checkpoint.metadata["epochs"] == 2


def test_seed_changes_generated_data(tmp_path, run_config):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["generate", "--out", str(a), "--seed", "1", "--config", str(run_config)]) == 0
    assert main(["generate", "--out", str(b), "--seed", "2", "--config", str(run_config)]) == 0
    assert a.read_bytes() != b.read_bytes()


def test_flags_override_config_file(tmp_path, run_config):
    out = tmp_path / "data.csv"
    assert main(["generate", "--out", str(out), "--n-train", "2", "--n-test", "1", "--seq-len", "5", "--config", str(run_config)]) == 0
    assert len(out.read_text().splitlines()) == 1 + 3 * 5


def test_stream_verb_skips_non_finite_samples(tmp_path, run_config, capsys):
    _, ckpt, _ = _pipeline(tmp_path, run_config)
    samples = tmp_path / "samples.ndjson"
    samples.write_text(
        '{"t": 0, "x": [0.1]}\n'
        '{"t": 1, "x": [NaN]}\n'
        '{"t": 2, "x": [5.0], "y": 1}\n'
    )
    capsys.readouterr()
    assert main(["stream", "--checkpoint", str(ckpt), "--input", str(samples), "--threshold", "-1", "-q"]) == 0
    verdicts = [v for v in _json_lines(capsys.readouterr().out) if "score" in v]
    assert [v["t"] for v in verdicts] == [0, 2]
    assert all(v["is_anomaly"] for v in verdicts)


def test_bench_verb(tmp_path, capsys):
    out = tmp_path / "bench.json"
    assert main(["bench", "--n", "10000", "--state-dim", "4", "--out", str(out), "-q"]) == 0
    report = json.loads(out.read_text())
    assert report["n"] == 10_000
    assert report["throughput"]["samples"] == 10_000


def test_bench_rejects_small_runs():
    assert main(["bench", "--n", "100", "-q"]) == 2


def test_plot_verb(tmp_path, run_config):
    data, ckpt, _ = _pipeline(tmp_path, run_config)
    assert main(["plot", "--data", str(data), "--checkpoint", str(ckpt), "--out", str(tmp_path / "trace.svg"), "--index", "1", "-q"]) == 0
    assert (tmp_path / "trace.svg").exists()
    assert (tmp_path / "trace.csv").exists()
    assert main(["plot", "--data", str(data), "--checkpoint", str(ckpt), "--out", str(tmp_path / "x.svg"), "--index", "99", "-q"]) == 2


def test_validation_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("split,seq_id,t,x_0,y\ntrain,0,0,0.5,3\n")
    assert main(["train", "--data", str(bad), "--checkpoint", str(tmp_path / "m.ckpt"), "-q"]) == 2
    unknown = tmp_path / "unknown.yaml"
    unknown.write_text("model:\n  layers: 3\n")
    data = tmp_path / "ok.csv"
    data.write_text("split,seq_id,t,x_0,y\ntrain,0,0,0.5,0\ntrain,0,1,0.4,1\n")
    assert main(["train", "--data", str(data), "--checkpoint", str(tmp_path / "m.ckpt"), "--config", str(unknown), "-q"]) == 2
    assert main(["generate", "--out", str(tmp_path / "g.csv"), "--seed", "-1", "-q"]) == 2


def test_divergence_exits_3(tmp_path):
    data = tmp_path / "huge.csv"
    data.write_text("split,seq_id,t,x_0,y\ntrain,0,0,1e200,0\ntrain,0,1,1e200,1\ntrain,0,2,1e200,0\n")
    assert main(["train", "--data", str(data), "--checkpoint", str(tmp_path / "m.ckpt"), "--epochs", "1", "-q"]) == 3


def test_io_errors_exit_4(tmp_path, run_config):
    missing = tmp_path / "missing.csv"
    assert main(["train", "--data", str(missing), "--checkpoint", str(tmp_path / "m.ckpt"), "-q"]) == 4
    data = tmp_path / "data.csv"
    assert main(["generate", "--out", str(data), "--config", str(run_config), "-q"]) == 0
    corrupt = tmp_path / "corrupt.ckpt"
    corrupt.write_bytes(b"ASSMCKPT" + b"\x00" * 10)
    assert main(["eval", "--data", str(data), "--checkpoint", str(corrupt), "-q"]) == 4


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
