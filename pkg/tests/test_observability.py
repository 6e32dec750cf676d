import json
import logging

from src import observability, settings


def test_write_metrics_needs_a_target(monkeypatch):
    monkeypatch.setattr(settings, "METRICS_FILE", None)
    assert observability.write_metrics() is None


def test_write_metrics_textfile(tmp_path):
    observability.TRAIN_STEPS.inc()
    path = observability.write_metrics(tmp_path / "metrics.prom")
    text = path.read_text()
    assert "train_steps_total" in text
    assert "train_step_seconds_bucket" in text


def test_json_log_lines(capsys):
    root = logging.getLogger()
    saved = root.handlers[:]
    root.handlers = []
    try:
        observability.configure_logging("INFO")
        logging.getLogger("src.test").info("hello", extra={"iteration": 3})
        line = capsys.readouterr().err.strip().splitlines()[-1]
        record = json.loads(line)
        assert record["message"] == "hello" and record["iteration"] == 3
        assert record["levelname"] == "INFO"
    finally:
        root.handlers = saved
