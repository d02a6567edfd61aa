import numpy as np # type: ignore
import pytest

from event_kinds import EventKind
from exceptions import DomainError
from render_functions import emit_plot
from simulation_log import LogRecorder

def _log():
    recorder = LogRecorder(2)
    for i, t in enumerate(np.linspace(0.0, 1.0, 11)):
        kinds = [EventKind.SAMPLE] if i % 3 == 0 else []
        recorder.record(t, [np.exp(-t), -t], [0.0, 0.0], 0.0, -1.0, [0.0, 0.0], 0.0, kinds)
    return recorder.to_log(name = "decay")

def test_plot_is_written_as_svg(tmp_path):
    path = tmp_path / "plot.svg"
    emit_plot(_log(), str(path), columns = ("x1", "x2", "u"), mark_samples = True)
    text = path.read_text()
    assert "<svg" in text

def test_plot_rejects_unknown_columns_and_empty_logs(tmp_path):
    with pytest.raises(DomainError):
        emit_plot(_log(), str(tmp_path / "bad.svg"), columns = ("x7",))
    with pytest.raises(DomainError):
        emit_plot(LogRecorder(2).to_log(), str(tmp_path / "empty.svg"))
    with pytest.raises(DomainError):
        emit_plot(_log(), str(tmp_path / "none.svg"), columns = ())
