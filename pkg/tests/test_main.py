import math

import pytest

import scenario_factories
from loader_functions.data_loaders import save_scenario
from main import build_parser, cmd_saturated_chain, main

def _scenario_file(tmp_path, scenario):
    path = str(tmp_path / f"{scenario.name}.json")
    save_scenario(scenario, path)
    return path

def test_parser_defaults():
    args = build_parser().parse_args(["deadbeat-demo"])
    assert args.period == 0.5
    assert args.steps == 12
    assert args.gain_scale == 1.0
    args = build_parser().parse_args(["--horizon", "3", "saturated-chain", "--columns", "x1,u"])
    assert args.horizon == 3.0
    assert args.columns == ["x1", "u"]

def test_parser_rejects_bad_numbers():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["predict", "s.json", "--state", "1,a", "--history", "0"])

def test_predict_prints_the_one_step_prediction(tmp_path, capsys):
    path = _scenario_file(tmp_path, scenario_factories.saturated_chain)
    main(["predict", path, "--state", "1,1", "--history", "0"])
    values = [float(v) for v in capsys.readouterr().out.split()]
    assert values[0] == pytest.approx(0.5 * (3.0 + 1.0 / math.sqrt(2.0)), abs = 1e-12)
    assert values[1] == pytest.approx(1.0, abs = 1e-12)

def test_lti_predict_with_zero_history(tmp_path, capsys):
    path = _scenario_file(tmp_path, scenario_factories.double_integrator_lti)
    main(["predict", path, "--state", "1,2", "--history", "0,0"])
    values = [float(v) for v in capsys.readouterr().out.split()]
    assert values == pytest.approx([2.0, 2.0])

def test_deadbeat_demo_reports_settling(tmp_path, capsys):
    csv_path = tmp_path / "deadbeat.csv"
    main(["deadbeat-demo", "--steps", "8", "--csv", str(csv_path)])
    out = capsys.readouterr().out
    assert "settle time 2.125" in out
    assert csv_path.exists()

def test_gains_check_on_lti_scenario(tmp_path, capsys):
    path = _scenario_file(tmp_path, scenario_factories.double_integrator_lti)
    main(["gains-check", path])
    out = capsys.readouterr().out
    assert "A + Bk' Hurwitz: True" in out
    assert "A + pc' Hurwitz: True" in out

def test_missing_file_quits_with_an_error(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        main(["run", str(tmp_path / "missing.json")])
    assert excinfo.value.code not in (0, None)

def test_run_writes_csv_and_svg(tmp_path, capsys):
    path = _scenario_file(tmp_path, scenario_factories.saturated_chain.replace(step = 0.005))
    csv_path, svg_path = tmp_path / "run.csv", tmp_path / "run.svg"
    main(["--horizon", "0.2", "run", path, "--csv", str(csv_path), "--svg", str(svg_path)])
    assert "rows" in capsys.readouterr().out
    assert csv_path.read_text().startswith("t,x1,x2")
    assert "<svg" in svg_path.read_text()

@pytest.mark.parametrize("command", ["section5", "saturated-chain"])
def test_worked_example_command_and_alias(tmp_path, capsys, command):
    args = build_parser().parse_args([command])
    assert args.func is cmd_saturated_chain
    csv_path = tmp_path / "worked.csv"
    main(["--horizon", "0.1", command, "--csv", str(csv_path)])
    assert "rows" in capsys.readouterr().out
    assert csv_path.read_text().startswith("t,x1,x2")

def test_gains_check_reports_the_feedforward_decay(tmp_path, capsys):
    path = _scenario_file(tmp_path, scenario_factories.feedforward_one_output)
    main(["gains-check", path])
    out = capsys.readouterr().out
    assert "feedforward input bound 0.1 (eps = 0.1)" in out
    assert "linearized decay over 50 periods" in out
