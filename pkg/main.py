#!/usr/bin/env python3
import argparse
import logging
import sys
from typing import List, Optional

import numpy as np # type: ignore

import exceptions
import scenario_factories
from approx_predictor import PredictorConfig, calibrate_K, phi_lm
from controller_kinds import ControllerKind, OutputCase, PlantKind
from engine import run_closed_loop
from exact_predictor import FeedforwardGains, local_decay, predict_ff
from gains import GainCertificate, check_theorem32, find_sector_certificate, is_hurwitz, solve_observer_lyapunov
from loader_functions.data_loaders import load_scenario
from loader_functions.initialize_scenario import get_constants
from loader_functions.plant_init import build_plant
from lti import deadbeat_demo, deadbeat_settle_time, lti_predict
from plants import double_integrator
from render_functions import emit_plot
from signals import PiecewiseConstantSignal, history_window
from simulation_log import emit_csv

logger = logging.getLogger(__name__)

def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None

def _with_overrides(scenario, args):
    changes = {}
    if args.horizon is not None:
        changes["horizon"] = args.horizon
    if args.seed is not None:
        changes["seed"] = args.seed
    return scenario.replace(**changes) if changes else scenario

def _emit(log, args, default_columns) -> None:
    if args.csv:
        emit_csv(log, args.csv)
    if args.svg:
        emit_plot(log, args.svg, args.columns or default_columns)

def _print_log_summary(log) -> None:
    print(f"{log.name}: {log.rows} rows, t in [{log.t[0]:g}, {log.t[-1]:g}]")
    print(f"terminal state {np.array2string(log.terminal_state(), precision = 6)}")
    print(f"peak sup norm {log.sup_norm():.6g}, over the last quarter {log.sup_norm(0.75 * log.t[-1]):.6g}")
    text = log.message_log.render()
    if text:
        print(text)

def cmd_run(args) -> None:
    scenario = _with_overrides(load_scenario(args.config), args)
    log = run_closed_loop(scenario)
    _print_log_summary(log)
    _emit(log, args, [f"x{i}" for i in range(1, log.n + 1)] + ["u"])

def cmd_saturated_chain(args) -> None:
    scenario = _with_overrides(scenario_factories.saturated_chain, args)
    log = run_closed_loop(scenario)
    _print_log_summary(log)
    _emit(log, args, ["x1", "x2"])

def cmd_gains_check(args) -> None:
    scenario = load_scenario(args.config)
    plant = build_plant(scenario.plant, scenario.r, scenario.tau, scenario.T2)
    rng = np.random.default_rng(scenario.seed if args.seed is None else args.seed)

    if scenario.plant_kind is PlantKind.FEEDFORWARD:
        gains = FeedforwardGains(**scenario.ff_gains)
        bound = f" (eps = {plant.eps:g})" if scenario.output_case is OutputCase.ONE_OUTPUT else ""
        print(f"feedforward input bound {gains.input_bound:g}{bound}")
        print(f"linearized decay over 50 periods {local_decay(gains, scenario.T2, 50):.6g}")
        return
    if scenario.plant_kind is PlantKind.LTI:
        closed = plant.A + np.outer(plant.B, scenario.k)
        observer = plant.A + np.outer(scenario.p, plant.c)
        print(f"A + Bk' Hurwitz: {is_hurwitz(closed)}")
        print(f"A + pc' Hurwitz: {is_hurwitz(observer)}")
        return

    feedback = find_sector_certificate(scenario.k, plant, checks = args.checks, rng = rng)
    status = "ok" if feedback.passed else "FAIL"
    print(f"sector inequality worst margin {feedback.certification.worst_margin:+.6g} over {feedback.certification.checks} points {status}")
    if not feedback.passed:
        raise exceptions.QuitWithError("no feedback certificate for this k")

    cfg = PredictorConfig.for_plant(plant, scenario.l, scenario.m, scenario.N)
    K = scenario.K_hat
    if K is None:
        K = 0.0 if cfg.bound_vacuous else calibrate_K(cfg, plant, args.samples, rng)
    Q = solve_observer_lyapunov(plant.A, np.asarray(scenario.p), plant.c, 1.0)
    cert = GainCertificate(
        P = feedback.P, Q = Q, k = np.asarray(scenario.k), p = np.asarray(scenario.p),
        mu = feedback.mu, gamma = feedback.gamma, q = 1.0, theta = scenario.theta,
        T1 = scenario.T1, T2 = scenario.T2, l = scenario.l, m = scenario.m, K = K,
    )
    for line in check_theorem32(cert, plant).lines():
        print(line)

def cmd_calibrate_k(args) -> None:
    scenario = load_scenario(args.config)
    plant = build_plant(scenario.plant, scenario.r, scenario.tau, scenario.T2)
    if scenario.plant_kind is not PlantKind.STRICT_FEEDBACK:
        raise exceptions.QuitWithError("calibrate-k needs a strict-feedback plant")
    cfg = PredictorConfig.for_plant(plant, scenario.l, scenario.m, scenario.N)
    rng = np.random.default_rng(scenario.seed if args.seed is None else args.seed)
    K = calibrate_K(cfg, plant, args.samples, rng)
    print(f"K = {K!r} (l = {cfg.l}, m = {cfg.m}, rho = {cfg.rho:.6g}, {args.samples} samples)")

def cmd_predict(args) -> None:
    scenario = load_scenario(args.config)
    plant = build_plant(scenario.plant, scenario.r, scenario.tau, scenario.T2)
    state = np.asarray(args.state, dtype = float)
    values = args.history
    lag = plant.delta if scenario.plant_kind is PlantKind.FEEDFORWARD else plant.lag
    starts = -lag + lag * np.arange(len(values)) / len(values)
    u = PiecewiseConstantSignal(starts, values, 0.0)

    if scenario.controller_kind is ControllerKind.EXACT_FF:
        result = predict_ff(state, values[-1], plant.delta)
    elif scenario.controller_kind is ControllerKind.LTI_EXACT:
        result = lti_predict(state, history_window(u, 0.0, lag, closed = False), plant.A, plant.B)
    else:
        cfg = PredictorConfig.for_plant(plant, scenario.l, scenario.m, scenario.N)
        result = phi_lm(state, history_window(u, 0.0, lag, closed = False), cfg, plant)
    print(" ".join(repr(float(v)) for v in result))

def cmd_deadbeat_demo(args) -> None:
    plant = double_integrator()
    T = args.period
    log = deadbeat_demo(plant.A, plant.B, T, args.steps, x0 = np.array([1.0, -0.5]), gain_scale = args.gain_scale)
    settle = deadbeat_settle_time(plant.n, T, log.tau)
    late = log.state_norm()[log.t >= settle - 1e-12]
    print(f"dead-beat settle time {settle:g} s, max |x| afterwards {late.max() if late.size else float('nan'):.3g}")
    _emit(log, args, ["x1", "x2", "u"])

def build_parser() -> argparse.ArgumentParser:
    constants = get_constants()
    parser = argparse.ArgumentParser(description = "Predictor-based output feedback for delayed sampled-data loops")
    parser.add_argument("--verbose", "-v", action = "store_true", help = "debug logging")
    parser.add_argument("--horizon", type = float, help = "override the simulated time span")
    parser.add_argument("--seed", type = int, help = "override the random seed")
    sub = parser.add_subparsers(dest = "command", required = True)

    def outputs(p):
        p.add_argument("--csv", help = "write the log as CSV")
        p.add_argument("--svg", help = "write a plot as SVG")
        p.add_argument("--columns", type = lambda s: s.split(","), help = "columns to plot, e.g. x1,x2,u")

    p = sub.add_parser("run", help = "simulate a scenario file")
    p.add_argument("config")
    outputs(p)
    p.set_defaults(func = cmd_run)

    p = sub.add_parser(
        "section5", aliases = ["saturated-chain"], help = "simulate the builtin saturating quadratic example",
    )
    outputs(p)
    p.set_defaults(func = cmd_saturated_chain)

    p = sub.add_parser("gains-check", help = "report the sufficient stability conditions")
    p.add_argument("config")
    p.add_argument("--checks", type = int, default = 2000)
    p.add_argument("--samples", type = int, default = 200)
    p.set_defaults(func = cmd_gains_check)

    p = sub.add_parser("calibrate-k", help = "measure the predictor error constant")
    p.add_argument("config")
    p.add_argument("--samples", type = int, default = 200)
    p.set_defaults(func = cmd_calibrate_k)

    p = sub.add_parser("predict", help = "evaluate the predictor once")
    p.add_argument("config")
    p.add_argument("--state", type = _floats, required = True)
    p.add_argument("--history", type = _floats, required = True, help = "equal-length input segments, oldest first")
    p.set_defaults(func = cmd_predict)

    p = sub.add_parser("deadbeat-demo", help = "dead-beat loop on the double integrator")
    p.add_argument("--period", type = float, default = constants['deadbeat_period'])
    p.add_argument("--steps", type = int, default = 12)
    p.add_argument("--gain-scale", type = float, default = 1.0)
    outputs(p)
    p.set_defaults(func = cmd_deadbeat_demo)
    return parser

def main(argv: Optional[List[str]] = None) -> None:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level = logging.DEBUG if args.verbose else logging.INFO,
        format = "%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except FileNotFoundError as err:
        raise exceptions.QuitWithError(f"no such file: {err}") from None
    except exceptions.DelaySimError as err:
        logger.error("%s: %s", type(err).__name__, err)
        raise exceptions.QuitWithError(str(err)) from None

if __name__ == "__main__":
    main(sys.argv[1:])
