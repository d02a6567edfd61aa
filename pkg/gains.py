from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, TYPE_CHECKING

import numpy as np # type: ignore
from scipy.linalg import solve_continuous_lyapunov # type: ignore

from exceptions import DomainError

if TYPE_CHECKING:
    from plants import StrictFeedbackPlant
    from simulation_log import SimulationLog

logger = logging.getLogger(__name__)

def _routh_first_column(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.size - 1
    width = n // 2 + 1
    rows = [np.zeros(width), np.zeros(width)]
    rows[0][:len(coeffs[0::2])] = coeffs[0::2]
    rows[1][:len(coeffs[1::2])] = coeffs[1::2]
    first = [rows[0][0], rows[1][0]]
    for _ in range(n - 1):
        upper, lower = rows[-2], rows[-1]
        if lower[0] == 0.0:
            first.append(0.0)
            break
        new = np.zeros(width)
        new[:-1] = (lower[0] * upper[1:] - upper[0] * lower[1:]) / lower[0]
        rows.append(new)
        first.append(new[0])
    return np.asarray(first[:n + 1])

def is_hurwitz(M: np.ndarray) -> bool:
    """All eigenvalues in the open left half plane, by the Routh test on the characteristic polynomial."""
    M = np.atleast_2d(np.asarray(M, dtype = float))
    if M.shape[0] != M.shape[1]:
        raise DomainError("matrix must be square")
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix entries must be finite")
    coeffs = np.real(np.poly(M))
    if np.any(coeffs <= 0.0):
        return False
    return bool(np.all(_routh_first_column(coeffs) > 0.0))

def solve_observer_lyapunov(A: np.ndarray, p: np.ndarray, c: np.ndarray, q: float) -> np.ndarray:
    """Q > 0 with Q (A + p c') + (A + p c')' Q + 2 q I <= 0."""
    if not q > 0:
        raise DomainError("q must be positive")
    A_obs = np.asarray(A, dtype = float) + np.outer(p, c)
    if not is_hurwitz(A_obs):
        raise DomainError("A + p c' is not Hurwitz")
    n = A_obs.shape[0]
    q_solve = q * (1.0 + 1e-6)
    Q = solve_continuous_lyapunov(A_obs.T, -2.0 * q_solve * np.eye(n))
    Q = 0.5 * (Q + Q.T)

    residual = Q @ A_obs + A_obs.T @ Q + 2.0 * q * np.eye(n)
    if np.max(np.linalg.eigvalsh(residual)) > 1e-9 * max(1.0, np.abs(Q).max()):
        raise DomainError("Lyapunov solution does not satisfy the observer inequality")
    if np.min(np.linalg.eigvalsh(Q)) <= 0.0:
        raise DomainError("Lyapunov solution is not positive definite")
    return Q

@dataclass
class Certification:
    passed: bool
    worst_margin: float
    checks: int

def inequality_sides(
    P: np.ndarray, k: np.ndarray, plant: StrictFeedbackPlant, mu: float, gamma: float,
    x: np.ndarray, d: np.ndarray, u: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Both sides of x'P((A + bk')x + f(x) + diag(g(x, u)) d) <= -2 mu x'Px + gamma |d|^2
    for a batch of points (rows of x and d, entries of u).
    """
    x = np.atleast_2d(x)
    d = np.atleast_2d(d)
    closed = plant.A + np.outer(plant.b, k)
    g = np.array([plant.disturbance_gains(xi, ui) for xi, ui in zip(x, np.atleast_1d(u))])
    flow = x @ closed.T + plant.drift(x) + g * d
    Px = x @ P
    lhs = np.einsum("ij,ij->i", Px, flow)
    rhs = -2.0 * mu * np.einsum("ij,ij->i", Px, x) + gamma * np.einsum("ij,ij->i", d, d)
    return lhs, rhs

def _sample_states(rng: np.random.Generator, n: int, count: int, radii: Sequence[float]) -> np.ndarray:
    """Random directions scaled onto a ladder of radii."""
    directions = rng.normal(size = (count, n))
    directions /= np.linalg.norm(directions, axis = 1, keepdims = True)
    scale = np.asarray(radii)[rng.integers(len(radii), size = count)]
    return directions * (scale * rng.uniform(0.1, 1.0, size = count))[:, None]

DEFAULT_RADII = (1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1e3)

def certify_315(
    P: np.ndarray,
    k: np.ndarray,
    plant: StrictFeedbackPlant,
    mu: float,
    gamma: float,
    checks: int = 2000,
    rng: Optional[np.random.Generator] = None,
    radii: Sequence[float] = DEFAULT_RADII,
) -> Certification:
    """
    Randomized check of the feedback dissipation inequality; the margin of a
    point is (rhs - lhs) / (|x|^2 + |d|^2), so points at any scale compare.
    """
    P = np.asarray(P, dtype = float)
    k = np.asarray(k, dtype = float)
    if np.min(np.linalg.eigvalsh(0.5 * (P + P.T))) <= 0.0:
        raise DomainError("P must be positive definite")
    rng = rng if rng is not None else np.random.default_rng(0)
    x = _sample_states(rng, plant.n, checks, radii)
    d = _sample_states(rng, plant.n, checks, radii)
    d[: checks // 4] = 0.0
    u = rng.uniform(-10.0, 10.0, size = checks)
    lhs, rhs = inequality_sides(P, k, plant, mu, gamma, x, d, u)
    scale = np.sum(x * x, axis = 1) + np.sum(d * d, axis = 1)
    margins = (rhs - lhs) / np.where(scale > 0.0, scale, 1.0)
    worst = float(np.min(margins))
    return Certification(passed = worst >= -1e-12, worst_margin = worst, checks = checks)

@dataclass
class FeedbackCertificate:
    P: Optional[np.ndarray]
    mu: float
    gamma: float
    certification: Certification
    weights: Optional[np.ndarray] = None

    @property
    def passed(self) -> bool:
        return self.P is not None and self.certification.passed

def _decay_ratio(P: np.ndarray, closed: np.ndarray, plant: StrictFeedbackPlant, x: np.ndarray) -> float:
    """Largest mu with x'P(closed x + f(x)) <= -2 mu x'Px on the sample points."""
    Px = x @ P
    lhs = np.einsum("ij,ij->i", Px, x @ closed.T + plant.drift(x))
    energy = np.einsum("ij,ij->i", Px, x)
    return float(np.min(-lhs / (2.0 * energy)))

def find_sector_certificate(
    k: np.ndarray,
    plant: StrictFeedbackPlant,
    checks: int = 2000,
    rng: Optional[np.random.Generator] = None,
    weight_grid: Sequence[float] = tuple(np.logspace(-2, 2, 9)),
) -> FeedbackCertificate:
    """
    Search Lyapunov solutions of (A + bk')'P + P(A + bk') = -W over diagonal W,
    keep the one with the best decay ratio on random points, then fix mu at
    half that ratio, size gamma for the disturbance channel and certify.
    """
    k = np.asarray(k, dtype = float)
    rng = rng if rng is not None else np.random.default_rng(0)
    closed = plant.A + np.outer(plant.b, k)
    failed = FeedbackCertificate(None, 0.0, 0.0, Certification(False, -math.inf, 0))
    if not is_hurwitz(closed):
        logger.info("A + bk' is not Hurwitz for k = %s", k)
        return failed

    x = _sample_states(rng, plant.n, checks, DEFAULT_RADII)
    best: Tuple[float, Optional[np.ndarray], Optional[np.ndarray]] = (-math.inf, None, None)
    for tail in itertools.product(weight_grid, repeat = plant.n - 1):
        W = np.diag((1.0,) + tuple(tail))
        P = solve_continuous_lyapunov(closed.T, -W)
        P = 0.5 * (P + P.T)
        if np.min(np.linalg.eigvalsh(P)) <= 0.0:
            continue
        ratio = _decay_ratio(P, closed, plant, x)
        if ratio > best[0]:
            best = (ratio, P, np.diag(W))

    ratio, P, weights = best
    if P is None or ratio <= 0.0:
        logger.info("no diagonal Lyapunov weight gives a decay margin for k = %s", k)
        return failed

    mu = 0.5 * ratio
    K1 = float(np.min(np.linalg.eigvalsh(P)))
    P_norm = float(np.max(np.linalg.eigvalsh(P)))
    gamma = max(2.0 * (plant.G * P_norm) ** 2 / (8.0 * (ratio - mu) * K1), 1e-12)
    certification = certify_315(P, k, plant, mu, gamma, checks = checks, rng = rng)
    return FeedbackCertificate(P, mu, gamma, certification, weights)

def omega(n: int, L: float, theta: float, p: Sequence[float]) -> float:
    """Growth rate of the observer energy between samples."""
    p = np.asarray(p, dtype = float)
    scaled = max(theta ** (2 * i) * p[i - 1] ** 2 for i in range(1, n + 1))
    return 0.5 * max(L * (n + 1) + 2.0 + 2.0 * n * scaled, 1.0 + L * L)

def beta(omega_value: float, n: int, L: float) -> float:
    return omega_value + ((n + 1) * L + 3.0) / 2.0

def gamma_const(K: float, rho: float, l: int, n: int, L: float, lag: float) -> float:
    """Linear gain of the approximate predictor map."""
    if rho >= 1.0:
        raise DomainError(f"rho = {rho:.6g} >= 1, the predictor gain bound is vacuous")
    return K * rho ** (l + 1) / (1.0 - rho) + math.exp(((n + 1) * L + 3.0) / 2.0 * lag)

def g_ceil(t: float) -> int:
    """min{k in Z+ : t <= k}."""
    if t < 0:
        raise DomainError("g is defined for t >= 0")
    return max(0, math.ceil(t - 1e-9))

def holding_index_j(r: float, T1: float, T2: float) -> int:
    """min{j in Z+ : j T2 >= r + T1}."""
    return g_ceil((r + T1) / T2)

def _log_growth_base(Gamma: float, beta_value: float, omega_value: float, T1: float, T2: float, b_sup: float) -> float:
    denominator = -math.expm1(-2.0 * omega_value * T1 * math.exp(-b_sup))
    return math.log(7.0 * (1.0 + Gamma)) + beta_value * T2 - 0.5 * math.log(denominator)

def M_rho(
    b_sup: float, Gamma: float, beta_value: float, omega_value: float,
    T1: float, T2: float, j: int, tau: float,
) -> float:
    """Overshoot constant of the closed-loop estimate; inf when it overflows a double."""
    exponent = g_ceil(j + tau / T2) * _log_growth_base(Gamma, beta_value, omega_value, T1, T2, b_sup)
    return math.exp(exponent) if exponent < 700.0 else math.inf

@dataclass
class GainCertificate:
    """Everything the sufficient stability conditions are evaluated on."""
    P: np.ndarray
    Q: np.ndarray
    k: np.ndarray
    p: np.ndarray
    mu: float
    gamma: float
    q: float
    theta: float
    T1: float
    T2: float
    l: int
    m: int
    K: float

    @property
    def a(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.Q)))

    @property
    def K1(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.P)))

    @property
    def K2(self) -> float:
        return float(np.max(np.linalg.eigvalsh(self.P)))

@dataclass
class ConditionReport:
    margins: Dict[str, float]
    omega: float
    beta: float
    Gamma: float
    rho: float
    j: int
    M0: float
    notes: list = field(default_factory = list)

    @property
    def passed(self) -> bool:
        return all(m > 0.0 for m in self.margins.values())

    def lines(self):
        for name, margin in self.margins.items():
            status = "ok" if margin > 0.0 else "FAIL"
            yield f"{name} margin {margin:+.6g} {status}"
        yield f"omega = {self.omega:.6g}, beta = {self.beta:.6g}, Gamma = {self.Gamma:.6g}"
        yield f"rho = {self.rho:.6g}, j = {self.j}, M(0) = {self.M0:.6g}"
        yield from self.notes

def check_theorem32(cert: GainCertificate, plant: StrictFeedbackPlant) -> ConditionReport:
    """Margins (right side minus left side) of the three sampling and gain conditions."""
    n, L = plant.n, plant.L
    Q_norm = float(np.max(np.linalg.eigvalsh(cert.Q)))
    Qp = float(np.linalg.norm(cert.Q @ cert.p))
    k_norm = float(np.linalg.norm(cert.k))
    notes = []

    m_sampling = cert.q - 4.0 * Qp * (L + cert.theta) * cert.T1 * math.sqrt(Q_norm / cert.a)
    m_gain = cert.theta - max(1.0, 2.0 * Q_norm * L * math.sqrt(n) / cert.q)

    T_sub = plant.lag / cert.m
    rho = (n * L + 1.0) * T_sub
    om = omega(n, L, cert.theta, cert.p)
    be = beta(om, n, L)
    if rho < 1.0:
        predictor_term = cert.K * rho ** (cert.l + 1) / (1.0 - rho)
        bPb = float(plant.b @ cert.P @ plant.b)
        lead = (n * L + 1.0 + k_norm) * math.sqrt(bPb / (2.0 * cert.K1)) + cert.mu
        m_holding = cert.mu - lead * k_norm * (cert.T2 + predictor_term)
        Gamma = gamma_const(cert.K, rho, cert.l, n, L, plant.lag)
        notes.append("the holding and prediction margin uses the measured predictor constant K and is empirical")
    else:
        m_holding = -math.inf
        Gamma = math.inf
        notes.append(f"rho = {rho:.4g} >= 1: predictor bound vacuous, holding and prediction margin cannot hold")

    j = holding_index_j(plant.r, cert.T1, cert.T2)
    M0 = math.inf if math.isinf(Gamma) else M_rho(0.0, Gamma, be, om, cert.T1, cert.T2, j, plant.tau)
    return ConditionReport(
        margins = {"observer_sampling": m_sampling, "observer_gain": m_gain, "holding_and_prediction": m_holding},
        omega = om, beta = be, Gamma = Gamma, rho = rho, j = j, M0 = M0, notes = notes,
    )

def certify_growth_envelope(
    log: SimulationLog,
    plant: StrictFeedbackPlant,
    Gamma: float,
    theta: float,
    p: Sequence[float],
    T1: float,
    T2: float,
    b_sup: float = 0.0,
) -> Tuple[bool, float]:
    """
    Closed-loop growth estimate on every row of a log, compared in log form:
    sup(|z| + |w|) + sup|x| + sup|u| <= base^g(t / T2) (initial size + sup|xi| + G sup|d|).
    Returns whether it holds and the smallest log-margin.
    """
    om = omega(plant.n, plant.L, theta, p)
    log_base = _log_growth_base(Gamma, beta(om, plant.n, plant.L), om, T1, T2, b_sup)
    t = log.t
    zw = np.maximum.accumulate(np.linalg.norm(log.z, axis = 1) + np.abs(log.w))
    x_sup = np.maximum(np.maximum.accumulate(np.linalg.norm(log.x, axis = 1)), log.x_initial_sup)
    u_sup = np.maximum(np.maximum.accumulate(np.abs(log.u)), log.u_initial_sup)
    lhs = zw + x_sup + u_sup

    initial = (
        np.linalg.norm(log.z[0]) + abs(log.w[0]) + log.x_initial_sup + log.u_initial_sup
    )
    forcing = np.maximum.accumulate(np.abs(log.xi)) + plant.G * np.maximum.accumulate(
        np.linalg.norm(log.d, axis = 1)
    )
    rhs_size = initial + forcing
    exponents = np.array([g_ceil(s / T2) for s in t]) * log_base

    positive = lhs > 0.0
    if not np.any(positive):
        return True, math.inf
    with np.errstate(divide = "ignore"):
        margin = exponents + np.log(rhs_size) - np.log(lhs)
    worst = float(np.min(margin[positive]))
    return worst >= -1e-9, worst

def sigma_fit(t: np.ndarray, values: np.ndarray) -> Tuple[float, float]:
    """Least-squares fit of values ~ C exp(-sigma t); returns (sigma, log C)."""
    t = np.asarray(t, dtype = float)
    values = np.asarray(values, dtype = float)
    keep = values > 0.0
    if np.count_nonzero(keep) < 2:
        raise DomainError("need at least two positive values to fit a decay rate")
    slope, intercept = np.polyfit(t[keep], np.log(values[keep]), 1)
    return float(-slope), float(intercept)
