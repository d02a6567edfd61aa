from __future__ import annotations

import math
from typing import Callable, Optional, Sequence, Tuple

import numpy as np # type: ignore

from controller_kinds import OutputCase
from exceptions import DimensionError, DomainError

DriftComponent = Callable[[np.ndarray], np.ndarray]
GainComponent = Callable[[np.ndarray, float], float]

SATURATED_CHAIN_LIPSCHITZ = 4.0 * math.sqrt(2.0) / (3.0 * math.sqrt(3.0))

def saturation(x: float) -> float:
    """Bounded saturation x / max(1, |x|)."""
    if not math.isfinite(x):
        raise DomainError(f"saturation of non-finite value {x!r}")
    return x / max(1.0, abs(x))

def f_saturated(x):
    """sgn(x) x^2 / sqrt(1 + x^2), globally Lipschitz with constant 4 sqrt(2) / (3 sqrt(3))."""
    x = np.asarray(x, dtype = float)
    return np.sign(x) * x * x / np.sqrt(1.0 + x * x)

def chain_matrices(n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shift matrix A, input vector b = e_n and output vector c = e_1 of the integrator chain."""
    A = np.eye(n, k = 1)
    b = np.zeros(n)
    b[-1] = 1.0
    c = np.zeros(n)
    c[0] = 1.0
    return A, b, c

def _unit_gain(x: np.ndarray, u: float) -> float:
    return 1.0

class StrictFeedbackPlant:
    """
    x_i' = f_i(x_1..x_i) + x_{i+1} + g_i(x, u) d_i,   x_n' = f_n(x) + g_n(x, u) d_n + u(t - tau).

    Each f_i takes an array whose last axis holds (x_1, ..., x_i) and must
    broadcast over leading axes; the Picard predictor evaluates it on whole grids.
    """

    def __init__(
        self,
        f: Sequence[DriftComponent],
        L: float,
        r: float,
        tau: float,
        g: Optional[Sequence[GainComponent]] = None,
        G: float = 1.0,
        name: str = "<strict feedback>",
    ):
        self.n = len(f)
        if self.n < 1:
            raise DimensionError("a strict-feedback plant needs at least one state")
        if g is not None and len(g) != self.n:
            raise DimensionError(f"{len(g)} disturbance gains for {self.n} states")
        if L < 0 or G < 0:
            raise DomainError("Lipschitz constant and disturbance bound must be nonnegative")
        if r < 0 or tau < 0 or r + tau <= 0:
            raise DomainError("delays must be nonnegative with r + tau > 0")

        self.f = tuple(f)
        self.g = tuple(g) if g is not None else tuple(_unit_gain for _ in range(self.n))
        self.L = float(L)
        self.G = float(G)
        self.r = float(r)
        self.tau = float(tau)
        self.name = name
        self.A, self.b, self.c = chain_matrices(self.n)

    @property
    def lag(self) -> float:
        return self.r + self.tau

    def drift(self, x: np.ndarray) -> np.ndarray:
        """f(x) = (f_1(x_1), ..., f_n(x)) evaluated along the last axis."""
        x = np.asarray(x, dtype = float)
        if x.shape[-1] != self.n:
            raise DimensionError(f"state has {x.shape[-1]} components, plant has {self.n}")
        return np.stack(
            [np.broadcast_to(fi(x[..., :i + 1]), x.shape[:-1]) for i, fi in enumerate(self.f)],
            axis = -1,
        )

    def disturbance_gains(self, x: np.ndarray, u: float) -> np.ndarray:
        return np.array([gi(x, u) for gi in self.g], dtype = float)

    def with_delays(self, r: float, tau: float) -> StrictFeedbackPlant:
        return StrictFeedbackPlant(self.f, self.L, r, tau, g = self.g, G = self.G, name = self.name)

    def __repr__(self) -> str:
        return f"StrictFeedbackPlant({self.name}, n={self.n}, L={self.L:g}, r={self.r:g}, tau={self.tau:g})"

def saturated_chain_plant(r: float = 0.25, tau: float = 0.25) -> StrictFeedbackPlant:
    """x_1' = f(x_1) + x_2, x_2' = u(t - tau) with the saturating quadratic f."""
    return StrictFeedbackPlant(
        f = (lambda x: f_saturated(x[..., 0]), lambda x: np.zeros(x.shape[:-1])),
        L = SATURATED_CHAIN_LIPSCHITZ,
        r = r,
        tau = tau,
        name = "saturated_chain",
    )

def linear_chain_plant(n: int, r: float, tau: float, L: float = 0.0) -> StrictFeedbackPlant:
    """The pure integrator chain (f = 0), declared with Lipschitz constant L."""
    return StrictFeedbackPlant(
        f = tuple((lambda x: np.zeros(x.shape[:-1])) for _ in range(n)),
        L = L, r = r, tau = tau, name = f"chain{n}",
    )

def strict_feedback_rhs(
    plant: StrictFeedbackPlant,
    x: np.ndarray,
    u_delayed: float,
    d: np.ndarray,
    u_now: Optional[float] = None,
) -> np.ndarray:
    x = np.asarray(x, dtype = float)
    d = np.asarray(d, dtype = float)
    if x.shape != (plant.n,) or d.shape != (plant.n,):
        raise DimensionError(f"expected state and disturbance of length {plant.n}")
    dx = plant.drift(x) + plant.A @ x
    dx[-1] += u_delayed
    if np.any(d):
        dx += plant.disturbance_gains(x, u_delayed if u_now is None else u_now) * d
    return dx

def growth_envelope(
    plant: StrictFeedbackPlant, x0_norm: float, d_sup: float, u_sup: float, t: float,
) -> float:
    """Forward-completeness ceiling on |x(t)| for the strict-feedback plant."""
    if min(x0_norm, d_sup, u_sup, t) < 0:
        raise DomainError("growth envelope arguments must be nonnegative")
    rate = (plant.n + 1) * plant.L + 3.0
    return (x0_norm + (plant.G * d_sup + u_sup) / math.sqrt(rate)) * math.exp(0.5 * rate * t)

def lipschitz_estimate(
    plant: StrictFeedbackPlant, rng: np.random.Generator, count: int = 1000, scale: float = 10.0,
) -> float:
    """Largest observed |f_i(x) - f_i(z)| / |x - z| over random pairs."""
    worst = 0.0
    x = rng.uniform(-scale, scale, size = (count, plant.n))
    z = rng.uniform(-scale, scale, size = (count, plant.n))
    for i, fi in enumerate(plant.f):
        num = np.abs(fi(x[:, :i + 1]) - fi(z[:, :i + 1]))
        den = np.linalg.norm(x[:, :i + 1] - z[:, :i + 1], axis = 1)
        worst = max(worst, float(np.max(num / den)))
    return worst

def bound_estimate(
    plant: StrictFeedbackPlant, rng: np.random.Generator, count: int = 1000, scale: float = 10.0,
) -> float:
    """Largest observed |g_i(x, u)| over random points."""
    worst = 0.0
    for _ in range(count):
        x = rng.uniform(-scale, scale, size = plant.n)
        u = float(rng.uniform(-scale, scale))
        worst = max(worst, float(np.max(np.abs(plant.disturbance_gains(x, u)))))
    return worst

class FeedforwardPlant:
    """x_1' = u(t - tau), x_2' = x_1 + x_1 u(t - tau), x_3' = x_2 + x_1^2, sampled and held with period T."""

    n = 3

    def __init__(
        self,
        r: float,
        tau: float,
        T: float,
        output_case: OutputCase = OutputCase.TWO_OUTPUT,
        eps: Optional[float] = None,
    ):
        if r < 0 or tau < 0:
            raise DomainError("delays must be nonnegative")
        if not (0.0 < r + tau < T):
            raise DomainError("only 0 < r + tau < T is implemented")
        if output_case is OutputCase.ONE_OUTPUT:
            if eps is None or not (0.0 < eps < 1.0 / 6.0):
                raise DomainError("the one-output case needs 0 < eps < 1/6")
        self.r = float(r)
        self.tau = float(tau)
        self.T = float(T)
        self.output_case = output_case
        self.eps = None if eps is None else float(eps)

    @property
    def delta(self) -> float:
        return self.r + self.tau

    @property
    def l(self) -> int:
        return 0

    @property
    def p(self) -> int:
        return 1 if self.output_case is OutputCase.TWO_OUTPUT else 2

    def output(self, x: np.ndarray):
        x = np.asarray(x, dtype = float)
        if self.output_case is OutputCase.TWO_OUTPUT:
            return np.array([x[0], x[2]])
        return float(x[2])

    def __repr__(self) -> str:
        return (
            f"FeedforwardPlant(r={self.r:g}, tau={self.tau:g}, T={self.T:g}, "
            f"{self.output_case.value}, eps={self.eps})"
        )

def feedforward_rhs(x: np.ndarray, u_delayed: float) -> np.ndarray:
    x1, x2, _ = np.asarray(x, dtype = float)
    return np.array([u_delayed, x1 + x1 * u_delayed, x2 + x1 * x1])

class LtiPlant:
    """x' = A x + B u(t - tau) + G d, y = c'x(t - r)."""

    def __init__(
        self,
        A: np.ndarray,
        B: np.ndarray,
        c: np.ndarray,
        r: float,
        tau: float,
        G_mat: Optional[np.ndarray] = None,
    ):
        A = np.atleast_2d(np.asarray(A, dtype = float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError("A must be square")
        B = np.asarray(B, dtype = float).reshape(-1)
        c = np.asarray(c, dtype = float).reshape(-1)
        G_mat = np.eye(n) if G_mat is None else np.atleast_2d(np.asarray(G_mat, dtype = float))
        if B.shape != (n,) or c.shape != (n,) or G_mat.shape != (n, n):
            raise DimensionError("B, c must be n-vectors and G an n x n matrix")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise DomainError("plant matrices must be finite")
        if r < 0 or tau < 0 or r + tau <= 0:
            raise DomainError("delays must be nonnegative with r + tau > 0")
        self.A, self.B, self.c, self.G_mat = A, B, c, G_mat
        self.r = float(r)
        self.tau = float(tau)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def lag(self) -> float:
        return self.r + self.tau

    def __repr__(self) -> str:
        return f"LtiPlant(n={self.n}, r={self.r:g}, tau={self.tau:g})"

def double_integrator(r: float = 0.25, tau: float = 0.25) -> LtiPlant:
    return LtiPlant([[0.0, 1.0], [0.0, 0.0]], [0.0, 1.0], [1.0, 0.0], r, tau)

def lti_rhs(plant: LtiPlant, x: np.ndarray, u_delayed: float, d: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype = float)
    d = np.asarray(d, dtype = float)
    if x.shape != (plant.n,) or d.shape != (plant.n,):
        raise DimensionError(f"expected state and disturbance of length {plant.n}")
    return plant.A @ x + plant.B * u_delayed + plant.G_mat @ d
