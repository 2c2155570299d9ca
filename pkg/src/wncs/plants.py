"""Plant dynamics, noisy sensing, and the discounted LQ oracle.

Two desk-scale plants share one interface: a scalar linear system with
quadratic reward, and a torque-limited pendulum swing-up. Dynamics are pure
functions of (state, input); sensing adds Gaussian noise from an injected
generator. Actuation limits are enforced by the controller, not the plant,
so the LQ oracle's value prediction holds exactly along oracle rollouts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return math.pi - (math.pi - theta) % TWO_PI


def _check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite {name}: {arr!r}")


@dataclass
class LinearPlant:
    """Scalar system s' = a s + b u with reward -(q s^2 + r u^2)."""

    a: float = 0.9
    b: float = 0.5
    q: float = 1.0
    r: float = 1.0
    u_max: float = 3.0
    noise_std: float = 0.01
    init_std: float = 1.0

    state_dim: int = field(init=False, default=1, repr=False)
    act_dim: int = field(init=False, default=1, repr=False)

    @property
    def obs_scale(self) -> np.ndarray:
        return np.array([max(3.0 * self.init_std, 1.0)])

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        return self.init_std * rng.standard_normal(1)

    def step(self, s: np.ndarray, u: np.ndarray) -> np.ndarray:
        _check_finite("state", s)
        _check_finite("input", u)
        return np.array([self.a * float(s[0]) + self.b * float(u[0])])

    def reward(self, s: np.ndarray, u: np.ndarray) -> float:
        return -(self.q * float(s[0]) ** 2 + self.r * float(u[0]) ** 2)

    def measure(self, s: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return s + self.noise_std * rng.standard_normal(self.state_dim)


@dataclass
class PendulumPlant:
    """Pendulum swing-up: thetadd = (g/l) sin(theta) + u / (m l^2).

    theta is measured from upright, wrapped to (-pi, pi]; reset hangs the
    pendulum near theta = pi with a small uniform jitter. Integration is
    semi-implicit Euler at a fixed step.
    """

    mass: float = 1.0
    length: float = 1.0
    gravity: float = 10.0
    dt: float = 0.05
    u_max: float = 2.0
    noise_std: float = 0.01
    jitter: float = 0.1

    state_dim: int = field(init=False, default=2, repr=False)
    act_dim: int = field(init=False, default=1, repr=False)

    @property
    def obs_scale(self) -> np.ndarray:
        return np.array([math.pi, 8.0])

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        theta = wrap_angle(math.pi + rng.uniform(-self.jitter, self.jitter))
        return np.array([theta, 0.0])

    def step(self, s: np.ndarray, u: np.ndarray) -> np.ndarray:
        _check_finite("state", s)
        _check_finite("input", u)
        theta, omega = float(s[0]), float(s[1])
        acc = (self.gravity / self.length) * math.sin(theta) \
            + float(u[0]) / (self.mass * self.length ** 2)
        omega = omega + self.dt * acc
        theta = wrap_angle(theta + self.dt * omega)
        return np.array([theta, omega])

    def reward(self, s: np.ndarray, u: np.ndarray) -> float:
        theta = wrap_angle(float(s[0]))
        return -(theta ** 2 + 0.1 * float(s[1]) ** 2
                 + 0.001 * float(u[0]) ** 2)

    def measure(self, s: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return s + self.noise_std * rng.standard_normal(self.state_dim)

    def energy(self, s: np.ndarray) -> float:
        """Mechanical energy, zero reference at the pivot height."""
        theta, omega = float(s[0]), float(s[1])
        return (0.5 * self.mass * self.length ** 2 * omega ** 2
                + self.mass * self.gravity * self.length * math.cos(theta))


def lq_oracle(a: float, b: float, q: float, r: float, gamma: float,
              tol: float = 1e-12, max_iter: int = 1_000_000):
    """Discounted Riccati fixed point for the scalar LQ regulator.

    Returns (gain, p): the optimal policy is u = -gain * s and the optimal
    discounted cost from s is p * s^2 (reward value is -p * s^2).
    """
    if not (0.0 <= gamma < 1.0):
        raise ValueError(f"gamma must be in [0, 1), got {gamma}")
    if r <= 0.0 or q < 0.0:
        raise ValueError("need r > 0 and q >= 0")
    p = q
    for _ in range(max_iter):
        p_next = q + gamma * a * a * p \
            - (gamma * a * b * p) ** 2 / (r + gamma * b * b * p)
        if abs(p_next - p) < tol:
            p = p_next
            break
        p = p_next
    else:
        raise RuntimeError("Riccati iteration did not converge")
    gain = gamma * a * b * p / (r + gamma * b * b * p)
    return gain, p
