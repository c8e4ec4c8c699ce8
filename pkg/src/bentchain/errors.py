"""Pulse imperfections: Gaussian timing jitter and systematic over-rotation."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .pauli import PauliString, apply_to_state

THETA_UNITS = ("lambda_dt", "radians")


@dataclass(frozen=True)
class ErrorModel:
    """``timing_q`` is the jitter standard deviation as a fraction of the gap.

    ``theta_coeff`` is the over-rotation; with ``theta_units="lambda_dt"``
    the angle is ``theta_coeff * lam * dt`` so it scales with the pulse
    spacing, with ``"radians"`` it is taken literally.
    """

    timing_q: float = 0.0
    theta_coeff: float = 0.0
    theta_units: str = "lambda_dt"
    trajectories: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.timing_q < 0:
            raise ValueError("timing jitter q must be >= 0")
        if self.theta_units not in THETA_UNITS:
            raise ValueError(f"theta_units must be one of {THETA_UNITS}")
        if self.trajectories < 1:
            raise ValueError("need at least one trajectory")

    @property
    def is_ideal(self) -> bool:
        return self.timing_q == 0 and self.theta_coeff == 0

    @property
    def is_random(self) -> bool:
        return self.timing_q > 0

    def rotation_angle(self, dt: float, lam: float = 1.0) -> float:
        if self.theta_units == "radians":
            return self.theta_coeff
        return self.theta_coeff * lam * dt

    def to_config(self) -> dict:
        return asdict(self)

    @classmethod
    def from_config(cls, cfg: dict) -> "ErrorModel":
        return cls(
            timing_q=float(cfg.get("timing_q", 0.0)),
            theta_coeff=float(cfg.get("theta_coeff", 0.0)),
            theta_units=cfg.get("theta_units", "lambda_dt"),
            trajectories=int(cfg.get("trajectories", 200)),
            seed=int(cfg.get("seed", 0)),
        )


def jittered_gaps(dt: float, count: int, q: float, rng: np.random.Generator) -> np.ndarray:
    """Gaps drawn from N(dt, (q dt)^2), clamped at zero."""
    if q < 0:
        raise ValueError("q must be >= 0")
    if q == 0:
        return np.full(count, float(dt))
    return np.maximum(rng.normal(dt, q * dt, size=count), 0.0)


def imperfect_pulse(p: PauliString, theta: float):
    """Return a function applying the over-rotated version of ``p`` to a state.

    Each non-identity factor s of ``p`` becomes s exp(-i theta s)
    = cos(theta) s - i sin(theta) I on its qubit; the string phase is kept.
    """
    if theta == 0:
        return lambda psi: apply_to_state(p, psi)
    n = p.n_qubits
    singles = [
        PauliString.single(n, f, (j + 1,)) for j, f in enumerate(p.factors) if f != "I"
    ]
    c, s = math.cos(theta), math.sin(theta)
    global_phase = 1j ** p.phase

    def act(psi):
        out = np.asarray(psi, dtype=complex)
        for sp in singles:
            out = c * apply_to_state(sp, out) - 1j * s * out
        return global_phase * out

    return act
