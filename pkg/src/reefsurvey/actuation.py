"""Command-to-thruster mapping: class offsets to velocities to PWM pulses.

A signed command c scales to a velocity c * alpha; each degree of freedom
maps velocity to a pulse width of 1500 us plus its gain times the
velocity, clamped to the ESC envelope. 1500 us is thruster neutral.
"""

from __future__ import annotations

from dataclasses import dataclass, field

DOF_NAMES = ("surge", "heave", "yaw", "pitch")

NEUTRAL_US = 1500


@dataclass(frozen=True)
class ActuationParams:
    alpha: float = 0.1                      # velocity per command unit
    gains: dict = field(default_factory=lambda: {
        "surge": 50.0, "heave": 50.0, "yaw": 50.0, "pitch": 50.0})
    pwm_min: int = 1100
    pwm_max: int = 1900
    neutral: int = NEUTRAL_US

    def __post_init__(self):
        if not (self.pwm_min < self.neutral < self.pwm_max):
            raise ValueError("require pwm_min < neutral < pwm_max")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


def command_to_velocity(c: int, alpha: float) -> float:
    """Desired velocity for a signed command unit (e.g. the 3 - class offset)."""
    return c * alpha


def velocity_to_pwm(velocity: float, dof: str,
                    params: ActuationParams = ActuationParams()) -> int:
    """Pulse width in microseconds for one degree of freedom."""
    if dof not in params.gains:
        raise ValueError(f"unknown degree of freedom {dof!r}; "
                         f"expected one of {sorted(params.gains)}")
    raw = params.neutral + params.gains[dof] * velocity
    pwm = int(round(raw))
    return min(params.pwm_max, max(params.pwm_min, pwm))


def action_to_pwm_line(step: int, c_yaw: int, c_pitch: int,
                       params: ActuationParams = ActuationParams(),
                       surge_command: int = 1) -> str:
    """One control tick in the line protocol.

    Yaw and pitch class pairs map through the signed offset 3 - class;
    surge holds a constant forward command and heave stays neutral (the
    class pair does not address them).
    """
    yaw_v = command_to_velocity(3 - c_yaw, params.alpha)
    pitch_v = command_to_velocity(3 - c_pitch, params.alpha)
    surge_v = command_to_velocity(surge_command, params.alpha)
    fields = {
        "surge": velocity_to_pwm(surge_v, "surge", params),
        "heave": velocity_to_pwm(0.0, "heave", params),
        "yaw": velocity_to_pwm(yaw_v, "yaw", params),
        "pitch": velocity_to_pwm(pitch_v, "pitch", params),
    }
    parts = [f"t={step}"] + [f"{dof}={fields[dof]}" for dof in DOF_NAMES]
    return " ".join(parts)
