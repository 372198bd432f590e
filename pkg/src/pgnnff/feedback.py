"""Discrete low-pass filtered PID position controller.

The continuous controller is a PI * lead * low-pass cascade,

    C_fb(s) = g * (s + z_pi)/s * (s + z_lead)/(s + p_lead) * 1/(s + p_lpf),

with corner frequencies z_pi = (5/6)*2*pi, z_lead = (5/3)*2*pi, p_lead = 30*pi,
p_lpf = 60*pi rad/s and loop gain g = 4e7. On the 19.96 kg friction plant this
places the gain crossover near 13 Hz with ~16 deg phase margin. It is
discretized with the bilinear (Tustin) transform, realized as a cascade of
first-order sections for coefficient robustness.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

Z_PI = (5.0 / 6.0) * 2.0 * math.pi
Z_LEAD = (5.0 / 3.0) * 2.0 * math.pi
P_LEAD = 30.0 * math.pi
P_LPF = 60.0 * math.pi
CFB_GAIN = 4.0e7


@dataclass
class LtiSection:
    """First/second-order difference equation in powers of q^-1, direct form II transposed."""

    b: tuple
    a: tuple  # a[0] normalized to 1

    def __post_init__(self):
        if abs(self.a[0] - 1.0) > 1e-15:
            raise ValueError("denominator leading coefficient must be normalized to 1")
        self.state = [0.0] * (max(len(self.b), len(self.a)) - 1)

    def step(self, x: float) -> float:
        y = self.b[0] * x + self.state[0]
        for i in range(len(self.state)):
            nxt = self.state[i + 1] if i + 1 < len(self.state) else 0.0
            bi = self.b[i + 1] if i + 1 < len(self.b) else 0.0
            ai = self.a[i + 1] if i + 1 < len(self.a) else 0.0
            self.state[i] = bi * x - ai * y + nxt
        return y

    def reset(self) -> None:
        self.state = [0.0] * len(self.state)


@dataclass
class LtiFilter:
    """Cascade of LTI sections with single-owner mutable state."""

    sections: list = field(default_factory=list)

    def step(self, x: float) -> float:
        for sec in self.sections:
            x = sec.step(x)
        return x

    def reset(self) -> None:
        for sec in self.sections:
            sec.reset()

    def copy(self) -> "LtiFilter":
        f = LtiFilter([LtiSection(sec.b, sec.a) for sec in self.sections])
        for mine, theirs in zip(f.sections, self.sections):
            mine.state = list(theirs.state)
        return f

    @property
    def num(self) -> np.ndarray:
        """Full numerator polynomial in q^-1 (convolution of sections)."""
        poly = np.array([1.0])
        for sec in self.sections:
            poly = np.convolve(poly, np.asarray(sec.b))
        return poly

    @property
    def den(self) -> np.ndarray:
        poly = np.array([1.0])
        for sec in self.sections:
            poly = np.convolve(poly, np.asarray(sec.a))
        return poly

    def response(self, z: complex) -> complex:
        """Transfer function value at complex z."""
        h = 1.0 + 0.0j
        for sec in self.sections:
            num = sum(bi * z ** (-i) for i, bi in enumerate(sec.b))
            den = sum(ai * z ** (-i) for i, ai in enumerate(sec.a))
            h *= num / den
        return h

    def coefficients_json(self) -> str:
        payload = {
            "sections": [{"b": list(sec.b), "a": list(sec.a)} for sec in self.sections],
            "num": self.num.tolist(),
            "den": self.den.tolist(),
        }
        return json.dumps(payload, sort_keys=True, indent=2)


def tustin_first_order(b1: float, b0: float, a1: float, a0: float, ts: float) -> tuple[tuple, tuple]:
    """Bilinear transform of (b1 s + b0) / (a1 s + a0); returns (b, a) with a[0] = 1."""
    k = 2.0 / ts
    d0 = a1 * k + a0
    if d0 == 0.0:
        raise ValueError("degenerate section")
    b = ((b1 * k + b0) / d0, (b0 - b1 * k) / d0)
    a = (1.0, (a0 - a1 * k) / d0)
    return b, a


def cfb_continuous(s: complex, gain: float = CFB_GAIN) -> complex:
    """Analytic continuous-time controller transfer function C_fb(s)."""
    return gain * (s + Z_PI) / s * (s + Z_LEAD) / (s + P_LEAD) / (s + P_LPF)


def discretize_cfb(ts: float, gain: float = CFB_GAIN) -> LtiFilter:
    """Tustin-discretize the PID controller at sample time ts as three first-order sections."""
    if ts <= 0.0:
        raise ValueError("sample time must be positive")
    sections = []
    b, a = tustin_first_order(gain, gain * Z_PI, 1.0, 0.0, ts)  # gain * (s + z_pi) / s
    sections.append(LtiSection(b, a))
    b, a = tustin_first_order(1.0, Z_LEAD, 1.0, P_LEAD, ts)
    sections.append(LtiSection(b, a))
    b, a = tustin_first_order(0.0, 1.0, 1.0, P_LPF, ts)
    sections.append(LtiSection(b, a))
    return LtiFilter(sections)


def fb_step(filt: LtiFilter, e: float) -> float:
    """One sample of feedback force from one sample of tracking error."""
    return filt.step(e)
