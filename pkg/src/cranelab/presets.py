"""Named initial-data families and the small profile grammar.

Presets are chosen so the platform starts from rest with a quiescent
control history (y1(0) = 0 and history identically zero).  That is not
just tidiness: with a silent delay line the trapezoid evaluation of the
conserved functional coincides exactly with the matched discrete one, so
the predicted equilibrium is the flow's own limit with no grid-level
offset, and compatibility holds without stitching the history to the
initial velocity.

The ``rough`` preset has a velocity profile with a corner singularity,
|x - x0|^nu with nu just above one half.  It stays in the energy space
but barely, which is exactly what is needed to exercise the slow
polynomial envelope instead of the fast smooth-data decay.
"""

from __future__ import annotations

import numpy as np

from .evolve import InitialData
from .model import ConfigError

__all__ = [
    "equilibrium_preset",
    "zero_preset",
    "smooth_preset",
    "rough_preset",
    "PRESETS",
    "parse_profile",
    "initial_from_spec",
]


def _const(c: float):
    return lambda x: np.full_like(np.asarray(x, dtype=float), c)


def equilibrium_preset(level: float = 0.3) -> InitialData:
    """Constant displacement at rest: an exact steady state."""
    return InitialData(y0=_const(level), y1=_const(0.0), history=_const(0.0))


def zero_preset() -> InitialData:
    return InitialData(y0=_const(0.0), y1=_const(0.0), history=_const(0.0))


def smooth_preset(scale: float = 1.0, ramp: float = 1.0) -> InitialData:
    """Analytic displacement and velocity, platform initially silent.

    The profiles ride the fundamental travel-time harmonic of a cable
    with stiffness a(x) = 1 + ramp*x: in the coordinate s(x) that
    equalizes acoustic travel time, both are sin(pi*s).  A plain
    sin(pi*x) spreads several percent of its amplitude across the
    higher harmonics of the ramped cable, whose boundary damping fades
    like 1/frequency^2; the warped fundamental keeps that leakage near
    the tenth of a percent level, so the excitation actually dies at
    the fast low-mode rate.
    """
    r = float(ramp)

    def s(x):
        x = np.asarray(x, dtype=float)
        if abs(r) < 1e-14:
            return x
        return (np.sqrt(1.0 + r * x) - 1.0) / (np.sqrt(1.0 + r) - 1.0)

    def y0(x):
        return 0.1 * scale * np.sin(np.pi * s(x))

    def y1(x):
        return scale * np.sin(np.pi * s(x))

    return InitialData(y0=y0, y1=y1, history=_const(0.0))


def rough_preset(amplitude: float = 1.0, exponent: float = 0.55,
                 corner: float = 0.4) -> InitialData:
    """Velocity with a corner singularity; minimal-regularity excitation.

    y1(x) = amplitude * (|x - corner|^exponent - corner^exponent), shifted
    so y1(0) = 0 and the preset stays compatible with a silent history.
    Exponents in (0.5, 1) keep the state in the energy space while loading
    the high modes heavily enough to expose the polynomial decay envelope.
    """
    if not 0.5 < exponent < 1.0:
        raise ValueError("exponent must lie in (0.5, 1)")
    if not 0.0 < corner < 1.0:
        raise ValueError("corner must lie inside (0, 1)")

    def y0(x):
        x = np.asarray(x, dtype=float)
        return 0.2 * x * (1.0 - x)

    def y1(x):
        x = np.asarray(x, dtype=float)
        return amplitude * (np.abs(x - corner) ** exponent - corner ** exponent)

    return InitialData(y0=y0, y1=y1, history=_const(0.0))


PRESETS = {
    "equilibrium": equilibrium_preset,
    "zero": zero_preset,
    "smooth": smooth_preset,
    "rough": rough_preset,
}


def parse_profile(spec: str):
    """Parse a profile string into a vectorized callable.

    Grammar (whitespace-separated numbers):
      ``zero``                  the zero function
      ``const: c``              constant c
      ``poly: c0 c1 c2 ...``    c0 + c1*x + c2*x^2 + ...
      ``sin: a1 a2 ...``        sum of a_k * sin(k*pi*x)
      ``cos: a1 a2 ...``        sum of a_k * (1 - cos(k*pi*x))

    The ``cos`` form is anchored to vanish at x=0 so that profiles built
    from this grammar compose into compatible initial data by default.
    """
    spec = spec.strip()
    if spec == "zero":
        return _const(0.0)
    if ":" not in spec:
        raise ConfigError(f"cannot parse profile {spec!r}")
    kind, _, raw = spec.partition(":")
    kind = kind.strip().lower()
    try:
        coeffs = [float(tok) for tok in raw.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"bad numbers in profile {spec!r}") from exc
    if not coeffs:
        raise ConfigError(f"profile {spec!r} needs at least one coefficient")

    if kind == "const":
        return _const(coeffs[0])
    if kind == "poly":
        def poly(x, c=tuple(coeffs)):
            x = np.asarray(x, dtype=float)
            return np.polynomial.polynomial.polyval(x, c)
        return poly
    if kind == "sin":
        def sines(x, c=tuple(coeffs)):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            for k, a in enumerate(c, start=1):
                out += a * np.sin(k * np.pi * x)
            return out
        return sines
    if kind == "cos":
        def cosines(x, c=tuple(coeffs)):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            for k, a in enumerate(c, start=1):
                out += a * (1.0 - np.cos(k * np.pi * x))
            return out
        return cosines
    raise ConfigError(f"unknown profile kind {kind!r}")


def initial_from_spec(section: dict[str, str]) -> InitialData:
    """Build InitialData from an [initial] config section.

    Either ``preset = name`` (with optional preset keyword arguments) or
    explicit ``y0 = ...``, ``y1 = ...``, ``f = ...`` profile strings.
    """
    if "preset" in section:
        name = section["preset"].strip().lower()
        if name not in PRESETS:
            known = ", ".join(sorted(PRESETS))
            raise ConfigError(f"unknown preset {name!r}; known presets: {known}")
        kwargs = {}
        for key, value in section.items():
            if key == "preset":
                continue
            try:
                kwargs[key] = float(value)
            except ValueError as exc:
                raise ConfigError(f"preset option {key} = {value!r} is not a number") from exc
        try:
            return PRESETS[name](**kwargs)
        except TypeError as exc:
            raise ConfigError(f"preset {name!r} rejected options: {exc}") from exc
    y0 = parse_profile(section.get("y0", "zero"))
    y1 = parse_profile(section.get("y1", "zero"))
    f = parse_profile(section.get("f", "zero"))
    return InitialData(y0=y0, y1=y1, history=f)
