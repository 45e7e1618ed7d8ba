"""Initial-data presets and the profile mini-grammar."""

import numpy as np
import pytest

import cranelab as cl
from cranelab.model import ConfigError
from cranelab.presets import (PRESETS, equilibrium_preset, parse_profile,
                              zero_preset)

X = np.linspace(0.0, 1.0, 101)


def test_smooth_preset_is_quiescent():
    data = cl.smooth_preset()
    assert data.y1(0.0) == pytest.approx(0.0, abs=1e-14)
    assert np.all(data.history(X) == 0.0)
    # Displacement and velocity share the warped fundamental shape:
    # zero at both ends, single interior arch.
    assert data.y0(0.0) == pytest.approx(0.0, abs=1e-14)
    assert abs(data.y0(1.0)) <= 1e-14
    assert abs(data.y1(1.0)) <= 1e-14
    interior = data.y1(X[1:-1])
    assert np.all(interior > 0.0)


def test_smooth_preset_scale_and_ramp():
    base = cl.smooth_preset()
    doubled = cl.smooth_preset(scale=2.0)
    assert np.allclose(doubled.y1(X), 2.0 * base.y1(X), rtol=1e-14)
    assert np.allclose(doubled.y0(X), 2.0 * base.y0(X), rtol=1e-14)
    # With a flat coefficient the warp degenerates to the identity.
    flat = cl.smooth_preset(ramp=0.0)
    assert np.allclose(flat.y1(X), np.sin(np.pi * X), rtol=0, atol=1e-14)
    # Waves cross the stiff end faster, so the equal-travel-time warp
    # pushes the arch peak toward the soft end.
    peak = X[np.argmax(base.y1(X))]
    assert peak < 0.5


def test_rough_preset_shape_and_guards():
    data = cl.rough_preset()
    assert data.y1(0.0) == pytest.approx(0.0, abs=1e-14)
    assert np.all(data.history(X) == 0.0)
    # Corner singularity: one-sided slopes blow up near the kink.
    eps = 1e-6
    left = (data.y1(0.4) - data.y1(0.4 - eps)) / eps
    right = (data.y1(0.4 + eps) - data.y1(0.4)) / eps
    assert abs(left) > 50.0 and abs(right) > 50.0
    with pytest.raises(ValueError):
        cl.rough_preset(exponent=0.5)
    with pytest.raises(ValueError):
        cl.rough_preset(exponent=1.0)
    with pytest.raises(ValueError):
        cl.rough_preset(corner=0.0)


def test_equilibrium_and_zero_presets(model, small_grid):
    still = cl.sample_initial(zero_preset(), model, small_grid)
    assert np.all(still.to_vector() == 0.0)
    level = equilibrium_preset(level=0.3)
    state = cl.sample_initial(level, model, small_grid)
    assert np.allclose(state.y, 0.3, atol=1e-14)
    assert np.all(state.z == 0.0)
    assert cl.equilibrium_omega(state, model) == pytest.approx(0.3, rel=1e-13)


def test_profile_grammar():
    assert np.all(parse_profile("zero")(X) == 0.0)
    assert np.allclose(parse_profile("const: 2.5")(X), 2.5)
    p = parse_profile("poly: 1 0 2")
    assert np.allclose(p(X), 1.0 + 2.0 * X ** 2, rtol=1e-14)
    s = parse_profile("sin: 0 1")
    assert np.allclose(s(X), np.sin(2 * np.pi * X), atol=1e-14)
    c = parse_profile("cos: 1")
    assert np.allclose(c(X), 1.0 - np.cos(np.pi * X), atol=1e-14)
    assert c(0.0) == 0.0


@pytest.mark.parametrize("bad", [
    "wiggle: 1", "sin:", "poly: a b", "justtext",
])
def test_profile_grammar_rejects_garbage(bad):
    with pytest.raises(ConfigError):
        parse_profile(bad)


def test_initial_from_spec_presets_and_profiles():
    data = cl.initial_from_spec({"preset": "smooth", "scale": "0.5"})
    ref = cl.smooth_preset(scale=0.5)
    assert np.allclose(data.y1(X), ref.y1(X), rtol=1e-14)

    explicit = cl.initial_from_spec({"y0": "const: 0.2", "y1": "sin: 1"})
    assert np.allclose(explicit.y0(X), 0.2)
    assert np.allclose(explicit.y1(X), np.sin(np.pi * X), atol=1e-14)
    assert np.all(explicit.history(X) == 0.0)

    with pytest.raises(ConfigError, match="known presets"):
        cl.initial_from_spec({"preset": "fancy"})
    with pytest.raises(ConfigError, match="not a number"):
        cl.initial_from_spec({"preset": "smooth", "scale": "big"})
    with pytest.raises(ConfigError, match="rejected options"):
        cl.initial_from_spec({"preset": "smooth", "knob": "1.0"})
    assert set(PRESETS) == {"equilibrium", "zero", "smooth", "rough"}
