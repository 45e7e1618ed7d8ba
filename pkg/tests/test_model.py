import numpy as np
import pytest

import cranelab as cl
from cranelab import ConfigError, ModelError


def test_gain_constructor_rejects_structural_nonsense():
    with pytest.raises(ModelError):
        cl.ControlGains(alpha=0.5, beta=0.0, tau=0.5, K=2.0)
    with pytest.raises(ModelError):
        cl.ControlGains(alpha=0.5, beta=2.0, tau=-1.0, K=2.0)
    with pytest.raises(ModelError):
        cl.ControlGains(alpha=0.5, beta=2.0, tau=0.5, K=0.0)


def test_gain_constructor_accepts_inadmissible_window():
    # alpha outside the window is a physics failure, not a type error;
    # validation reports it, construction must not.
    g = cl.ControlGains(alpha=3.0, beta=1.0, tau=0.5, K=2.0)
    assert g.mu == -2.0


def test_validation_default_desk_all_pass(model):
    report = cl.validate_model(model)
    assert report.all_passed
    assert report.strict_ok and report.contraction_ok and report.decay_ready
    for check in report.checks:
        assert check.margin > 0.0


def test_validation_names_window_violations():
    gains = cl.ControlGains(alpha=3.0, beta=1.0, tau=0.5, K=2.0)
    report = cl.validate_params(cl.PhysicalParams(), gains,
                                cl.affine_coefficient(1.0, 1.0))
    failed = {c.name for c in report.checks if not c.passed}
    assert "gain_smallness" in failed
    assert "weights_admissible" in failed
    assert not report.contraction_ok
    assert not report.strict_ok
    # margins are signed: the violated ones must be negative
    assert report["gain_smallness"].margin < 0.0


def test_validation_boundary_window_is_nonstrict():
    # K exactly at the upper edge 2*beta - |alpha| contracts but is not strict
    gains = cl.ControlGains(alpha=1.0, beta=2.0, tau=0.5, K=3.0)
    report = cl.validate_params(cl.PhysicalParams(), gains,
                                cl.affine_coefficient(1.0, 1.0))
    assert report.contraction_ok
    assert not report["gain_window_strict"].passed
    assert not report.strict_ok


def test_conserved_functional_constants(model):
    c = model.constants
    assert c.c == 1.0
    assert c.c1 == model.phys.m
    assert c.c2 == model.phys.M
    assert c.c3 == model.gains.tau * model.gains.alpha
    assert c.c4 == model.gains.mu


def test_affine_coefficient_guards():
    with pytest.raises(ModelError):
        cl.affine_coefficient(0.0, 1.0)
    with pytest.raises(ModelError):
        cl.affine_coefficient(1.0, -0.5)
    coeff = cl.affine_coefficient(2.0, 0.5)
    x = np.linspace(0.0, 1.0, 7)
    assert np.allclose(coeff(x), 2.0 + 0.5 * x)


def test_physical_coefficient_fails_monotone_check():
    """Static cable tension decreases toward the load, so the increasing
    coefficient hypothesis of the decay experiments cannot hold for it."""
    phys = cl.PhysicalParams(m=1.0, M=2.0, g=9.81)
    coeff = cl.physical_coefficient(phys)
    report = cl.validate_params(phys, cl.ControlGains(1.0, 2.0, 0.5, 2.0), coeff)
    assert not report["coefficient_monotone"].passed
    assert report["coefficient_positive"].passed
    assert not report.decay_ready


def test_tabulated_coefficient_interpolates():
    coeff = cl.tabulated_coefficient([0.0, 0.5, 1.0], [1.0, 1.5, 2.0])
    assert coeff(0.25) == pytest.approx(1.25)
    assert coeff.a0 == pytest.approx(1.0)


def test_weights_defaults_sit_inside_admissible_region(model):
    w = model.weights
    g = model.gains
    sup = cl.InnerProductWeights.admissible_sup(g, model.coeff.a0, model.phys,
                                                w.kappa, w.epsilon)
    assert 0.0 < w.kappa < g.mu
    assert 0.0 < w.epsilon < 1.0
    assert 0.0 < w.varpi < sup
    assert w.varpi == pytest.approx(0.5 * sup)


def test_admissible_sup_is_the_minimum_of_the_bounds(model):
    g, phys = model.gains, model.phys
    kappa, eps = 0.5, 0.5
    mu = g.mu
    delta = kappa / (4.0 * (mu - kappa))
    manual = min(eps * model.coeff.a0 / (mu * (mu - kappa)), delta,
                 delta / phys.m, delta / phys.M,
                 g.K * delta / (g.tau * g.alpha ** 2))
    assert cl.InnerProductWeights.admissible_sup(
        g, model.coeff.a0, phys, kappa, eps) == pytest.approx(manual)


CONFIG = """\
[physical]
m = 1.5
M = 2.5
g = 9.81

[gains]
alpha = 0.8
beta = 2.0
tau = 0.4
K = 1.5

[coefficient]
kind = affine
a0 = 1.0
a1 = 0.5
"""


def test_config_round_trip_preserves_case(tmp_path):
    path = tmp_path / "model.ini"
    path.write_text(CONFIG)
    model = cl.CraneModel.from_file(path)
    # m and M are distinct keys and must not be case-folded together
    assert model.phys.m == 1.5
    assert model.phys.M == 2.5
    assert model.gains.K == 1.5
    assert model.gains.alpha == 0.8


def test_config_missing_section(tmp_path):
    path = tmp_path / "broken.ini"
    path.write_text("[physical]\nm = 1.0\nM = 1.0\n")
    with pytest.raises(ConfigError):
        cl.CraneModel.from_file(path)


def test_config_bad_number(tmp_path):
    path = tmp_path / "broken.ini"
    path.write_text(CONFIG.replace("alpha = 0.8", "alpha = fast"))
    with pytest.raises(ConfigError):
        cl.CraneModel.from_file(path)


def test_config_unknown_coefficient_kind(tmp_path):
    path = tmp_path / "broken.ini"
    path.write_text(CONFIG.replace("kind = affine", "kind = quadratic"))
    with pytest.raises(ConfigError):
        cl.CraneModel.from_file(path)


def test_config_inadmissible_gains_build_raises_model_error(tmp_path):
    path = tmp_path / "inadmissible.ini"
    path.write_text(CONFIG.replace("alpha = 0.8", "alpha = 3.0"))
    with pytest.raises(ModelError):
        cl.CraneModel.from_file(path)
    # but the pieces parse fine, for diagnostic reporting
    phys, gains, coeff, weights = cl.params_from_config(cl.read_config(path))
    assert gains.alpha == 3.0 and weights is None


def test_config_sha256_tracks_content(tmp_path):
    p1 = tmp_path / "a.ini"
    p2 = tmp_path / "b.ini"
    p1.write_text(CONFIG)
    p2.write_text(CONFIG)
    assert cl.config_sha256(p1) == cl.config_sha256(p2)
    assert len(cl.config_sha256(p1)) == 64
    p2.write_text(CONFIG + "\n# trailing comment\n")
    assert cl.config_sha256(p1) != cl.config_sha256(p2)
