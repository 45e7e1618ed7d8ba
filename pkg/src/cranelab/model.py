"""Physical and control parameterization of the delayed-feedback crane cable.

A cable of unit length connects a motorized platform (mass ``m``, at x=0) to a
suspended load (mass ``M``, at x=1).  The platform is driven by a velocity
feedback ``-beta*v(t) + alpha*v(t - tau)`` acting through the platform mass,
so the closed loop carries a transport line of length ``tau`` holding the
delayed boundary velocity.  This module owns every scalar entering that
system: the cable stiffness coefficient ``a(x)``, the masses, the feedback
gains, and the weights of the energy inner product.  It also validates the
constraints the stability analysis needs (gain smallness, the admissible
window for the delay energy weight ``K``, positivity and monotonicity of
``a``) and reports each one with a margin.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ModelError",
    "ConfigError",
    "CableCoefficient",
    "physical_coefficient",
    "affine_coefficient",
    "tabulated_coefficient",
    "PhysicalParams",
    "ControlGains",
    "InnerProductWeights",
    "FixedConstants",
    "CraneModel",
    "ConstraintCheck",
    "ValidationReport",
    "validate_model",
    "config_sha256",
]

# Dense sample count used when a property of a(x) has to be checked
# numerically rather than analytically.
_COEFF_SAMPLES = 4001


class ModelError(ValueError):
    """A model constructor received parameters outside its admissible set."""


class ConfigError(ValueError):
    """A configuration file could not be parsed into a model or scenario."""


@dataclass(frozen=True)
class CableCoefficient:
    """Stiffness coefficient ``a(x)`` of the cable on [0, 1].

    ``kind`` is one of ``"physical"``, ``"affine"`` or ``"tabulated"``.  The
    physical coefficient comes from the static tension of a heavy cable with
    the load hanging below, ``a(x) = (M + 1 - x) * g``; it is positive but
    decreasing.  The affine coefficient ``a(x) = a0 + a1*x`` with ``a1 > 0``
    additionally satisfies the increasing-slope condition required by the
    decay analysis.  Tabulated coefficients interpolate user nodes linearly.
    """

    kind: str
    params: tuple[float, ...] = ()
    nodes: tuple[float, ...] | None = None
    values: tuple[float, ...] | None = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "physical":
            load_mass, gravity = self.params
            return (load_mass + 1.0 - x) * gravity
        if self.kind == "affine":
            a0, a1 = self.params
            return a0 + a1 * x
        if self.kind == "tabulated":
            return np.interp(x, self.nodes, self.values)
        raise ModelError(f"unknown coefficient kind {self.kind!r}")

    @property
    def a0(self) -> float:
        """Lower bound of a(x) on [0, 1], checked on a dense grid."""
        xs = np.linspace(0.0, 1.0, _COEFF_SAMPLES)
        return float(np.min(self(xs)))

    @property
    def slope_lower_bound(self) -> float:
        """Lower bound of a'(x), by dense finite differences."""
        xs = np.linspace(0.0, 1.0, _COEFF_SAMPLES)
        vals = self(xs)
        return float(np.min(np.diff(vals) / np.diff(xs)))

    @property
    def positive(self) -> bool:
        return self.a0 > 0.0

    @property
    def increasing(self) -> bool:
        """Whether a'(x) >= a1 > 0 holds; the decay analysis requires it.

        The physical coefficient has a'(x) = -g < 0 and therefore never
        satisfies this, which is why decay experiments default to the affine
        coefficient.
        """
        return self.slope_lower_bound > 0.0


def physical_coefficient(phys: "PhysicalParams") -> CableCoefficient:
    """Static-tension coefficient a(x) = (M + 1 - x) * g of a heavy cable."""
    if phys.g <= 0.0:
        raise ModelError("gravity must be positive for the physical coefficient")
    return CableCoefficient(kind="physical", params=(phys.M, phys.g))


def affine_coefficient(a0: float, a1: float) -> CableCoefficient:
    if a0 <= 0.0:
        raise ModelError("affine coefficient needs a0 > 0")
    if a1 <= 0.0:
        raise ModelError("affine coefficient needs a1 > 0")
    return CableCoefficient(kind="affine", params=(float(a0), float(a1)))


def tabulated_coefficient(nodes: Sequence[float], values: Sequence[float]) -> CableCoefficient:
    nodes = tuple(float(v) for v in nodes)
    values = tuple(float(v) for v in values)
    if len(nodes) != len(values) or len(nodes) < 2:
        raise ModelError("tabulated coefficient needs matching node/value lists, length >= 2")
    if nodes[0] != 0.0 or nodes[-1] != 1.0 or any(b <= a for a, b in zip(nodes, nodes[1:])):
        raise ModelError("tabulated nodes must increase strictly from 0 to 1")
    if min(values) <= 0.0:
        raise ModelError("tabulated coefficient values must be positive")
    return CableCoefficient(kind="tabulated", nodes=nodes, values=values)


@dataclass(frozen=True)
class PhysicalParams:
    """Masses and gravity.  The cable length is normalized to one."""

    m: float = 1.0
    M: float = 1.0
    g: float = 9.81

    def __post_init__(self):
        if self.m <= 0.0 or self.M <= 0.0:
            raise ModelError("platform and load masses must be positive")


@dataclass(frozen=True)
class ControlGains:
    """Feedback gains: instantaneous beta, delayed alpha, delay tau, weight K.

    ``K`` weighs the delay-line energy.  The contraction estimate needs
    ``|alpha| <= K <= 2*beta - |alpha|`` on top of ``|alpha| < beta``; the
    convergence and decay arguments need the strict version of the window.
    """

    alpha: float
    beta: float
    tau: float
    K: float

    def __post_init__(self):
        if self.beta <= 0.0:
            raise ModelError("instantaneous gain beta must be positive")
        if self.tau <= 0.0:
            raise ModelError("delay tau must be positive")
        if self.K <= 0.0:
            raise ModelError("delay energy weight K must be positive")

    @property
    def mu(self) -> float:
        """Net damping gain beta - alpha; positive whenever |alpha| < beta."""
        return self.beta - self.alpha


@dataclass(frozen=True)
class InnerProductWeights:
    """Weights (kappa, epsilon, delta, varpi) of the energy inner product.

    The inner product augments the plain energy form with varpi times the
    square of the conserved drift functional; varpi must stay below an
    admissible supremum depending on (a0, mu, kappa, epsilon, masses, K,
    tau, alpha) for the form to stay equivalent to the usual norm.
    """

    kappa: float
    epsilon: float
    delta: float
    varpi: float

    @staticmethod
    def admissible_sup(gains: ControlGains, a0: float, phys: PhysicalParams,
                       kappa: float, epsilon: float) -> float:
        mu = gains.mu
        if not 0.0 < kappa < mu:
            raise ModelError("kappa must lie strictly between 0 and mu = beta - alpha")
        if not 0.0 < epsilon < 1.0:
            raise ModelError("epsilon must lie strictly between 0 and 1")
        delta = kappa / (4.0 * (mu - kappa))
        bounds = [epsilon * a0 / (mu * (mu - kappa)), delta, delta / phys.m, delta / phys.M]
        if gains.alpha != 0.0:
            bounds.append(gains.K * delta / (gains.tau * gains.alpha ** 2))
        return min(bounds)

    @classmethod
    def defaults(cls, gains: ControlGains, a0: float, phys: PhysicalParams) -> "InnerProductWeights":
        """Deterministic default weights: kappa = mu/2, epsilon = 1/2, and
        varpi at half its admissible supremum."""
        mu = gains.mu
        if mu <= 0.0:
            raise ModelError("default weights need mu = beta - alpha > 0")
        kappa = mu / 2.0
        epsilon = 0.5
        delta = kappa / (4.0 * (mu - kappa))
        varpi = 0.5 * cls.admissible_sup(gains, a0, phys, kappa, epsilon)
        return cls(kappa=kappa, epsilon=epsilon, delta=delta, varpi=varpi)


@dataclass(frozen=True)
class FixedConstants:
    """Coefficients of the conserved drift functional.

    rho = c*int(z) + c1*xi + c2*eta + c3*int(u) + c4*y(0) is constant along
    solutions exactly when (c, c1, c2, c3, c4) = (1, m, M, tau*alpha,
    beta - alpha); no other normalization with c = 1 is conserved.
    """

    c: float
    c1: float
    c2: float
    c3: float
    c4: float

    @classmethod
    def for_model(cls, phys: PhysicalParams, gains: ControlGains) -> "FixedConstants":
        return cls(c=1.0, c1=phys.m, c2=phys.M,
                   c3=gains.tau * gains.alpha, c4=gains.mu)


@dataclass(frozen=True)
class CraneModel:
    """Complete parameter bundle: physics, gains, coefficient, weights."""

    phys: PhysicalParams
    gains: ControlGains
    coeff: CableCoefficient
    weights: InnerProductWeights

    @classmethod
    def build(cls, phys: PhysicalParams, gains: ControlGains, coeff: CableCoefficient,
              weights: InnerProductWeights | None = None) -> "CraneModel":
        if weights is None:
            weights = InnerProductWeights.defaults(gains, coeff.a0, phys)
        return cls(phys=phys, gains=gains, coeff=coeff, weights=weights)

    @property
    def constants(self) -> FixedConstants:
        return FixedConstants.for_model(self.phys, self.gains)

    @classmethod
    def from_config(cls, parser: configparser.ConfigParser) -> "CraneModel":
        return _model_from_parser(parser)

    @classmethod
    def from_file(cls, path: str | Path) -> "CraneModel":
        parser = read_config(path)
        return _model_from_parser(parser)


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[ConstraintCheck, ...]

    def __getitem__(self, name: str) -> ConstraintCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def contraction_ok(self) -> bool:
        """Constraints for the contraction property (non-strict window)."""
        names = ("gain_smallness", "gain_window_lower", "gain_window_upper",
                 "coefficient_positive", "weights_admissible")
        return all(self[n].passed for n in names)

    @property
    def strict_ok(self) -> bool:
        """Strict gain window, required by convergence and decay results."""
        return self.contraction_ok and self["gain_window_strict"].passed

    @property
    def decay_ready(self) -> bool:
        """Strict constraints plus the increasing-coefficient condition."""
        return self.strict_ok and self["coefficient_monotone"].passed

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            line = f"{status} {c.name} margin={c.margin:.6g}"
            if c.detail:
                line += f" ({c.detail})"
            out.append(line)
        return out


def validate_model(model: CraneModel) -> ValidationReport:
    """Check every standing constraint of a built model; see validate_params."""
    return validate_params(model.phys, model.gains, model.coeff, model.weights)


def validate_params(phys: PhysicalParams, gains: ControlGains,
                    coeff: CableCoefficient,
                    weights: InnerProductWeights | None = None) -> ValidationReport:
    """Check every standing constraint and report margins.

    Margins are signed: positive means satisfied with that much room,
    negative means violated by that much.  When ``weights`` is omitted the
    deterministic defaults are checked; gains outside the admissible window
    make those defaults impossible, which is itself reported as a failed
    check rather than an exception, so a report is produced for any
    constructible parameter set.
    """
    g = gains
    mu = g.mu
    abs_a = abs(g.alpha)
    a0 = coeff.a0
    slope = coeff.slope_lower_bound

    checks = [
        ConstraintCheck("gain_smallness", abs_a < g.beta, g.beta - abs_a,
                        "|alpha| < beta"),
        ConstraintCheck("gain_window_lower", abs_a <= g.K, g.K - abs_a,
                        "|alpha| <= K"),
        ConstraintCheck("gain_window_upper", g.K <= 2.0 * g.beta - abs_a,
                        2.0 * g.beta - abs_a - g.K, "K <= 2*beta - |alpha|"),
        ConstraintCheck("gain_window_strict",
                        abs_a < g.K < 2.0 * g.beta - abs_a,
                        min(g.K - abs_a, 2.0 * g.beta - abs_a - g.K),
                        "|alpha| < K < 2*beta - |alpha|"),
        ConstraintCheck("coefficient_positive", a0 > 0.0, a0, "a(x) >= a0 > 0"),
        ConstraintCheck("coefficient_monotone", slope > 0.0, slope,
                        "a'(x) >= a1 > 0, needed for decay experiments"),
    ]

    if weights is None and mu > 0.0:
        weights = InnerProductWeights.defaults(g, a0, phys)
    if weights is None:
        checks.append(ConstraintCheck("weights_admissible", False, mu / 2.0,
                                      "0 < kappa < mu needs beta > alpha"))
    else:
        w = weights
        weights_ok = True
        kappa_margin = min(w.kappa, mu - w.kappa)
        if not 0.0 < w.kappa < mu:
            weights_ok = False
        eps_margin = min(w.epsilon, 1.0 - w.epsilon)
        if not 0.0 < w.epsilon < 1.0:
            weights_ok = False
        if weights_ok:
            sup = InnerProductWeights.admissible_sup(g, a0, phys, w.kappa, w.epsilon)
            varpi_margin = min(w.varpi, sup - w.varpi)
            if not 0.0 < w.varpi < sup:
                weights_ok = False
        else:
            varpi_margin = float("-inf")
        checks.append(ConstraintCheck("weights_admissible", weights_ok,
                                      min(kappa_margin, eps_margin, varpi_margin),
                                      "0 < kappa < mu, 0 < epsilon < 1, 0 < varpi < sup"))
    checks.append(ConstraintCheck("masses_positive",
                                  phys.m > 0.0 and phys.M > 0.0,
                                  min(phys.m, phys.M)))
    checks.append(ConstraintCheck("delay_positive", g.tau > 0.0, g.tau))
    return ValidationReport(checks=tuple(checks))


# -- configuration files ----------------------------------------------------
#
# Model files are INI key-value files with sections [physical], [gains],
# [coefficient] and optionally [weights].  Scenario files used by the command
# line add further sections; those are parsed in cranelab.cli.  All values are
# SI units in decimal notation.

def read_config(path: str | Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep m/M and K case-distinct
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parser


def _get_float(parser, section, key, default=None) -> float:
    if not parser.has_option(section, key):
        if default is None:
            raise ConfigError(f"missing key {key!r} in section [{section}]")
        return default
    raw = parser.get(section, key)
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from exc


def _get_float_list(parser, section, key) -> list[float]:
    raw = parser.get(section, key)
    try:
        return [float(tok) for tok in raw.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number list") from exc


def params_from_config(parser: configparser.ConfigParser):
    """Parse the model sections into their parameter objects.

    Returns (phys, gains, coeff, weights) where weights is None when the
    config leaves them automatic.  Structural problems (missing sections,
    unparseable numbers, meaningless signs) raise ConfigError; admissibility
    of the gain window is NOT enforced here, so the pieces can be fed to
    validate_params for a diagnostic report.
    """
    for required in ("physical", "gains", "coefficient"):
        if not parser.has_section(required):
            raise ConfigError(f"config is missing the [{required}] section")
    phys = PhysicalParams(m=_get_float(parser, "physical", "m"),
                          M=_get_float(parser, "physical", "M"),
                          g=_get_float(parser, "physical", "g", 9.81))
    try:
        gains = ControlGains(alpha=_get_float(parser, "gains", "alpha"),
                             beta=_get_float(parser, "gains", "beta"),
                             tau=_get_float(parser, "gains", "tau"),
                             K=_get_float(parser, "gains", "K"))
    except ModelError as exc:
        raise ConfigError(str(exc)) from exc

    kind = parser.get("coefficient", "kind", fallback="affine").strip().lower()
    try:
        if kind == "physical":
            coeff = physical_coefficient(phys)
        elif kind == "affine":
            coeff = affine_coefficient(_get_float(parser, "coefficient", "a0"),
                                       _get_float(parser, "coefficient", "a1"))
        elif kind == "tabulated":
            coeff = tabulated_coefficient(_get_float_list(parser, "coefficient", "nodes"),
                                          _get_float_list(parser, "coefficient", "values"))
        else:
            raise ConfigError(f"unknown coefficient kind {kind!r}")
    except ModelError as exc:
        raise ConfigError(str(exc)) from exc

    weights = None
    if parser.has_section("weights"):
        kappa = parser.get("weights", "kappa", fallback="auto").strip()
        epsilon = parser.get("weights", "epsilon", fallback="auto").strip()
        varpi = parser.get("weights", "varpi", fallback="auto").strip()
        if (kappa, epsilon, varpi) != ("auto", "auto", "auto"):
            mu = gains.mu
            if mu <= 0.0:
                raise ConfigError("explicit weights need beta - alpha > 0")
            kap = mu / 2.0 if kappa == "auto" else float(kappa)
            eps = 0.5 if epsilon == "auto" else float(epsilon)
            try:
                sup = InnerProductWeights.admissible_sup(gains, coeff.a0, phys, kap, eps)
            except ModelError as exc:
                raise ConfigError(str(exc)) from exc
            vp = 0.5 * sup if varpi == "auto" else float(varpi)
            delta = kap / (4.0 * (mu - kap))
            weights = InnerProductWeights(kappa=kap, epsilon=eps, delta=delta, varpi=vp)
    return phys, gains, coeff, weights


def _model_from_parser(parser: configparser.ConfigParser) -> CraneModel:
    phys, gains, coeff, weights = params_from_config(parser)
    # Admissibility failures propagate as ModelError: the config parsed
    # fine, the parameters it names are just outside the usable window.
    return CraneModel.build(phys, gains, coeff, weights)


def config_sha256(path: str | Path) -> str:
    """Hash of the raw config bytes; embedded in every artifact."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
