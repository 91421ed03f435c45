"""Model primitives: parameters, profit functions, Wald roots and the g kernel."""

from __future__ import annotations

import configparser
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

EXP_LIMIT = 700.0


class GritQuitError(Exception):
    """Base class for all package errors."""


class OverflowGuard(GritQuitError, OverflowError):
    pass


class Violation(GritQuitError, ValueError):
    """One violated model constraint."""


class OrderingViolation(Violation):
    pass


class NonViableMarket(Violation):
    pass


class NonConcaveProfit(Violation):
    pass


class InvalidParameter(Violation):
    pass


class ValidationError(GritQuitError, ValueError):
    """Raised by :func:`validate_params`; ``violations`` lists every failure."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"{type(v).__name__}: {v}" for v in self.violations))

    @property
    def kinds(self):
        return [type(v).__name__ for v in self.violations]


@dataclass(frozen=True)
class ModelParams:
    mu: float
    sigma: float
    r: float
    c: float
    R: float
    L: float

    def replace(self, **changes) -> "ModelParams":
        return ModelParams(**{**self.__dict__, **changes})


@dataclass(frozen=True)
class ProfitSpec:
    """Flow-profit function pi(q).

    The quadratic family is ``peak_value - curvature * (q - qbar)**2``. A custom
    spec carries its own evaluators for pi, pi' and pi''.
    """

    family: str = "quadratic"
    peak_value: float = 10.0
    curvature: float = 1.0
    qbar: float = 3.0
    custom: tuple[Callable, Callable, Callable] | None = field(default=None, compare=False)

    @classmethod
    def quadratic(cls, peak_value, curvature, qbar):
        return cls("quadratic", float(peak_value), float(curvature), float(qbar))

    @classmethod
    def from_callables(cls, pi, dpi, d2pi, qbar):
        return cls("custom", float(pi(qbar)), float("nan"), float(qbar), (pi, dpi, d2pi))

    def pi(self, q):
        if self.family == "custom":
            return self.custom[0](q)
        return self.peak_value - self.curvature * (np.asarray(q, dtype=float) - self.qbar) ** 2

    def dpi(self, q):
        if self.family == "custom":
            return self.custom[1](q)
        return -2.0 * self.curvature * (np.asarray(q, dtype=float) - self.qbar)

    def d2pi(self, q):
        if self.family == "custom":
            return self.custom[2](q)
        return np.full_like(np.asarray(q, dtype=float), -2.0 * self.curvature)

    def with_qbar(self, qbar: float) -> "ProfitSpec":
        """Move the peak to ``qbar`` keeping pi(0) and the curvature fixed.

        A larger peak location therefore also raises the peak value (market size).
        """
        if self.family != "quadratic":
            raise ValueError("qbar perturbation is only defined for the quadratic family")
        pi0 = self.peak_value - self.curvature * self.qbar**2
        return ProfitSpec.quadratic(pi0 + self.curvature * qbar**2, self.curvature, qbar)


@dataclass(frozen=True)
class GammaRoots:
    gamma1: float
    gamma2: float

    @property
    def product(self):
        return self.gamma1 * self.gamma2

    @property
    def total(self):
        return self.gamma1 + self.gamma2


BENCHMARK_PARAMS = ModelParams(mu=1.0, sigma=1.0, r=0.5, c=0.1, R=0.5, L=2.0)
BENCHMARK_PROFIT = ProfitSpec.quadratic(10.0, 1.0, 3.0)

# All three stages present (m0 > 0); used for the comparative-statics checks.
STAGED_PARAMS = ModelParams(mu=0.3, sigma=1.0, r=1.0, c=0.1, R=0.5, L=2.0)
STAGED_PROFIT = ProfitSpec.quadratic(10.0, 1.0, 5.0)


def validate_params(params: ModelParams, profit: ProfitSpec):
    """Return ``(params, profit)`` unchanged or raise :class:`ValidationError`."""
    v = []
    for name in ("mu", "sigma", "r", "c", "R", "L"):
        x = getattr(params, name)
        if not math.isfinite(x):
            v.append(InvalidParameter(f"{name} must be finite, got {x}"))
    for name in ("mu", "sigma", "r", "c"):
        x = getattr(params, name)
        if not x > 0:
            v.append(InvalidParameter(f"{name} must be > 0, got {x}"))
    if not params.R > params.c:
        v.append(OrderingViolation(f"restart cost R={params.R} must exceed flow cost c={params.c}"))
    if not params.L > params.R:
        v.append(OrderingViolation(f"launch cost L={params.L} must exceed restart cost R={params.R}"))

    qbar = profit.qbar
    if not (math.isfinite(qbar) and qbar > 0):
        v.append(NonConcaveProfit(f"qbar must be finite and > 0, got {qbar}"))
    else:
        if profit.family == "quadratic":
            if not profit.curvature > 0:
                v.append(NonConcaveProfit(f"curvature must be > 0, got {profit.curvature}"))
        elif profit.family == "custom":
            if profit.custom is None:
                v.append(NonConcaveProfit("custom profit requires pi, pi', pi'' evaluators"))
            else:
                grid = np.linspace(0.0, 2.0 * qbar, 401)
                if np.any(np.asarray(profit.d2pi(grid)) >= 0):
                    v.append(NonConcaveProfit("pi'' must be < 0 on [0, 2 qbar]"))
        else:
            v.append(NonConcaveProfit(f"unknown profit family {profit.family!r}"))
        if profit.family == "quadratic" or profit.custom is not None:
            slope = float(profit.dpi(qbar))
            if abs(slope) > 1e-10:
                v.append(NonConcaveProfit(f"pi'(qbar) = {slope:.3g}, expected 0"))
            peak = float(profit.pi(qbar))
            if not peak > params.L:
                v.append(NonViableMarket(f"pi(qbar)={peak} must exceed launch cost L={params.L}"))
    if v:
        raise ValidationError(v)
    return params, profit


def gamma_roots(params: ModelParams) -> GammaRoots:
    a = params.mu / params.sigma**2
    d = math.sqrt(a * a + 2.0 * params.r / params.sigma**2)
    # -a + d loses digits when a >> d - a; use the product identity instead.
    g2 = -a - d
    g1 = (-2.0 * params.r / params.sigma**2) / g2
    return GammaRoots(g1, g2)


def _exps(x, roots):
    x = np.asarray(x, dtype=float)
    g1, g2 = roots.gamma1, roots.gamma2
    if np.any(np.maximum(g1 * x, g2 * x) > EXP_LIMIT):
        raise OverflowGuard(f"|gamma * x| exceeds {EXP_LIMIT}; argument outside model range")
    return x, g1, g2


def g_eval(x, roots: GammaRoots):
    """g(x) = (g1 e^{g2 x} - g2 e^{g1 x}) / (g1 - g2); convex, g(0) = 1."""
    x, g1, g2 = _exps(x, roots)
    return 1.0 + (g1 * np.expm1(g2 * x) - g2 * np.expm1(g1 * x)) / (g1 - g2)


def g_minus_one(x, roots: GammaRoots):
    """g(x) - 1 without cancellation near x = 0."""
    x, g1, g2 = _exps(x, roots)
    return (g1 * np.expm1(g2 * x) - g2 * np.expm1(g1 * x)) / (g1 - g2)


def g_prime(x, roots: GammaRoots):
    x, g1, g2 = _exps(x, roots)
    return g1 * g2 * (np.expm1(g2 * x) - np.expm1(g1 * x)) / (g1 - g2)


def g_dprime(x, roots: GammaRoots):
    x, g1, g2 = _exps(x, roots)
    return g1 * g2 * (g2 * np.exp(g2 * x) - g1 * np.exp(g1 * x)) / (g1 - g2)


# -- configuration files -----------------------------------------------------

_PARAM_KEYS = ("mu", "sigma", "r", "c", "R", "L")
_PROFIT_KEYS = ("profit.family", "profit.peak_value", "profit.curvature", "profit.qbar")


def to_flat_dict(params: ModelParams, profit: ProfitSpec) -> dict:
    if profit.family != "quadratic":
        raise ValueError("only the quadratic profit family is serializable")
    out = {k: getattr(params, k) for k in _PARAM_KEYS}
    out.update({
        "profit.family": profit.family,
        "profit.peak_value": profit.peak_value,
        "profit.curvature": profit.curvature,
        "profit.qbar": profit.qbar,
    })
    return out


def from_flat_dict(d: dict, defaults: tuple[ModelParams, ProfitSpec] | None = None):
    """Build the model pair from a flat mapping; missing keys fall back to ``defaults``."""
    base_p, base_f = defaults or (BENCHMARK_PARAMS, BENCHMARK_PROFIT)
    unknown = set(d) - set(_PARAM_KEYS) - set(_PROFIT_KEYS)
    if unknown:
        raise ValidationError([InvalidParameter(f"unknown configuration key {k!r}") for k in sorted(unknown)])
    try:
        params = ModelParams(**{k: float(d.get(k, getattr(base_p, k))) for k in _PARAM_KEYS})
        family = str(d.get("profit.family", base_f.family)).strip().lower()
        if family != "quadratic":
            raise ValidationError([NonConcaveProfit(f"unsupported profit.family {family!r} in config")])
        profit = ProfitSpec.quadratic(
            float(d.get("profit.peak_value", base_f.peak_value)),
            float(d.get("profit.curvature", base_f.curvature)),
            float(d.get("profit.qbar", base_f.qbar)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError([InvalidParameter(str(exc))]) from exc
    return params, profit


def read_config_mapping(path) -> dict:
    """Raw flat mapping from a JSON file or a ``key = value`` file (chosen by suffix)."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        d = json.loads(text)
        if not isinstance(d, dict):
            raise ValidationError([InvalidParameter("JSON config must be an object")])
        return d
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string("[model]\n" + text)
    except configparser.Error as exc:
        raise ValidationError([InvalidParameter(f"unreadable config: {exc}")]) from exc
    return dict(cp["model"])


def load_config(path) -> tuple[ModelParams, ProfitSpec]:
    """Read a JSON file or a flat ``key = value`` file (chosen by suffix)."""
    return from_flat_dict(read_config_mapping(path))


def dump_config(params: ModelParams, profit: ProfitSpec, path) -> None:
    path = Path(path)
    d = to_flat_dict(params, profit)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(d, indent=2) + "\n")
    else:
        lines = [f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}" for k, v in d.items()]
        path.write_text("\n".join(lines) + "\n")
