"""Aranda-Ordaz transformation family and the GLM link built from it.

W_lambda(theta) = ((1 - theta)^-lambda - 1) / lambda for 0 < lambda <= 1 and
-log(1 - theta) at lambda = 0. Writing a = -log1p(-theta) turns the family into
expm1(lambda * a) / lambda, which is continuous in lambda and free of the
cancellation the piecewise form suffers near lambda = 0.

Every function accepts a scalar or a numpy array; scalars come back as float.
"""

import numpy as np
from scipy.special import exprel

from errors import DomainError

MEAN_CLAMP = 1e-12

# Below this, log1p(t) / t is replaced by its series 1 - t/2 + t^2/3
LOG1P_SERIES = 1e-8


def validate_lambda(lam: float) -> float:
    """Return lambda as float, rejecting anything outside [0, 1]."""
    value = float(lam)
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"lambda must lie in [0,1], got {lam!r}")
    return value


def _probabilities(theta, name: str = "theta") -> np.ndarray:
    arr = np.asarray(theta, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError(f"{name} must lie strictly inside (0,1)")
    return arr


def _finite_or_infinite(eta) -> np.ndarray:
    arr = np.asarray(eta, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("eta must not be NaN")
    return arr


def _result(arr: np.ndarray, like):
    return float(arr) if np.ndim(like) == 0 else arr


def expm1_over(lam: float, x) -> np.ndarray:
    """expm1(lam * x) / lam; exactly x at lam = 0 and for subnormal lam."""
    x = np.asarray(x, dtype=float)
    return x * exprel(lam * x)


def log1p_over(lam: float, x) -> np.ndarray:
    """log1p(lam * x) / lam for x >= 0; exactly x at lam = 0, inf for x = inf."""
    x = np.asarray(x, dtype=float)
    if lam == 0.0:
        return x
    t = lam * x
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return np.where(
            t < LOG1P_SERIES, x * (1.0 - t / 2.0 + t * t / 3.0), np.log1p(t) / lam
        )


def w_transform(theta, lam: float):
    """W_lambda(theta), strictly positive for 0 < theta < 1."""
    lam = validate_lambda(lam)
    a = -np.log1p(-_probabilities(theta))
    return _result(expm1_over(lam, a), theta)


def w_inverse(w, lam: float):
    """theta with W_lambda(theta) = w, for w > 0."""
    lam = validate_lambda(lam)
    arr = np.asarray(w, dtype=float)
    if not np.all(arr > 0.0):
        raise DomainError("w must be strictly positive")
    return _result(-np.expm1(-log1p_over(lam, arr)), w)


def w_derivative(theta, lam: float, order: int = 1):
    """First or second derivative of W_lambda in theta.

    W' = (1 - theta)^-(lambda + 1) and W'' = (lambda + 1)(1 - theta)^-(lambda + 2);
    W'' > 0 everywhere, so W_lambda is convex on (0, 1).
    """
    lam = validate_lambda(lam)
    t = _probabilities(theta)
    log_survival = np.log1p(-t)
    if order == 1:
        out = np.exp(-(lam + 1.0) * log_survival)
    elif order == 2:
        out = (lam + 1.0) * np.exp(-(lam + 2.0) * log_survival)
    else:
        raise DomainError(f"order must be 1 or 2, got {order!r}")
    return _result(out, theta)


def link(theta, lam: float):
    """eta = log W_lambda(theta); logit at lambda = 1, cloglog at lambda = 0."""
    w = w_transform(theta, lam)
    return _result(np.log(w), theta)


def _cumulative_hazard(eta: np.ndarray, lam: float) -> np.ndarray:
    """-log(1 - theta) at eta, i.e. log1p(lambda e^eta) / lambda"""
    with np.errstate(over="ignore"):
        return log1p_over(lam, np.exp(eta))


def inverse_link_complement(eta, lam: float):
    """1 - inverse_link(eta), evaluated without forming the difference."""
    lam = validate_lambda(lam)
    arr = _finite_or_infinite(eta)
    return _result(np.exp(-_cumulative_hazard(arr, lam)), eta)


def clamp_mean(mu, eps: float = MEAN_CLAMP):
    """Clip probabilities to [eps, 1 - eps]."""
    out = np.clip(np.asarray(mu, dtype=float), eps, 1.0 - eps)
    return _result(out, mu)


def inverse_link(eta, lam: float, clamp: bool = False, eps: float = MEAN_CLAMP):
    """theta = 1 - (1 + lambda e^eta)^(-1/lambda), or 1 - exp(-e^eta) at lambda = 0.

    Saturates to 0 or 1 for extreme eta; ``clamp=True`` pulls the result into
    [eps, 1 - eps] as the fitter requires.
    """
    lam = validate_lambda(lam)
    arr = _finite_or_infinite(eta)
    theta = -np.expm1(-_cumulative_hazard(arr, lam))
    if clamp:
        theta = np.clip(theta, eps, 1.0 - eps)
    return _result(theta, eta)


def dmu_deta(eta, lam: float):
    """d theta / d eta, evaluated in log space so large |eta| underflows to 0."""
    lam = validate_lambda(lam)
    arr = _finite_or_infinite(eta)
    with np.errstate(over="ignore", invalid="ignore"):
        log_d = arr - _cumulative_hazard(arr, lam) - np.log1p(lam * np.exp(arr))
        out = np.exp(log_d)
    out = np.where(np.isnan(out), 0.0, out)
    return _result(out, eta)


class ArandaOrdazLink:
    """Link object handed to the IRLS fitter.

    Bundles link, inverse and derivative for one fixed lambda, in the shape
    Bernoulli GLM families usually expose.
    """

    def __init__(self, lam: float, mean_clamp: float = MEAN_CLAMP):
        self.lam = validate_lambda(lam)
        if not 0.0 < mean_clamp < 0.5:
            raise DomainError(f"mean_clamp must lie in (0, 0.5), got {mean_clamp!r}")
        self.mean_clamp = float(mean_clamp)

    @classmethod
    def logit(cls) -> "ArandaOrdazLink":
        return cls(1.0)

    @classmethod
    def cloglog(cls) -> "ArandaOrdazLink":
        return cls(0.0)

    @property
    def name(self) -> str:
        if self.lam == 1.0:
            return "logit"
        if self.lam == 0.0:
            return "cloglog"
        return f"aranda-ordaz({self.lam:g})"

    def link(self, mu):
        return link(mu, self.lam)

    def inverse(self, eta, clamp: bool = True):
        return inverse_link(eta, self.lam, clamp=clamp, eps=self.mean_clamp)

    def inverse_complement(self, eta):
        return inverse_link_complement(eta, self.lam)

    def dmu_deta(self, eta):
        return dmu_deta(eta, self.lam)

    @staticmethod
    def variance(mu):
        return mu * (1.0 - mu)

    def __repr__(self) -> str:
        return f"ArandaOrdazLink(lam={self.lam!r})"
