"""Certified exponential-sum approximation of ``xi**(-alpha)`` on [1, inf).

The function ``xi**(-alpha)`` (0 < alpha < 1) is written as a Laplace-type
integral, remapped to the whole real line by the substitution
``t = log(1 + exp(tau))**(1/alpha)``, and discretized with the infinite
trapezoidal rule of step ``h``.  Truncating the lattice to indices
``j = -n_minus .. n_plus`` gives a finite sum

    xi**(-alpha)  ~=  sum_j  w_j * exp(-t_j * xi)

with positive weights ``w_j`` and increasing exponents ``t_j``.  Because the
integrand is analytic on a horizontal strip of half-width ``d`` and decays on
the real line, the total error admits an a-priori bound that is uniform over
``xi in [1, inf)``; everything needed to evaluate that bound is carried in
:class:`ExpSumParams`.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EPS_CAP",
    "ExpSum",
    "ExpSumParams",
    "build_expsum",
    "evaluate",
    "expsum_to_text",
    "integrand_g",
    "params_for_terms",
    "select_params",
    "strip_norm_bound",
    "total_error_bound",
    "truncation_bound",
]

# Largest accuracy target for which the closed-form error bound is certified.
EPS_CAP = math.exp(-math.pi**2 / 4)  # ~0.08480

_COS_PI_8 = math.cos(math.pi / 8)
_COS_PI_4 = math.cos(math.pi / 4)


@dataclass(frozen=True)
class ExpSumParams:
    """Quadrature configuration for one exponential sum.

    Attributes
    ----------
    alpha : float
        Exponent of the approximated power function, in (0, 1).
    eps : float
        Accuracy target that fixed the step size.
    d : float
        Half-width of the analyticity strip used by the bound,
        0 < d <= pi*alpha/8.
    h : float
        Trapezoidal step, h = 2*pi*d / log(1/eps).
    n_minus, n_plus : int
        Number of lattice points kept on the negative/positive side.
    beta : float
        Real-axis decay constant cos(2*d/alpha), at least cos(pi/4).
    """

    alpha: float
    eps: float
    d: float
    h: float
    n_minus: int
    n_plus: int
    beta: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not self.eps > 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        d_max = math.pi * self.alpha / 8.0
        if not 0.0 < self.d <= d_max * (1.0 + 1e-12):
            raise ValueError(f"d must satisfy 0 < d <= pi*alpha/8 = {d_max}, got {self.d}")
        h_expected = 2.0 * math.pi * self.d / math.log(1.0 / self.eps)
        if not math.isclose(self.h, h_expected, rel_tol=1e-10):
            raise ValueError(f"h must equal 2*pi*d/log(1/eps) = {h_expected}, got {self.h}")
        if self.n_minus < 0 or self.n_plus < 0:
            raise ValueError("truncation counts must be nonnegative")
        # The truncation counts may exceed the minimal certified values, never
        # undercut them (extra terms only shrink the dropped tails).
        if self.n_minus + 1e-9 < 2.0 * math.pi * self.d / self.h**2:
            raise ValueError("n_minus below the certified minimum 2*pi*d/h^2")
        n_plus_min = (2.0 * math.pi * self.d * self.h ** (-(self.alpha + 1.0) / self.alpha) / self.beta) ** self.alpha
        if self.n_plus + 1e-9 < n_plus_min:
            raise ValueError(f"n_plus below the certified minimum {n_plus_min}")
        beta_expected = math.cos(2.0 * self.d / self.alpha)
        if not math.isclose(self.beta, beta_expected, rel_tol=1e-12, abs_tol=1e-15):
            raise ValueError(f"beta must equal cos(2*d/alpha) = {beta_expected}, got {self.beta}")
        if self.beta < _COS_PI_4 - 1e-12:
            raise ValueError("beta must be at least cos(pi/4); decrease d")

    @property
    def n_terms(self) -> int:
        return self.n_minus + self.n_plus + 1

    @property
    def loose(self) -> bool:
        """True when eps exceeds the cap under which the closed-form bound is certified."""
        return self.eps > EPS_CAP


@dataclass(frozen=True)
class ExpSum:
    """Weights and exponents of a truncated quadrature sum.

    Arrays are indexed by the lattice position ``j = -n_minus .. n_plus`` in
    ascending order:

        weights[j]   = h / (alpha * Gamma(alpha)) / (1 + exp(-j*h))
        exponents[j] = log(1 + exp(j*h)) ** (1/alpha)
    """

    params: ExpSumParams
    weights: np.ndarray
    exponents: np.ndarray

    def __post_init__(self):
        n = self.params.n_terms
        if self.weights.shape != (n,) or self.exponents.shape != (n,):
            raise ValueError("weights/exponents must both have n_minus + n_plus + 1 entries")
        if not np.all(self.weights > 0.0):
            raise ValueError("weights must be positive")
        if not (np.all(self.exponents > 0.0) and np.all(np.diff(self.exponents) > 0.0)):
            raise ValueError("exponents must be positive and strictly increasing")

    @property
    def n_terms(self) -> int:
        return self.params.n_terms

    def __call__(self, xi):
        return evaluate(self, xi)


def integrand_g(tau, xi: float, alpha: float) -> complex:
    """Evaluate the remapped Laplace integrand at a (complex) point.

    Computes ``exp(-xi * log(1 + exp(tau))**(1/alpha)) / (1 + exp(-tau))``
    with principal branches throughout.

    Raises
    ------
    ValueError
        If ``|Im(tau)| >= pi``, where the integrand hits the pole line of the
        denominator and the branch cuts of the logarithm.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    tau = complex(tau)
    if abs(tau.imag) >= math.pi:
        raise ValueError(f"integrand is singular for |Im(tau)| >= pi, got Im = {tau.imag}")
    # log(1 + e^tau): for large positive real part factor out e^tau to avoid
    # overflow; the principal branches agree because |Im(tau)| < pi.
    if tau.real > 30.0:
        log1p_exp = tau + cmath.log(1.0 + cmath.exp(-tau))
    else:
        log1p_exp = cmath.log(1.0 + cmath.exp(tau))
    t = log1p_exp ** (1.0 / alpha) if log1p_exp != 0 else 0.0
    num = cmath.exp(-xi * t)
    if tau.real >= 0.0:
        return num / (1.0 + cmath.exp(-tau))
    # 1/(1 + e^-tau) = e^tau/(1 + e^tau): safe against overflow of e^-tau
    w = cmath.exp(tau)
    return num * w / (1.0 + w)


def select_params(alpha: float, eps: float, d: float | None = None) -> ExpSumParams:
    """Choose certified quadrature parameters for a target accuracy.

    Parameters
    ----------
    alpha : float
        Power-function exponent, in (0, 1).
    eps : float
        Target accuracy.  Values above ``EPS_CAP`` (~0.085) are accepted but
        flagged: the readable closed-form bound is not certified there and
        :func:`total_error_bound` falls back to the generic form.
    d : float, optional
        Strip half-width override, 0 < d <= pi*alpha/8.  Defaults to the
        maximum pi*alpha/8, which maximizes the quadrature decay rate.

    Returns
    -------
    ExpSumParams
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if not eps > 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    if eps >= 1.0:
        raise ValueError(f"eps must be below 1 for a meaningful step size, got {eps}")
    if d is None:
        d = math.pi * alpha / 8.0
    if eps > EPS_CAP:
        warnings.warn(
            f"eps = {eps:g} exceeds exp(-pi^2/4) ~ {EPS_CAP:.4f}; "
            "the closed-form error constant is not certified in this regime",
            stacklevel=2,
        )
    h, beta, n_minus, n_plus = _certified_counts(alpha, d, math.log(1.0 / eps))
    return ExpSumParams(alpha=alpha, eps=eps, d=d, h=h, n_minus=n_minus, n_plus=n_plus, beta=beta)


def _certified_counts(alpha: float, d: float, log_inv_eps: float):
    """Step size, decay constant and minimal truncation counts for one target."""
    h = 2.0 * math.pi * d / log_inv_eps
    beta = math.cos(2.0 * d / alpha)
    n_minus = math.ceil(2.0 * math.pi * d / h**2)
    n_plus = math.ceil((2.0 * math.pi * d * h ** (-(alpha + 1.0) / alpha) / beta) ** alpha)
    return h, beta, n_minus, n_plus


def params_for_terms(alpha: float, n_terms: int, d: float | None = None) -> ExpSumParams:
    """Choose certified parameters whose sum has exactly ``n_terms`` terms.

    The accuracy target is pushed as low as the term budget allows; when the
    integer ceilings of the minimal truncation counts do not land exactly on
    the budget, the remainder is spent on extra negative-side terms, which
    only shrink the dropped tail and leave the certified bound valid.

    The smallest reachable budget is 3 (one term on each side of j = 0).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if n_terms < 3:
        raise ValueError(f"n_terms must be at least 3, got {n_terms}")
    if d is None:
        d = math.pi * alpha / 8.0

    def total(log_inv_eps: float) -> int:
        _, _, n_minus, n_plus = _certified_counts(alpha, d, log_inv_eps)
        return n_minus + n_plus + 1

    lo, hi = 1e-3, 4.0
    while total(hi) <= n_terms:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total(mid) <= n_terms:
            lo = mid
        else:
            hi = mid
    h, beta, n_minus, n_plus = _certified_counts(alpha, d, lo)
    pad = n_terms - (n_minus + n_plus + 1)
    return ExpSumParams(
        alpha=alpha,
        eps=math.exp(-lo),
        d=d,
        h=h,
        n_minus=n_minus + pad,
        n_plus=n_plus,
        beta=beta,
    )


def build_expsum(params: ExpSumParams) -> ExpSum:
    """Materialize the weight/exponent arrays for a parameter set.

    ``log(1 + exp(j*h))`` is computed as ``j*h + log1p(exp(-j*h))`` on the
    positive side, where ``j*h`` reaches hundreds and ``exp(j*h)`` would
    overflow.
    """
    alpha, h = params.alpha, params.h
    j = np.arange(-params.n_minus, params.n_plus + 1, dtype=float)
    jh = j * h
    log1p_exp = np.where(jh > 0.0, jh + np.log1p(np.exp(-np.abs(jh))), np.log1p(np.exp(np.minimum(jh, 0.0))))
    weights = (h / (alpha * math.gamma(alpha))) / (1.0 + np.exp(-jh))
    exponents = log1p_exp ** (1.0 / alpha)
    return ExpSum(params=params, weights=weights, exponents=exponents)


def evaluate(es: ExpSum, xi):
    """Evaluate the exponential sum at ``xi`` (scalar or array).

    Terms are accumulated in ascending lattice order with compensated
    (Kahan) summation, so the result is reproducible and the rounding error
    stays within a couple of ulps of the sum of term magnitudes.  The
    approximation is certified for ``xi >= 1``; smaller positive arguments
    evaluate fine but carry no error guarantee.
    """
    xi_arr = np.asarray(xi, dtype=float)
    acc = np.zeros(xi_arr.shape)
    comp = np.zeros(xi_arr.shape)
    for w, t in zip(es.weights, es.exponents):
        term = w * np.exp(-t * xi_arr)
        y = term - comp
        new = acc + y
        comp = (new - acc) - y
        acc = new
    if np.isscalar(xi) or xi_arr.ndim == 0:
        return float(acc)
    return acc


def strip_norm_bound(alpha: float, xi: float) -> float:
    """Bound on the boundary integral of |g| over the analyticity strip.

    Returns ``2*(1 + log 2 + Gamma(alpha+1)/(xi*cos(pi/8))**alpha)``; the
    bound decreases monotonically in ``xi`` toward ``2*(1 + log 2)``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    return 2.0 * (1.0 + math.log(2.0) + math.gamma(alpha + 1.0) / (xi * _COS_PI_8) ** alpha)


def truncation_bound(params: ExpSumParams) -> float:
    """Bound on the tail dropped by truncating the lattice sum.

    ``exp(-n_minus*h)/h + alpha*exp(-beta*(n_plus*h)**(1/alpha))/(beta*h**(1/alpha))``.
    """
    alpha, h, beta = params.alpha, params.h, params.beta
    neg = math.exp(-params.n_minus * h) / h
    pos = alpha * math.exp(-beta * (params.n_plus * h) ** (1.0 / alpha)) / (beta * h ** (1.0 / alpha))
    return neg + pos


def total_error_bound(params: ExpSumParams) -> float:
    """Certified uniform error bound over ``xi in [1, inf)``.

    For ``eps <= EPS_CAP`` and the default strip width ``d = pi*alpha/8``
    this is the closed form

        2*[1 + log 2 + Gamma(alpha+1)/cos(pi/8)**alpha
             + cos(pi/4)**-1 * (4*log(1/eps)/(pi^2*alpha))**(1/alpha)] * eps.

    Otherwise the generic form

        (strip_norm_bound(alpha, 1) + 1/h + 1/(beta*h**(1/alpha))) * eps

    is returned; it is valid for every parameter set accepted by
    :class:`ExpSumParams` (the closed form absorbs the 1/h terms using the
    maximal strip width, so it certifies only that choice of ``d``).
    """
    alpha, eps = params.alpha, params.eps
    d_is_max = math.isclose(params.d, math.pi * alpha / 8.0, rel_tol=1e-12)
    if eps <= EPS_CAP and d_is_max:
        log_inv_eps = math.log(1.0 / eps)
        bracket = (
            1.0
            + math.log(2.0)
            + math.gamma(alpha + 1.0) / _COS_PI_8**alpha
            + (4.0 * log_inv_eps / (math.pi**2 * alpha)) ** (1.0 / alpha) / _COS_PI_4
        )
        return 2.0 * bracket * eps
    h, beta = params.h, params.beta
    return (strip_norm_bound(alpha, 1.0) + 1.0 / h + 1.0 / (beta * h ** (1.0 / alpha))) * eps


def expsum_to_text(es: ExpSum) -> str:
    """Serialize as two whitespace-separated columns, one ``weight exponent`` pair per line."""
    lines = [f"{w:.17e} {t:.17e}" for w, t in zip(es.weights, es.exponents)]
    return "\n".join(lines) + "\n"
