"""Closed forms, pmfs/pdfs, and controlled-accuracy integrals for the
expected site frequency spectrum under rescue dynamics.

Index conventions: ``i`` counts resistant carriers of a mutation; ``t`` is
the log-time multiplier (observation at t * ln N); ``x`` parameterizes
windows of carrier counts around x * e^(lambda1 * t_N).

Every numerically evaluated quantity is returned as a TheoryValue carrying
a certified absolute error bound (series tail or quadrature estimate plus
truncation tail).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

from scipy.integrate import quad

from rescue_sfs.params import DerivedParams, ModelParams, derive

DEFAULT_TOL = 1e-10


class QuadratureError(RuntimeError):
    """Requested tolerance could not be certified."""


@dataclass(frozen=True)
class TheoryValue:
    """A numeric result with a certified absolute error bound."""

    value: float
    abs_error_bound: float = 0.0
    kind: str = "exact"  # exact | quadrature | asymptotic

    def __post_init__(self) -> None:
        if self.abs_error_bound < 0:
            raise ValueError("abs_error_bound must be >= 0")
        if self.kind not in ("exact", "quadrature", "asymptotic"):
            raise ValueError(f"unknown kind {self.kind!r}")

    def __float__(self) -> float:
        return self.value


class PairedValue(NamedTuple):
    """An exact finite-N value paired with its large-N asymptote."""

    exact: float
    asymptotic: float


@dataclass(frozen=True)
class SfsTheoryCurve:
    """A theory curve over strictly increasing indices (i or x)."""

    indices: tuple[float, ...]
    values: tuple[TheoryValue, ...]
    formula_id: str
    asymptotic: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values must have equal length")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("indices must be strictly increasing")
        if self.asymptotic is not None and len(self.asymptotic) != len(self.indices):
            raise ValueError("asymptotic column must match indices")

    def rows(self):
        asym = self.asymptotic or tuple(float("nan") for _ in self.indices)
        for idx, tv, a in zip(self.indices, self.values, asym):
            yield (idx, tv.value, a, tv.abs_error_bound, self.formula_id)


# ---------------------------------------------------------------------------
# Quadrature plumbing
# ---------------------------------------------------------------------------


def quad_semi_infinite(
    integrand: Callable[[float], float],
    tol: float = DEFAULT_TOL,
    tail_bound: Callable[[float], float] | None = None,
    s_max: float | None = None,
) -> TheoryValue:
    """Integrate a nonnegative-decaying integrand on (0, inf).

    ``tail_bound(s)`` must bound the integral of |integrand| over (s, inf);
    the truncation point is grown until the tail is below tol/2, then
    adaptive Gauss-Kronrod handles [0, s_max] to tol/2.
    """
    if s_max is None:
        if tail_bound is None:
            raise ValueError("either s_max or tail_bound is required")
        s_max = 1.0
        while tail_bound(s_max) > tol / 2:
            s_max *= 2.0
            if s_max > 1e9:
                raise QuadratureError("tail bound does not fall below tol/2")
    tail = tail_bound(s_max) if tail_bound is not None else 0.0
    value, err = quad(integrand, 0.0, s_max, epsabs=tol / 2, epsrel=1e-11, limit=400)
    bound = err + tail
    if bound > tol:
        raise QuadratureError(f"requested tol {tol:g}, achieved bound {bound:g}")
    return TheoryValue(value, bound, "quadrature")


def _quad_finite(integrand, lo: float, hi: float, tol: float) -> tuple[float, float]:
    value, err = quad(integrand, lo, hi, epsabs=tol, epsrel=1e-11, limit=400)
    if err > max(tol, abs(value) * 1e-8):
        raise QuadratureError(f"requested tol {tol:g}, achieved bound {err:g}")
    return value, err


# ---------------------------------------------------------------------------
# Shape integrals of the single-clone SFS
# ---------------------------------------------------------------------------


def shape_integral(i: int, rho: float, tol: float = 1e-12) -> TheoryValue:
    """Integral of (1-y) y^(i-1) / (1 - rho y) over [0, 1].

    The limiting per-founder SFS shape factor.  Evaluated by the series
    sum_k rho^k / ((i+k)(i+k+1)) with a certified geometric tail bound.
    """
    if i < 1:
        raise ValueError(f"requires i >= 1, got {i}")
    if not 0 <= rho < 1:
        raise ValueError(f"requires 0 <= rho < 1, got {rho}")
    if rho == 0.0:
        return TheoryValue(1.0 / (i * (i + 1)), 0.0, "exact")
    total = 0.0
    rk = 1.0
    k = 0
    while True:
        total += rk / ((i + k) * (i + k + 1))
        rk *= rho
        k += 1
        tail = rk / ((i + k) * (i + k + 1) * (1.0 - rho))
        if tail < tol:
            return TheoryValue(total, tail, "quadrature")


def shape_integral_truncated(i: int, x: float, rho: float, tol: float = 1e-12) -> TheoryValue:
    """Integral of (1-y) y^(i-1) / (1 - rho y) over [0, (x-1)/(x-rho)].

    Defined for x >= 1 (zero at x = 1); tends to shape_integral(i, rho) as
    x -> inf.  Series in rho with the upper limit's powers.
    """
    if i < 1:
        raise ValueError(f"requires i >= 1, got {i}")
    if not 0 <= rho < 1:
        raise ValueError(f"requires 0 <= rho < 1, got {rho}")
    if x == math.inf:
        return shape_integral(i, rho, tol)
    if x < 1.0:
        raise ValueError(f"requires x >= 1, got {x}")
    y_up = (x - 1.0) / (x - rho)
    if y_up <= 0.0:
        return TheoryValue(0.0, 0.0, "exact")
    # term_k = rho^k [ y^(i+k)/(i+k) - y^(i+k+1)/(i+k+1) ]
    total = 0.0
    rk = y_up**i
    k = 0
    while True:
        total += rk * (1.0 / (i + k) - y_up / (i + k + 1))
        rk *= rho * y_up
        k += 1
        tail = rk / ((i + k) * (1.0 - rho * y_up))
        if tail < tol:
            return TheoryValue(total, tail, "quadrature")


def clone_size_pmf_scaled(i: int, y: float, b1: float, d1: float) -> float:
    """P(linear birth-death clone of age u has size i) at scale y = e^(-lambda1 u):

    (lambda1/b1)^2 y (1-y)^(i-1) / (1 - (d1/b1) y)^(i+1).
    """
    if i < 1:
        raise ValueError(f"requires i >= 1, got {i}")
    if not 0 < y <= 1:
        raise ValueError(f"requires 0 < y <= 1, got {y}")
    lam1 = b1 - d1
    rho = d1 / b1
    if i == 1:
        return (lam1 / b1) ** 2 * y / (1.0 - rho * y) ** 2
    log_val = (i - 1) * math.log1p(-y) - (i + 1) * math.log1p(-rho * y)
    return (lam1 / b1) ** 2 * y * math.exp(log_val)


def clone_size_pmf(i: int, u: float, b1: float, d1: float) -> float:
    """Classical linear birth-death size law from one founder (Harris form)."""
    if u < 0:
        raise ValueError(f"requires u >= 0, got {u}")
    return clone_size_pmf_scaled(i, math.exp(-(b1 - d1) * u), b1, d1)


def clone_extinction_prob(u: float, b1: float, d1: float) -> float:
    """P(the clone of one founder is extinct by age u)."""
    if u < 0:
        raise ValueError(f"requires u >= 0, got {u}")
    lam1 = b1 - d1
    e = math.exp(-lam1 * u)
    return d1 * (1.0 - e) / (b1 - d1 * e)


def single_clone_sfs(
    i: int, t: float, b1: float, d1: float, omega: float, tol: float = 1e-12
) -> TheoryValue:
    """Expected number of mutations carried by exactly i cells at time t in
    a clone grown from one founder: omega e^(lambda1 t) h_i(e^(lambda1 t))."""
    if t < 0:
        raise ValueError(f"requires t >= 0, got {t}")
    if omega == 0.0 or t == 0.0:
        return TheoryValue(0.0, 0.0, "exact")
    lam1 = b1 - d1
    growth = math.exp(lam1 * t)
    h = shape_integral_truncated(i, growth, d1 / b1, tol)
    return TheoryValue(omega * growth * h.value, omega * growth * h.abs_error_bound, h.kind)


def single_clone_sfs_asymptotic(i: int, t: float, b1: float, d1: float, omega: float) -> float:
    """Large-time form omega e^(lambda1 t) I(i)."""
    return omega * math.exp((b1 - d1) * t) * shape_integral(i, d1 / b1).value


# ---------------------------------------------------------------------------
# Founder generation / appearance-time laws
# ---------------------------------------------------------------------------


def generation_pmf(dp: DerivedParams, g: int) -> float:
    """Generation of the founder given exactly one founder: geometric(x_n)."""
    if g < 1:
        raise ValueError(f"requires g >= 1, got {g}")
    return dp.x_n * (1.0 - dp.x_n) ** (g - 1)


def appearance_time_pdf(dp: DerivedParams, t: float) -> float:
    """Appearance time of the founder given exactly one founder:
    exponential with rate delta0 * x_n."""
    if t < 0:
        raise ValueError(f"requires t >= 0, got {t}")
    rate = dp.delta0 * dp.x_n
    return rate * math.exp(-rate * t)


def generation_pmf_any(dp: DerivedParams, g: int) -> float:
    """Generation of a uniformly chosen founder given at least one founder.

    Closed form in p = p_n and pt = p_tilde_n = (1-x_n)/2.
    """
    if g < 1:
        raise ValueError(f"requires g >= 1, got {g}")
    p, pt = dp.p_n, dp.p_tilde_n
    return (
        2.0 ** (g - 1)
        / (p - pt)
        * ((p**g - pt**g) / g - 2.0 * (p ** (g + 1) - pt ** (g + 1)) / (g + 1))
    )


def appearance_time_pdf_any(dp: DerivedParams, t: float) -> float:
    """Appearance time of a uniformly chosen founder given at least one.

    Gamma mixture of generation_pmf_any; the closed form is 0/0 at t -> 0,
    handled by a second-order expansion for tiny t delta0 (p - pt).
    """
    if t < 0:
        raise ValueError(f"requires t >= 0, got {t}")
    p, pt, d0 = dp.p_n, dp.p_tilde_n, dp.delta0
    eps = 2.0 * t * d0 * (p - pt)
    front = math.exp(-t * d0 * (1.0 - 2.0 * p))
    if eps < 1e-6:
        # bracket/(2t(p-pt)) = delta0 [ (1-p-pt) + eps (pt - 1/2 + (p-pt)/3) + O(eps^2) ]
        return front * d0 * ((1.0 - p - pt) + eps * (pt - 0.5 + (p - pt) / 3.0))
    one_minus_en = -math.expm1(-eps)  # 1 - e_n without cancellation
    bracket = one_minus_en * (1.0 + 1.0 / (t * d0)) - 2.0 * (p - pt * (1.0 - one_minus_en))
    return front * bracket / (2.0 * t * (p - pt))


# ---------------------------------------------------------------------------
# Founder counts
# ---------------------------------------------------------------------------


def prob_one_ancestral(dp: DerivedParams) -> PairedValue:
    """P(exactly one ancestral resistant cell in one root's progeny)."""
    x, gn = dp.x_n, dp.gamma_n
    exact = gn * (1.0 - x) / (x * (1.0 - gn))
    asym = 2.0 * dp.b0 * gn / dp.lambda0
    return PairedValue(exact, asym)


def multi_ancestral_mean(dp: DerivedParams) -> PairedValue:
    """Expected number of ancestral resistant cells in one root's progeny,
    counting only progenies with two or more of them: sum_{k>=2} k P(A_k)."""
    p, x, b, gn = dp.p_n, dp.x_n, dp.beta_n, dp.gamma_n
    exact = b / (1.0 - gn) * ((1.0 - p) / (1.0 - 2.0 * p) - (1.0 - p) / x)
    asym = 2.0 * dp.b0 * dp.delta0**2 / dp.lambda0**3 * gn**2
    return PairedValue(exact, asym)


def ancestral_count_mean(params: ModelParams) -> PairedValue:
    """Expected total number of ancestral resistant cells over the run."""
    gn = params.gamma_n
    lam0 = params.d0 - params.b0
    exact = 2.0 * params.b0 * gn * params.n_init / (lam0 + 2.0 * gn * params.b0)
    asym = 2.0 * params.b0 * params.gamma / lam0 * params.n_init ** (1.0 - params.alpha)
    return PairedValue(exact, asym)


# ---------------------------------------------------------------------------
# Window weight functions (large-family SFS)
# ---------------------------------------------------------------------------


def _double_exp_smax(a: float, lam1: float, exponent_target: float = 45.0) -> float:
    # s beyond which the factor e^(-a e^(lambda1 s)) is below e^-45
    return max(1.0, math.log(exponent_target / a) / lam1)


def window_weight_resistant(x: float, dp: DerivedParams, tol: float = DEFAULT_TOL) -> TheoryValue:
    """Weight of resistant-origin mutations carried by more than
    x e^(lambda1 t_N) cells:

    (2/(lambda0+lambda1)) Int_0^inf (1 - e^(-(lambda0+lambda1)s)) e^(lambda1 s)
    e^(-x (lambda1/b1) e^(lambda1 s)) ds.

    Positive and strictly decreasing in x (sign-normalized magnitude).
    """
    if x <= 0:
        raise ValueError(f"requires x > 0, got {x}")
    lam0, lam1 = dp.lambda0, dp.lambda1
    a = x * lam1 / dp.b1
    pref = 2.0 / (lam0 + lam1)

    def f(s: float) -> float:
        return pref * (1.0 - math.exp(-(lam0 + lam1) * s)) * math.exp(lam1 * s - a * math.exp(lam1 * s))

    def tail(s: float) -> float:
        # integrand <= pref e^(lam1 s) e^(-a e^(lam1 s)); exact tail integral
        return pref * math.exp(-a * math.exp(lam1 * s)) / (a * lam1)

    return quad_semi_infinite(f, tol, tail_bound=tail, s_max=_double_exp_smax(a, lam1))


def window_weight_sensitive(x: float, dp: DerivedParams, tol: float = DEFAULT_TOL) -> TheoryValue:
    """Weight of sensitive-origin (hitch-hiking) mutations carried by more
    than x e^(lambda1 t_N) cells:

    (1/b1) Int_0^inf (1 + 2 b0 s) e^(-lambda0 s) e^(-x (lambda1/b1) e^(lambda1 s)) ds.
    """
    if x <= 0:
        raise ValueError(f"requires x > 0, got {x}")
    b0, b1 = dp.b0, dp.b1
    lam0, lam1 = dp.lambda0, dp.lambda1
    a = x * lam1 / b1

    def f(s: float) -> float:
        return (1.0 + 2.0 * b0 * s) * math.exp(-lam0 * s - a * math.exp(lam1 * s)) / b1

    def tail(s: float) -> float:
        damp = math.exp(-a * math.exp(lam1 * s))
        # Int_s^inf (1+2 b0 u) e^(-lam0 u) du in closed form
        rest = math.exp(-lam0 * s) * ((1.0 + 2.0 * b0 * s) / lam0 + 2.0 * b0 / lam0**2)
        return damp * rest / b1

    return quad_semi_infinite(f, tol, tail_bound=tail, s_max=_double_exp_smax(a, lam1))


def window_weight_resistant_slope(
    x: float, dp: DerivedParams, tol: float = DEFAULT_TOL
) -> TheoryValue:
    """Magnitude of the x-derivative of window_weight_resistant:

    (2 lambda1/(b1 (lambda0+lambda1))) Int_0^inf (1 - e^(-(lambda0+lambda1)s))
    e^(2 lambda1 s) e^(-x (lambda1/b1) e^(lambda1 s)) ds.
    """
    if x <= 0:
        raise ValueError(f"requires x > 0, got {x}")
    lam0, lam1 = dp.lambda0, dp.lambda1
    a = x * lam1 / dp.b1
    pref = 2.0 * lam1 / (dp.b1 * (lam0 + lam1))

    def f(s: float) -> float:
        return pref * (1.0 - math.exp(-(lam0 + lam1) * s)) * math.exp(
            2.0 * lam1 * s - a * math.exp(lam1 * s)
        )

    def tail(s: float) -> float:
        # Int w e^(-a w) dw / lam1 over w >= e^(lam1 s), in closed form
        w = math.exp(lam1 * s)
        return pref * (w / a + 1.0 / a**2) * math.exp(-a * w) / lam1

    return quad_semi_infinite(f, tol, tail_bound=tail, s_max=_double_exp_smax(a, lam1))


# ---------------------------------------------------------------------------
# Asymptotic SFS (large-N equivalents)
# ---------------------------------------------------------------------------


def sfs_small_asymptotic(i: int, t: float, params: ModelParams) -> TheoryValue:
    """Large-N equivalent of E[S_i(t ln N)] for fixed i:

    I(i) * 2 b0 gamma omega / (lambda0 + lambda1) * N^(lambda1 t + 1 - alpha).
    """
    if t <= 0:
        raise ValueError(f"requires t > 0, got {t}")
    if params.omega == 0.0:
        return TheoryValue(0.0, 0.0, "asymptotic")
    dp = derive(params)
    shape = shape_integral(i, dp.rho)
    scale = (
        2.0
        * params.b0
        * params.gamma
        * params.omega
        / (dp.lambda0 + dp.lambda1)
        * params.n_init ** (dp.lambda1 * t + 1.0 - params.alpha)
    )
    return TheoryValue(shape.value * scale, shape.abs_error_bound * scale, "asymptotic")


def sfs_window_asymptotic(
    x1: float, x2: float, t: float, params: ModelParams, tol: float = DEFAULT_TOL
) -> TheoryValue:
    """Large-N equivalent of the expected number of mutations carried by a
    number of cells in (x1 e^(lambda1 t_N), x2 e^(lambda1 t_N)):

    b0 gamma omega lambda1 (J(x1) - J(x2)) N^(1-alpha),  J = K + L.
    """
    if not 0 < x1 < x2:
        raise ValueError(f"requires 0 < x1 < x2, got x1={x1}, x2={x2}")
    if params.omega == 0.0:
        return TheoryValue(0.0, 0.0, "asymptotic")
    dp = derive(params)

    def j_value(x: float) -> TheoryValue:
        if x == math.inf:
            return TheoryValue(0.0, 0.0, "exact")
        k = window_weight_resistant(x, dp, tol)
        l = window_weight_sensitive(x, dp, tol)
        return TheoryValue(k.value + l.value, k.abs_error_bound + l.abs_error_bound, "quadrature")

    j1 = j_value(x1)
    j2 = j_value(x2)
    scale = (
        params.b0
        * params.gamma
        * params.omega
        * dp.lambda1
        * params.n_init ** (1.0 - params.alpha)
    )
    return TheoryValue(
        scale * (j1.value - j2.value),
        scale * (j1.abs_error_bound + j2.abs_error_bound),
        "asymptotic",
    )


# ---------------------------------------------------------------------------
# Exact finite-N integrals (single-founder main terms)
# ---------------------------------------------------------------------------


def resistant_origin_main_term(
    i: int, t: float, params: ModelParams, tol: float = DEFAULT_TOL
) -> TheoryValue:
    """Single-founder part of E[resistant-origin S_i(t ln N)]:

    N^(1+lambda1 t-alpha) delta0 (1-x_n) gamma omega / (1-gamma_n)
      * Int_0^(t_N) h_i(e^(lambda1 (t_N-s))) e^(-(lambda1 + x_n delta0) s) ds.
    """
    if i < 1:
        raise ValueError(f"requires i >= 1, got {i}")
    if t <= 0:
        raise ValueError(f"requires t > 0, got {t}")
    if params.omega == 0.0:
        return TheoryValue(0.0, 0.0, "exact")
    dp = derive(params)
    t_n = t * math.log(params.n_init)
    lam1 = dp.lambda1
    rate = lam1 + dp.x_n * dp.delta0
    rho = dp.rho

    def f(s: float) -> float:
        return shape_integral_truncated(i, math.exp(lam1 * (t_n - s)), rho).value * math.exp(
            -rate * s
        )

    pref = (
        params.n_init ** (1.0 + lam1 * t - params.alpha)
        * dp.delta0
        * (1.0 - dp.x_n)
        * params.gamma
        * params.omega
        / (1.0 - dp.gamma_n)
    )
    value, err = _quad_finite(f, 0.0, t_n, tol / max(pref, 1.0))
    return TheoryValue(pref * value, pref * err, "quadrature")


def sensitive_origin_main_term(
    i: int, t: float, params: ModelParams, tol: float = DEFAULT_TOL
) -> TheoryValue:
    """Single-founder part of E[sensitive-origin S_i(t ln N)]:

    N gamma_n (1-x_n) delta0 omega / (2 (1-gamma_n))
      * Int_0^(t_N) kappa_i(e^(-lambda1 (t_N-s))) (1 + s delta0 (1-x_n))
        e^(-s delta0 x_n) ds.
    """
    if i < 1:
        raise ValueError(f"requires i >= 1, got {i}")
    if t <= 0:
        raise ValueError(f"requires t > 0, got {t}")
    if params.omega == 0.0:
        return TheoryValue(0.0, 0.0, "exact")
    dp = derive(params)
    t_n = t * math.log(params.n_init)
    lam1 = dp.lambda1
    b1, d1 = dp.b1, dp.d1
    x = dp.x_n
    d0 = dp.delta0

    def f(s: float) -> float:
        y = math.exp(-lam1 * (t_n - s))
        return (
            clone_size_pmf_scaled(i, y, b1, d1)
            * (1.0 + s * d0 * (1.0 - x))
            * math.exp(-s * d0 * x)
        )

    pref = params.n_init * dp.gamma_n * (1.0 - x) * d0 * params.omega / (2.0 * (1.0 - dp.gamma_n))
    value, err = _quad_finite(f, 0.0, t_n, tol / max(pref, 1.0))
    return TheoryValue(pref * value, pref * err, "quadrature")


def _clone_size_tail(m: int, y: float, b1: float, d1: float) -> float:
    """P(clone size > m) at scale y = e^(-lambda1 u): closed geometric tail
    (lambda1/b1) q^m / (1 - rho y) with q = (1-y)/(1-rho y); at m = 0 this
    is the survival probability 1 - extinction mass."""
    rho = d1 / b1
    lam1 = b1 - d1
    head = (lam1 / b1) / (1.0 - rho * y)
    if m == 0:
        return head
    q = (1.0 - y) / (1.0 - rho * y)
    if q <= 0.0:
        return 0.0
    return head * math.exp(m * math.log(q))


def sensitive_origin_window_main(
    x: float, t: float, params: ModelParams, tol: float = DEFAULT_TOL
) -> TheoryValue:
    """Single-founder part of E[sensitive-origin window count over
    (x e^(lambda1 t_N), inf)]: the sum of the per-index main terms over the
    open window, collapsed to one quadrature via the geometric tail of the
    clone-size law."""
    if x <= 0:
        raise ValueError(f"requires x > 0, got {x}")
    if t <= 0:
        raise ValueError(f"requires t > 0, got {t}")
    if params.omega == 0.0:
        return TheoryValue(0.0, 0.0, "exact")
    dp = derive(params)
    t_n = t * math.log(params.n_init)
    lam1 = dp.lambda1
    m = math.floor(x * math.exp(lam1 * t_n))
    b1, d1 = dp.b1, dp.d1
    xn = dp.x_n
    d0 = dp.delta0

    def f(s: float) -> float:
        y = math.exp(-lam1 * (t_n - s))
        return (
            _clone_size_tail(m, y, b1, d1)
            * (1.0 + s * d0 * (1.0 - xn))
            * math.exp(-s * d0 * xn)
        )

    pref = params.n_init * dp.gamma_n * (1.0 - xn) * d0 * params.omega / (2.0 * (1.0 - dp.gamma_n))
    value, err = _quad_finite(f, 0.0, t_n, tol / max(pref, 1.0))
    return TheoryValue(pref * value, pref * err, "quadrature")


def resistant_origin_window_exact(
    x: float, t: float, params: ModelParams, tol: float = DEFAULT_TOL
) -> TheoryValue:
    """Exact E[resistant-origin window count over (x e^(lambda1 t_N), inf)]:
    the window sum of resistant_origin_mean_exact collapsed to one
    quadrature via the clone-size tail."""
    if x <= 0:
        raise ValueError(f"requires x > 0, got {x}")
    if t <= 0:
        raise ValueError(f"requires t > 0, got {t}")
    if params.omega == 0.0:
        return TheoryValue(0.0, 0.0, "exact")
    dp = derive(params)
    t_n = t * math.log(params.n_init)
    lam1 = dp.lambda1
    m = math.floor(x * math.exp(lam1 * t_n))
    lt0 = dp.lambda0 + 2.0 * dp.gamma_n * dp.b0
    b1, d1 = dp.b1, dp.d1

    def f(s: float) -> float:
        y = math.exp(-lam1 * (t_n - s))
        return (math.exp(lam1 * s) - math.exp(-lt0 * s)) * _clone_size_tail(m, y, b1, d1)

    pref = params.omega * b1 * 2.0 * dp.gamma_n * dp.b0 * params.n_init / (lam1 + lt0)
    value, err = _quad_finite(f, 0.0, t_n, tol / max(pref, 1.0))
    return TheoryValue(pref * value, pref * err, "quadrature")


def resistant_origin_mean_exact(
    i: int, t: float, params: ModelParams, tol: float = DEFAULT_TOL
) -> TheoryValue:
    """Exact E[resistant-origin S_i(t ln N)], all founders included.

    Mutations appear at resistant divisions at rate omega b1 E[Z1(s)] and
    the carrier count of each is the size of one fresh clone aged t_N - s:

        omega b1 Int_0^(t_N) E[Z1(s)] kappa_i(e^(-lambda1 (t_N - s))) ds,

    with E[Z1(s)] = 2 gamma_n b0 N (e^(lambda1 s) - e^(-lt0 s)) / (lambda1 + lt0)
    and lt0 = lambda0 + 2 gamma_n b0 the net decay rate of the sensitive
    population.  This is the single-founder main term plus the multi-founder
    remainder, so it is the tight Monte Carlo comparator.
    """
    if i < 1:
        raise ValueError(f"requires i >= 1, got {i}")
    if t <= 0:
        raise ValueError(f"requires t > 0, got {t}")
    if params.omega == 0.0:
        return TheoryValue(0.0, 0.0, "exact")
    dp = derive(params)
    t_n = t * math.log(params.n_init)
    lam1 = dp.lambda1
    lt0 = dp.lambda0 + 2.0 * dp.gamma_n * dp.b0
    b1, d1 = dp.b1, dp.d1

    def f(s: float) -> float:
        y = math.exp(-lam1 * (t_n - s))
        return (math.exp(lam1 * s) - math.exp(-lt0 * s)) * clone_size_pmf_scaled(i, y, b1, d1)

    pref = (
        params.omega * b1 * 2.0 * dp.gamma_n * dp.b0 * params.n_init / (lam1 + lt0)
    )
    value, err = _quad_finite(f, 0.0, t_n, tol / max(pref, 1.0))
    return TheoryValue(pref * value, pref * err, "quadrature")


def expected_resistant_population(t_abs: float, params: ModelParams) -> float:
    """Exact E[Z1(t)] from (N, 0) at absolute time t."""
    dp = derive(params)
    lt0 = dp.lambda0 + 2.0 * dp.gamma_n * dp.b0
    lam1 = dp.lambda1
    return (
        2.0
        * dp.gamma_n
        * dp.b0
        * params.n_init
        * (math.exp(lam1 * t_abs) - math.exp(-lt0 * t_abs))
        / (lam1 + lt0)
    )


# ---------------------------------------------------------------------------
# Remainder order bounds (upper bounds only; exact values are out of reach)
# ---------------------------------------------------------------------------


def resistant_origin_remainder_bound(t: float, params: ModelParams) -> float:
    """Upper bound on the multi-founder remainder of E[resistant-origin S_i]:

    omega (b1/lambda1) N^(1+lambda1 t) sum_{k>=2} k P(A_k), uniform in i.
    """
    dp = derive(params)
    multi = multi_ancestral_mean(dp).exact
    return (
        params.omega
        * dp.b1
        / dp.lambda1
        * params.n_init ** (1.0 + dp.lambda1 * t)
        * multi
    )


def sensitive_origin_remainder_bound(params: ModelParams) -> float:
    """Upper bound on the multi-founder remainder of E[sensitive-origin S_i]:

    N omega gamma_n / (2 (1-gamma_n)) * (2 p/(1-2p) - (1-x)/x), uniform in i.
    """
    dp = derive(params)
    p, x = dp.p_n, dp.x_n
    return (
        params.n_init
        * params.omega
        * dp.gamma_n
        / (2.0 * (1.0 - dp.gamma_n))
        * (2.0 * p / (1.0 - 2.0 * p) - (1.0 - x) / x)
    )


def sensitive_origin_main_bound(params: ModelParams) -> float:
    """Uniform-in-i upper bound on the single-founder sensitive-origin term:

    N gamma_n delta0 omega / (2 (1-gamma_n)) * (1/(delta0 x) + 1/(delta0 x^2)).
    """
    dp = derive(params)
    x = dp.x_n
    return (
        params.n_init
        * dp.gamma_n
        * dp.delta0
        * params.omega
        / (2.0 * (1.0 - dp.gamma_n))
        * (1.0 / (dp.delta0 * x) + 1.0 / (dp.delta0 * x**2))
    )


# ---------------------------------------------------------------------------
# Curve helper
# ---------------------------------------------------------------------------


def curve_over_indices(
    formula_id: str,
    indices: Sequence[float],
    exact_fn: Callable[[float], TheoryValue],
    asymptotic_fn: Callable[[float], float] | None = None,
) -> SfsTheoryCurve:
    """Evaluate a formula over indices into an SfsTheoryCurve."""
    values = tuple(exact_fn(idx) for idx in indices)
    asym = tuple(asymptotic_fn(idx) for idx in indices) if asymptotic_fn else None
    return SfsTheoryCurve(tuple(float(i) for i in indices), values, formula_id, asym)
