"""Benchmark integrands with exact or pinned reference values.

All integrands are vectorized: they map an (n, d) array of points in the
unit cube to an (n,) array of values.  The registry keys them by name for
the CLI (``truncation``, ``asian``, ``fourier:<file>``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .metrics import FourierPolynomial
from .sampling import inverse_normal_cdf


def truncation_test(x: np.ndarray, d: int | None = None) -> np.ndarray:
    """Alternating nested products: sum_i (-1)^i * x_1 ... x_i.

    Strongly dominated by the first couple of coordinates regardless of the
    nominal dimension, which is what makes it a truncation benchmark.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if d is not None and pts.shape[1] != d:
        raise ValueError(f"points have d={pts.shape[1]}, expected {d}")
    prods = np.cumprod(pts, axis=1)
    signs = np.where(np.arange(1, pts.shape[1] + 1) % 2 == 1, -1.0, 1.0)
    return prods @ signs


def truncation_test_exact_integral(d: int) -> Fraction:
    """Exact value of the alternating nested-product integral.

    Term i integrates to (-1)^i / 2^i, and the geometric sum collapses to
    (1 - (-1/2)^d) / (-3).
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    return (1 - Fraction(-1, 2) ** d) / Fraction(-3)


@dataclass(frozen=True)
class AsianParams:
    """Arithmetic Asian call under GBM, monitored at d equispaced dates."""

    s0: float = 50.0
    strike: float = 45.0
    maturity: float = 1.0
    rate: float = 0.05
    vol: float = 0.3
    d: int = 12

    def __post_init__(self):
        if self.s0 <= 0 or self.strike <= 0 or self.vol < 0:
            raise ValueError("need s0, strike > 0 and vol >= 0")
        if self.maturity <= 0 or self.d < 1:
            raise ValueError("need maturity > 0 and d >= 1")


def asian_call_payoff(u: np.ndarray, p: AsianParams) -> np.ndarray:
    """Discounted payoff from uniform inputs via inverse normal transforms.

    The GBM path is built by sequential increments: with dt = T/d and
    z_j = Phi^{-1}(u_j),

        S_j = S_{j-1} * exp((r - vol^2/2) dt + vol sqrt(dt) z_j),

    and the payoff is exp(-rT) * max(mean_j S_j - K, 0).
    """
    pts = np.atleast_2d(np.asarray(u, dtype=np.float64))
    if pts.shape[1] != p.d:
        raise ValueError(f"points have d={pts.shape[1]}, params say {p.d}")
    if np.any((pts <= 0.0) | (pts >= 1.0)):
        raise ValueError("inputs must lie strictly inside (0, 1)")
    dt = p.maturity / p.d
    drift = (p.rate - 0.5 * p.vol**2) * dt
    if p.vol > 0:
        z = inverse_normal_cdf(pts.ravel()).reshape(pts.shape)
        log_s = np.log(p.s0) + np.cumsum(drift + p.vol * np.sqrt(dt) * z, axis=1)
    else:
        log_s = np.log(p.s0) + drift * np.arange(1, p.d + 1)
        log_s = np.broadcast_to(log_s, pts.shape)
    avg = np.exp(log_s).mean(axis=1)
    return np.exp(-p.rate * p.maturity) * np.maximum(avg - p.strike, 0.0)


def asian_deterministic_limit(p: AsianParams) -> float:
    """Closed-form payoff in the vol -> 0 limit."""
    dt = p.maturity / p.d
    s = p.s0 * np.exp(p.rate * dt * np.arange(1, p.d + 1))
    return float(np.exp(-p.rate * p.maturity) * max(s.mean() - p.strike, 0.0))


def fourier_poly_eval(f: FourierPolynomial, x: np.ndarray) -> np.ndarray:
    """Evaluate a real-valued Fourier polynomial: conjugate symmetry required."""
    if not f.is_conjugate_symmetric():
        raise ValueError("coefficient map is not conjugate-symmetric")
    pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if pts.shape[1] != f.d:
        raise ValueError("point/polynomial dimension mismatch")
    total = np.zeros(pts.shape[0], dtype=np.complex128)
    for k, c in f.terms.items():
        phase = pts @ np.asarray(k, dtype=np.float64)
        total += c * np.exp(2j * np.pi * phase)
    resid = float(np.max(np.abs(total.imag))) if total.size else 0.0
    if resid > 1e-12:
        raise ValueError(f"imaginary residual {resid} exceeds 1e-12")
    return total.real


def fourier_poly_exact_integral(f: FourierPolynomial) -> float:
    """Integral over the unit cube: the real part of the zero coefficient."""
    zero = (0,) * f.d
    return float(f.terms.get(zero, 0j).real)


def read_fourier_poly(path, d: int | None = None) -> FourierPolynomial:
    """Coefficient file: lines ``k_1 ... k_d re im``."""
    terms: dict[tuple[int, ...], complex] = {}
    for ln, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if d is None:
            d = len(parts) - 2
        if len(parts) != d + 2:
            raise ValueError(f"fourier file line {ln}: expected {d + 2} fields")
        k = tuple(int(v) for v in parts[:d])
        terms[k] = complex(float(parts[d]), float(parts[d + 1]))
    if not terms:
        raise ValueError("fourier coefficient file is empty")
    return FourierPolynomial(terms)


class IntegrandSpec:
    """Resolved integrand: vectorized callable plus its exact integral."""

    def __init__(self, name: str, fn, exact: float, d: int):
        self.name = name
        self.fn = fn
        self.exact = exact
        self.d = d


def resolve_integrand(name: str, d: int, params: dict | None = None) -> IntegrandSpec:
    """Registry lookup: ``truncation``, ``asian``, or ``fourier:<file>``."""
    params = params or {}
    if name == "truncation":
        return IntegrandSpec(
            name, lambda x: truncation_test(x, d),
            float(truncation_test_exact_integral(d)), d,
        )
    if name == "asian":
        params = dict(params)
        exact = params.pop("reference_value", None)
        if exact is None:
            raise ValueError("asian integrand needs a reference_value parameter")
        p = AsianParams(d=d, **params)
        eps = np.nextafter(0.0, 1.0)

        def fn(x, p=p, eps=eps):
            return asian_call_payoff(np.clip(x, eps, 1.0 - 1e-16), p)

        return IntegrandSpec(name, fn, float(exact), d)
    if name.startswith("fourier:"):
        poly = read_fourier_poly(name.split(":", 1)[1], d)
        return IntegrandSpec(
            name, lambda x: fourier_poly_eval(poly, x),
            fourier_poly_exact_integral(poly), d,
        )
    raise ValueError(f"unknown integrand {name!r}")
