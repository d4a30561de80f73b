"""End-to-end SNR distributions of the dual-hop relayed link.

Protocols and their end-to-end SNRs:

* CSI-assisted AF: g1*g2 / (g1 + g2 + q), q=0 approximate / q=1 exact;
* fixed-gain AF:   g1*g2 / (g2 + U), U the statistical relay gain;
* decode-forward:  min(g1, g2).

For integer-condition hops the CDFs are finite sums over the per-hop
kernel terms with Bessel-K factors; each sum is assembled in log space
(every term is positive and no term can exceed the total, which is a
probability) and reduced with compensated summation, because terms mix
magnitudes across many orders once the average SNRs are large.

When a hop is in the upper-bound regime its kernel mass N exceeds 1 and
the plain tail sums would produce a LOWER bound on outage.  The
evaluators therefore use the mass-corrected combinations

    CSI:   F(x) <= N2 + (N1 - 1) * T2(x) - S_csi(x)
    fixed: F(x) <= N1 * N2 - S_fixed(x)
    DF:    F(x) <= 1 - prod_j max(0, Tj(x) - (Nj - 1))

with Tj the kernel tail integral; these reduce to the exact closed forms
when N1 = N2 = 1 and stay true upper bounds otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .errors import IntegerConditionError
from .hop import (HopChannel, SnrKernel, auto_kernel, kernel_ccdf,
                  snr_ccdf_general, snr_pdf)
from .specfun import log_bessel_k, scaled_upper_inc_gamma

_LN2 = math.log(2.0)
_QUAD_OPTS = dict(epsabs=1e-11, epsrel=1e-11, limit=400)


@dataclass(frozen=True)
class CsiAf:
    """CSI-assisted amplify-and-forward; q=0 approximate, q=1 exact SNR."""

    q: int = 0

    def __post_init__(self) -> None:
        if self.q not in (0, 1):
            raise ValueError(f"q must be 0 or 1, got {self.q}")


@dataclass(frozen=True)
class FixedAf:
    """Fixed-gain amplify-and-forward; gain=None means derive it from hop1."""

    gain: float | None = None

    def __post_init__(self) -> None:
        if self.gain is not None and self.gain <= 0.0:
            raise ValueError(f"gain must be positive, got {self.gain}")


@dataclass(frozen=True)
class Df:
    """Decode-and-forward."""


Protocol = CsiAf | FixedAf | Df


@dataclass(frozen=True)
class RelayLink:
    hop1: HopChannel
    hop2: HopChannel
    protocol: Protocol


def link_mode(link: RelayLink) -> str:
    """Which CDF route the link supports: 'closed', 'bound' or 'numeric'."""
    try:
        kerns = (auto_kernel(link.hop1), auto_kernel(link.hop2))
    except IntegerConditionError:
        return "numeric"
    return "closed" if all(k.mode == "exact" for k in kerns) else "bound"


@lru_cache(maxsize=256)
def _gain_from_kernel(kern: SnrKernel) -> float:
    # U = 1 / E[1/(1+g)]; each expectation term is
    # C Gamma(m) e^lam Gamma(1-m, lam), evaluated in scaled form since
    # lam = c/S blows up at low SNR.
    total = math.fsum(
        math.exp(lc + gammaln(m)
                 + math.log(scaled_upper_inc_gamma(1.0 - m, lam)))
        for lc, m, lam in zip(kern.log_coef, kern.power, kern.rate))
    return 1.0 / total


def fixed_gain(hop1: HopChannel) -> float:
    """Statistical AF gain U = 1 / E[1/(1+gamma_1)] in closed form."""
    return _gain_from_kernel(auto_kernel(hop1))


_EXP_RANGE = 700.0  # |u| beyond this makes every y = e^u integrand vanish


def fixed_gain_numeric(hop1: HopChannel) -> float:
    """Quadrature fallback for the AF gain, any real parameters."""

    def integrand(u: float) -> float:
        if abs(u) > _EXP_RANGE:
            return 0.0
        y = math.exp(u)
        return snr_pdf(hop1, y) / (1.0 + y) * y

    val, _ = quad(integrand, -np.inf, np.inf, **_QUAD_OPTS)
    return 1.0 / val


def resolve_gain(link: RelayLink) -> float:
    """Explicit gain if the protocol carries one, else the auto gain."""
    if not isinstance(link.protocol, FixedAf):
        raise ValueError("resolve_gain applies to fixed-gain links")
    if link.protocol.gain is not None:
        return link.protocol.gain
    try:
        return fixed_gain(link.hop1)
    except IntegerConditionError:
        return fixed_gain_numeric(link.hop1)


@lru_cache(maxsize=128)
def _csi_table(k1: SnrKernel, k2: SnrKernel, q: int):
    """Per-term constants of the CSI-AF CDF sum.

    Term (t1, t2, r1, p, s) contributes
        exp(base) * z^ez * x^ex * e^{-rate x} * K_nu(2 sqrt(R z)),
    with z = x^2 + q x.
    """
    base, ez, ex, nu, rate, big_r = [], [], [], [], [], []
    for lc1, m1, lam1 in zip(k1.log_coef, k1.power, k1.rate):
        llam1 = math.log(lam1)
        for lc2, m2, lam2 in zip(k2.log_coef, k2.power, k2.rate):
            llam2 = math.log(lam2)
            for r1 in range(m1):
                for p in range(m2):
                    for s in range(r1 + 1):
                        half = 0.5 * (p - s + 1.0)
                        base.append(
                            _LN2 + lc1 + lc2 + gammaln(m1) - gammaln(r1 + 1.0)
                            + _log_binom(r1, s) + _log_binom(m2 - 1, p)
                            + (half + r1 - m1) * llam1 - half * llam2)
                        ez.append(0.5 * (p + s + 1.0))
                        ex.append(m2 + r1 - p - s - 1.0)
                        nu.append(abs(p - s + 1))
                        rate.append(lam1 + lam2)
                        big_r.append(lam1 * lam2)
    return tuple(np.array(col) for col in (base, ez, ex, nu, rate, big_r))


@lru_cache(maxsize=128)
def _fixed_table(k1: SnrKernel, k2: SnrKernel, gain: float):
    """Per-term constants of the fixed-gain CDF sum.

    Term (t1, t2, r1, s) contributes
        exp(base) * x^ex * e^{-rate x} * K_nu(2 sqrt(R x)).
    """
    base, ex, nu, rate, big_r = [], [], [], [], []
    lng = math.log(gain)
    for lc1, m1, lam1 in zip(k1.log_coef, k1.power, k1.rate):
        llam1 = math.log(lam1)
        for lc2, m2, lam2 in zip(k2.log_coef, k2.power, k2.rate):
            llam2 = math.log(lam2)
            for r1 in range(m1):
                for s in range(r1 + 1):
                    half = 0.5 * (m2 - s)
                    base.append(
                        _LN2 + lc1 + lc2 + gammaln(m1) - gammaln(r1 + 1.0)
                        + _log_binom(r1, s)
                        + (half + r1 - m1) * llam1 - half * llam2
                        + 0.5 * (m2 + s) * lng)
                    ex.append(half + r1)
                    nu.append(abs(m2 - s))
                    rate.append(lam1)
                    big_r.append(lam1 * lam2 * gain)
    return tuple(np.array(col) for col in (base, ex, nu, rate, big_r))


def _log_binom(n: int, k: int) -> float:
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def _clamp01(v: float) -> float:
    return min(1.0, max(0.0, v))


def cdf_csi(link: RelayLink, x: float) -> float:
    """End-to-end SNR CDF of the CSI-assisted AF link."""
    if not isinstance(link.protocol, CsiAf):
        raise ValueError("cdf_csi needs a CsiAf link")
    if x < 0.0:
        raise ValueError(f"cdf needs x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    q = link.protocol.q
    k1, k2 = auto_kernel(link.hop1), auto_kernel(link.hop2)
    base, ez, ex, nu, rate, big_r = _csi_table(k1, k2, q)
    z = x * x + q * x
    logs = (base + ez * math.log(z) + ex * math.log(x) - rate * x
            + log_bessel_k(nu, 2.0 * np.sqrt(big_r * z)))
    tail_sum = math.fsum(np.exp(logs).tolist())
    val = k2.mass + (k1.mass - 1.0) * kernel_ccdf(k2, x) - tail_sum
    return _clamp01(val)


def cdf_fixed(link: RelayLink, x: float) -> float:
    """End-to-end SNR CDF of the fixed-gain AF link."""
    if not isinstance(link.protocol, FixedAf):
        raise ValueError("cdf_fixed needs a FixedAf link")
    if x < 0.0:
        raise ValueError(f"cdf needs x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    gain = resolve_gain(link)
    k1, k2 = auto_kernel(link.hop1), auto_kernel(link.hop2)
    base, ex, nu, rate, big_r = _fixed_table(k1, k2, gain)
    logs = (base + ex * math.log(x) - rate * x
            + log_bessel_k(nu, 2.0 * np.sqrt(big_r * x)))
    tail_sum = math.fsum(np.exp(logs).tolist())
    return _clamp01(k1.mass * k2.mass - tail_sum)


def cdf_df(link: RelayLink, x: float) -> float:
    """End-to-end SNR CDF of the decode-and-forward link."""
    if not isinstance(link.protocol, Df):
        raise ValueError("cdf_df needs a Df link")
    if x < 0.0:
        raise ValueError(f"cdf needs x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    acc = 1.0
    for hop in (link.hop1, link.hop2):
        kern = auto_kernel(hop)
        acc *= max(0.0, kernel_ccdf(kern, x) - (kern.mass - 1.0))
    return _clamp01(1.0 - acc)


def cdf(link: RelayLink, x: float) -> float:
    """Protocol-dispatching closed-form CDF."""
    if isinstance(link.protocol, CsiAf):
        return cdf_csi(link, x)
    if isinstance(link.protocol, FixedAf):
        return cdf_fixed(link, x)
    return cdf_df(link, x)


def cdf_numeric(link: RelayLink, x: float) -> float:
    """Reference CDF from the defining single integrals, valid for any
    real channel parameters.

    The semi-infinite integration variable is substituted y = e^u; the
    per-hop statistics come through the incomplete-Gamma (non-reduced)
    routes, so this path shares no algebra with the closed-form sums.
    """
    if x < 0.0:
        raise ValueError(f"cdf needs x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    h1, h2 = link.hop1, link.hop2
    if isinstance(link.protocol, Df):
        return _clamp01(1.0 - snr_ccdf_general(h1, x) * snr_ccdf_general(h2, x))
    if isinstance(link.protocol, CsiAf):
        z = x * x + link.protocol.q * x

        def integrand(u: float) -> float:
            if abs(u) > _EXP_RANGE:
                return 0.0
            y = math.exp(u)
            return (snr_ccdf_general(h1, x + z / y) * snr_pdf(h2, x + y) * y)

        val, _ = quad(integrand, -np.inf, np.inf, **_QUAD_OPTS)
        return _clamp01(1.0 - val)
    gain = resolve_gain(link)

    def integrand(u: float) -> float:
        if abs(u) > _EXP_RANGE:
            return 0.0
        y = math.exp(u)
        return ((1.0 - snr_ccdf_general(h1, x + gain * x / y))
                * snr_pdf(h2, y) * y)

    val, _ = quad(integrand, -np.inf, np.inf, **_QUAD_OPTS)
    return _clamp01(val)


def outage(link: RelayLink, gamma_th: float, method: str = "auto") -> float:
    """Outage probability P[end-to-end SNR < gamma_th].

    method 'auto' prefers the closed form and falls back to quadrature
    when the integer conditions fail; 'closed' and 'numeric' force a
    route.
    """
    if gamma_th <= 0.0:
        raise ValueError(f"gamma_th must be positive, got {gamma_th}")
    if method == "closed":
        return cdf(link, gamma_th)
    if method == "numeric":
        return cdf_numeric(link, gamma_th)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    try:
        return cdf(link, gamma_th)
    except IntegerConditionError:
        return cdf_numeric(link, gamma_th)
