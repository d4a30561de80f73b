"""Average bit-error rate of the relayed link.

ABER = Q^P / (2 Gamma(P)) * int_0^inf z^{P-1} e^{-Qz} F(z) dz, where F is
the end-to-end SNR CDF and (P, Q) the modulation kernel -- (1/2, 1) for
coherent BPSK.  The generic evaluator integrates that kernel against any
CDF callable; the three protocol-specific closed forms carry out the
integral symbolically term by term and are valid under the same integer
conditions as the CDF sums (exact kernels on both hops).

The exact CSI-assisted case (q=1) has no closed ABER; it is served by
the quadrature evaluator over its closed-form CDF.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .errors import IntegerConditionError
from .hop import auto_kernel
from .relay import (CsiAf, Df, FixedAf, RelayLink, _log_binom, cdf,
                    cdf_numeric, link_mode, resolve_gain)
from .specfun import gauss_2f1, whittaker_w

_BER_FLOOR = 1e-300


class Modulation:
    """ABER kernel parameters; the conditional error probability is
    Gamma(P, Q*gamma) / (2 Gamma(P))."""

    __slots__ = ("p", "q")

    def __init__(self, p: float, q: float) -> None:
        if p <= 0.0 or q <= 0.0:
            raise ValueError(f"modulation parameters must be positive: {p}, {q}")
        self.p = float(p)
        self.q = float(q)

    def __repr__(self) -> str:
        return f"Modulation(P={self.p}, Q={self.q})"

    def __eq__(self, other) -> bool:
        return (isinstance(other, Modulation)
                and (self.p, self.q) == (other.p, other.q))

    def __hash__(self) -> int:
        return hash((self.p, self.q))


BPSK = Modulation(0.5, 1.0)
DPSK = Modulation(1.0, 1.0)


def aber_from_cdf(cdf_fn, mod: Modulation) -> float:
    """Kernel quadrature of the ABER definition over an arbitrary CDF.

    The substitution z = t^2 removes the z^{P-1} endpoint singularity
    for P < 1 (BPSK).
    """
    p, q = mod.p, mod.q
    pref = math.exp(p * math.log(q) - gammaln(p))

    def integrand(t: float) -> float:
        if t <= 0.0:   # open quadrature rules never probe the endpoint
            return 0.0
        z = t * t
        return math.exp((2.0 * p - 1.0) * math.log(t) - q * z) * cdf_fn(z)

    val, _ = quad(integrand, 0.0, np.inf, epsabs=1e-11, epsrel=1e-10,
                  limit=400)
    return pref * val


def aber_quadrature(link: RelayLink, mod: Modulation,
                    basis: str = "auto") -> float:
    """ABER by numeric kernel integration.

    basis 'closed' integrates the closed-form CDF (default when the link
    supports it -- the kernel integral stays an independent check of the
    symbolic ABER sums); 'numeric' integrates the quadrature CDF, the
    only route for links that fail the integer conditions.
    """
    if basis == "auto":
        basis = "numeric" if link_mode(link) == "numeric" else "closed"
    if basis == "closed":
        return aber_from_cdf(lambda z: cdf(link, z), mod)
    if basis == "numeric":
        return aber_from_cdf(lambda z: cdf_numeric(link, z), mod)
    raise ValueError(f"unknown basis {basis!r}")


def _require_exact(link: RelayLink) -> None:
    k1, k2 = auto_kernel(link.hop1), auto_kernel(link.hop2)
    if k1.mode != "exact" or k2.mode != "exact":
        raise IntegerConditionError(
            "closed-form ABER needs exact kernels on both hops; "
            "use aber_quadrature in the bound regime")


def aber_csi(link: RelayLink, mod: Modulation) -> float:
    """Closed-form ABER of the CSI-assisted AF link, q = 0.

    Each CDF tail term integrates against the kernel via
    int_0^inf e^{-a x} x^{mu-1} K_nu(b x) dx
      = sqrt(pi) (2b)^nu Gamma(mu+nu) Gamma(mu-nu)
        / ((a+b)^{mu+nu} Gamma(mu+1/2))
        * 2F1(mu+nu, nu+1/2; mu+1/2; (a-b)/(a+b)),
    whose argument lies in [0, 1) because a > b always holds here.
    """
    if not (isinstance(link.protocol, CsiAf) and link.protocol.q == 0):
        raise ValueError("aber_csi applies to CsiAf links with q=0")
    _require_exact(link)
    p_mod, q_mod = mod.p, mod.q
    k1, k2 = auto_kernel(link.hop1), auto_kernel(link.hop2)
    log_pref = p_mod * math.log(q_mod) - gammaln(p_mod)
    terms = []
    for lc1, m1, lam1 in zip(k1.log_coef, k1.power, k1.rate):
        for lc2, m2, lam2 in zip(k2.log_coef, k2.power, k2.rate):
            beta = 2.0 * math.sqrt(lam1 * lam2)
            alpha = lam1 + lam2 + q_mod
            arg = (alpha - beta) / (alpha + beta)
            for r1 in range(m1):
                mu = p_mod + m2 + r1
                for p in range(m2):
                    for s in range(r1 + 1):
                        nu = abs(p - s + 1)
                        assert mu - nu > 0.0
                        half = 0.5 * (p - s + 1.0)
                        log_term = (
                            log_pref + lc1 + lc2 + gammaln(m1)
                            - gammaln(r1 + 1.0) + _log_binom(r1, s)
                            + _log_binom(m2 - 1, p)
                            + (half + r1 - m1) * math.log(lam1)
                            - half * math.log(lam2)
                            + 0.5 * math.log(math.pi)
                            + nu * math.log(2.0 * beta)
                            + gammaln(mu + nu) + gammaln(mu - nu)
                            - (mu + nu) * math.log(alpha + beta)
                            - gammaln(mu + 0.5)
                            + math.log(gauss_2f1(mu + nu, nu + 0.5,
                                                 mu + 0.5, arg)))
                        terms.append(math.exp(log_term))
    return max(_BER_FLOOR, 0.5 - math.fsum(terms))


def aber_fixed(link: RelayLink, mod: Modulation) -> float:
    """Closed-form ABER of the fixed-gain AF link.

    Tail terms integrate via
    int_0^inf z^{rho-1} e^{-a z} K_nu(2 c sqrt(z)) dz
      = Gamma(rho+nu/2) Gamma(rho-nu/2) / (2c) * a^{-(rho-1/2)}
        * e^{w/2} W_{-(rho-1/2), nu/2}(w),   w = c^2 / a,
    producing Whittaker-W factors with argument
    lam1*lam2*U / (lam1 + Q).
    """
    if not isinstance(link.protocol, FixedAf):
        raise ValueError("aber_fixed applies to FixedAf links")
    _require_exact(link)
    p_mod, q_mod = mod.p, mod.q
    gain = resolve_gain(link)
    k1, k2 = auto_kernel(link.hop1), auto_kernel(link.hop2)
    log_pref = p_mod * math.log(q_mod) - gammaln(p_mod)
    terms = []
    for lc1, m1, lam1 in zip(k1.log_coef, k1.power, k1.rate):
        a_rate = lam1 + q_mod
        for lc2, m2, lam2 in zip(k2.log_coef, k2.power, k2.rate):
            c_sq = lam1 * lam2 * gain
            w = c_sq / a_rate
            for r1 in range(m1):
                for s in range(r1 + 1):
                    nu = m2 - s
                    rho = p_mod + 0.5 * nu + r1
                    log_term = (
                        log_pref + lc1 + lc2 + gammaln(m1)
                        - gammaln(r1 + 1.0) + _log_binom(r1, s)
                        + (0.5 * nu + r1 - m1) * math.log(lam1)
                        - 0.5 * nu * math.log(lam2)
                        + 0.5 * (m2 + s) * math.log(gain)
                        + gammaln(rho + 0.5 * abs(nu))
                        + gammaln(rho - 0.5 * abs(nu))
                        - math.log(2.0) - 0.5 * math.log(c_sq)
                        - (rho - 0.5) * math.log(a_rate) + 0.5 * w
                        + math.log(whittaker_w(-(rho - 0.5), 0.5 * nu, w)))
                    terms.append(math.exp(log_term))
    return max(_BER_FLOOR, 0.5 - math.fsum(terms))


def aber_df(link: RelayLink, mod: Modulation) -> float:
    """Closed-form ABER of the decode-and-forward link: the product of
    per-hop tails integrates termwise to elementary Gamma factors."""
    if not isinstance(link.protocol, Df):
        raise ValueError("aber_df applies to Df links")
    _require_exact(link)
    p_mod, q_mod = mod.p, mod.q
    k1, k2 = auto_kernel(link.hop1), auto_kernel(link.hop2)
    log_pref = p_mod * math.log(q_mod) - math.log(2.0) - gammaln(p_mod)
    terms = []
    for lc1, m1, lam1 in zip(k1.log_coef, k1.power, k1.rate):
        for lc2, m2, lam2 in zip(k2.log_coef, k2.power, k2.rate):
            denom = lam1 + lam2 + q_mod
            for r1 in range(m1):
                hop1_part = (lc1 + gammaln(m1) - gammaln(r1 + 1.0)
                             - (m1 - r1) * math.log(lam1))
                for r2 in range(m2):
                    log_term = (
                        log_pref + hop1_part
                        + lc2 + gammaln(m2) - gammaln(r2 + 1.0)
                        - (m2 - r2) * math.log(lam2)
                        + gammaln(r1 + r2 + p_mod)
                        - (r1 + r2 + p_mod) * math.log(denom))
                    terms.append(math.exp(log_term))
    return max(_BER_FLOOR, 0.5 - math.fsum(terms))


def aber(link: RelayLink, mod: Modulation) -> float:
    """Best available ABER: closed form where one exists (exact kernels,
    and q=0 for CSI), kernel quadrature otherwise."""
    try:
        if isinstance(link.protocol, CsiAf) and link.protocol.q == 0:
            return aber_csi(link, mod)
        if isinstance(link.protocol, FixedAf):
            return aber_fixed(link, mod)
        if isinstance(link.protocol, Df):
            return aber_df(link, mod)
    except IntegerConditionError:
        pass
    return aber_quadrature(link, mod)
