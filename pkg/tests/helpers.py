"""Shared fixture builders for the test suite."""

from functools import lru_cache

import fso_relay as fr


@lru_cache(maxsize=64)
def fitted_mixture(alpha: float, beta: float, L: int = 10) -> fr.MixtureGamma:
    return fr.fit_gamma_gamma(fr.GammaGammaParams(alpha, beta), L)


def make_hop(alpha: float, beta: float, xi_sq: float, gamma_bar_db: float,
             L: int = 10, r_over_wz: float = 0.1) -> fr.HopChannel:
    """Gamma-Gamma hop with geometric pointing loss, average SNR in dB."""
    return fr.HopChannel(
        mg=fitted_mixture(alpha, beta, L),
        pointing=fr.Pointing.from_geometry(xi_sq, r=r_over_wz, w_z=1.0),
        gamma_bar=10.0 ** (gamma_bar_db / 10.0),
        gg=fr.GammaGammaParams(alpha, beta))


def unit_hop() -> fr.HopChannel:
    """Canonical fixture: per-hop SNR is exactly Exp(1).

    Single mixture term (a, b, c) = (1, 2, 1) with xi^2 = 1, A0 = 1 and
    unit average SNR collapses every closed form to known exponentials.
    """
    return fr.HopChannel(
        mg=fr.MixtureGamma(terms=((1.0, 2.0, 1.0),)),
        pointing=fr.Pointing(xi_sq=1.0, a0=1.0),
        gamma_bar=1.0)
