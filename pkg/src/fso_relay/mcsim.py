"""Monte Carlo oracle for the relayed link.

Samples the composite channel (turbulence fading x pointing attenuation),
composes the end-to-end SNR sample-wise per protocol, and estimates
outage and ABER with binomial/sample standard errors.

Determinism contract: samples are generated in fixed-size blocks, block
b drawing from default_rng(SeedSequence(seed, spawn_key=(b,))), and the
partial sums are reduced in block order with exact (fsum) accumulation.
Estimates therefore depend only on (seed, samples) -- not on the stream
count used to execute the blocks, nor on scheduling.

The ABER estimator averages the smooth conditional kernel
Gamma(P, Q*gamma) / (2 Gamma(P)) (= erfc(sqrt(gamma))/2 for BPSK) instead
of flipping bits; that is the exact expectation the ABER integral
defines, at a fraction of the variance.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from .aber import Modulation
from .hop import HopChannel, mean_irradiance
from .mgfit import GammaGammaParams, MixtureGamma, mg_sample
from .relay import CsiAf, FixedAf, RelayLink, resolve_gain

_BLOCK = 1 << 16


@dataclass(frozen=True)
class FadingSource:
    """Where a hop's turbulence samples come from: the original
    Gamma-Gamma channel (default -- keeps the mixture fit under test) or
    the mixture itself."""

    kind: str
    gg: GammaGammaParams | None = None
    mg: MixtureGamma | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("gamma_gamma", "mg"):
            raise ValueError(f"unknown fading source kind {self.kind!r}")
        if self.kind == "gamma_gamma" and self.gg is None:
            raise ValueError("gamma_gamma source needs parameters")
        if self.kind == "mg" and self.mg is None:
            raise ValueError("mg source needs a mixture")

    @classmethod
    def gamma_gamma(cls, alpha: float, beta: float) -> "FadingSource":
        return cls(kind="gamma_gamma", gg=GammaGammaParams(alpha, beta))

    @classmethod
    def mixture(cls, mg: MixtureGamma) -> "FadingSource":
        return cls(kind="mg", mg=mg)


@dataclass(frozen=True)
class McConfig:
    samples: int
    seed: int
    streams: int = 1
    fading_source: FadingSource | tuple[FadingSource, FadingSource] | None = None

    def __post_init__(self) -> None:
        if self.samples < 10_000:
            raise ValueError(
                f"need >= 1e4 samples for CI validity, got {self.samples}")
        if self.streams < 1:
            raise ValueError(f"streams must be >= 1, got {self.streams}")

    def source_for(self, hop_index: int, hop: HopChannel) -> FadingSource:
        src = self.fading_source
        if isinstance(src, tuple):
            return src[hop_index]
        if src is not None:
            return src
        if hop.gg is not None:
            return FadingSource.gamma_gamma(hop.gg.alpha, hop.gg.beta)
        return FadingSource.mixture(hop.mg)


@dataclass(frozen=True)
class Estimate:
    """Point estimate with its standard error and 95% interval."""

    value: float
    std_err: float
    ci95: tuple[float, float]
    degenerate: bool = False

    def __post_init__(self) -> None:
        low, high = self.ci95
        if not (low <= self.value <= high) or self.std_err < 0.0:
            raise ValueError(f"inconsistent estimate {self}")


def sample_pointing(hop: HopChannel, rng: np.random.Generator, size=None):
    """Pointing attenuation draws, inverse-CDF: I_p = A0 * u^{1/xi^2}."""
    p = hop.pointing
    u = rng.random(size)
    return p.a0 * u ** (1.0 / p.xi_sq)


def sample_gamma_gamma(alpha: float, beta: float,
                       rng: np.random.Generator, size=None):
    """Gamma-Gamma irradiance: product of independent unit-mean Gamma
    variates with shapes alpha and beta."""
    if alpha <= 0.0 or beta <= 0.0:
        raise ValueError("alpha and beta must be positive")
    return (rng.standard_gamma(alpha, size) / alpha
            * rng.standard_gamma(beta, size) / beta)


def _sample_fading(source: FadingSource, rng: np.random.Generator, size):
    if source.kind == "gamma_gamma":
        return sample_gamma_gamma(source.gg.alpha, source.gg.beta, rng, size)
    return mg_sample(source.mg, rng, size)


def sample_snr(hop: HopChannel, rng: np.random.Generator, size=None,
               source: FadingSource | None = None):
    """Per-hop SNR draws gamma_bar * I_a * I_p / mean(I_a * I_p)."""
    if source is None:
        source = (FadingSource.gamma_gamma(hop.gg.alpha, hop.gg.beta)
                  if hop.gg is not None else FadingSource.mixture(hop.mg))
    i_p = sample_pointing(hop, rng, size)
    i_a = _sample_fading(source, rng, size)
    return hop.gamma_bar * i_a * i_p / mean_irradiance(hop)


def _end_to_end(link: RelayLink, gain, rng: np.random.Generator,
                size: int, sources) -> np.ndarray:
    # draw order is part of the determinism contract: hop1 pointing,
    # hop1 fading, hop2 pointing, hop2 fading
    g1 = sample_snr(link.hop1, rng, size, sources[0])
    g2 = sample_snr(link.hop2, rng, size, sources[1])
    proto = link.protocol
    if isinstance(proto, CsiAf):
        return g1 * g2 / (g1 + g2 + proto.q)
    if isinstance(proto, FixedAf):
        return g1 * g2 / (g2 + gain)
    return np.minimum(g1, g2)


def _blocked_reduce(cfg: McConfig, block_fn):
    """Run block_fn(block_index, block_size) over all blocks and reduce
    the returned tuples componentwise in block order."""
    n_blocks = (cfg.samples + _BLOCK - 1) // _BLOCK
    sizes = [min(_BLOCK, cfg.samples - b * _BLOCK) for b in range(n_blocks)]
    if cfg.streams > 1:
        with ThreadPoolExecutor(max_workers=cfg.streams) as pool:
            partials = list(pool.map(block_fn, range(n_blocks), sizes))
    else:
        partials = [block_fn(b, s) for b, s in zip(range(n_blocks), sizes)]
    return tuple(math.fsum(part[i] for part in partials)
                 for i in range(len(partials[0])))


def _link_sources(link: RelayLink, cfg: McConfig):
    return (cfg.source_for(0, link.hop1), cfg.source_for(1, link.hop2))


def _resolved_gain(link: RelayLink):
    return resolve_gain(link) if isinstance(link.protocol, FixedAf) else None


def estimate_outage(link: RelayLink, gamma_th: float,
                    cfg: McConfig) -> Estimate:
    """Outage estimate: indicator mean of {end-to-end SNR < gamma_th}."""
    if gamma_th <= 0.0:
        raise ValueError(f"gamma_th must be positive, got {gamma_th}")
    sources = _link_sources(link, cfg)
    gain = _resolved_gain(link)

    def block(b: int, size: int):
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed,
                                                           spawn_key=(b,)))
        g = _end_to_end(link, gain, rng, size, sources)
        return (float(np.count_nonzero(g < gamma_th)),)

    (hits,) = _blocked_reduce(cfg, block)
    n = cfg.samples
    p_hat = hits / n
    std_err = math.sqrt(p_hat * (1.0 - p_hat) / n)
    degenerate = hits in (0.0, float(n))
    lo = max(0.0, p_hat - 1.96 * std_err)
    hi = min(1.0, p_hat + 1.96 * std_err)
    return Estimate(value=p_hat, std_err=std_err, ci95=(lo, hi),
                    degenerate=degenerate)


def estimate_aber(link: RelayLink, mod: Modulation,
                  cfg: McConfig) -> Estimate:
    """ABER estimate: sample mean of Gamma(P, Q*gamma) / (2 Gamma(P))."""
    sources = _link_sources(link, cfg)
    gain = _resolved_gain(link)

    def block(b: int, size: int):
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed,
                                                           spawn_key=(b,)))
        g = _end_to_end(link, gain, rng, size, sources)
        kern = 0.5 * gammaincc(mod.p, mod.q * g)
        return (float(kern.sum()), float(np.square(kern).sum()))

    total, total_sq = _blocked_reduce(cfg, block)
    n = cfg.samples
    mean = total / n
    var = max(0.0, total_sq / n - mean * mean)
    std_err = math.sqrt(var / n)
    degenerate = var == 0.0
    return Estimate(value=mean, std_err=std_err,
                    ci95=(mean - 1.96 * std_err, mean + 1.96 * std_err),
                    degenerate=degenerate)
