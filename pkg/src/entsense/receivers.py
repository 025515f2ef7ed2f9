"""Receivers for binary coherent-state discrimination and target detection.

Closed-form error probabilities for homodyne, heterodyne and Kennedy
detection of vacuum versus a coherent state, a Monte-Carlo Dolinar receiver
(noiseless, and with thermal noise handled by P-function sampling), photon
sampling from displaced thermal states, and the Gaussian-approximation
error probabilities of the parametric-amplifier (OPAR) and phase-conjugate
(PCR) target-detection baselines.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .fockstates import DisplacedThermal, dephased_pmf
from .gaussian import ChannelParams
from .special import RngStream

__all__ = [
    "DolinarConfig",
    "ThresholdDetector",
    "displaced_thermal_sample_photons",
    "dolinar_simulate",
    "opar_pe",
    "pcr_pe",
    "pe_heterodyne",
    "pe_homodyne",
    "pe_kennedy",
]

logger = logging.getLogger(__name__)

# Per-slice photon counts beyond this are clipped (and logged); they can
# only arise from pathological amplitude/noise choices.
_PHOTON_CAP = 10_000

# Trials are simulated in batches of this size, each batch on its own
# child random stream, so results do not depend on batch execution order.
_BATCH = 4096


@dataclass(frozen=True)
class DolinarConfig:
    """Settings for a Dolinar-receiver Monte-Carlo run.

    Parameters
    ----------
    slices : int
        Number of adaptive segments ``S`` the input state is split into.
    trials : int
        Number of Monte-Carlo trials.
    noise_nb : float, optional
        Thermal occupation of the two candidate states (0 for pure
        coherent states).
    """

    slices: int
    trials: int
    noise_nb: float = 0.0

    def __post_init__(self):
        if int(self.slices) != self.slices or self.slices < 1:
            raise ValueError("slices must be a positive integer")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be a positive integer")
        if not self.noise_nb >= 0:
            raise ValueError("noise_nb must be nonnegative")
        object.__setattr__(self, "slices", int(self.slices))
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "noise_nb", float(self.noise_nb))


@dataclass(frozen=True)
class ThresholdDetector:
    """Integer-threshold decision rule on a photon-count readout.

    Decides hypothesis 0 when the count falls below ``threshold`` and
    hypothesis 1 otherwise.
    """

    threshold: int

    def __post_init__(self):
        if int(self.threshold) != self.threshold:
            raise ValueError("threshold must be an integer")
        object.__setattr__(self, "threshold", int(self.threshold))

    @classmethod
    def from_moments(
        cls,
        mu0: float,
        sigma0: float,
        mu1: float,
        sigma1: float,
        m: int,
    ) -> "ThresholdDetector":
        """Near-optimum threshold for Gaussian count statistics.

        For per-copy means ``mu0 < mu1`` and standard deviations
        ``sigma0, sigma1`` over ``m`` copies, places the cut at
        ``ceil(m (sigma1 mu0 + sigma0 mu1) / (sigma0 + sigma1))``, the
        point where the two likelihoods weighted by their widths cross.
        """
        if sigma0 <= 0 or sigma1 <= 0:
            raise ValueError("sigma0 and sigma1 must be positive")
        if m < 1:
            raise ValueError("m must be a positive integer")
        cut = m * (sigma1 * mu0 + sigma0 * mu1) / (sigma0 + sigma1)
        return cls(threshold=math.ceil(cut))

    def decide(self, count):
        """Hypothesis index (0 or 1) for ``count`` (scalar or array)."""
        if np.isscalar(count):
            return 0 if count < self.threshold else 1
        return np.where(np.asarray(count) < self.threshold, 0, 1)


def pe_homodyne(alpha_r: float) -> float:
    """Error probability of threshold homodyne detection of |0> vs |alpha>.

    Only the component of the amplitude along the measured quadrature
    matters:  P = (1/2) Erfc(alpha_R / sqrt(2)), which decays like
    exp(-alpha_R^2 / 2) at large separation.
    """
    return 0.5 * math.erfc(float(alpha_r) / math.sqrt(2.0))


def pe_heterodyne(alpha: complex) -> float:
    """Error probability of heterodyne detection of |0> vs |alpha>.

    The optimal decision region is a half plane through the midpoint of the
    two outcome clouds, giving P = (1/2) Erfc(|alpha| / 2); coinciding
    candidates (alpha = 0) are misidentified exactly half the time.  Some
    treatments quote the same result without the leading 1/2, which would
    exceed that indistinguishable-state rate at small amplitude; the
    normalized form is used here.
    """
    return 0.5 * math.erfc(abs(complex(alpha)) / 2.0)


def pe_kennedy(alpha: complex) -> float:
    """Error probability of the Kennedy (nulling) receiver for |0> vs |alpha>.

    One candidate already being vacuum, nulling reduces to direct photon
    counting and errs only on the no-click outcome of the displaced
    candidate: P = (1/2) e^{-|alpha|^2}, roughly twice the Helstrom limit
    once |alpha|^2 >> 1.
    """
    return 0.5 * math.exp(-abs(complex(alpha)) ** 2)


def _wilson_stderr(errors: int, trials: int) -> float:
    """One-sigma Wilson-interval half width for ``errors`` out of ``trials``."""
    p_hat = errors / trials
    shrink = 1.0 + 1.0 / trials
    half = math.sqrt(p_hat * (1.0 - p_hat) / trials + 1.0 / (4.0 * trials**2))
    return half / shrink


def _dolinar_batch(
    amp: float, cfg: DolinarConfig, gen: np.random.Generator, n: int
) -> int:
    """Error count of ``n`` Dolinar trials on one random stream."""
    s = cfg.slices
    gamma = amp / (2.0 * math.sqrt(s))
    # Feedback displacement sizes; at amp = 0 no displacement carries
    # information and the ratio degenerates to 0/0, resolved to 0.
    k = np.arange(1, s + 1)
    denom = np.sqrt(-np.expm1(-(amp**2) * (k - 0.5) / s))
    u = np.divide(gamma, denom, out=np.zeros(s), where=denom > 0)

    h = gen.integers(0, 2, size=n)
    field = np.where(h == 1, amp, 0.0).astype(complex)
    if cfg.noise_nb > 0:
        # One P-function sample per trial: the thermal part of the true
        # state is a random coherent displacement shared by every slice.
        radius = np.sqrt(gen.exponential(cfg.noise_nb, size=n))
        field += radius * np.exp(2j * np.pi * gen.random(n))
    slice_field = field / math.sqrt(s)

    e_slice = cfg.noise_nb / s
    p0 = np.full(n, 0.5)
    p1 = np.full(n, 0.5)
    for uk in u:
        tie = p0 == p1
        g = np.where(p0 > p1, 0, 1)
        if tie.any():
            g[tie] = gen.integers(0, 2, size=int(tie.sum()))
        shift = np.where(g == 0, -gamma + uk, -gamma - uk)
        counts = gen.poisson(np.abs(slice_field + shift) ** 2)
        if counts.max(initial=0) > _PHOTON_CAP:
            logger.warning(
                "clipping %d photon count(s) above %d",
                int((counts > _PHOTON_CAP).sum()),
                _PHOTON_CAP,
            )
            counts = np.minimum(counts, _PHOTON_CAP)
        grid = np.arange(counts.max() + 1)
        like_match = np.atleast_1d(dephased_pmf((gamma - uk) ** 2, e_slice, grid))
        like_other = np.atleast_1d(dephased_pmf((gamma + uk) ** 2, e_slice, grid))
        matched = like_match[counts]
        other = like_other[counts]
        p0 *= np.where(g == 0, matched, other)
        p1 *= np.where(g == 0, other, matched)
        total = p0 + p1
        dead = ~np.isfinite(total) | (total <= 0.0)
        if dead.any():
            logger.warning(
                "posterior underflow in %d trial(s); reset to equal weights",
                int(dead.sum()),
            )
            p0[dead] = 0.5
            p1[dead] = 0.5
            total[dead] = 1.0
        p0 /= total
        p1 /= total

    tie = p0 == p1
    g = np.where(p0 > p1, 0, 1)
    if tie.any():
        g[tie] = gen.integers(0, 2, size=int(tie.sum()))
    return int(np.count_nonzero(g != h))


def dolinar_simulate(
    alpha: complex, cfg: DolinarConfig, rng
) -> tuple[float, float]:
    """Monte-Carlo error rate of the adaptive Dolinar receiver.

    Discriminates |0> from |alpha> (equal priors).  The input is split
    into ``cfg.slices`` equal segments; before segment ``k`` the receiver
    displaces by ``-gamma + u_k`` or ``-gamma - u_k`` according to the
    currently favored hypothesis, with ``gamma = |alpha| / (2 sqrt(S))``
    and ``u_k = gamma / sqrt(1 - exp(-|alpha|^2 (k - 1/2) / S))``, counts
    photons, and reweights the two hypotheses by the photon likelihoods
    (renormalized every slice); ties are broken by a fair coin.  The final
    decision is the hypothesis with the larger weight.

    With ``cfg.noise_nb > 0`` the candidates are displaced thermal states.
    Each trial then draws one coherent sample from the positive P-function
    of the true candidate (modulus-squared exponential with mean
    ``noise_nb``, uniform phase) shared by all slices — the thermal part of
    the state is not independent between segments — while the Bayesian
    weights use displaced-thermal photon statistics with the per-slice
    occupation ``noise_nb / S``.

    Trials run in fixed-size batches, each batch on an independent child
    stream of ``rng``, and error counts are summed, so the result is
    independent of batch execution order.

    Parameters
    ----------
    alpha : complex
        Amplitude of the displaced candidate; only ``|alpha|`` matters
        (the local oscillator absorbs the phase).
    cfg : DolinarConfig
        Slice count, trial count and candidate noise.
    rng : numpy.random.Generator or RngStream
        Source of randomness.

    Returns
    -------
    (error_rate, stderr)
        Observed error frequency and its one-sigma Wilson-interval width.

    Notes
    -----
    Per-slice photon counts above 10^4 are clipped and a warning logged;
    trials whose posterior weights both underflow to zero are reset to
    equal weights with a warning.
    """
    amp = abs(complex(alpha))
    n_batches = -(-cfg.trials // _BATCH)
    if isinstance(rng, RngStream):
        gens = (rng.trial_generator(b) for b in range(n_batches))
    else:
        seqs = rng.bit_generator.seed_seq.spawn(n_batches)
        gens = (np.random.default_rng(q) for q in seqs)
    errors = 0
    left = cfg.trials
    for gen in gens:
        n = min(_BATCH, left)
        errors += _dolinar_batch(amp, cfg, gen, n)
        left -= n
    return errors / cfg.trials, _wilson_stderr(errors, cfg.trials)


def displaced_thermal_sample_photons(state: DisplacedThermal, rng, size=None):
    """Sample photon counts from a displaced thermal state.

    Draws the thermal part from the positive P-function — a coherent
    displacement ``r`` with ``|r|^2`` exponential of mean ``state.e_noise``
    and uniform phase — then a Poisson count of mean ``|alpha + r|^2``.
    The marginal law is ``photon_pmf(state, n)``.

    Parameters
    ----------
    state : DisplacedThermal
        State to sample from.
    rng : numpy.random.Generator or RngStream
        Source of randomness.
    size : int, optional
        When given, return that many independent samples as an array.

    Returns
    -------
    int or ndarray of int
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    n = 1 if size is None else int(size)
    mean = np.full(n, state.alpha, dtype=complex)
    if state.e_noise > 0:
        radius = np.sqrt(gen.exponential(state.e_noise, size=n))
        mean += radius * np.exp(2j * np.pi * gen.random(n))
    counts = gen.poisson(np.abs(mean) ** 2)
    return int(counts[0]) if size is None else counts


def _opar_moments(
    n_s: float, ch: ChannelParams, gain: float
) -> tuple[float, float, float, float]:
    """Per-copy OPAR count means and deviations under the two hypotheses."""
    mu0 = gain * n_s + (gain - 1.0) * (1.0 + ch.n_b)
    mu1 = (
        mu0
        + (gain - 1.0) * ch.kappa * n_s
        + 2.0 * math.sqrt(gain * (gain - 1.0) * ch.kappa * n_s * (n_s + 1.0))
    )
    return (
        mu0,
        math.sqrt(mu0 * (mu0 + 1.0)),
        mu1,
        math.sqrt(mu1 * (mu1 + 1.0)),
    )


def opar_pe(
    n_s: float, ch: ChannelParams, m: int, gain: float | None = None
) -> float:
    """Target-detection error probability of the parametric-amplifier receiver.

    Threshold detection on the total photon count over ``m`` copies, in the
    Gaussian (large ``m``) approximation:

        P = (1/2) Erfc(sqrt(R m)),   R = (mu1 - mu0)^2 / (2 (sigma0 + sigma1)^2)

    with per-copy moments mu0 = G N_S + (G-1)(1 + N_B) and
    mu1 = mu0 + (G-1) kappa N_S + 2 sqrt(G(G-1) kappa N_S (N_S+1)),
    sigma_h^2 = mu_h (mu_h + 1).  ``gain=None`` selects the weak-signal
    optimum G = 1 + sqrt(N_S / (N_B (N_B+1))), for which R approaches
    kappa N_S / (2 N_B) when N_S << 1, kappa << 1 and N_B >> 1.

    Parameters
    ----------
    n_s : float
        Source brightness, ``>= 0``.
    ch : ChannelParams
        Channel under the target-present hypothesis.
    m : int
        Number of copies (the Gaussian approximation assumes ``m >> 1``).
    gain : float, optional
        Amplifier gain ``G >= 1``; defaults to the weak-signal optimum.
    """
    if n_s < 0:
        raise ValueError("n_s must be nonnegative")
    if m < 1:
        raise ValueError("m must be a positive integer")
    if gain is None:
        if ch.n_b <= 0:
            raise ValueError(
                "the default gain requires n_b > 0; pass gain explicitly"
            )
        gain = 1.0 + math.sqrt(n_s / (ch.n_b * (ch.n_b + 1.0)))
    if gain < 1.0:
        raise ValueError("gain must be at least 1")
    mu0, sigma0, mu1, sigma1 = _opar_moments(n_s, ch, gain)
    if mu1 == mu0:
        return 0.5
    rate = (mu1 - mu0) ** 2 / (2.0 * (sigma0 + sigma1) ** 2)
    return 0.5 * math.erfc(math.sqrt(rate * m))


def pcr_pe(n_s: float, ch: ChannelParams, m: int) -> float:
    """Target-detection error probability of the phase-conjugate receiver.

    Threshold detection on the photon-number difference between the two
    interferometer arms over ``m`` copies, in the Gaussian approximation
    and at conjugator gain 2:

        P = (1/2) Erfc(sqrt(R m)),
        R = kappa N_S (N_S+1)
            / (2 N_B + 4 N_S N_B + 6 N_S + 4 kappa N_S^2 + 3 kappa N_S + 2).

    R approaches kappa N_S / (2 N_B) when N_S << 1, kappa << 1 and
    N_B >> 1, matching the parametric-amplifier receiver; away from that
    corner the phase conjugator does slightly better.

    Parameters
    ----------
    n_s : float
        Source brightness, ``>= 0``.
    ch : ChannelParams
        Channel under the target-present hypothesis.
    m : int
        Number of copies (the Gaussian approximation assumes ``m >> 1``).
    """
    if n_s < 0:
        raise ValueError("n_s must be nonnegative")
    if m < 1:
        raise ValueError("m must be a positive integer")
    rate = (
        ch.kappa
        * n_s
        * (n_s + 1.0)
        / (
            2.0 * ch.n_b
            + 4.0 * n_s * ch.n_b
            + 6.0 * n_s
            + 4.0 * ch.kappa * n_s**2
            + 3.0 * ch.kappa * n_s
            + 2.0
        )
    )
    return 0.5 * math.erfc(math.sqrt(rate * m))
