"""Truncated Fock-space realizations of displaced thermal states.

A displaced thermal state is the thermal (geometric) photon-number mixture
with mean photon number ``E`` displaced to a complex amplitude ``alpha``.
This module builds its density matrix on a finite photon-number cutoff,
evaluates its photon-counting statistics, and assembles the binary
phase-keyed mixture ``(rho_{+sqrt(x)} + rho_{-sqrt(x)})/2`` directly from a
closed form.

All probability evaluations run in log space so that large photon numbers
and small occupations do not underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import gammaln, logsumexp

__all__ = [
    "DisplacedThermal",
    "FockMatrix",
    "bpsk_mixture_matrix",
    "dephased_pmf",
    "photon_pmf",
    "recommended_dim",
    "to_fock",
]


@dataclass(frozen=True)
class DisplacedThermal:
    """A thermal state of mean occupation ``e_noise`` displaced to ``alpha``.

    Parameters
    ----------
    alpha : complex
        Mean of the annihilation operator, ``<a>``.
    e_noise : float
        Thermal photon number, ``>= 0``.
    """

    alpha: complex
    e_noise: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "e_noise", float(self.e_noise))
        if not self.e_noise >= 0:
            raise ValueError("e_noise must be nonnegative")

    @property
    def amp_sq(self) -> float:
        """Squared magnitude of the displacement, ``|alpha|^2``."""
        return abs(self.alpha) ** 2


@dataclass(frozen=True)
class FockMatrix:
    """A truncated density matrix on the first ``dim`` Fock levels.

    Validates Hermiticity (1e-12), positive semidefiniteness (eigenvalues
    above -1e-10) and that the retained trace is within ``tail_tol`` of one.
    """

    dim: int
    entries: np.ndarray
    tail_tol: float = field(default=1e-9)

    def __post_init__(self):
        object.__setattr__(self, "dim", int(self.dim))
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        entries = np.array(self.entries, dtype=complex)
        if entries.shape != (self.dim, self.dim):
            raise ValueError(
                f"entries must be {self.dim}x{self.dim}, got {entries.shape}"
            )
        if np.max(np.abs(entries - entries.conj().T)) > 1e-12:
            raise ValueError("entries must be Hermitian to 1e-12")
        tr = float(np.trace(entries).real)
        if not (1.0 - self.tail_tol - 1e-12 <= tr <= 1.0 + 1e-12):
            raise ValueError(
                f"trace {tr} outside [1 - tail_tol, 1] for tail_tol={self.tail_tol}"
            )
        if np.min(scipy.linalg.eigvalsh(entries)) < -1e-10:
            raise ValueError("entries must be positive semidefinite")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def trace_deficit(self) -> float:
        """Probability weight lost to the truncation, ``1 - tr(rho)``."""
        return 1.0 - float(np.trace(self.entries).real)


def recommended_dim(amp_sq: float, e_noise: float, tail_tol: float = 1e-9) -> int:
    """Photon-number cutoff covering a displaced thermal state's support.

    Starts from ``ceil(|alpha|^2 + E + 8 sqrt(|alpha|^2 + E + 1)) + 4``,
    which bounds the bulk of both the Poisson (displacement) and geometric
    (thermal) components, then grows the cutoff until the ``(n+1)``-weighted
    photon-number tail drops below ``tail_tol``.  The weighting makes the
    cutoff safe not just for the trace but for first-moment quantities
    (mean amplitude, energy), whose truncation error carries an extra
    factor of ``n``; the floor alone underestimates for ``E`` near 1, where
    the geometric tail sheds only ``ln((E+1)/E)`` per level.
    """
    amp_sq = float(amp_sq)
    e_noise = float(e_noise)
    if amp_sq < 0 or e_noise < 0:
        raise ValueError("amp_sq and e_noise must be nonnegative")
    if not tail_tol > 0:
        raise ValueError("tail_tol must be positive")
    s = amp_sq + e_noise
    floor_dim = math.ceil(s + 8.0 * math.sqrt(s + 1.0)) + 4
    cap = floor_dim + 64
    for _ in range(16):
        ns = np.arange(cap)
        weighted = (ns + 1.0) * dephased_pmf(amp_sq, e_noise, ns)
        if weighted[-8:].sum() < 1e-3 * tail_tol:
            tail = np.cumsum(weighted[::-1])[::-1]
            hits = np.nonzero(tail <= 0.5 * tail_tol)[0]
            return max(floor_dim, int(hits[0]))
        cap *= 2
    raise ValueError(
        f"no cutoff below {cap} meets tail_tol={tail_tol:.1e} for "
        f"amp_sq={amp_sq}, e_noise={e_noise}"
    )


def to_fock(state: DisplacedThermal, dim: int, tail_tol: float = 1e-9) -> FockMatrix:
    """Density matrix of a displaced thermal state on ``dim`` Fock levels.

    The thermal diagonal is conjugated by the displacement operator
    ``exp(alpha a^dag - alpha^* a)``, evaluated by dense matrix exponential
    at dimension ``dim + 2`` and then truncated.

    Parameters
    ----------
    state : DisplacedThermal
    dim : int
        Cutoff dimension, at least 2. :func:`recommended_dim` picks one
        large enough for the default ``tail_tol``.
    tail_tol : float
        Largest acceptable trace deficit.

    Raises
    ------
    ValueError
        If the truncation loses more than ``tail_tol`` of the trace; the
        message names the recommended dimension.
    """
    dim = int(dim)
    if dim < 2:
        raise ValueError("dim must be at least 2")
    e = state.e_noise
    work = dim + 2
    n = np.arange(work)
    if e == 0.0:
        diag = np.zeros(work)
        diag[0] = 1.0
    else:
        diag = np.exp(n * math.log(e) - (n + 1) * math.log1p(e))
    if state.alpha == 0:
        rho = np.diag(diag[:dim]).astype(complex)
    else:
        lower = np.diag(np.sqrt(np.arange(1.0, work)), -1)  # a^dag
        gen = state.alpha * lower - np.conj(state.alpha) * lower.T
        disp = scipy.linalg.expm(gen)
        rho = (disp * diag) @ disp.conj().T
        rho = rho[:dim, :dim]
        rho = 0.5 * (rho + rho.conj().T)
    deficit = 1.0 - float(np.trace(rho).real)
    if deficit > tail_tol:
        raise ValueError(
            f"dim={dim} leaves a trace deficit of {deficit:.3e} > {tail_tol:.1e}; "
            f"need dim >= {recommended_dim(state.amp_sq, e, tail_tol)}"
        )
    return FockMatrix(dim, rho, tail_tol)


def _log_poisson(x: float, n: np.ndarray) -> np.ndarray:
    out = np.full(n.shape, -np.inf)
    if x == 0.0:
        out[n == 0] = 0.0
        return out
    return n * math.log(x) - x - gammaln(n + 1.0)


def dephased_pmf(x: float, e_noise: float, n) -> float | np.ndarray:
    """Photon pmf of a phase-averaged displaced thermal state.

    For squared displacement magnitude ``x`` and thermal occupation ``E``:

        P(n | x) = E^n (E+1)^{-n-1} exp(-x/(E+1)) L_n(-x/(E(E+1)))

    with ``L_n`` the Laguerre polynomial; ``E = 0`` reduces to Poisson(x).
    The Laguerre factor is summed in log space (its terms are all positive
    at negative argument), so the result stays finite for any ``n``.

    Parameters
    ----------
    x : float
        Squared displacement, ``>= 0``.
    e_noise : float
        Thermal occupation, ``>= 0``.
    n : int or array of int
        Photon number(s).
    """
    x = float(x)
    e = float(e_noise)
    if x < 0:
        raise ValueError("x must be nonnegative")
    if e < 0:
        raise ValueError("e_noise must be nonnegative")
    n_arr = np.atleast_1d(np.asarray(n))
    if not np.issubdtype(n_arr.dtype, np.integer) or np.any(n_arr < 0):
        raise ValueError("n must contain nonnegative integers")
    scalar = np.isscalar(n) or np.asarray(n).ndim == 0

    if e == 0.0:
        logp = _log_poisson(x, n_arr)
    elif x == 0.0:
        logp = n_arr * math.log(e) - (n_arr + 1) * math.log1p(e)
    else:
        z = x / (e * (e + 1.0))
        if not math.isfinite(z):
            logp = _log_poisson(x, n_arr)
        else:
            lnz = math.log(z)
            logp = np.empty(n_arr.shape)
            flat = n_arr.reshape(-1)
            out = logp.reshape(-1)
            for i, nv in enumerate(flat):
                k = np.arange(nv + 1.0)
                terms = (
                    gammaln(nv + 1.0)
                    - gammaln(nv - k + 1.0)
                    - 2.0 * gammaln(k + 1.0)
                    + k * lnz
                )
                out[i] = logsumexp(terms)
            logp += (
                n_arr * math.log(e)
                - (n_arr + 1) * math.log1p(e)
                - x / (e + 1.0)
            )
    result = np.exp(logp)
    return float(result[0]) if scalar else result.reshape(np.shape(n))


def photon_pmf(state: DisplacedThermal, n) -> float | np.ndarray:
    """Photon-number pmf of a displaced thermal state.

    Depends on the displacement only through ``|alpha|^2``; see
    :func:`dephased_pmf` for the closed form and conventions.
    """
    return dephased_pmf(state.amp_sq, state.e_noise, n)


def bpsk_mixture_matrix(
    x: float, e_noise: float, dim: int, tail_tol: float = 1e-9
) -> FockMatrix:
    """Density matrix of the equal mixture of ``+sqrt(x)`` and ``-sqrt(x)``
    displaced thermal states.

    Entries with odd ``m - n`` vanish by the two-point phase symmetry; the
    even entries follow a closed form built on a terminating confluent
    hypergeometric sum whose terms are all positive, evaluated in log space:

        rho_mn = sqrt(m!/n!) E^n x^{(m-n)/2} e^{-x/(E+1)}
                 1F1(-n; m-n+1; -x/(E(E+1))) / ((m-n)! (E+1)^{m+1})

    for ``m >= n``.

    Parameters
    ----------
    x : float
        Squared displacement magnitude, ``>= 0``.
    e_noise : float
        Thermal occupation, strictly positive.
    dim : int
        Cutoff dimension, at least 2.
    tail_tol : float
        Largest acceptable trace deficit.

    Raises
    ------
    ValueError
        If the truncation at ``dim`` loses more than ``tail_tol`` of the
        trace; the message names the recommended dimension.
    """
    x = float(x)
    e = float(e_noise)
    dim = int(dim)
    if x < 0:
        raise ValueError("x must be nonnegative")
    if not e > 0:
        raise ValueError("e_noise must be positive")
    if dim < 2:
        raise ValueError("dim must be at least 2")

    ns = np.arange(dim)
    if x == 0.0:
        rho = np.diag(np.exp(ns * math.log(e) - (ns + 1) * math.log1p(e)))
    else:
        z = x / (e * (e + 1.0))
        if not math.isfinite(z):
            # Coherent-state limit: e^{-x} x^{(m+n)/2} / sqrt(m! n!).
            logc = 0.5 * (ns * math.log(x) - gammaln(ns + 1.0)) - 0.5 * x
            rho = np.exp(logc[:, None] + logc[None, :])
            parity = (ns[:, None] - ns[None, :]) % 2
            rho = np.where(parity == 0, rho, 0.0)
        else:
            lnz = math.log(z)
            lnx = math.log(x)
            lne1 = math.log1p(e)
            rho = np.zeros((dim, dim))
            for n in range(dim):
                d = np.arange(0, dim - n, 2)  # m = n + d
                k = np.arange(n + 1.0)
                # log of the terminating 1F1(-n; d+1; -z) series, terms >= 0
                base = (
                    gammaln(n + 1.0)
                    - gammaln(n - k + 1.0)
                    - gammaln(k + 1.0)
                    + k * lnz
                )
                mat = base[:, None] - (
                    gammaln(d[None, :] + 1.0 + k[:, None])
                    - gammaln(d[None, :] + 1.0)
                )
                log_f = logsumexp(mat, axis=0)
                log_entry = (
                    0.5 * (gammaln(n + d + 1.0) - gammaln(n + 1.0))
                    + n * math.log(e)
                    + 0.5 * d * lnx
                    - x / (e + 1.0)
                    - gammaln(d + 1.0)
                    - (n + d + 1) * lne1
                    + log_f
                )
                vals = np.exp(log_entry)
                rho[n + d, n] = vals
                rho[n, n + d] = vals
    deficit = 1.0 - float(np.trace(rho))
    if deficit > tail_tol:
        raise ValueError(
            f"dim={dim} leaves a trace deficit of {deficit:.3e} > {tail_tol:.1e}; "
            f"need dim >= {recommended_dim(x, e, tail_tol)}"
        )
    return FockMatrix(dim, rho.astype(complex), tail_tol)
