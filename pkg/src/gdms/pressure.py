"""The non-backtracking shift over 2d letters, its pressure, and Bowen roots.

A linear system over F_d assigns each letter v a contraction ratio c(v) in
(0,1); admissible words are reduced words, and the weight of a word is the
product of its letter ratios raised to an exponent s.  The weighted word sums

    Z_n(s) = sum over admissible words of length n of prod_i c(w_i)^s

grow like the Perron eigenvalue rho(s) of the (2d x 2d) transfer matrix

    M(s)[v][w] = c(w)^s   if w != v^-1,   else 0,

so the pressure function is P(s) = log rho(s).  P is strictly decreasing and
convex in s, positive at s=0 and eventually negative, so it has a unique
zero: the Bowen root, which is both the exponent of convergence of the full
Poincare series and the Hausdorff dimension of the limit set of any
geometric realization satisfying the open set condition.

P(s) is defined by a limit of length-windowed sums; for the locally constant
weights used here that limit exists and equals log rho(s), and the package
computes the eigenvalue throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError
from .groups import Letter, QuotientGroup, ReducedWord, inverse_code
from .linalg import PerronResult, perron_value_dense

SPECTRAL_TOL = 1e-12
SPECTRAL_MAX_ITER = 1_000_000


# ---------------------------------------------------------------------------
# System specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearGdmsSpec:
    """Rank d >= 2 plus one contraction ratio per letter (code order).

    ``symmetric`` is true exactly when every generator and its inverse carry
    the same ratio; the amenability machinery requires it.  ``geometry``
    optionally carries rendering hints (see the render module).
    """

    d: int
    ratios: tuple[float, ...]
    geometry: dict | None = None

    def __post_init__(self):
        if self.d < 2:
            raise ConfigError(f"rank must be >= 2, got {self.d}")
        if len(self.ratios) != 2 * self.d:
            raise ConfigError(
                f"need {2 * self.d} ratios (one per letter), got {len(self.ratios)}"
            )
        for i, c in enumerate(self.ratios):
            if not (0.0 < c < 1.0):
                raise ConfigError(
                    f"contraction ratio for letter {Letter.from_code(i)!r} "
                    f"must lie strictly inside (0,1), got {c}"
                )

    @property
    def symmetric(self) -> bool:
        return all(
            self.ratios[2 * i] == self.ratios[2 * i + 1] for i in range(self.d)
        )

    @cached_property
    def ratio_array(self) -> np.ndarray:
        a = np.array(self.ratios, dtype=float)
        a.flags.writeable = False
        return a

    @cached_property
    def log_ratios(self) -> np.ndarray:
        a = np.log(self.ratio_array)
        a.flags.writeable = False
        return a

    def ratio(self, letter: Letter) -> float:
        return self.ratios[letter.code]

    @staticmethod
    def equal_ratios(d: int, c: float, geometry: dict | None = None) -> "LinearGdmsSpec":
        return LinearGdmsSpec(d, (float(c),) * (2 * d), geometry)

    @staticmethod
    def symmetric_ratios(per_generator: Sequence[float],
                         geometry: dict | None = None) -> "LinearGdmsSpec":
        ratios = []
        for c in per_generator:
            ratios += [float(c), float(c)]
        return LinearGdmsSpec(len(per_generator), tuple(ratios), geometry)

    @staticmethod
    def from_config(cfg: dict) -> "LinearGdmsSpec":
        d = cfg.get("d")
        if not isinstance(d, int):
            raise ConfigError("gdms config needs an integer rank 'd'")
        geometry = cfg.get("geometry")
        if "ratio" in cfg:
            return LinearGdmsSpec.equal_ratios(d, cfg["ratio"], geometry)
        if "ratios_by_generator" in cfg:
            per_gen = cfg["ratios_by_generator"]
            if len(per_gen) != d:
                raise ConfigError(f"ratios_by_generator must have {d} entries")
            return LinearGdmsSpec.symmetric_ratios(per_gen, geometry)
        if "ratios" in cfg:
            return LinearGdmsSpec(d, tuple(float(c) for c in cfg["ratios"]), geometry)
        raise ConfigError("gdms config needs 'ratio', 'ratios_by_generator' or 'ratios'")


# ---------------------------------------------------------------------------
# Words and weights
# ---------------------------------------------------------------------------

def _codes_of(w) -> tuple[int, ...]:
    if isinstance(w, ReducedWord):
        return w.codes()
    return tuple(x.code if isinstance(x, Letter) else int(x) for x in w)


def is_admissible(w) -> bool:
    """True iff no letter is followed by its own inverse."""
    codes = _codes_of(w)
    return all(b != (a ^ 1) for a, b in zip(codes, codes[1:]))


def log_weight(spec: LinearGdmsSpec, w, s: float) -> float:
    """log of prod c(w_i)^s; the empty word gets 0 (weight 1) by convention."""
    codes = _codes_of(w)
    if not is_admissible(codes):
        raise ConfigError("word is not admissible")
    return s * float(spec.log_ratios[list(codes)].sum()) if codes else 0.0


def ergodic_weight(spec: LinearGdmsSpec, w, s: float) -> float:
    """prod c(w_i)^s, multiplicative over admissible concatenation."""
    return math.exp(log_weight(spec, w, s))


# ---------------------------------------------------------------------------
# Transfer matrices and spectral data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransferMatrix:
    """Weighted non-backtracking incidence matrix at exponent s.

    Row v, column w holds c(w)^s when w != v^-1 and 0 on the single
    backtracking entry per row; irreducible (indeed primitive) for d >= 2.
    """

    spec: LinearGdmsSpec
    s: float
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return 2 * self.spec.d


@dataclass(frozen=True)
class SpectralData:
    """Perron value with positive left/right eigenvectors.

    Normalization: the right vector has maximum entry 1 and left . right = 1.
    """

    rho: float
    right_vec: np.ndarray
    left_vec: np.ndarray
    iterations: int
    residual: float


def transfer_matrix(spec: LinearGdmsSpec, s: float) -> TransferMatrix:
    n = 2 * spec.d
    weights = spec.ratio_array ** s
    m = np.tile(weights, (n, 1))
    for v in range(n):
        m[v, inverse_code(v)] = 0.0
    m.flags.writeable = False
    return TransferMatrix(spec, float(s), m)


def spectral_data(tm: TransferMatrix,
                  tol: float = SPECTRAL_TOL,
                  max_iter: int = SPECTRAL_MAX_ITER) -> SpectralData:
    m = tm.matrix
    right: PerronResult = perron_value_dense(m, tol=tol, max_iter=max_iter)
    left: PerronResult = perron_value_dense(m.T, tol=tol, max_iter=max_iter)
    r = right.vector / right.vector.max()
    l = left.vector / float(left.vector @ r)
    return SpectralData(
        rho=right.value,
        right_vec=r,
        left_vec=l,
        iterations=right.iterations + left.iterations,
        residual=max(right.residual, left.residual),
    )


def pressure(spec: LinearGdmsSpec, s: float) -> float:
    """P(s) = log rho(M(s)); strictly decreasing and convex in s."""
    return math.log(spectral_data(transfer_matrix(spec, s)).rho)


def bowen_root(spec: LinearGdmsSpec, tol: float = 1e-12) -> float:
    """The unique zero of the pressure function.

    Bracketed bisection with Newton polish; the derivative of rho comes from
    the eigenvector perturbation identity d rho/ds = l . (dM/ds) . r.
    """
    lo = 0.0
    hi = math.log(2 * spec.d - 1) / (-math.log(max(spec.ratios))) + 1.0
    p_lo = pressure(spec, lo)
    p_hi = pressure(spec, hi)
    if not (p_lo > 0.0 > p_hi):  # pragma: no cover - guaranteed by construction
        raise ConfigError("pressure bracket failed; ratios out of range?")
    s = 0.5 * (lo + hi)
    log_c = spec.log_ratios
    for _ in range(200):
        tm = transfer_matrix(spec, s)
        sd = spectral_data(tm)
        p = math.log(sd.rho)
        if abs(p) <= tol:
            return s
        if p > 0:
            lo = s
        else:
            hi = s
        # dM/ds multiplies column w by log c(w); Newton step on log rho.
        drho = float(sd.left_vec @ (tm.matrix * log_c[None, :]) @ sd.right_vec)
        step = s - p / (drho / sd.rho)
        s = step if lo < step < hi else 0.5 * (lo + hi)
    return s


# ---------------------------------------------------------------------------
# Gibbs measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GibbsMeasure:
    """Stationary Markov measure realizing the Gibbs property on cylinders.

    ``phat`` is the stochasticized transfer matrix, ``pi`` its stationary
    law; cylinder masses are uniformly comparable to weight(w) * e^{-nP}.
    """

    spec: LinearGdmsSpec
    s: float
    pi: np.ndarray
    phat: np.ndarray
    pressure: float

    def log_cylinder_mass(self, w) -> float:
        codes = _codes_of(w)
        if not codes:
            return 0.0
        if not is_admissible(codes):
            raise ConfigError("word is not admissible")
        total = math.log(self.pi[codes[0]])
        for a, b in zip(codes, codes[1:]):
            total += math.log(self.phat[a, b])
        return total

    def cylinder_mass(self, w) -> float:
        return math.exp(self.log_cylinder_mass(w))


def gibbs_measure(spec: LinearGdmsSpec, s: float) -> GibbsMeasure:
    tm = transfer_matrix(spec, s)
    sd = spectral_data(tm)
    r = sd.right_vec
    phat = tm.matrix * r[None, :] / (sd.rho * r[:, None])
    pi = sd.left_vec * r
    pi = pi / pi.sum()
    phat.flags.writeable = False
    pi.flags.writeable = False
    return GibbsMeasure(spec, float(s), pi, phat, math.log(sd.rho))


# ---------------------------------------------------------------------------
# Weighted word sums and Poincare partial sums
# ---------------------------------------------------------------------------

def log_partition_sums(spec: LinearGdmsSpec, s: float, n_max: int) -> np.ndarray:
    """log Z_n for n = 1..n_max via renormalized vector iteration.

    Z_n = u(s)^T M(s)^{n-1} 1 with u(s)[v] = c(v)^s; the running vector is
    rescaled every step so exponents spanning hundreds of orders of
    magnitude stay representable.
    """
    if n_max < 1:
        raise ConfigError("n_max must be >= 1")
    m = transfer_matrix(spec, s).matrix
    v = spec.ratio_array ** s
    out = np.empty(n_max)
    log_scale = 0.0
    for n in range(1, n_max + 1):
        total = float(v.sum())
        out[n - 1] = log_scale + math.log(total)
        v = m.T @ v
        peak = float(v.max())
        if peak <= 0.0:  # pragma: no cover - impossible for d >= 2
            out[n:] = -np.inf
            break
        v /= peak
        log_scale += math.log(peak)
    return out


@dataclass(frozen=True)
class PartialSums:
    """Per-length log terms and log partial sums of a Poincare series."""

    source: str  # "full" or "kernel"
    s: float
    lengths: np.ndarray
    log_terms: np.ndarray
    exact: bool = True

    @property
    def log_partials(self) -> np.ndarray:
        return np.array(
            [logsumexp(self.log_terms[: k + 1]) for k in range(len(self.log_terms))]
        )


def poincare_partial(
    spec: LinearGdmsSpec,
    s: float,
    H: QuotientGroup | str = "full",
    n_max: int = 30,
    ball_cap: int | None = None,
) -> PartialSums:
    """Partial sums (by word length) of the Poincare series at exponent s.

    ``H="full"`` sums over all of F_d via transfer-matrix powers.  Passing a
    quotient group sums over its kernel words instead (delegated to the
    kernel-counting dynamic program); the ``exact`` flag reflects whether the
    pruning ball fit under the cap.
    """
    if isinstance(H, str):
        if H != "full":
            raise ConfigError(f"unknown Poincare source {H!r}")
        log_terms = log_partition_sums(spec, s, n_max)
        return PartialSums("full", float(s), np.arange(1, n_max + 1), log_terms)
    from .kernel import kernel_counts

    kwargs = {} if ball_cap is None else {"ball_cap": ball_cap}
    table = kernel_counts(spec, H, s, n_max, **kwargs)
    return PartialSums(
        "kernel", float(s), np.arange(1, n_max + 1), table.log_a, table.exact
    )


def pressure_curve(spec: LinearGdmsSpec, s_values: Iterable[float]):
    """Rows (s, P(s), rho, iterations, residual) for CSV emission."""
    rows = []
    for s in s_values:
        sd = spectral_data(transfer_matrix(spec, float(s)))
        rows.append((float(s), math.log(sd.rho), sd.rho, sd.iterations, sd.residual))
    return rows
