"""Explicit sparse-frequency covering bounds and dimension pipelines.

Everything here is a closed-form (or numerically certified) quantity: the
two-digit character gap eta(c, p), the covering exponent delta in the three
supported regimes, the explicit unit-square covering count, the flattening
gain sigma solved from kappa - 2*eps = delta(eps), and the Bernoulli
correlation/Frostman dimension lower-bound pipelines built on top.

Validity convention: a DecayBound is ``valid`` only when the rescaled
parameter eps_tilde lies in (0, 1/2) and delta < 2.  Outside (0, 1), the
delta formula is undefined and the record carries the trivial covering
exponent 2.0 (every frequency set in a T-disk is covered by O(T^2) unit
squares) with valid=False and a reason; nothing is extrapolated silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError, RegimeError
from .measures import as_weights

TRIVIAL_DELTA = 2.0


def entropy_h(x: float) -> float:
    """Binary entropy -x*log(x) - (1-x)*log(1-x) in nats; h(0) = h(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"entropy argument must lie in [0, 1], got {x!r}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log(x) - (1.0 - x) * math.log(1.0 - x)


def eta_two_digit(c: float, p1: float, p2: float) -> float:
    """Character gap p1 + p2 - sqrt(p1^2 + 2*p1*p2*cos(pi*c) + p2^2).

    Strictly positive for c in (0, 1); the c = 1 endpoint is included
    since the expression stays well defined there (cos(pi) = -1).
    """
    if not 0.0 <= c <= 1.0:
        raise DomainError(f"c must lie in [0, 1], got {c!r}")
    if p1 <= 0 or p2 <= 0 or p1 + p2 > 1.0 + 1e-12:
        raise DomainError("need p1, p2 > 0 with p1 + p2 <= 1")
    return p1 + p2 - math.sqrt(p1 * p1 + 2 * p1 * p2 * math.cos(math.pi * c) + p2 * p2)


def _abs_phi_two_digit(theta, p):
    """Worst-case |Phi| when only the first two (normalized) digits are used."""
    rest = 1.0 - p[0] - p[1]
    return np.abs(p[0] + p[1] * np.exp(2j * np.pi * theta)) + rest


def _abs_phi_lattice3(x, y, p):
    """|p1 + p2 e^{2 pi i x} + p3 e^{-2 pi i y}| + remaining mass."""
    rest = 1.0 - p[0] - p[1] - p[2]
    val = p[0] + p[1] * np.exp(2j * np.pi * x) + p[2] * np.exp(-2j * np.pi * y)
    return np.abs(val) + rest


@lru_cache(maxsize=256)
def eta_numeric(
    phi_kind: str,
    params: tuple,
    c: float,
    grid: int = 512,
    refine_tol: float = 1e-10,
) -> float:
    """Numerical infimum of 1 - |Phi| over the regime's exclusion region.

    phi_kind selects the region and character:

    * ``two_digit``      -- ||Re z|| >= c/2 on the circle (1D)
    * ``lattice_3digit`` -- distance to the lattice Z^2 >= c/2 (2D torus,
      digits normalized to 0, 1, i)
    * ``simplex_sum_d``  -- ||y_1 + ... + y_d|| >= c/2; the character
      depends on the coordinate sum only, so this reduces to the same 1D
      problem as ``two_digit``

    Coarse grid search followed by local window refinement until two
    successive estimates differ by less than ``refine_tol``.
    """
    if not 0.0 < c < 1.0:
        raise DomainError(f"c must lie in (0, 1), got {c!r}")
    p = as_weights(params)
    if phi_kind in ("two_digit", "simplex_sum_d"):
        lo, hi = c / 2.0, 0.5
        theta = np.linspace(lo, hi, grid)
        f = 1.0 - _abs_phi_two_digit(theta, p)
        best_i = int(np.argmin(f))
        best_x, best = float(theta[best_i]), float(f[best_i])
        width = (hi - lo) / grid
        prev = math.inf
        for _ in range(200):
            if abs(prev - best) < refine_tol:
                return best
            prev = best
            a = max(lo, best_x - width)
            b = min(hi, best_x + width)
            theta = np.linspace(a, b, 65)
            f = 1.0 - _abs_phi_two_digit(theta, p)
            i = int(np.argmin(f))
            if f[i] < best:
                best, best_x = float(f[i]), float(theta[i])
            width *= 0.5
        raise ConvergenceError("eta refinement stalled (two_digit)")
    if phi_kind == "lattice_3digit":
        if len(p) < 3:
            raise DomainError("lattice_3digit needs at least 3 weights")
        ax = np.linspace(-0.5, 0.5, grid, endpoint=False)
        xx, yy = np.meshgrid(ax, ax, indexing="ij")
        mask = xx * xx + yy * yy >= (c / 2.0) ** 2
        f = 1.0 - _abs_phi_lattice3(xx, yy, p)
        f = np.where(mask, f, np.inf)
        i = int(np.argmin(f))
        best = float(f.ravel()[i])
        bx, by = float(xx.ravel()[i]), float(yy.ravel()[i])
        width = 1.5 / grid
        prev = math.inf
        for _ in range(200):
            if abs(prev - best) < refine_tol:
                return best
            prev = best
            gx = np.linspace(max(-0.5, bx - width), min(0.5, bx + width), 33)
            gy = np.linspace(max(-0.5, by - width), min(0.5, by + width), 33)
            xx2, yy2 = np.meshgrid(gx, gy, indexing="ij")
            mask2 = xx2 * xx2 + yy2 * yy2 >= (c / 2.0) ** 2
            f2 = np.where(mask2, 1.0 - _abs_phi_lattice3(xx2, yy2, p), np.inf)
            i2 = int(np.argmin(f2))
            if f2.ravel()[i2] < best:
                best = float(f2.ravel()[i2])
                bx, by = float(xx2.ravel()[i2]), float(yy2.ravel()[i2])
            width *= 0.5
        raise ConvergenceError("eta refinement stalled (lattice_3digit)")
    raise DomainError(f"unknown phi_kind {phi_kind!r}")


@dataclass(frozen=True)
class DecayBound:
    """One fully evaluated covering-exponent record."""

    regime: str  # "complex" | "real_noncollinear" | "higher_dim"
    epsilon: float
    epsilon_tilde: float
    rho: float
    eta: float
    entropy: float  # h(eps_tilde), nats
    delta: float
    branching: int
    valid: bool
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "regime": self.regime,
            "epsilon": self.epsilon,
            "epsilon_tilde": self.epsilon_tilde,
            "rho": self.rho,
            "eta": self.eta,
            "entropy": self.entropy,
            "delta": self.delta,
            "branching": self.branching,
            "valid": self.valid,
            "reason": self.reason,
        }


def _assemble_bound(
    regime: str,
    lam_abs: float,
    coef: float,
    branching: int,
    c: float,
    eta: float,
    epsilon: float,
) -> DecayBound:
    """Shared delta assembly for all three regimes.

    delta = (coef * log(branching) * et + h(et)) / log(1/|lam|), with
    et = eps * log|lam| / log(1 - eta).
    """
    if epsilon <= 0:
        raise DomainError("epsilon must be > 0")
    et = epsilon * math.log(lam_abs) / math.log1p(-eta)
    rho = c / 2.0
    if 0.0 < et < 1.0:
        h = entropy_h(et)
        delta = (coef * math.log(branching) * et + h) / math.log(1.0 / lam_abs)
        if et < 0.5 and delta < 2.0:
            return DecayBound(regime, epsilon, et, rho, eta, h, delta, branching, True)
        if et >= 0.5:
            reason = "epsilon_tilde >= 1/2: index-set entropy count unavailable"
        else:
            reason = "delta >= 2: weaker than the trivial covering"
        return DecayBound(regime, epsilon, et, rho, eta, h, delta, branching, False, reason)
    # formula undefined; record the trivial covering exponent instead of NaN
    return DecayBound(
        regime, epsilon, et, rho, eta, 0.0, TRIVIAL_DELTA, branching, False,
        "epsilon_tilde outside (0, 1): delta formula undefined, trivial "
        "exponent 2 recorded",
    )


def _complex_parameters_from_modulus(lam_abs: float, p):
    a2 = lam_abs**2
    c = a2 / (a2 + 3.0)
    eta = eta_two_digit(c, p[0], p[1])
    branching = math.ceil(0.5 * (1.0 + 3.0 / a2))
    return c, eta, branching


def _complex_parameters(lam: complex, p):
    if lam.imag == 0.0:
        raise RegimeError("complex regime needs Im(lambda) != 0")
    if not 0.0 < abs(lam) < 1.0:
        raise DomainError("need 0 < |lambda| < 1")
    return _complex_parameters_from_modulus(abs(lam), p)


def delta_complex(lam: complex, p, epsilon: float) -> DecayBound:
    """Covering exponent for a non-real contraction ratio.

    rho = |lam|^2 / (2(|lam|^2+3)), eta = eta_two_digit(2*rho, p1, p2),
    branching = ceil((1 + 3/|lam|^2)/2), and
    delta = (log(branching)*et + h(et)) / log(1/|lam|).
    """
    p = as_weights(p)
    lam = complex(lam)
    c, eta, branching = _complex_parameters(lam, p)
    return _assemble_bound("complex", abs(lam), 1.0, branching, c, eta, epsilon)


def delta_real_noncollinear(lam: float, p, epsilon: float) -> DecayBound:
    """Covering exponent for real lambda in (0,1), >= 3 non-collinear digits.

    delta = (4*log(ceil(2 + 1/lam))*et + h(et)) / log(1/lam) with eta from
    the lattice character at c = lam / (2(lam+1)).
    """
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise RegimeError("real regime needs lambda in (0, 1)")
    p = as_weights(p)
    if len(p) < 3:
        raise RegimeError("real regime needs at least 3 digits")
    c = lam / (2.0 * (lam + 1.0))
    eta = eta_numeric("lattice_3digit", p, c)
    branching = math.ceil(2.0 + 1.0 / lam)
    return _assemble_bound("real_noncollinear", lam, 4.0, branching, c, eta, epsilon)


def delta_higherdim(lam: float, p, epsilon: float, d: int) -> DecayBound:
    """Covering exponent for the R^d (d >= 3) diagonalizable-orthogonal case.

    delta = (log(ceil(1 + 1/lam))*et + h(et)) / log(1/lam) with eta from
    the coordinate-sum character at c = lam / (lam+1).
    """
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise RegimeError("higher-dim regime needs lambda in (0, 1)")
    if d < 3:
        raise RegimeError("higher-dim regime is for d >= 3")
    p = as_weights(p)
    if len(p) < 3:
        raise RegimeError("higher-dim regime needs at least 3 digits")
    c = lam / (lam + 1.0)
    eta = eta_numeric("simplex_sum_d", p, c)
    branching = math.ceil(1.0 + 1.0 / lam)
    return _assemble_bound("higher_dim", lam, 1.0, branching, c, eta, epsilon)


def covering_bound(lam: complex, p, epsilon: float, N: int) -> float:
    """Explicit unit-square count M_N * e^{h(et) N} * q for the scan disk.

    M_N = 3 * 4^3 * branching^(3*et*N + 2) counts admissible digit
    sequences; e^{h(et) N} counts good-index sets; q is the number of
    anchored unit squares needed per covering rectangle of dimensions
    (|a|+1)/(2|b|) x 1, namely (ceil((|a|+1)/(2|b|)) + 1) * 2.  The
    rectangle factor blows up as |Im lambda| -> 0; that is surfaced here
    rather than hidden.
    """
    lam = complex(lam)
    p = as_weights(p)
    if N < 0:
        raise DomainError("N must be >= 0")
    c, eta, branching = _complex_parameters(lam, p)
    et = epsilon * math.log(abs(lam)) / math.log1p(-eta)
    if not 0.0 < et < 1.0:
        raise DomainError(
            f"epsilon_tilde = {et:g} outside (0, 1): covering count undefined"
        )
    a, b = lam.real, lam.imag
    q = (math.ceil((abs(a) + 1.0) / (2.0 * abs(b))) + 1) * 2
    m_n = 3.0 * 64.0 * branching ** (3.0 * et * N + 2.0)
    return m_n * math.exp(entropy_h(et) * N) * q


def _delta_dispatch(lam, p, epsilon, regime, d):
    if regime == "complex":
        return delta_complex(lam, p, epsilon)
    if regime == "real_noncollinear":
        return delta_real_noncollinear(lam, p, epsilon)
    if regime == "higher_dim":
        return delta_higherdim(lam, p, epsilon, d if d is not None else 3)
    raise DomainError(f"unknown regime {regime!r}")


def solve_flattening_epsilon(
    lam,
    p,
    kappa: float,
    regime: str = "auto",
    d: int | None = None,
) -> tuple[float, float, DecayBound]:
    """Solve kappa - 2*eps = delta(eps) by bisection on (0, kappa/2).

    Returns (eps, sigma=2*eps, bound at the root).  g(eps) =
    kappa - 2*eps - delta(eps) is strictly decreasing (delta is
    increasing), so the root is unique; delta is capped at the trivial
    exponent 2 where the formula is undefined, which keeps g continuous.
    Absolute tolerance on eps: 1e-12.
    """
    if not 0.0 < kappa < 2.0:
        raise DomainError("kappa must lie in (0, 2)")
    if regime == "auto":
        regime = "complex" if complex(lam).imag != 0.0 else "real_noncollinear"

    def g(eps):
        bound = _delta_dispatch(lam, p, eps, regime, d)
        return kappa - 2.0 * eps - min(bound.delta, TRIVIAL_DELTA)

    lo, hi = 0.0, kappa / 2.0
    if g(hi) >= 0.0:
        raise ConvergenceError(
            "no sign change for kappa - 2*eps - delta(eps) on (0, kappa/2)"
        )
    # g(0+) -> kappa > 0
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    eps = 0.5 * (lo + hi)
    bound = _delta_dispatch(lam, p, eps, regime, d)
    return eps, 2.0 * eps, bound


@dataclass(frozen=True)
class DimensionBound:
    """Bernoulli-convolution dimension lower bounds from the EK pipeline."""

    lam: complex
    p: float
    N: int
    sigma: float
    kappa: float
    dim2_lower: float
    diminf_lower: float
    note: str = ""

    def to_json(self) -> dict:
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "p": self.p,
            "N": self.N,
            "sigma": self.sigma,
            "kappa": self.kappa,
            "dim2_lower": self.dim2_lower,
            "diminf_lower": self.diminf_lower,
            "note": self.note,
        }


def _smallest_n_below(alam: float, threshold: float) -> int:
    n = 1
    while alam**n >= threshold:
        n += 1
        if n > 10**7:
            raise ConvergenceError("contraction too close to 1")
    return n


def _dim2_pipeline(lam: complex, p_bias: float, sigma_factor: float):
    """Correlation-dimension lower bound 2 - (delta(sigma/2) + sigma).

    N is the smallest integer with |lam|^N < 1/sqrt(2) (so |lam|^N falls
    in (1/2, 1/sqrt(2)) whenever |lam| > 1/sqrt(2)), sigma =
    sigma_factor/(N-1), and delta is evaluated for the convolution factor
    measure at contraction lam^N.  delta only depends on |lam^N|, so the
    degenerate alignment Im(lam^N) = 0 is noted rather than refused; it
    is capped at the trivial exponent 2 where the explicit formula gives
    no information.
    """
    lam = complex(lam)
    alam = abs(lam)
    if not 0.0 < p_bias < 1.0:
        raise DomainError("p_bias must lie in (0, 1)")
    if not alam > 2.0**-0.5:
        raise RegimeError("pipeline needs |lambda| > 1/sqrt(2) (so N >= 2)")
    if not alam < 1.0:
        raise DomainError("need |lambda| < 1")
    N = _smallest_n_below(alam, 2.0**-0.5)
    sigma = sigma_factor / (N - 1)
    epsilon = sigma / 2.0
    lam_n = lam**N
    note = ""
    if lam_n.imag == 0.0:
        note = (
            "degenerate alignment: Im(lambda^N) = 0; delta evaluated "
            "through |lambda^N| only"
        )
        c, eta, branching = _complex_parameters_from_modulus(
            alam**N, (p_bias, 1.0 - p_bias)
        )
        bound = _assemble_bound("complex", alam**N, 1.0, branching, c, eta, epsilon)
    else:
        bound = delta_complex(lam_n, (p_bias, 1.0 - p_bias), epsilon)
    if not bound.valid and not note:
        note = f"decay bound not valid at epsilon={epsilon:g}: {bound.reason}"
    kappa = min(bound.delta, TRIVIAL_DELTA) + sigma
    return N, sigma, kappa, 2.0 - kappa, note


def bernoulli_dim_lower(lam: complex, p_bias: float) -> DimensionBound:
    """Biased-Bernoulli dimension lower bounds via the convolution tower.

    sigma = 1/(N-1) with N minimal for |lam|^N < 1/sqrt(2); kappa =
    delta(sigma/2; lam^N) + sigma; dim2_lower = 2 - kappa.  The Frostman
    bound uses the two-factor decomposition at lam^2 and the planar
    convolution inequality dim_inf(mu*nu) >= dim_2(mu) + dim_2(nu) - 2.
    """
    lam = complex(lam)
    N, sigma, kappa, dim2, note = _dim2_pipeline(lam, p_bias, 1.0)
    lam_sq = lam * lam
    if abs(lam_sq) > 2.0**-0.5:
        _, _, _, dim2_sq, note_sq = _dim2_pipeline(lam_sq, p_bias, 1.0)
        diminf = 2.0 * dim2_sq - 2.0
        if note_sq and not note:
            note = "lambda^2 stage: " + note_sq
    else:
        diminf = 0.0
        note = (note + "; " if note else "") + (
            "|lambda^2| <= 1/sqrt(2): Frostman stage unavailable, trivial 0 used"
        )
    return DimensionBound(
        lam, p_bias, N, sigma, kappa, dim2, min(diminf, dim2), note
    )


def bernoulli_unbiased_dim_lower(lam: complex) -> DimensionBound:
    """Unbiased pipeline with the open-set-condition base value.

    The base measure at contraction lam^N has correlation dimension
    log(1/2)/log|lam|^N, which sharpens sigma to
    (log(1/|lam|)/log(2/|lam|)) / (N-1); the rest matches the biased
    pipeline.
    """
    lam = complex(lam)
    alam = abs(lam)
    factor = math.log(1.0 / alam) / math.log(2.0 / alam)
    N, sigma, kappa, dim2, note = _dim2_pipeline(lam, 0.5, factor)
    lam_sq = lam * lam
    if abs(lam_sq) > 2.0**-0.5:
        factor_sq = math.log(1.0 / abs(lam_sq)) / math.log(2.0 / abs(lam_sq))
        _, _, _, dim2_sq, note_sq = _dim2_pipeline(lam_sq, 0.5, factor_sq)
        diminf = 2.0 * dim2_sq - 2.0
        if note_sq and not note:
            note = "lambda^2 stage: " + note_sq
    else:
        diminf = 0.0
        note = (note + "; " if note else "") + (
            "|lambda^2| <= 1/sqrt(2): Frostman stage unavailable, trivial 0 used"
        )
    return DimensionBound(lam, 0.5, N, sigma, kappa, dim2, min(diminf, dim2), note)


def osc_correlation_dimension(lam_abs: float, p_bias: float) -> float:
    """Open-set-condition value log(p^2 + (1-p)^2) / log(lam_abs)."""
    return math.log(p_bias**2 + (1.0 - p_bias) ** 2) / math.log(lam_abs)
