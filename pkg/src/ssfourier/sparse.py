"""Erdos-Kahane digit dynamics, empirically.

For a non-real contraction lam and a normalized frequency t (|t| < 1) the
real parts of lam^{-j} t split into integer digits r_j and errors
eps_j in [-1/2, 1/2).  The digit-transition inequality

    |r_{j+1} - (2*a*r_j - r_{j-1}) / |lam|^2| <= (1 + 3/|lam|^2) / 2

constrains admissible digit sequences; frequencies where |mu_hat| stays
large have many small errors (membership in S(N, et)) and are therefore
covered by an explicit number of unit squares.  This module traces the
sequences, verifies the proven inequalities on random samples, enumerates
admissible sequences exhaustively at small N, and compares empirical
covering counts against the explicit bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import covering_bound, delta_complex
from .errors import BudgetError, DomainError, RegimeError
from .fourier import _scan_points
from .measures import IFSDescriptor

FLOAT_SLACK = 1e-9
ENUM_MAX_N = 14
_SAFE_MAGNITUDE = 2.0**52


@dataclass(frozen=True)
class EKTrace:
    """Digit/error sequences r_j, eps_j for one normalized frequency.

    Satisfies Re(lam^{-j} t) = r_j + eps_j with eps_j in [-1/2, 1/2)
    exactly (up to roundoff ~1e-9 * |lam|^{-j}).  ``good`` marks indices
    with |eps_j| < rho, rho = |lam|^2 / (2(|lam|^2 + 3)).
    """

    lam: complex
    t: complex
    N: int
    r: np.ndarray    # int64, length N
    eps: np.ndarray  # float64, length N
    rho: float
    _cs: np.ndarray
    _ds: np.ndarray

    @property
    def good(self) -> np.ndarray:
        return np.abs(self.eps) < self.rho

    @property
    def good_indices(self) -> frozenset:
        return frozenset(int(j) for j in np.flatnonzero(self.good))

    def c(self, j: int) -> float:
        """Re(lam^{-j} t)."""
        return float(self._cs[j])

    def d(self, j: int) -> float:
        """Im(lam^{-j} t)."""
        return float(self._ds[j])


def ek_trace(lam: complex, t: complex, N: int) -> EKTrace:
    """Trace the digit expansion of Re(lam^{-j} t) for j = 0..N-1.

    Digits are nearest integers with half-integer ties resolved so that
    eps_j lands in [-1/2, 1/2).  Raises OverflowError when |lam|^{-N}
    would push the digits past exact float integer range (2^52).
    """
    lam = complex(lam)
    t = complex(t)
    if lam.imag == 0.0:
        raise RegimeError("ek_trace needs Im(lambda) != 0")
    if not 0.0 < abs(lam) < 1.0:
        raise DomainError("need 0 < |lambda| < 1")
    if abs(t) >= 1.0:
        raise DomainError("need |t| < 1")
    if N < 2:
        raise DomainError("need N >= 2")
    if abs(lam) ** (-(N - 1)) * max(abs(t), 1.0) > _SAFE_MAGNITUDE:
        raise OverflowError(
            f"|lambda|^-{N - 1} exceeds the safe digit magnitude 2^52"
        )
    a2 = abs(lam) ** 2
    us = t * (1.0 / lam) ** np.arange(N)
    cs = us.real.copy()
    ds = us.imag.copy()
    r = np.floor(cs + 0.5).astype(np.int64)
    eps = cs - r
    rho = a2 / (2.0 * (a2 + 3.0))
    return EKTrace(lam, t, N, r, eps, rho, cs, ds)


def in_sparse_set(trace: EKTrace, epsilon_tilde: float, slack: float = 0.0) -> bool:
    """Membership t in S(N, et): |eps_j| < rho for >= (1 - et)N indices."""
    et = min(max(epsilon_tilde, 0.0), 1.0)
    need = max(0, math.ceil((1.0 - et) * trace.N - 1e-9))
    return int(np.sum(np.abs(trace.eps) < trace.rho + slack)) >= need


def digit_transition_bound(lam: complex) -> tuple[float, int]:
    """The transition bound (1 + 3/|lam|^2)/2 and its ceiling."""
    lam = complex(lam)
    if lam.imag == 0.0:
        raise RegimeError("digit transition bound needs Im(lambda) != 0")
    if not 0.0 < abs(lam) < 1.0:
        raise DomainError("need 0 < |lambda| < 1")
    b = 0.5 * (1.0 + 3.0 / abs(lam) ** 2)
    return b, math.ceil(b)


def _uniform_disk(rng: np.random.Generator, n: int) -> np.ndarray:
    radius = np.sqrt(rng.random(n))
    angle = 2.0 * np.pi * rng.random(n)
    return radius * np.exp(1j * angle)


def verify_digit_inequality(
    lam: complex, sample_count: int, N: int, seed: int
) -> int:
    """Count violations of the digit-transition inequality on random t.

    Draws ``sample_count`` frequencies uniformly in the unit disk, builds
    their traces and checks every interior index j (1 <= j <= N-2) with
    additive slack 1e-9 on the proven bound.  The inequality holds for
    every t, so the return value is 0 unless the implementation is wrong.
    """
    lam = complex(lam)
    bound, _ = digit_transition_bound(lam)
    if N < 3:
        raise DomainError("need N >= 3 to check a transition")
    rng = np.random.default_rng(seed)
    t = _uniform_disk(rng, sample_count)
    a2 = abs(lam) ** 2
    a = lam.real
    us = t[:, None] * (1.0 / lam) ** np.arange(N)[None, :]
    r = np.floor(us.real + 0.5)
    lhs = np.abs(r[:, 2:] - (2.0 * a * r[:, 1:-1] - r[:, :-2]) / a2)
    return int(np.sum(lhs > bound + FLOAT_SLACK))


def unique_continuation_violations(
    lam: complex, sample_count: int, N: int, seed: int
) -> int:
    """Check that three consecutive good indices force the next digit.

    When j-1, j, j+1 are all good, the admissible interval around
    (2*a*r_j - r_{j-1})/|lam|^2 has radius rho*(1 + (1 + 2|a|)/|lam|^2)
    < 1/2, so it contains exactly one integer and that integer must be
    the traced r_{j+1}.  Returns the number of (t, j) failures.
    """
    lam = complex(lam)
    if N < 3:
        raise DomainError("need N >= 3")
    rng = np.random.default_rng(seed)
    ts = _uniform_disk(rng, sample_count)
    a2 = abs(lam) ** 2
    a = lam.real
    rho = a2 / (2.0 * (a2 + 3.0))
    radius = rho * (1.0 + (1.0 + 2.0 * abs(a)) / a2)
    violations = 0
    for t in ts:
        trace = ek_trace(lam, t, N)
        good = trace.good
        r = trace.r
        for j in range(1, N - 1):
            if not (good[j - 1] and good[j] and good[j + 1]):
                continue
            center = (2.0 * a * r[j] - r[j - 1]) / a2
            lo = math.ceil(center - radius - FLOAT_SLACK)
            hi = math.floor(center + radius + FLOAT_SLACK)
            admissible = list(range(lo, hi + 1))
            if len(admissible) != 1 or admissible[0] != r[j + 1]:
                violations += 1
    return violations


# ---------------------------------------------------------------------------
# exhaustive enumeration of admissible digit sequences
# ---------------------------------------------------------------------------

_BOX_TOL = 1e-12


def _propagate(cons, box):
    """Tighten an (x, y) box against strip constraints a*x - b*y in [lo, hi].

    Interval constraint propagation to a fixpoint; returns None when the
    box empties or leaves the unit disk (tolerance 1e-12).
    """
    xlo, xhi, ylo, yhi = box
    for _ in range(40):
        changed = False
        for al, be, lo, hi in cons:
            if al != 0.0:
                t1, t2 = be * ylo, be * yhi
                nlo, nhi = lo + min(t1, t2), hi + max(t1, t2)
                if al > 0:
                    cand_lo, cand_hi = nlo / al, nhi / al
                else:
                    cand_lo, cand_hi = nhi / al, nlo / al
                if cand_lo > xlo + 1e-15:
                    xlo, changed = cand_lo, True
                if cand_hi < xhi - 1e-15:
                    xhi, changed = cand_hi, True
            if be != 0.0:
                t1, t2 = al * xlo, al * xhi
                nlo, nhi = min(t1, t2) - hi, max(t1, t2) - lo
                if be > 0:
                    cand_lo, cand_hi = nlo / be, nhi / be
                else:
                    cand_lo, cand_hi = nhi / be, nlo / be
                if cand_lo > ylo + 1e-15:
                    ylo, changed = cand_lo, True
                if cand_hi < yhi - 1e-15:
                    yhi, changed = cand_hi, True
            if xlo > xhi + _BOX_TOL or ylo > yhi + _BOX_TOL:
                return None
        if not changed:
            break
    nx = min(max(0.0, xlo), xhi)
    ny = min(max(0.0, ylo), yhi)
    if nx * nx + ny * ny > 1.0 + _BOX_TOL:
        return None
    return (xlo, xhi, ylo, yhi)


def enumerate_digit_sequences(
    lam: complex, epsilon_tilde: float, N: int
) -> tuple[int, float]:
    """Exhaustively count digit sequences realizable with enough good indices.

    Recursive branching over (r_j, good-required) choices with interval
    constraint pruning on (Re t, Im t); a sequence counts when some box
    consistent with it intersects the unit disk (outer approximation at
    tolerance 1e-12) and carries at least ceil((1 - et) N) required-good
    indices.  Returns (count, M_N * e^{h(et) N}); et is clamped to [0, 1]
    so et -> 1 enumerates with no good-index requirement at all.
    """
    lam = complex(lam)
    if N < 1:
        raise DomainError("need N >= 1")
    if N > ENUM_MAX_N:
        raise BudgetError(f"enumeration is exhaustive only up to N = {ENUM_MAX_N}")
    if lam.imag == 0.0:
        raise RegimeError("enumeration needs Im(lambda) != 0")
    et = min(max(float(epsilon_tilde), 0.0), 1.0)
    a2 = abs(lam) ** 2
    rho = a2 / (2.0 * (a2 + 3.0))
    n_good = max(0, math.ceil((1.0 - et) * N - 1e-9))
    inv_pows = [(1.0 / lam) ** j for j in range(N)]
    alphas = [z.real for z in inv_pows]
    betas = [z.imag for z in inv_pows]
    found: set[tuple[int, ...]] = set()
    digits: list[int] = []

    def interval_over_box(al, be, box):
        xlo, xhi, ylo, yhi = box
        t1, t2 = al * xlo, al * xhi
        s1, s2 = be * ylo, be * yhi
        return min(t1, t2) - max(s1, s2), max(t1, t2) - min(s1, s2)

    def rec(j, cons, box, tights):
        if j == N:
            if tights >= n_good:
                found.add(tuple(digits))
            return
        al, be = alphas[j], betas[j]
        lo, hi = interval_over_box(al, be, box)
        rmin = math.ceil(lo - 0.5 - FLOAT_SLACK)
        rmax = math.floor(hi + 0.5 + FLOAT_SLACK)
        remaining_after = N - j - 1
        for r in range(rmin, rmax + 1):
            digits.append(r)
            for tight in (True, False):
                if not tight and tights + remaining_after < n_good:
                    continue
                half = rho if tight else 0.5
                con = (al, be, r - half - _BOX_TOL, r + half + _BOX_TOL)
                nb = _propagate(cons + [con], box)
                if nb is not None:
                    rec(j + 1, cons + [con], nb, tights + (1 if tight else 0))
            digits.pop()

    rec(0, [], (-1.0, 1.0, -1.0, 1.0), 0)
    _, branching = digit_transition_bound(lam)
    h = -et * math.log(et) - (1 - et) * math.log(1 - et) if 0 < et < 1 else 0.0
    m_n = 3.0 * 64.0 * branching ** (3.0 * et * N + 2.0)
    return len(found), m_n * math.exp(h * N)


# ---------------------------------------------------------------------------
# empirical covering reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoveringReport:
    """Empirical sparse-set size at scale T = |lam|^{-N} vs the explicit bound.

    ``empirical_count`` counts unit cells whose sampled max |mu_hat|
    reaches T^{-epsilon}; ``inclusion_violations`` counts sampled
    frequencies that certainly qualify yet fail S(N, et) membership
    (the theory predicts 0); ``checked_points`` is how many sampled
    frequencies were subjected to the membership test.
    """

    T: float
    N: int
    epsilon: float
    epsilon_tilde: float
    empirical_count: int
    bound_count: float
    subgrid_k: int
    inclusion_violations: int
    checked_points: int

    def to_json(self) -> dict:
        return {
            "T": self.T,
            "N": self.N,
            "epsilon": self.epsilon,
            "epsilon_tilde": self.epsilon_tilde,
            "empirical_count": self.empirical_count,
            "bound_count": self.bound_count,
            "subgrid_k": self.subgrid_k,
            "inclusion_violations": self.inclusion_violations,
            "checked_points": self.checked_points,
        }


def covering_report(
    ifs: IFSDescriptor,
    epsilon: float,
    N: int,
    subgrid_k: int = 4,
    tol: float = 1e-9,
    workers: int = 1,
    cell_budget: int | None = None,
) -> CoveringReport:
    """Scan the disk |xi| <= |lam|^{-N} and audit the sparse-set inclusion.

    Cells qualify by sampled max >= T^{-epsilon}.  Every sampled
    frequency xi that certainly qualifies (sampled value minus the 2*tol
    truncation error still reaches the threshold) is rescaled to
    t = lam^N * conj(xi) and must land in S(N, et); membership is tested
    with 1e-9 additive slack on rho.  Frequencies with |t| >= 1 are
    outside the statement and are skipped.
    """
    if ifs.bound_regime() != "complex":
        raise RegimeError("covering reports need the complex (Im lambda != 0) regime")
    lam = ifs.lam
    if N < 2:
        raise DomainError("need N >= 2")
    T = abs(lam) ** (-N)
    ci, cj, xi, values = _scan_points(ifs, T, subgrid_k, tol, workers, cell_budget)
    per_cell = values.reshape(ci.size, subgrid_k * subgrid_k).max(axis=1)
    threshold = T ** (-epsilon)
    empirical = int(np.sum(per_cell >= threshold))
    et = delta_complex(lam, ifs.probs, epsilon).epsilon_tilde
    if 0.0 < et < 1.0:
        bound = covering_bound(lam, ifs.probs, epsilon, N)
    else:
        # degenerate threshold regime: no finite covering count applies
        bound = float("inf")
    need = max(0, math.ceil((1.0 - min(et, 1.0)) * N - 1e-9))
    a2 = abs(lam) ** 2
    rho = a2 / (2.0 * (a2 + 3.0))
    ts = lam**N * np.conj(xi)
    certain = (values - 2.0 * tol >= threshold) & (np.abs(ts) < 1.0)
    ts_q = ts[certain]
    violations = 0
    if ts_q.size:
        us = ts_q[:, None] * (1.0 / lam) ** np.arange(N)[None, :]
        cs = us.real
        eps_j = cs - np.floor(cs + 0.5)
        good_counts = np.sum(np.abs(eps_j) < rho + FLOAT_SLACK, axis=1)
        violations = int(np.sum(good_counts < need))
    return CoveringReport(
        T=float(T),
        N=N,
        epsilon=float(epsilon),
        epsilon_tilde=float(et),
        empirical_count=empirical,
        bound_count=float(bound),
        subgrid_k=subgrid_k,
        inclusion_violations=violations,
        checked_points=int(ts_q.size),
    )
