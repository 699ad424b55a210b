"""Homogeneous self-similar measures on the complex plane.

A homogeneous IFS is a family f_i(z) = lam*z + w_i sharing one complex
contraction ratio lam, |lam| < 1.  The associated self-similar measure is
the law of sum_{n>=0} lam^n X_n, where the X_n are i.i.d. draws from the
digit set {w_i} with weights p_i.  This module holds the IFS descriptor,
finite discrete approximations (depth-N convolution towers), Monte Carlo
sampling, and the small measure algebra (convolution, complex scaling)
everything else builds on.

All types are immutable after construction and all operations are pure,
so they can be called concurrently without locking.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.spatial import cKDTree

from .errors import BudgetError, DomainError, RegimeError

DEFAULT_ATOM_BUDGET = 10**7

PROB_SUM_TOL = 1e-12
WEIGHT_SUM_TOL = 1e-10
REAL_LAMBDA_TOL = 1e-14
COLLINEAR_TOL = 1e-12

_SAMPLE_BLOCK = 1 << 16  # fixed so output never depends on worker count


@dataclass(frozen=True)
class ProbabilityVector:
    """Strictly positive weights of length >= 2 summing to 1."""

    p: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(x) for x in self.p)
        object.__setattr__(self, "p", p)
        if len(p) < 2:
            raise DomainError("probability vector needs at least 2 entries")
        if any(x <= 0.0 for x in p):
            raise DomainError("probability weights must be strictly positive")
        if abs(sum(p) - 1.0) > PROB_SUM_TOL:
            raise DomainError(
                f"probability weights must sum to 1 within {PROB_SUM_TOL:g}"
            )

    def __len__(self):
        return len(self.p)

    def __iter__(self):
        return iter(self.p)

    def __getitem__(self, i):
        return self.p[i]


def as_weights(p) -> tuple[float, ...]:
    """Coerce a ProbabilityVector or plain sequence to a validated tuple."""
    if isinstance(p, ProbabilityVector):
        return p.p
    return ProbabilityVector(tuple(p)).p


@dataclass(frozen=True)
class IFSDescriptor:
    """A homogeneous IFS {z -> lam*z + w_i} with selection weights.

    Parameters
    ----------
    lam : complex
        Common contraction ratio, 0 < |lam| < 1.
    digits : tuple of complex
        Translation parts w_1..w_m (m >= 2).
    probs : tuple of float
        Selection probabilities, strictly positive, summing to 1.
    """

    lam: complex
    digits: tuple[complex, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        lam = complex(self.lam)
        digits = tuple(complex(w) for w in self.digits)
        probs = as_weights(self.probs)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "digits", digits)
        object.__setattr__(self, "probs", probs)
        if not 0.0 < abs(lam) < 1.0:
            raise DomainError(f"need 0 < |lam| < 1, got |lam| = {abs(lam):g}")
        if len(digits) != len(probs):
            raise DomainError("digits and probs must have the same length")

    @property
    def m(self) -> int:
        return len(self.digits)

    @property
    def lambda_is_real(self) -> bool:
        return abs(self.lam.imag) <= REAL_LAMBDA_TOL

    @property
    def is_atomic(self) -> bool:
        return all(w == self.digits[0] for w in self.digits)

    @property
    def digits_collinear(self) -> bool:
        """True when every digit lies on one real-affine line.

        Tested through the cross-product determinant of digit differences
        with absolute tolerance 1e-12.  Two or fewer distinct digits are
        collinear by convention.
        """
        w0 = self.digits[0]
        base = next((w - w0 for w in self.digits if w != w0), None)
        if base is None:
            return True
        for w in self.digits:
            d = w - w0
            det = base.real * d.imag - base.imag * d.real
            if abs(det) > COLLINEAR_TOL:
                return False
        return True

    def bound_regime(self) -> str:
        """Classify which sparse-frequency bound applies to this system.

        Returns "complex" (non-real contraction) or "real_noncollinear"
        (real contraction, >= 3 non-collinear digits).  Every other
        configuration is refused: no covering bound is available for it.
        """
        if self.is_atomic:
            raise RegimeError("atomic IFS: bound computations are refused")
        if not self.lambda_is_real:
            return "complex"
        if self.m >= 3 and not self.digits_collinear:
            return "real_noncollinear"
        raise RegimeError(
            "real contraction with collinear digits (or m < 2 distinct): "
            "no covering-bound regime applies"
        )

    def to_json(self) -> dict:
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "digits": [[w.real, w.imag] for w in self.digits],
            "probs": list(self.probs),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "IFSDescriptor":
        lam = complex(doc["lambda"][0], doc["lambda"][1])
        digits = tuple(complex(a, b) for a, b in doc["digits"])
        return cls(lam, digits, tuple(doc["probs"]))


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely many weighted atoms in the plane.

    positions : complex128 array, shape (n,)
    weights   : float64 array, shape (n,), strictly positive, total mass 1
    """

    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.complex128).ravel()
        wts = np.asarray(self.weights, dtype=np.float64).ravel()
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", wts)
        if pos.shape != wts.shape:
            raise DomainError("positions and weights must have equal length")
        if pos.size == 0:
            raise DomainError("measure needs at least one atom")
        if not np.all(np.isfinite(wts)) or np.any(wts <= 0.0):
            raise DomainError("weights must be finite and strictly positive")
        if not np.all(np.isfinite(pos.view(np.float64))):
            raise DomainError("positions must be finite")
        total = float(wts.sum())
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise DomainError(
                f"total mass must be 1 within {WEIGHT_SUM_TOL:g}, got {total!r}"
            )

    @property
    def n_atoms(self) -> int:
        return int(self.positions.size)

    @classmethod
    def dirac(cls, z: complex) -> "DiscreteMeasure":
        return cls(np.array([z], dtype=np.complex128), np.array([1.0]))

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[complex, float]]) -> "DiscreteMeasure":
        pos, wts = zip(*atoms)
        return cls(np.array(pos, dtype=np.complex128), np.array(wts, dtype=np.float64))


def _sorted_atoms(pos: np.ndarray, wts: np.ndarray):
    order = np.lexsort((pos.imag, pos.real))
    return pos[order], wts[order]


def merge_atoms(mu: DiscreteMeasure, tol: float) -> DiscreteMeasure:
    """Coalesce atoms closer than ``tol``.

    Weights are added and positions are weight-averaged, so mass and the
    barycenter are preserved.  With ``tol <= 0`` only exactly coinciding
    atoms merge.  The result is sorted lexicographically by (re, im),
    which makes merged measures canonical for comparison.
    """
    pos, wts = mu.positions, mu.weights
    if tol <= 0.0:
        uniq, inverse = np.unique(pos, return_inverse=True)
        if uniq.size != pos.size:
            wsum = np.bincount(inverse, weights=wts, minlength=uniq.size)
            pos, wts = uniq, wsum
        pos, wts = _sorted_atoms(np.asarray(pos), np.asarray(wts))
        return DiscreteMeasure(pos, wts)

    pts = np.column_stack([pos.real, pos.imag])
    for _ in range(8):
        tree = cKDTree(pts)
        pairs = tree.query_pairs(tol, output_type="ndarray")
        if pairs.size == 0:
            break
        parent = np.arange(len(pts))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for a, b in pairs:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[rb] = ra
        roots = np.array([find(i) for i in range(len(pts))])
        _, inverse = np.unique(roots, return_inverse=True)
        k = inverse.max() + 1
        wsum = np.bincount(inverse, weights=wts, minlength=k)
        xsum = np.bincount(inverse, weights=wts * pts[:, 0], minlength=k)
        ysum = np.bincount(inverse, weights=wts * pts[:, 1], minlength=k)
        pts = np.column_stack([xsum / wsum, ysum / wsum])
        wts = wsum
    pos = pts[:, 0] + 1j * pts[:, 1]
    pos, wts = _sorted_atoms(pos, wts)
    return DiscreteMeasure(pos, wts)


def support_radius(ifs: IFSDescriptor) -> float:
    """Radius of a closed disk centered at 0 containing the attractor.

    The random sum sum_{n>=0} lam^n X_n is bounded by
    max_j |w_j| / (1 - |lam|).
    """
    return max(abs(w) for w in ifs.digits) / (1.0 - abs(ifs.lam))


def default_merge_tol(ifs: IFSDescriptor) -> float:
    return 1e-12 * max(support_radius(ifs), 1.0)


def finite_approximation(
    ifs: IFSDescriptor,
    depth: int,
    merge_tol: float | None = None,
    atom_budget: int | None = None,
) -> DiscreteMeasure:
    """Law of sum_{n=0}^{depth-1} lam^n X_n as a discrete measure.

    This is the depth-fold convolution of the scaled digit laws
    sum_j p_j delta_{lam^n w_j}, n = 0..depth-1.  Atoms within
    ``merge_tol`` are coalesced after every convolution level.

    Parameters
    ----------
    depth : int
        Number of convolution factors (depth 0 gives delta_0).
    merge_tol : float, optional
        Atom coalescing tolerance; defaults to 1e-12 * support radius.
    atom_budget : int, optional
        Hard cap on the working atom count (default 1e7).  Exceeding it
        raises BudgetError instead of silently subsampling.
    """
    if depth < 0:
        raise DomainError("depth must be >= 0")
    budget = DEFAULT_ATOM_BUDGET if atom_budget is None else int(atom_budget)
    if merge_tol is None:
        merge_tol = default_merge_tol(ifs)
    # m^depth may exceed the budget yet merge down (lattice digit sets);
    # the budget is enforced level by level on the working atom count
    digits = np.array(ifs.digits, dtype=np.complex128)
    pos = np.zeros(1, dtype=np.complex128)
    wts = np.ones(1, dtype=np.float64)
    scale = 1.0 + 0.0j
    for _ in range(depth):
        if pos.size * ifs.m > budget:
            raise BudgetError(
                f"finite approximation exceeds atom budget {budget} "
                f"({pos.size} x {ifs.m} atoms before merge)"
            )
        pos = (pos[:, None] + scale * digits[None, :]).ravel()
        wts = (wts[:, None] * np.asarray(ifs.probs)[None, :]).ravel()
        merged = merge_atoms(DiscreteMeasure(pos, wts / wts.sum()), merge_tol)
        pos, wts = merged.positions, merged.weights
        scale *= ifs.lam
    return DiscreteMeasure(pos, wts)


def sample(
    ifs: IFSDescriptor, count: int, tail_tol: float, seed: int
) -> DiscreteMeasure:
    """Monte Carlo draws from the self-similar measure.

    Returns ``count`` equal-weight atoms, each an independent draw of the
    truncated sum sum_{n=0}^{K-1} lam^n X_n, with K the smallest integer
    such that support_radius * |lam|^K < tail_tol.  Deterministic for a
    given seed: draws are produced in fixed 2^16-sample blocks with
    per-block derived generators, so the result never depends on how the
    work is distributed.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    if not tail_tol > 0:
        raise DomainError("tail_tol must be > 0")
    radius = support_radius(ifs)
    alam = abs(ifs.lam)
    if radius < tail_tol:
        depth = 0
    else:
        depth = max(math.ceil(math.log(tail_tol / radius) / math.log(alam)), 0)
        while radius * alam**depth >= tail_tol:
            depth += 1
        while depth > 0 and radius * alam ** (depth - 1) < tail_tol:
            depth -= 1
    digits = np.array(ifs.digits, dtype=np.complex128)
    powers = ifs.lam ** np.arange(depth)
    probs = np.asarray(ifs.probs)
    out = np.empty(count, dtype=np.complex128)
    for block, start in enumerate(range(0, count, _SAMPLE_BLOCK)):
        n = min(_SAMPLE_BLOCK, count - start)
        rng = np.random.default_rng([seed, block])
        acc = np.zeros(n, dtype=np.complex128)
        for k in range(depth):
            idx = rng.choice(ifs.m, size=n, p=probs)
            acc += powers[k] * digits[idx]
        out[start : start + n] = acc
    return DiscreteMeasure(out, np.full(count, 1.0 / count))


def convolve(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    merge_tol: float = 0.0,
    atom_budget: int | None = None,
) -> DiscreteMeasure:
    """Convolution of two discrete measures (all pairwise sums)."""
    budget = DEFAULT_ATOM_BUDGET if atom_budget is None else int(atom_budget)
    if mu.n_atoms * nu.n_atoms > budget:
        raise BudgetError(
            f"convolution would create {mu.n_atoms * nu.n_atoms} atoms "
            f"(budget {budget})"
        )
    pos = (mu.positions[:, None] + nu.positions[None, :]).ravel()
    wts = (mu.weights[:, None] * nu.weights[None, :]).ravel()
    return merge_atoms(DiscreteMeasure(pos, wts / wts.sum()), merge_tol)


def scale_rotate(mu: DiscreteMeasure, factor: complex) -> DiscreteMeasure:
    """Image measure under z -> factor * z (weights unchanged)."""
    return DiscreteMeasure(mu.positions * complex(factor), mu.weights.copy())


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def measure_to_csv(mu: DiscreteMeasure) -> str:
    """CSV text with header ``re,im,weight``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["re", "im", "weight"])
    for z, w in zip(mu.positions, mu.weights):
        writer.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(w))])
    return buf.getvalue()


def measure_from_csv(text: str) -> DiscreteMeasure:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["re", "im", "weight"]:
        raise DomainError("expected CSV header re,im,weight")
    data = [(float(a), float(b), float(w)) for a, b, w in rows[1:]]
    pos = np.array([complex(a, b) for a, b, _ in data], dtype=np.complex128)
    wts = np.array([w for _, _, w in data])
    return DiscreteMeasure(pos, wts)


def ifs_to_json_str(ifs: IFSDescriptor) -> str:
    return json.dumps(ifs.to_json(), sort_keys=True)


def ifs_from_json_str(text: str) -> IFSDescriptor:
    return IFSDescriptor.from_json(json.loads(text))
