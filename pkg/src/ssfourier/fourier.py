"""Fourier transform of self-similar measures and frequency-grid scans.

The transform convention is mu_hat(xi) = int exp(2*pi*i*Re(z*conj(xi))) dmu,
which for a homogeneous self-similar measure factors into the infinite
product prod_{n>=0} Phi(lam^n * conj(xi)) over the digit character
Phi(u) = sum_j p_j exp(2*pi*i*Re(w_j*u)).  Products are truncated with a
certified tail bound, so the returned modulus is an upper bound on the true
|mu_hat| and differs from it by at most 2*tol.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, DomainError
from .measures import DiscreteMeasure, IFSDescriptor

DEFAULT_TOL = 1e-9
DEFAULT_SUBGRID_K = 4
DEFAULT_CELL_BUDGET = 10**7
_POINT_CHUNK = 1 << 16
_ATOM_CHUNK = 1 << 16
_BIN_MAGIC = b"SSFGRID1"


def phi(ifs: IFSDescriptor, u) -> complex | np.ndarray:
    """Digit character Phi(u) = sum_j p_j exp(2*pi*i*Re(w_j*u)).

    Accepts a scalar or an array of complex arguments; |Phi| <= 1 always,
    with equality at u = 0.
    """
    u_arr = np.asarray(u, dtype=np.complex128)
    out = np.zeros(u_arr.shape, dtype=np.complex128)
    for w, p in zip(ifs.digits, ifs.probs):
        out += p * np.exp(2j * np.pi * (w.real * u_arr.real - w.imag * u_arr.imag))
    if np.isscalar(u) or u_arr.shape == ():
        return complex(out)
    return out


def _trunc_k_raw(lam, digits, abs_xi, tol: float) -> np.ndarray:
    if tol <= 0:
        raise DomainError("tol must be > 0")
    abs_xi = np.asarray(abs_xi, dtype=np.float64)
    w_max = max(abs(w) for w in digits)
    if w_max == 0.0:
        return np.zeros(abs_xi.shape, dtype=np.int64)
    alam = abs(lam)
    tail0 = 2.0 * np.pi * w_max * abs_xi / (1.0 - alam)
    with np.errstate(divide="ignore"):
        k = np.ceil(np.log(np.where(tail0 > 0, tol / tail0, 1.0)) / math.log(alam))
    return np.where(tail0 < tol, 0, np.maximum(k, 0)).astype(np.int64)


def truncation_index(ifs: IFSDescriptor, abs_xi, tol: float):
    """Smallest K with sum_{n>=K} 2*pi*max|w|*|lam|^n*|xi| < tol.

    Uses |Phi(u) - 1| <= 2*pi*max|w|*|u| per omitted factor, summed over
    the geometric tail.  Vectorized over |xi|.
    """
    return _trunc_k_raw(ifs.lam, ifs.digits, abs_xi, tol)


def _mu_hat_raw(lam, digits, probs, xi: np.ndarray, tol: float) -> np.ndarray:
    """Truncated product over a flat complex array, per-point K.

    Each output lane is a function of its own xi only, so results are
    independent of batching or worker layout.
    """
    xi = np.asarray(xi, dtype=np.complex128)
    out = np.ones(xi.shape, dtype=np.complex128)
    if max(abs(w) for w in digits) == 0.0:
        return out
    k = _trunc_k_raw(lam, digits, np.abs(xi), tol)
    kmax = int(k.max(initial=0))
    u = np.conj(xi)
    for n in range(kmax):
        f = np.zeros(xi.shape, dtype=np.complex128)
        for w, p in zip(digits, probs):
            f += p * np.exp(2j * np.pi * (w.real * u.real - w.imag * u.imag))
        out = np.where(k > n, out * f, out)
        u = u * lam
    return out


def mu_hat(ifs: IFSDescriptor, xi: complex, tol: float = 1e-12) -> complex:
    """Fourier transform at one frequency via the truncated product.

    The truncation index K is the smallest integer whose geometric tail
    bound falls below ``tol``; the result is within 2*tol of the exact
    value for tol <= 1/2, and its modulus is an upper bound on |mu_hat|.
    """
    return complex(
        _mu_hat_raw(ifs.lam, ifs.digits, ifs.probs, np.array([xi]), tol)[0]
    )


def mu_hat_many(ifs: IFSDescriptor, xi, tol: float = 1e-12) -> np.ndarray:
    """Vectorized mu_hat over an array of frequencies."""
    if tol <= 0:
        raise DomainError("tol must be > 0")
    xi = np.asarray(xi, dtype=np.complex128)
    return _mu_hat_raw(ifs.lam, ifs.digits, ifs.probs, xi, tol)


try:  # hot loop; plain numpy below is the reference fallback
    from numba import njit as _njit, prange as _prange

    @_njit(parallel=True, fastmath=True, cache=True)
    def _fourier_sum_kernel(xr, xim, pr, pim, w):  # pragma: no cover
        out = np.empty(xr.size, dtype=np.complex128)
        for k in _prange(xr.size):
            a, b = xr[k], xim[k]
            acc_re, acc_im = 0.0, 0.0
            for j in range(pr.size):
                ph = a * pr[j] + b * pim[j]
                ph = 6.283185307179586 * (ph - np.floor(ph + 0.5))
                acc_re += w[j] * np.cos(ph)
                acc_im += w[j] * np.sin(ph)
            out[k] = acc_re + 1j * acc_im
        return out

except ImportError:  # pragma: no cover
    _fourier_sum_kernel = None


def _fourier_sum_numpy(positions, weights, xi):
    out = np.zeros(xi.shape, dtype=np.complex128)
    xr, xi_im = xi.real, xi.imag
    pr, pi = positions.real, positions.imag
    for i0 in range(0, xi.size, 256):
        sl = slice(i0, min(i0 + 256, xi.size))
        acc = np.zeros(sl.stop - sl.start, dtype=np.complex128)
        for a0 in range(0, positions.size, _ATOM_CHUNK):
            asl = slice(a0, min(a0 + _ATOM_CHUNK, positions.size))
            phase = np.outer(xr[sl], pr[asl]) + np.outer(xi_im[sl], pi[asl])
            acc += np.exp(2j * np.pi * phase) @ weights[asl]
        out[sl] = acc
    return out


def fourier_sum(
    positions: np.ndarray, weights: np.ndarray, xi: np.ndarray
) -> np.ndarray:
    """Direct Fourier sum sum_k w_k exp(2*pi*i*Re(z_k*conj(xi))).

    The independent oracle path for discrete measures: no product
    structure, no truncation, just the plain exponential sum.  Per-lane
    results are a function of that lane's frequency alone, so output
    never depends on batching or thread count.
    """
    xi = np.asarray(xi, dtype=np.complex128).ravel()
    if _fourier_sum_kernel is not None and xi.size * positions.size > 1 << 16:
        return _fourier_sum_kernel(
            np.ascontiguousarray(xi.real),
            np.ascontiguousarray(xi.imag),
            np.ascontiguousarray(positions.real),
            np.ascontiguousarray(positions.imag),
            np.ascontiguousarray(weights),
        )
    return _fourier_sum_numpy(positions, weights, xi)


def ft_measure(mu: DiscreteMeasure, xi) -> np.ndarray:
    shape = np.shape(xi)
    vals = fourier_sum(mu.positions, mu.weights, np.asarray(xi, dtype=np.complex128))
    return vals.reshape(shape) if shape else complex(vals[0])


# ---------------------------------------------------------------------------
# frequency-grid scanning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanField:
    """Per-cell sampled maxima of |mu_hat| over a disk of radius T.

    Cells are the unit squares [i, i+1) x [j, j+1) anchored at integer
    coordinates; each stored value is the maximum of |mu_hat| over a
    subgrid_k x subgrid_k lattice of points (i + a/k, j + b/k), which
    includes the anchor corner, so the origin cell always samples
    mu_hat(0) = 1.
    """

    T: float
    subgrid_k: int
    cells: dict
    tol: float
    cell_size: float = 1.0


def _scan_cells(T: float):
    """Indices of unit cells whose closure meets the closed disk |xi| <= T."""
    n = math.ceil(T)
    idx = np.arange(-n, n)
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    nx = np.clip(0.0, ii, ii + 1.0)
    ny = np.clip(0.0, jj, jj + 1.0)
    keep = nx * nx + ny * ny <= T * T
    return ii[keep], jj[keep]


def _scan_chunk(args):
    lam, digits, probs, xi, tol = args
    return np.abs(_mu_hat_raw(lam, digits, probs, xi, tol))


def _scan_points(
    ifs: IFSDescriptor,
    T: float,
    subgrid_k: int,
    tol: float,
    workers: int,
    cell_budget: int | None,
):
    """Shared scan core: cell indices, sample frequencies, sampled |mu_hat|.

    Points are laid out cell-major then subgrid-major, and evaluated in
    fixed-size chunks whose boundaries do not depend on the worker count,
    so the output is bit-for-bit reproducible for any ``workers``.
    """
    if T < 1:
        raise DomainError("scan radius T must be >= 1")
    if subgrid_k < 1:
        raise DomainError("subgrid_k must be >= 1")
    budget = DEFAULT_CELL_BUDGET if cell_budget is None else int(cell_budget)
    ci, cj = _scan_cells(T)
    n_points = ci.size * subgrid_k * subgrid_k
    if n_points > budget:
        raise BudgetError(
            f"scan would sample {n_points} points (budget {budget})"
        )
    offs = np.arange(subgrid_k) / subgrid_k
    oa, ob = np.meshgrid(offs, offs, indexing="ij")
    oa, ob = oa.ravel(), ob.ravel()
    xi = (
        (ci[:, None] + oa[None, :]) + 1j * (cj[:, None] + ob[None, :])
    ).ravel()
    chunks = [
        (ifs.lam, ifs.digits, ifs.probs, xi[s : s + _POINT_CHUNK], tol)
        for s in range(0, xi.size, _POINT_CHUNK)
    ]
    if workers <= 1 or len(chunks) <= 1:
        parts = [_scan_chunk(c) for c in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_scan_chunk, chunks))
    values = np.concatenate(parts) if len(parts) > 1 else parts[0]
    return ci, cj, xi, values


def grid_scan(
    ifs: IFSDescriptor,
    T: float,
    subgrid_k: int = DEFAULT_SUBGRID_K,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
    cell_budget: int | None = None,
) -> ScanField:
    """Scan |mu_hat| over every unit cell meeting the disk |xi| <= T.

    Stores, per cell, the maximum sampled value on the subgrid lattice.
    Deterministic: identical output for any worker count.
    """
    ci, cj, _, values = _scan_points(ifs, T, subgrid_k, tol, workers, cell_budget)
    per_cell = values.reshape(ci.size, subgrid_k * subgrid_k).max(axis=1)
    cells = {
        (int(i), int(j)): float(v) for i, j, v in zip(ci, cj, per_cell)
    }
    return ScanField(T=float(T), subgrid_k=subgrid_k, cells=cells, tol=tol)


def scanfield_to_csv(fieldobj: ScanField) -> str:
    lines = ["i,j,max_abs_muhat"]
    for (i, j), v in sorted(fieldobj.cells.items()):
        lines.append(f"{i},{j},{v!r}")
    return "\n".join(lines) + "\n"


def scanfield_to_binary(fieldobj: ScanField) -> bytes:
    """Compact dump: 32-byte header then a full square float64 grid.

    Header: magic (8s), T (f64), subgrid_k (u32), cell count (u32),
    8 reserved zero bytes; little-endian.  The grid covers
    [-ceil(T), ceil(T))^2 row-major in i then j; cells outside the scan
    disk hold -1.0.
    """
    n = math.ceil(fieldobj.T)
    side = 2 * n
    grid = np.full((side, side), -1.0, dtype="<f8")
    for (i, j), v in fieldobj.cells.items():
        grid[i + n, j + n] = v
    header = struct.pack(
        "<8sdII8x", _BIN_MAGIC, fieldobj.T, fieldobj.subgrid_k, len(fieldobj.cells)
    )
    return header + grid.tobytes()


def scanfield_from_binary(blob: bytes) -> ScanField:
    magic, T, k, count = struct.unpack_from("<8sdII", blob)
    if magic != _BIN_MAGIC:
        raise DomainError("bad scan-field magic")
    n = math.ceil(T)
    side = 2 * n
    grid = np.frombuffer(blob, dtype="<f8", offset=32).reshape(side, side)
    cells = {}
    for i in range(side):
        for j in range(side):
            if grid[i, j] >= 0.0:
                cells[(i - n, j - n)] = float(grid[i, j])
    if len(cells) != count:
        raise DomainError("scan-field cell count mismatch")
    return ScanField(T=T, subgrid_k=int(k), cells=cells, tol=float("nan"))


# ---------------------------------------------------------------------------
# Fourier energy
# ---------------------------------------------------------------------------

def energy_integral(target, T: float, step: float) -> float:
    """Midpoint-rule approximation of int_{|xi|<T} |eta_hat|^2 d(xi).

    ``target`` may be a DiscreteMeasure (direct Fourier sums) or an
    IFSDescriptor (truncated product evaluation).  The lattice has
    spacing ``step`` (required <= 1/2) with midpoints strictly inside
    the disk.
    """
    if step > 0.5 or step <= 0:
        raise DomainError("step must lie in (0, 1/2]")
    n = math.ceil(T / step)
    coords = (np.arange(-n, n) + 0.5) * step
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    xi = (xx + 1j * yy).ravel()
    xi = xi[np.abs(xi) < T]
    total = 0.0
    for s in range(0, xi.size, _POINT_CHUNK):
        chunk = xi[s : s + _POINT_CHUNK]
        if isinstance(target, IFSDescriptor):
            vals = _mu_hat_raw(target.lam, target.digits, target.probs, chunk, 1e-9)
        elif isinstance(target, DiscreteMeasure):
            vals = fourier_sum(target.positions, target.weights, chunk)
        else:
            raise DomainError("target must be a DiscreteMeasure or IFSDescriptor")
        total += float(np.sum(np.abs(vals) ** 2))
    return total * step * step
