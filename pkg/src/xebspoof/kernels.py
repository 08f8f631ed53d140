"""Exponential-time linear-algebra kernels and random-matrix generation.

Everything downstream (probability engines, Monte Carlo, spoofing) funnels
into the permanent / determinant / hafnian routines in this module, so they
are kept small, oracle-checkable, and JIT-compiled where it matters.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


PERMANENT_SIZE_LIMIT = 28
HAFNIAN_SIZE_LIMIT = 20
UNITARITY_TOL = 1e-10
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class Seed:
    """Root seed plus a derivation path identifying one random stream.

    Identical (value, path) pairs always produce identical streams, so
    parallel scheduling cannot perturb results: every task derives its own
    child seed from its task index instead of sharing a generator.
    """

    value: int
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not 0 <= int(self.value) < 2**64:
            raise ValueError("seed value must be a 64-bit unsigned integer")
        object.__setattr__(self, "path", tuple(int(p) for p in self.path))

    def child(self, *indices: int) -> "Seed":
        """Derive a sub-stream seed for a task identified by `indices`."""
        return Seed(self.value, self.path + tuple(indices))

    def generator(self) -> np.random.Generator:
        """Fresh PCG64 generator for this (value, path) stream."""
        ss = np.random.SeedSequence(self.value, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(ss))


class Interferometer:
    """An M-mode linear-optical circuit, i.e. an M x M unitary matrix.

    Construction fails loudly when the matrix is not unitary to within
    ``UNITARITY_TOL`` (max-norm of U†U - I); nothing is ever renormalized
    silently.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"interferometer matrix must be square, got {matrix.shape}")
        m = matrix.shape[0]
        defect = np.abs(matrix.conj().T @ matrix - np.eye(m)).max() if m else 0.0
        if defect > UNITARITY_TOL:
            raise ValueError(
                f"matrix is not unitary: max |U†U - I| = {defect:.3e} > {UNITARITY_TOL:.0e}"
            )
        self.matrix = matrix
        self.matrix.setflags(write=False)

    @property
    def modes(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self):
        return f"Interferometer(modes={self.modes})"


def _as_square_complex(a: np.ndarray, what: str) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what} requires a square matrix, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(a.view(np.float64))):
        raise ValueError(f"{what} requires finite entries")
    return a


@njit(cache=True)
def _permanent_gray(a):  # pragma: no cover - exercised via permanent()
    n = a.shape[0]
    v = np.zeros(n, dtype=np.complex128)
    for j in range(n):
        s = 0.0 + 0.0j
        for i in range(n):
            s += a[i, j]
        v[j] = s
    prod = 1.0 + 0.0j
    for j in range(n):
        prod *= v[j]
    total = prod
    sign = 1.0
    g = 0
    for t in range(1, 1 << (n - 1)):
        k = 0
        while (t >> k) & 1 == 0:
            k += 1
        row = k + 1
        if (g >> k) & 1:
            g ^= 1 << k
            for j in range(n):
                v[j] += 2.0 * a[row, j]
        else:
            g ^= 1 << k
            for j in range(n):
                v[j] -= 2.0 * a[row, j]
        sign = -sign
        prod = 1.0 + 0.0j
        for j in range(n):
            prod *= v[j]
        total += sign * prod
    return total / 2.0 ** (n - 1)


def permanent(a: np.ndarray) -> complex:
    """Permanent of a square complex matrix.

    Uses the Glynn ±1-vector formulation walked in Gray-code order, which
    costs O(2^n n) and cancels more gracefully than the textbook inclusion-
    exclusion sum. Sizes above ``PERMANENT_SIZE_LIMIT`` are refused.
    """
    a = _as_square_complex(a, "permanent")
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n > PERMANENT_SIZE_LIMIT:
        raise ValueError(f"permanent limited to n <= {PERMANENT_SIZE_LIMIT}, got n = {n}")
    return complex(_permanent_gray(a))


def permanents_batch(stack: np.ndarray) -> np.ndarray:
    """Permanents of a stack of small square matrices, shape (batch, n, n).

    Same Glynn sum as `permanent`, evaluated for all matrices at once; meant
    for the Monte Carlo loops, where n stays <= ~8 but the batch is large.
    """
    stack = np.ascontiguousarray(stack, dtype=np.complex128)
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise ValueError(f"expected (batch, n, n), got {stack.shape}")
    n = stack.shape[1]
    if n == 0:
        return np.ones(stack.shape[0], dtype=np.complex128)
    if n > 14:
        raise ValueError("permanents_batch limited to n <= 14; use permanent()")
    codes = np.arange(1 << (n - 1), dtype=np.uint64)
    bits = (codes[:, None] >> np.arange(n - 1, dtype=np.uint64)[None, :]) & 1
    deltas = np.concatenate(
        [np.ones((len(codes), 1)), 1.0 - 2.0 * bits.astype(np.float64)], axis=1
    )
    parity = deltas.prod(axis=1)
    rowsums = np.einsum("sn,bnm->bsm", deltas, stack)
    products = rowsums.prod(axis=2)
    return products @ parity / 2.0 ** (n - 1)


def determinant(a: np.ndarray) -> complex:
    """Determinant via LU factorization (O(n^3)); dimension 0 returns 1."""
    a = _as_square_complex(a, "determinant")
    if a.shape[0] == 0:
        return 1.0 + 0.0j
    return complex(np.linalg.det(a))


@njit(cache=True)
def _hafnian_matchings(b):  # pragma: no cover - exercised via hafnian()
    n = b.shape[0]
    # Depth-first enumeration of perfect matchings: always pair the lowest
    # unmatched index, so each of the (n-1)!! matchings is visited once.
    cap = n * n + 8
    masks = np.empty(cap, dtype=np.int64)
    prods = np.empty(cap, dtype=np.complex128)
    masks[0] = (1 << n) - 1
    prods[0] = 1.0 + 0.0j
    top = 1
    total = 0.0 + 0.0j
    while top > 0:
        top -= 1
        mask = masks[top]
        prod = prods[top]
        if mask == 0:
            total += prod
            continue
        i = 0
        while (mask >> i) & 1 == 0:
            i += 1
        rem = mask & ~(1 << i)
        for j in range(i + 1, n):
            if (rem >> j) & 1:
                masks[top] = rem & ~(1 << j)
                prods[top] = prod * b[i, j]
                top += 1
    return total


def hafnian(b: np.ndarray) -> complex:
    """Hafnian of a symmetric even-dimensional matrix.

    Direct sum over all (2n-1)!! perfect matchings of the product of matched
    entries. Desk scale caps the dimension at ``HAFNIAN_SIZE_LIMIT``; odd
    dimensions are rejected (callers that want the odd-dimension hafnian to
    read as 0 handle that themselves).
    """
    b = _as_square_complex(b, "hafnian")
    n = b.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n % 2:
        raise ValueError(f"hafnian requires an even dimension, got {n}")
    if n > HAFNIAN_SIZE_LIMIT:
        raise ValueError(f"hafnian limited to dim <= {HAFNIAN_SIZE_LIMIT}, got {n}")
    asym = np.abs(b - b.T).max()
    if asym > SYMMETRY_TOL:
        raise ValueError(f"hafnian input not symmetric: max |B - B^T| = {asym:.3e}")
    return complex(_hafnian_matchings(b))


def gaussian_matrix(n: int, seed: Seed) -> np.ndarray:
    """n x n i.i.d. complex normal matrix with E|z|^2 = 1.

    Real and imaginary parts are independent N(0, 1/2).
    """
    if n < 1:
        raise ValueError("gaussian_matrix requires n >= 1")
    rng = seed.generator()
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return z / np.sqrt(2.0)


def haar_unitary(modes: int, seed: Seed) -> Interferometer:
    """Haar-distributed unitary via QR of a complex Gaussian matrix.

    The phases of the R diagonal are divided out (R_ii / |R_ii|), which makes
    the QR output exactly Haar-distributed rather than merely unitary.
    """
    if modes < 1:
        raise ValueError("haar_unitary requires modes >= 1")
    rng = seed.generator()
    z = (rng.standard_normal((modes, modes)) + 1j * rng.standard_normal((modes, modes))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return Interferometer(q)


def select_submatrix(
    u: Interferometer | np.ndarray,
    rows: Sequence[int],
    cols: Sequence[int],
) -> np.ndarray:
    """Submatrix with the given rows and columns, repetition allowed."""
    matrix = u.matrix if isinstance(u, Interferometer) else np.asarray(u, dtype=np.complex128)
    m = matrix.shape[0]
    rows = np.asarray(list(rows), dtype=np.intp)
    cols = np.asarray(list(cols), dtype=np.intp)
    for name, idx in (("row", rows), ("col", cols)):
        if idx.size and (idx.min() < 0 or idx.max() >= m):
            raise IndexError(f"{name} index out of range for {m} modes")
    return matrix[np.ix_(rows, cols)]


def warm_up_kernels() -> None:
    """Trigger numba compilation eagerly (useful before timing runs)."""
    if not _HAVE_NUMBA:  # pragma: no cover
        warnings.warn("numba unavailable; kernels run as pure Python", RuntimeWarning)
    permanent(np.eye(2, dtype=np.complex128))
    hafnian(np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128))
