"""Dense complex linear algebra kernel.

Self-contained implementations of the factorizations the rest of the
package relies on: LU solves, scaling-and-squaring matrix exponential,
a complex QR (Schur) eigensolver for general matrices, a Hermitian
eigensolver, and a regularized Moore-Penrose pseudoinverse.  numpy is
used only as the array substrate; none of the numpy.linalg / scipy
decomposition routines are called.

All matrices are dense ``complex128`` and small (the package targets
Liouvillians up to ~64x64), so clarity wins over blocking tricks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EPS = np.finfo(float).eps

# Convergence threshold for QR deflation: subdiagonal h[j+1,j] is
# negligible when below _QR_DEFLATE * (|h[j,j]| + |h[j+1,j+1]|).
_QR_DEFLATE = 1e-14
# QR sweep budget per matrix dimension.
_QR_SWEEPS_PER_DIM = 100
# 1-norm threshold below which a single Pade-13 evaluation of expm is
# accurate to full precision (Higham 2005).
_PADE13_THETA = 5.4

_PADE13_B = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)


class ConvergenceError(RuntimeError):
    """QR iteration exceeded its sweep budget."""


class SingularMatrixError(RuntimeError):
    """A factorization hit a numerically zero pivot."""


class ExpOverflowError(ArithmeticError):
    """Matrix exponential produced entries beyond double range."""


def _all_finite(a: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(a.real)) and np.all(np.isfinite(a.imag)))


@dataclass(frozen=True)
class EigResult:
    """Eigenvalues with unit-norm right eigenvectors (as columns)."""

    values: np.ndarray
    right_vectors: np.ndarray
    residual: float


def as_cmatrix(a, square: bool = False) -> np.ndarray:
    """Validate and convert to a finite complex matrix."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={m.ndim}")
    if not _all_finite(m):
        raise ValueError("matrix has non-finite entries")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def as_cvector(v) -> np.ndarray:
    """Validate and convert to a finite complex vector."""
    w = np.asarray(v, dtype=complex)
    if w.ndim != 1:
        raise ValueError(f"expected a vector, got ndim={w.ndim}")
    if not _all_finite(w):
        raise ValueError("vector has non-finite entries")
    return w


def kron(a, b) -> np.ndarray:
    """Kronecker product of two complex matrices."""
    return np.kron(as_cmatrix(a), as_cmatrix(b))


def solve(a, b) -> np.ndarray:
    """Solve a x = b by LU with partial pivoting (b may be a matrix)."""
    lu = as_cmatrix(a, square=True).copy()
    n = lu.shape[0]
    x = np.asarray(b, dtype=complex).copy()
    is_vec = x.ndim == 1
    if is_vec:
        x = x[:, None]
    if x.shape[0] != n:
        raise ValueError("right-hand side has incompatible shape")
    scale = np.max(np.abs(lu)) if n else 0.0
    tiny = n * _EPS * max(scale, 1e-300)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) <= tiny:
            raise SingularMatrixError(f"zero pivot in column {k}")
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            x[[k, p]] = x[[p, k]]
        f = lu[k + 1:, k] / lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(f, lu[k, k + 1:])
        x[k + 1:] -= np.outer(f, x[k])
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - lu[k, k + 1:] @ x[k + 1:]) / lu[k, k]
    return x[:, 0] if is_vec else x


def inv(a) -> np.ndarray:
    """Matrix inverse via the LU solver."""
    a = as_cmatrix(a, square=True)
    return solve(a, np.eye(a.shape[0], dtype=complex))


def matexp(a, scale: float = 1.0) -> np.ndarray:
    """e^{scale * a} by scaling-and-squaring with a Pade-13 approximant."""
    a = as_cmatrix(a, square=True)
    if not np.isfinite(scale):
        raise ValueError("scale must be finite")
    m = a * scale
    n = m.shape[0]
    ident = np.eye(n, dtype=complex)
    norm1 = float(np.max(np.abs(m).sum(axis=0))) if n else 0.0
    squarings = max(0, int(np.ceil(np.log2(norm1 / _PADE13_THETA)))) if norm1 > _PADE13_THETA else 0
    m = m / (2.0 ** squarings)

    b = _PADE13_B
    m2 = m @ m
    m4 = m2 @ m2
    m6 = m2 @ m4
    u = m @ (m6 @ (b[13] * m6 + b[11] * m4 + b[9] * m2)
             + b[7] * m6 + b[5] * m4 + b[3] * m2 + b[1] * ident)
    v = (m6 @ (b[12] * m6 + b[10] * m4 + b[8] * m2)
         + b[6] * m6 + b[4] * m4 + b[2] * m2 + b[0] * ident)
    try:
        r = solve(v - u, v + u)
    except SingularMatrixError as exc:
        raise ExpOverflowError("Pade denominator is singular") from exc
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(squarings):
            r = r @ r
            if not _all_finite(r):
                raise ExpOverflowError("overflow while squaring the exponential")
    if not _all_finite(r) or np.max(np.abs(r)) >= np.finfo(float).max:
        raise ExpOverflowError("exponential exceeds double range")
    return r


def _balance(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Parlett-Reinsch diagonal balancing: returns (D^-1 A D, diag of D)."""
    b = a.copy()
    n = b.shape[0]
    d = np.ones(n)
    radix = 2.0
    converged = False
    while not converged:
        converged = True
        for i in range(n):
            r = np.sum(np.abs(b[i, :])) - abs(b[i, i])
            c = np.sum(np.abs(b[:, i])) - abs(b[i, i])
            if r == 0.0 or c == 0.0:
                continue
            f = 1.0
            s = c + r
            while c < r / radix:
                c *= radix
                r /= radix
                f *= radix
            while c >= r * radix:
                c /= radix
                r *= radix
                f /= radix
            if (c + r) < 0.95 * s and f != 1.0:
                converged = False
                d[i] *= f
                b[:, i] *= f
                b[i, :] /= f
    return b, d


def _hessenberg(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Householder reduction to upper Hessenberg form: a = q h q^dag."""
    n = a.shape[0]
    h = a.copy()
    q = np.eye(n, dtype=complex)
    for k in range(n - 2):
        x = h[k + 1:, k]
        nx = float(np.sqrt(np.sum(np.abs(x) ** 2)))
        if nx <= _EPS * max(1.0, float(np.max(np.abs(h)))):
            continue
        v = x.copy()
        alpha = v[0]
        phase = alpha / abs(alpha) if abs(alpha) > 0 else 1.0
        v[0] += phase * nx
        vn = float(np.sqrt(np.sum(np.abs(v) ** 2)))
        if vn == 0.0:
            continue
        v = v / vn
        h[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v.conj())
    h[np.tril_indices(n, -2)] = 0.0
    return h, q


def _givens(a: complex, b: complex) -> tuple[float, complex]:
    """Rotation [[c, s], [-conj(s), c]] zeroing b below a (c real)."""
    if b == 0:
        return 1.0, 0.0 + 0.0j
    if a == 0:
        return 0.0, 1.0 + 0.0j
    t = abs(a)
    r = np.hypot(t, abs(b))
    c = t / r
    s = (a / t) * np.conj(b) / r
    return float(c), complex(s)


def _wilkinson_shift(h: np.ndarray, hi: int) -> complex:
    """Eigenvalue of the trailing 2x2 block closest to h[hi, hi]."""
    a = h[hi - 1, hi - 1]
    b = h[hi - 1, hi]
    c = h[hi, hi - 1]
    d = h[hi, hi]
    tr2 = (a + d) / 2.0
    disc = np.sqrt(tr2 * tr2 - (a * d - b * c))
    e1 = tr2 + disc
    e2 = tr2 - disc
    return e1 if abs(e1 - d) < abs(e2 - d) else e2


def _schur_explicit(a: np.ndarray, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    """Complex Schur form via explicit shifted QR: a = z t z^dag."""
    n = a.shape[0]
    t, z = _hessenberg(a)
    hi = n - 1
    sweeps = 0
    stagnation = 0
    while hi > 0:
        while hi > 0:
            s = abs(t[hi - 1, hi - 1]) + abs(t[hi, hi])
            if s == 0.0:
                s = float(np.max(np.abs(t))) or 1.0
            if abs(t[hi, hi - 1]) < _QR_DEFLATE * s:
                t[hi, hi - 1] = 0.0
                hi -= 1
                stagnation = 0
            else:
                break
        if hi == 0:
            break
        lo = hi
        while lo > 0:
            s = abs(t[lo - 1, lo - 1]) + abs(t[lo, lo])
            if s == 0.0:
                s = float(np.max(np.abs(t))) or 1.0
            if abs(t[lo, lo - 1]) < _QR_DEFLATE * s:
                t[lo, lo - 1] = 0.0
                break
            lo -= 1
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"QR iteration did not converge within {max_sweeps} sweeps")
        sweeps += 1
        stagnation += 1
        mu = _wilkinson_shift(t, hi)
        if stagnation > 0 and stagnation % 16 == 0:
            mu = t[hi, hi] + 0.75 * abs(t[hi, hi - 1]) * (1 + 0.5j)
        # factor (T - mu I) = Q R on the active window with Givens rotations,
        # then form R Q + mu I; accumulate Q into z
        for i in range(lo, hi + 1):
            t[i, i] -= mu
        rots = []
        for i in range(lo, hi):
            c, s = _givens(t[i, i], t[i + 1, i])
            rots.append((i, c, s))
            rows = t[[i, i + 1], i:].copy()
            t[i, i:] = c * rows[0] + s * rows[1]
            t[i + 1, i:] = -np.conj(s) * rows[0] + c * rows[1]
            t[i + 1, i] = 0.0
        for i, c, s in rots:
            top = min(i + 2, hi + 1)
            cols = t[:top, [i, i + 1]].copy()
            t[:top, i] = c * cols[:, 0] + np.conj(s) * cols[:, 1]
            t[:top, i + 1] = -s * cols[:, 0] + c * cols[:, 1]
            zc = z[:, [i, i + 1]].copy()
            z[:, i] = c * zc[:, 0] + np.conj(s) * zc[:, 1]
            z[:, i + 1] = -s * zc[:, 0] + c * zc[:, 1]
        for i in range(lo, hi + 1):
            t[i, i] += mu
    # clean the strict lower triangle (rounding residue below Hessenberg)
    t[np.tril_indices(n, -1)] = 0.0
    return t, z


def _triangular_eigenvectors(t: np.ndarray) -> np.ndarray:
    """Right eigenvectors of an upper triangular matrix, one per column."""
    n = t.shape[0]
    scale = float(np.max(np.abs(t))) or 1.0
    smin = _EPS * scale
    vecs = np.zeros((n, n), dtype=complex)
    for k in range(n):
        y = np.zeros(n, dtype=complex)
        y[k] = 1.0
        lam = t[k, k]
        for i in range(k - 1, -1, -1):
            num = -(t[i, i + 1:k + 1] @ y[i + 1:k + 1])
            den = t[i, i] - lam
            if abs(den) < smin:
                den = smin
            y[i] = num / den
            # rescale to dodge overflow in pathologically graded cases
            m = abs(y[i])
            if m > 1e250:
                y /= m
        vecs[:, k] = y
    return vecs


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Normalize and rotate so the largest-magnitude entry is real positive."""
    nrm = float(np.sqrt(np.sum(np.abs(v) ** 2)))
    if nrm == 0.0:
        return v
    v = v / nrm
    i = int(np.argmax(np.abs(v)))
    ph = v[i] / abs(v[i])
    return v / ph


def eig_general(a, max_sweeps_per_dim: int = _QR_SWEEPS_PER_DIM) -> EigResult:
    """All eigenvalues and right eigenvectors of a general complex matrix.

    Balancing -> Householder Hessenberg -> shifted complex QR -> back
    substitution on the Schur factor.  Raises ConvergenceError if the QR
    iteration fails to deflate within the sweep budget.
    """
    a = as_cmatrix(a, square=True)
    n = a.shape[0]
    if n == 0:
        return EigResult(np.zeros(0, complex), np.zeros((0, 0), complex), 0.0)
    if n == 1:
        return EigResult(a[0, 0].reshape(1), np.ones((1, 1), complex), 0.0)
    balanced, d = _balance(a)
    t, z = _schur_explicit(balanced, max_sweeps_per_dim * n)
    y = _triangular_eigenvectors(t)
    vecs = (z @ y) * d[:, None]
    values = t.diagonal().copy()
    for k in range(n):
        vecs[:, k] = _fix_phase(vecs[:, k])
    residual = 0.0
    for k in range(n):
        r = a @ vecs[:, k] - values[k] * vecs[:, k]
        residual = max(residual, float(np.sqrt(np.sum(np.abs(r) ** 2))))
    return EigResult(values, vecs, residual)


def eig_hermitian(a, tol: float = 1e-10) -> EigResult:
    """Eigendecomposition of a Hermitian matrix.

    Real eigenvalues in ascending order with orthonormal eigenvectors
    (columns of the accumulated Schur transform, which is diagonal for a
    Hermitian input up to rounding).
    """
    a = as_cmatrix(a, square=True)
    dev = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if a.size and dev > tol * max(1.0, float(np.max(np.abs(a)))):
        raise ValueError(f"matrix is not Hermitian within tolerance ({dev:.2e})")
    h = (a + a.conj().T) / 2.0
    n = h.shape[0]
    if n == 0:
        return EigResult(np.zeros(0, complex), np.zeros((0, 0), complex), 0.0)
    if n == 1:
        return EigResult(h[0, 0].real.reshape(1).astype(complex),
                         np.ones((1, 1), complex), 0.0)
    t, z = _schur_explicit(h, _QR_SWEEPS_PER_DIM * n)
    values = t.diagonal().real.copy()
    order = np.argsort(values, kind="stable")
    values = values[order]
    vecs = z[:, order]
    for k in range(n):
        vecs[:, k] = _fix_phase(vecs[:, k])
    residual = 0.0
    for k in range(n):
        r = h @ vecs[:, k] - values[k] * vecs[:, k]
        residual = max(residual, float(np.sqrt(np.sum(np.abs(r) ** 2))))
    return EigResult(values.astype(complex), vecs, residual)


def pinv(a, delta: float = 0.0) -> np.ndarray:
    """Regularized Moore-Penrose pseudoinverse a^dag (a a^dag + delta I)^-1.

    delta = 0 requests the exact limit; if the factorization is singular
    there, the call falls back to delta = 1e-12 * ||a a^dag||_inf.
    """
    a = as_cmatrix(a)
    if delta < 0:
        raise ValueError("delta must be non-negative")
    gram = a @ a.conj().T
    n = gram.shape[0]
    ident = np.eye(n, dtype=complex)
    try:
        return a.conj().T @ inv(gram + delta * ident)
    except SingularMatrixError:
        if delta > 0:
            raise
        fallback = 1e-12 * max(float(np.max(np.abs(gram))), 1e-300)
        return a.conj().T @ inv(gram + fallback * ident)
