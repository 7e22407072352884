"""Direct solvers for the periodic step systems.

The time stepper produces one cyclic block-tridiagonal system per step
(2x2 blocks coupling the two unknowns at each node, with wrap-around
corner blocks).  It is solved in O(M) by block Thomas elimination on
the acyclic core followed by a rank-4 Woodbury correction for the two
corner blocks.  A scalar variant handles the constant-coefficient
relation between a field and its curvature, and a dense LU oracle
backs both in the tests and as a last-resort fallback.

The elimination loops run on plain Python floats: per-node 2x2 block
arithmetic is far cheaper scalarized than as many tiny ndarray ops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SingularSystemError",
    "ScalarCyclicTriSystem",
    "CyclicBlockTriSystem",
    "solve_scalar_cyclic",
    "solve_cyclic_block_tridiagonal",
    "solve_dense_oracle",
    "solve_circulant",
    "dft",
    "scalar_system_matrix",
    "block_system_matrix",
    "block_matvec",
    "block_row_sum_norm",
]

DENSE_ORACLE_MAX_N = 4096

# Pivot floor: a 2x2 determinant (or scalar pivot) is declared singular
# below 1e-14 of the natural scale of the system's coefficients.
PIVOT_RTOL = 1e-14


class SingularSystemError(Exception):
    """Raised when elimination hits a pivot or capacitance matrix that is
    numerically singular relative to the system's coefficient scale."""


@dataclass
class ScalarCyclicTriSystem:
    """Cyclic tridiagonal system: row i reads
    sub[i]*x[i-1] + diag[i]*x[i] + sup[i]*x[i+1] = rhs[i]  (indices mod M).

    sub[0] and sup[M-1] are the periodic corner entries.  Diagonal
    dominance is not assumed.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        self.sub = np.asarray(self.sub, dtype=float)
        self.diag = np.asarray(self.diag, dtype=float)
        self.sup = np.asarray(self.sup, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        m = self.diag.shape[0]
        if m < 4:
            raise ValueError(f"need M >= 4 rows, got {m}")
        for name, a in (("sub", self.sub), ("diag", self.diag),
                        ("sup", self.sup), ("rhs", self.rhs)):
            if a.shape != (m,):
                raise ValueError(f"{name} has shape {a.shape}, expected ({m},)")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite values")

    @property
    def m(self) -> int:
        return self.diag.shape[0]


@dataclass
class CyclicBlockTriSystem:
    """Cyclic block-tridiagonal system with 2x2 blocks: block row i reads
    sub[i] @ x[i-1] + diag[i] @ x[i] + sup[i] @ x[i+1] = rhs[i]  (mod M),
    with x[i] a 2-vector.  sub[0] and sup[M-1] are the corner blocks.
    """

    sub: np.ndarray   # (M, 2, 2)
    diag: np.ndarray  # (M, 2, 2)
    sup: np.ndarray   # (M, 2, 2)
    rhs: np.ndarray   # (M, 2)

    def __post_init__(self):
        self.sub = np.asarray(self.sub, dtype=float)
        self.diag = np.asarray(self.diag, dtype=float)
        self.sup = np.asarray(self.sup, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        m = self.diag.shape[0]
        if m < 4:
            raise ValueError(f"need M >= 4 block rows, got {m}")
        for name, a, shape in (("sub", self.sub, (m, 2, 2)),
                               ("diag", self.diag, (m, 2, 2)),
                               ("sup", self.sup, (m, 2, 2)),
                               ("rhs", self.rhs, (m, 2))):
            if a.shape != shape:
                raise ValueError(f"{name} has shape {a.shape}, expected {shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite values")

    @property
    def m(self) -> int:
        return self.diag.shape[0]


def solve_scalar_cyclic(system: ScalarCyclicTriSystem) -> np.ndarray:
    """Solve a cyclic tridiagonal system in O(M).

    Thomas elimination on the acyclic core; the two corner entries are
    peeled off as a rank-2 update and restored with a Sherman-Morrison-
    Woodbury correction (2x2 capacitance matrix).
    """
    m = system.m
    sub = system.sub.tolist()
    diag = system.diag.tolist()
    sup = system.sup.tolist()

    scale = max(float(np.max(np.abs(system.sub))),
                float(np.max(np.abs(system.diag))),
                float(np.max(np.abs(system.sup))))
    floor = PIVOT_RTOL * scale
    ca = sub[0]        # corner entry at (0, M-1)
    cb = sup[m - 1]    # corner entry at (M-1, 0)

    # Columns: actual rhs, then the two Woodbury columns ca*e_0, cb*e_{M-1}.
    b0 = system.rhs.tolist()
    b1 = [0.0] * m
    b2 = [0.0] * m
    b1[0] = ca
    b2[m - 1] = cb

    piv = [0.0] * m
    p = diag[0]
    if abs(p) <= floor:
        raise SingularSystemError(f"zero pivot in row 0 (|{p}| <= {floor})")
    piv[0] = 1.0 / p
    for i in range(1, m):
        w = sub[i] * piv[i - 1]
        p = diag[i] - w * sup[i - 1]
        if abs(p) <= floor:
            raise SingularSystemError(f"zero pivot in row {i} (|{p}| <= {floor})")
        piv[i] = 1.0 / p
        b0[i] -= w * b0[i - 1]
        b1[i] -= w * b1[i - 1]
        b2[i] -= w * b2[i - 1]

    b0[m - 1] *= piv[m - 1]
    b1[m - 1] *= piv[m - 1]
    b2[m - 1] *= piv[m - 1]
    for i in range(m - 2, -1, -1):
        s = sup[i]
        q = piv[i]
        b0[i] = (b0[i] - s * b0[i + 1]) * q
        b1[i] = (b1[i] - s * b1[i + 1]) * q
        b2[i] = (b2[i] - s * b2[i + 1]) * q

    # Capacitance C = I2 + [[z1[M-1], z2[M-1]], [z1[0], z2[0]]]
    c11 = 1.0 + b1[m - 1]
    c12 = b2[m - 1]
    c21 = b1[0]
    c22 = 1.0 + b2[0]
    det = c11 * c22 - c12 * c21
    if abs(det) <= PIVOT_RTOL * max(1.0, abs(c11), abs(c12), abs(c21), abs(c22)) ** 2:
        raise SingularSystemError("singular Woodbury capacitance matrix")
    g1 = b0[m - 1]
    g2 = b0[0]
    w1 = (c22 * g1 - c12 * g2) / det
    w2 = (c11 * g2 - c21 * g1) / det

    y = np.asarray(b0)
    return y - w1 * np.asarray(b1) - w2 * np.asarray(b2)


def solve_cyclic_block_tridiagonal(system: CyclicBlockTriSystem) -> np.ndarray:
    """Solve a cyclic block-tridiagonal system in O(M); returns (M, 2).

    Block Thomas elimination with per-block 2x2 pivot inversion (no row
    pivoting across blocks) on the acyclic core, then a rank-4 Woodbury
    correction for the corner blocks sub[0] and sup[M-1].  The four
    Woodbury columns ride along as extra right-hand sides, so the core
    is factored exactly once.
    """
    m = system.m
    scale = max(float(np.max(np.abs(system.sub))),
                float(np.max(np.abs(system.diag))),
                float(np.max(np.abs(system.sup))))
    floor = PIVOT_RTOL * scale * scale  # determinant scale is entries squared

    sb = system.sub.reshape(m, 4).tolist()
    dg = system.diag.reshape(m, 4).tolist()
    sp = system.sup.reshape(m, 4).tolist()

    # Per node: columns [rhs, V0, V1, V2, V3] stored as one row of 10
    # floats (first component of all 5 columns, then second component).
    bc = [[0.0] * 10 for _ in range(m)]
    r = system.rhs
    for i in range(m):
        bc[i][0] = float(r[i, 0])
        bc[i][5] = float(r[i, 1])
    bc[0][1] = sb[0][0]
    bc[0][2] = sb[0][1]
    bc[0][6] = sb[0][2]
    bc[0][7] = sb[0][3]
    bc[m - 1][3] = sp[m - 1][0]
    bc[m - 1][4] = sp[m - 1][1]
    bc[m - 1][8] = sp[m - 1][2]
    bc[m - 1][9] = sp[m - 1][3]

    inv = [None] * m
    a, b, c, d = dg[0]
    det = a * d - b * c
    if abs(det) <= floor:
        raise SingularSystemError(f"singular 2x2 pivot in block row 0 (|det|={abs(det)})")
    inv[0] = (d / det, -b / det, -c / det, a / det)

    for i in range(1, m):
        ia, ib, ic, id_ = inv[i - 1]
        la, lb, lc, ld = sb[i]
        wa = la * ia + lb * ic
        wb = la * ib + lb * id_
        wc = lc * ia + ld * ic
        wd = lc * ib + ld * id_
        ua, ub, uc, ud = sp[i - 1]
        a, b, c, d = dg[i]
        a -= wa * ua + wb * uc
        b -= wa * ub + wb * ud
        c -= wc * ua + wd * uc
        d -= wc * ub + wd * ud
        det = a * d - b * c
        if abs(det) <= floor:
            raise SingularSystemError(
                f"singular 2x2 pivot in block row {i} (|det|={abs(det)})")
        inv[i] = (d / det, -b / det, -c / det, a / det)
        bp = bc[i - 1]
        bi = bc[i]
        for j in range(5):
            r0 = bp[j]
            r1 = bp[5 + j]
            bi[j] -= wa * r0 + wb * r1
            bi[5 + j] -= wc * r0 + wd * r1

    ia, ib, ic, id_ = inv[m - 1]
    bl = bc[m - 1]
    for j in range(5):
        r0 = bl[j]
        r1 = bl[5 + j]
        bl[j] = ia * r0 + ib * r1
        bl[5 + j] = ic * r0 + id_ * r1
    for i in range(m - 2, -1, -1):
        ua, ub, uc, ud = sp[i]
        xn = bc[i + 1]
        bi = bc[i]
        ia, ib, ic, id_ = inv[i]
        for j in range(5):
            r0 = bi[j] - (ua * xn[j] + ub * xn[5 + j])
            r1 = bi[5 + j] - (uc * xn[j] + ud * xn[5 + j])
            bi[j] = ia * r0 + ib * r1
            bi[5 + j] = ic * r0 + id_ * r1

    sol = np.asarray(bc).reshape(m, 2, 5)
    y = sol[:, :, 0]
    z = sol[:, :, 1:]

    # Capacitance C = I4 + W^T Z with W^T picking block rows M-1 then 0.
    cap = np.eye(4)
    cap[0:2, :] += z[m - 1]
    cap[2:4, :] += z[0]
    g = np.concatenate([y[m - 1], y[0]])
    capdet = np.linalg.det(cap)
    if not np.isfinite(capdet) or abs(capdet) <= PIVOT_RTOL * max(1.0, float(np.max(np.abs(cap)))) ** 4:
        raise SingularSystemError("singular Woodbury capacitance matrix")
    w = np.linalg.solve(cap, g)
    return y - z @ w


def solve_dense_oracle(matrix, rhs) -> np.ndarray:
    """Dense LU solve with partial pivoting; test oracle and fallback only."""
    a = np.asarray(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    n = a.shape[0]
    if n > DENSE_ORACLE_MAX_N:
        raise ValueError(f"dense oracle limited to n <= {DENSE_ORACLE_MAX_N}, got {n}")
    if b.shape != (n,):
        raise ValueError(f"rhs has shape {b.shape}, expected ({n},)")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("matrix or rhs contains non-finite values")
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc


# -- circulant path (constant-coefficient wrap-around systems) ---------------

def dft(x, inverse: bool = False) -> np.ndarray:
    """Discrete Fourier transform, in-repo.

    Radix-2 Cooley-Tukey when the length is a power of two, otherwise a
    chunked O(n^2) evaluation (fine at desk scale).  The inverse carries
    the 1/n normalization.
    """
    a = np.asarray(x, dtype=complex)
    n = a.shape[0]
    if n == 0:
        raise ValueError("empty transform")
    sign = 1.0 if inverse else -1.0
    if n & (n - 1) == 0:
        out = _fft_radix2(a, sign)
    else:
        out = _dft_naive(a, sign)
    if inverse:
        out /= n
    return out


def _fft_radix2(a: np.ndarray, sign: float) -> np.ndarray:
    n = a.shape[0]
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=int)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    a = a[rev]
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(sign * 2j * np.pi * np.arange(half) / size)
        a = a.reshape(n // size, size)
        even = a[:, :half].copy()
        odd = a[:, half:] * tw
        a[:, :half] = even + odd
        a[:, half:] = even - odd
        a = a.reshape(n)
        size *= 2
    return a


def _dft_naive(a: np.ndarray, sign: float) -> np.ndarray:
    n = a.shape[0]
    out = np.empty(n, dtype=complex)
    k = np.arange(n)
    rows = max(1, (1 << 21) // n)  # bound the chunk to a few tens of MB
    for start in range(0, n, rows):
        j = np.arange(start, min(start + rows, n))
        out[j] = np.exp(sign * 2j * np.pi * np.outer(j, k) / n) @ a
    return out


def solve_circulant(sub: float, diag: float, sup: float, rhs) -> np.ndarray:
    """Solve the constant-coefficient cyclic tridiagonal system
    sub*x[i-1] + diag*x[i] + sup*x[i+1] = rhs[i] by DFT diagonalization.

    Only valid when the three coefficients are the same in every row
    (the matrix is then circulant); the wrap-around relation between a
    field and its curvature has exactly this form.
    """
    b = np.asarray(rhs, dtype=float)
    n = b.shape[0]
    first_col = np.zeros(n)
    first_col[0] = diag
    first_col[1] = sub
    first_col[-1] = sup
    lam = dft(first_col)
    scale = max(abs(sub), abs(diag), abs(sup))
    if np.min(np.abs(lam)) <= PIVOT_RTOL * max(1.0, scale) * n:
        raise SingularSystemError("circulant symbol has a (near-)zero eigenvalue")
    x = dft(dft(b) / lam, inverse=True)
    return np.real(x)


# -- dense assembly and residual helpers (tests, fallback, diagnostics) ------

def scalar_system_matrix(system: ScalarCyclicTriSystem) -> np.ndarray:
    """Assemble the full M x M matrix of a scalar cyclic system."""
    m = system.m
    a = np.zeros((m, m))
    idx = np.arange(m)
    a[idx, idx] = system.diag
    a[idx, (idx - 1) % m] += system.sub
    a[idx, (idx + 1) % m] += system.sup
    return a


def block_system_matrix(system: CyclicBlockTriSystem) -> np.ndarray:
    """Assemble the full 2M x 2M matrix of a block cyclic system
    (unknown ordering interleaved: u_0, v_0, u_1, v_1, ...)."""
    m = system.m
    a = np.zeros((2 * m, 2 * m))
    for i in range(m):
        a[2 * i:2 * i + 2, 2 * i:2 * i + 2] += system.diag[i]
        jm = (i - 1) % m
        jp = (i + 1) % m
        a[2 * i:2 * i + 2, 2 * jm:2 * jm + 2] += system.sub[i]
        a[2 * i:2 * i + 2, 2 * jp:2 * jp + 2] += system.sup[i]
    return a


def block_matvec(system: CyclicBlockTriSystem, x: np.ndarray) -> np.ndarray:
    """Apply the block cyclic matrix to x of shape (M, 2)."""
    xm = np.roll(x, 1, axis=0)
    xp = np.roll(x, -1, axis=0)
    return (np.einsum("nij,nj->ni", system.diag, x)
            + np.einsum("nij,nj->ni", system.sub, xm)
            + np.einsum("nij,nj->ni", system.sup, xp))


def block_row_sum_norm(system: CyclicBlockTriSystem) -> float:
    """Infinity norm of the assembled matrix (max absolute row sum)."""
    rows = (np.sum(np.abs(system.sub), axis=2)
            + np.sum(np.abs(system.diag), axis=2)
            + np.sum(np.abs(system.sup), axis=2))
    return float(np.max(rows))
