"""Dense, CP, Tucker and tensor-train tensors with rank-controlled arithmetic.

Dense tensors are plain ``numpy.ndarray`` objects.  The linearization
convention is column-major throughout: ``vec(X) == X.ravel(order="F")``, the
first index varying fastest.  Under this convention the mode-1 product of a
matrix with a d = 2 tensor is the ordinary product ``A @ X``, and the mode-i
product corresponds to the Kronecker-structured matrix with the non-identity
factor in position i counted from the right acting on ``vec(X)``.

Formats:

* :class:`CPTensor` -- k rank-one terms, one ``n_i x k`` factor per mode.
* :class:`TuckerTensor` -- dense core times per-mode orthonormal factors.
* :class:`TTTensor` -- tensor train; boundary carriages are matrices, the
  inner ones order-3 arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CPTensor",
    "TTTensor",
    "TuckerTensor",
    "cp_add",
    "cp_als",
    "fold",
    "hosvd",
    "mode_product",
    "multi_mode_product",
    "read_blocks",
    "read_cp",
    "read_dense",
    "read_tt",
    "read_tucker",
    "tt_add",
    "tt_mode_product",
    "tt_norm",
    "tt_round",
    "tt_svd",
    "unfold",
    "vec",
    "unvec",
    "write_cp",
    "write_dense",
    "write_tt",
    "write_tucker",
]

_ORTHO_TOL = 1e-12


# ---------------------------------------------------------------------------
# dense tensors
# ---------------------------------------------------------------------------

def vec(x: np.ndarray) -> np.ndarray:
    """Column-major vectorization (first index fastest)."""
    return np.asarray(x).ravel(order="F")


def unvec(v: np.ndarray, shape) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v).reshape(shape, order="F")


def unfold(x: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding of a dense tensor.

    Row ``j`` collects all entries whose index along ``mode`` equals ``j``;
    columns are ordered by the column-major linearization of the remaining
    indices.
    """
    x = np.asarray(x)
    if not 0 <= mode < x.ndim:
        raise IndexError(f"mode {mode} out of range for a {x.ndim}-way tensor")
    return np.moveaxis(x, mode, 0).reshape(x.shape[mode], -1, order="F")


def fold(m: np.ndarray, mode: int, shape) -> np.ndarray:
    """Inverse of :func:`unfold` for a tensor of the given shape."""
    shape = tuple(shape)
    rest = shape[:mode] + shape[mode + 1:]
    x = np.asarray(m).reshape((shape[mode],) + rest, order="F")
    return np.moveaxis(x, 0, mode)


def mode_product(x: np.ndarray, mode: int, a: np.ndarray) -> np.ndarray:
    """Mode-``mode`` product: contract ``a``'s columns with the tensor's mode.

    Satisfies ``unfold(mode_product(x, i, a), i) == a @ unfold(x, i)``.
    """
    x = np.asarray(x)
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[1] != x.shape[mode]:
        raise ValueError(f"matrix of shape {a.shape} does not match mode {mode} of extent {x.shape[mode]}")
    y = np.tensordot(x, a, axes=([mode], [1]))
    return np.moveaxis(y, -1, mode)


def multi_mode_product(x: np.ndarray, mats) -> np.ndarray:
    """Apply one matrix (or ``None`` for identity) per mode."""
    y = np.asarray(x)
    for i, a in enumerate(mats):
        if a is not None:
            y = mode_product(y, i, a)
    return y


# ---------------------------------------------------------------------------
# CP format
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CPTensor:
    """Sum of rank-one terms; ``factors[i]`` has one column per term."""

    factors: tuple

    def __post_init__(self):
        factors = tuple(np.asarray(f, dtype=float) for f in self.factors)
        object.__setattr__(self, "factors", factors)
        if not factors:
            raise ValueError("CPTensor needs at least one factor")
        if any(f.ndim != 2 for f in factors):
            raise ValueError("CP factors must be matrices")
        k = factors[0].shape[1]
        if any(f.shape[1] != k for f in factors):
            raise ValueError("all CP factors must share the column count")

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def shape(self) -> tuple:
        return tuple(f.shape[0] for f in self.factors)

    @classmethod
    def from_rank1(cls, vectors) -> "CPTensor":
        return cls(tuple(np.asarray(v, dtype=float).reshape(-1, 1) for v in vectors))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for l in range(self.rank):
            term = self.factors[0][:, l]
            for f in self.factors[1:]:
                term = np.multiply.outer(term, f[:, l])
            out += term
        return out


def cp_add(x: CPTensor, y: CPTensor) -> CPTensor:
    """Concatenate the rank-one terms of two CP tensors of the same shape."""
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    return CPTensor(tuple(np.hstack([fx, fy]) for fx, fy in zip(x.factors, y.factors)))


def _khatri_rao(mats) -> np.ndarray:
    """Column-wise Kronecker product, first matrix's index fastest."""
    out = mats[0]
    for m in mats[1:]:
        k = out.shape[1]
        out = (out[:, None, :] * m[None, :, :]).reshape(-1, k, order="F")
    return out


def cp_als(
    x: np.ndarray,
    rank: int,
    max_iters: int = 100,
    tol: float = 1e-12,
    restarts: int = 5,
    rng=None,
    init: CPTensor | None = None,
) -> CPTensor:
    """Fit a CP approximation by alternating least squares.

    Runs ``restarts`` independent sweeps (the first seeded with ``init`` when
    given, the rest with random unit-normal factors) and keeps the best fit.
    Each mode update solves regularized normal equations (ridge 1e-12), so a
    rank-deficient iterate cannot abort the sweep, and the fit error is
    nonincreasing over the sweeps of one run up to that regularization.
    Iteration stops when the relative fit change drops below ``tol``.

    Parameters
    ----------
    x : ndarray
        Dense target tensor.
    rank : int
        Requested number of rank-one terms (>= 1).
    rng : numpy Generator or seed, optional
        Source of the random restarts; fixed seeds give reproducible fits.
    init : CPTensor, optional
        Warm start used for the first restart.
    """
    x = np.asarray(x, dtype=float)
    if rank < 1:
        raise ValueError(f"rank must be positive, got {rank}")
    rng = np.random.default_rng(rng)
    d = x.ndim
    norm_x = np.linalg.norm(x)
    unfoldings = [unfold(x, i) for i in range(d)]

    best = None
    best_err = np.inf
    for run in range(max(1, restarts)):
        if run == 0 and init is not None:
            if init.shape != x.shape or init.rank != rank:
                raise ValueError("init must match the target shape and requested rank")
            factors = [f.copy() for f in init.factors]
        else:
            factors = [_normalized_columns(rng.standard_normal((n, rank))) for n in x.shape]
        grams = [f.T @ f for f in factors]

        prev_err = np.inf
        err = np.inf
        for _ in range(max_iters):
            for i in range(d):
                others = [factors[j] for j in range(d) if j != i]
                kr = _khatri_rao(others)
                mttkrp = unfoldings[i] @ kr
                gram = np.ones((rank, rank))
                for j in range(d):
                    if j != i:
                        gram *= grams[j]
                factors[i] = np.linalg.solve(gram + 1e-12 * np.eye(rank), mttkrp.T).T
                grams[i] = factors[i].T @ factors[i]
            # fit via the Gram identity: ||x - T||^2 = ||x||^2 - 2<T,x> + ||T||^2
            inner = float(np.sum(mttkrp * factors[d - 1]))
            gram_all = np.ones((rank, rank))
            for g in grams:
                gram_all *= g
            norm_t_sq = float(np.sum(gram_all))
            err = math.sqrt(max(norm_x**2 - 2.0 * inner + norm_t_sq, 0.0))
            if prev_err - err <= tol * max(norm_x, 1e-300):
                break
            prev_err = err
        if err < best_err:
            best_err = err
            best = CPTensor(tuple(f.copy() for f in factors))
    return best


def _normalized_columns(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=0)
    norms[norms == 0.0] = 1.0
    return m / norms


# ---------------------------------------------------------------------------
# Tucker format
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TuckerTensor:
    """Dense core contracted with one orthonormal factor per mode."""

    core: np.ndarray
    factors: tuple

    def __post_init__(self):
        core = np.asarray(self.core, dtype=float)
        factors = tuple(np.asarray(f, dtype=float) for f in self.factors)
        object.__setattr__(self, "core", core)
        object.__setattr__(self, "factors", factors)
        if core.ndim != len(factors):
            raise ValueError("need one factor per core mode")
        for i, f in enumerate(factors):
            if f.ndim != 2 or f.shape[1] != core.shape[i]:
                raise ValueError(f"factor {i} of shape {f.shape} does not match core extent {core.shape[i]}")
            if f.shape[1] > f.shape[0]:
                raise ValueError(f"factor {i} has more columns than rows")
            gram = f.T @ f
            if np.max(np.abs(gram - np.eye(f.shape[1]))) > _ORTHO_TOL:
                raise ValueError(f"factor {i} columns are not orthonormal")

    @property
    def ranks(self) -> tuple:
        return self.core.shape

    @property
    def shape(self) -> tuple:
        return tuple(f.shape[0] for f in self.factors)

    def to_dense(self) -> np.ndarray:
        return multi_mode_product(self.core, self.factors)


def hosvd(x: np.ndarray, ranks=None, tol: float | None = None) -> TuckerTensor:
    """Higher-order SVD.

    Per mode, the factor holds the leading left singular vectors of the
    unfolding; the core is the tensor contracted with the transposed factors.
    Exactly one of ``ranks`` (per-mode cap, clipped to the mode extents) and
    ``tol`` must be given; in tolerance mode each mode keeps the smallest
    rank whose discarded singular values satisfy
    ``sum(sigma^2) <= (tol*||x||)^2 / d``, so the total reconstruction error
    is at most ``tol*||x||``.  The squared reconstruction error never exceeds
    the sum of squared discarded singular values over all modes.
    """
    x = np.asarray(x, dtype=float)
    if (ranks is None) == (tol is None):
        raise ValueError("pass exactly one of ranks and tol")
    d = x.ndim
    if ranks is not None and np.isscalar(ranks):
        ranks = (int(ranks),) * d
    budget_sq = None if tol is None else (tol * np.linalg.norm(x)) ** 2 / d
    factors = []
    for i in range(d):
        u, s, _ = np.linalg.svd(unfold(x, i), full_matrices=False)
        if ranks is not None:
            r = min(int(ranks[i]), x.shape[i], u.shape[1])
        else:
            r = len(s)
            while r > 1 and np.sum(s[r - 1:] ** 2) <= budget_sq:
                r -= 1
        factors.append(u[:, :r])
    core = multi_mode_product(x, [f.T for f in factors])
    return TuckerTensor(core=core, factors=tuple(factors))


# ---------------------------------------------------------------------------
# tensor-train format
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TTTensor:
    """Tensor train with matrix boundary carriages.

    ``carriages[0]`` is ``n_1 x r_1``, the inner carriage ``j`` is
    ``r_j x n_{j+1} x r_{j+1}``, and the last is ``r_{d-1} x n_d``; adjacent
    rank extents must agree.
    """

    carriages: tuple

    def __post_init__(self):
        cars = tuple(np.asarray(c, dtype=float) for c in self.carriages)
        object.__setattr__(self, "carriages", cars)
        if len(cars) < 2:
            raise ValueError("a tensor train needs at least two carriages")
        if cars[0].ndim != 2 or cars[-1].ndim != 2:
            raise ValueError("boundary carriages must be matrices")
        r = cars[0].shape[1]
        for j, c in enumerate(cars[1:-1], start=1):
            if c.ndim != 3:
                raise ValueError(f"inner carriage {j} must be a 3-way array")
            if c.shape[0] != r:
                raise ValueError(f"rank mismatch between carriages {j - 1} and {j}")
            r = c.shape[2]
        if cars[-1].shape[0] != r:
            raise ValueError("rank mismatch at the last carriage")

    @property
    def ndim(self) -> int:
        return len(self.carriages)

    @property
    def shape(self) -> tuple:
        cars = self.carriages
        return (cars[0].shape[0],) + tuple(c.shape[1] for c in cars[1:-1]) + (cars[-1].shape[1],)

    @property
    def ranks(self) -> tuple:
        cars = self.carriages
        return (cars[0].shape[1],) + tuple(c.shape[2] for c in cars[1:-1])

    def to_dense(self) -> np.ndarray:
        # Row-major pairing throughout: the accumulated rows enumerate the
        # leading indices with the most recent one fastest, which is exactly
        # the C-order layout of the final array.
        m = self.carriages[0]
        for c in self.carriages[1:-1]:
            r0, n, r1 = c.shape
            m = m @ c.reshape(r0, n * r1)
            m = m.reshape(-1, r1)
        m = m @ self.carriages[-1]
        return m.reshape(self.shape)


def _as_cores(x: TTTensor):
    """View all carriages as order-3 arrays with unit boundary ranks."""
    cars = list(x.carriages)
    cars[0] = cars[0].reshape(1, *cars[0].shape)
    cars[-1] = cars[-1].reshape(*cars[-1].shape, 1)
    return cars


def _from_cores(cores) -> TTTensor:
    first = cores[0].reshape(cores[0].shape[1], cores[0].shape[2])
    last = cores[-1].reshape(cores[-1].shape[0], cores[-1].shape[1])
    return TTTensor(tuple([first] + list(cores[1:-1]) + [last]))


def tt_svd(x: np.ndarray, tol: float = 0.0, max_rank: int | None = None) -> TTTensor:
    """Convert a dense tensor to a train by a left-to-right SVD sweep.

    The sweep factorizes the sequential matricizations that group the first
    ``i`` indices against the rest.  With a positive ``tol`` each step drops
    trailing singular values of total norm at most ``tol*||x||/sqrt(d-1)``,
    which keeps the overall relative reconstruction error within
    ``tol`` (and a fortiori within ``tol*sqrt(d-1)``); ``max_rank`` caps every
    rank on top of that.
    """
    x = np.asarray(x, dtype=float)
    if tol < 0.0:
        raise ValueError("tol must be nonnegative")
    d = x.ndim
    if d < 2:
        raise ValueError("tensor trains need at least two modes")
    shape = x.shape
    delta = tol * np.linalg.norm(x) / math.sqrt(d - 1)
    cores = []
    m = x.reshape(shape[0], -1, order="F")
    r_prev = 1
    for j in range(d - 1):
        u, s, vt = np.linalg.svd(m, full_matrices=False)
        r = _truncation_rank(s, delta)
        if max_rank is not None:
            r = min(r, max_rank)
        # rows of u enumerate (previous rank, mode index) with the rank fastest
        cores.append(u[:, :r].reshape((r_prev, shape[j], r), order="F"))
        m = s[:r, None] * vt[:r]
        if j < d - 2:
            m = m.reshape(r * shape[j + 1], -1, order="F")
        r_prev = r
    cores.append(m.reshape(r_prev, shape[d - 1], 1))
    return _from_cores(cores)


def _truncation_rank(s: np.ndarray, delta: float) -> int:
    """Smallest kept rank whose discarded tail has norm at most delta."""
    if len(s) == 0:
        return 1
    if delta <= 0.0:
        # drop exact-zero noise only
        cutoff = len(s) * np.finfo(float).eps * s[0]
        r = int(np.sum(s > cutoff))
        return max(r, 1)
    tails = np.sqrt(np.cumsum(s[::-1] ** 2))[::-1]  # tails[r] = ||s[r:]||
    r = len(s)
    while r > 1 and tails[r - 1] <= delta:
        r -= 1
    return r


def tt_mode_product(x: TTTensor, mode: int, a: np.ndarray) -> TTTensor:
    """Apply a matrix along one mode; only that carriage changes, ranks do not."""
    a = np.asarray(a, dtype=float)
    d = x.ndim
    if not 0 <= mode < d:
        raise IndexError(f"mode {mode} out of range")
    if a.ndim != 2 or a.shape[1] != x.shape[mode]:
        raise ValueError(f"matrix of shape {a.shape} does not match mode {mode} of extent {x.shape[mode]}")
    cars = list(x.carriages)
    if mode == 0:
        cars[0] = a @ cars[0]
    elif mode == d - 1:
        cars[-1] = cars[-1] @ a.T
    else:
        cars[mode] = np.einsum("rns,mn->rms", cars[mode], a)
    return TTTensor(tuple(cars))


def tt_add(x: TTTensor, y: TTTensor) -> TTTensor:
    """Sum of two trains; each rank of the result is the sum of the inputs' ranks."""
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    cx, cy = x.carriages, y.carriages
    cars = [np.hstack([cx[0], cy[0]])]
    for a, b in zip(cx[1:-1], cy[1:-1]):
        ra, n, sa = a.shape
        rb, _, sb = b.shape
        block = np.zeros((ra + rb, n, sa + sb))
        block[:ra, :, :sa] = a
        block[ra:, :, sa:] = b
        cars.append(block)
    cars.append(np.vstack([cx[-1], cy[-1]]))
    return TTTensor(tuple(cars))


def tt_norm(x: TTTensor) -> float:
    """Frobenius norm via a left-to-right QR sweep (stable for any ranks)."""
    r = None
    for core in _as_cores(x):
        m = core if r is None else np.tensordot(r, core, axes=([1], [0]))
        q, r = np.linalg.qr(m.reshape(-1, m.shape[2]))
    return float(np.linalg.norm(r))


def tt_round(x: TTTensor, tol: float) -> TTTensor:
    """Recompress a train; ranks never increase.

    Right-to-left orthogonalization followed by a left-to-right SVD sweep
    with per-step threshold ``tol*||x||/sqrt(d-1)``, so the relative error of
    the rounded train stays within ``tol``.
    """
    if tol < 0.0:
        raise ValueError("tol must be nonnegative")
    cores = _as_cores(x)
    d = len(cores)
    # right-to-left: make cores 1..d-1 right-orthogonal
    for j in range(d - 1, 0, -1):
        r0, n, r1 = cores[j].shape
        m = cores[j].reshape(r0, n * r1)
        q, r = np.linalg.qr(m.T)
        rank = q.shape[1]
        cores[j] = q.T.reshape(rank, n, r1)
        cores[j - 1] = np.tensordot(cores[j - 1], r.T, axes=([2], [0]))
    norm = np.linalg.norm(cores[0])
    delta = tol * norm / math.sqrt(max(d - 1, 1))
    # left-to-right truncation sweep
    for j in range(d - 1):
        r0, n, r1 = cores[j].shape
        u, s, vt = np.linalg.svd(cores[j].reshape(r0 * n, r1), full_matrices=False)
        r = _truncation_rank(s, delta)
        cores[j] = u[:, :r].reshape(r0, n, r)
        m = s[:r, None] * vt[:r]
        cores[j + 1] = np.tensordot(m, cores[j + 1], axes=([1], [0]))
    return _from_cores(cores)


# ---------------------------------------------------------------------------
# text fixtures: dense blocks, formats as concatenated blocks
# ---------------------------------------------------------------------------

def _format_block(x: np.ndarray) -> str:
    x = np.asarray(x, dtype=float)
    lines = [str(x.ndim), " ".join(str(n) for n in x.shape)]
    lines += [f"{v:.17e}" for v in vec(x)]
    return "\n".join(lines) + "\n"


def write_dense(path, x: np.ndarray) -> None:
    """Write one dense block: a line with d, a line with the shape, then the values."""
    with open(path, "w") as fh:
        fh.write(_format_block(x))


def write_cp(path, x: CPTensor) -> None:
    with open(path, "w") as fh:
        for f in x.factors:
            fh.write(_format_block(f))


def write_tucker(path, x: TuckerTensor) -> None:
    with open(path, "w") as fh:
        fh.write(_format_block(x.core))
        for f in x.factors:
            fh.write(_format_block(f))


def write_tt(path, x: TTTensor) -> None:
    with open(path, "w") as fh:
        for c in x.carriages:
            fh.write(_format_block(c))


def read_blocks(path) -> list:
    """Read every dense block in a fixture file."""
    with open(path) as fh:
        tokens = fh.read().split()
    blocks = []
    pos = 0
    while pos < len(tokens):
        d = int(tokens[pos])
        shape = tuple(int(t) for t in tokens[pos + 1: pos + 1 + d])
        count = int(np.prod(shape))
        values = np.array([float(t) for t in tokens[pos + 1 + d: pos + 1 + d + count]])
        blocks.append(unvec(values, shape))
        pos += 1 + d + count
    return blocks


def read_dense(path) -> np.ndarray:
    (block,) = read_blocks(path)
    return block


def read_cp(path) -> CPTensor:
    return CPTensor(tuple(read_blocks(path)))


def read_tucker(path) -> TuckerTensor:
    blocks = read_blocks(path)
    return TuckerTensor(core=blocks[0], factors=tuple(blocks[1:]))


def read_tt(path) -> TTTensor:
    return TTTensor(tuple(read_blocks(path)))
