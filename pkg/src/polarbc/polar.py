"""Polar transform and the successive-cancellation probability recursion.

``G_n`` is the m-fold Kronecker power of ``[[1, 0], [1, 1]]`` with no bit
reversal, so ``x G_n = ((a ^ b) G_{n/2}, b G_{n/2})`` for the halves ``a, b``
of ``x``.  The SC recursion follows that split: the first half of ``u`` is the
polar transform of ``a ^ b`` (combine with the minus rule) and, once it is
decided and re-encoded to ``c = a ^ b``, the second half is the transform of
``b`` (combine with the plus rule).

The kernel :func:`sc_run` is batched over trials and over "contexts": the same
decided bits drive several likelihood trees at once, for instance one that
sees the channel output and one that does not.  Every position is either
given (its value is supplied) or decided by argmax of one chosen context,
with ties broken to 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .probability import PairwiseJoint


def _check_length(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise ValueError(f"block length {n} is not a power of two")
    return n.bit_length() - 1


@dataclass(frozen=True)
class PolarTransform:
    m: int

    @property
    def n(self) -> int:
        return 1 << self.m

    @classmethod
    def of_length(cls, n: int) -> "PolarTransform":
        return cls(_check_length(n))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return polar_transform(x)


def polar_transform(x: np.ndarray) -> np.ndarray:
    """Return ``x G_n`` over GF(2) along the last axis (an involution)."""
    x = np.array(x, dtype=np.uint8)
    n = x.shape[-1]
    _check_length(n)
    lead = x.shape[:-1]
    h = n // 2
    while h >= 1:
        v = x.reshape(lead + (-1, 2, h))
        v[..., 0, :] ^= v[..., 1, :]
        h //= 2
    return x


def generator_matrix(n: int) -> np.ndarray:
    """Explicit ``G_n`` (for tests and small n only)."""
    m = _check_length(n)
    g = np.ones((1, 1), dtype=np.uint8)
    for _ in range(m):
        g = np.kron(np.array([[1, 0], [1, 1]], dtype=np.uint8), g)
    return g


# --------------------------------------------------------------------------
# the SC kernel

GIVEN = -1


def _normalize(p: np.ndarray) -> np.ndarray:
    s = p[..., 0] + p[..., 1]
    np.divide(p, s[..., None], out=p, where=s[..., None] > 0)
    return p


class _SCPass:
    def __init__(self, ctx: np.ndarray, given: np.ndarray | None, capture: bool,
                 shape: tuple[int, ...], threshold: np.ndarray | None = None):
        self.ctx = ctx
        self.given = given
        self.threshold = threshold
        b, c, n = shape
        self.u = np.zeros((b, n), dtype=np.uint8)
        self.post = np.empty((b, c, n, 2)) if capture else None
        # decided[k] = number of decided positions before k; lets _node skip
        # subtrees whose positions are all given
        self.decided = np.concatenate([[0], np.cumsum(ctx != GIVEN)])

    def run(self, leaves: np.ndarray) -> np.ndarray:
        return self._node(leaves, 0)

    def _node(self, p: np.ndarray, off: int) -> np.ndarray:
        m = p.shape[2]
        if self.post is None and self.decided[off + m] == self.decided[off]:
            bits = self.given[:, off:off + m]
            self.u[:, off:off + m] = bits
            return polar_transform(bits)
        if m == 1:
            q = p[:, :, 0, :]
            if self.post is not None:
                self.post[:, :, off, :] = q
            c = self.ctx[off]
            if c == GIVEN:
                bit = self.given[:, off]
            elif self.threshold is None:
                bit = (q[:, c, 1] > q[:, c, 0]).astype(np.uint8)
            else:
                t = self.threshold[:, off]
                bit = (q[:, c, 1] > t * (q[:, c, 0] + q[:, c, 1])).astype(np.uint8)
            self.u[:, off] = bit
            return bit[:, None]
        h = m // 2
        a, b = p[:, :, :h], p[:, :, h:]
        minus = np.empty_like(a)
        minus[..., 0] = a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]
        minus[..., 1] = a[..., 1] * b[..., 0] + a[..., 0] * b[..., 1]
        c = self._node(_normalize(minus), off)
        flip = c[:, None, :].astype(bool)
        plus = np.empty_like(a)
        plus[..., 0] = np.where(flip, a[..., 1], a[..., 0]) * b[..., 0]
        plus[..., 1] = np.where(flip, a[..., 0], a[..., 1]) * b[..., 1]
        d = self._node(_normalize(plus), off + h)
        return np.concatenate([c ^ d, d], axis=1)


def sc_run(leaves: np.ndarray, ctx: np.ndarray, given: np.ndarray | None = None,
           capture: bool = False, threshold: np.ndarray | None = None):
    """One successive-cancellation pass over a batch of blocks.

    Parameters
    ----------
    leaves : array (B, C, n, 2)
        Per-position joint likelihoods P(x_j = 0/1, side_j) for C contexts.
    ctx : int array (n,)
        For each position, the context index whose posterior is argmaxed, or
        ``GIVEN`` (-1) to take the value from ``given``.
    given : uint8 array (B, n), optional
        Values of the given positions.
    capture : bool
        Also return the posterior pair of every position in every context.
    threshold : float array (B, n), optional
        Decide 1 when P(1) exceeds ``threshold`` instead of plain argmax; a
        uniform threshold gives randomized rounding.

    Returns
    -------
    u, x : uint8 arrays (B, n) with ``x = u G_n``; plus the posteriors
    (B, C, n, 2) when ``capture`` is set.
    """
    leaves = np.asarray(leaves, dtype=np.float64)
    if leaves.ndim != 4 or leaves.shape[-1] != 2:
        raise ValueError("leaves must have shape (batch, contexts, n, 2)")
    b, c, n, _ = leaves.shape
    _check_length(n)
    ctx = np.asarray(ctx, dtype=np.int64)
    if ctx.shape != (n,) or ctx.max(initial=GIVEN) >= c or ctx.min(initial=0) < GIVEN:
        raise ValueError("ctx must assign a context or GIVEN to each position")
    if np.any(ctx == GIVEN):
        if given is None:
            raise ValueError("given values required")
        given = np.asarray(given, dtype=np.uint8)
        if given.shape != (b, n):
            raise ValueError("given must have shape (batch, n)")
    if threshold is not None and np.shape(threshold) != (b, n):
        raise ValueError("threshold must have shape (batch, n)")
    sc = _SCPass(ctx, given, capture, (b, c, n), threshold)
    x = sc.run(_normalize(leaves.copy()))
    if capture:
        return sc.u, x, sc.post
    return sc.u, x


def sc_genie_posteriors(leaves: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Posteriors of every position when all of ``u`` is known (genie-aided SC).

    Same values as ``sc_run(leaves[:, None], all GIVEN, u, capture=True)``,
    computed level by level instead of recursively: with every bit known,
    the re-encoded left halves needed by the plus rule are available up
    front.  ``leaves`` is (B, n, 2); returns (B, n, 2).
    """
    p = _normalize(np.array(leaves, dtype=np.float64))
    b, n, _ = p.shape
    _check_length(n)
    u = np.asarray(u, dtype=np.uint8)
    # separate planes for P(0) and P(1), shape (B, nodes, m)
    p0, p1 = p[..., 0].reshape(b, 1, n), p[..., 1].reshape(b, 1, n)
    nodes, m = 1, n
    while m > 1:
        h = m // 2
        a0, a1, c0, c1 = p0[..., :h], p1[..., :h], p0[..., h:], p1[..., h:]
        # minus rule: sums to one already when both inputs do
        m0 = a0 * c0 + a1 * c1
        m1 = a1 * c0 + a0 * c1
        flip = polar_transform(u.reshape(b, 2 * nodes, h)[:, 0::2]).astype(bool)
        q0 = np.where(flip, a1, a0) * c0
        q1 = np.where(flip, a0, a1) * c1
        s = q0 + q1
        np.divide(q0, s, out=q0, where=s > 0)
        np.divide(q1, s, out=q1, where=s > 0)
        p0 = np.stack([m0, q0], axis=2).reshape(b, 2 * nodes, h)
        p1 = np.stack([m1, q1], axis=2).reshape(b, 2 * nodes, h)
        nodes, m = 2 * nodes, h
    return np.stack([p0[..., 0], p1[..., 0]], axis=-1)


# --------------------------------------------------------------------------
# single-query interface


@dataclass(frozen=True, eq=False)
class SCContext:
    pairwise: PairwiseJoint
    side_sequence: np.ndarray | None
    decided_prefix: np.ndarray

    def __post_init__(self):
        prefix = np.asarray(self.decided_prefix, dtype=np.uint8).ravel()
        object.__setattr__(self, "decided_prefix", prefix)
        if self.side_sequence is not None:
            side = np.asarray(self.side_sequence, dtype=np.int64).ravel()
            if side.min(initial=0) < 0 or side.max(initial=0) >= self.pairwise.side_size:
                raise ValueError("side letter outside the side alphabet")
            object.__setattr__(self, "side_sequence", side)


def sc_posterior(ctx: SCContext, i: int, n: int | None = None) -> tuple[float, float]:
    """Exact P(U^i = 0/1 | u^{0:i}, side) for 0-based index ``i``.

    ``n`` is taken from the side sequence; pass it explicitly when the side
    alphabet is empty.
    """
    side = ctx.side_sequence
    if side is not None:
        if n is not None and n != side.size:
            raise ValueError("n does not match the side sequence")
        n = side.size
    elif n is None:
        raise ValueError("n is required without a side sequence")
    _check_length(n)
    if not 0 <= i < n:
        raise IndexError(f"index {i} outside [0, {n})")
    if ctx.decided_prefix.size != i:
        raise ValueError(f"decided prefix has length {ctx.decided_prefix.size}, expected {i}")
    leaves = ctx.pairwise.leaves(side, n)[None, None]
    rule = np.full(n, GIVEN)
    rule[i:] = 0
    given = np.zeros((1, n), dtype=np.uint8)
    given[0, :i] = ctx.decided_prefix
    _, _, post = sc_run(leaves, rule, given, capture=True)
    p = post[0, 0, i]
    if p.sum() == 0:
        raise ValueError("zero likelihood: prefix and side sequence are impossible under the model")
    return float(p[0]), float(p[1])
