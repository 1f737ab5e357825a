"""Truncated tensor algebra T^N(R^d) and the free nilpotent group G^N(R^d).

An element is stored as ``depth + 1`` dense blocks; block ``k`` is a flat array
of length ``d**k`` in lexicographic multi-index order, so entry ``(i, j)`` of
block 2 sits at flat position ``i * d + j``.  For path lifts the level-2 entry
``(i, j)`` holds the iterated integral of ``x^i dx^j``.

The ``_*_blocks`` helpers operate on lists of arrays carrying arbitrary leading
batch axes (block ``k`` has shape ``batch + (d**k,)``); the classes below are
thin immutable wrappers around a single unbatched element.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, ShapeError

__all__ = [
    "TruncatedTensor",
    "GroupElement",
    "identity",
    "zeros",
    "basis",
    "from_vector",
    "mul",
    "inverse",
    "exp",
    "log",
    "dilate",
    "lie_bracket",
    "transpose2",
    "tensor_norm",
    "hnorm",
    "gdist",
    "is_geometric",
]


# ---------------------------------------------------------------------------
# batched block kernels


def _block_outer(a, b):
    out = a[..., :, None] * b[..., None, :]
    return out.reshape(out.shape[:-2] + (a.shape[-1] * b.shape[-1],))


def _mul_blocks(a, b):
    depth = len(a) - 1
    out = []
    for k in range(depth + 1):
        acc = _block_outer(a[0], b[k])
        for i in range(1, k + 1):
            acc = acc + _block_outer(a[i], b[k - i])
        out.append(acc)
    return out


def _scale_blocks(a, c):
    return [c * blk for blk in a]


def _add_blocks(a, b):
    return [x + y for x, y in zip(a, b)]


def _unit_blocks(dim, depth, batch=()):
    out = [np.ones(batch + (1,))]
    out += [np.zeros(batch + (dim**k,)) for k in range(1, depth + 1)]
    return out


def _nilpotent_part(g):
    return [np.zeros_like(g[0])] + list(g[1:])


def _inverse_blocks(g):
    # (1 + u)^-1 = sum_k (-u)^k, exact since u^{N+1} = 0
    depth = len(g) - 1
    dim = g[1].shape[-1] if depth else 1
    batch = g[0].shape[:-1]
    u = _nilpotent_part(g)
    neg_u = _scale_blocks(u, -1.0)
    result = _unit_blocks(dim, depth, batch)
    power = _unit_blocks(dim, depth, batch)
    for _ in range(depth):
        power = _mul_blocks(power, neg_u)
        result = _add_blocks(result, power)
    return result


def _exp_blocks(a):
    # Horner form 1 + a(1 + a/2(1 + a/3(...)))
    depth = len(a) - 1
    dim = a[1].shape[-1] if depth else 1
    batch = a[0].shape[:-1]
    result = _unit_blocks(dim, depth, batch)
    for k in range(depth, 0, -1):
        result = _mul_blocks(_scale_blocks(a, 1.0 / k), result)
        result[0] = result[0] + 1.0
    return result


def _log_blocks(g):
    depth = len(g) - 1
    u = _nilpotent_part(g)
    result = [np.zeros_like(blk) for blk in g]
    power = None
    for k in range(1, depth + 1):
        power = u if power is None else _mul_blocks(power, u)
        sign = 1.0 if k % 2 else -1.0
        result = _add_blocks(result, _scale_blocks(power, sign / k))
    return result


def _norms(blocks):
    return [np.sqrt(np.einsum("...i,...i->...", blk, blk)) for blk in blocks]


def _hnorm_blocks(g):
    norms = _norms(g)
    out = np.zeros(g[0].shape[:-1])
    for k in range(1, len(g)):
        out = np.maximum(out, (math.factorial(k) * norms[k]) ** (1.0 / k))
    return out


def _gdist_blocks(g, h):
    return _hnorm_blocks(_mul_blocks(_inverse_blocks(g), h))


# ---------------------------------------------------------------------------
# element types


class TruncatedTensor:
    """Element of the truncated tensor algebra over ``R^dim`` at level ``depth``."""

    __slots__ = ("dim", "depth", "blocks")

    def __init__(self, blocks, dim=None):
        blocks = [np.array(b, dtype=float).reshape(-1) for b in blocks]
        if not blocks:
            raise ShapeError("at least the scalar block is required")
        depth = len(blocks) - 1
        if dim is None:
            dim = blocks[1].size if depth else 1
        for k, blk in enumerate(blocks):
            if blk.size != dim**k:
                raise ShapeError(f"block {k} has length {blk.size}, expected {dim**k}")
            if not np.all(np.isfinite(blk)):
                raise DomainError(f"block {k} has non-finite coefficients")
            blk.flags.writeable = False
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "blocks", tuple(blocks))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, depth={self.depth}, blocks={[b.tolist() for b in self.blocks]})"

    def __getitem__(self, k):
        """Level-``k`` block reshaped to a ``(dim,) * k`` array."""
        return self.blocks[k].reshape((self.dim,) * k)

    def _check(self, other):
        if not isinstance(other, TruncatedTensor):
            raise TypeError(f"expected a tensor, got {type(other).__name__}")
        if (self.dim, self.depth) != (other.dim, other.depth):
            raise ShapeError(
                f"shape mismatch: (dim={self.dim}, depth={self.depth}) vs "
                f"(dim={other.dim}, depth={other.depth})"
            )

    def __add__(self, other):
        self._check(other)
        return TruncatedTensor(_add_blocks(self.blocks, other.blocks), self.dim)

    def __sub__(self, other):
        self._check(other)
        return TruncatedTensor([a - b for a, b in zip(self.blocks, other.blocks)], self.dim)

    def __neg__(self):
        return TruncatedTensor([-b for b in self.blocks], self.dim)

    def __mul__(self, c):
        if isinstance(c, TruncatedTensor):
            return NotImplemented
        return TruncatedTensor(_scale_blocks(self.blocks, float(c)), self.dim)

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._check(other)
        cls = GroupElement if isinstance(self, GroupElement) and isinstance(other, GroupElement) else TruncatedTensor
        return cls(_mul_blocks(self.blocks, other.blocks), self.dim)

    def allclose(self, other, atol=1e-10):
        self._check(other)
        return all(np.allclose(a, b, rtol=0.0, atol=atol) for a, b in zip(self.blocks, other.blocks))

    def max_abs_diff(self, other):
        self._check(other)
        return max(float(np.max(np.abs(a - b))) for a, b in zip(self.blocks, other.blocks))

    def as_tensor(self):
        return TruncatedTensor(self.blocks, self.dim)


class GroupElement(TruncatedTensor):
    """Element of G^N(R^d): a truncated tensor whose scalar block is exactly 1."""

    __slots__ = ()

    def __init__(self, blocks, dim=None):
        super().__init__(blocks, dim)
        if self.blocks[0][0] != 1.0:
            raise DomainError(f"group elements need scalar block 1, got {self.blocks[0][0]!r}")


def zeros(dim, depth=2):
    return TruncatedTensor([np.zeros(dim**k) for k in range(depth + 1)], dim)


def identity(dim, depth=2):
    return GroupElement(_unit_blocks(dim, depth), dim)


def from_vector(v, depth=2):
    """Embed a vector of ``R^d`` as a pure level-1 tensor."""
    v = np.asarray(v, dtype=float).reshape(-1)
    dim = v.size
    return TruncatedTensor([np.zeros(1), v] + [np.zeros(dim**k) for k in range(2, depth + 1)], dim)


def basis(i, dim, depth=2):
    """The level-1 basis vector ``e_i`` (zero-based ``i``)."""
    v = np.zeros(dim)
    v[i] = 1.0
    return from_vector(v, depth)


# ---------------------------------------------------------------------------
# operations


def mul(a, b):
    """Truncated tensor product ``a ⊗ b``."""
    return a @ b


def inverse(g):
    if not isinstance(g, GroupElement):
        raise DomainError("inverse is only defined on group elements")
    return GroupElement(_inverse_blocks(g.blocks), g.dim)


def exp(a):
    if a.blocks[0][0] != 0.0:
        raise DomainError("exp needs a tensor with zero scalar block")
    return GroupElement(_exp_blocks(a.blocks), a.dim)


def log(g):
    if g.blocks[0][0] != 1.0:
        raise DomainError("log needs a tensor with scalar block 1")
    return TruncatedTensor(_log_blocks(g.blocks), g.dim)


def dilate(lam, g):
    """Dilation ``δ_λ``: block ``k`` scaled by ``λ**k``."""
    lam = float(lam)
    blocks = [g.blocks[0]] + [lam**k * blk for k, blk in enumerate(g.blocks) if k > 0]
    return type(g)(blocks, g.dim)


def lie_bracket(a, b):
    return (a.as_tensor() @ b.as_tensor()) - (b.as_tensor() @ a.as_tensor())


def transpose2(z):
    """Swap the two tensor factors of a level-2 block.

    Accepts a ``(d, d)`` array or a flat ``(d*d,)`` array and returns the same
    layout.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim == 2:
        if z.shape[0] != z.shape[1]:
            raise ShapeError(f"expected a square block, got {z.shape}")
        return z.T.copy()
    d = math.isqrt(z.size)
    if d * d != z.size:
        raise ShapeError(f"flat block of length {z.size} is not a square")
    return z.reshape(d, d).T.reshape(-1).copy()


def tensor_norm(block):
    """Hilbert (Frobenius) norm of a single block."""
    block = np.asarray(block, dtype=float)
    return float(np.sqrt(np.sum(block * block)))


def hnorm(g):
    """Homogeneous norm ``max_k (k! |g_k|)^(1/k)``."""
    return float(_hnorm_blocks(g.blocks))


def gdist(g, h):
    """Left-invariant distance ``hnorm(g^-1 ⊗ h)``."""
    g._check(h)
    return hnorm(inverse(g) @ h)


def is_geometric(g, tol=1e-9):
    """Check ``Sym(g^2) = ½ (g^1)^{⊗2}`` for depth >= 2 elements."""
    if g.depth < 2:
        return True
    x1 = g[1]
    x2 = g[2]
    sym = 0.5 * (x2 + x2.T)
    scale = 1.0 + max(float(np.max(np.abs(b))) for b in g.blocks)
    return bool(np.max(np.abs(sym - 0.5 * np.outer(x1, x1))) <= tol * scale)
