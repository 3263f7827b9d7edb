"""Dense tensors with reverse-mode automatic differentiation.

The value type is a numpy-backed tensor whose primary layout is 4 axes
(batch, channel, height, width).  Lower ranks appear as views for matrix
and scalar work (attention affinities, reduced losses).  Every operation
records a vector-Jacobian closure so that ``backward()`` on a scalar loss
accumulates gradients into the leaves that require them.

Two storage precisions are supported: float64 (the default, used for all
gradient checking) and float32 (for speed benchmarks).  Computation runs
in the storage precision; the default configuration therefore accumulates
in double precision end to end.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import as_strided


class DimensionError(ValueError):
    """Shape or axis mismatch between operands."""


class ConfigurationError(ValueError):
    """Invalid layer/op hyperparameter (stride, padding, rate, ...)."""


class NumericError(ArithmeticError):
    """Non-finite values where finite ones are required."""


class DomainError(ValueError):
    """Input values outside the documented domain of an operation."""


class UsageError(RuntimeError):
    """API misuse, e.g. backward() on a non-scalar."""


DEFAULT_DTYPE = np.float64

_grad_enabled = True


class no_grad:
    """Context manager that disables graph recording (inference mode)."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    """A numpy array plus an optional gradient buffer and autodiff record."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad: bool = False, check_finite: bool = True):
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(DEFAULT_DTYPE)
        if check_finite and not np.isfinite(arr).all():
            raise NumericError("tensor construction received non-finite values")
        self.data: np.ndarray = arr
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad) and _grad_enabled
        self._parents: tuple = ()
        self._vjp: Optional[Callable] = None

    # -- introspection -------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    def is_leaf(self) -> bool:
        return self._vjp is None

    # -- graph ----------------------------------------------------------

    def detach(self) -> "Tensor":
        out = Tensor.__new__(Tensor)
        out.data = self.data
        out.grad = None
        out.requires_grad = False
        out._parents = ()
        out._vjp = None
        return out

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into every reachable leaf's ``grad``.

        Repeated calls keep accumulating until the leaf grads are zeroed.
        """
        if self.data.size != 1:
            raise UsageError(
                f"backward() needs a scalar, got shape {self.shape}"
            )
        # Iterative topological order over the recorded subgraph.
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in visited:
                    stack.append((p, False))
        # Intermediate grads live only in this map; leaves keep theirs.
        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._vjp is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            parent_grads = node._vjp(g)
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                pid = id(parent)
                if pid in grads:
                    grads[pid] = grads[pid] + pg
                else:
                    grads[pid] = pg

    # -- operator sugar ---------------------------------------------------

    def __add__(self, other):
        return add(self, _coerce(other, self.dtype))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _coerce(other, self.dtype))

    def __rsub__(self, other):
        return sub(_coerce(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, _coerce(other, self.dtype))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, _coerce(other, self.dtype))

    def __rtruediv__(self, other):
        return div(_coerce(other, self.dtype), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, k):
        return pow_scalar(self, k)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None, keepdims: bool = False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])


def _coerce(x, dtype) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype), check_finite=True)


def record_op(
    data: np.ndarray,
    parents: Sequence[Tensor],
    vjp: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]],
) -> Tensor:
    """Wrap an op result, recording the vector-Jacobian product closure.

    Recording is skipped entirely when gradients are globally disabled or
    no parent requires them, so inference builds no graph and holds no
    references to intermediates.
    """
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out._parents = ()
    out._vjp = None
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    else:
        out.requires_grad = False
    return out


def _result_dtype(*tensors: Tensor):
    return np.result_type(*(t.data.dtype for t in tensors))


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise arithmetic
# ---------------------------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    data = a.data + b.data
    return record_op(data, (a, b), lambda g: (
        _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    data = a.data - b.data
    return record_op(data, (a, b), lambda g: (
        _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    data = a.data * b.data
    return record_op(data, (a, b), lambda g: (
        _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def div(a: Tensor, b: Tensor) -> Tensor:
    data = a.data / b.data
    return record_op(data, (a, b), lambda g: (
        _unbroadcast(g / b.data, a.shape),
        _unbroadcast(-g * a.data / (b.data * b.data), b.shape)))


def neg(a: Tensor) -> Tensor:
    return record_op(-a.data, (a,), lambda g: (-g,))


def tabs(a: Tensor) -> Tensor:
    sign = np.sign(a.data)
    return record_op(np.abs(a.data), (a,), lambda g: (g * sign,))


def pow_scalar(a: Tensor, k: float) -> Tensor:
    data = a.data ** k
    return record_op(data, (a,), lambda g: (g * k * a.data ** (k - 1),))


def tlog(a: Tensor) -> Tensor:
    if np.any(a.data <= 0.0):
        raise NumericError("log of non-positive value")
    return record_op(np.log(a.data), (a,), lambda g: (g / a.data,))


def tsqrt(a: Tensor) -> Tensor:
    if np.any(a.data < 0.0):
        raise NumericError("sqrt of negative value")
    root = np.sqrt(a.data)
    return record_op(root, (a,), lambda g: (g / (2.0 * root),))


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    data = np.clip(a.data, lo, hi)
    inside = ((a.data >= lo) & (a.data <= hi)).astype(a.data.dtype)
    return record_op(data, (a,), lambda g: (g * inside,))


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    data = a.data.sum(axis=axis, keepdims=keepdims)
    data = np.asarray(data, dtype=a.data.dtype)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).astype(a.data.dtype, copy=True),)
        gg = g
        if not keepdims:
            axes = axis if isinstance(axis, tuple) else (axis,)
            for ax in sorted(x % a.ndim for x in axes):
                gg = np.expand_dims(gg, ax)
        return (np.broadcast_to(gg, a.shape).astype(a.data.dtype, copy=True),)

    return record_op(data, (a,), vjp)


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = a.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = 1
        for ax in axes:
            count *= a.shape[ax % a.ndim]
    s = tsum(a, axis=axis, keepdims=keepdims)
    return mul(s, Tensor(np.asarray(1.0 / count, dtype=a.data.dtype)))


# ---------------------------------------------------------------------------
# shape manipulation
# ---------------------------------------------------------------------------


def reshape(a: Tensor, shape) -> Tensor:
    old = a.shape
    data = a.data.reshape(shape)
    return record_op(data, (a,), lambda g: (g.reshape(old),))


def transpose_last2(a: Tensor) -> Tensor:
    data = np.swapaxes(a.data, -1, -2)
    return record_op(data, (a,), lambda g: (np.swapaxes(g, -1, -2),))


def concat_batch(tensors: Sequence[Tensor]) -> Tensor:
    """Concatenate 4-axis tensors along the batch axis."""
    for t in tensors:
        if t.ndim != 4:
            raise DimensionError("concat_batch expects 4-axis tensors")
    base = tensors[0].shape
    for t in tensors[1:]:
        if t.shape[1:] != base[1:]:
            raise DimensionError(
                f"concat_batch extents differ: {t.shape} vs {base}")
    data = np.concatenate([t.data for t in tensors], axis=0)
    counts = [t.shape[0] for t in tensors]

    def vjp(g):
        outs = []
        start = 0
        for c in counts:
            outs.append(g[start:start + c])
            start += c
        return tuple(outs)

    return record_op(data, tuple(tensors), vjp)


def concat_channels(tensors: Sequence[Tensor]) -> Tensor:
    """Concatenate 4-axis tensors along the channel axis."""
    for t in tensors:
        if t.ndim != 4:
            raise DimensionError("concat_channels expects 4-axis tensors")
    base = tensors[0].shape
    for t in tensors[1:]:
        if t.shape[0] != base[0] or t.shape[2:] != base[2:]:
            raise DimensionError(
                f"concat_channels extents differ: {t.shape} vs {base}")
    data = np.concatenate([t.data for t in tensors], axis=1)
    widths = [t.shape[1] for t in tensors]

    def vjp(g):
        outs = []
        start = 0
        for w in widths:
            outs.append(g[:, start:start + w])
            start += w
        return tuple(outs)

    return record_op(data, tuple(tensors), vjp)


# ---------------------------------------------------------------------------
# matrix products
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """(r,k)@(k,c) product, or batched (n,r,k)@(n,k,c)."""
    if a.ndim not in (2, 3) or b.ndim not in (2, 3) or a.ndim != b.ndim:
        raise DimensionError(
            f"matmul expects rank-2 or matching rank-3 operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(
            f"matmul inner extents disagree: {a.shape[-1]} vs {b.shape[-2]}")
    if a.ndim == 3 and a.shape[0] != b.shape[0]:
        raise DimensionError(
            f"matmul batch extents disagree: {a.shape[0]} vs {b.shape[0]}")
    data = np.matmul(a.data, b.data)

    def vjp(g):
        da = np.matmul(g, np.swapaxes(b.data, -1, -2))
        db = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return (da, db)

    return record_op(data, (a, b), vjp)


def softmax_rows(a: Tensor) -> Tensor:
    """Row-stochastic softmax over the last axis, max-shift stabilized."""
    m = a.data.max(axis=-1, keepdims=True)
    # NaN or +Inf anywhere in a row surfaces in that row's max.
    if np.isnan(m).any():
        raise NumericError("softmax input contains NaN")
    if np.isinf(m).any():
        raise NumericError("softmax input contains Inf")
    y = a.data - m
    np.exp(y, out=y)
    y /= y.sum(axis=-1, keepdims=True)

    def vjp(g):
        dot = np.einsum("...i,...i->...", g, y)[..., None]
        out = g - dot
        out *= y
        return (out,)

    return record_op(y, (a,), vjp)


# ---------------------------------------------------------------------------
# pointwise nonlinearities
# ---------------------------------------------------------------------------


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    data = np.where(mask, a.data, 0.0).astype(a.data.dtype)
    return record_op(data, (a,), lambda g: (np.where(mask, g, 0.0).astype(g.dtype),))


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    mask = a.data > 0
    data = np.where(mask, a.data, slope * a.data).astype(a.data.dtype)
    return record_op(data, (a,), lambda g: (np.where(mask, g, slope * g).astype(g.dtype),))


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    # exp(-|x|) never overflows; both branches share it.
    t = np.exp(-np.abs(x))
    denom = 1.0 + t
    y = np.where(x >= 0, 1.0 / denom, t / denom)
    return record_op(y, (a,), lambda g: (g * y * (1.0 - y),))


def dropout(a: Tensor, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    if not (0.0 <= rate < 1.0):
        raise ConfigurationError(f"dropout rate must be in [0,1), got {rate}")
    if not training or rate == 0.0:
        return a
    keep = (rng.random(a.shape) >= rate)
    scale = 1.0 / (1.0 - rate)
    mask = keep.astype(a.data.dtype) * a.data.dtype.type(scale)
    return record_op(a.data * mask, (a,), lambda g: (g * mask,))


# ---------------------------------------------------------------------------
# spatial kernels
# ---------------------------------------------------------------------------


def _require_4d(t: Tensor, name: str) -> None:
    if t.ndim != 4:
        raise DimensionError(f"{name} must have 4 axes, got {t.ndim}")


def _conv_windows(x_pad: np.ndarray, kh: int, kw: int, stride: int,
                  oh: int, ow: int) -> np.ndarray:
    """Strided view (n, c, oh, ow, kh, kw) over a padded input."""
    n, c = x_pad.shape[:2]
    sn, sc, sh, sw = x_pad.strides
    return as_strided(
        x_pad,
        (n, c, oh, ow, kh, kw),
        (sn, sc, sh * stride, sw * stride, sh, sw),
        writeable=False,
    )


def conv2d(x: Tensor, weight: Tensor, bias: Tensor,
           stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation of (n,c,h,w) with (out_c,in_c,kh,kw) weights."""
    _require_4d(x, "conv2d input")
    _require_4d(weight, "conv2d weight")
    if stride < 1:
        raise ConfigurationError(f"stride must be positive, got {stride}")
    if padding < 0:
        raise ConfigurationError(f"padding must be nonnegative, got {padding}")
    n, cin, h, w = x.shape
    oc, wcin, kh, kw = weight.shape
    if cin != wcin:
        raise DimensionError(
            f"channel axis mismatch: input has {cin} channels, weight expects {wcin}")
    if bias.shape != (oc,):
        raise DimensionError(
            f"bias extent {bias.shape} does not match {oc} output channels")
    span_h, span_w = h + 2 * padding - kh, w + 2 * padding - kw
    if span_h < 0 or span_w < 0 or span_h % stride or span_w % stride:
        raise ConfigurationError(
            f"conv2d output extent is not a positive integer for "
            f"h={h}, w={w}, k=({kh},{kw}), stride={stride}, padding={padding}")
    oh, ow = span_h // stride + 1, span_w // stride + 1

    if padding:
        x_pad = np.pad(x.data, ((0, 0), (0, 0), (padding,) * 2, (padding,) * 2))
    else:
        x_pad = x.data
    win = _conv_windows(x_pad, kh, kw, stride, oh, ow)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, cin * kh * kw)
    wmat = weight.data.reshape(oc, cin * kh * kw)
    out = cols @ wmat.T
    out = out.reshape(n, oh, ow, oc).transpose(0, 3, 1, 2)
    out = out + bias.data[None, :, None, None]

    def vjp(g):
        gmat = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(n * oh * ow, oc)
        dw = (gmat.T @ cols).reshape(oc, cin, kh, kw)
        db = g.sum(axis=(0, 2, 3))
        dcols = (gmat @ wmat).reshape(n, oh, ow, cin, kh, kw).transpose(0, 3, 1, 2, 4, 5)
        dxp = np.zeros_like(x_pad)
        for a in range(kh):
            for b in range(kw):
                dxp[:, :, a:a + stride * oh:stride,
                    b:b + stride * ow:stride] += dcols[:, :, :, :, a, b]
        dx = dxp[:, :, padding:padding + h, padding:padding + w] if padding else dxp
        return (dx, dw, db)

    return record_op(np.ascontiguousarray(out), (x, weight, bias), vjp)


def conv_transpose2d(x: Tensor, weight: Tensor, bias: Tensor,
                     stride: int = 1, padding: int = 0,
                     output_padding: int = 0) -> Tensor:
    """Adjoint of conv2d; weight laid out (in_c, out_c, kh, kw)."""
    _require_4d(x, "conv_transpose2d input")
    _require_4d(weight, "conv_transpose2d weight")
    if stride < 1:
        raise ConfigurationError(f"stride must be positive, got {stride}")
    if padding < 0 or output_padding < 0:
        raise ConfigurationError("padding values must be nonnegative")
    if output_padding >= stride and output_padding != 0:
        raise ConfigurationError(
            f"output_padding {output_padding} must be smaller than stride {stride}")
    n, cin, h, w = x.shape
    wcin, oc, kh, kw = weight.shape
    if cin != wcin:
        raise DimensionError(
            f"channel axis mismatch: input has {cin} channels, weight expects {wcin}")
    if bias.shape != (oc,):
        raise DimensionError(
            f"bias extent {bias.shape} does not match {oc} output channels")
    oh = (h - 1) * stride - 2 * padding + kh + output_padding
    ow = (w - 1) * stride - 2 * padding + kw + output_padding
    if oh <= 0 or ow <= 0:
        raise ConfigurationError(
            f"conv_transpose2d output extent is not positive ({oh}x{ow})")
    full_h = (h - 1) * stride + kh + output_padding
    full_w = (w - 1) * stride + kw + output_padding

    wmat = weight.data.reshape(cin, oc * kh * kw)
    xmat = np.ascontiguousarray(x.data.transpose(0, 2, 3, 1)).reshape(n * h * w, cin)
    spread = (xmat @ wmat).reshape(n, h, w, oc, kh, kw)
    y_full = np.zeros((n, oc, full_h, full_w), dtype=x.data.dtype)
    for a in range(kh):
        for b in range(kw):
            y_full[:, :, a:a + stride * h:stride,
                   b:b + stride * w:stride] += spread[:, :, :, :, a, b].transpose(0, 3, 1, 2)
    out = y_full[:, :, padding:padding + oh, padding:padding + ow]
    out = out + bias.data[None, :, None, None]

    def vjp(g):
        g_full = np.zeros((n, oc, full_h, full_w), dtype=g.dtype)
        g_full[:, :, padding:padding + oh, padding:padding + ow] = g
        win = _conv_windows(g_full, kh, kw, stride, h, w)
        gcols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * h * w, oc * kh * kw)
        dx = (gcols @ wmat.T).reshape(n, h, w, cin).transpose(0, 3, 1, 2)
        dw = (xmat.T @ gcols).reshape(cin, oc, kh, kw)
        db = g.sum(axis=(0, 2, 3))
        return (np.ascontiguousarray(dx), dw, db)

    return record_op(np.ascontiguousarray(out), (x, weight, bias), vjp)


def maxpool2(x: Tensor) -> Tensor:
    """2x2 non-overlapping max; gradient routes to the first max per window."""
    _require_4d(x, "maxpool2 input")
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise DimensionError(f"maxpool2 needs even spatial extents, got {h}x{w}")
    h2, w2 = h // 2, w // 2
    # Window entries in scan order (0,0), (0,1), (1,0), (1,1): argmax is
    # first-occurrence, which implements the first-wins tie rule.
    win = x.data.reshape(n, c, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h2, w2, 4)
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]

    def vjp(g):
        dwin = np.zeros((n, c, h2, w2, 4), dtype=g.dtype)
        np.put_along_axis(dwin, idx[..., None], g[..., None], axis=-1)
        return (dwin.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w),)

    return record_op(np.ascontiguousarray(out), (x,), vjp)


def _interp_matrix(out_len: int, in_len: int, dtype) -> np.ndarray:
    """Row-stochastic 1-D bilinear weights, align-corners-false."""
    m = np.zeros((out_len, in_len), dtype=dtype)
    scale = in_len / out_len
    for i in range(out_len):
        src = (i + 0.5) * scale - 0.5
        src = min(max(src, 0.0), in_len - 1.0)
        i0 = int(np.floor(src))
        i1 = min(i0 + 1, in_len - 1)
        t = src - i0
        m[i, i0] += 1.0 - t
        m[i, i1] += t
    return m


def bilinear_resize(x: Tensor, target_h: int, target_w: int) -> Tensor:
    """Separable bilinear resampling to (target_h, target_w)."""
    _require_4d(x, "bilinear input")
    if target_h <= 0 or target_w <= 0:
        raise DimensionError(
            f"bilinear target extents must be positive, got {target_h}x{target_w}")
    n, c, h, w = x.shape
    if (target_h, target_w) == (h, w):
        return record_op(x.data, (x,), lambda g: (g,))
    rh = _interp_matrix(target_h, h, x.data.dtype)
    rw = _interp_matrix(target_w, w, x.data.dtype)
    out = rh @ x.data @ rw.T  # broadcasts over (n, c)

    def vjp(g):
        return (rh.T @ g @ rw,)

    return record_op(out, (x,), vjp)


def bilinear_upsample(x: Tensor, target_h: int, target_w: int) -> Tensor:
    """bilinear_resize restricted to magnification (target >= input)."""
    _require_4d(x, "bilinear_upsample input")
    if target_h <= 0 or target_w <= 0:
        raise DimensionError(
            f"bilinear target extents must be positive, got {target_h}x{target_w}")
    h, w = x.shape[2], x.shape[3]
    if target_h < h or target_w < w:
        raise DimensionError(
            f"bilinear_upsample target {target_h}x{target_w} is smaller than input {h}x{w}")
    return bilinear_resize(x, target_h, target_w)
