"""Dense-tensor layers with hand-derived reverse-mode gradients.

All tensors are C-contiguous numpy arrays (row-major), float32 for training
and float64 for gradient-check builds (finite differences are unreliable at
32-bit). Shape conventions:

    images        (N, C, H, W)
    sequences     (B, T, D)
    dense inputs  (N, D) or (D,)

Every trainable layer keeps ``params`` and ``grads`` dicts with identical
keys and shapes. ``forward(x, train=...)`` stores the context needed by
``backward(dout)``; backward consumes that context, so calling it twice
without a fresh forward raises ``StateError``.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError, StateError


class Layer:
    """Base class: layers own ``params``/``grads`` dicts keyed by short names."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._ctx = None

    def forward(self, x, train=False):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def _take_ctx(self):
        if self._ctx is None:
            raise StateError(
                f"{type(self).__name__}.backward called without a pending forward pass"
            )
        ctx, self._ctx = self._ctx, None
        return ctx

    def zero_grads(self):
        for k, g in self.grads.items():
            g[...] = 0


def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - kernel) // stride + 1


def _im2col(xp: np.ndarray, kh: int, kw: int, stride: int, oh: int, ow: int) -> np.ndarray:
    """Unfold padded images (N,C,Hp,Wp) into patch rows (N*oh*ow, C*kh*kw)."""
    n, c = xp.shape[:2]
    cols = np.empty((n, oh, ow, c, kh, kw), dtype=xp.dtype)
    for m in range(kh):
        for v in range(kw):
            patch = xp[:, :, m:m + stride * oh:stride, v:v + stride * ow:stride]
            cols[..., m, v] = patch.transpose(0, 2, 3, 1)
    return cols.reshape(n * oh * ow, c * kh * kw)


def _col2im(dcols: np.ndarray, shape, kh, kw, stride, oh, ow) -> np.ndarray:
    """Scatter-add patch-row gradients back onto the padded image grid."""
    dxp = np.zeros(shape, dtype=dcols.dtype)
    n, c = shape[:2]
    dc = dcols.reshape(n, oh, ow, c, kh, kw)
    for m in range(kh):
        for v in range(kw):
            dxp[:, :, m:m + stride * oh:stride, v:v + stride * ow:stride] += \
                dc[..., m, v].transpose(0, 3, 1, 2)
    return dxp


def conv2d_reference(x: np.ndarray, weight: np.ndarray, bias: np.ndarray,
                     stride: int = 1, pad: int = 0) -> np.ndarray:
    """Naive quadruple-loop convolution; the correctness oracle for the fast path."""
    n, cin, h, w = x.shape
    cout, cin_w, kh, kw = weight.shape
    if cin != cin_w:
        raise ConfigurationError(f"input has {cin} channels, kernel expects {cin_w}")
    oh = conv_output_size(h, kh, stride, pad)
    ow = conv_output_size(w, kw, stride, pad)
    out = np.zeros((n, cout, oh, ow), dtype=x.dtype)
    for b in range(n):
        for k in range(cout):
            for i in range(oh):
                for j in range(ow):
                    acc = 0.0
                    for c in range(cin):
                        for m in range(kh):
                            for v in range(kw):
                                r = i * stride + m - pad
                                s = j * stride + v - pad
                                if 0 <= r < h and 0 <= s < w:
                                    acc += weight[k, c, m, v] * x[b, c, r, s]
                    out[b, k, i, j] = acc + bias[k]
    return out


class Conv2D(Layer):
    """2D convolution, im2col + GEMM fast path.

    Weight layout (out_channels, in_channels, kh, kw); out-of-bounds input
    under padding is treated as zero. Backward re-runs im2col on the cached
    padded input instead of holding the column matrix (the first layer's
    columns run to hundreds of MB at clip-batch sizes).
    """

    def __init__(self, in_channels, out_channels, kernel_size, stride=1, pad=0,
                 rng=None, dtype=np.float32):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kh = self.kw = int(kernel_size)
        self.stride = int(stride)
        self.pad = int(pad)
        rng = rng or np.random.default_rng(0)
        scale = np.sqrt(2.0 / (in_channels * self.kh * self.kw))  # He init
        w = rng.normal(0.0, scale, size=(out_channels, in_channels, self.kh, self.kw))
        self.params = {"W": w.astype(dtype), "b": np.zeros(out_channels, dtype=dtype)}
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def forward(self, x, train=False):
        n, c, h, w = x.shape
        if c != self.in_channels:
            raise ConfigurationError(
                f"conv expects {self.in_channels} input channels, got {c}")
        if h + 2 * self.pad < self.kh or w + 2 * self.pad < self.kw:
            raise ConfigurationError(
                f"kernel {self.kh}x{self.kw} larger than padded input {h}x{w} (pad={self.pad})")
        if self.pad > 0:
            xp = np.pad(x, ((0, 0), (0, 0), (self.pad, self.pad), (self.pad, self.pad)))
        else:
            xp = x
        oh = conv_output_size(h, self.kh, self.stride, self.pad)
        ow = conv_output_size(w, self.kw, self.stride, self.pad)
        cols = _im2col(xp, self.kh, self.kw, self.stride, oh, ow)
        wmat = self.params["W"].reshape(self.out_channels, -1)
        out = cols @ wmat.T
        out += self.params["b"]
        out = np.ascontiguousarray(
            out.reshape(n, oh, ow, self.out_channels).transpose(0, 3, 1, 2))
        self._ctx = (xp, x.shape, oh, ow)
        return out

    def backward(self, dout):
        xp, x_shape, oh, ow = self._take_ctx()
        n = x_shape[0]
        dmat = dout.transpose(0, 2, 3, 1).reshape(n * oh * ow, self.out_channels)
        cols = _im2col(xp, self.kh, self.kw, self.stride, oh, ow)
        wmat = self.params["W"].reshape(self.out_channels, -1)
        self.grads["W"] += (dmat.T @ cols).reshape(self.params["W"].shape)
        self.grads["b"] += dmat.sum(axis=0)
        dcols = dmat @ wmat
        dxp = _col2im(dcols, xp.shape, self.kh, self.kw, self.stride, oh, ow)
        if self.pad > 0:
            h, w = x_shape[2], x_shape[3]
            return np.ascontiguousarray(
                dxp[:, :, self.pad:self.pad + h, self.pad:self.pad + w])
        return dxp


class MaxPool2D(Layer):
    """Max pooling; argmax indices recorded for backward (first max in
    row-major window order wins on ties, keeping backward deterministic)."""

    def __init__(self, window=2, stride=2):
        super().__init__()
        self.window = int(window)
        self.stride = int(stride)

    def forward(self, x, train=False):
        n, c, h, w = x.shape
        k, s = self.window, self.stride
        if h < k or w < k:
            raise ConfigurationError(f"pool window {k} exceeds input {h}x{w}")
        oh = (h - k) // s + 1
        ow = (w - k) // s + 1
        stack = np.stack(
            [x[:, :, m:m + s * oh:s, v:v + s * ow:s]
             for m in range(k) for v in range(k)], axis=-1)
        idx = stack.argmax(axis=-1)
        out = np.take_along_axis(stack, idx[..., None], axis=-1)[..., 0]
        self._ctx = (x.shape, idx, oh, ow)
        return out

    def backward(self, dout):
        x_shape, idx, oh, ow = self._take_ctx()
        k, s = self.window, self.stride
        dstack = np.zeros(idx.shape + (k * k,), dtype=dout.dtype)
        np.put_along_axis(dstack, idx[..., None], dout[..., None], axis=-1)
        dx = np.zeros(x_shape, dtype=dout.dtype)
        p = 0
        for m in range(k):
            for v in range(k):
                dx[:, :, m:m + s * oh:s, v:v + s * ow:s] += dstack[..., p]
                p += 1
        return dx


class BatchNorm2D(Layer):
    """Per-channel batch normalization over (N, H, W).

    Train mode normalizes by batch statistics and updates running statistics
    with an exponential moving average (momentum 0.9); inference uses the
    running statistics and refuses to run before any training update.
    """

    def __init__(self, channels, momentum=0.9, eps=1e-5, dtype=np.float32):
        super().__init__()
        self.channels = channels
        self.momentum = momentum
        self.eps = eps
        self.params = {
            "gamma": np.ones(channels, dtype=dtype),
            "beta": np.zeros(channels, dtype=dtype),
        }
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self.initialized = False

    @property
    def buffers(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}

    def forward(self, x, train=False):
        if x.shape[1] != self.channels:
            raise ConfigurationError(
                f"batchnorm built for {self.channels} channels, got {x.shape[1]}")
        g = self.params["gamma"].reshape(1, -1, 1, 1)
        b = self.params["beta"].reshape(1, -1, 1, 1)
        if not train:
            if not self.initialized:
                raise StateError("batchnorm inference before any training update")
            inv = 1.0 / np.sqrt(self.running_var + self.eps)
            return (x - self.running_mean.reshape(1, -1, 1, 1)) * inv.reshape(1, -1, 1, 1) * g + b
        if x.shape[0] < 2:
            raise ConfigurationError("batchnorm train mode needs batch dimension >= 2")
        axes = (0, 2, 3)
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        invstd = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean.reshape(1, -1, 1, 1)) * invstd.reshape(1, -1, 1, 1)
        out = xhat * g + b
        m = self.momentum
        self.running_mean[...] = m * self.running_mean + (1 - m) * mean
        self.running_var[...] = m * self.running_var + (1 - m) * var
        self.initialized = True
        self._ctx = (xhat, invstd)
        return out

    def backward(self, dout):
        xhat, invstd = self._take_ctx()
        axes = (0, 2, 3)
        m = float(np.prod([dout.shape[i] for i in axes]))
        self.grads["gamma"] += (dout * xhat).sum(axis=axes)
        self.grads["beta"] += dout.sum(axis=axes)
        dxhat = dout * self.params["gamma"].reshape(1, -1, 1, 1)
        term = (dxhat.sum(axis=axes, keepdims=True)
                + xhat * (dxhat * xhat).sum(axis=axes, keepdims=True))
        return (dxhat - term / m) * invstd.reshape(1, -1, 1, 1)


class ReLU(Layer):
    def forward(self, x, train=False):
        out = np.maximum(x, 0)
        self._ctx = x > 0
        return out

    def backward(self, dout):
        mask = self._take_ctx()
        return dout * mask


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function; output strictly in (0, 1)."""
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    # saturation under/overflows to exactly 0 or 1; pin to the open interval
    tiny = np.finfo(out.dtype).smallest_subnormal
    return np.clip(out, tiny, np.nextafter(out.dtype.type(1.0), out.dtype.type(0.0)))


class Sigmoid(Layer):
    def forward(self, x, train=False):
        out = sigmoid(x)
        self._ctx = out
        return out

    def backward(self, dout):
        y = self._take_ctx()
        return dout * y * (1.0 - y)


class Dense(Layer):
    """Affine map x @ W + b; accepts (N, D) batches or a bare (D,) vector."""

    def __init__(self, in_dim, out_dim, rng=None, dtype=np.float32, w_scale=None):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        rng = rng or np.random.default_rng(0)
        scale = w_scale if w_scale is not None else np.sqrt(2.0 / in_dim)
        w = rng.normal(0.0, scale, size=(in_dim, out_dim))
        self.params = {"W": w.astype(dtype), "b": np.zeros(out_dim, dtype=dtype)}
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def forward(self, x, train=False):
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.in_dim:
            raise ConfigurationError(
                f"dense expects input width {self.in_dim}, got {x.shape[1]}")
        out = x @ self.params["W"] + self.params["b"]
        self._ctx = (x, squeeze)
        return out[0] if squeeze else out

    def backward(self, dout):
        x, squeeze = self._take_ctx()
        if squeeze:
            dout = dout[None, :]
        self.grads["W"] += x.T @ dout
        self.grads["b"] += dout.sum(axis=0)
        dx = dout @ self.params["W"].T
        return dx[0] if squeeze else dx


def lstm_step(x, h_prev, c_prev, wx, wh, b):
    """One LSTM cell step. Gate slices in ``b``/weight columns are ordered
    input, forget, candidate, output. Returns (h, c, gate cache)."""
    hsize = h_prev.shape[-1]
    z = x @ wx + h_prev @ wh + b
    i = sigmoid(z[..., :hsize])
    f = sigmoid(z[..., hsize:2 * hsize])
    g = np.tanh(z[..., 2 * hsize:3 * hsize])
    o = sigmoid(z[..., 3 * hsize:])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (i, f, g, o, tc)


class LSTM(Layer):
    """Single LSTM layer over (B, T, D) sequences, full BPTT.

    Weights: Wx (D, 4H), Wh (H, 4H), b (4H,), gates ordered i, f, g, o.
    The forget-gate bias starts at +1 so early training does not wash out
    the cell state.
    """

    def __init__(self, input_size, hidden_size, rng=None, dtype=np.float32):
        super().__init__()
        self.input_size = input_size
        self.hidden_size = hidden_size
        rng = rng or np.random.default_rng(0)
        k = 1.0 / np.sqrt(hidden_size)
        b = np.zeros(4 * hidden_size)
        b[hidden_size:2 * hidden_size] = 1.0
        self.params = {
            "Wx": rng.uniform(-k, k, size=(input_size, 4 * hidden_size)).astype(dtype),
            "Wh": rng.uniform(-k, k, size=(hidden_size, 4 * hidden_size)).astype(dtype),
            "b": b.astype(dtype),
        }
        self.grads = {k_: np.zeros_like(v) for k_, v in self.params.items()}

    def forward(self, x, train=False):
        if x.ndim != 3 or x.shape[2] != self.input_size:
            raise ConfigurationError(
                f"lstm expects (B, T, {self.input_size}), got {x.shape}")
        bsz, t, _ = x.shape
        hsize = self.hidden_size
        h = np.zeros((bsz, hsize), dtype=x.dtype)
        c = np.zeros((bsz, hsize), dtype=x.dtype)
        hseq = np.empty((bsz, t, hsize), dtype=x.dtype)
        steps = []
        for step in range(t):
            xt = x[:, step, :]
            h_prev, c_prev = h, c
            h, c, gates = lstm_step(xt, h_prev, c_prev,
                                    self.params["Wx"], self.params["Wh"], self.params["b"])
            hseq[:, step, :] = h
            steps.append((xt, h_prev, c_prev, gates))
        self._ctx = steps
        return hseq

    def backward(self, dhseq):
        steps = self._take_ctx()
        bsz, t, hsize = dhseq.shape
        wx, wh = self.params["Wx"], self.params["Wh"]
        dx = np.empty((bsz, t, self.input_size), dtype=dhseq.dtype)
        dh_next = np.zeros((bsz, hsize), dtype=dhseq.dtype)
        dc_next = np.zeros((bsz, hsize), dtype=dhseq.dtype)
        for step in reversed(range(t)):
            xt, h_prev, c_prev, (i, f, g, o, tc) = steps[step]
            dh = dhseq[:, step, :] + dh_next
            do = dh * tc
            dc = dc_next + dh * o * (1.0 - tc * tc)
            di, df, dg = dc * g, dc * c_prev, dc * i
            dc_next = dc * f
            dz = np.concatenate([
                di * i * (1 - i),
                df * f * (1 - f),
                dg * (1 - g * g),
                do * o * (1 - o),
            ], axis=1)
            self.grads["Wx"] += xt.T @ dz
            self.grads["Wh"] += h_prev.T @ dz
            self.grads["b"] += dz.sum(axis=0)
            dx[:, step, :] = dz @ wx.T
            dh_next = dz @ wh.T
        return dx


class Dropout(Layer):
    """Inverted dropout; identity at inference. ``rng`` is reseeded by the
    trainer so masks replay bit-identically for a fixed training seed."""

    def __init__(self, rate, rng=None):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ConfigurationError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.rng = rng or np.random.default_rng(0)

    def forward(self, x, train=False):
        if not train or self.rate == 0.0:
            self._ctx = (None,)
            return x
        mask = (self.rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        mask = mask.astype(x.dtype)
        self._ctx = (mask,)
        return x * mask

    def backward(self, dout):
        (mask,) = self._take_ctx()
        return dout if mask is None else dout * mask


class Flatten(Layer):
    def forward(self, x, train=False):
        self._ctx = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        shape = self._take_ctx()
        return dout.reshape(shape)
